//! Two-stage stochastic integer programs.
//!
//! ```text
//! min Σ_i f_i(x, y_i)   s.t.  T x + W y_i = b_i,  0 <= x <= ux,  0 <= y_i <= uy_i
//! ```
//!
//! with `f_i(x, y) = Σ_j f_ij(c_j·x + d_j·y)` over rows `(c_j, d_j)` shared by
//! all scenarios. A vector `(v, w_1, ..., w_N)` lies in the kernel of the
//! constraint matrix iff `T v + W w_i = 0` for every `i`, and the Graver
//! elements of that matrix are assembled from finitely many first-stage parts
//! `v` and second-stage parts `w`. Augmentation therefore fixes `v` and picks
//! the best `w_i` for every scenario independently.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::augment::{sebo_bound, AugmentError, AugmentTrace, FeasibleBox, StepKind, TraceStep};
use crate::graver::{composite_matrix, graver, is_coordinate_selection};
use crate::linalg::{check_dim, solve_integer, IntMat, IntVec, LinalgError, Rat};
use crate::objective::{CompositeObjective, Objective, ObjectiveError, UnivariateConvex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwoStageError {
    #[error("building blocks did not stabilize up to N = {0}")]
    NotStabilized(usize),
    #[error("scenario objectives must share the rows (c_j, d_j)")]
    RowMismatch,
    #[error("at least one scenario is required")]
    NoScenarios,
    #[error("no feasible point")]
    Infeasible,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

/// The matrix with `T` repeated down the first column block and `W` on the
/// diagonal of the remaining ones.
pub fn build_twostage_matrix(t: &IntMat, w: &IntMat, n_scen: usize) -> Result<IntMat, LinalgError> {
    check_dim(t.rows(), w.rows())?;
    let (d, m, n) = (t.rows(), t.cols(), w.cols());
    let mut mat = IntMat::zeros(n_scen * d, m + n_scen * n);
    for k in 0..n_scen {
        mat.set_block(k * d, 0, t);
        mat.set_block(k * d, m + k * n, w);
    }
    Ok(mat)
}

/// First-stage parts and, for each, the second-stage parts that combine
/// with it. Second-stage parts are stored in problem coordinates (`n`
/// entries), with objective slack entries dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BuildingBlocks {
    pub first_stage: BTreeSet<IntVec>,
    pub second_stage: BTreeMap<IntVec, BTreeSet<IntVec>>,
}

impl BuildingBlocks {
    pub fn len(&self) -> usize {
        self.second_stage.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.first_stage.is_empty()
    }

    /// Second-stage candidates for `v`, including `0` whenever `T v = 0`.
    fn candidates(&self, t: &IntMat, v: &IntVec, n: usize) -> Vec<IntVec> {
        let mut out: Vec<IntVec> = self
            .second_stage
            .get(v)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default();
        let zero = IntVec::zeros(n);
        if t.mul_vec(v).map(|r| r.is_zero()).unwrap_or(false) && !out.contains(&zero) {
            out.push(zero);
            out.sort();
        }
        out
    }
}

/// `(T; C)` and `[[W, 0], [D, I_s]]`.
fn composed(t: &IntMat, w: &IntMat, c: &IntMat, d: &IntMat) -> Result<(IntMat, IntMat), LinalgError> {
    check_dim(c.rows(), d.rows())?;
    let t_bar = t.vstack(c)?;
    let w_bar = composite_matrix(w, d)?;
    Ok((t_bar, w_bar))
}

fn blocks_at(t_bar: &IntMat, w_bar: &IntMat, n_scen: usize, n: usize, into: &mut BuildingBlocks) -> Result<(), LinalgError> {
    let m = t_bar.cols();
    let nn = w_bar.cols();
    let basis = graver(&build_twostage_matrix(t_bar, w_bar, n_scen)?);
    for e in basis.elements() {
        let v = e.slice(0..m);
        into.first_stage.insert(v.clone());
        let set = into.second_stage.entry(v).or_default();
        for k in 0..n_scen {
            set.insert(e.slice(m + k * nn..m + k * nn + n));
        }
    }
    Ok(())
}

/// Building blocks of the Graver bases of the scenario matrices for
/// `N = 1..=cap`, built from `(T; C)` and `[[W, 0], [D, I_s]]`. Fails unless
/// the blocks found up to `cap - 1` already equal those found up to `cap`.
pub fn extract_building_blocks(
    t: &IntMat,
    w: &IntMat,
    c: &IntMat,
    d: &IntMat,
    cap: usize,
) -> Result<BuildingBlocks, TwoStageError> {
    let (t_bar, w_bar) = composed(t, w, c, d)?;
    let n = w.cols();
    let mut blocks = BuildingBlocks::default();
    let mut previous = None;
    for k in 1..=cap.max(2) {
        blocks_at(&t_bar, &w_bar, k, n, &mut blocks)?;
        if k == cap.max(2) - 1 {
            previous = Some(blocks.clone());
        }
    }
    if previous.as_ref() != Some(&blocks) {
        return Err(TwoStageError::NotStabilized(cap));
    }
    Ok(blocks)
}

/// Blocks from the Graver bases for `N = 1..=n_scen` without a
/// stabilization check. For an instance with `n_scen` scenarios this covers
/// every element of its own Graver basis.
pub fn collect_building_blocks(
    t: &IntMat,
    w: &IntMat,
    c: &IntMat,
    d: &IntMat,
    n_scen: usize,
) -> Result<BuildingBlocks, TwoStageError> {
    let (t_bar, w_bar) = composed(t, w, c, d)?;
    let mut blocks = BuildingBlocks::default();
    for k in 1..=n_scen {
        blocks_at(&t_bar, &w_bar, k, w.cols(), &mut blocks)?;
    }
    Ok(blocks)
}

/// `(x, y_1, ..., y_N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoStagePoint {
    pub x: IntVec,
    pub y: Vec<IntVec>,
}

impl TwoStagePoint {
    pub fn flatten(&self) -> IntVec {
        let mut v = self.x.clone();
        for y in &self.y {
            v = v.concat(y);
        }
        v
    }

    pub fn from_flat(z: &IntVec, m: usize, n: usize) -> Self {
        let x = z.slice(0..m);
        let n_scen = (z.dim() - m).checked_div(n).unwrap_or(0);
        let y = (0..n_scen).map(|k| z.slice(m + k * n..m + (k + 1) * n)).collect();
        TwoStagePoint { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageInstance {
    t: IntMat,
    w: IntMat,
    b: Vec<IntVec>,
    ux: IntVec,
    uy: Vec<IntVec>,
    objective: Vec<CompositeObjective>,
}

impl TwoStageInstance {
    /// `objective[i]` acts on `(x, y_i)` (`m + n` variables); all scenarios
    /// must use the same rows.
    pub fn new(
        t: IntMat,
        w: IntMat,
        b: Vec<IntVec>,
        ux: IntVec,
        uy: Vec<IntVec>,
        objective: Vec<CompositeObjective>,
    ) -> Result<Self, TwoStageError> {
        if b.is_empty() {
            return Err(TwoStageError::NoScenarios);
        }
        check_dim(t.rows(), w.rows())?;
        check_dim(t.cols(), ux.dim())?;
        check_dim(b.len(), uy.len())?;
        check_dim(b.len(), objective.len())?;
        let rows = objective[0].row_matrix();
        for i in 0..b.len() {
            check_dim(t.rows(), b[i].dim())?;
            check_dim(w.cols(), uy[i].dim())?;
            check_dim(t.cols() + w.cols(), objective[i].dim())?;
            if objective[i].row_matrix() != rows {
                return Err(TwoStageError::RowMismatch);
            }
        }
        Ok(TwoStageInstance { t, w, b, ux, uy, objective })
    }

    pub fn t(&self) -> &IntMat {
        &self.t
    }

    pub fn w(&self) -> &IntMat {
        &self.w
    }

    pub fn rhs(&self) -> &[IntVec] {
        &self.b
    }

    pub fn ux(&self) -> &IntVec {
        &self.ux
    }

    pub fn uy(&self) -> &[IntVec] {
        &self.uy
    }

    pub fn objectives(&self) -> &[CompositeObjective] {
        &self.objective
    }

    pub fn n_scenarios(&self) -> usize {
        self.b.len()
    }

    /// `(C, D)`: the first `m` and last `n` columns of the shared rows.
    pub fn row_matrices(&self) -> (IntMat, IntMat) {
        let rows = self.objective[0].row_matrix();
        let m = self.t.cols();
        let c: Vec<usize> = (0..m).collect();
        let d: Vec<usize> = (m..rows.cols()).collect();
        (rows.select_columns(&c), rows.select_columns(&d))
    }

    pub fn matrix(&self) -> IntMat {
        build_twostage_matrix(&self.t, &self.w, self.n_scenarios()).expect("dims checked at construction")
    }

    pub fn feasible_box(&self) -> FeasibleBox {
        let rhs = self.b.iter().fold(IntVec::zeros(0), |acc, r| acc.concat(r));
        let upper = self.uy.iter().fold(self.ux.clone(), |acc, u| acc.concat(u));
        FeasibleBox::bounded(self.matrix(), rhs, &upper).expect("dims checked at construction")
    }

    /// The objective on the flattened variables `(x, y_1, ..., y_N)`.
    pub fn flat_objective(&self) -> Objective {
        let (m, n) = (self.t.cols(), self.w.cols());
        let total = m + self.n_scenarios() * n;
        let place = |k: usize, v: &IntVec| -> IntVec {
            let mut out = vec![BigInt::zero(); total];
            out[..m].clone_from_slice(&v.entries()[..m]);
            out[m + k * n..m + (k + 1) * n].clone_from_slice(&v.entries()[m..]);
            IntVec::new(out)
        };
        let mut c = IntVec::zeros(total);
        let mut rows = Vec::new();
        for (k, obj) in self.objective.iter().enumerate() {
            c = &c + &place(k, obj.linear_part());
            for (r, f) in obj.rows() {
                rows.push((place(k, r), f.clone()));
            }
        }
        Objective::Composite(CompositeObjective::new(c, rows).expect("dims match"))
    }

    pub fn value(&self, z: &TwoStagePoint) -> Result<Rat, TwoStageError> {
        scenario_sum(&self.objective, z)
    }

    pub fn is_feasible(&self, z: &TwoStagePoint) -> bool {
        z.y.len() == self.n_scenarios() && self.feasible_box().is_feasible_int(&z.flatten())
    }
}

fn scenario_sum(objs: &[CompositeObjective], z: &TwoStagePoint) -> Result<Rat, TwoStageError> {
    let mut total = Rat::zero();
    for (obj, y) in objs.iter().zip(&z.y) {
        total += obj.eval(&z.x.concat(y))?;
    }
    Ok(total)
}

fn within(v: &IntVec, lower: &IntVec, upper: &IntVec) -> bool {
    v.iter().zip(lower.iter()).all(|(a, l)| a >= l) && v.iter().zip(upper.iter()).all(|(a, u)| a <= u)
}

/// Bounds and objectives used by the augmentation loop; phase one swaps in
/// an enlarged box and the violation objective.
struct Problem<'a> {
    t: &'a IntMat,
    n: usize,
    lx: IntVec,
    ux: IntVec,
    ly: Vec<IntVec>,
    uy: Vec<IntVec>,
    objs: Vec<CompositeObjective>,
}

/// An assembled move `α · (v, w_1, ..., w_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageStep {
    pub v: IntVec,
    pub w: Vec<IntVec>,
    pub steplen: BigInt,
    pub new_value: Rat,
}

impl TwoStageStep {
    pub fn direction(&self) -> IntVec {
        self.w.iter().fold(self.v.clone(), |acc, w| acc.concat(w))
    }
}

impl Problem<'_> {
    fn best_for(
        &self,
        z: &TwoStagePoint,
        v: &IntVec,
        cands: &[IntVec],
        alpha: &BigInt,
    ) -> Option<(Rat, Vec<IntVec>)> {
        let x_new = z.x.add_scaled(v, alpha);
        if !within(&x_new, &self.lx, &self.ux) {
            return None;
        }
        let per: Vec<Option<(Rat, IntVec)>> = (0..z.y.len())
            .into_par_iter()
            .map(|k| {
                let mut best: Option<(Rat, IntVec)> = None;
                for w in cands {
                    let y_new = z.y[k].add_scaled(w, alpha);
                    if !within(&y_new, &self.ly[k], &self.uy[k]) {
                        continue;
                    }
                    let val = self.objs[k].eval(&x_new.concat(&y_new)).ok()?;
                    if best.as_ref().is_none_or(|(b, _)| val < *b) {
                        best = Some((val, w.clone()));
                    }
                }
                best
            })
            .collect();
        let mut total = Rat::zero();
        let mut ws = Vec::with_capacity(per.len());
        for p in per {
            let (val, w) = p?;
            total += val;
            ws.push(w);
        }
        Some((total, ws))
    }

    fn alpha_max(&self, v: &IntVec) -> BigInt {
        if v.is_zero() {
            self.ly
                .iter()
                .zip(&self.uy)
                .flat_map(|(l, u)| u.iter().zip(l.iter()).map(|(a, b)| a - b))
                .max()
                .unwrap_or_else(BigInt::zero)
        } else {
            self.ux
                .iter()
                .zip(self.lx.iter())
                .map(|(a, b)| a - b)
                .max()
                .unwrap_or_else(BigInt::zero)
        }
    }

    /// Best strictly improving assembled move over `α ∈ [1, α_max]` (or only
    /// `α = 1` when `unit_only`). Ties: value, then `α`, then `v`.
    fn step(
        &self,
        z: &TwoStagePoint,
        blocks: &BuildingBlocks,
        unit_only: bool,
    ) -> Result<Option<TwoStageStep>, TwoStageError> {
        let current = scenario_sum(&self.objs, z)?;
        let mut firsts: Vec<IntVec> = blocks.first_stage.iter().cloned().collect();
        let zero = IntVec::zeros(self.lx.dim());
        if !firsts.contains(&zero) {
            firsts.push(zero);
            firsts.sort();
        }
        let mut best: Option<TwoStageStep> = None;
        for v in &firsts {
            let cands = blocks.candidates(self.t, v, self.n);
            if cands.is_empty() {
                continue;
            }
            let amax = if unit_only { BigInt::one() } else { self.alpha_max(v) };
            let mut alpha = BigInt::one();
            while alpha <= amax {
                // The feasible step lengths of x + αv form an interval.
                if !within(&z.x.add_scaled(v, &alpha), &self.lx, &self.ux) {
                    break;
                }
                if let Some((val, ws)) = self.best_for(z, v, &cands, &alpha) {
                    let better = val < current
                        && best
                            .as_ref()
                            .is_none_or(|b| (&val, &alpha) < (&b.new_value, &b.steplen));
                    if better {
                        best = Some(TwoStageStep {
                            v: v.clone(),
                            w: ws,
                            steplen: alpha.clone(),
                            new_value: val,
                        });
                    }
                }
                alpha += 1;
            }
        }
        Ok(best)
    }

    fn augment(
        &self,
        z0: TwoStagePoint,
        blocks: &BuildingBlocks,
        n_eff: usize,
    ) -> Result<(TwoStagePoint, AugmentTrace), TwoStageError> {
        let mut trace = AugmentTrace {
            n_eff,
            ..AugmentTrace::default()
        };
        let mut z = z0;
        let mut value = scenario_sum(&self.objs, &z)?;
        loop {
            trace.directions_evaluated += blocks.len() as u64;
            let Some(step) = self.step(&z, blocks, false)? else { break };
            z.x = z.x.add_scaled(&step.v, &step.steplen);
            for (y, w) in z.y.iter_mut().zip(&step.w) {
                *y = y.add_scaled(w, &step.steplen);
            }
            trace.iterations.push(TraceStep {
                kind: StepKind::Greedy,
                value_before: value,
                value_after: step.new_value.clone(),
                direction: step.direction(),
                steplen: Rat::from_integer(step.steplen.clone()),
            });
            value = step.new_value;
        }
        Ok((z, trace))
    }
}

impl TwoStageInstance {
    fn problem(&self) -> Problem<'_> {
        Problem {
            t: &self.t,
            n: self.w.cols(),
            lx: IntVec::zeros(self.t.cols()),
            ux: self.ux.clone(),
            ly: vec![IntVec::zeros(self.w.cols()); self.n_scenarios()],
            uy: self.uy.clone(),
            objs: self.objective.clone(),
        }
    }
}

/// An improving assembled vector `(v, w_1, ..., w_N)` at step length one, or
/// `None` when `z` is optimal.
pub fn improving_vector(
    z: &TwoStagePoint,
    blocks: &BuildingBlocks,
    inst: &TwoStageInstance,
) -> Result<Option<TwoStageStep>, TwoStageError> {
    if !inst.is_feasible(z) {
        return Err(AugmentError::InfeasibleBase.into());
    }
    inst.problem().step(z, blocks, true)
}

/// The greedy assembled move: every step length up to the box width is
/// tried for every first-stage block.
pub fn greedy_step_twostage(
    z: &TwoStagePoint,
    blocks: &BuildingBlocks,
    inst: &TwoStageInstance,
) -> Result<Option<TwoStageStep>, TwoStageError> {
    if !inst.is_feasible(z) {
        return Err(AugmentError::InfeasibleBase.into());
    }
    inst.problem().step(z, blocks, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoStageOptions {
    /// Instances with more scenarios than this use blocks that must have
    /// stabilized at `N = block_cap`; smaller ones use their own Graver
    /// basis.
    pub block_cap: usize,
}

impl Default for TwoStageOptions {
    fn default() -> Self {
        TwoStageOptions { block_cap: 3 }
    }
}

fn blocks_for(
    t: &IntMat,
    w: &IntMat,
    c: &IntMat,
    d: &IntMat,
    n_scen: usize,
    opts: &TwoStageOptions,
) -> Result<BuildingBlocks, TwoStageError> {
    if n_scen <= opts.block_cap {
        collect_building_blocks(t, w, c, d, n_scen)
    } else {
        extract_building_blocks(t, w, c, d, opts.block_cap)
    }
}

#[derive(Debug, Clone)]
pub struct TwoStageSolution {
    pub point: TwoStagePoint,
    pub value: Rat,
    pub trace: AugmentTrace,
    pub first_stage_blocks: usize,
    pub second_stage_blocks: usize,
}

/// A feasible point: from an integer solution of the equations, minimize
/// the total bound violation with blocks of the plain scenario matrices.
pub fn phase_one(inst: &TwoStageInstance, opts: &TwoStageOptions) -> Result<TwoStagePoint, TwoStageError> {
    let empty_c = IntMat::zeros(0, inst.t.cols());
    let empty_d = IntMat::zeros(0, inst.w.cols());
    let blocks = blocks_for(&inst.t, &inst.w, &empty_c, &empty_d, inst.n_scenarios(), opts)?;
    phase_one_with(inst, &blocks)
}

fn phase_one_with(inst: &TwoStageInstance, blocks: &BuildingBlocks) -> Result<TwoStagePoint, TwoStageError> {
    let bx = inst.feasible_box();
    let (m, n) = (inst.t.cols(), inst.w.cols());
    let Some(z) = solve_integer(bx.matrix(), bx.rhs())? else {
        return Err(TwoStageError::Infeasible);
    };
    let start = TwoStagePoint::from_flat(&z, m, n);
    if inst.is_feasible(&start) {
        return Ok(start);
    }
    // Violation of x is charged to the first scenario only.
    let dist = |u: &IntVec| -> Vec<UnivariateConvex> {
        u.iter()
            .map(|ui| UnivariateConvex::distance_to_interval(&BigInt::zero(), ui))
            .collect()
    };
    let mut objs = Vec::new();
    for k in 0..inst.n_scenarios() {
        let mut funcs = if k == 0 {
            dist(&inst.ux)
        } else {
            vec![UnivariateConvex::Zero; m]
        };
        funcs.extend(dist(&inst.uy[k]));
        objs.push(CompositeObjective::separable(funcs));
    }
    let lower_of = |v: &IntVec| -> IntVec { v.iter().map(|e| e.min(&BigInt::zero()).clone()).collect() };
    let upper_of = |v: &IntVec, u: &IntVec| -> IntVec { v.iter().zip(u.iter()).map(|(e, ui)| e.max(ui).clone()).collect() };
    let problem = Problem {
        t: &inst.t,
        n,
        lx: lower_of(&start.x),
        ux: upper_of(&start.x, &inst.ux),
        ly: start.y.iter().map(lower_of).collect(),
        uy: start.y.iter().zip(&inst.uy).map(|(y, u)| upper_of(y, u)).collect(),
        objs,
    };
    let n_eff = sebo_bound(m + inst.n_scenarios() * n);
    let (best, _) = problem.augment(start, blocks, n_eff)?;
    if scenario_sum(&problem.objs, &best)?.is_zero() {
        Ok(best)
    } else {
        Err(TwoStageError::Infeasible)
    }
}

/// Phase one, then greedy augmentation with assembled building-block moves.
pub fn solve_twostage(inst: &TwoStageInstance, opts: &TwoStageOptions) -> Result<TwoStageSolution, TwoStageError> {
    let (c, d) = inst.row_matrices();
    let plain = {
        let empty_c = IntMat::zeros(0, inst.t.cols());
        let empty_d = IntMat::zeros(0, inst.w.cols());
        blocks_for(&inst.t, &inst.w, &empty_c, &empty_d, inst.n_scenarios(), opts)?
    };
    let start = phase_one_with(inst, &plain)?;
    let rows = inst.objective[0].row_matrix();
    let blocks = if rows.rows() == 0 || is_coordinate_selection(&rows) {
        plain
    } else {
        blocks_for(&inst.t, &inst.w, &c, &d, inst.n_scenarios(), opts)?
    };
    let s = rows.rows();
    let n_eff = sebo_bound(inst.t.cols() + inst.n_scenarios() * (inst.w.cols() + s));
    let (point, trace) = inst.problem().augment(start, &blocks, n_eff)?;
    let value = inst.value(&point)?;
    Ok(TwoStageSolution {
        point,
        value,
        trace,
        first_stage_blocks: blocks.first_stage.len(),
        second_stage_blocks: blocks.len(),
    })
}
