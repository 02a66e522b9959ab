//! Greedy augmentation.
//!
//! A greedy augmentation vector for a point `z` and a finite direction set
//! `S` is a pair `(α, g)` minimizing `f(z + αg)` over `g ∈ S` and feasible
//! `α ≥ 0`. Iterating greedy steps over `G(A)` (or `G(A, C)` for composite
//! objectives) reaches an integer optimum; over the circuits `C(A)`, combined
//! with support-shrinking moves, it reaches a continuous optimum of a linear
//! program.
//!
//! Candidate directions are evaluated with rayon. The reduction is a minimum
//! under the total order (value, step length, direction index), so the chosen
//! step never depends on the number of threads.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::graver::{composite_directions, graver, CircuitSet, GraverBasis};
use crate::linalg::{check_dim, solve_integer, IntMat, IntVec, LinalgError, Rat, RatVec};
use crate::objective::{bits, range_bound, step_bound, CompositeObjective, Objective, ObjectiveError, UnivariateConvex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(BigInt, BigInt),
    #[error("point violates the bounds or the equality constraints")]
    InfeasibleBase,
    #[error("objective decreases without bound along {0}")]
    UnboundedObjective(IntVec),
    #[error("no feasible point")]
    Infeasible,
    #[error("lower bound exceeds upper bound at coordinate {0}")]
    EmptyBox(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// `{z : A z = b, lower <= z <= upper}`. Missing upper bounds are `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleBox {
    a: IntMat,
    b: IntVec,
    lower: IntVec,
    upper: Vec<Option<Rat>>,
}

impl FeasibleBox {
    pub fn new(
        a: IntMat,
        b: IntVec,
        lower: IntVec,
        upper: Vec<Option<Rat>>,
    ) -> Result<Self, AugmentError> {
        check_dim(a.rows(), b.dim())?;
        check_dim(a.cols(), lower.dim())?;
        check_dim(a.cols(), upper.len())?;
        for (i, u) in upper.iter().enumerate() {
            if let Some(u) = u {
                if *u < Rat::from_integer(lower[i].clone()) {
                    return Err(AugmentError::EmptyBox(i));
                }
            }
        }
        Ok(FeasibleBox { a, b, lower, upper })
    }

    /// `0 <= z <= upper` with integer upper bounds.
    pub fn bounded(a: IntMat, b: IntVec, upper: &IntVec) -> Result<Self, AugmentError> {
        let n = a.cols();
        let upper = upper
            .iter()
            .map(|u| Some(Rat::from_integer(u.clone())))
            .collect();
        Self::new(a, b, IntVec::zeros(n), upper)
    }

    /// `z >= 0` with no upper bounds.
    pub fn nonnegative(a: IntMat, b: IntVec) -> Result<Self, AugmentError> {
        let n = a.cols();
        Self::new(a, b, IntVec::zeros(n), vec![None; n])
    }

    pub fn matrix(&self) -> &IntMat {
        &self.a
    }

    pub fn rhs(&self) -> &IntVec {
        &self.b
    }

    pub fn lower(&self) -> &IntVec {
        &self.lower
    }

    pub fn upper(&self) -> &[Option<Rat>] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// Upper bounds rounded down to integers.
    pub fn upper_int(&self) -> Vec<Option<BigInt>> {
        self.upper
            .iter()
            .map(|u| u.as_ref().map(|u| u.floor().to_integer()))
            .collect()
    }

    pub fn is_bounded(&self) -> bool {
        self.upper.iter().all(Option::is_some)
    }

    pub fn in_bounds_int(&self, z: &IntVec) -> bool {
        z.dim() == self.dim()
            && z.iter().zip(self.lower.iter()).all(|(zi, li)| zi >= li)
            && z.iter().zip(&self.upper).all(|(zi, ui)| match ui {
                Some(u) => Rat::from_integer(zi.clone()) <= *u,
                None => true,
            })
    }

    pub fn in_bounds_rat(&self, z: &RatVec) -> bool {
        z.dim() == self.dim()
            && z
                .iter()
                .zip(self.lower.iter())
                .all(|(zi, li)| *zi >= Rat::from_integer(li.clone()))
            && z.iter().zip(&self.upper).all(|(zi, ui)| match ui {
                Some(u) => zi <= u,
                None => true,
            })
    }

    pub fn is_feasible_int(&self, z: &IntVec) -> bool {
        self.in_bounds_int(z) && self.a.mul_vec(z).map(|r| r == self.b).unwrap_or(false)
    }

    pub fn is_feasible_rat(&self, z: &RatVec) -> bool {
        self.in_bounds_rat(z)
            && self
                .a
                .mul_rat(z)
                .map(|r| r == self.b.to_rat())
                .unwrap_or(false)
    }
}

/// Largest integer `α >= 0` keeping `z + αg` inside the bounds, or `None`
/// when no bound limits the ray.
pub fn max_step_int(z: &IntVec, g: &IntVec, bx: &FeasibleBox) -> Result<Option<BigInt>, AugmentError> {
    check_dim(bx.dim(), g.dim())?;
    if !bx.in_bounds_int(z) {
        return Err(AugmentError::InfeasibleBase);
    }
    Ok(max_step_rat_unchecked(&z.to_rat(), g, bx).map(|a| a.floor().to_integer()))
}

/// Largest rational `α >= 0` keeping `z + αg` inside the bounds.
pub fn max_step_rat(z: &RatVec, g: &IntVec, bx: &FeasibleBox) -> Result<Option<Rat>, AugmentError> {
    check_dim(bx.dim(), g.dim())?;
    if !bx.in_bounds_rat(z) {
        return Err(AugmentError::InfeasibleBase);
    }
    Ok(max_step_rat_unchecked(z, g, bx))
}

fn max_step_rat_unchecked(z: &RatVec, g: &IntVec, bx: &FeasibleBox) -> Option<Rat> {
    let mut best: Option<Rat> = None;
    for (i, gi) in g.iter().enumerate() {
        let limit = if gi.is_positive() {
            match &bx.upper[i] {
                Some(u) => (u - &z[i]) / Rat::from_integer(gi.clone()),
                None => continue,
            }
        } else if gi.is_negative() {
            (&z[i] - Rat::from_integer(bx.lower[i].clone())) / Rat::from_integer(-gi)
        } else {
            continue;
        };
        if best.as_ref().is_none_or(|b| limit < *b) {
            best = Some(limit);
        }
    }
    best
}

/// Smallest minimizer of a convex function on `[l, u] ∩ Z`.
///
/// Bisection on the three points `m - 1, m, m + 1` around the midpoint, so
/// the number of evaluations is logarithmic in `u - l`.
pub fn line_search<T, F>(mut f: F, l: &BigInt, u: &BigInt) -> Result<BigInt, AugmentError>
where
    T: Ord,
    F: FnMut(&BigInt) -> T,
{
    if l > u {
        return Err(AugmentError::EmptyInterval(l.clone(), u.clone()));
    }
    let (mut lo, mut hi) = (l.clone(), u.clone());
    while &hi - &lo >= BigInt::from(2) {
        let m: BigInt = (&lo + &hi) >> 1;
        let fm = f(&m);
        if f(&(&m - 1)) <= fm {
            hi = m - 1;
        } else if f(&(&m + 1)) < fm {
            lo = m + 1;
        } else {
            return Ok(m);
        }
    }
    if lo < hi && f(&hi) < f(&lo) {
        return Ok(hi);
    }
    Ok(lo)
}

/// One greedy move `z -> z + steplen · direction`. The zero step has a zero
/// direction and zero length.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub direction: IntVec,
    pub steplen: Rat,
    pub new_value: Rat,
}

impl GreedyStep {
    fn zero(n: usize, value: Rat) -> Self {
        GreedyStep {
            direction: IntVec::zeros(n),
            steplen: Rat::zero(),
            new_value: value,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.steplen.is_zero()
    }

    /// Step length as an integer (integer mode steps only).
    pub fn steplen_int(&self) -> BigInt {
        self.steplen.to_integer()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Greedy,
    /// A support-shrinking move of the continuous solver.
    Shrink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub value_before: Rat,
    pub value_after: Rat,
    pub direction: IntVec,
    pub steplen: Rat,
}

/// Iteration record of a solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AugmentTrace {
    pub iterations: Vec<TraceStep>,
    /// `max f - min f` over the box, when the box bounds every coordinate
    /// the objective touches.
    pub h_bound: Option<Rat>,
    /// The `n_eff` of the geometric improvement ratio `1 / n_eff`.
    pub n_eff: usize,
    pub directions_evaluated: u64,
}

impl AugmentTrace {
    fn new(n_eff: usize, h_bound: Option<Rat>) -> Self {
        AugmentTrace {
            iterations: Vec::new(),
            h_bound,
            n_eff,
            directions_evaluated: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn greedy_steps(&self) -> impl Iterator<Item = &TraceStep> {
        self.iterations.iter().filter(|s| s.kind == StepKind::Greedy)
    }

    /// `⌈n_eff · ln(H + 1)⌉ + 1`, when `H` is known.
    pub fn step_bound(&self) -> Option<u64> {
        self.h_bound.as_ref().map(|h| step_bound(self.n_eff, h))
    }

    /// True when every greedy step closes at least `1 / n_eff` of the gap to
    /// `optimum`.
    pub fn is_geometric(&self, optimum: &Rat) -> bool {
        let n = Rat::from_integer(BigInt::from(self.n_eff));
        self.greedy_steps().all(|s| {
            (&s.value_before - &s.value_after) * &n >= &s.value_before - optimum
        })
    }

    pub fn final_value(&self) -> Option<&Rat> {
        self.iterations.last().map(|s| &s.value_after)
    }
}

/// `2m - 2` clamped to at least one.
pub fn sebo_bound(m: usize) -> usize {
    (2 * m).saturating_sub(2).max(1)
}

fn ip_n_eff(obj: &Objective) -> usize {
    sebo_bound(obj.dim() + obj.num_rows())
}

type Candidate = (Rat, BigInt, usize);

fn pick(results: Vec<Result<Option<Candidate>, AugmentError>>) -> Result<Option<Candidate>, AugmentError> {
    let mut best: Option<Candidate> = None;
    for r in results {
        if let Some(c) = r? {
            if best.as_ref().is_none_or(|b| c < *b) {
                best = Some(c);
            }
        }
    }
    Ok(best)
}

/// Best integer step along one direction, if it strictly improves.
fn best_along(
    z: &IntVec,
    g: &IntVec,
    obj: &Objective,
    bx: &FeasibleBox,
    current: &Rat,
) -> Result<Option<(Rat, BigInt)>, AugmentError> {
    if g.is_zero() {
        return Ok(None);
    }
    let limit = max_step_rat_unchecked(&z.to_rat(), g, bx).map(|a| a.floor().to_integer());
    let one = BigInt::one();
    if matches!(&limit, Some(m) if *m < one) {
        return Ok(None);
    }
    let ray = obj.ray(z, g);
    let alpha = if ray.is_linear() {
        if !ray.linear_slope().is_negative() {
            return Ok(None);
        }
        match limit {
            Some(m) => m,
            None => return Err(AugmentError::UnboundedObjective(g.clone())),
        }
    } else {
        let hi = match limit {
            Some(m) => m,
            None => {
                // Convex along the ray: double until the value stops dropping.
                let mut h = one.clone();
                loop {
                    let h2: BigInt = &h << 1;
                    if ray.value(&h2) >= ray.value(&h) {
                        break h2;
                    }
                    if h2.bits() > 512 {
                        return Err(AugmentError::UnboundedObjective(g.clone()));
                    }
                    h = h2;
                }
            }
        };
        line_search(|a| ray.value(a), &one, &hi)?
    };
    let v = ray.value(&alpha);
    Ok((v < *current).then_some((v, alpha)))
}

/// The greedy integer step from `z` over `dirs`.
///
/// Ties are broken by smallest new value, then smallest step length, then
/// position in `dirs` (callers pass directions in canonical order).
pub fn greedy_step(
    z: &IntVec,
    dirs: &[IntVec],
    obj: &Objective,
    bx: &FeasibleBox,
) -> Result<GreedyStep, AugmentError> {
    check_dim(bx.dim(), z.dim())?;
    check_dim(bx.dim(), obj.dim())?;
    if !bx.in_bounds_int(z) {
        return Err(AugmentError::InfeasibleBase);
    }
    let current = obj.eval_int(z)?;
    let results: Vec<_> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            check_dim(z.dim(), g.dim())?;
            Ok(best_along(z, g, obj, bx, &current)?.map(|(v, a)| (v, a, i)))
        })
        .collect();
    Ok(match pick(results)? {
        None => GreedyStep::zero(z.dim(), current),
        Some((v, a, i)) => GreedyStep {
            direction: dirs[i].clone(),
            steplen: Rat::from_integer(a),
            new_value: v,
        },
    })
}

/// Iterates greedy steps over `dirs` until none improves.
pub fn augment_to_optimum(
    z0: &IntVec,
    dirs: &[IntVec],
    obj: &Objective,
    bx: &FeasibleBox,
    n_eff: usize,
) -> Result<(IntVec, AugmentTrace), AugmentError> {
    if !bx.is_feasible_int(z0) {
        return Err(AugmentError::InfeasibleBase);
    }
    let h = range_bound(obj, bx.lower(), &bx.upper_int()).ok();
    if let Some(h) = &h {
        warn_if_h_large(h, bx);
    }
    let mut trace = AugmentTrace::new(n_eff, h);
    let mut z = z0.clone();
    let mut value = obj.eval_int(&z)?;
    loop {
        let step = greedy_step(&z, dirs, obj, bx)?;
        trace.directions_evaluated += dirs.len() as u64;
        if step.is_zero() {
            break;
        }
        z = z.add_scaled(&step.direction, &step.steplen_int());
        log::debug!(
            "step {}: value {} -> {} along {} x{}",
            trace.len() + 1,
            value,
            step.new_value,
            step.direction,
            step.steplen
        );
        trace.iterations.push(TraceStep {
            kind: StepKind::Greedy,
            value_before: value,
            value_after: step.new_value.clone(),
            direction: step.direction,
            steplen: step.steplen,
        });
        value = step.new_value;
    }
    Ok((z, trace))
}

/// `log2 H` above this multiple of the input bit length is reported.
const H_WARN_FACTOR: u64 = 16;

fn warn_if_h_large(h: &Rat, bx: &FeasibleBox) {
    let m = bx.matrix();
    let input_bits: u64 = (0..m.rows())
        .flat_map(|r| m.row_slice(r).iter())
        .chain(bx.rhs().iter())
        .map(|e| e.bits() + 1)
        .sum();
    let hb = bits(h);
    if hb > H_WARN_FACTOR * input_bits.max(1) {
        log::warn!("range bound has {hb} bits against {input_bits} input bits");
    }
}

/// Greedy augmentation over a Graver basis from a feasible integer point.
///
/// `basis` must be `G(A)` for linear objectives and `G(A, C)` (with `C` the
/// objective's row matrix) for composite ones; the result is then a global
/// optimum over the box.
pub fn solve_ip_greedy(
    z0: &IntVec,
    basis: &GraverBasis,
    obj: &Objective,
    bx: &FeasibleBox,
) -> Result<(IntVec, AugmentTrace), AugmentError> {
    check_dim(bx.dim(), basis.dim())?;
    augment_to_optimum(z0, &basis.directions(), obj, bx, ip_n_eff(obj))
}

/// The direction set required by [`solve_ip_greedy`] for `obj`.
pub fn basis_for(a: &IntMat, obj: &Objective) -> Result<GraverBasis, AugmentError> {
    Ok(if obj.num_rows() == 0 {
        graver(a)
    } else {
        composite_directions(a, &obj.row_matrix())?
    })
}

/// Separable sum of distances from each coordinate to its bounds.
pub fn violation_objective(bx: &FeasibleBox) -> Objective {
    let upper = bx.upper_int();
    let funcs = bx
        .lower()
        .iter()
        .zip(upper)
        .map(|(l, u)| match u {
            Some(u) => UnivariateConvex::distance_to_interval(l, &u),
            None => UnivariateConvex::Table(vec![
                (l - 1, Rat::one()),
                (l.clone(), Rat::zero()),
                (l + 1, Rat::zero()),
            ]),
        })
        .collect();
    Objective::Composite(CompositeObjective::separable(funcs))
}

/// A feasible integer point of `bx`, or [`AugmentError::Infeasible`].
///
/// Starts from any integer solution of `A z = b` and minimizes the total
/// bound violation by greedy augmentation over `dirs`, which must contain
/// `G(A)`. Since the violation is separable, `G(A)` is also the Graver basis
/// of the composite problem, so a positive minimum certifies infeasibility.
pub fn find_feasible(bx: &FeasibleBox, dirs: &[IntVec]) -> Result<IntVec, AugmentError> {
    let Some(z) = solve_integer(bx.matrix(), bx.rhs())? else {
        return Err(AugmentError::Infeasible);
    };
    if bx.in_bounds_int(&z) {
        return Ok(z);
    }
    // Enlarge the box so that it contains the start point.
    let lower: IntVec = z
        .iter()
        .zip(bx.lower().iter())
        .map(|(zi, li)| zi.min(li).clone())
        .collect();
    let upper = bx
        .upper_int()
        .into_iter()
        .zip(z.iter())
        .map(|(u, zi)| u.map(|u| Rat::from_integer(u.max(zi.clone()))))
        .collect();
    let outer = FeasibleBox::new(bx.matrix().clone(), bx.rhs().clone(), lower, upper)?;
    let obj = violation_objective(bx);
    let n = bx.dim();
    let (best, trace) = augment_to_optimum(&z, dirs, &obj, &outer, sebo_bound(2 * n))?;
    log::debug!("phase one: {} steps", trace.len());
    if obj.eval_int(&best)?.is_zero() {
        Ok(best)
    } else {
        Err(AugmentError::Infeasible)
    }
}

/// Phase one followed by greedy augmentation, computing the needed basis.
pub fn solve_ip(bx: &FeasibleBox, obj: &Objective) -> Result<(IntVec, AugmentTrace, GraverBasis), AugmentError> {
    check_dim(bx.dim(), obj.dim())?;
    let basis = basis_for(bx.matrix(), obj)?;
    let dirs = basis.directions();
    let z0 = find_feasible(bx, &dirs)?;
    let (z, trace) = augment_to_optimum(&z0, &dirs, obj, bx, ip_n_eff(obj))?;
    Ok((z, trace, basis))
}

/// The greedy continuous step for `min c·z` from `z` over `dirs`: every
/// improving direction is followed to the end of its feasible segment.
pub fn greedy_step_lp(
    z: &RatVec,
    dirs: &[IntVec],
    c: &RatVec,
    bx: &FeasibleBox,
) -> Result<GreedyStep, AugmentError> {
    check_dim(bx.dim(), z.dim())?;
    check_dim(bx.dim(), c.dim())?;
    if !bx.in_bounds_rat(z) {
        return Err(AugmentError::InfeasibleBase);
    }
    let current = c.dot(z);
    let mut best: Option<(Rat, Rat, usize)> = None;
    for (i, g) in dirs.iter().enumerate() {
        let slope = c.dot_int(g);
        if !slope.is_negative() {
            continue;
        }
        let alpha = match max_step_rat_unchecked(z, g, bx) {
            Some(a) => a,
            None => return Err(AugmentError::UnboundedObjective(g.clone())),
        };
        if !alpha.is_positive() {
            continue;
        }
        let cand = (&current + &alpha * &slope, alpha, i);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    Ok(match best {
        None => GreedyStep::zero(z.dim(), current),
        Some((v, a, i)) => GreedyStep {
            direction: dirs[i].clone(),
            steplen: a,
            new_value: v,
        },
    })
}

/// Coordinates strictly between their bounds. With zero lower bounds and no
/// upper bounds this is the support.
fn free_coords(z: &RatVec, bx: &FeasibleBox) -> Vec<bool> {
    (0..z.dim())
        .map(|i| {
            z[i] > Rat::from_integer(bx.lower[i].clone())
                && bx.upper[i].as_ref().is_none_or(|u| z[i] < *u)
        })
        .collect()
}

/// First circuit (in canonical order) with `c·g <= 0` whose move to the end
/// of its segment strictly shrinks the set of free coordinates.
fn shrink_move(
    z: &RatVec,
    circuits: &[IntVec],
    c: &RatVec,
    bx: &FeasibleBox,
) -> Result<Option<(IntVec, Rat)>, AugmentError> {
    let free = free_coords(z, bx);
    for g in circuits {
        if c.dot_int(g).is_positive() {
            continue;
        }
        if g.support().iter().any(|&i| !free[i]) {
            continue;
        }
        match max_step_rat_unchecked(z, g, bx) {
            Some(a) => return Ok(Some((g.clone(), a))),
            None if c.dot_int(g).is_negative() => {
                return Err(AugmentError::UnboundedObjective(g.clone()))
            }
            None => continue,
        }
    }
    Ok(None)
}

/// Minimizes `c·z` over the box by circuit augmentation.
///
/// Each round first moves along non-worsening circuits that fix one more
/// coordinate at a bound (at most `n` such moves reach a vertex), then takes
/// one greedy circuit step. The solve stops when the greedy step at a vertex
/// is zero.
pub fn solve_lp_circuit(
    z0: &RatVec,
    circuits: &CircuitSet,
    c: &RatVec,
    bx: &FeasibleBox,
) -> Result<(RatVec, AugmentTrace), AugmentError> {
    check_dim(bx.dim(), circuits.matrix().cols())?;
    if !bx.is_feasible_rat(z0) {
        return Err(AugmentError::InfeasibleBase);
    }
    let n = bx.dim();
    let h = range_bound(&Objective::linear(c.clone()), bx.lower(), &bx.upper_int()).ok();
    let mut trace = AugmentTrace::new(n.max(1), h);
    let mut z = z0.clone();
    let mut value = c.dot(&z);
    let dirs = circuits.elements();
    loop {
        let mut inner = 0;
        while let Some((g, a)) = shrink_move(&z, dirs, c, bx)? {
            z = z.add_scaled(&g, &a);
            let after = c.dot(&z);
            trace.iterations.push(TraceStep {
                kind: StepKind::Shrink,
                value_before: value,
                value_after: after.clone(),
                direction: g,
                steplen: a,
            });
            value = after;
            inner += 1;
            debug_assert!(inner <= n);
        }
        let step = greedy_step_lp(&z, dirs, c, bx)?;
        trace.directions_evaluated += dirs.len() as u64;
        if step.is_zero() {
            return Ok((z, trace));
        }
        z = z.add_scaled(&step.direction, &step.steplen);
        trace.iterations.push(TraceStep {
            kind: StepKind::Greedy,
            value_before: value,
            value_after: step.new_value.clone(),
            direction: step.direction,
            steplen: step.steplen,
        });
        value = step.new_value;
    }
}

/// Naive best-improvement augmentation without support shrinking, stopped
/// after `iterations` steps or at the first zero step. Over a poorly chosen
/// direction set this can converge to a non-optimal point without ever
/// stopping.
pub fn zigzag(
    z0: &RatVec,
    dirs: &[IntVec],
    c: &RatVec,
    bx: &FeasibleBox,
    iterations: usize,
) -> Result<(RatVec, AugmentTrace), AugmentError> {
    if !bx.is_feasible_rat(z0) {
        return Err(AugmentError::InfeasibleBase);
    }
    let mut trace = AugmentTrace::new(bx.dim().max(1), None);
    let mut z = z0.clone();
    let mut value = c.dot(&z);
    for _ in 0..iterations {
        let step = greedy_step_lp(&z, dirs, c, bx)?;
        if step.is_zero() {
            break;
        }
        z = z.add_scaled(&step.direction, &step.steplen);
        trace.iterations.push(TraceStep {
            kind: StepKind::Greedy,
            value_before: value,
            value_after: step.new_value.clone(),
            direction: step.direction,
            steplen: step.steplen,
        });
        value = step.new_value;
    }
    Ok((z, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graver::circuits;
    use crate::objective::LinearObjective;

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(b(n), b(d))
    }

    fn example_matrix() -> IntMat {
        IntMat::from_rows(&[
            vec![2, 1, 0, 1, 0, 0],
            vec![1, 2, 0, 0, 1, 0],
            vec![0, 0, 1, 0, 0, 1],
        ])
    }

    fn example_cost() -> RatVec {
        IntVec::from_i64(&[1, 1, -1, 0, 0, 0]).to_rat()
    }

    fn squares(n: usize) -> Objective {
        Objective::Composite(CompositeObjective::separable(vec![
            UnivariateConvex::square();
            n
        ]))
    }

    #[test]
    fn line_search_examples() {
        assert_eq!(line_search(|a: &BigInt| a * a, &b(-5), &b(10)).unwrap(), b(0));
        assert_eq!(line_search(|a: &BigInt| Signed::abs(&(a - 3)), &b(0), &b(10)).unwrap(), b(3));
        assert_eq!(
            line_search(|a: &BigInt| (a - 2) * (a - 3), &b(0), &b(10)).unwrap(),
            b(2)
        );
        assert_eq!(
            line_search(|a: &BigInt| a * a, &b(1), &b(0)),
            Err(AugmentError::EmptyInterval(b(1), b(0)))
        );
        assert_eq!(line_search(|_: &BigInt| 0, &b(-7), &b(7)).unwrap(), b(-7));
        assert_eq!(line_search(|a: &BigInt| -a.clone(), &b(-7), &b(8)).unwrap(), b(8));
    }

    #[test]
    fn max_step_examples() {
        let bx = FeasibleBox::bounded(
            example_matrix(),
            IntVec::from_i64(&[2, 2, 1]),
            &IntVec::from_i64(&[2, 2, 1, 2, 2, 1]),
        )
        .unwrap();
        let z = IntVec::from_i64(&[0, 1, 0, 1, 0, 1]);
        let g = IntVec::from_i64(&[0, -1, 0, 1, 2, 0]);
        assert_eq!(max_step_int(&z, &g, &bx).unwrap(), Some(b(1)));
        assert_eq!(max_step_int(&z, &IntVec::zeros(6), &bx).unwrap(), None);

        let bx2 = FeasibleBox::bounded(
            IntMat::from_rows(&[vec![1, 1]]),
            IntVec::from_i64(&[3]),
            &IntVec::from_i64(&[3, 3]),
        )
        .unwrap();
        let z = IntVec::from_i64(&[3, 0]);
        assert_eq!(max_step_int(&z, &IntVec::from_i64(&[-1, 1]), &bx2).unwrap(), Some(b(3)));
        assert_eq!(
            max_step_int(&IntVec::from_i64(&[4, -1]), &IntVec::from_i64(&[-1, 1]), &bx2),
            Err(AugmentError::InfeasibleBase)
        );
    }

    #[test]
    fn greedy_step_example_lp_point() {
        // Integer steps on the worked example: the best move reaches value 0
        // and the tie is broken toward the shorter step.
        let a = example_matrix();
        let bx = FeasibleBox::bounded(
            a.clone(),
            IntVec::from_i64(&[2, 2, 1]),
            &IntVec::from_i64(&[2, 2, 1, 2, 2, 1]),
        )
        .unwrap();
        let c = circuits(&a);
        let obj = Objective::Linear(LinearObjective::new(example_cost()));
        let z = IntVec::from_i64(&[0, 1, 0, 1, 0, 1]);
        let step = greedy_step(&z, c.elements(), &obj, &bx).unwrap();
        assert_eq!(step.new_value, r(0, 1));
        assert_eq!(step.steplen, r(1, 1));
        assert_eq!(step.direction, IntVec::from_i64(&[0, -1, 0, 1, 2, 0]));
        assert!(bx.is_feasible_int(&z.add_scaled(&step.direction, &step.steplen_int())));
    }

    #[test]
    fn greedy_step_squares() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let bx = FeasibleBox::bounded(a.clone(), IntVec::from_i64(&[3]), &IntVec::from_i64(&[3, 3]))
            .unwrap();
        let g = graver(&a);
        let z = IntVec::from_i64(&[3, 0]);
        let step = greedy_step(&z, g.elements(), &squares(2), &bx).unwrap();
        assert_eq!(step.direction, IntVec::from_i64(&[-1, 1]));
        assert_eq!(step.steplen, r(1, 1));
        assert_eq!(step.new_value, r(5, 1));
        let opt = IntVec::from_i64(&[2, 1]);
        assert!(greedy_step(&opt, g.elements(), &squares(2), &bx).unwrap().is_zero());
    }

    #[test]
    fn solve_ip_examples() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let bx = FeasibleBox::bounded(a.clone(), IntVec::from_i64(&[3]), &IntVec::from_i64(&[3, 3]))
            .unwrap();
        let g = graver(&a);
        let (z, trace) =
            solve_ip_greedy(&IntVec::from_i64(&[3, 0]), &g, &squares(2), &bx).unwrap();
        assert_eq!(z, IntVec::from_i64(&[2, 1]));
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.final_value(), Some(&r(5, 1)));
        let (z, trace) =
            solve_ip_greedy(&IntVec::from_i64(&[2, 1]), &g, &squares(2), &bx).unwrap();
        assert_eq!(z, IntVec::from_i64(&[2, 1]));
        assert!(trace.is_empty());
        let lin = Objective::Linear(LinearObjective::from_int(&IntVec::from_i64(&[1, 2])));
        let (z, _) = solve_ip_greedy(&IntVec::from_i64(&[0, 3]), &g, &lin, &bx).unwrap();
        assert_eq!(z, IntVec::from_i64(&[3, 0]));
        assert_eq!(lin.eval_int(&z).unwrap(), r(3, 1));
    }

    #[test]
    fn linear_and_composite_paths_agree() {
        let a = example_matrix();
        let bx = FeasibleBox::bounded(
            a.clone(),
            IntVec::from_i64(&[2, 2, 1]),
            &IntVec::from_i64(&[2, 2, 1, 2, 2, 1]),
        )
        .unwrap();
        let g = graver(&a);
        let c = IntVec::from_i64(&[1, 1, -1, 0, 0, 0]);
        let lin = Objective::Linear(LinearObjective::from_int(&c));
        let comp = Objective::Composite(CompositeObjective::new(c, vec![]).unwrap());
        let z0 = IntVec::from_i64(&[0, 1, 0, 1, 0, 1]);
        let (z1, t1) = solve_ip_greedy(&z0, &g, &lin, &bx).unwrap();
        let (z2, t2) = solve_ip_greedy(&z0, &g, &comp, &bx).unwrap();
        assert_eq!(z1, z2);
        assert_eq!(t1.iterations, t2.iterations);
        assert_eq!(z1, IntVec::from_i64(&[0, 0, 1, 2, 2, 0]));
    }

    #[test]
    fn lp_example() {
        let a = example_matrix();
        let bx = FeasibleBox::nonnegative(a.clone(), IntVec::from_i64(&[2, 2, 1])).unwrap();
        let cs = circuits(&a);
        let c = example_cost();
        let z0 = IntVec::from_i64(&[0, 1, 0, 1, 0, 1]).to_rat();
        let (z, trace) = solve_lp_circuit(&z0, &cs, &c, &bx).unwrap();
        assert_eq!(z, IntVec::from_i64(&[0, 0, 1, 2, 2, 0]).to_rat());
        assert_eq!(trace.final_value(), Some(&r(-1, 1)));

        let z0 = IntVec::from_i64(&[0, 0, 0, 2, 2, 1]).to_rat();
        let (z, trace) = solve_lp_circuit(&z0, &cs, &c, &bx).unwrap();
        assert_eq!(z, IntVec::from_i64(&[0, 0, 1, 2, 2, 0]).to_rat());
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.iterations[0].direction, IntVec::from_i64(&[0, 0, 1, 0, 0, -1]));

        let (z2, trace) = solve_lp_circuit(&z, &cs, &c, &bx).unwrap();
        assert_eq!(z2, z);
        assert!(trace.is_empty());
    }

    #[test]
    fn lp_from_interior_point() {
        let a = example_matrix();
        let bx = FeasibleBox::nonnegative(a.clone(), IntVec::from_i64(&[2, 2, 1])).unwrap();
        let z0 = RatVec::from_fractions(&[(1, 3), (1, 3), (1, 2), (1, 1), (1, 1), (1, 2)]);
        assert!(bx.is_feasible_rat(&z0));
        let (z, trace) = solve_lp_circuit(&z0, &circuits(&a), &example_cost(), &bx).unwrap();
        assert_eq!(example_cost().dot(&z), r(-1, 1));
        assert!(trace.iterations.iter().any(|s| s.kind == StepKind::Shrink));
    }

    #[test]
    fn zigzag_halves() {
        let a = example_matrix();
        let bx = FeasibleBox::nonnegative(a, IntVec::from_i64(&[2, 2, 1])).unwrap();
        let d1 = IntVec::from_i64(&[1, -2, 0, 0, 3, 0]);
        let d2 = IntVec::from_i64(&[2, -1, 0, -3, 0, 0]);
        let mut dirs = vec![-&d1, d1, -&d2, d2];
        dirs.sort();
        let z0 = IntVec::from_i64(&[0, 1, 0, 1, 0, 1]).to_rat();
        let (_, trace) = zigzag(&z0, &dirs, &example_cost(), &bx, 10).unwrap();
        assert_eq!(trace.len(), 10);
        for (k, s) in trace.iterations.iter().enumerate() {
            assert_eq!(s.value_before, r(1, 1 << k));
            assert_eq!(s.value_after, r(1, 1 << (k + 1)));
        }
    }

    #[test]
    fn unbounded_detection() {
        let a = IntMat::from_rows(&[vec![1, -1]]);
        let bx = FeasibleBox::nonnegative(a.clone(), IntVec::from_i64(&[0])).unwrap();
        let obj = Objective::Linear(LinearObjective::from_int(&IntVec::from_i64(&[-1, 0])));
        let g = graver(&a);
        assert!(matches!(
            solve_ip_greedy(&IntVec::zeros(2), &g, &obj, &bx),
            Err(AugmentError::UnboundedObjective(_))
        ));
        let cs = circuits(&a);
        assert!(matches!(
            solve_lp_circuit(&RatVec::zeros(2), &cs, &IntVec::from_i64(&[-1, 0]).to_rat(), &bx),
            Err(AugmentError::UnboundedObjective(_))
        ));
        // Convex objectives on unbounded rays still terminate.
        let (z, _) = solve_ip_greedy(&IntVec::zeros(2), &g, &squares(2), &bx).unwrap();
        assert_eq!(z, IntVec::zeros(2));
    }

    #[test]
    fn phase_one() {
        let a = IntMat::from_rows(&[vec![2, 3, 1]]);
        let bx = FeasibleBox::bounded(a.clone(), IntVec::from_i64(&[7]), &IntVec::from_i64(&[1, 1, 1]))
            .unwrap();
        let dirs = graver(&a).directions();
        assert_eq!(find_feasible(&bx, &dirs), Err(AugmentError::Infeasible));
        let bx = FeasibleBox::bounded(a.clone(), IntVec::from_i64(&[6]), &IntVec::from_i64(&[1, 1, 1]))
            .unwrap();
        let z = find_feasible(&bx, &dirs).unwrap();
        assert_eq!(z, IntVec::from_i64(&[1, 1, 1]));
        let parity = FeasibleBox::bounded(
            IntMat::from_rows(&[vec![2, 2]]),
            IntVec::from_i64(&[3]),
            &IntVec::from_i64(&[5, 5]),
        )
        .unwrap();
        assert_eq!(find_feasible(&parity, &[]), Err(AugmentError::Infeasible));
    }
}
