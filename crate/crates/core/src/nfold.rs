//! N-fold integer programs.
//!
//! ```text
//! min Σ_i f_i(x_i)   s.t.  Σ_i B x_i = b0,  A x_i = b_i,  0 <= x_i <= u_i
//! ```
//!
//! with `f_i(x) = c_i·x + Σ_j f_ij(c_j·x)` and rows `c_1..c_s` shared by all
//! blocks. The constraint matrix is the N-fold matrix `[A, B]^(N)`. The types
//! (number of nonzero blocks) of its Graver elements are bounded by a
//! constant `g(A, B)` independent of `N`, so `G([A, B]^(N))` is obtained by
//! placing the blocks of `G([A, B]^(g))` into `N` slots.

use num_bigint::BigInt;
use rayon::prelude::*;
use thiserror::Error;

use crate::augment::{augment_to_optimum, find_feasible, sebo_bound, AugmentError, AugmentTrace, FeasibleBox};
use crate::graver::{graver, is_coordinate_selection, GraverBasis};
use crate::linalg::{check_dim, IntMat, IntVec, LinalgError, Rat};
use crate::objective::{CompositeObjective, Objective, ObjectiveError, UnivariateConvex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NFoldError {
    #[error("maximum type did not stabilize up to N = {0}")]
    NotStabilized(usize),
    #[error("lifting needs N >= {bound}, got {n}")]
    NTooSmall { n: usize, bound: usize },
    #[error("block objectives must share the rows c_1..c_s")]
    RowMismatch,
    #[error("N must be at least 1")]
    NoBlocks,
    #[error("no feasible point")]
    Infeasible,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Augment(AugmentError),
}

impl From<AugmentError> for NFoldError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Infeasible => NFoldError::Infeasible,
            e => NFoldError::Augment(e),
        }
    }
}

/// `[A, B]^(N)`: `B` repeated along the top, `A` down the diagonal.
pub fn build_nfold_matrix(a: &IntMat, b: &IntMat, n_blocks: usize) -> Result<IntMat, LinalgError> {
    check_dim(a.cols(), b.cols())?;
    let (da, db, n) = (a.rows(), b.rows(), a.cols());
    let mut m = IntMat::zeros(db + n_blocks * da, n_blocks * n);
    for k in 0..n_blocks {
        m.set_block(0, k * n, b);
        m.set_block(db + k * da, k * n, a);
    }
    Ok(m)
}

/// Number of nonzero blocks of width `n`.
pub fn block_type(v: &IntVec, n: usize) -> usize {
    v.entries().chunks(n).filter(|c| c.iter().any(|e| e.sign() != num_bigint::Sign::NoSign)).count()
}

/// A vector split into `N` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockVector {
    pub blocks: Vec<IntVec>,
}

impl BlockVector {
    pub fn from_flat(v: &IntVec, n: usize) -> Self {
        BlockVector {
            blocks: v.entries().chunks(n.max(1)).map(|c| IntVec::new(c.to_vec())).collect(),
        }
    }

    pub fn flatten(&self) -> IntVec {
        self.blocks.iter().flat_map(|b| b.iter().cloned()).collect()
    }

    /// Number of nonzero blocks.
    pub fn block_type(&self) -> usize {
        self.blocks.iter().filter(|b| !b.is_zero()).count()
    }
}

/// `([A, B], C)^(N)` in the printed layout together with the permutation that
/// turns it into the N-fold matrix `[Ā, B̄]^(N)` with `Ā = [[A, 0], [C, I_s]]`
/// and `B̄ = [B, 0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedNFold {
    /// Rows: coupling, then all `A` blocks, then all `C` blocks. Columns: all
    /// `x` blocks, then all slack blocks.
    pub printed: IntMat,
    /// `[Ā, B̄]^(N)`.
    pub nfold: IntMat,
    /// `printed[r][c] == nfold[row_map[r]][col_map[c]]`.
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
    pub a_bar: IntMat,
    pub b_bar: IntMat,
}

pub fn compose_with_c(
    a: &IntMat,
    b: &IntMat,
    c: &IntMat,
    n_blocks: usize,
) -> Result<ComposedNFold, LinalgError> {
    check_dim(a.cols(), b.cols())?;
    check_dim(a.cols(), c.cols())?;
    let (da, db, n, s) = (a.rows(), b.rows(), a.cols(), c.rows());
    let nb = n_blocks;
    let mut printed = IntMat::zeros(db + nb * (da + s), nb * (n + s));
    for k in 0..nb {
        printed.set_block(0, k * n, b);
        printed.set_block(db + k * da, k * n, a);
        printed.set_block(db + nb * da + k * s, k * n, c);
        printed.set_block(db + nb * da + k * s, nb * n + k * s, &IntMat::identity(s));
    }
    let a_bar = crate::graver::composite_matrix(a, c)?;
    let b_bar = b.hstack(&IntMat::zeros(db, s))?;
    let nfold = build_nfold_matrix(&a_bar, &b_bar, nb)?;
    let row_map = (0..printed.rows())
        .map(|r| {
            if r < db {
                r
            } else if r < db + nb * da {
                let t = r - db;
                db + (t / da) * (da + s) + t % da
            } else {
                let t = r - db - nb * da;
                db + (t / s) * (da + s) + da + t % s
            }
        })
        .collect();
    let col_map = (0..printed.cols())
        .map(|col| {
            if col < nb * n {
                (col / n) * (n + s) + col % n
            } else {
                let t = col - nb * n;
                (t / s) * (n + s) + n + t % s
            }
        })
        .collect();
    Ok(ComposedNFold {
        printed,
        nfold,
        row_map,
        col_map,
        a_bar,
        b_bar,
    })
}

/// Graver elements of `[A, B]^(g)` serving as templates for every `N >= g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedGraver {
    pub a: IntMat,
    pub b: IntMat,
    pub generator_type_bound: usize,
    /// `G([A, B]^(g))`, sorted by type and then canonically.
    pub seed_elements: Vec<IntVec>,
}

impl LiftedGraver {
    pub fn block_width(&self) -> usize {
        self.a.cols()
    }
}

fn max_type(basis: &GraverBasis, n: usize) -> usize {
    basis
        .elements()
        .iter()
        .map(|e| block_type(e, n))
        .max()
        .unwrap_or(0)
}

/// Detects `g(A, B)` as the smallest `g <= cap` such that no element of
/// `G([A, B]^(g+1))` has type above `g`, and keeps `G([A, B]^(g))` as seed.
pub fn detect_complexity(a: &IntMat, b: &IntMat, cap: usize) -> Result<LiftedGraver, NFoldError> {
    check_dim(a.cols(), b.cols())?;
    let n = a.cols();
    let mut prev = graver(&build_nfold_matrix(a, b, 1)?);
    for g in 1..=cap {
        let next = graver(&build_nfold_matrix(a, b, g + 1)?);
        let t = max_type(&next, n);
        log::debug!("max type at N = {}: {}", g + 1, t);
        if t <= g {
            let mut seed = prev.elements().to_vec();
            seed.sort_by(|x, y| block_type(x, n).cmp(&block_type(y, n)).then_with(|| x.cmp(y)));
            return Ok(LiftedGraver {
                a: a.clone(),
                b: b.clone(),
                generator_type_bound: g,
                seed_elements: seed,
            });
        }
        prev = next;
    }
    Err(NFoldError::NotStabilized(cap))
}

/// The Graver complexity `g(A, B)` as detected by [`detect_complexity`].
pub fn graver_complexity(a: &IntMat, b: &IntMat, cap: usize) -> Result<usize, NFoldError> {
    Ok(detect_complexity(a, b, cap)?.generator_type_bound)
}

/// Calls `f` with every increasing sequence of `k` slots out of `n`.
fn for_each_placement(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..=n - (k - cur.len()) {
        cur.push(i);
        for_each_placement(n, k, i + 1, cur, f);
        cur.pop();
    }
}

/// `G([A, B]^(N))` by placing the nonzero blocks of every seed element into
/// `N` slots in every order-preserving way.
pub fn lift_graver(seed: &LiftedGraver, n_blocks: usize) -> Result<GraverBasis, NFoldError> {
    let g = seed.generator_type_bound;
    if n_blocks < g {
        return Err(NFoldError::NTooSmall { n: n_blocks, bound: g });
    }
    let n = seed.block_width();
    let matrix = build_nfold_matrix(&seed.a, &seed.b, n_blocks)?;
    let per_seed: Vec<Vec<IntVec>> = seed
        .seed_elements
        .par_iter()
        .map(|e| {
            let parts: Vec<&[BigInt]> = e
                .entries()
                .chunks(n)
                .filter(|c| c.iter().any(|x| x.sign() != num_bigint::Sign::NoSign))
                .collect();
            let mut out = Vec::new();
            let mut cur = Vec::new();
            for_each_placement(n_blocks, parts.len(), 0, &mut cur, &mut |slots| {
                let mut v = vec![BigInt::from(0); n_blocks * n];
                for (part, &slot) in parts.iter().zip(slots) {
                    v[slot * n..(slot + 1) * n].clone_from_slice(part);
                }
                out.push(IntVec::new(v));
            });
            out
        })
        .collect();
    let elements = per_seed.into_iter().flatten().collect();
    Ok(GraverBasis::from_parts(matrix, n_blocks * n, elements))
}

/// Per-block objective data: the linear part and one function per shared row.
#[derive(Debug, Clone, PartialEq)]
pub struct NFoldInstance {
    a: IntMat,
    b: IntMat,
    n_blocks: usize,
    b0: IntVec,
    rhs: Vec<IntVec>,
    upper: Vec<IntVec>,
    objective: Vec<CompositeObjective>,
}

impl NFoldInstance {
    pub fn new(
        a: IntMat,
        b: IntMat,
        b0: IntVec,
        rhs: Vec<IntVec>,
        upper: Vec<IntVec>,
        objective: Vec<CompositeObjective>,
    ) -> Result<Self, NFoldError> {
        let n_blocks = rhs.len();
        if n_blocks == 0 {
            return Err(NFoldError::NoBlocks);
        }
        let n = a.cols();
        check_dim(n, b.cols())?;
        check_dim(b.rows(), b0.dim())?;
        check_dim(n_blocks, upper.len())?;
        check_dim(n_blocks, objective.len())?;
        for i in 0..n_blocks {
            check_dim(a.rows(), rhs[i].dim())?;
            check_dim(n, upper[i].dim())?;
            check_dim(n, objective[i].dim())?;
            if objective[i].row_matrix() != objective[0].row_matrix() {
                return Err(NFoldError::RowMismatch);
            }
        }
        Ok(NFoldInstance {
            a,
            b,
            n_blocks,
            b0,
            rhs,
            upper,
            objective,
        })
    }

    /// Same objective in every block.
    pub fn uniform(
        a: IntMat,
        b: IntMat,
        b0: IntVec,
        rhs: Vec<IntVec>,
        upper: Vec<IntVec>,
        objective: CompositeObjective,
    ) -> Result<Self, NFoldError> {
        let objs = vec![objective; rhs.len()];
        Self::new(a, b, b0, rhs, upper, objs)
    }

    /// The same instance with different block objectives.
    pub fn with_objectives(self, objective: Vec<CompositeObjective>) -> Result<Self, NFoldError> {
        Self::new(self.a, self.b, self.b0, self.rhs, self.upper, objective)
    }

    pub fn a(&self) -> &IntMat {
        &self.a
    }

    pub fn b(&self) -> &IntMat {
        &self.b
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_width(&self) -> usize {
        self.a.cols()
    }

    pub fn b0(&self) -> &IntVec {
        &self.b0
    }

    pub fn rhs(&self) -> &[IntVec] {
        &self.rhs
    }

    pub fn upper(&self) -> &[IntVec] {
        &self.upper
    }

    pub fn objectives(&self) -> &[CompositeObjective] {
        &self.objective
    }

    /// The shared rows `c_1..c_s` as an `s × n` matrix.
    pub fn c_rows(&self) -> IntMat {
        self.objective[0].row_matrix()
    }

    pub fn matrix(&self) -> IntMat {
        build_nfold_matrix(&self.a, &self.b, self.n_blocks).expect("dims checked at construction")
    }

    /// `(b0, b_1, ..., b_N)`.
    pub fn full_rhs(&self) -> IntVec {
        let mut v = self.b0.clone();
        for r in &self.rhs {
            v = v.concat(r);
        }
        v
    }

    pub fn feasible_box(&self) -> FeasibleBox {
        let upper = self.upper.iter().flat_map(|u| u.iter().cloned()).collect::<IntVec>();
        FeasibleBox::bounded(self.matrix(), self.full_rhs(), &upper).expect("dims checked at construction")
    }

    /// The objective on the flattened variables.
    pub fn flat_objective(&self) -> Objective {
        let (nb, n) = (self.n_blocks, self.block_width());
        let mut c = IntVec::zeros(0);
        let mut rows: Vec<(IntVec, UnivariateConvex)> = Vec::new();
        for (k, obj) in self.objective.iter().enumerate() {
            c = c.concat(obj.linear_part());
            for (cj, f) in obj.rows() {
                let mut row = vec![BigInt::from(0); nb * n];
                row[k * n..(k + 1) * n].clone_from_slice(cj.entries());
                rows.push((IntVec::new(row), f.clone()));
            }
        }
        Objective::Composite(CompositeObjective::new(c, rows).expect("row dims match"))
    }

    pub fn is_feasible(&self, x: &BlockVector) -> bool {
        self.feasible_box().is_feasible_int(&x.flatten())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NFoldOptions {
    /// Largest `N` tried when detecting the Graver complexity.
    pub graver_cap: usize,
    /// Compute the Graver basis directly when the number of columns of the
    /// N-fold matrix is at most this.
    pub direct_threshold: usize,
}

impl Default for NFoldOptions {
    fn default() -> Self {
        NFoldOptions {
            graver_cap: 6,
            direct_threshold: 24,
        }
    }
}

/// The augmentation directions for an instance together with the detected
/// Graver complexity (when lifting was used).
#[derive(Debug, Clone)]
pub struct NFoldDirections {
    pub directions: Vec<IntVec>,
    pub basis_size: usize,
    pub complexity: Option<usize>,
}

fn nfold_basis(a: &IntMat, b: &IntMat, nb: usize, opts: &NFoldOptions) -> Result<(GraverBasis, Option<usize>), NFoldError> {
    if nb * a.cols() <= opts.direct_threshold {
        Ok((graver(&build_nfold_matrix(a, b, nb)?), None))
    } else {
        let seed = detect_complexity(a, b, opts.graver_cap)?;
        let g = seed.generator_type_bound;
        if nb < g {
            Ok((graver(&build_nfold_matrix(a, b, nb)?), Some(g)))
        } else {
            Ok((lift_graver(&seed, nb)?, Some(g)))
        }
    }
}

/// `G([A, B]^(N))`, or the projection of `G(([A, B], C)^(N))` when the
/// shared rows are not coordinate selections.
pub fn nfold_directions(inst: &NFoldInstance, opts: &NFoldOptions) -> Result<NFoldDirections, NFoldError> {
    let c = inst.c_rows();
    let (nb, n) = (inst.n_blocks, inst.block_width());
    if c.rows() == 0 || is_coordinate_selection(&c) {
        let (basis, complexity) = nfold_basis(&inst.a, &inst.b, nb, opts)?;
        return Ok(NFoldDirections {
            basis_size: basis.len(),
            directions: basis.directions(),
            complexity,
        });
    }
    let s = c.rows();
    let composed = compose_with_c(&inst.a, &inst.b, &c, 1)?;
    let (basis, complexity) = nfold_basis(&composed.a_bar, &composed.b_bar, nb, opts)?;
    let mut dirs: Vec<IntVec> = basis
        .elements()
        .iter()
        .map(|e| {
            (0..nb)
                .flat_map(|k| e.entries()[k * (n + s)..k * (n + s) + n].iter().cloned())
                .collect::<IntVec>()
        })
        .filter(|d| !d.is_zero())
        .collect();
    dirs.sort();
    dirs.dedup();
    Ok(NFoldDirections {
        basis_size: basis.len(),
        directions: dirs,
        complexity,
    })
}

/// A feasible point, by minimizing the total bound violation from an integer
/// solution of the equations.
pub fn phase_one(inst: &NFoldInstance, opts: &NFoldOptions) -> Result<BlockVector, NFoldError> {
    let dirs = nfold_directions(inst, opts)?;
    phase_one_with(inst, &dirs.directions)
}

fn phase_one_with(inst: &NFoldInstance, dirs: &[IntVec]) -> Result<BlockVector, NFoldError> {
    let z = find_feasible(&inst.feasible_box(), dirs)?;
    Ok(BlockVector::from_flat(&z, inst.block_width()))
}

#[derive(Debug, Clone)]
pub struct NFoldSolution {
    pub point: BlockVector,
    pub value: Rat,
    pub trace: AugmentTrace,
    pub basis_size: usize,
    pub complexity: Option<usize>,
}

/// Phase one, then greedy augmentation over the N-fold Graver basis.
pub fn solve_nfold(inst: &NFoldInstance, opts: &NFoldOptions) -> Result<NFoldSolution, NFoldError> {
    let dirs = nfold_directions(inst, opts)?;
    solve_nfold_with(inst, &dirs)
}

/// [`solve_nfold`] with precomputed directions, for many instances sharing
/// `A`, `B`, `N` and the objective rows.
pub fn solve_nfold_with(inst: &NFoldInstance, dirs: &NFoldDirections) -> Result<NFoldSolution, NFoldError> {
    let start = phase_one_with(inst, &dirs.directions)?;
    let obj = inst.flat_objective();
    let n_eff = sebo_bound(inst.n_blocks * (inst.block_width() + inst.c_rows().rows()));
    let (z, trace) = augment_to_optimum(&start.flatten(), &dirs.directions, &obj, &inst.feasible_box(), n_eff)?;
    let value = obj.eval_int(&z)?;
    Ok(NFoldSolution {
        point: BlockVector::from_flat(&z, inst.block_width()),
        value,
        trace,
        basis_size: dirs.basis_size,
        complexity: dirs.complexity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kernel_basis;

    #[test]
    fn nfold_matrix_examples() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let b = IntMat::from_rows(&[vec![1, 0]]);
        assert_eq!(
            build_nfold_matrix(&a, &b, 2).unwrap(),
            IntMat::from_rows(&[vec![1, 0, 1, 0], vec![1, 1, 0, 0], vec![0, 0, 1, 1]])
        );
        assert_eq!(build_nfold_matrix(&a, &b, 1).unwrap(), b.vstack(&a).unwrap());
        let m = build_nfold_matrix(&a, &IntMat::identity(2), 3).unwrap();
        assert_eq!((m.rows(), m.cols()), (5, 6));
        for v in kernel_basis(&m) {
            let blocks = BlockVector::from_flat(&v, 2);
            for x in &blocks.blocks {
                assert!(a.mul_vec(x).unwrap().is_zero());
            }
            let coupled = blocks.blocks.iter().fold(IntVec::zeros(2), |s, x| &s + x);
            assert!(coupled.is_zero());
        }
        assert!(build_nfold_matrix(&a, &IntMat::identity(3), 2).is_err());
    }

    #[test]
    fn compose_permutation() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let b = IntMat::from_rows(&[vec![1, 0]]);
        let c = IntMat::from_rows(&[vec![1, 0]]);
        let comp = compose_with_c(&a, &b, &c, 2).unwrap();
        assert_eq!(comp.a_bar, IntMat::from_rows(&[vec![1, 1, 0], vec![1, 0, 1]]));
        assert_eq!(comp.b_bar, IntMat::from_rows(&[vec![1, 0, 0]]));
        for r in 0..comp.printed.rows() {
            for col in 0..comp.printed.cols() {
                assert_eq!(comp.printed.get(r, col), comp.nfold.get(comp.row_map[r], comp.col_map[col]));
            }
        }
        assert_eq!(comp.printed.rank(), comp.nfold.rank());
        let plain = compose_with_c(&a, &b, &IntMat::zeros(0, 2), 3).unwrap();
        assert_eq!(plain.printed, build_nfold_matrix(&a, &b, 3).unwrap());
    }

    #[test]
    fn complexity_and_lifting() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let b = IntMat::from_rows(&[vec![1, 0]]);
        let seed = detect_complexity(&a, &b, 6).unwrap();
        assert_eq!(seed.generator_type_bound, 2);
        for nb in 2..=5 {
            let lifted = lift_graver(&seed, nb).unwrap();
            let direct = graver(&build_nfold_matrix(&a, &b, nb).unwrap());
            assert_eq!(lifted.elements(), direct.elements());
        }
        assert!(matches!(lift_graver(&seed, 1), Err(NFoldError::NTooSmall { .. })));
        let zero_b = IntMat::zeros(1, 2);
        assert_eq!(graver_complexity(&a, &zero_b, 4).unwrap(), 1);
        let lifted = lift_graver(&detect_complexity(&a, &zero_b, 4).unwrap(), 3).unwrap();
        assert_eq!(lifted.len(), 6);
    }

    #[test]
    fn small_solve() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let b = IntMat::from_rows(&[vec![1, 0]]);
        let sq = CompositeObjective::separable(vec![UnivariateConvex::square(); 2]);
        let inst = NFoldInstance::uniform(
            a,
            b,
            IntVec::from_i64(&[1]),
            vec![IntVec::from_i64(&[2]), IntVec::from_i64(&[2])],
            vec![IntVec::from_i64(&[5, 5]); 2],
            sq,
        )
        .unwrap();
        let sol = solve_nfold(&inst, &NFoldOptions::default()).unwrap();
        assert!(inst.is_feasible(&sol.point));
        // x_11 + x_21 = 1 with blocks summing to 2: best is {(1,1),(0,2)}
        assert_eq!(sol.value, Rat::from_integer(BigInt::from(6)));

        let bad = NFoldInstance::uniform(
            IntMat::from_rows(&[vec![1, 1]]),
            IntMat::from_rows(&[vec![1, 0]]),
            IntVec::from_i64(&[0]),
            vec![IntVec::from_i64(&[-1])],
            vec![IntVec::from_i64(&[3, 3])],
            CompositeObjective::separable(vec![UnivariateConvex::Zero; 2]),
        )
        .unwrap();
        assert!(matches!(phase_one(&bad, &NFoldOptions::default()), Err(NFoldError::Infeasible)));
    }
}
