//! Circuits, Graver bases and conformal decompositions.
//!
//! The Graver basis of `A` is the set of ⊑-minimal nonzero vectors of the
//! lattice `ker(A) ∩ Z^n`, where `u ⊑ v` means `u` lies in the same orthant
//! as `v` and `|u_i| <= |v_i|` for all `i`. It is computed by a completion
//! procedure: start from a lattice basis together with its negation, and keep
//! adding normal forms of pairwise sums until every sum reduces to zero.
//! The circuits are the support-minimal primitive kernel vectors and are
//! found by enumerating supports.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{check_dim, kernel_basis, IntMat, IntVec, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraverError {
    #[error("vector is not in the kernel of the matrix")]
    NotInKernel,
    #[error("no conformal decomposition with at most {0} terms")]
    BoundExceeded(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Circuits of a matrix, closed under negation, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSet {
    matrix: IntMat,
    elements: Vec<IntVec>,
}

impl CircuitSet {
    pub fn matrix(&self) -> &IntMat {
        &self.matrix
    }

    pub fn elements(&self) -> &[IntVec] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, v: &IntVec) -> bool {
        self.elements.binary_search(v).is_ok()
    }
}

/// A Graver basis, closed under negation, in canonical order.
///
/// For a composite basis `G(A, C)` the stored elements live in the kernel of
/// `[[A, 0], [C, I_s]]` and have `n + s` entries; [`GraverBasis::directions`]
/// returns their projections onto the first `n` coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraverBasis {
    matrix: IntMat,
    projected_dim: usize,
    elements: Vec<IntVec>,
}

impl GraverBasis {
    /// Assembles a basis from precomputed elements (sorted and deduplicated
    /// here). No minimality check is performed.
    pub fn from_parts(matrix: IntMat, projected_dim: usize, mut elements: Vec<IntVec>) -> Self {
        elements.sort();
        elements.dedup();
        GraverBasis {
            matrix,
            projected_dim,
            elements,
        }
    }

    pub fn matrix(&self) -> &IntMat {
        &self.matrix
    }

    pub fn elements(&self) -> &[IntVec] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_composite(&self) -> bool {
        self.projected_dim < self.matrix.cols()
    }

    /// Number of problem variables the directions act on.
    pub fn dim(&self) -> usize {
        self.projected_dim
    }

    pub fn contains(&self, v: &IntVec) -> bool {
        self.elements.binary_search(v).is_ok()
    }

    /// Projected elements in canonical order.
    pub fn directions(&self) -> Vec<IntVec> {
        if !self.is_composite() {
            return self.elements.clone();
        }
        let mut d: Vec<IntVec> = self
            .elements
            .iter()
            .map(|e| e.slice(0..self.projected_dim))
            .collect();
        d.sort();
        d.dedup();
        d
    }

    /// Extends a problem-space vector `v` to `(v, -C v)`; identity for plain
    /// bases.
    pub fn lift(&self, v: &IntVec) -> Result<IntVec, LinalgError> {
        let n = self.projected_dim;
        let total = self.matrix.cols();
        if v.dim() == total {
            return Ok(v.clone());
        }
        check_dim(n, v.dim())?;
        let s = total - n;
        let d = self.matrix.rows() - s;
        let slack: IntVec = (0..s)
            .map(|k| {
                -(0..n)
                    .map(|c| self.matrix.get(d + k, c) * &v[c])
                    .sum::<BigInt>()
            })
            .collect();
        Ok(v.concat(&slack))
    }
}

fn negation_closed(mut elements: Vec<IntVec>) -> Vec<IntVec> {
    let negs: Vec<IntVec> = elements.iter().map(|e| -e).collect();
    elements.extend(negs);
    elements.sort();
    elements.dedup();
    elements
}

/// All circuits of `a`, with negations, in canonical order.
pub fn circuits(a: &IntMat) -> CircuitSet {
    let n = a.cols();
    let max_size = (a.rank() + 1).min(n);
    let mut found = Vec::new();
    let mut subset = Vec::with_capacity(n);
    for size in 1..=max_size {
        for_each_subset(n, size, 0, &mut subset, &mut |cols| {
            let sub = a.select_columns(cols);
            if sub.rank() + 1 != cols.len() {
                return;
            }
            let k = kernel_basis(&sub);
            debug_assert_eq!(k.len(), 1);
            let g = &k[0];
            if g.support_size() != cols.len() {
                return;
            }
            let mut full = IntVec::zeros(n);
            for (pos, &c) in cols.iter().enumerate() {
                full.entries_mut()[c] = g[pos].clone();
            }
            found.push(full.primitive());
        });
    }
    CircuitSet {
        matrix: a.clone(),
        elements: negation_closed(found),
    }
}

fn for_each_subset(
    n: usize,
    size: usize,
    start: usize,
    current: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if current.len() == size {
        f(current);
        return;
    }
    let remaining = size - current.len();
    for i in start..=n - remaining {
        current.push(i);
        for_each_subset(n, size, i + 1, current, f);
        current.pop();
    }
}

/// Reduces `s` by elements `g ⊑ s` until no element of `set` fits below it.
fn normal_form(mut s: IntVec, set: &[IntVec]) -> IntVec {
    'outer: loop {
        if s.is_zero() {
            return s;
        }
        for g in set {
            if g.conformal_le(&s) {
                s = &s - g;
                continue 'outer;
            }
        }
        return s;
    }
}

fn compatible(a: &IntVec, b: &IntVec) -> bool {
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| x.is_zero() || y.is_zero() || x.sign() == y.sign())
}

/// Keeps the ⊑-minimal elements of a set of nonzero vectors.
pub(crate) fn minimal_elements(mut set: Vec<IntVec>) -> Vec<IntVec> {
    set.sort_by_key(|v| v.norm1());
    let mut kept: Vec<IntVec> = Vec::new();
    for v in set {
        if !kept.iter().any(|k| k.conformal_le(&v)) {
            kept.push(v);
        }
    }
    kept.sort();
    kept
}

/// The Graver basis elements of `a` in canonical order.
fn graver_elements(a: &IntMat) -> Vec<IntVec> {
    let basis = kernel_basis(a);
    if basis.is_empty() {
        return Vec::new();
    }
    let mut set: Vec<IntVec> = Vec::new();
    let mut members: HashSet<IntVec> = HashSet::new();
    let mut queue: BinaryHeap<Reverse<(BigInt, IntVec)>> = BinaryHeap::new();

    let add = |v: IntVec,
                   set: &mut Vec<IntVec>,
                   members: &mut HashSet<IntVec>,
                   queue: &mut BinaryHeap<Reverse<(BigInt, IntVec)>>| {
        for g in set.iter() {
            if !compatible(g, &v) {
                let sum = g + &v;
                if !sum.is_zero() {
                    queue.push(Reverse((sum.norm1(), sum)));
                }
            }
        }
        members.insert(v.clone());
        set.push(v);
    };

    for b in &basis {
        for v in [b.clone(), -b] {
            let r = normal_form(v, &set);
            if !r.is_zero() && !members.contains(&r) {
                add(r, &mut set, &mut members, &mut queue);
            }
        }
    }
    while let Some(Reverse((_, s))) = queue.pop() {
        if members.contains(&s) {
            continue;
        }
        let r = normal_form(s, &set);
        if r.is_zero() || members.contains(&r) {
            continue;
        }
        add(r, &mut set, &mut members, &mut queue);
    }
    negation_closed(minimal_elements(set))
}

/// The Graver basis of `a`.
pub fn graver(a: &IntMat) -> GraverBasis {
    GraverBasis {
        matrix: a.clone(),
        projected_dim: a.cols(),
        elements: graver_elements(a),
    }
}

/// `[[A, 0], [C, I_s]]`.
pub fn composite_matrix(a: &IntMat, c: &IntMat) -> Result<IntMat, LinalgError> {
    check_dim(a.cols(), c.cols())?;
    let (d, n, s) = (a.rows(), a.cols(), c.rows());
    let mut m = IntMat::zeros(d + s, n + s);
    m.set_block(0, 0, a);
    m.set_block(d, 0, c);
    m.set_block(d, n, &IntMat::identity(s));
    Ok(m)
}

/// Graver basis of `[[A, 0], [C, I_s]]`, computed directly and projected onto
/// the first `n` coordinates by [`GraverBasis::directions`].
pub fn graver_composite(a: &IntMat, c: &IntMat) -> Result<GraverBasis, LinalgError> {
    let m = composite_matrix(a, c)?;
    let elements = graver_elements(&m);
    Ok(GraverBasis {
        matrix: m,
        projected_dim: a.cols(),
        elements,
    })
}

/// True when every row of `c` is zero or a multiple of a unit vector. For
/// such `c` the conformal order on `(x, -Cx)` coincides with the one on `x`,
/// so `G(A, C)` projects onto `G(A)`.
pub fn is_coordinate_selection(c: &IntMat) -> bool {
    (0..c.rows()).all(|r| c.row_slice(r).iter().filter(|e| !e.is_zero()).count() <= 1)
}

/// `G(A, C)` for use as a direction set. When `c` only selects coordinates
/// the basis is obtained by lifting `G(A)`; otherwise it is computed
/// directly.
pub fn composite_directions(a: &IntMat, c: &IntMat) -> Result<GraverBasis, LinalgError> {
    if c.rows() == 0 {
        return Ok(graver(a));
    }
    if !is_coordinate_selection(c) {
        return graver_composite(a, c);
    }
    let m = composite_matrix(a, c)?;
    let plain = graver(a);
    let shell = GraverBasis {
        matrix: m,
        projected_dim: a.cols(),
        elements: Vec::new(),
    };
    let elements = plain
        .elements
        .iter()
        .map(|g| shell.lift(g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GraverBasis::from_parts(shell.matrix, a.cols(), elements))
}

/// A conformal decomposition `v = Σ coeff_i · dir_i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decomposition {
    pub terms: Vec<(BigInt, IntVec)>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sum(&self, dim: usize) -> IntVec {
        self.terms
            .iter()
            .fold(IntVec::zeros(dim), |acc, (k, d)| acc.add_scaled(d, k))
    }
}

/// Writes `v` as a positive integer combination of at most `bound` distinct
/// basis elements, each conformal to `v`.
///
/// For a composite basis, `v` may be given in problem coordinates; it is
/// lifted to `(v, -Cv)` first and the returned directions are projected
/// back.
pub fn decompose(v: &IntVec, basis: &GraverBasis, bound: usize) -> Result<Decomposition, GraverError> {
    let full = basis.lift(v)?;
    if !basis.matrix.mul_vec(&full)?.is_zero() {
        return Err(GraverError::NotInKernel);
    }
    if full.is_zero() {
        return Ok(Decomposition::default());
    }
    let candidates: Vec<&IntVec> = basis
        .elements
        .iter()
        .filter(|g| g.conformal_le(&full))
        .collect();
    let mut search = DecomposeSearch {
        candidates,
        failed: HashMap::new(),
        terms: Vec::new(),
    };
    if !search.run(full, 0, bound) {
        return Err(GraverError::BoundExceeded(bound));
    }
    let n = basis.projected_dim;
    let terms = search
        .terms
        .into_iter()
        .map(|(k, g)| (k, if basis.is_composite() { g.slice(0..n) } else { g }))
        .collect();
    Ok(Decomposition { terms })
}

struct DecomposeSearch<'a> {
    candidates: Vec<&'a IntVec>,
    // (remainder, first usable candidate) -> largest budget known to fail
    failed: HashMap<(IntVec, usize), usize>,
    terms: Vec<(BigInt, IntVec)>,
}

impl DecomposeSearch<'_> {
    fn run(&mut self, rest: IntVec, start: usize, budget: usize) -> bool {
        if rest.is_zero() {
            return true;
        }
        if budget == 0 {
            return false;
        }
        if let Some(&b) = self.failed.get(&(rest.clone(), start)) {
            if b >= budget {
                return false;
            }
        }
        for idx in start..self.candidates.len() {
            let g = self.candidates[idx];
            if !g.conformal_le(&rest) {
                continue;
            }
            let kmax = max_multiple(g, &rest);
            let mut k = kmax;
            while k >= BigInt::one() {
                let next = rest.add_scaled(g, &-&k);
                self.terms.push((k.clone(), g.clone()));
                if self.run(next, idx + 1, budget - 1) {
                    return true;
                }
                self.terms.pop();
                k -= 1;
            }
        }
        self.failed.insert((rest, start), budget);
        false
    }
}

/// Largest `k` with `k·g ⊑ v`, assuming `g ⊑ v` and `g ≠ 0`.
fn max_multiple(g: &IntVec, v: &IntVec) -> BigInt {
    g.iter()
        .zip(v.iter())
        .filter(|(gi, _)| !gi.is_zero())
        .map(|(gi, vi)| vi.abs() / gi.abs())
        .min()
        .unwrap_or_else(BigInt::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(e: &[i64]) -> IntVec {
        IntVec::from_i64(e)
    }

    fn signed(list: &[&[i64]]) -> Vec<IntVec> {
        negation_closed(list.iter().map(|e| v(e)).collect())
    }

    fn example_matrix() -> IntMat {
        IntMat::from_rows(&[
            vec![2, 1, 0, 1, 0, 0],
            vec![1, 2, 0, 0, 1, 0],
            vec![0, 0, 1, 0, 0, 1],
        ])
    }

    #[test]
    fn circuits_of_example_matrix() {
        let c = circuits(&example_matrix());
        let expected = signed(&[
            &[1, 0, 0, -2, -1, 0],
            &[0, 1, 0, -1, -2, 0],
            &[1, -2, 0, 0, 3, 0],
            &[2, -1, 0, -3, 0, 0],
            &[0, 0, 1, 0, 0, -1],
        ]);
        assert_eq!(c.elements(), &expected[..]);
    }

    #[test]
    fn circuits_small() {
        let c = circuits(&IntMat::from_rows(&[vec![1, 1]]));
        assert_eq!(c.elements(), &signed(&[&[1, -1]])[..]);
        let c = circuits(&IntMat::from_rows(&[vec![1, 1, 1]]));
        assert_eq!(
            c.elements(),
            &signed(&[&[1, -1, 0], &[1, 0, -1], &[0, 1, -1]])[..]
        );
        assert!(circuits(&IntMat::identity(3)).is_empty());
    }

    #[test]
    fn graver_small() {
        assert_eq!(
            graver(&IntMat::from_rows(&[vec![1, 1]])).elements(),
            &signed(&[&[1, -1]])[..]
        );
        assert_eq!(
            graver(&IntMat::from_rows(&[vec![1, 2]])).elements(),
            &signed(&[&[2, -1]])[..]
        );
        assert_eq!(
            graver(&IntMat::from_rows(&[vec![1, 1, 1]])).elements(),
            &signed(&[&[1, -1, 0], &[1, 0, -1], &[0, 1, -1]])[..]
        );
    }

    #[test]
    fn graver_of_twisted_cubic_row() {
        // brute force over [-6, 6]^3
        let g = graver(&IntMat::from_rows(&[vec![1, 2, 3]]));
        let expected = signed(&[&[2, -1, 0], &[3, 0, -1], &[1, 1, -1], &[1, -2, 1], &[0, 3, -2]]);
        assert_eq!(g.elements(), &expected[..]);
        let c = circuits(&IntMat::from_rows(&[vec![1, 2, 3]]));
        for e in c.elements() {
            assert!(g.contains(e));
        }
    }

    #[test]
    fn composite_with_no_rows_is_plain() {
        let a = IntMat::from_rows(&[vec![1, 1, 1]]);
        let c = IntMat::zeros(0, 3);
        let gc = graver_composite(&a, &c).unwrap();
        assert_eq!(gc.directions(), graver(&a).elements());
    }

    #[test]
    fn composite_projection_in_kernel() {
        let a = IntMat::from_rows(&[vec![1, 1]]);
        let c = IntMat::from_rows(&[vec![1, 0]]);
        let gc = graver_composite(&a, &c).unwrap();
        assert!(!gc.is_empty());
        for d in gc.directions() {
            assert!(a.mul_vec(&d).unwrap().is_zero());
        }
        for e in gc.elements() {
            assert!(gc.matrix().mul_vec(e).unwrap().is_zero());
        }
    }

    #[test]
    fn composite_identity_matches_plain() {
        let a = IntMat::from_rows(&[vec![1, 1, 1]]);
        let c = IntMat::identity(3);
        let direct = graver_composite(&a, &c).unwrap();
        assert_eq!(direct.directions(), graver(&a).elements());
        assert_eq!(composite_directions(&a, &c).unwrap(), direct);
    }

    #[test]
    fn composite_general_rows_differ() {
        // C = [1 1 0] is not a coordinate selection; G(A,C) strictly refines.
        let a = IntMat::from_rows(&[vec![1, 1, 1]]);
        let c = IntMat::from_rows(&[vec![1, 1, 0]]);
        let gc = composite_directions(&a, &c).unwrap();
        for d in graver(&a).elements() {
            assert!(gc.directions().contains(d));
        }
    }

    #[test]
    fn decompose_examples() {
        let g = graver(&IntMat::from_rows(&[vec![1, 1]]));
        let d = decompose(&v(&[2, -2]), &g, 2).unwrap();
        assert_eq!(d.terms, vec![(BigInt::from(2), v(&[1, -1]))]);

        let g = graver(&IntMat::from_rows(&[vec![1, 1, 1]]));
        let d = decompose(&v(&[2, -1, -1]), &g, 4).unwrap();
        assert_eq!(d.sum(3), v(&[2, -1, -1]));
        let mut dirs: Vec<_> = d.terms.iter().map(|(_, g)| g.clone()).collect();
        dirs.sort();
        assert_eq!(dirs, vec![v(&[1, -1, 0]), v(&[1, 0, -1])]);

        assert!(decompose(&v(&[0, 0, 0]), &g, 4).unwrap().is_empty());
        assert_eq!(
            decompose(&v(&[1, 0, 0]), &g, 4),
            Err(GraverError::NotInKernel)
        );
    }

    #[test]
    fn decompose_respects_bound() {
        let g = graver(&IntMat::from_rows(&[vec![1, 1, 1]]));
        assert_eq!(
            decompose(&v(&[2, -1, -1]), &g, 1),
            Err(GraverError::BoundExceeded(1))
        );
    }
}
