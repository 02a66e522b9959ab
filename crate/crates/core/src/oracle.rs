//! Exhaustive enumeration of the integer points of a bounded box, used as
//! ground truth for the solvers.
//!
//! Coordinates are fixed in order by depth-first search. A partial point is
//! dropped as soon as some equation can no longer be met by the remaining
//! coordinates, so the work is closer to the number of feasible points than
//! to the size of the box.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::augment::{AugmentError, FeasibleBox};
use crate::linalg::{IntMat, IntVec, Rat};
use crate::objective::{Objective, ObjectiveError};

pub const DEFAULT_CELL_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search visits more than {0} nodes")]
    SearchSpaceTooLarge(u64),
    #[error("coordinate {0} has no finite upper bound")]
    UnboundedBox(usize),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Lexicographically first minimizer and the minimum, if feasible.
    pub optimum: Option<(IntVec, Rat)>,
    pub feasible_points: u64,
    pub nodes: u64,
}

struct Search<'a> {
    bx: &'a FeasibleBox,
    lo: Vec<BigInt>,
    hi: Vec<BigInt>,
    // suffix_min[p][r] = min of Σ_{q >= p} a_rq z_q over the box
    suffix_min: Vec<Vec<BigInt>>,
    suffix_max: Vec<Vec<BigInt>>,
    cap: u64,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn new(bx: &'a FeasibleBox, cap: u64) -> Result<Self, OracleError> {
        let n = bx.dim();
        let lo = bx.lower().entries().to_vec();
        let hi = bx
            .upper_int()
            .into_iter()
            .enumerate()
            .map(|(i, u)| u.ok_or(OracleError::UnboundedBox(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let a = bx.matrix();
        let m = a.rows();
        let mut suffix_min = vec![vec![BigInt::zero(); m]; n + 1];
        let mut suffix_max = vec![vec![BigInt::zero(); m]; n + 1];
        for p in (0..n).rev() {
            for r in 0..m {
                let c = a.get(r, p);
                let (x, y) = (c * &lo[p], c * &hi[p]);
                let (mn, mx) = if x <= y { (x, y) } else { (y, x) };
                suffix_min[p][r] = &suffix_min[p + 1][r] + mn;
                suffix_max[p][r] = &suffix_max[p + 1][r] + mx;
            }
        }
        Ok(Search {
            bx,
            lo,
            hi,
            suffix_min,
            suffix_max,
            cap,
            nodes: 0,
        })
    }

    fn run(&mut self, visit: &mut dyn FnMut(&[BigInt]) -> Result<(), OracleError>) -> Result<(), OracleError> {
        let n = self.bx.dim();
        if self.lo.iter().zip(&self.hi).any(|(l, h)| l > h) {
            return Ok(());
        }
        let mut z = self.lo.clone();
        let resid = self.bx.rhs().entries().to_vec();
        self.dfs(0, n, &mut z, resid, visit)
    }

    fn dfs(
        &mut self,
        p: usize,
        n: usize,
        z: &mut Vec<BigInt>,
        resid: Vec<BigInt>,
        visit: &mut dyn FnMut(&[BigInt]) -> Result<(), OracleError>,
    ) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(OracleError::SearchSpaceTooLarge(self.cap));
        }
        let reachable = resid
            .iter()
            .enumerate()
            .all(|(r, v)| &self.suffix_min[p][r] <= v && v <= &self.suffix_max[p][r]);
        if !reachable {
            return Ok(());
        }
        if p == n {
            return visit(z);
        }
        let a = self.bx.matrix();
        let mut v = self.lo[p].clone();
        while v <= self.hi[p] {
            let next: Vec<BigInt> = resid.iter().enumerate().map(|(r, x)| x - a.get(r, p) * &v).collect();
            z[p] = v.clone();
            self.dfs(p + 1, n, z, next, visit)?;
            v += 1;
        }
        z[p] = self.lo[p].clone();
        Ok(())
    }
}

/// Minimizes `obj` over all integer points of `bx`.
pub fn oracle_minimize(bx: &FeasibleBox, obj: &Objective, cap: u64) -> Result<OracleResult, OracleError> {
    let mut search = Search::new(bx, cap)?;
    let mut best: Option<(IntVec, Rat)> = None;
    let mut count = 0u64;
    search.run(&mut |z| {
        count += 1;
        let z = IntVec::new(z.to_vec());
        let val = obj.eval_int(&z)?;
        if best.as_ref().is_none_or(|(_, b)| &val < b) {
            best = Some((z, val));
        }
        Ok(())
    })?;
    Ok(OracleResult {
        optimum: best,
        feasible_points: count,
        nodes: search.nodes,
    })
}

/// All integer points of `bx` in lexicographic order.
pub fn enumerate_feasible(bx: &FeasibleBox, cap: u64) -> Result<Vec<IntVec>, OracleError> {
    let mut search = Search::new(bx, cap)?;
    let mut out = Vec::new();
    search.run(&mut |z| {
        out.push(IntVec::new(z.to_vec()));
        Ok(())
    })?;
    Ok(out)
}

/// Clips every bound of `bx` to `[-radius, radius]`. Fails with
/// [`AugmentError::EmptyBox`] when a coordinate has no value left.
pub fn clip_box(bx: &FeasibleBox, radius: &BigInt) -> Result<FeasibleBox, AugmentError> {
    let r = radius.abs();
    let lower: IntVec = bx.lower().iter().map(|l| l.clone().max(-r.clone())).collect();
    let upper = bx
        .upper_int()
        .into_iter()
        .map(|u| Some(Rat::from_integer(u.map_or(r.clone(), |u| u.min(r.clone())))))
        .collect();
    FeasibleBox::new(bx.matrix().clone(), bx.rhs().clone(), lower, upper)
}

/// Largest absolute value of a square subdeterminant of `a`, by expanding
/// every minor. Only meant for small matrices.
pub fn max_subdeterminant(a: &IntMat) -> BigInt {
    let (m, n) = (a.rows(), a.cols());
    let mut best = BigInt::zero();
    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                let d = det(&rows.iter().map(|&r| cols.iter().map(|&c| a.get(r, c).clone()).collect()).collect::<Vec<Vec<BigInt>>>());
                best = best.max(d.abs());
            }
        }
    }
    best
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

// Laplace expansion along the first row.
fn det(m: &[Vec<BigInt>]) -> BigInt {
    if m.is_empty() {
        return BigInt::from(1);
    }
    let mut total = BigInt::zero();
    for (c, x) in m[0].iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| v.clone()).collect())
            .collect();
        let term = x * det(&minor);
        if c % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Every Graver element is a conformal sum `Σ λ_i c_i` of at most `n - r`
/// circuits with `0 <= λ_i < 1`, and circuit entries are bounded by the
/// largest subdeterminant. Hence `(n - r)·Δ` bounds all entries.
pub fn graver_entry_bound(a: &IntMat) -> BigInt {
    let n = a.cols();
    BigInt::from(n - a.rank()) * max_subdeterminant(a).max(BigInt::from(1))
}

/// The ⊑-minimal nonzero kernel vectors of `a` with entries in
/// `[-bound, bound]`, sorted. With `bound = graver_entry_bound(a)` this is
/// the Graver basis.
///
/// A nonsingular `r × r` submatrix is fixed; every assignment of the other
/// `n - r` coordinates in the box is completed by Cramer's rule, and the
/// integral completions inside the box are kept. Entries must be small
/// enough for `i128` arithmetic.
pub fn graver_brute_force(a: &IntMat, bound: i64, cap: u64) -> Result<Vec<IntVec>, OracleError> {
    use num_traits::ToPrimitive;
    let n = a.cols();
    let r = a.rank();
    let (rows, pivots) = pivot_minor(a, r);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let entry = |i: usize, j: usize| a.get(i, j).to_i128().expect("small matrix");
    let minor: Vec<Vec<i128>> = rows.iter().map(|&i| pivots.iter().map(|&j| entry(i, j)).collect()).collect();
    let d = det_i128(&minor);
    // adj[p][q] = (-1)^{p+q} det(minor without row q and column p)
    let adj: Vec<Vec<i128>> = (0..r)
        .map(|p| {
            (0..r)
                .map(|q| {
                    let sub: Vec<Vec<i128>> = (0..r)
                        .filter(|&i| i != q)
                        .map(|i| (0..r).filter(|&j| j != p).map(|j| minor[i][j]).collect())
                        .collect();
                    let v = det_i128(&sub);
                    if (p + q) % 2 == 0 {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    let side = 2 * bound as u64 + 1;
    if side.checked_pow(free.len() as u32).is_none_or(|t| t > cap) {
        return Err(OracleError::SearchSpaceTooLarge(cap));
    }
    let b = bound as i128;
    let mut points: Vec<Vec<i64>> = Vec::new();
    let mut t = vec![-b; free.len()];
    loop {
        // A_P x_P = -A_F t
        let rhs: Vec<i128> = rows
            .iter()
            .map(|&i| -free.iter().zip(&t).map(|(&j, v)| entry(i, j) * v).sum::<i128>())
            .collect();
        let mut z = vec![0i64; n];
        let mut ok = true;
        for (p, &col) in pivots.iter().enumerate() {
            let num: i128 = (0..r).map(|q| adj[p][q] * rhs[q]).sum();
            if num % d != 0 || (num / d).abs() > b {
                ok = false;
                break;
            }
            z[col] = (num / d) as i64;
        }
        if ok {
            for (&j, v) in free.iter().zip(&t) {
                z[j] = *v as i64;
            }
            if z.iter().any(|&v| v != 0) {
                points.push(z);
            }
        }
        // next assignment of the free coordinates
        let mut k = 0;
        while k < t.len() && t[k] == b {
            t[k] = -b;
            k += 1;
        }
        if k == t.len() {
            break;
        }
        t[k] += 1;
    }
    points.sort_by_key(|p| p.iter().map(|v| v.abs()).sum::<i64>());
    let below = |u: &[i64], v: &[i64]| u.iter().zip(v).all(|(&x, &y)| x == 0 || (x.signum() == y.signum() && x.abs() <= y.abs()));
    let mut minimal: Vec<Vec<i64>> = Vec::new();
    for p in points {
        if !minimal.iter().any(|g| below(g, &p)) {
            minimal.push(p);
        }
    }
    let mut out: Vec<IntVec> = minimal.iter().map(|g| IntVec::from_i64(g)).collect();
    out.sort();
    Ok(out)
}

/// Rows and columns of some nonsingular `r × r` submatrix.
fn pivot_minor(a: &IntMat, r: usize) -> (Vec<usize>, Vec<usize>) {
    for rows in subsets(a.rows(), r) {
        for cols in subsets(a.cols(), r) {
            let m: Vec<Vec<BigInt>> = rows.iter().map(|&i| cols.iter().map(|&j| a.get(i, j).clone()).collect()).collect();
            if !det(&m).is_zero() {
                return (rows, cols);
            }
        }
    }
    (vec![], vec![])
}

fn det_i128(m: &[Vec<i128>]) -> i128 {
    if m.is_empty() {
        return 1;
    }
    let mut total = 0;
    for (c, &x) in m[0].iter().enumerate() {
        if x == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect())
            .collect();
        let term = x * det_i128(&minor);
        total += if c % 2 == 0 { term } else { -term };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graver::graver;
    use crate::objective::{CompositeObjective, UnivariateConvex};

    #[test]
    fn squares_on_a_line() {
        let bx = FeasibleBox::bounded(IntMat::from_rows(&[vec![1, 1]]), IntVec::from_i64(&[3]), &IntVec::from_i64(&[3, 3])).unwrap();
        let obj = Objective::Composite(CompositeObjective::separable(vec![UnivariateConvex::square(); 2]));
        let res = oracle_minimize(&bx, &obj, DEFAULT_CELL_CAP).unwrap();
        let (z, v) = res.optimum.unwrap();
        assert_eq!(v, Rat::from_integer(BigInt::from(5)));
        assert_eq!(z, IntVec::from_i64(&[1, 2]));
        assert_eq!(res.feasible_points, 4);
    }

    #[test]
    fn empty_and_capped() {
        let bx = FeasibleBox::bounded(IntMat::from_rows(&[vec![2, 2]]), IntVec::from_i64(&[3]), &IntVec::from_i64(&[5, 5])).unwrap();
        assert!(enumerate_feasible(&bx, DEFAULT_CELL_CAP).unwrap().is_empty());
        let wide = FeasibleBox::bounded(IntMat::zeros(0, 6), IntVec::zeros(0), &IntVec::from_i64(&[9; 6])).unwrap();
        assert_eq!(enumerate_feasible(&wide, 1000), Err(OracleError::SearchSpaceTooLarge(1000)));
        let open = FeasibleBox::nonnegative(IntMat::from_rows(&[vec![1, -1]]), IntVec::from_i64(&[0])).unwrap();
        assert_eq!(enumerate_feasible(&open, 10), Err(OracleError::UnboundedBox(0)));
    }

    #[test]
    fn brute_force_graver_small() {
        let a = IntMat::from_rows(&[vec![1, 2, 3]]);
        assert_eq!(max_subdeterminant(&a), BigInt::from(3));
        let b = num_traits::ToPrimitive::to_i64(&graver_entry_bound(&a)).unwrap();
        let brute = graver_brute_force(&a, b, DEFAULT_CELL_CAP).unwrap();
        assert_eq!(brute, graver(&a).elements());
        assert_eq!(det(&[vec![BigInt::from(2), BigInt::from(1)], vec![BigInt::from(1), BigInt::from(2)]]), BigInt::from(3));
    }
}
