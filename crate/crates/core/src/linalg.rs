//! Exact integer and rational linear algebra.
//!
//! Everything here works over arbitrary-precision integers ([`BigInt`]) and
//! rationals ([`Rat`]). The derived `Ord` on [`IntVec`] is lexicographic on
//! the entries and serves as the canonical vector order for every sorted set
//! and every tie-break in the crate.

use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number in canonical form (positive denominator, reduced).
pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("the zero vector has no primitive content")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("matrix data has {found} entries, expected {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        found: usize,
    },
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimMismatch { expected, found })
    }
}

/// Integer vector.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntVec(Vec<BigInt>);

impl IntVec {
    pub fn new(entries: Vec<BigInt>) -> Self {
        IntVec(entries)
    }

    pub fn from_i64(entries: &[i64]) -> Self {
        IntVec(entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        IntVec(vec![BigInt::zero(); dim])
    }

    /// The `i`-th standard unit vector of length `dim`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = BigInt::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.0
    }

    pub fn entries_mut(&mut self) -> &mut [BigInt] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<BigInt> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BigInt> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Indices of the nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|e| !e.is_zero()).count()
    }

    /// gcd of all entries (0 for the zero vector).
    pub fn content(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::zero(), |g, e| g.gcd(e))
    }

    pub fn is_primitive(&self) -> Result<bool, LinalgError> {
        if self.is_zero() {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.content().is_one())
    }

    /// Divides out the content. The zero vector is returned unchanged.
    pub fn primitive(&self) -> IntVec {
        let g = self.content();
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        IntVec(self.0.iter().map(|e| e / &g).collect())
    }

    pub fn scaled(&self, k: &BigInt) -> IntVec {
        IntVec(self.0.iter().map(|e| e * k).collect())
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &IntVec, k: &BigInt) -> IntVec {
        debug_assert_eq!(self.dim(), other.dim());
        IntVec(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b * k)
                .collect(),
        )
    }

    pub fn dot(&self, other: &IntVec) -> BigInt {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm1(&self) -> BigInt {
        self.0.iter().map(|e| e.abs()).sum()
    }

    pub fn norm_inf(&self) -> BigInt {
        self.0.iter().map(|e| e.abs()).max().unwrap_or_default()
    }

    /// Conformal order `self ⊑ other`: same orthant and `|self_i| <= |other_i|`
    /// coordinatewise.
    pub fn conformal_le(&self, other: &IntVec) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).all(|(a, b)| {
            if a.is_zero() {
                return true;
            }
            a.sign() == b.sign() && a.magnitude() <= b.magnitude()
        })
    }

    /// Entries `range` as a new vector.
    pub fn slice(&self, range: std::ops::Range<usize>) -> IntVec {
        IntVec(self.0[range].to_vec())
    }

    pub fn concat(&self, other: &IntVec) -> IntVec {
        let mut e = self.0.clone();
        e.extend(other.0.iter().cloned());
        IntVec(e)
    }

    pub fn to_rat(&self) -> RatVec {
        RatVec(self.0.iter().map(|e| Rat::from_integer(e.clone())).collect())
    }

    /// Entries as `i64`, if they all fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.0.iter().map(ToPrimitive::to_i64).collect()
    }
}

impl Index<usize> for IntVec {
    type Output = BigInt;
    fn index(&self, i: usize) -> &BigInt {
        &self.0[i]
    }
}

impl FromIterator<BigInt> for IntVec {
    fn from_iter<I: IntoIterator<Item = BigInt>>(iter: I) -> Self {
        IntVec(iter.into_iter().collect())
    }
}

impl From<Vec<BigInt>> for IntVec {
    fn from(v: Vec<BigInt>) -> Self {
        IntVec(v)
    }
}

impl Add for &IntVec {
    type Output = IntVec;
    fn add(self, rhs: &IntVec) -> IntVec {
        debug_assert_eq!(self.dim(), rhs.dim());
        IntVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &IntVec {
    type Output = IntVec;
    fn sub(self, rhs: &IntVec) -> IntVec {
        debug_assert_eq!(self.dim(), rhs.dim());
        IntVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &IntVec {
    type Output = IntVec;
    fn neg(self) -> IntVec {
        IntVec(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for IntVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// True iff `a_i * b_i >= 0` for every coordinate.
pub fn sign_compatible(a: &IntVec, b: &IntVec) -> Result<bool, LinalgError> {
    check_dim(a.dim(), b.dim())?;
    Ok(a
        .iter()
        .zip(b.iter())
        .all(|(x, y)| x.is_zero() || y.is_zero() || x.sign() == y.sign()))
}

/// Rational vector.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatVec(Vec<Rat>);

impl RatVec {
    pub fn new(entries: Vec<Rat>) -> Self {
        RatVec(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        RatVec(vec![Rat::zero(); dim])
    }

    /// Builds a vector from `(numerator, denominator)` pairs.
    pub fn from_fractions(entries: &[(i64, i64)]) -> Self {
        RatVec(
            entries
                .iter()
                .map(|&(n, d)| Rat::new(n.into(), d.into()))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rat> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Rat> {
        self.0
    }

    /// `self + alpha * g`.
    pub fn add_scaled(&self, g: &IntVec, alpha: &Rat) -> RatVec {
        debug_assert_eq!(self.dim(), g.dim());
        RatVec(
            self.0
                .iter()
                .zip(g.iter())
                .map(|(z, gi)| z + alpha * Rat::from_integer(gi.clone()))
                .collect(),
        )
    }

    pub fn dot(&self, other: &RatVec) -> Rat {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn dot_int(&self, other: &IntVec) -> Rat {
        self.0
            .iter()
            .zip(other.iter())
            .map(|(a, b)| a * Rat::from_integer(b.clone()))
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|e| e.is_integer())
    }

    pub fn to_int(&self) -> Option<IntVec> {
        if self.is_integral() {
            Some(self.0.iter().map(|e| e.to_integer()).collect())
        } else {
            None
        }
    }
}

impl Index<usize> for RatVec {
    type Output = Rat;
    fn index(&self, i: usize) -> &Rat {
        &self.0[i]
    }
}

impl FromIterator<Rat> for RatVec {
    fn from_iter<I: IntoIterator<Item = Rat>>(iter: I) -> Self {
        RatVec(iter.into_iter().collect())
    }
}

impl fmt::Display for RatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                found: data.len(),
            });
        }
        Ok(IntMat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Builds a matrix from `i64` rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r.iter().map(|&e| BigInt::from(e)));
        }
        IntMat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Builds a matrix with the given rows; `cols` is needed for the empty case.
    pub fn from_int_rows(cols: usize, rows: &[IntVec]) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.dim())?;
            data.extend(r.iter().cloned());
        }
        Ok(IntMat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> IntVec {
        IntVec(self.data[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn row_slice(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> IntVec {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<IntVec> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn mul_vec(&self, v: &IntVec) -> Result<IntVec, LinalgError> {
        check_dim(self.cols, v.dim())?;
        Ok((0..self.rows)
            .map(|r| {
                self.row_slice(r)
                    .iter()
                    .zip(v.iter())
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn mul_rat(&self, v: &RatVec) -> Result<RatVec, LinalgError> {
        check_dim(self.cols, v.dim())?;
        Ok((0..self.rows)
            .map(|r| {
                self.row_slice(r)
                    .iter()
                    .zip(v.iter())
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| b * Rat::from_integer(a.clone()))
                    .sum()
            })
            .collect())
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn select_columns(&self, cols: &[usize]) -> IntMat {
        let mut m = IntMat::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                m.set(r, k, self.get(r, c).clone());
            }
        }
        m
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &IntMat) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c).clone());
            }
        }
    }

    pub fn hstack(&self, other: &IntMat) -> Result<IntMat, LinalgError> {
        check_dim(self.rows, other.rows)?;
        let mut m = IntMat::zeros(self.rows, self.cols + other.cols);
        m.set_block(0, 0, self);
        m.set_block(0, self.cols, other);
        Ok(m)
    }

    pub fn vstack(&self, other: &IntMat) -> Result<IntMat, LinalgError> {
        check_dim(self.cols, other.cols)?;
        let mut m = IntMat::zeros(self.rows + other.rows, self.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, 0, other);
        Ok(m)
    }

    pub fn negated(&self) -> IntMat {
        IntMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| -e).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        hermite_columns(self).rank
    }
}

impl fmt::Display for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Column Hermite-style reduction `A * U = H` with `U` unimodular.
///
/// The first `rank` columns of `H` are in column echelon form with positive
/// pivots at strictly increasing rows (`pivot_rows`); the remaining columns
/// of `H` are zero, so the matching columns of `U` span `ker(A) ∩ Z^n`.
#[derive(Debug, Clone)]
pub struct ColumnHermite {
    pub h: IntMat,
    pub u: IntMat,
    pub rank: usize,
    pub pivot_rows: Vec<usize>,
}

fn col_combine(m: &mut IntMat, r_col: usize, j_col: usize, coeffs: [&BigInt; 4]) {
    // (col_r, col_j) <- (x*col_r + y*col_j, p*col_r + q*col_j)
    let [x, y, p, q] = coeffs;
    for row in 0..m.rows {
        let a = m.get(row, r_col).clone();
        let b = m.get(row, j_col).clone();
        if a.is_zero() && b.is_zero() {
            continue;
        }
        m.set(row, r_col, x * &a + y * &b);
        m.set(row, j_col, p * &a + q * &b);
    }
}

fn col_negate(m: &mut IntMat, c: usize) {
    for row in 0..m.rows {
        let v = -m.get(row, c);
        m.set(row, c, v);
    }
}

pub fn hermite_columns(a: &IntMat) -> ColumnHermite {
    let n = a.cols;
    let mut h = a.clone();
    let mut u = IntMat::identity(n);
    let mut r = 0;
    let mut pivot_rows = Vec::new();
    for i in 0..a.rows {
        if r == n {
            break;
        }
        for j in r + 1..n {
            if h.get(i, j).is_zero() {
                continue;
            }
            let a_ir = h.get(i, r).clone();
            let a_ij = h.get(i, j).clone();
            let eg = a_ir.extended_gcd(&a_ij);
            let (mut g, mut x, mut y) = (eg.gcd, eg.x, eg.y);
            if g.is_negative() {
                g = -g;
                x = -x;
                y = -y;
            }
            let p = -(&a_ij / &g);
            let q = &a_ir / &g;
            col_combine(&mut h, r, j, [&x, &y, &p, &q]);
            col_combine(&mut u, r, j, [&x, &y, &p, &q]);
        }
        if !h.get(i, r).is_zero() {
            if h.get(i, r).is_negative() {
                col_negate(&mut h, r);
                col_negate(&mut u, r);
            }
            pivot_rows.push(i);
            r += 1;
        }
    }
    ColumnHermite {
        h,
        u,
        rank: r,
        pivot_rows,
    }
}

/// Pairwise size reduction of a lattice basis (Gauss/Lagrange steps until no
/// vector can be shortened by subtracting an integer multiple of another).
/// The lattice is unchanged.
pub fn size_reduce(basis: &mut [IntVec]) {
    let norm2 = |v: &IntVec| v.dot(v);
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 1000 {
        changed = false;
        rounds += 1;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j {
                    continue;
                }
                let nj = norm2(&basis[j]);
                if nj.is_zero() {
                    continue;
                }
                let num = basis[i].dot(&basis[j]);
                // nearest integer to num / nj
                let k = Rat::new(num, nj.clone()).round().to_integer();
                if k.is_zero() {
                    continue;
                }
                let cand = basis[i].add_scaled(&basis[j], &-&k);
                if norm2(&cand) < norm2(&basis[i]) {
                    basis[i] = cand;
                    changed = true;
                }
            }
        }
    }
}

/// Integer lattice basis of `ker(A) ∩ Z^n`.
///
/// Every integer kernel vector is an integer combination of the result.
/// Returns an empty list when the kernel is trivial.
pub fn kernel_basis(a: &IntMat) -> Vec<IntVec> {
    let hc = hermite_columns(a);
    let mut basis: Vec<IntVec> = (hc.rank..a.cols).map(|c| hc.u.column(c)).collect();
    size_reduce(&mut basis);
    for v in &mut basis {
        // canonical sign: first nonzero entry positive
        if let Some(first) = v.iter().find(|e| !e.is_zero()) {
            if first.is_negative() {
                *v = -&*v;
            }
        }
    }
    basis.sort();
    basis
}

/// Some integer solution of `A z = b`, or `None` when no integer solution
/// exists.
pub fn solve_integer(a: &IntMat, b: &IntVec) -> Result<Option<IntVec>, LinalgError> {
    check_dim(a.rows, b.dim())?;
    let hc = hermite_columns(a);
    let mut y = vec![BigInt::zero(); a.cols];
    for (k, &pr) in hc.pivot_rows.iter().enumerate() {
        let mut rhs = b[pr].clone();
        for (c, yc) in y.iter().enumerate().take(k) {
            rhs -= hc.h.get(pr, c) * yc;
        }
        let (quot, rem) = rhs.div_rem(hc.h.get(pr, k));
        if !rem.is_zero() {
            return Ok(None);
        }
        y[k] = quot;
    }
    let y = IntVec(y);
    if hc.h.mul_vec(&y)? != *b {
        return Ok(None);
    }
    Ok(Some(hc.u.mul_vec(&y)?))
}

/// Some rational solution of `A z = b` (free variables set to zero), or
/// `None` when the system is inconsistent.
pub fn solve_rational(a: &IntMat, b: &RatVec) -> Result<Option<RatVec>, LinalgError> {
    check_dim(a.rows, b.dim())?;
    let (m, n) = (a.rows, a.cols);
    let mut rows: Vec<Vec<Rat>> = (0..m)
        .map(|r| {
            let mut row: Vec<Rat> = a
                .row_slice(r)
                .iter()
                .map(|e| Rat::from_integer(e.clone()))
                .collect();
            row.push(b[r].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut pr = 0;
    for c in 0..n {
        let Some(p) = (pr..m).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(pr, p);
        let inv = rows[pr][c].recip();
        for e in rows[pr].iter_mut() {
            *e *= &inv;
        }
        for r in 0..m {
            if r != pr && !rows[r][c].is_zero() {
                let f = rows[r][c].clone();
                #[allow(clippy::needless_range_loop)]
                for k in 0..=n {
                    let delta = &f * &rows[pr][k];
                    rows[r][k] -= delta;
                }
            }
        }
        pivots.push(c);
        pr += 1;
        if pr == m {
            break;
        }
    }
    if rows[pr..].iter().any(|row| !row[n].is_zero()) {
        return Ok(None);
    }
    let mut z = vec![Rat::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        z[c] = rows[r][n].clone();
    }
    Ok(Some(RatVec(z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_matrix() -> IntMat {
        IntMat::from_rows(&[
            vec![2, 1, 0, 1, 0, 0],
            vec![1, 2, 0, 0, 1, 0],
            vec![0, 0, 1, 0, 0, 1],
        ])
    }

    #[test]
    fn kernel_of_single_row() {
        let k = kernel_basis(&IntMat::from_rows(&[vec![1, 1]]));
        assert_eq!(k, vec![IntVec::from_i64(&[1, -1])]);
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        assert!(kernel_basis(&IntMat::identity(2)).is_empty());
    }

    #[test]
    fn kernel_of_example_matrix() {
        let a = example_matrix();
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 3);
        for v in &k {
            assert!(a.mul_vec(v).unwrap().is_zero());
        }
    }

    #[test]
    fn kernel_is_saturated() {
        // The rational kernel of [2, 4] contains (2,-1); the lattice basis
        // must not be (4,-2).
        let k = kernel_basis(&IntMat::from_rows(&[vec![2, 4]]));
        assert_eq!(k, vec![IntVec::from_i64(&[2, -1])]);
    }

    #[test]
    fn primitive_checks() {
        assert!(IntVec::from_i64(&[2, -1, 0]).is_primitive().unwrap());
        assert!(!IntVec::from_i64(&[2, -2, 4]).is_primitive().unwrap());
        assert!(IntVec::from_i64(&[1, 0, 0, -2, -1, 0])
            .is_primitive()
            .unwrap());
        assert_eq!(
            IntVec::zeros(3).is_primitive(),
            Err(LinalgError::ZeroVector)
        );
    }

    #[test]
    fn sign_compatibility() {
        let v = IntVec::from_i64;
        assert!(sign_compatible(&v(&[1, -1, 0]), &v(&[2, 0, 0])).unwrap());
        assert!(!sign_compatible(&v(&[1, -1]), &v(&[1, 1])).unwrap());
        // all coordinatewise products are >= 0 (the 4th and 5th entries pair with zeros)
        assert!(sign_compatible(&v(&[1, -2, 0, 0, 3, 0]), &v(&[2, -1, 0, -3, 0, 0])).unwrap());
        assert!(!sign_compatible(&v(&[1, -2, 0, 0, 3, 0]), &v(&[-1, 2, 0, 0, -3, 0])).unwrap());
        assert!(matches!(
            sign_compatible(&v(&[1]), &v(&[1, 2])),
            Err(LinalgError::DimMismatch { .. })
        ));
    }

    #[test]
    fn integer_solve_detects_parity() {
        let a = IntMat::from_rows(&[vec![2, 4]]);
        assert!(solve_integer(&a, &IntVec::from_i64(&[3])).unwrap().is_none());
        let z = solve_integer(&a, &IntVec::from_i64(&[6])).unwrap().unwrap();
        assert_eq!(a.mul_vec(&z).unwrap(), IntVec::from_i64(&[6]));
    }

    #[test]
    fn integer_solve_example() {
        let a = example_matrix();
        let b = IntVec::from_i64(&[2, 2, 1]);
        let z = solve_integer(&a, &b).unwrap().unwrap();
        assert_eq!(a.mul_vec(&z).unwrap(), b);
    }

    #[test]
    fn rational_solve_inconsistent() {
        let a = IntMat::from_rows(&[vec![1, 1], vec![2, 2]]);
        let b = RatVec::from_fractions(&[(1, 1), (3, 1)]);
        assert!(solve_rational(&a, &b).unwrap().is_none());
        let b = RatVec::from_fractions(&[(1, 2), (1, 1)]);
        let z = solve_rational(&a, &b).unwrap().unwrap();
        assert_eq!(a.mul_rat(&z).unwrap(), b);
    }

    #[test]
    fn rank_of_example() {
        assert_eq!(example_matrix().rank(), 3);
        assert_eq!(IntMat::from_rows(&[vec![1, 2], vec![2, 4]]).rank(), 1);
        assert_eq!(IntMat::zeros(2, 3).rank(), 0);
    }

    #[test]
    fn conformal_order() {
        let v = IntVec::from_i64;
        assert!(v(&[1, 0, -1]).conformal_le(&v(&[2, 1, -1])));
        assert!(!v(&[1, 0, -2]).conformal_le(&v(&[2, 1, -1])));
        assert!(!v(&[-1, 0, 0]).conformal_le(&v(&[2, 1, -1])));
    }
}
