//! Objective functions with exact evaluation.
//!
//! Two shapes are supported: linear objectives `c·z` (rational `c`, usable at
//! rational points), and composite objectives
//! `f(z) = c·z + Σ_j f_j(c_j·z)` where every `f_j` is a univariate convex
//! function on the integers. Composite objectives are only evaluated at
//! integer points.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{check_dim, IntMat, IntVec, LinalgError, Rat, RatVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("composite objectives cannot be evaluated at rational points")]
    RationalPointOnIntegerObjective,
    #[error("coordinate {0} has a nonzero cost but no finite bound")]
    UnboundedBox(usize),
    #[error("invalid univariate function: {0}")]
    InvalidFunction(String),
}

/// Signature of an opaque univariate hook.
pub type UnivariateHook = Arc<dyn Fn(&BigInt) -> Rat + Send + Sync>;

/// A convex function `Z -> Q`.
#[derive(Clone)]
pub enum UnivariateConvex {
    Zero,
    /// `Σ_k coeffs[k] · t^k`. Convexity is the caller's responsibility; use
    /// [`check_z_convex`] on the relevant range.
    Poly(Vec<Rat>),
    /// `scale · |t - shift|^exponent`.
    AbsPower {
        scale: Rat,
        exponent: u32,
        shift: BigInt,
    },
    /// Piecewise linear interpolation through the breakpoints, extended by
    /// the first and last slopes.
    Table(Vec<(BigInt, Rat)>),
    /// Opaque evaluation hook. Must be convex; never checked.
    Hook(UnivariateHook),
}

impl fmt::Debug for UnivariateConvex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Poly(c) => f.debug_tuple("Poly").field(c).finish(),
            Self::AbsPower {
                scale,
                exponent,
                shift,
            } => f
                .debug_struct("AbsPower")
                .field("scale", scale)
                .field("exponent", exponent)
                .field("shift", shift)
                .finish(),
            Self::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Self::Hook(_) => write!(f, "Hook(..)"),
        }
    }
}

impl PartialEq for UnivariateConvex {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Zero, Self::Zero) => true,
            (Self::Poly(a), Self::Poly(b)) => a == b,
            (
                Self::AbsPower {
                    scale: s1,
                    exponent: e1,
                    shift: t1,
                },
                Self::AbsPower {
                    scale: s2,
                    exponent: e2,
                    shift: t2,
                },
            ) => s1 == s2 && e1 == e2 && t1 == t2,
            (Self::Table(a), Self::Table(b)) => a == b,
            (Self::Hook(a), Self::Hook(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl UnivariateConvex {
    /// `t^2`.
    pub fn square() -> Self {
        Self::Poly(vec![Rat::zero(), Rat::zero(), Rat::one()])
    }

    pub fn poly(coeffs: &[i64]) -> Self {
        Self::Poly(coeffs.iter().map(|&c| Rat::from_integer(c.into())).collect())
    }

    pub fn abs_power(scale: Rat, exponent: u32, shift: BigInt) -> Result<Self, ObjectiveError> {
        if scale.is_negative() {
            return Err(ObjectiveError::InvalidFunction(
                "abs_power scale must be nonnegative".into(),
            ));
        }
        if exponent == 0 {
            return Err(ObjectiveError::InvalidFunction(
                "abs_power exponent must be at least 1".into(),
            ));
        }
        Ok(Self::AbsPower {
            scale,
            exponent,
            shift,
        })
    }

    /// Piecewise linear function through `points`, which must have strictly
    /// increasing abscissae and nondecreasing slopes.
    pub fn table(mut points: Vec<(BigInt, Rat)>) -> Result<Self, ObjectiveError> {
        if points.is_empty() {
            return Err(ObjectiveError::InvalidFunction("empty table".into()));
        }
        points.sort_by(|a, b| a.0.cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(ObjectiveError::InvalidFunction(
                "duplicate table breakpoint".into(),
            ));
        }
        let slopes: Vec<Rat> = points
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / Rat::from_integer(&w[1].0 - &w[0].0))
            .collect();
        if slopes.windows(2).any(|s| s[1] < s[0]) {
            return Err(ObjectiveError::InvalidFunction(
                "table slopes must be nondecreasing".into(),
            ));
        }
        Ok(Self::Table(points))
    }

    /// Distance from `t` to the interval `[lo, hi]`.
    pub fn distance_to_interval(lo: &BigInt, hi: &BigInt) -> Self {
        let one = Rat::one();
        let mut pts = vec![(lo - 1, one.clone()), (lo.clone(), Rat::zero())];
        if hi > lo {
            pts.push((hi.clone(), Rat::zero()));
        }
        pts.push((hi + 1, one));
        Self::Table(pts)
    }

    pub fn eval(&self, t: &BigInt) -> Rat {
        match self {
            Self::Zero => Rat::zero(),
            Self::Poly(coeffs) => {
                let t = Rat::from_integer(t.clone());
                coeffs
                    .iter()
                    .rev()
                    .fold(Rat::zero(), |acc, c| acc * &t + c)
            }
            Self::AbsPower {
                scale,
                exponent,
                shift,
            } => {
                let d = (t - shift).abs();
                scale * Rat::from_integer(num_traits::pow(d, *exponent as usize))
            }
            Self::Table(points) => eval_table(points, t),
            Self::Hook(h) => h(t),
        }
    }

    /// True when every value at an integer is an integer.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Poly(c) => c.iter().all(Rat::is_integer),
            Self::AbsPower { scale, .. } => scale.is_integer(),
            Self::Table(points) => {
                points.iter().all(|(_, v)| v.is_integer())
                    && points.windows(2).all(|w| {
                        ((&w[1].1 - &w[0].1) / Rat::from_integer(&w[1].0 - &w[0].0)).is_integer()
                    })
                    && (points.len() > 1 || points[0].1.is_integer())
            }
            Self::Hook(_) => false,
        }
    }
}

fn eval_table(points: &[(BigInt, Rat)], t: &BigInt) -> Rat {
    if points.len() == 1 {
        return points[0].1.clone();
    }
    let seg = match points.binary_search_by(|p| p.0.cmp(t)) {
        Ok(i) => return points[i].1.clone(),
        Err(0) => 0,
        Err(i) if i >= points.len() => points.len() - 2,
        Err(i) => i - 1,
    };
    let (x0, y0) = &points[seg];
    let (x1, y1) = &points[seg + 1];
    let slope = (y1 - y0) / Rat::from_integer(x1 - x0);
    y0 + slope * Rat::from_integer(t - x0)
}

/// True iff the successive differences `f(t+1) - f(t)` are nondecreasing for
/// `t` in `[a, b - 2]`, i.e. `f` is discretely convex on `[a, b]`.
pub fn check_z_convex(f: &UnivariateConvex, a: &BigInt, b: &BigInt) -> bool {
    let mut t = a.clone();
    let mut prev_val = f.eval(&t);
    let mut prev_diff: Option<Rat> = None;
    while &t < b {
        let next = &t + 1;
        let val = f.eval(&next);
        let diff = &val - &prev_val;
        if let Some(p) = &prev_diff {
            if diff < *p {
                return false;
            }
        }
        prev_diff = Some(diff);
        prev_val = val;
        t = next;
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    pub c: RatVec,
}

impl LinearObjective {
    pub fn new(c: RatVec) -> Self {
        LinearObjective { c }
    }

    pub fn from_int(c: &IntVec) -> Self {
        LinearObjective { c: c.to_rat() }
    }
}

/// `c·z + Σ_j f_j(c_j·z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeObjective {
    c: IntVec,
    rows: Vec<(IntVec, UnivariateConvex)>,
}

impl CompositeObjective {
    pub fn new(c: IntVec, rows: Vec<(IntVec, UnivariateConvex)>) -> Result<Self, ObjectiveError> {
        for (cj, _) in &rows {
            check_dim(c.dim(), cj.dim())?;
        }
        Ok(CompositeObjective { c, rows })
    }

    /// Sum of `f_i(z_i)` with one unit row per coordinate.
    pub fn separable(funcs: Vec<UnivariateConvex>) -> Self {
        let n = funcs.len();
        CompositeObjective {
            c: IntVec::zeros(n),
            rows: funcs
                .into_iter()
                .enumerate()
                .map(|(i, f)| (IntVec::unit(n, i), f))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn linear_part(&self) -> &IntVec {
        &self.c
    }

    pub fn rows(&self) -> &[(IntVec, UnivariateConvex)] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// The `s × n` matrix with rows `c_j`.
    pub fn row_matrix(&self) -> IntMat {
        let rows: Vec<IntVec> = self.rows.iter().map(|(r, _)| r.clone()).collect();
        IntMat::from_int_rows(self.dim(), &rows).expect("row dims checked at construction")
    }

    pub fn eval(&self, z: &IntVec) -> Result<Rat, ObjectiveError> {
        check_dim(self.dim(), z.dim())?;
        let mut total = Rat::from_integer(self.c.dot(z));
        for (cj, f) in &self.rows {
            total += f.eval(&cj.dot(z));
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Linear(LinearObjective),
    Composite(CompositeObjective),
}

impl From<LinearObjective> for Objective {
    fn from(o: LinearObjective) -> Self {
        Objective::Linear(o)
    }
}

impl From<CompositeObjective> for Objective {
    fn from(o: CompositeObjective) -> Self {
        Objective::Composite(o)
    }
}

impl Objective {
    pub fn linear(c: RatVec) -> Self {
        Objective::Linear(LinearObjective::new(c))
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Linear(l) => l.c.dim(),
            Objective::Composite(c) => c.dim(),
        }
    }

    /// Number of nonlinear rows `s` (zero for linear objectives).
    pub fn num_rows(&self) -> usize {
        match self {
            Objective::Linear(_) => 0,
            Objective::Composite(c) => c.num_rows(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Objective::Linear(_))
    }

    /// The rows `c_j` as a matrix (no rows for linear objectives).
    pub fn row_matrix(&self) -> IntMat {
        match self {
            Objective::Linear(l) => IntMat::zeros(0, l.c.dim()),
            Objective::Composite(c) => c.row_matrix(),
        }
    }

    /// True when all values at integer points are integers.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            Objective::Linear(l) => l.c.is_integral(),
            Objective::Composite(c) => c.rows.iter().all(|(_, f)| f.is_integer_valued()),
        }
    }

    pub fn eval_int(&self, z: &IntVec) -> Result<Rat, ObjectiveError> {
        match self {
            Objective::Linear(l) => {
                check_dim(l.c.dim(), z.dim())?;
                Ok(l.c.dot_int(z))
            }
            Objective::Composite(c) => c.eval(z),
        }
    }

    pub fn eval_rat(&self, z: &RatVec) -> Result<Rat, ObjectiveError> {
        match self {
            Objective::Linear(l) => {
                check_dim(l.c.dim(), z.dim())?;
                Ok(l.c.dot(z))
            }
            Objective::Composite(c) => match z.to_int() {
                Some(zi) => c.eval(&zi),
                None => Err(ObjectiveError::RationalPointOnIntegerObjective),
            },
        }
    }

    /// Restriction `α ↦ f(z + α g)` with the inner products precomputed.
    pub fn ray(&self, z: &IntVec, g: &IntVec) -> Ray<'_> {
        match self {
            Objective::Linear(l) => Ray {
                base: l.c.dot_int(z),
                slope: l.c.dot_int(g),
                rows: Vec::new(),
            },
            Objective::Composite(c) => Ray {
                base: Rat::from_integer(c.c.dot(z)),
                slope: Rat::from_integer(c.c.dot(g)),
                rows: c
                    .rows
                    .iter()
                    .map(|(cj, f)| (cj.dot(z), cj.dot(g), f))
                    .collect(),
            },
        }
    }
}

/// A one-dimensional restriction of an objective along `z + α g`.
pub struct Ray<'a> {
    base: Rat,
    slope: Rat,
    rows: Vec<(BigInt, BigInt, &'a UnivariateConvex)>,
}

impl Ray<'_> {
    pub fn value(&self, alpha: &BigInt) -> Rat {
        let mut v = &self.base + &self.slope * Rat::from_integer(alpha.clone());
        for (zj, gj, f) in &self.rows {
            if gj.is_zero() {
                v += f.eval(zj);
            } else {
                v += f.eval(&(zj + gj * alpha));
            }
        }
        v
    }

    /// Value at a rational step; only meaningful for linear objectives.
    pub fn value_rat(&self, alpha: &Rat) -> Rat {
        debug_assert!(self.rows.is_empty());
        &self.base + &self.slope * alpha
    }

    pub fn linear_slope(&self) -> &Rat {
        &self.slope
    }

    pub fn is_linear(&self) -> bool {
        self.rows.iter().all(|(_, g, _)| g.is_zero())
    }
}

/// Upper bound on `max f - min f` over the integer box `[lower, upper]`.
///
/// Each row `c_j·z` ranges over an interval; the maximum of the convex `f_j`
/// on it sits at an endpoint and the minimum is found by integer bisection.
/// Coordinates that no part of the objective touches may be unbounded.
pub fn range_bound(
    obj: &Objective,
    lower: &IntVec,
    upper: &[Option<BigInt>],
) -> Result<Rat, ObjectiveError> {
    let n = obj.dim();
    check_dim(n, lower.dim())?;
    check_dim(n, upper.len())?;
    let width = |i: usize| -> Result<BigInt, ObjectiveError> {
        match &upper[i] {
            Some(u) => Ok(u - &lower[i]),
            None => Err(ObjectiveError::UnboundedBox(i)),
        }
    };
    let mut h = Rat::zero();
    match obj {
        Objective::Linear(l) => {
            for (i, ci) in l.c.iter().enumerate() {
                if !ci.is_zero() {
                    h += ci.abs() * Rat::from_integer(width(i)?);
                }
            }
        }
        Objective::Composite(c) => {
            for (i, ci) in c.c.iter().enumerate() {
                if !ci.is_zero() {
                    h += Rat::from_integer(ci.abs() * width(i)?);
                }
            }
            for (cj, f) in &c.rows {
                if matches!(f, UnivariateConvex::Zero) {
                    continue;
                }
                let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
                for (i, cji) in cj.iter().enumerate() {
                    if cji.is_zero() {
                        continue;
                    }
                    let u = match &upper[i] {
                        Some(u) => u,
                        None => return Err(ObjectiveError::UnboundedBox(i)),
                    };
                    let (a, b) = (cji * &lower[i], cji * u);
                    if a <= b {
                        lo += a;
                        hi += b;
                    } else {
                        lo += b;
                        hi += a;
                    }
                }
                let fmax = std::cmp::max(f.eval(&lo), f.eval(&hi));
                let arg = crate::augment::line_search(|t| f.eval(t), &lo, &hi)
                    .expect("lo <= hi by construction");
                h += fmax - f.eval(&arg);
            }
        }
    }
    Ok(h)
}

/// Bit length of an exact rational bound, used for telemetry.
pub(crate) fn bits(r: &Rat) -> u64 {
    let ceil = r.ceil().to_integer();
    if ceil.is_positive() {
        ceil.bits()
    } else {
        0
    }
}

/// `⌈n_eff · ln(h + 1)⌉ + 1`, the step bound implied by geometric
/// improvement with ratio `1 / n_eff` on integer-valued objectives.
pub fn step_bound(n_eff: usize, h: &Rat) -> u64 {
    let hp1 = h + Rat::one();
    // ln via bit length is too coarse; use f64 on the (telemetry-only) bound.
    let num: f64 = hp1.numer().to_string().parse().unwrap_or(f64::INFINITY);
    let den: f64 = hp1.denom().to_string().parse().unwrap_or(1.0);
    let ln = (num / den).ln();
    (n_eff as f64 * ln).ceil() as u64 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn eval_linear_example() {
        let c = Objective::Linear(LinearObjective::from_int(&IntVec::from_i64(&[
            1, 1, -1, 0, 0, 0,
        ])));
        assert_eq!(
            c.eval_int(&IntVec::from_i64(&[0, 1, 0, 1, 0, 1])).unwrap(),
            r(1)
        );
        assert_eq!(
            c.eval_int(&IntVec::from_i64(&[0, 0, 1, 2, 2, 0])).unwrap(),
            r(-1)
        );
    }

    #[test]
    fn eval_composite_square() {
        let o = Objective::Composite(CompositeObjective::separable(vec![
            UnivariateConvex::square(),
            UnivariateConvex::square(),
        ]));
        assert_eq!(o.eval_int(&IntVec::from_i64(&[3, 0])).unwrap(), r(9));
        assert_eq!(
            o.eval_rat(&RatVec::from_fractions(&[(1, 2), (0, 1)])),
            Err(ObjectiveError::RationalPointOnIntegerObjective)
        );
        assert!(matches!(
            o.eval_int(&IntVec::from_i64(&[3])),
            Err(ObjectiveError::Linalg(LinalgError::DimMismatch { .. }))
        ));
    }

    #[test]
    fn z_convexity() {
        assert!(check_z_convex(&UnivariateConvex::square(), &b(-5), &b(5)));
        assert!(!check_z_convex(&UnivariateConvex::poly(&[0, 0, -1]), &b(-2), &b(2)));
        let t = UnivariateConvex::table(vec![(b(-1), r(3)), (b(0), r(1)), (b(1), r(0)), (b(2), r(2))])
            .unwrap();
        assert!(check_z_convex(&t, &b(-1), &b(2)));
        assert!(check_z_convex(&t, &b(-10), &b(10)));
    }

    #[test]
    fn nonconvex_table_rejected() {
        let bad = UnivariateConvex::table(vec![(b(0), r(0)), (b(1), r(2)), (b(2), r(3))]);
        assert!(bad.is_err());
    }

    #[test]
    fn table_extrapolates() {
        let d = UnivariateConvex::distance_to_interval(&b(0), &b(3));
        assert_eq!(d.eval(&b(-4)), r(4));
        assert_eq!(d.eval(&b(2)), r(0));
        assert_eq!(d.eval(&b(7)), r(4));
        let d0 = UnivariateConvex::distance_to_interval(&b(0), &b(0));
        assert_eq!(d0.eval(&b(-2)), r(2));
        assert_eq!(d0.eval(&b(0)), r(0));
        assert_eq!(d0.eval(&b(5)), r(5));
    }

    #[test]
    fn abs_power_values() {
        let f = UnivariateConvex::abs_power(r(2), 3, b(1)).unwrap();
        assert_eq!(f.eval(&b(-1)), r(16));
        assert!(UnivariateConvex::abs_power(r(1), 0, b(0)).is_err());
        assert!(UnivariateConvex::abs_power(r(-1), 2, b(0)).is_err());
    }

    #[test]
    fn range_bounds() {
        let lin = Objective::Linear(LinearObjective::from_int(&IntVec::from_i64(&[1])));
        assert_eq!(
            range_bound(&lin, &IntVec::zeros(1), &[Some(b(10))]).unwrap(),
            r(10)
        );
        let sq = Objective::Composite(CompositeObjective::separable(vec![
            UnivariateConvex::square(),
        ]));
        assert_eq!(
            range_bound(&sq, &IntVec::zeros(1), &[Some(b(3))]).unwrap(),
            r(9)
        );
        let ex = Objective::Linear(LinearObjective::from_int(&IntVec::from_i64(&[
            1, 1, -1, 0, 0, 0,
        ])));
        let upper: Vec<_> = [2, 2, 1, 2, 2, 1].iter().map(|&u| Some(b(u))).collect();
        assert_eq!(range_bound(&ex, &IntVec::zeros(6), &upper).unwrap(), r(5));
        assert_eq!(
            range_bound(&sq, &IntVec::zeros(1), &[None]),
            Err(ObjectiveError::UnboundedBox(0))
        );
    }

    #[test]
    fn ray_matches_eval() {
        let o = Objective::Composite(
            CompositeObjective::new(
                IntVec::from_i64(&[1, -2]),
                vec![
                    (IntVec::from_i64(&[1, 1]), UnivariateConvex::square()),
                    (
                        IntVec::from_i64(&[0, 1]),
                        UnivariateConvex::abs_power(r(3), 1, b(2)).unwrap(),
                    ),
                ],
            )
            .unwrap(),
        );
        let z = IntVec::from_i64(&[1, 4]);
        let g = IntVec::from_i64(&[2, -1]);
        let ray = o.ray(&z, &g);
        for a in -3..4 {
            let p = z.add_scaled(&g, &b(a));
            assert_eq!(ray.value(&b(a)), o.eval_int(&p).unwrap());
        }
    }
}
