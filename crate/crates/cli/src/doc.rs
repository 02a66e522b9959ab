//! JSON documents and their conversion to solver types.
//!
//! Every number is exact. A value is written as a JSON integer when it is an
//! integer that fits in `i64`, and as a string `"p/q"` (or `"p"`) otherwise.
//! Both forms are accepted on input.

use std::fmt;

use graver_opt::linalg::{IntMat, IntVec, Rat, RatVec};
use graver_opt::objective::{CompositeObjective, Objective, UnivariateConvex};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// An exact rational number in a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Num(pub Rat);

impl Num {
    pub fn int(v: BigInt) -> Self {
        Num(Rat::from_integer(v))
    }

    pub fn to_int(&self) -> Result<BigInt, CliError> {
        if self.0.is_integer() {
            Ok(self.0.to_integer())
        } else {
            Err(CliError::Schema(format!("expected an integer, got {}", self.0)))
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.is_integer().then(|| self.0.to_integer().to_i64()).flatten() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a rational string \"p/q\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num::int(v.into()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num::int(v.into()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Err(E::custom(format!("floating-point number {v} is not exact; use \"p/q\"")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                parse_rat(v).map(Num).ok_or_else(|| E::custom(format!("bad rational {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rat::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rat::from_integer(s.parse().ok()?)),
    }
}

pub fn rat_string(r: &Rat) -> String {
    r.to_string()
}

pub type Vector = Vec<Num>;
pub type Matrix = Vec<Vec<Num>>;

pub fn int_vec(v: &[Num]) -> Result<IntVec, CliError> {
    Ok(IntVec::new(v.iter().map(Num::to_int).collect::<Result<_, _>>()?))
}

pub fn rat_vec(v: &[Num]) -> RatVec {
    RatVec::new(v.iter().map(|x| x.0.clone()).collect())
}

/// `cols` is used when the matrix has no rows.
pub fn int_mat(m: &Matrix, cols: usize) -> Result<IntMat, CliError> {
    let rows = m.iter().map(|r| int_vec(r)).collect::<Result<Vec<_>, _>>()?;
    let cols = rows.first().map_or(cols, |r| r.dim());
    IntMat::from_int_rows(cols, &rows).map_err(|e| CliError::Schema(format!("ragged matrix: {e}")))
}

pub fn nums(v: &IntVec) -> Vector {
    v.iter().map(|x| Num::int(x.clone())).collect()
}

pub fn rat_nums(v: &RatVec) -> Vector {
    v.iter().map(|x| Num(x.clone())).collect()
}

pub fn matrix(m: &IntMat) -> Matrix {
    m.row_vecs().iter().map(nums).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Ip,
    Lp,
    Nfold,
    Twostage,
    Transportation,
    Table3,
    Hierarchical,
    Decode,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variant");
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub format_version: u32,
    pub kind: Kind,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
}

impl InstanceDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(CliError::Schema(format!("unsupported format_version {}", doc.format_version)));
        }
        Ok(doc)
    }

    pub fn payload<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.payload.clone()).map_err(|e| CliError::Schema(format!("{} payload: {e}", self.kind)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

/// `Az = b`, `lower <= z <= upper` (`null` for no upper bound).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpPayload {
    #[serde(rename = "A")]
    pub a: Matrix,
    pub b: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vector>,
    pub upper: Vec<Option<Num>>,
    /// A feasible start; LP solves use it instead of an integer phase one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vector>,
}

/// `A x^i = b^i` per block, `Σ B x^i = b0`, `0 <= x^i <= upper^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NFoldPayload {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B")]
    pub b: Matrix,
    #[serde(rename = "N")]
    pub n: usize,
    pub b0: Vector,
    /// Right-hand side of each block.
    #[serde(rename = "b")]
    pub rhs: Vec<Vector>,
    pub upper: Vec<Vector>,
    /// Rows shared by the block objectives; checked when present.
    #[serde(rename = "C_rows", default, skip_serializing_if = "Option::is_none")]
    pub c_rows: Option<Matrix>,
    /// Exponent standing in for `p = ∞`, recorded by the decode model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linf_q: Option<u32>,
}

/// `T x + W y^i = b^i`, `0 <= x <= ux`, `0 <= y^i <= uy^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStagePayload {
    #[serde(rename = "T")]
    pub t: Matrix,
    #[serde(rename = "W")]
    pub w: Matrix,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "b")]
    pub rhs: Vec<Vector>,
    pub ux: Vector,
    pub uy: Vec<Vector>,
    /// First- and second-stage parts of the objective rows; checked when present.
    #[serde(rename = "C_rows", default, skip_serializing_if = "Option::is_none")]
    pub c_rows: Option<Matrix>,
    #[serde(rename = "D_rows", default, skip_serializing_if = "Option::is_none")]
    pub d_rows: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportationPayload {
    pub supplies: Vector,
    pub demands: Vector,
    /// One row per customer.
    pub caps: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table3Payload {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    /// `r[j][k] = x_{+jk}`, `s[i][k] = x_{i+k}`, `t[i][j] = x_{ij+}`.
    pub r: Matrix,
    pub s: Matrix,
    pub t: Matrix,
    /// One row of `L·M` caps per layer.
    pub caps: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchicalPayload {
    pub dims: Vec<usize>,
    pub family: Vec<Vec<usize>>,
    pub values: Vec<Vector>,
    pub upper: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PNorm {
    P(u32),
    Inf,
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PNorm::P(p) => s.serialize_u32(*p),
            PNorm::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "inf" => Ok(PNorm::Inf),
            Value::Number(n) => match n.as_u64().and_then(|p| u32::try_from(p).ok()) {
                Some(p) if p >= 1 => Ok(PNorm::P(p)),
                _ => Err(de::Error::custom("p must be an integer >= 1")),
            },
            _ => Err(de::Error::custom("p must be an integer >= 1 or \"inf\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodePayload {
    pub dims: [usize; 3],
    pub alphabet: Num,
    pub checksum: Num,
    pub received: Vector,
    pub p: PNorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<usize>>,
}

/// One objective, or one per block / scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveSpec {
    Blocks { blocks: Vec<ObjectiveDoc> },
    Single(ObjectiveDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveDoc {
    Linear { c: Vector },
    Composite { c: Vector, rows: Vec<RowDoc> },
    Separable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<Vector>,
        funcs: Vec<FuncDoc>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDoc {
    pub row: Vector,
    pub f: FuncDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FuncDoc {
    Zero,
    Poly { coeffs: Vector },
    AbsPower { scale: Num, exponent: u32, shift: Num },
    Table { points: Vec<(Num, Num)> },
}

impl FuncDoc {
    pub fn to_func(&self) -> Result<UnivariateConvex, CliError> {
        Ok(match self {
            FuncDoc::Zero => UnivariateConvex::Zero,
            FuncDoc::Poly { coeffs } => UnivariateConvex::Poly(coeffs.iter().map(|c| c.0.clone()).collect()),
            FuncDoc::AbsPower { scale, exponent, shift } => {
                UnivariateConvex::abs_power(scale.0.clone(), *exponent, shift.to_int()?).map_err(|e| CliError::Schema(e.to_string()))?
            }
            FuncDoc::Table { points } => UnivariateConvex::table(
                points.iter().map(|(t, v)| Ok((t.to_int()?, v.0.clone()))).collect::<Result<_, CliError>>()?,
            )
            .map_err(|e| CliError::Schema(e.to_string()))?,
        })
    }

    pub fn from_func(f: &UnivariateConvex) -> Result<Self, CliError> {
        Ok(match f {
            UnivariateConvex::Zero => FuncDoc::Zero,
            UnivariateConvex::Poly(c) => FuncDoc::Poly {
                coeffs: c.iter().map(|x| Num(x.clone())).collect(),
            },
            UnivariateConvex::AbsPower { scale, exponent, shift } => FuncDoc::AbsPower {
                scale: Num(scale.clone()),
                exponent: *exponent,
                shift: Num::int(shift.clone()),
            },
            UnivariateConvex::Table(p) => FuncDoc::Table {
                points: p.iter().map(|(t, v)| (Num::int(t.clone()), Num(v.clone()))).collect(),
            },
            UnivariateConvex::Hook(_) => return Err(CliError::Schema("evaluation hooks cannot be serialized".into())),
        })
    }
}

impl ObjectiveDoc {
    /// The objective on `dim` variables.
    pub fn to_objective(&self, dim: usize) -> Result<Objective, CliError> {
        let obj = match self {
            ObjectiveDoc::Linear { c } => Objective::linear(rat_vec(c)),
            _ => Objective::Composite(self.to_composite(dim)?),
        };
        if obj.dim() != dim {
            return Err(CliError::Schema(format!("objective has {} variables, expected {dim}", obj.dim())));
        }
        Ok(obj)
    }

    /// Composite form; linear objectives must have integer coefficients.
    pub fn to_composite(&self, dim: usize) -> Result<CompositeObjective, CliError> {
        let obj = match self {
            ObjectiveDoc::Linear { c } => CompositeObjective::new(int_vec(c)?, vec![]).map_err(|e| CliError::Schema(e.to_string()))?,
            ObjectiveDoc::Composite { c, rows } => CompositeObjective::new(
                int_vec(c)?,
                rows.iter().map(|r| Ok((int_vec(&r.row)?, r.f.to_func()?))).collect::<Result<_, CliError>>()?,
            )
            .map_err(|e| CliError::Schema(e.to_string()))?,
            ObjectiveDoc::Separable { c, funcs } => {
                let funcs = funcs.iter().map(FuncDoc::to_func).collect::<Result<Vec<_>, _>>()?;
                let sep = CompositeObjective::separable(funcs);
                match c {
                    Some(c) => CompositeObjective::new(int_vec(c)?, sep.rows().to_vec()).map_err(|e| CliError::Schema(e.to_string()))?,
                    None => sep,
                }
            }
        };
        if obj.dim() != dim {
            return Err(CliError::Schema(format!("objective has {} variables, expected {dim}", obj.dim())));
        }
        Ok(obj)
    }

    pub fn from_composite(obj: &CompositeObjective) -> Result<Self, CliError> {
        Ok(ObjectiveDoc::Composite {
            c: nums(obj.linear_part()),
            rows: obj
                .rows()
                .iter()
                .map(|(r, f)| Ok(RowDoc { row: nums(r), f: FuncDoc::from_func(f)? }))
                .collect::<Result<_, CliError>>()?,
        })
    }
}

impl ObjectiveSpec {
    /// One composite objective per block; a missing spec means zero.
    pub fn per_block(spec: Option<&ObjectiveSpec>, blocks: usize, dim: usize) -> Result<Vec<CompositeObjective>, CliError> {
        match spec {
            None => Ok(vec![CompositeObjective::separable(vec![UnivariateConvex::Zero; dim]); blocks]),
            Some(ObjectiveSpec::Single(o)) => Ok(vec![o.to_composite(dim)?; blocks]),
            Some(ObjectiveSpec::Blocks { blocks: list }) => {
                if list.len() != blocks {
                    return Err(CliError::Schema(format!("need {blocks} block objectives, got {}", list.len())));
                }
                list.iter().map(|o| o.to_composite(dim)).collect()
            }
        }
    }

    pub fn single(&self) -> Result<&ObjectiveDoc, CliError> {
        match self {
            ObjectiveSpec::Single(o) => Ok(o),
            ObjectiveSpec::Blocks { .. } => Err(CliError::Schema("this kind takes a single objective".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub kind: String,
    pub value_before: String,
    pub value_after: String,
    pub direction: Vector,
    pub steplen: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub augment_steps: u64,
    pub directions_evaluated: u64,
    pub basis_size: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format_version: u32,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceDoc>>,
    pub stats: Stats,
    /// Exponent used for `p = ∞` decoding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ResultDocument {
    pub fn new(status: Status) -> Self {
        ResultDocument {
            format_version: FORMAT_VERSION,
            status,
            point: None,
            value: None,
            trace: None,
            stats: Stats::default(),
            q: None,
            message: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub format_version: u32,
    /// `circuits`, `graver` or `composite`.
    pub basis: String,
    pub rows: usize,
    pub cols: usize,
    pub elements: Vec<Vector>,
}
