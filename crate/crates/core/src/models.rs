//! Builders for transportation problems, multi-way tables with margins and
//! error-correcting decoding, all as N-fold instances.
//!
//! Arrays are stored layer by layer along the last axis; inside a layer the
//! remaining axes are row-major. A `d`-way array with last axis `M_d` is
//! therefore `M_d` consecutive blocks, one per N-fold brick. Margin vectors
//! follow the same rule restricted to their support.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::augment::AugmentTrace;
use crate::linalg::{IntMat, IntVec, Rat};
use crate::nfold::{nfold_directions, solve_nfold_with, NFoldDirections, NFoldError, NFoldInstance, NFoldOptions};
use crate::objective::{CompositeObjective, ObjectiveError, UnivariateConvex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("total supply {supply} differs from total demand {demand}")]
    BalanceMismatch { supply: BigInt, demand: BigInt },
    #[error("inconsistent margins: {0}")]
    InconsistentMargins(String),
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("no feasible point")]
    Infeasible,
    #[error(transparent)]
    NFold(NFoldError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

impl From<NFoldError> for ModelError {
    fn from(e: NFoldError) -> Self {
        match e {
            NFoldError::Infeasible => ModelError::Infeasible,
            e => ModelError::NFold(e),
        }
    }
}

fn zero_objectives(n_blocks: usize, n: usize) -> Vec<CompositeObjective> {
    vec![CompositeObjective::separable(vec![UnivariateConvex::Zero; n]); n_blocks]
}

fn ones_row(n: usize) -> IntMat {
    IntMat::from_rows(&[vec![1; n]])
}

/// Capacitated transportation with `n = supplies.len()` suppliers and
/// `N = demands.len()` customers. Block `i` holds `x_{i,1..n}`, the amounts
/// customer `i` receives from each supplier; `caps[i]` bounds it.
///
/// ```
/// use graver_opt::linalg::IntVec;
/// use graver_opt::models::build_transportation;
///
/// let inst = build_transportation(
///     &IntVec::from_i64(&[3, 3]),
///     &IntVec::from_i64(&[2, 2, 2]),
///     &vec![IntVec::from_i64(&[3, 3]); 3],
/// )
/// .unwrap();
/// assert_eq!(inst.n_blocks(), 3);
/// assert_eq!(inst.b0(), &IntVec::from_i64(&[3, 3]));
/// ```
pub fn build_transportation(supplies: &IntVec, demands: &IntVec, caps: &[IntVec]) -> Result<NFoldInstance, ModelError> {
    let supply: BigInt = supplies.iter().sum();
    let demand: BigInt = demands.iter().sum();
    if supply != demand {
        return Err(ModelError::BalanceMismatch { supply, demand });
    }
    let n = supplies.dim();
    if demands.dim() == 0 || caps.len() != demands.dim() || caps.iter().any(|c| c.dim() != n) {
        return Err(ModelError::InvalidSpec("caps must be one vector of length n per customer".into()));
    }
    if supplies.iter().chain(demands.iter()).chain(caps.iter().flat_map(|c| c.iter())).any(|v| v.is_negative()) {
        return Err(ModelError::InvalidSpec("supplies, demands and caps must be nonnegative".into()));
    }
    let rhs = demands.iter().map(|d| IntVec::new(vec![d.clone()])).collect();
    Ok(NFoldInstance::new(
        ones_row(n),
        IntMat::identity(n),
        supplies.clone(),
        rhs,
        caps.to_vec(),
        zero_objectives(demands.dim(), n),
    )?)
}

/// Separable congestion cost `Σ_j scale_j |x_j|^{exponent_j}` for one block.
pub fn congestion_objective(scale: &[Rat], exponent: &[u32]) -> Result<CompositeObjective, ModelError> {
    if scale.len() != exponent.len() {
        return Err(ModelError::InvalidSpec("one exponent per scale".into()));
    }
    let funcs = scale
        .iter()
        .zip(exponent)
        .map(|(c, &e)| UnivariateConvex::abs_power(c.clone(), e, BigInt::zero()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompositeObjective::separable(funcs))
}

/// `L × M × N` tables with line sums `r[j][k] = x_{+jk}`, `s[i][k] = x_{i+k}`
/// and `t[i][j] = x_{ij+}`. Layer `k` is block `k`, cell `(i, j)` sits at
/// `i·M + j`. Within-layer sums become the `A` rows (first the `L` rows of
/// `s`, then the `M` rows of `r`), the across-layer sums `t` the `B` rows.
#[allow(clippy::too_many_arguments)]
pub fn build_3way_linesum(
    l: usize,
    m: usize,
    n: usize,
    r: &IntMat,
    s: &IntMat,
    t: &IntMat,
    caps: &[IntVec],
) -> Result<NFoldInstance, ModelError> {
    if (r.rows(), r.cols()) != (m, n) || (s.rows(), s.cols()) != (l, n) || (t.rows(), t.cols()) != (l, m) {
        return Err(ModelError::InvalidSpec("line-sum matrices have the wrong shape".into()));
    }
    if caps.len() != n || caps.iter().any(|c| c.dim() != l * m) {
        return Err(ModelError::InvalidSpec("caps must be one vector of length L·M per layer".into()));
    }
    let neg = |x: &IntMat| (0..x.rows()).any(|i| x.row_slice(i).iter().any(|v| v.is_negative()));
    if neg(r) || neg(s) || neg(t) {
        return Err(ModelError::InconsistentMargins("negative line sum".into()));
    }
    let sum = |x: &IntMat, rows: bool, idx: usize| -> BigInt {
        if rows {
            x.row_slice(idx).iter().sum()
        } else {
            (0..x.rows()).map(|i| x.get(i, idx).clone()).sum()
        }
    };
    for k in 0..n {
        if sum(r, false, k) != sum(s, false, k) {
            return Err(ModelError::InconsistentMargins(format!("layer {k} totals disagree")));
        }
    }
    for j in 0..m {
        if sum(r, true, j) != sum(t, false, j) {
            return Err(ModelError::InconsistentMargins(format!("column {j} totals disagree")));
        }
    }
    for i in 0..l {
        if sum(s, true, i) != sum(t, true, i) {
            return Err(ModelError::InconsistentMargins(format!("row {i} totals disagree")));
        }
    }
    let mut a = IntMat::zeros(l + m, l * m);
    for i in 0..l {
        for j in 0..m {
            a.set(i, i * m + j, BigInt::one());
            a.set(l + j, i * m + j, BigInt::one());
        }
    }
    let rhs = (0..n)
        .map(|k| (0..l).map(|i| s.get(i, k).clone()).chain((0..m).map(|j| r.get(j, k).clone())).collect())
        .collect();
    let b0 = (0..l).flat_map(|i| t.row_slice(i).to_vec()).collect();
    Ok(NFoldInstance::new(
        a,
        IntMat::identity(l * m),
        b0,
        rhs,
        caps.to_vec(),
        zero_objectives(n, l * m),
    )?)
}

/// Margins of a `d`-way array for a family of supports. Axes are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginSpec {
    pub dims: Vec<usize>,
    pub family: Vec<Vec<usize>>,
    /// `values[h]` lists the margins with support `family[h]`, ordered like
    /// the sub-array over that support.
    pub values: Vec<IntVec>,
    /// Per-cell upper bounds of the full array.
    pub upper: IntVec,
}

/// Support axes in storage order: the last axis first (slowest) if present,
/// then the others ascending.
fn storage_axes(d: usize, support: &[usize]) -> Vec<usize> {
    let mut axes: Vec<usize> = support.iter().copied().filter(|&a| a + 1 != d).collect();
    axes.sort_unstable();
    if support.contains(&(d - 1)) {
        axes.insert(0, d - 1);
    }
    axes
}

fn index_over(dims: &[usize], axes: &[usize], cell: &[usize]) -> usize {
    axes.iter().fold(0, |acc, &a| acc * dims[a] + cell[a])
}

fn all_cells(dims: &[usize]) -> Vec<Vec<usize>> {
    let d = dims.len();
    let axes = storage_axes(d, &(0..d).collect::<Vec<_>>());
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut cell = vec![0; d];
            for &a in axes.iter().rev() {
                cell[a] = flat % dims[a];
                flat /= dims[a];
            }
            cell
        })
        .collect()
}

/// Number of margins with the given support.
pub fn count_margins(dims: &[usize], support: &[usize]) -> usize {
    support.iter().map(|&a| dims[a]).product()
}

/// All margins with the given support of an array stored in the layout
/// described at the top of this module.
pub fn margins_of(dims: &[usize], support: &[usize], array: &IntVec) -> IntVec {
    let axes = storage_axes(dims.len(), support);
    let mut out = vec![BigInt::zero(); count_margins(dims, support)];
    for (cell, v) in all_cells(dims).iter().zip(array.iter()) {
        out[index_over(dims, &axes, cell)] += v;
    }
    IntVec::new(out)
}

/// Sums margins with support `from` down to the sub-support `to`.
fn project_margins(dims: &[usize], from: &[usize], values: &IntVec, to: &[usize]) -> IntVec {
    let d = dims.len();
    let (fa, ta) = (storage_axes(d, from), storage_axes(d, to));
    let mut out = vec![BigInt::zero(); count_margins(dims, to)];
    let mut cell = vec![0; d];
    for (flat, v) in values.iter().enumerate() {
        let mut f = flat;
        for &a in fa.iter().rev() {
            cell[a] = f % dims[a];
            f /= dims[a];
        }
        out[index_over(dims, &ta, &cell)] += v;
    }
    IntVec::new(out)
}

fn validate_margins(spec: &MarginSpec) -> Result<(), ModelError> {
    let d = spec.dims.len();
    if d == 0 || spec.dims.contains(&0) {
        return Err(ModelError::InvalidSpec("dims must be positive".into()));
    }
    if spec.family.is_empty() || spec.family.len() != spec.values.len() {
        return Err(ModelError::InvalidSpec("need one value vector per support in a nonempty family".into()));
    }
    if spec.upper.dim() != spec.dims.iter().product::<usize>() {
        return Err(ModelError::InvalidSpec("one upper bound per cell".into()));
    }
    for (h, vals) in spec.family.iter().zip(&spec.values) {
        let mut sorted = h.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != h.len() || h.iter().any(|&a| a >= d) {
            return Err(ModelError::InvalidSpec(format!("bad support {h:?}")));
        }
        if vals.dim() != count_margins(&spec.dims, h) {
            return Err(ModelError::InvalidSpec(format!("support {h:?} needs {} values", count_margins(&spec.dims, h))));
        }
        if vals.iter().any(|v| v.is_negative()) {
            return Err(ModelError::InconsistentMargins(format!("negative margin with support {h:?}")));
        }
    }
    // margins of two supports must agree on their common sub-support
    for x in 0..spec.family.len() {
        for y in x + 1..spec.family.len() {
            let common: Vec<usize> = spec.family[x].iter().copied().filter(|a| spec.family[y].contains(a)).collect();
            let px = project_margins(&spec.dims, &spec.family[x], &spec.values[x], &common);
            let py = project_margins(&spec.dims, &spec.family[y], &spec.values[y], &common);
            if px != py {
                return Err(ModelError::InconsistentMargins(format!(
                    "supports {:?} and {:?} disagree",
                    spec.family[x], spec.family[y]
                )));
            }
        }
    }
    Ok(())
}

/// The N-fold system whose integer points are the arrays with the given
/// margins. Layers along the last axis are the blocks. A support containing
/// the last axis fixes sums inside each layer and gives `A` rows (the layer
/// index selects the right-hand side); any other support sums across layers
/// and gives `B` rows. Rows appear in family order, margins in storage order.
pub fn build_hierarchical(spec: &MarginSpec) -> Result<NFoldInstance, ModelError> {
    validate_margins(spec)?;
    let d = spec.dims.len();
    let layers = spec.dims[d - 1];
    let inner = &spec.dims[..d - 1];
    let width: usize = inner.iter().product();
    let layer_cells: Vec<Vec<usize>> = all_cells(&spec.dims)[..width].to_vec();
    let mut a_rows: Vec<IntVec> = Vec::new();
    let mut b_rows: Vec<IntVec> = Vec::new();
    let mut rhs = vec![Vec::<BigInt>::new(); layers];
    let mut b0 = Vec::new();
    for (h, vals) in spec.family.iter().zip(&spec.values) {
        let axes = storage_axes(d, h);
        let local: Vec<usize> = axes.iter().copied().filter(|&a| a + 1 != d).collect();
        let count = count_margins(&spec.dims, &local);
        let mut rows = vec![vec![BigInt::zero(); width]; count];
        for (c, cell) in layer_cells.iter().enumerate() {
            rows[index_over(&spec.dims, &local, cell)][c] = BigInt::one();
        }
        if h.contains(&(d - 1)) {
            a_rows.extend(rows.into_iter().map(IntVec::new));
            for (k, r) in rhs.iter_mut().enumerate() {
                r.extend(vals.entries()[k * count..(k + 1) * count].iter().cloned());
            }
        } else {
            b_rows.extend(rows.into_iter().map(IntVec::new));
            b0.extend(vals.iter().cloned());
        }
    }
    let upper = spec.upper.entries().chunks(width).map(|c| IntVec::new(c.to_vec())).collect();
    Ok(NFoldInstance::new(
        IntMat::from_int_rows(width, &a_rows).map_err(NFoldError::from)?,
        IntMat::from_int_rows(width, &b_rows).map_err(NFoldError::from)?,
        IntVec::new(b0),
        rhs.into_iter().map(IntVec::new).collect(),
        upper,
        zero_objectives(layers, width),
    )?)
}

/// `Σ_{j ∈ I} |x_j − x̄_j|^p` where `I` is the set of coordinates with a
/// target. Every coordinate gets a unit row so the rows match across blocks.
pub fn lp_objective(target: &[Option<BigInt>], p: u32) -> Result<CompositeObjective, ModelError> {
    if p == 0 {
        return Err(ModelError::InvalidSpec("p must be at least 1".into()));
    }
    let funcs = target
        .iter()
        .map(|t| match t {
            Some(x) => UnivariateConvex::abs_power(Rat::one(), p, x.clone()),
            None => Ok(UnivariateConvex::Zero),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompositeObjective::separable(funcs))
}

/// Smallest `q >= 1` with `(1 + 1/(2w))^q > nn`. Minimizing the `l_q`
/// distance over points with entries in `[0, w]` then also minimizes the
/// `l_∞` distance, when `nn` is at least the number of variables.
///
/// ```
/// assert_eq!(graver_opt::models::linf_q(6, 1), 5);
/// assert_eq!(graver_opt::models::linf_q(4, 2), 7);
/// ```
pub fn linf_q(nn: u64, w: u64) -> u32 {
    let w = w.max(1);
    let base = Ratio::new(BigInt::from(2 * w + 1), BigInt::from(2 * w));
    let target = Rat::from_integer(BigInt::from(nn));
    let mut pow = base.clone();
    let mut q = 1;
    while pow <= target {
        pow *= &base;
        q += 1;
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    P(u32),
    Inf,
}

/// Received data for `L × M × N` messages over `{0..u}` with checksum `U`.
///
/// The sender appends one slack index to every axis so that each line
/// through original entries sums to `U`. `received` is the resulting
/// `(L+1) × (M+1) × (N+1)` array (layout as everywhere in this module);
/// entries with two or more slack indices carry no information and are
/// ignored. `coords` restricts the distance to some positions of that array
/// and defaults to all informative ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodingSpec {
    pub dims: (usize, usize, usize),
    pub alphabet: BigInt,
    pub checksum: BigInt,
    pub received: Vec<BigInt>,
    pub p: Norm,
    pub coords: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// The decoded `L × M × N` message.
    pub message: Vec<BigInt>,
    /// The decoded word in the layout of `received`.
    pub blown: Vec<BigInt>,
    /// `Σ |x̂_i − x̄_i|^p` for finite `p` (the distance itself for `p = 1`),
    /// the `l_∞` distance for `p = ∞`.
    pub distance: Rat,
    /// The exponent used in place of `∞`.
    pub q: Option<u32>,
    pub trace: AugmentTrace,
}

/// Adds the slack entries to a message. Fails if a line sum exceeds `U`.
pub fn encode(dims: (usize, usize, usize), checksum: &BigInt, message: &[BigInt]) -> Result<Vec<BigInt>, ModelError> {
    let (l, m, n) = dims;
    if message.len() != l * m * n {
        return Err(ModelError::InvalidSpec("message has the wrong length".into()));
    }
    let (bl, bm) = (l + 1, m + 1);
    let at = |i: usize, j: usize, k: usize| k * bl * bm + i * bm + j;
    let mut out = vec![BigInt::zero(); bl * bm * (n + 1)];
    for k in 0..n {
        for i in 0..l {
            for j in 0..m {
                out[at(i, j, k)] = message[k * l * m + i * m + j].clone();
            }
        }
    }
    let mut fill = |pos: usize, line: BigInt| -> Result<(), ModelError> {
        if &line > checksum {
            return Err(ModelError::InvalidSpec("a line sum exceeds the checksum".into()));
        }
        out[pos] = checksum - line;
        Ok(())
    };
    let x = |i: usize, j: usize, k: usize| &message[k * l * m + i * m + j];
    for k in 0..n {
        for j in 0..m {
            fill(at(l, j, k), (0..l).map(|i| x(i, j, k)).sum())?;
        }
        for i in 0..l {
            fill(at(i, m, k), (0..m).map(|j| x(i, j, k)).sum())?;
        }
    }
    for i in 0..l {
        for j in 0..m {
            fill(at(i, j, n), (0..n).map(|k| x(i, j, k)).sum())?;
        }
    }
    Ok(out)
}

/// Positions of the blown array with at most one slack index.
pub fn informative_positions(dims: (usize, usize, usize)) -> Vec<usize> {
    let (l, m, n) = dims;
    let mut out = Vec::new();
    for k in 0..=n {
        for i in 0..=l {
            for j in 0..=m {
                if (i == l) as u8 + (j == m) as u8 + (k == n) as u8 <= 1 {
                    out.push(k * (l + 1) * (m + 1) + i * (m + 1) + j);
                }
            }
        }
    }
    out
}

/// The decoding system with zero objective; see [`Decoder`] for the layout.
fn blown_instance(dims: (usize, usize, usize), alphabet: &BigInt, checksum: &BigInt) -> Result<NFoldInstance, ModelError> {
    let (l, m, n) = dims;
    if l == 0 || m == 0 || n == 0 {
        return Err(ModelError::InvalidSpec("dims must be positive".into()));
    }
    if alphabet.is_negative() || checksum.is_negative() {
        return Err(ModelError::InvalidSpec("alphabet and checksum must be nonnegative".into()));
    }
    let bm = m + 1;
    let width = (l + 1) * bm - 1;
    let mut a = IntMat::zeros(l + m, width);
    for i in 0..=l {
        for j in 0..=m {
            if i == l && j == m {
                continue;
            }
            if i < l {
                a.set(i, i * bm + j, BigInt::one());
            }
            if j < m {
                a.set(l + j, i * bm + j, BigInt::one());
            }
        }
    }
    let mut b = IntMat::zeros(l * m, width);
    for i in 0..l {
        for j in 0..m {
            b.set(i * m + j, i * bm + j, BigInt::one());
        }
    }
    let u = checksum;
    let lu = u * BigInt::from(l);
    let mu = u * BigInt::from(m);
    let mut rhs = vec![IntVec::new(vec![u.clone(); l + m]); n];
    rhs.push(IntVec::new(
        std::iter::repeat_n(mu.clone(), l).chain(std::iter::repeat_n(lu.clone(), m)).collect(),
    ));
    let mut upper = Vec::new();
    for k in 0..=n {
        let mut blk = Vec::with_capacity(width);
        for i in 0..=l {
            for j in 0..=m {
                if i == l && j == m {
                    continue;
                }
                blk.push(match (i == l, j == m, k == n) {
                    (false, false, false) => alphabet.clone(),
                    (true, false, true) => lu.clone(),
                    (false, true, true) => mu.clone(),
                    _ => u.clone(),
                });
            }
        }
        upper.push(IntVec::new(blk));
    }
    Ok(NFoldInstance::new(
        a,
        b,
        IntVec::new(vec![u.clone(); l * m]),
        rhs,
        upper,
        zero_objectives(n + 1, width),
    )?)
}

/// Decoding for fixed dimensions, alphabet and checksum. The Graver basis is
/// computed once and reused for every received word.
///
/// Each layer of the blown array minus its `(L, M)` corner is one block. In
/// the slack layer `k = N` the cells `(L, j)` and `(i, M)` do not belong to
/// the code; they absorb the otherwise free line sums of that layer.
#[derive(Debug, Clone)]
pub struct Decoder {
    dims: (usize, usize, usize),
    alphabet: BigInt,
    checksum: BigInt,
    template: NFoldInstance,
    directions: NFoldDirections,
}

impl Decoder {
    pub fn new(dims: (usize, usize, usize), alphabet: BigInt, checksum: BigInt, opts: &NFoldOptions) -> Result<Self, ModelError> {
        let template = blown_instance(dims, &alphabet, &checksum)?;
        let directions = nfold_directions(&template, opts)?;
        Ok(Decoder {
            dims,
            alphabet,
            checksum,
            template,
            directions,
        })
    }

    /// The underlying N-fold instance (with zero objective).
    pub fn instance(&self) -> &NFoldInstance {
        &self.template
    }

    pub fn basis_size(&self) -> usize {
        self.directions.basis_size
    }

    /// Exponent replacing `∞`: `linf_q` for all variables and the largest bound.
    pub fn q_for_linf(&self) -> u32 {
        linf_exponent(&self.template)
    }

    pub fn decode(&self, received: &[BigInt], p: Norm, coords: Option<&[usize]>) -> Result<DecodeResult, ModelError> {
        let (l, m, n) = self.dims;
        let layer = (l + 1) * (m + 1);
        let (objs, q, coords) = decode_objectives(&self.template, self.dims, &self.alphabet, &self.checksum, received, p, coords)?;
        let inst = self.template.clone().with_objectives(objs)?;
        let sol = solve_nfold_with(&inst, &self.directions)?;
        let flat = sol.point.flatten();
        let mut blown = vec![BigInt::zero(); received.len()];
        for pos in informative_positions(self.dims) {
            blown[pos] = flat.entries()[var_of(self.dims, pos).unwrap()].clone();
        }
        let mut message = Vec::with_capacity(l * m * n);
        for k in 0..n {
            for i in 0..l {
                for j in 0..m {
                    message.push(blown[k * layer + i * (m + 1) + j].clone());
                }
            }
        }
        let distance = match p {
            Norm::P(_) => sol.value,
            Norm::Inf => Rat::from_integer(
                coords.iter().map(|&pos| (&blown[pos] - &received[pos]).abs()).max().unwrap_or_default(),
            ),
        };
        Ok(DecodeResult {
            message,
            blown,
            distance,
            q,
            trace: sol.trace,
        })
    }
}

fn linf_exponent(inst: &NFoldInstance) -> u32 {
    let nn = (inst.n_blocks() * inst.block_width()) as u64;
    let w = inst.upper().iter().flat_map(|u| u.iter()).max().cloned().unwrap_or_default();
    linf_q(nn, u64::try_from(w).unwrap_or(u64::MAX))
}

/// N-fold variable of a position of the blown array, `None` for corners.
fn var_of(dims: (usize, usize, usize), pos: usize) -> Option<usize> {
    let (l, m, _) = dims;
    let layer = (l + 1) * (m + 1);
    let (k, cell) = (pos / layer, pos % layer);
    (cell != layer - 1).then(|| k * (layer - 1) + cell)
}

type DecodeObjectives = (Vec<CompositeObjective>, Option<u32>, Vec<usize>);

fn decode_objectives(
    template: &NFoldInstance,
    dims: (usize, usize, usize),
    alphabet: &BigInt,
    checksum: &BigInt,
    received: &[BigInt],
    p: Norm,
    coords: Option<&[usize]>,
) -> Result<DecodeObjectives, ModelError> {
    let (l, m, n) = dims;
    let layer = (l + 1) * (m + 1);
    if received.len() != layer * (n + 1) {
        return Err(ModelError::InvalidSpec(format!("received word needs {} entries", layer * (n + 1))));
    }
    let cap = std::cmp::max(alphabet, checksum);
    if received.iter().any(|v| v.is_negative() || v > cap) {
        return Err(ModelError::InvalidSpec("received entry outside [0, max(u, U)]".into()));
    }
    let informative = informative_positions(dims);
    let coords: Vec<usize> = match coords {
        Some(c) => c.to_vec(),
        None => informative.clone(),
    };
    let width = template.block_width();
    let mut target = vec![None; width * (n + 1)];
    for &pos in &coords {
        if !informative.contains(&pos) {
            return Err(ModelError::InvalidSpec(format!("position {pos} carries no information")));
        }
        target[var_of(dims, pos).expect("informative positions are variables")] = Some(received[pos].clone());
    }
    let (exp, q) = match p {
        Norm::P(p) => (p, None),
        Norm::Inf => {
            let q = linf_exponent(template);
            (q, Some(q))
        }
    };
    let objs = target.chunks(width).map(|t| lp_objective(t, exp)).collect::<Result<Vec<_>, _>>()?;
    Ok((objs, q, coords))
}

/// The N-fold instance solved by [`decode`], with its distance objective,
/// and the exponent used when `p = ∞`.
pub fn decode_instance(spec: &DecodingSpec) -> Result<(NFoldInstance, Option<u32>), ModelError> {
    let template = blown_instance(spec.dims, &spec.alphabet, &spec.checksum)?;
    let (objs, q, _) = decode_objectives(
        &template,
        spec.dims,
        &spec.alphabet,
        &spec.checksum,
        &spec.received,
        spec.p,
        spec.coords.as_deref(),
    )?;
    Ok((template.with_objectives(objs)?, q))
}

/// One-shot decoding; see [`Decoder`] for repeated use.
pub fn decode(spec: &DecodingSpec) -> Result<DecodeResult, ModelError> {
    let dec = Decoder::new(spec.dims, spec.alphabet.clone(), spec.checksum.clone(), &NFoldOptions::default())?;
    dec.decode(&spec.received, spec.p, spec.coords.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn transportation_layout() {
        let inst = build_transportation(
            &IntVec::from_i64(&[3, 3]),
            &IntVec::from_i64(&[2, 2, 2]),
            &vec![IntVec::from_i64(&[3, 3]); 3],
        )
        .unwrap();
        assert_eq!(inst.a(), &IntMat::from_rows(&[vec![1, 1]]));
        assert_eq!(inst.b(), &IntMat::identity(2));
        assert_eq!(inst.rhs(), &vec![IntVec::from_i64(&[2]); 3][..]);
        let err = build_transportation(&IntVec::from_i64(&[3, 2]), &IntVec::from_i64(&[2, 2, 2]), &vec![IntVec::from_i64(&[3, 3]); 3]);
        assert!(matches!(err, Err(ModelError::BalanceMismatch { .. })));
    }

    #[test]
    fn linesum_checks_totals() {
        let z = |r, c| IntMat::zeros(r, c);
        let inst = build_3way_linesum(2, 2, 2, &z(2, 2), &z(2, 2), &z(2, 2), &vec![IntVec::from_i64(&[1; 4]); 2]).unwrap();
        assert_eq!(inst.a().rows(), 4);
        let mut r = z(2, 2);
        r.set(0, 0, BigInt::one());
        assert!(matches!(
            build_3way_linesum(2, 2, 2, &r, &z(2, 2), &z(2, 2), &vec![IntVec::from_i64(&[1; 4]); 2]),
            Err(ModelError::InconsistentMargins(_))
        ));
    }

    #[test]
    fn margin_counts_and_layout() {
        assert_eq!(count_margins(&[4, 5, 3, 2], &[0, 2]), 12);
        // 2×2×2 array 0..8 in storage order; (i, j, k) holds 4k + 2i + j
        let arr = IntVec::from_i64(&[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(margins_of(&[2, 2, 2], &[0, 1], &arr), IntVec::from_i64(&[4, 6, 8, 10]));
        assert_eq!(margins_of(&[2, 2, 2], &[0, 2], &arr), IntVec::from_i64(&[1, 5, 9, 13]));
        assert_eq!(margins_of(&[2, 2, 2], &[], &arr), IntVec::from_i64(&[28]));
    }

    #[test]
    fn hierarchical_pins_all_cells() {
        let arr = IntVec::from_i64(&[1, 0, 2, 1]);
        let spec = MarginSpec {
            dims: vec![2, 2],
            family: vec![vec![0, 1]],
            values: vec![margins_of(&[2, 2], &[0, 1], &arr)],
            upper: IntVec::from_i64(&[3; 4]),
        };
        let inst = build_hierarchical(&spec).unwrap();
        assert_eq!(inst.a(), &IntMat::identity(2));
        assert_eq!(inst.b().rows(), 0);
        let mut bad = spec.clone();
        bad.family.push(vec![]);
        bad.values.push(IntVec::from_i64(&[5]));
        assert!(matches!(build_hierarchical(&bad), Err(ModelError::InconsistentMargins(_))));
    }

    #[test]
    fn lp_objective_values() {
        let f = lp_objective(&[Some(BigInt::one()), Some(BigInt::one())], 2).unwrap();
        assert_eq!(f.eval(&IntVec::from_i64(&[0, 3])).unwrap(), Rat::from_integer(BigInt::from(5)));
        let zero = lp_objective(&[None, None], 2).unwrap();
        assert_eq!(zero.eval(&IntVec::from_i64(&[7, -2])).unwrap(), Rat::zero());
    }

    #[test]
    fn linf_q_exact() {
        assert_eq!(linf_q(1, 1), 1);
        assert_eq!(linf_q(6, 1), 5);
        assert_eq!(linf_q(4, 2), 7);
    }

    #[test]
    fn encode_layout() {
        let msg = big(&[1, 0, 0, 1, 0, 1, 1, 0]);
        let word = encode((2, 2, 2), &BigInt::from(2), &msg).unwrap();
        assert_eq!(word.len(), 27);
        // layer 0: [[1,0,1],[0,1,1],[1,1,_]]
        assert_eq!(&word[..8], &big(&[1, 0, 1, 0, 1, 1, 1, 1])[..]);
        assert!(encode((2, 2, 2), &BigInt::from(1), &big(&[1, 1, 0, 0, 0, 0, 0, 0])).is_err());
    }
}
