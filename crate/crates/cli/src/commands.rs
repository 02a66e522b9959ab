//! The subcommands. Every solver result is re-checked against the instance
//! before it is printed.

use std::fs;
use std::path::Path;
use std::time::Instant;

use graver_opt::augment::{self, AugmentError, AugmentTrace, FeasibleBox, StepKind};
use graver_opt::graver;
use graver_opt::linalg::{IntMat, IntVec, Rat, RatVec};
use graver_opt::models::{self, DecodingSpec, MarginSpec, ModelError, Norm};
use graver_opt::nfold::{self, NFoldError, NFoldInstance, NFoldOptions};
use graver_opt::objective::Objective;
use graver_opt::oracle::{self, OracleError};
use graver_opt::twostage::{self, TwoStageError, TwoStageInstance, TwoStageOptions};
use num_bigint::BigInt;
use num_traits::Signed;

use crate::doc::*;
use crate::{BasisArgs, CliError, Command, Mode, ModelKind, OracleArgs, Outcome, SolveArgs};

pub fn dispatch(cmd: &Command) -> Outcome {
    match cmd {
        Command::Solve(args) => result_outcome(|| solve(args), args.trace),
        Command::Oracle(args) => result_outcome(|| oracle_cmd(args), false),
        Command::Basis(args) => text_outcome(basis(args)),
        Command::Model { model: kind, path } => text_outcome(model(*kind, path)),
    }
}

fn result_outcome(f: impl FnOnce() -> Result<ResultDocument, CliError>, trace: bool) -> Outcome {
    let start = Instant::now();
    let res = f();
    let wall_ms = start.elapsed().as_millis() as u64;
    match res {
        Ok(mut d) => {
            d.stats.wall_ms = wall_ms;
            if !trace {
                d.trace = None;
            }
            let code = match d.status {
                Status::Optimal => 0,
                Status::Error => 1,
                Status::Infeasible => 2,
                Status::Unbounded => 3,
            };
            Outcome {
                code,
                stdout: d.to_json() + "\n",
                stderr: String::new(),
            }
        }
        Err(e) => {
            let mut d = ResultDocument::new(Status::Error);
            d.message = Some(e.to_string());
            d.stats.wall_ms = wall_ms;
            Outcome {
                code: e.exit_code(),
                stdout: d.to_json() + "\n",
                stderr: format!("error: {e}\n"),
            }
        }
    }
}

fn text_outcome(res: Result<String, CliError>) -> Outcome {
    match res {
        Ok(text) => Outcome {
            code: 0,
            stdout: text + "\n",
            stderr: String::new(),
        },
        Err(e) => Outcome::error(&e),
    }
}

pub fn read_document(path: &Path) -> Result<InstanceDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    InstanceDocument::parse(&text)
}

fn schema(e: impl std::fmt::Display) -> CliError {
    CliError::Schema(e.to_string())
}

fn solver(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn status(s: Status) -> ResultDocument {
    ResultDocument::new(s)
}

fn trace_docs(t: &AugmentTrace) -> Vec<TraceDoc> {
    t.iterations
        .iter()
        .map(|s| TraceDoc {
            kind: match s.kind {
                StepKind::Greedy => "greedy",
                StepKind::Shrink => "shrink",
            }
            .to_string(),
            value_before: rat_string(&s.value_before),
            value_after: rat_string(&s.value_after),
            direction: nums(&s.direction),
            steplen: rat_string(&s.steplen),
        })
        .collect()
}

fn optimal(point: Vector, value: &Rat, trace: &AugmentTrace, basis_size: usize) -> ResultDocument {
    let mut d = status(Status::Optimal);
    d.point = Some(point);
    d.value = Some(rat_string(value));
    d.trace = Some(trace_docs(trace));
    d.stats = Stats {
        augment_steps: trace.len() as u64,
        directions_evaluated: trace.directions_evaluated,
        basis_size: basis_size as u64,
        wall_ms: 0,
    };
    d
}

/// Infeasible and unbounded outcomes are results, everything else an error.
fn augment_status(e: AugmentError) -> Result<ResultDocument, CliError> {
    match e {
        AugmentError::Infeasible => Ok(status(Status::Infeasible)),
        AugmentError::UnboundedObjective(_) => Ok(status(Status::Unbounded)),
        AugmentError::InfeasibleBase => Err(CliError::Schema("the given start is not feasible".into())),
        e => Err(solver(e)),
    }
}

fn verify(ok: bool, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification(what.to_string()))
    }
}

fn solve(args: &SolveArgs) -> Result<ResultDocument, CliError> {
    let doc = read_document(&args.path)?;
    let opts = NFoldOptions {
        graver_cap: args.graver_cap,
        direct_threshold: args.direct_threshold,
    };
    let mode = args.mode.unwrap_or(if doc.kind == Kind::Lp { Mode::Lp } else { Mode::Ip });
    match (doc.kind, mode) {
        (Kind::Ip | Kind::Lp, Mode::Ip) => solve_ip(&doc),
        (Kind::Ip | Kind::Lp, Mode::Lp) => solve_lp(&doc),
        (_, Mode::Lp) => Err(CliError::Schema(format!("--mode lp does not apply to {} documents", doc.kind))),
        (Kind::Nfold, _) => {
            let (inst, q) = nfold_instance(&doc)?;
            solve_nfold(&inst, &opts, q)
        }
        (Kind::Twostage, _) => solve_twostage(&doc, &TwoStageOptions { block_cap: args.block_cap }),
        (Kind::Decode, _) => solve_decode(&doc, &opts),
        (Kind::Transportation | Kind::Table3 | Kind::Hierarchical, _) => match model_instance(&doc)? {
            Ok(inst) => solve_nfold(&inst, &opts, None),
            Err(e) => model_status(e),
        },
    }
}

fn ip_box(p: &IpPayload) -> Result<FeasibleBox, CliError> {
    let n = p.upper.len();
    let a = int_mat(&p.a, n)?;
    let lower = match &p.lower {
        Some(l) => int_vec(l)?,
        None => IntVec::zeros(n),
    };
    let upper = p.upper.iter().map(|u| u.as_ref().map(|x| x.0.clone())).collect();
    FeasibleBox::new(a, int_vec(&p.b)?, lower, upper).map_err(schema)
}

fn ip_objective(doc: &InstanceDocument, n: usize) -> Result<Objective, CliError> {
    match &doc.objective {
        Some(spec) => spec.single()?.to_objective(n),
        None => Ok(Objective::linear(RatVec::zeros(n))),
    }
}

fn lp_cost(doc: &InstanceDocument, n: usize) -> Result<RatVec, CliError> {
    let c = match &doc.objective {
        None => RatVec::zeros(n),
        Some(spec) => match spec.single()? {
            ObjectiveDoc::Linear { c } => rat_vec(c),
            _ => return Err(CliError::Schema("continuous solves take a linear objective".into())),
        },
    };
    if c.dim() != n {
        return Err(CliError::Schema(format!("objective has {} variables, expected {n}", c.dim())));
    }
    Ok(c)
}

fn solve_ip(doc: &InstanceDocument) -> Result<ResultDocument, CliError> {
    let p: IpPayload = doc.payload()?;
    let bx = ip_box(&p)?;
    let obj = ip_objective(doc, bx.dim())?;
    let res = match &p.start {
        Some(s) => {
            let z0 = int_vec(s)?;
            let basis = augment::basis_for(bx.matrix(), &obj).map_err(solver)?;
            augment::solve_ip_greedy(&z0, &basis, &obj, &bx).map(|(z, t)| (z, t, basis))
        }
        None => augment::solve_ip(&bx, &obj),
    };
    let (z, trace, basis) = match res {
        Ok(r) => r,
        Err(e) => return augment_status(e),
    };
    verify(bx.is_feasible_int(&z), "point violates the constraints")?;
    let value = obj.eval_int(&z).map_err(solver)?;
    Ok(optimal(nums(&z), &value, &trace, basis.len()))
}

/// Starts from `start` when given, otherwise from an integer feasible point.
fn solve_lp(doc: &InstanceDocument) -> Result<ResultDocument, CliError> {
    let p: IpPayload = doc.payload()?;
    let bx = ip_box(&p)?;
    let c = lp_cost(doc, bx.dim())?;
    let z0 = match &p.start {
        Some(s) => rat_vec(s),
        None => {
            let g = graver::graver(bx.matrix());
            match augment::find_feasible(&bx, &g.directions()) {
                Ok(z) => z.to_rat(),
                Err(e) => return augment_status(e),
            }
        }
    };
    let circuits = graver::circuits(bx.matrix());
    let (z, trace) = match augment::solve_lp_circuit(&z0, &circuits, &c, &bx) {
        Ok(r) => r,
        Err(e) => return augment_status(e),
    };
    verify(bx.is_feasible_rat(&z), "point violates the constraints")?;
    Ok(optimal(rat_nums(&z), &c.dot(&z), &trace, circuits.len()))
}

fn block_width(a: &Matrix, upper: &[Vector]) -> usize {
    a.first().or(upper.first()).map_or(0, Vec::len)
}

/// The instance of an nfold document and its recorded `linf_q`.
pub fn nfold_instance(doc: &InstanceDocument) -> Result<(NFoldInstance, Option<u32>), CliError> {
    let p: NFoldPayload = doc.payload()?;
    if p.rhs.len() != p.n || p.upper.len() != p.n {
        return Err(CliError::Schema(format!("N = {} needs {0} right-hand sides and bounds", p.n)));
    }
    let width = block_width(&p.a, &p.upper);
    let objs = ObjectiveSpec::per_block(doc.objective.as_ref(), p.n, width)?;
    let inst = NFoldInstance::new(
        int_mat(&p.a, width)?,
        int_mat(&p.b, width)?,
        int_vec(&p.b0)?,
        p.rhs.iter().map(|v| int_vec(v)).collect::<Result<_, _>>()?,
        p.upper.iter().map(|v| int_vec(v)).collect::<Result<_, _>>()?,
        objs,
    )
    .map_err(schema)?;
    if let Some(c) = &p.c_rows {
        if int_mat(c, width)? != inst.c_rows() {
            return Err(CliError::Schema("C_rows differ from the objective rows".into()));
        }
    }
    Ok((inst, p.linf_q))
}

fn solve_nfold(inst: &NFoldInstance, opts: &NFoldOptions, q: Option<u32>) -> Result<ResultDocument, CliError> {
    let sol = match nfold::solve_nfold(inst, opts) {
        Ok(sol) => sol,
        Err(NFoldError::Infeasible) => return Ok(status(Status::Infeasible)),
        Err(NFoldError::Augment(e)) => return augment_status(e),
        Err(e) => return Err(solver(e)),
    };
    verify(inst.is_feasible(&sol.point), "point violates the constraints")?;
    let flat = sol.point.flatten();
    verify(inst.flat_objective().eval_int(&flat).map_err(solver)? == sol.value, "reported value is wrong")?;
    let mut d = optimal(nums(&flat), &sol.value, &sol.trace, sol.basis_size);
    d.q = q;
    Ok(d)
}

pub fn twostage_instance(doc: &InstanceDocument) -> Result<TwoStageInstance, CliError> {
    let p: TwoStagePayload = doc.payload()?;
    if p.rhs.len() != p.n || p.uy.len() != p.n {
        return Err(CliError::Schema(format!("N = {} needs {0} right-hand sides and bounds", p.n)));
    }
    let m = p.ux.len();
    let n = block_width(&p.w, &p.uy);
    let objs = ObjectiveSpec::per_block(doc.objective.as_ref(), p.n, m + n)?;
    let rows = objs.first().map(|o| o.row_matrix());
    let inst = TwoStageInstance::new(
        int_mat(&p.t, m)?,
        int_mat(&p.w, n)?,
        p.rhs.iter().map(|v| int_vec(v)).collect::<Result<_, _>>()?,
        int_vec(&p.ux)?,
        p.uy.iter().map(|v| int_vec(v)).collect::<Result<_, _>>()?,
        objs,
    )
    .map_err(schema)?;
    if let Some(rows) = rows {
        let first: Vec<usize> = (0..m).collect();
        let second: Vec<usize> = (m..m + n).collect();
        for (given, cols, name) in [(&p.c_rows, first, "C_rows"), (&p.d_rows, second, "D_rows")] {
            if let Some(given) = given {
                if int_mat(given, cols.len())? != rows.select_columns(&cols) {
                    return Err(CliError::Schema(format!("{name} differ from the objective rows")));
                }
            }
        }
    }
    Ok(inst)
}

fn solve_twostage(doc: &InstanceDocument, opts: &TwoStageOptions) -> Result<ResultDocument, CliError> {
    let inst = twostage_instance(doc)?;
    let sol = match twostage::solve_twostage(&inst, opts) {
        Ok(sol) => sol,
        Err(TwoStageError::Infeasible) => return Ok(status(Status::Infeasible)),
        Err(TwoStageError::Augment(e)) => return augment_status(e),
        Err(e) => return Err(solver(e)),
    };
    verify(inst.is_feasible(&sol.point), "point violates the constraints")?;
    verify(inst.value(&sol.point).map_err(solver)? == sol.value, "reported value is wrong")?;
    let blocks = sol.first_stage_blocks + sol.second_stage_blocks;
    Ok(optimal(nums(&sol.point.flatten()), &sol.value, &sol.trace, blocks))
}

/// Builder failures that mean "no feasible table" become results.
fn model_status(e: ModelError) -> Result<ResultDocument, CliError> {
    match e {
        ModelError::Infeasible | ModelError::BalanceMismatch { .. } | ModelError::InconsistentMargins(_) => {
            Ok(status(Status::Infeasible))
        }
        e => Err(schema(e)),
    }
}

fn int_rows(m: &Matrix) -> Result<Vec<IntVec>, CliError> {
    m.iter().map(|r| int_vec(r)).collect()
}

/// The nfold instance of a transportation, table3 or hierarchical document,
/// with the document's objective attached. The inner error is the builder's.
pub fn model_instance(doc: &InstanceDocument) -> Result<Result<NFoldInstance, ModelError>, CliError> {
    let built = match doc.kind {
        Kind::Transportation => {
            let p: TransportationPayload = doc.payload()?;
            models::build_transportation(&int_vec(&p.supplies)?, &int_vec(&p.demands)?, &int_rows(&p.caps)?)
        }
        Kind::Table3 => {
            let p: Table3Payload = doc.payload()?;
            models::build_3way_linesum(
                p.l,
                p.m,
                p.n,
                &int_mat(&p.r, p.n)?,
                &int_mat(&p.s, p.n)?,
                &int_mat(&p.t, p.m)?,
                &int_rows(&p.caps)?,
            )
        }
        Kind::Hierarchical => {
            let p: HierarchicalPayload = doc.payload()?;
            models::build_hierarchical(&MarginSpec {
                dims: p.dims,
                family: p.family,
                values: int_rows(&p.values)?,
                upper: int_vec(&p.upper)?,
            })
        }
        k => return Err(CliError::Schema(format!("{k} is not a table model"))),
    };
    let inst = match built {
        Ok(inst) => inst,
        Err(e) => return Ok(Err(e)),
    };
    let objs = ObjectiveSpec::per_block(doc.objective.as_ref(), inst.n_blocks(), inst.block_width())?;
    Ok(Ok(inst.with_objectives(objs).map_err(schema)?))
}

pub fn decoding_spec(doc: &InstanceDocument) -> Result<DecodingSpec, CliError> {
    let p: DecodePayload = doc.payload()?;
    if doc.objective.is_some() {
        return Err(CliError::Schema("decode documents carry no objective".into()));
    }
    let [l, m, n] = p.dims;
    Ok(DecodingSpec {
        dims: (l, m, n),
        alphabet: p.alphabet.to_int()?,
        checksum: p.checksum.to_int()?,
        received: int_vec(&p.received)?.into_inner(),
        p: match p.p {
            PNorm::P(p) => Norm::P(p),
            PNorm::Inf => Norm::Inf,
        },
        coords: p.coords,
    })
}

fn solve_decode(doc: &InstanceDocument, opts: &NFoldOptions) -> Result<ResultDocument, CliError> {
    let spec = decoding_spec(doc)?;
    match models::Decoder::new(spec.dims, spec.alphabet.clone(), spec.checksum.clone(), opts) {
        Ok(decoder) => decode_document(&decoder, &spec),
        Err(e) => model_status(e),
    }
}

/// Decodes with a prepared decoder. The point is the decoded message and the
/// value its distance to the received word.
pub fn decode_document(decoder: &models::Decoder, spec: &DecodingSpec) -> Result<ResultDocument, CliError> {
    let res = match decoder.decode(&spec.received, spec.p, spec.coords.as_deref()) {
        Ok(r) => r,
        Err(ModelError::Infeasible) => return Ok(status(Status::Infeasible)),
        Err(e @ ModelError::InvalidSpec(_)) => return Err(schema(e)),
        Err(e) => return Err(solver(e)),
    };
    verify(
        res.message.iter().all(|x| !x.is_negative() && *x <= spec.alphabet),
        "message leaves the alphabet",
    )?;
    let word = models::encode(spec.dims, &spec.checksum, &res.message)
        .map_err(|_| CliError::Verification("message breaks a checksum".into()))?;
    verify(
        models::informative_positions(spec.dims).into_iter().all(|i| word[i] == res.blown[i]),
        "decoded word does not encode the message",
    )?;
    let point = res.message.iter().map(|x| Num::int(x.clone())).collect();
    let mut d = optimal(point, &res.distance, &res.trace, decoder.basis_size());
    d.q = res.q;
    Ok(d)
}

/// Box and objective of any document, for enumeration.
enum Flat {
    Problem(FeasibleBox, Objective, Option<u32>),
    Infeasible,
}

fn flat_problem(doc: &InstanceDocument) -> Result<Flat, CliError> {
    Ok(match doc.kind {
        Kind::Ip => {
            let p: IpPayload = doc.payload()?;
            let bx = ip_box(&p)?;
            let obj = ip_objective(doc, bx.dim())?;
            Flat::Problem(bx, obj, None)
        }
        Kind::Lp => {
            let p: IpPayload = doc.payload()?;
            let bx = ip_box(&p)?;
            let c = lp_cost(doc, bx.dim())?;
            Flat::Problem(bx, Objective::linear(c), None)
        }
        Kind::Nfold => {
            let (inst, q) = nfold_instance(doc)?;
            Flat::Problem(inst.feasible_box(), inst.flat_objective(), q)
        }
        Kind::Twostage => {
            let inst = twostage_instance(doc)?;
            Flat::Problem(inst.feasible_box(), inst.flat_objective(), None)
        }
        Kind::Decode => match models::decode_instance(&decoding_spec(doc)?) {
            Ok((inst, q)) => Flat::Problem(inst.feasible_box(), inst.flat_objective(), q),
            Err(e) => return Err(schema(e)),
        },
        _ => match model_instance(doc)? {
            Ok(inst) => Flat::Problem(inst.feasible_box(), inst.flat_objective(), None),
            Err(e) => match model_status(e)?.status {
                Status::Infeasible => Flat::Infeasible,
                _ => unreachable!("model_status only returns infeasible results"),
            },
        },
    })
}

/// Exhaustive minimization. Model documents are enumerated in their nfold
/// form, so a decode document yields the nfold point rather than the message.
fn oracle_cmd(args: &OracleArgs) -> Result<ResultDocument, CliError> {
    let doc = read_document(&args.path)?;
    let (bx, obj, q) = match flat_problem(&doc)? {
        Flat::Problem(bx, obj, q) => (bx, obj, q),
        Flat::Infeasible => return Ok(status(Status::Infeasible)),
    };
    let bx = match args.radius {
        Some(r) => oracle::clip_box(&bx, &BigInt::from(r)).map_err(schema)?,
        None => bx,
    };
    let res = match oracle::oracle_minimize(&bx, &obj, args.cell_cap) {
        Ok(r) => r,
        Err(OracleError::SearchSpaceTooLarge(cap)) => return Err(CliError::SearchSpaceTooLarge(cap)),
        Err(OracleError::UnboundedBox(i)) => {
            return Err(CliError::Schema(format!("variable {i} has no upper bound; pass --radius")))
        }
        Err(e) => return Err(solver(e)),
    };
    let mut d = match res.optimum {
        Some((z, value)) => {
            verify(bx.is_feasible_int(&z), "point violates the constraints")?;
            let mut d = optimal(nums(&z), &value, &AugmentTrace::default(), 0);
            d.trace = None;
            d
        }
        None => status(Status::Infeasible),
    };
    d.q = q;
    Ok(d)
}

/// Constraint matrix and objective rows of any document.
fn matrices(doc: &InstanceDocument) -> Result<(IntMat, IntMat), CliError> {
    let (bx, obj) = match flat_problem(doc)? {
        Flat::Problem(bx, obj, _) => (bx, obj),
        Flat::Infeasible => return Err(CliError::Schema("the model has no feasible table".into())),
    };
    Ok((bx.matrix().clone(), obj.row_matrix()))
}

fn basis(args: &BasisArgs) -> Result<String, CliError> {
    let doc = read_document(&args.path)?;
    let (a, c) = matrices(&doc)?;
    let (name, rows, cols, elements) = if args.circuits {
        let set = graver::circuits(&a);
        ("circuits", a.rows(), a.cols(), set.elements().to_vec())
    } else if args.graver {
        let g = graver::graver(&a);
        ("graver", a.rows(), a.cols(), g.elements().to_vec())
    } else {
        let g = graver::composite_directions(&a, &c).map_err(solver)?;
        ("composite", g.matrix().rows(), g.matrix().cols(), g.elements().to_vec())
    };
    let d = BasisDocument {
        format_version: FORMAT_VERSION,
        basis: name.to_string(),
        rows,
        cols,
        elements: elements.iter().map(nums).collect(),
    };
    Ok(serde_json::to_string_pretty(&d).expect("documents serialize"))
}

/// The nfold document of an instance; one objective when all blocks agree.
pub fn nfold_document(inst: &NFoldInstance, linf_q: Option<u32>) -> Result<InstanceDocument, CliError> {
    let payload = NFoldPayload {
        a: matrix(inst.a()),
        b: matrix(inst.b()),
        n: inst.n_blocks(),
        b0: nums(inst.b0()),
        rhs: inst.rhs().iter().map(nums).collect(),
        upper: inst.upper().iter().map(nums).collect(),
        c_rows: Some(matrix(&inst.c_rows())),
        linf_q,
    };
    let mut blocks = inst.objectives().iter().map(ObjectiveDoc::from_composite).collect::<Result<Vec<_>, _>>()?;
    let objective = if blocks.windows(2).all(|w| w[0] == w[1]) {
        ObjectiveSpec::Single(blocks.swap_remove(0))
    } else {
        ObjectiveSpec::Blocks { blocks }
    };
    Ok(InstanceDocument {
        format_version: FORMAT_VERSION,
        kind: Kind::Nfold,
        payload: serde_json::to_value(payload).expect("payloads serialize"),
        objective: Some(objective),
    })
}

fn model(kind: ModelKind, path: &Path) -> Result<String, CliError> {
    let doc = read_document(path)?;
    let expected = match kind {
        ModelKind::Transportation => Kind::Transportation,
        ModelKind::Table3 => Kind::Table3,
        ModelKind::Hierarchical => Kind::Hierarchical,
        ModelKind::Decode => Kind::Decode,
    };
    if doc.kind != expected {
        return Err(CliError::Schema(format!("expected a {expected} document, got {}", doc.kind)));
    }
    let (inst, q) = if kind == ModelKind::Decode {
        models::decode_instance(&decoding_spec(&doc)?).map_err(schema)?
    } else {
        (model_instance(&doc)?.map_err(schema)?, None)
    };
    Ok(nfold_document(&inst, q)?.to_json())
}
