use graver_opt::graver::graver;
use graver_opt::linalg::{IntMat, IntVec, Rat};
use graver_opt::models::{build_3way_linesum, build_transportation, congestion_objective};
use graver_opt::nfold::{block_type, build_nfold_matrix, detect_complexity, lift_graver, solve_nfold, NFoldInstance, NFoldOptions};
use graver_opt::objective::{CompositeObjective, UnivariateConvex};
use graver_opt::oracle::{oracle_minimize, DEFAULT_CELL_CAP};
use num_bigint::BigInt;

fn pairs() -> Vec<(IntMat, IntMat)> {
    vec![
        (IntMat::from_rows(&[vec![1, 1]]), IntMat::from_rows(&[vec![1, 0]])),
        (IntMat::from_rows(&[vec![1, 1]]), IntMat::identity(2)),
        (IntMat::from_rows(&[vec![1, 2]]), IntMat::from_rows(&[vec![1, 0]])),
        (IntMat::from_rows(&[vec![1, 1, 1]]), IntMat::from_rows(&[vec![1, 0, 0]])),
    ]
}

#[test]
fn lifting_equals_direct() {
    for (a, b) in pairs() {
        let seed = detect_complexity(&a, &b, 6).unwrap();
        let g = seed.generator_type_bound;
        for nb in g..=g + 2 {
            let lifted = lift_graver(&seed, nb).unwrap();
            let direct = graver(&build_nfold_matrix(&a, &b, nb).unwrap());
            assert_eq!(lifted.elements(), direct.elements(), "A={a:?} B={b:?} N={nb}");
            assert!(direct.elements().iter().all(|e| block_type(e, a.cols()) <= g));
        }
    }
}

fn check_against_oracle(inst: &NFoldInstance, opts: &NFoldOptions) -> Rat {
    let sol = solve_nfold(inst, opts).unwrap();
    assert!(inst.is_feasible(&sol.point));
    let best = oracle_minimize(&inst.feasible_box(), &inst.flat_objective(), DEFAULT_CELL_CAP)
        .unwrap()
        .optimum
        .unwrap()
        .1;
    assert_eq!(sol.value, best);
    assert!(sol.trace.is_geometric(&best));
    best
}

#[test]
fn congestion_transportation() {
    let inst = build_transportation(
        &IntVec::from_i64(&[3, 3]),
        &IntVec::from_i64(&[2, 2, 2]),
        &vec![IntVec::from_i64(&[3, 3]); 3],
    )
    .unwrap();
    let one = Rat::from_integer(BigInt::from(1));
    let costs = (0..3)
        .map(|i| congestion_objective(&[one.clone() * BigInt::from(i + 1), one.clone()], &[2, 2]).unwrap())
        .collect();
    let inst = inst.with_objectives(costs).unwrap();
    check_against_oracle(&inst, &NFoldOptions::default());
    // forced through lifting as well
    let lifted = NFoldOptions { direct_threshold: 0, ..NFoldOptions::default() };
    check_against_oracle(&inst, &lifted);
}

#[test]
fn linesum_tables() {
    for n in 2..=4usize {
        // a table of ones: every line sum is the line length
        let r = IntMat::from_rows(&vec![vec![2; n]; 2]);
        let s = IntMat::from_rows(&vec![vec![2; n]; 2]);
        let t = IntMat::from_rows(&vec![vec![n as i64; 2]; 2]);
        let caps = vec![IntVec::from_i64(&[2; 4]); n];
        let inst = build_3way_linesum(2, 2, n, &r, &s, &t, &caps).unwrap();
        let objs = (0..n)
            .map(|k| {
                let funcs = (0..4)
                    .map(|c| UnivariateConvex::abs_power(Rat::from_integer(BigInt::from(1)), 2, BigInt::from(((c + k) % 3) as i64)).unwrap())
                    .collect();
                CompositeObjective::separable(funcs)
            })
            .collect();
        check_against_oracle(&inst.with_objectives(objs).unwrap(), &NFoldOptions::default());
    }
}

#[test]
fn non_selection_rows() {
    let a = IntMat::from_rows(&[vec![1, 1, 1]]);
    let b = IntMat::from_rows(&[vec![1, 0, 0]]);
    let row = |k: i64| {
        CompositeObjective::new(
            IntVec::from_i64(&[0, 1, 0]),
            vec![(IntVec::from_i64(&[1, -1, 0]), UnivariateConvex::abs_power(Rat::from_integer(BigInt::from(1)), 2, BigInt::from(k)).unwrap())],
        )
        .unwrap()
    };
    let inst = NFoldInstance::new(
        a,
        b,
        IntVec::from_i64(&[3]),
        vec![IntVec::from_i64(&[3]); 3],
        vec![IntVec::from_i64(&[3, 3, 3]); 3],
        vec![row(1), row(-1), row(2)],
    )
    .unwrap();
    check_against_oracle(&inst, &NFoldOptions::default());
}
