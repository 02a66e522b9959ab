use graver_opt::augment::{sebo_bound, solve_ip, solve_ip_greedy, FeasibleBox};
use graver_opt::graver::{decompose, graver};
use graver_opt::linalg::{IntMat, IntVec, Rat};
use graver_opt::objective::{range_bound, CompositeObjective, Objective, UnivariateConvex};
use graver_opt::oracle::{enumerate_feasible, oracle_minimize, DEFAULT_CELL_CAP};
use num_bigint::BigInt;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    bx: FeasibleBox,
    obj: Objective,
    start: IntVec,
}

fn objective(n: usize) -> impl Strategy<Value = Objective> {
    let linear = proptest::collection::vec(-5i64..=5, n)
        .prop_map(|c| Objective::linear(IntVec::from_i64(&c).to_rat()));
    let rows = proptest::collection::vec((proptest::collection::vec(-2i64..=2, n), -3i64..=3), 1..=2);
    let composite = (proptest::collection::vec(-3i64..=3, n), rows).prop_map(move |(c, rows)| {
        let rows = rows
            .into_iter()
            .map(|(r, k)| {
                let f = UnivariateConvex::abs_power(Rat::from_integer(1.into()), 2, BigInt::from(k)).unwrap();
                (IntVec::from_i64(&r), f)
            })
            .collect();
        Objective::Composite(CompositeObjective::new(IntVec::from_i64(&c), rows).unwrap())
    });
    prop_oneof![linear, composite]
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..=2, 2usize..=5).prop_flat_map(|(m, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), m),
            proptest::collection::vec(0i64..=6, n),
            proptest::collection::vec(0.0f64..1.0, n),
            objective(n),
        )
            .prop_map(|(rows, upper, frac, obj)| {
                let a = IntMat::from_rows(&rows);
                let start: Vec<i64> = upper.iter().zip(&frac).map(|(&u, f)| (f * (u + 1) as f64) as i64).collect();
                let start = IntVec::from_i64(&start);
                let b = a.mul_vec(&start).unwrap();
                let bx = FeasibleBox::bounded(a, b, &IntVec::from_i64(&upper)).unwrap();
                Case { bx, obj, start }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_matches_oracle(c in case()) {
        let (z, trace, _) = solve_ip(&c.bx, &c.obj).unwrap();
        let oracle = oracle_minimize(&c.bx, &c.obj, DEFAULT_CELL_CAP).unwrap();
        let (_, best) = oracle.optimum.unwrap();
        prop_assert!(c.bx.is_feasible_int(&z));
        prop_assert_eq!(c.obj.eval_int(&z).unwrap(), best.clone());
        prop_assert!(trace.is_geometric(&best));
        prop_assert!(trace.len() as u64 <= trace.step_bound().unwrap());
    }

    #[test]
    fn greedy_from_given_start(c in case()) {
        let basis = graver_opt::augment::basis_for(c.bx.matrix(), &c.obj).unwrap();
        let (z, trace) = solve_ip_greedy(&c.start, &basis, &c.obj, &c.bx).unwrap();
        let best = oracle_minimize(&c.bx, &c.obj, DEFAULT_CELL_CAP).unwrap().optimum.unwrap().1;
        prop_assert_eq!(c.obj.eval_int(&z).unwrap(), best.clone());
        prop_assert_eq!(trace.n_eff, sebo_bound(c.obj.dim() + c.obj.num_rows()));
        prop_assert!(trace.is_geometric(&best));
    }

    #[test]
    fn range_bound_dominates_spread(c in case()) {
        let h = range_bound(&c.obj, c.bx.lower(), &c.bx.upper_int()).unwrap();
        let values: Vec<Rat> = enumerate_feasible(&c.bx, DEFAULT_CELL_CAP)
            .unwrap()
            .iter()
            .map(|z| c.obj.eval_int(z).unwrap())
            .collect();
        let spread = values.iter().max().unwrap() - values.iter().min().unwrap();
        prop_assert!(h >= spread);
    }

    #[test]
    fn differences_decompose(c in case(), pick in 0usize..1000) {
        let points = enumerate_feasible(&c.bx, DEFAULT_CELL_CAP).unwrap();
        let g = graver(c.bx.matrix());
        let n = c.bx.dim();
        let other = &points[pick % points.len()];
        let v = &c.start - other;
        let d = decompose(&v, &g, sebo_bound(n)).unwrap();
        prop_assert!(d.len() <= sebo_bound(n));
        prop_assert_eq!(d.sum(n), v);
    }
}
