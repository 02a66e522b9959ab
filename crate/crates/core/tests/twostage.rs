use graver_opt::linalg::{IntMat, IntVec, Rat};
use graver_opt::objective::{CompositeObjective, UnivariateConvex};
use graver_opt::oracle::{enumerate_feasible, oracle_minimize, DEFAULT_CELL_CAP};
use graver_opt::twostage::{
    build_twostage_matrix, collect_building_blocks, improving_vector, solve_twostage, TwoStageInstance, TwoStageOptions,
    TwoStagePoint,
};
use num_bigint::BigInt;
use proptest::prelude::*;

fn int_mat(rows: usize, cols: usize) -> impl Strategy<Value = IntMat> {
    proptest::collection::vec(proptest::collection::vec(-2i64..=2, cols), rows).prop_map(|r| {
        let cols = r.first().map_or(0, |x| x.len());
        IntMat::from_int_rows(cols, &r.iter().map(|x| IntVec::from_i64(x)).collect::<Vec<_>>()).unwrap()
    })
}

fn squares(k: usize, shifts: &[i64]) -> CompositeObjective {
    CompositeObjective::separable(
        (0..k)
            .map(|i| UnivariateConvex::abs_power(Rat::from_integer(BigInt::from(1)), 2, BigInt::from(shifts[i % shifts.len()])).unwrap())
            .collect(),
    )
}

#[derive(Debug, Clone)]
struct Case {
    inst: TwoStageInstance,
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..=2, 1usize..=2, 1usize..=2, 1usize..=3).prop_flat_map(|(d, m, n, ns)| {
        (
            int_mat(d, m),
            int_mat(d, n),
            proptest::collection::vec(0i64..=2, m),
            proptest::collection::vec(proptest::collection::vec(0i64..=2, n), ns),
            proptest::collection::vec(-2i64..=3, 3),
        )
            .prop_map(move |(t, w, x, ys, shifts)| {
                let ux = IntVec::from_i64(&vec![2; m]);
                let x = IntVec::from_i64(&x);
                let rhs = ys
                    .iter()
                    .map(|y| &t.mul_vec(&x).unwrap() + &w.mul_vec(&IntVec::from_i64(y)).unwrap())
                    .collect::<Vec<_>>();
                let objs = (0..ns).map(|k| squares(m + n, &[shifts[k % 3], shifts[(k + 1) % 3]])).collect();
                let inst = TwoStageInstance::new(t, w, rhs, ux, vec![IntVec::from_i64(&vec![2; n]); ns], objs).unwrap();
                Case { inst }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kernel_iff_scenarios_vanish(
        t in int_mat(2, 2),
        w in int_mat(2, 2),
        v in proptest::collection::vec(-2i64..=2, 8),
    ) {
        let big = build_twostage_matrix(&t, &w, 3).unwrap();
        let z = IntVec::from_i64(&v);
        let p = TwoStagePoint::from_flat(&z, 2, 2);
        let tv = t.mul_vec(&p.x).unwrap();
        let each = p.y.iter().all(|y| (&tv + &w.mul_vec(y).unwrap()).is_zero());
        prop_assert_eq!(big.mul_vec(&z).unwrap().is_zero(), each);
    }

    #[test]
    fn solve_matches_oracle(c in case()) {
        let sol = solve_twostage(&c.inst, &TwoStageOptions::default()).unwrap();
        prop_assert!(c.inst.is_feasible(&sol.point));
        let best = oracle_minimize(&c.inst.feasible_box(), &c.inst.flat_objective(), DEFAULT_CELL_CAP)
            .unwrap().optimum.unwrap().1;
        prop_assert_eq!(sol.value, best);
    }

    #[test]
    fn certificate_iff_optimal(c in case(), pick in 0usize..1000) {
        let inst = &c.inst;
        let (cm, dm) = inst.row_matrices();
        let blocks = collect_building_blocks(inst.t(), inst.w(), &cm, &dm, inst.n_scenarios()).unwrap();
        let points = enumerate_feasible(&inst.feasible_box(), DEFAULT_CELL_CAP).unwrap();
        let obj = inst.flat_objective();
        let best = points.iter().map(|z| obj.eval_int(z).unwrap()).min().unwrap();
        let z = &points[pick % points.len()];
        let p = TwoStagePoint::from_flat(z, inst.t().cols(), inst.w().cols());
        let improving = improving_vector(&p, &blocks, inst).unwrap();
        prop_assert_eq!(improving.is_none(), obj.eval_int(z).unwrap() == best);
    }
}
