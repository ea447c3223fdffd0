use proptest::prelude::*;
use std::sync::{Arc, OnceLock};
use wavemap_core::bsystem::{build_a_ell, change_vars, explicit_solution, BParams, Direction};
use wavemap_core::ground_state::{solve_ground_state, structural_constants};
use wavemap_core::linop::{coercivity_check, hardy_check, CoercivityOp, HardyVariant, LinearOps};
use wavemap_core::numerics::{Parity, RadialField, RadialGrid};
use wavemap_core::profiles::poly::eval_monomial;
use wavemap_core::profiles::Poly;
use wavemap_core::wave::{energy, WaveState};

fn ops7() -> &'static LinearOps {
    static OPS: OnceLock<LinearOps> = OnceLock::new();
    OPS.get_or_init(|| LinearOps::new(Arc::new(solve_ground_state(7, 1000.0, 1e-12).unwrap())))
}

fn bump(grid: &Arc<RadialGrid>, a: f64, c: f64, w: f64) -> RadialField {
    RadialField::from_fn(grid, Parity::Odd, |y| a * y * (-((y - c) / w).powi(2)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exponents_split_half_dimension(d in 7usize..60) {
        let c = structural_constants(d).unwrap();
        let total = 2.0 * c.gamma + 2.0 * c.hbar as f64 + 2.0 * c.delta;
        prop_assert!((total - d as f64).abs() < 1e-12);
        prop_assert!(c.gamma > 1.0 && c.gamma <= 2.0);
        prop_assert!((0.0..1.0).contains(&c.delta));
    }

    #[test]
    fn variable_change_round_trip(
        b1 in 0.001f64..0.2,
        b2 in -0.01f64..0.01,
        b3 in -1e-3f64..1e-3,
        s in 5.0f64..500.0,
    ) {
        let p = BParams::new(3, 3, 2.0).unwrap();
        let spec = build_a_ell(3, 2.0).unwrap();
        let b = [b1, b2, b3];
        let u = change_vars(&p, &spec, &b, s, Direction::BToU);
        let v = change_vars(&p, &spec, &u, s, Direction::UToV);
        let back = change_vars(&p, &spec, &change_vars(&p, &spec, &v, s, Direction::VToU), s, Direction::UToB);
        for (x, y) in b.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let be = explicit_solution(&p, s);
        let ue = change_vars(&p, &spec, &be, s, Direction::BToU);
        prop_assert!(ue.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn polynomial_derivative_and_evaluation(
        e in proptest::collection::vec(0u32..4, 3),
        b in proptest::collection::vec(-2.0f64..2.0, 3),
        c in -3.0f64..3.0,
    ) {
        let grid = Arc::new(RadialGrid::uniform(7, 1.0, 16).unwrap());
        let one = RadialField::from_fn(&grid, Parity::Even, |_| 1.0);
        let mut poly = Poly::monomial(e.clone(), one.scale(c));
        poly.add_term(vec![0, 0, 0], 1.0, &one);
        let value = poly.evaluate(&b).unwrap().values[3];
        prop_assert!((value - (c * eval_monomial(&e, &b) + 1.0)).abs() <= 1e-12 * (1.0 + value.abs()));
        for j in 1..=3 {
            let exact = if e[j - 1] == 0 {
                0.0
            } else {
                let mut lower = e.clone();
                lower[j - 1] -= 1;
                c * e[j - 1] as f64 * eval_monomial(&lower, &b)
            };
            let got = poly.partial(j).evaluate(&b).map_or(0.0, |f| f.values[5]);
            prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        }
        prop_assert_eq!(poly.shift(&[1, 0, 2], 1.0).terms.len(), poly.terms.len());
    }

    #[test]
    fn energy_scales_with_dilation(lambda in 1.0f64..2.5, c in 2.0f64..4.0, w in 0.4f64..0.8) {
        // u(r / lambda) has energy lambda^{d-2} E(u)
        let grid = Arc::new(RadialGrid::uniform(7, 30.0, 12_001).unwrap());
        let profile = |s: f64| move |r: f64| 0.3 * ((-((r / s - c) / w).powi(2)).exp() - (-((r / s + c) / w).powi(2)).exp());
        let base = energy(&WaveState::from_fn(&grid, 0.0, profile(1.0), |_| 0.0)).unwrap().value;
        let scaled = energy(&WaveState::from_fn(&grid, 0.0, profile(lambda), |_| 0.0)).unwrap().value;
        let ratio = scaled / base;
        prop_assert!((ratio / lambda.powi(5) - 1.0).abs() <= 1e-6, "ratio {ratio}");
    }

    #[test]
    fn coercivity_ratio_is_scale_invariant(c0 in 0.5f64..5.0, w in 0.5f64..2.0, scale in 0.01f64..100.0) {
        let ops = ops7();
        let f = bump(&ops.gs.grid, 1.0, c0, w);
        let r1 = coercivity_check(ops, None, &f, CoercivityOp::AStar, 0, 0.0).unwrap();
        let r2 = coercivity_check(ops, None, &f.scale(scale), CoercivityOp::AStar, 0, 0.0).unwrap();
        prop_assert!(r1 > 0.0);
        prop_assert!((r1 - r2).abs() <= 1e-10 * r1);
    }

    #[test]
    fn origin_hardy_slack_is_nonnegative_and_quadratic(a in -2.0f64..2.0, c0 in 0.0f64..1.5, w in 0.2f64..1.0, i in 0usize..3) {
        let grid = Arc::new(RadialGrid::uniform(7, 4.0, 4001).unwrap());
        let f = bump(&grid, a, c0, w);
        let rep = hardy_check(&f, HardyVariant::Origin { i }).unwrap();
        let rep2 = hardy_check(&f.scale(3.0), HardyVariant::Origin { i }).unwrap();
        let size = rep.lhs.abs() + rep.rhs.abs();
        prop_assert!(rep.slack >= -1e-9 * size, "{rep:?}");
        prop_assert!((rep2.slack - 9.0 * rep.slack).abs() <= 1e-9 * 9.0 * size.max(1e-300));
    }
}
