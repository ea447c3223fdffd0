use std::sync::{Arc, OnceLock};
use wavemap_core::ground_state::solve_ground_state;
use wavemap_core::linop::*;
use wavemap_core::numerics::cutoff::chi;
use wavemap_core::numerics::fit::loglog_fit;
use wavemap_core::numerics::{Parity, RadialField};
use wavemap_core::profiles::{make_t_profiles, ProfileSet};

fn ops7() -> &'static Arc<LinearOps> {
    static OPS: OnceLock<Arc<LinearOps>> = OnceLock::new();
    OPS.get_or_init(|| Arc::new(LinearOps::new(Arc::new(solve_ground_state(7, 1000.0, 1e-12).unwrap()))))
}

fn profiles7() -> &'static ProfileSet {
    static PS: OnceLock<ProfileSet> = OnceLock::new();
    PS.get_or_init(|| make_t_profiles(ops7().clone(), 3, 3).unwrap())
}

fn field(f: impl Fn(f64) -> f64, parity: Parity) -> RadialField {
    RadialField::from_fn(&ops7().gs.grid, parity, f)
}

/// Composite Simpson rule for `int_a^b g` with `n` (even) panels.
fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let s: f64 = (1..n).map(|i| g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (g(a) + g(b) + s) * h / 3.0
}

#[test]
fn a_annihilates_lambda_q() {
    let ops = ops7();
    let res = ops.apply_a(&ops.gs.lam_q).unwrap();
    assert!(res.sup_on(0.01, 500.0) <= 1e-8, "{:e}", res.sup_on(0.01, 500.0));
}

#[test]
fn l_annihilates_lambda_q() {
    let ops = ops7();
    let lq = &ops.gs.lam_q;
    let res = ops.apply_l(lq).unwrap();
    let scale = ops.l_term_scale(lq).unwrap();
    assert!(relative_sup(&res, &scale, 0.1, 500.0) <= 1e-5);
}

#[test]
fn factorization_matches_direct_operator() {
    let ops = ops7();
    let f = field(|y| y * (-y * y).exp(), Parity::Odd);
    let composed = ops.apply_a_star(&ops.apply_a(&f).unwrap()).unwrap();
    let d1 = f.deriv(1).unwrap();
    let d2 = f.deriv(2).unwrap();
    let z = &ops.gs.z;
    let grid = &ops.gs.grid;
    let via_l = ops.apply_l(&f).unwrap();
    let (mut worst, mut worst_l): (f64, f64) = (0.0, 0.0);
    for (i, &y) in grid.nodes().iter().enumerate() {
        if !(0.05..=4.0).contains(&y) {
            continue;
        }
        let terms = [d2.values[i], 6.0 / y * d1.values[i], z.values[i] / (y * y) * f.values[i]];
        let direct = -terms[0] - terms[1] + terms[2];
        let scale = terms.iter().map(|t| t.abs()).sum::<f64>();
        worst = worst.max((composed.values[i] - direct).abs() / scale);
        worst_l = worst_l.max((via_l.values[i] - direct).abs() / scale);
    }
    assert!(worst < 1e-6, "{worst:e}");
    assert!(worst_l < 1e-6, "{worst_l:e}");
}

#[test]
fn inversion_round_trip_up_to_kernel() {
    let ops = ops7();
    let g = field(|y| y * (-y).exp(), Parity::Odd);
    let w = ops.invert_l(&ops.apply_l(&g).unwrap()).unwrap();
    let diff = w.sub(&g);
    // least squares multiple of Lambda Q on [0, 20]
    let lq = &ops.gs.lam_q;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &y) in ops.gs.grid.nodes().iter().enumerate() {
        if y <= 20.0 {
            num += diff.values[i] * lq.values[i];
            den += lq.values[i] * lq.values[i];
        }
    }
    let rest = diff.axpy(-num / den, lq);
    assert!(rest.sup_on(0.0, 20.0) <= 1e-5 * g.sup_on(0.0, 20.0), "{:e}", rest.sup_on(0.0, 20.0));
}

#[test]
fn inversion_of_zero_is_zero() {
    let ops = ops7();
    let w = ops.invert_l(&field(|_| 0.0, Parity::Odd)).unwrap();
    assert!(w.values.iter().all(|v| *v == 0.0));
}

#[test]
fn first_generator_grows_like_two_minus_gamma() {
    let gs = Arc::new(solve_ground_state(8, 1e4, 1e-12).unwrap());
    let g = gs.consts.gamma;
    let ops = LinearOps::new(gs.clone());
    let phi1 = ops.invert_l(&gs.lam_q.scale(-1.0)).unwrap();
    let (_, slope) = loglog_fit(gs.grid.nodes(), &phi1.values, 500.0, 5000.0).unwrap();
    assert!((slope - (2.0 - g)).abs() <= 0.02 * (2.0 - g), "slope {slope} vs {}", 2.0 - g);
}

#[test]
fn second_kernel_element() {
    let ops = ops7();
    let gam = ops.kernel_gamma().unwrap();
    assert!(ops.kernel_gamma_based().unwrap().at(1.0).abs() < 1e-12);
    let res = ops.apply_l(&gam).unwrap();
    let scale = ops.l_term_scale(&gam).unwrap();
    assert!(relative_sup(&res, &scale, 0.1, 100.0) <= 1e-5);
    let (_, slope) = loglog_fit(ops.gs.grid.nodes(), &gam.values, 50.0, 500.0).unwrap();
    assert!((slope + 3.0).abs() <= 0.06, "slope {slope}");
}

#[test]
fn block_operator_identities() {
    let ops = ops7();
    let lq = RadialPair::first_only(ops.gs.lam_q.clone());
    let h = ops.apply_h(&lq).unwrap();
    assert!(h.first.sup_on(0.0, 500.0) < 1e-12);
    let scale = ops.l_term_scale(&ops.gs.lam_q).unwrap();
    assert!(relative_sup(&h.second, &scale, 0.1, 500.0) < 1e-5);

    let p = RadialPair::new(field(|y| y * (-y * y / 4.0).exp(), Parity::Odd), field(|y| y.powi(3) * (-y * y / 2.0).exp(), Parity::Odd)).unwrap();
    let back = ops.apply_h(&ops.apply_h_inv(&p).unwrap()).unwrap();
    assert!(back.sub(&p).sup_on(0.0, 20.0) <= 1e-5 * p.sup_on(0.0, 20.0));

    let h2 = ops.apply_h_power(&p, 2).unwrap();
    let direct = RadialPair { first: ops.apply_l(&p.first).unwrap().scale(-1.0), second: ops.apply_l(&p.second).unwrap().scale(-1.0) };
    assert!(h2.sub(&direct).sup_on(0.0, 500.0) <= 1e-12 * direct.sup_on(0.0, 500.0));
}

#[test]
fn inner_product_is_positive() {
    let ops = ops7();
    let p = RadialPair::new(field(|y| y * (-y).exp(), Parity::Odd), field(|y| (-y * y).exp() * y, Parity::Odd)).unwrap();
    assert!(ops.inner(&p, &p) > 0.0);
    let zero = p.scale(0.0);
    assert_eq!(ops.inner(&zero, &zero), 0.0);
}

#[test]
fn adjoint_pairs() {
    let ops = ops7();
    let bump = |c: f64, w: f64| move |y: f64| y * (-((y - c) / w).powi(2)).exp();
    let u = field(bump(2.0, 0.7), Parity::Odd);
    let w = field(bump(3.0, 1.1), Parity::Odd);
    let lhs = inner_scalar(&ops.apply_a(&u).unwrap(), &w);
    let rhs = inner_scalar(&u, &ops.apply_a_star(&w).unwrap());
    let norm = inner_scalar(&u, &u).sqrt() * inner_scalar(&w, &w).sqrt();
    assert!((lhs - rhs).abs() <= 1e-6 * norm, "{lhs} {rhs}");

    let pu = RadialPair::new(u.clone(), field(bump(1.5, 0.5), Parity::Odd)).unwrap();
    let pv = RadialPair::new(field(bump(2.5, 0.8), Parity::Odd), w.clone()).unwrap();
    let lhs = ops.inner(&ops.apply_h(&pu).unwrap(), &pv);
    let rhs = ops.inner(&pu, &ops.apply_h_star(&pv).unwrap());
    let norm = ops.inner(&pu, &pu).sqrt() * ops.inner(&pv, &pv).sqrt();
    assert!((lhs - rhs).abs() <= 1e-6 * norm, "{lhs} {rhs}");
}

#[test]
fn phi_m_normalization() {
    let ops = ops7();
    let ps = profiles7();
    let phi = build_phi_m(ops, &ps.t, 20.0, 3).unwrap();
    assert_eq!(phi.coeffs[0], 1.0);
    assert!(phi.coeffs[1].abs() < 1e-8 * phi.coeffs[2].abs());
    // independent quadrature of <chi_M Lambda Q, Lambda Q> = int chi(y/20) (y Q')^2 y^6 dy
    let gs = &ops.gs;
    let direct = simpson(
        |y| {
            let (_, dq) = gs.q_at(y);
            chi(y / 20.0) * (y * dq).powi(2) * y.powi(6)
        },
        0.0,
        40.0,
        40_000,
    );
    let pairing = ops.inner(&phi.field, &ps.t[0]);
    assert!((pairing - direct).abs() <= 0.05 * direct, "{pairing} {direct}");
    assert!((phi.norm - direct).abs() <= 0.05 * direct);
    let dual = phi.duality_matrix(ops, &ps.t).unwrap();
    for (i, row) in dual.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            let expected = if i == k { if k % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
            assert!((v - expected).abs() <= 1e-4, "({i}, {k}) = {v}");
        }
    }
}

#[test]
fn phi_m_rejects_small_m_and_even_l() {
    let ops = ops7();
    let ps = profiles7();
    assert!(build_phi_m(ops, &ps.t, 5.0, 3).is_err());
    assert!(build_phi_m(ops, &ps.t, 20.0, 2).is_err());
}

#[test]
fn hardy_origin_with_gaussian() {
    let f = field(|y| (-y * y).exp(), Parity::Even);
    let rep = hardy_check(&f, HardyVariant::Origin { i: 0 }).unwrap();
    // (d - 2)^2 / 4 = 25/4 and boundary constant 5/2 for d = 7
    let base = simpson(|y| (-2.0 * y * y).exp() * y.powi(4), 0.0, 1.0, 2000);
    let rhs = 6.25 * base - 2.5 * (-2.0f64).exp();
    assert!((rep.rhs - rhs).abs() < 1e-9, "{} {rhs}", rep.rhs);
    let lhs = simpson(|y| 4.0 * y * y * (-2.0 * y * y).exp() * y.powi(6), 0.0, 1.0, 2000);
    assert!((rep.lhs - lhs).abs() < 1e-9);
    assert!(rep.slack >= 0.0);
}

#[test]
fn hardy_critical_with_plateau() {
    // constant on [1, 10], smoothly cut off by 20
    let f = field(|y| chi(y / 10.0), Parity::Even);
    let rep = hardy_check(&f, HardyVariant::Critical).unwrap();
    assert!(rep.slack >= 0.0, "{rep:?}");
}

#[test]
fn hardy_zero_function_is_equality() {
    let f = field(|_| 0.0, Parity::Odd);
    for v in [HardyVariant::Origin { i: 1 }, HardyVariant::NonCritical { alpha: 1.0 }, HardyVariant::Critical, HardyVariant::Weighted { j: 0, k: 2, mu: 2.0 }] {
        let rep = hardy_check(&f, v).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
    }
}

#[test]
fn coercivity_of_a_star_on_random_ensemble() {
    let ops = ops7();
    let set = random_test_functions(&ops.gs.grid, 50, 0);
    let min = set.iter().map(|f| coercivity_check(ops, None, f, CoercivityOp::AStar, 0, 1.0).unwrap()).fold(f64::INFINITY, f64::min);
    assert!(min > 0.01, "{min}");
}

#[test]
fn coercivity_of_a_requires_orthogonality() {
    let ops = ops7();
    let ps = profiles7();
    let phi = build_phi_m(ops, &ps.t, 10.0, 3).unwrap();
    let err = coercivity_check(ops, Some(&phi), &ops.gs.lam_q, CoercivityOp::A, 0, 1.0).unwrap_err();
    assert_eq!(err.kind(), "contract");
    assert!(coercivity_check(ops, None, &ops.gs.lam_q, CoercivityOp::A, 0, 1.0).is_err());
}

#[test]
fn coercivity_ratio_is_homogeneous() {
    let ops = ops7();
    let f = &random_test_functions(&ops.gs.grid, 1, 7)[0];
    let r1 = coercivity_check(ops, None, f, CoercivityOp::AStar, 1, 0.5).unwrap();
    let r2 = coercivity_check(ops, None, &f.scale(2.0), CoercivityOp::AStar, 1, 0.5).unwrap();
    assert!((r1 - r2).abs() <= 1e-12 * r1);
}

#[test]
fn random_ensemble_is_reproducible() {
    let grid = &ops7().gs.grid;
    let a = random_test_functions(grid, 3, 11);
    let b = random_test_functions(grid, 3, 11);
    let c = random_test_functions(grid, 3, 12);
    assert!(a.iter().zip(&b).all(|(x, y)| x.values == y.values));
    assert!(a[0].values != c[0].values);
}
