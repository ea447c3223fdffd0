use std::sync::{Arc, OnceLock};
use wavemap_core::bsystem::{b_rhs, explicit_solution, BParams};
use wavemap_core::profiles::poly::weight;
use wavemap_core::profiles::*;
use wavemap_core::verify::{profile_set, residual_scaling_report, residual_scaling_times};

fn seven() -> &'static Arc<ProfileSet> {
    static PS: OnceLock<Arc<ProfileSet>> = OnceLock::new();
    PS.get_or_init(|| profile_set(7, 3, 3, 2000.0).unwrap())
}

fn b_explicit(s: f64) -> Vec<f64> {
    explicit_solution(&BParams::new(3, 3, 2.0).unwrap(), s)
}

#[test]
fn first_profiles_are_scaling_generator() {
    let ps = seven();
    let lq = &ps.ops.gs.lam_q;
    assert_eq!(ps.t[0].first.values, lq.values);
    assert!(ps.t[0].second.values.iter().all(|v| *v == 0.0));
    assert_eq!(ps.t[1].second.values, lq.values);
    assert!(ps.t[1].first.values.iter().all(|v| *v == 0.0));
    assert_eq!(ps.t.len(), 6);
}

#[test]
fn generator_growth_exponents() {
    let ps = seven();
    // phi_k ~ y^{2k - gamma} with gamma = 2, up to corrections of relative size 1/y
    assert!((ps.phi_slope(0, 100.0, 500.0).unwrap() + 2.0).abs() < 0.02);
    assert!(ps.phi_slope(1, 100.0, 500.0).unwrap().abs() < 0.05);
    assert!((ps.phi_slope(2, 100.0, 500.0).unwrap() - 2.0).abs() < 0.05);
}

#[test]
fn generalized_kernel_recursion() {
    let ps = seven();
    for k in 0..ps.t.len() - 1 {
        let r = ps.recursion_residual(k).unwrap();
        assert!(r <= 1e-4, "k = {k}: {r:e}");
    }
}

#[test]
fn profiles_are_admissible() {
    let ps = seven();
    let g = ps.gamma();
    let rep = admissibility_check(&ps.t[0], DegreeTag::new(0, 0.0, 0), g).unwrap();
    assert!(rep.pass, "{rep:?}");
    for k in 1..=ps.l {
        let rep = admissibility_check(&ps.t[k], DegreeTag::new(k, k as f64, (k % 2) as u8), g).unwrap();
        assert!(rep.pass, "T_{k}: {rep:?}");
    }
    // the wrong component, or a degree that is too small, fails
    assert!(!admissibility_check(&ps.t[1], DegreeTag::new(1, 1.0, 0), g).unwrap().pass);
    assert!(!admissibility_check(&ps.t[2], DegreeTag::new(2, 0.0, 0), g).unwrap().pass);
}

#[test]
fn sign_changing_tail_is_not_admissible() {
    let ps = seven();
    let mut p = ps.t[0].clone();
    let y_max = p.first.grid.y_max();
    for (y, v) in p.first.grid.nodes().iter().zip(p.first.values.iter_mut()) {
        if *y > y_max / 8.0 {
            *v = -*v;
        }
    }
    let rep = admissibility_check(&p, DegreeTag::new(0, 0.0, 0), ps.gamma()).unwrap();
    assert!(!rep.far_sign_ok);
    assert!(!rep.pass);
}

#[test]
fn correction_structure() {
    let ps = seven();
    // S_2 = b_1^2 (..) only
    let keys: Vec<_> = ps.s[2].terms.keys().cloned().collect();
    assert_eq!(keys, vec![vec![2, 0, 0]]);
    assert!(!ps.s[3].depends_on(3));
    assert!(ps.s[0].terms.is_empty() && ps.s[1].terms.is_empty());
    for k in 2..ps.s.len() {
        assert!(ps.s[k].terms.keys().all(|e| weight(e) == k), "S_{k}");
    }
    // occupied component alternates: S_k sits where T_k does
    for k in 2..=ps.l {
        for c in ps.s[k].terms.values() {
            let (zero, _) = if k % 2 == 0 { (&c.second, &c.first) } else { (&c.first, &c.second) };
            assert!(zero.values.iter().all(|v| *v == 0.0), "S_{k}");
        }
    }
}

#[test]
fn polynomial_calculus() {
    let ps = seven();
    let poly = &ps.s[3];
    let b = [0.02, -0.001, 3e-5];
    let h = 1e-6;
    for j in 1..=3 {
        let dp = poly.partial(j).evaluate(&b);
        let mut bp = b;
        bp[j - 1] += h;
        let mut bm = b;
        bm[j - 1] -= h;
        let fd = match (poly.evaluate(&bp), poly.evaluate(&bm)) {
            (Some(p), Some(m)) => p.sub(&m).scale(0.5 / h),
            _ => continue,
        };
        match dp {
            Some(dp) => assert!(dp.sub(&fd).sup_on(0.0, 100.0) <= 1e-6 * fd.sup_on(0.0, 100.0).max(1e-12)),
            None => assert!(fd.sup_on(0.0, 100.0) < 1e-12),
        }
    }
}

#[test]
fn assembled_profile_is_ground_state_to_first_order() {
    let ps = seven();
    let gs = &ps.ops.gs;
    // Q_b - Q - b_1 T_1 is quadratic in b_1 along b = (b_1, 0, 0)
    let defect = |b1: f64| {
        let qb = assemble_qb(ps, &[b1, 0.0, 0.0], false).unwrap();
        let first = qb.first.sub(&gs.q).sup_on(0.0, 20.0);
        let second = qb.second.sub(&gs.lam_q.scale(b1)).sup_on(0.0, 20.0);
        first.max(second)
    };
    let (a, b) = (defect(0.01), defect(0.005));
    assert!(a < 1e-2, "{a:e}");
    assert!((a / b).log2() > 1.9, "{a:e} {b:e}");
}

#[test]
fn localization() {
    let ps = seven();
    let b = b_explicit(50.0);
    let (_, b1_radius) = ps.radii(b[0]);
    let loc = assemble_qb(ps, &b, true).unwrap();
    let full = assemble_qb(ps, &b, false).unwrap();
    let gs = &ps.ops.gs;
    let grid = &gs.grid;
    for (i, &y) in grid.nodes().iter().enumerate() {
        if y <= b1_radius {
            assert_eq!(loc.first.values[i], full.first.values[i]);
            assert_eq!(loc.second.values[i], full.second.values[i]);
        } else if y >= 2.0 * b1_radius {
            assert!((loc.first.values[i] - gs.q.values[i]).abs() < 1e-15);
            assert_eq!(loc.second.values[i], 0.0);
        }
    }
    assert!(loc.first.sub(&gs.q).sup_on(0.0, grid.y_max()) <= 0.2);
    assert_eq!(loc.first.values[0], 0.0);
    assert_eq!(loc.second.values[0], 0.0);
}

#[test]
fn parameters_outside_a_priori_region_are_rejected() {
    let ps = seven();
    assert!(assemble_qb(ps, &[0.15, 0.0, 0.0], false).is_err());
    assert!(assemble_qb(ps, &[0.0, 0.0, 0.0], false).is_err());
    assert!(assemble_qb(ps, &[0.05, 0.5, 0.0], false).is_err());
    assert!(assemble_qb(ps, &[0.05, 0.0], false).is_err());
}

#[test]
fn residual_scales_with_high_power_of_b1() {
    let ps = seven();
    let rep = residual_scaling_report(ps, &residual_scaling_times(3.0)).unwrap();
    for ((m, e), (_, e0)) in rep.exponents.iter().zip(&rep.exponents_without_s) {
        assert!(*e >= 5.5, "M = {m}: exponent {e}");
        assert!(e - e0 >= 1.0, "M = {m}: {e} vs {e0} without corrections");
    }
    assert!(rep.pass);
}

#[test]
fn corrections_reduce_residual() {
    let ps = seven();
    let b = b_explicit(100.0);
    let b_dot = b_rhs(&BParams::new(3, 3, 2.0).unwrap(), &b);
    let with = residual_psib(ps, &b, &b_dot, b[0]).unwrap();
    let without = residual_psib(&ps.without_s(), &b, &b_dot, b[0]).unwrap();
    for ((m, a), (_, z)) in with.local_sq_norms.iter().zip(&without.local_sq_norms) {
        assert!(a < z, "M = {m}: {a:e} vs {z:e}");
    }
}

#[test]
fn expansion_residual_agrees_with_direct_residual() {
    let ps = seven();
    let b = b_explicit(100.0);
    let b_dot = b_rhs(&BParams::new(3, 3, 2.0).unwrap(), &b);
    let direct = residual_psib(ps, &b, &b_dot, b[0]).unwrap();
    let expansion = residual_from_expansion(ps, &b).unwrap();
    // inside B_1 the cutoff is inactive and the two agree up to discretization
    let (m, a) = direct.local_sq_norms[0];
    let (_, e) = expansion.local_sq_norms[0];
    assert!((a.sqrt() - e.sqrt()).abs() <= 0.1 * e.sqrt(), "M = {m}: {a:e} vs {e:e}");
}
