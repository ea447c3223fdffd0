use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;
use wavemap_core::ground_state::*;
use wavemap_core::numerics::fit::loglog_fit;
use wavemap_core::numerics::RadialGrid;

fn seven() -> GroundState {
    solve_ground_state(7, 1000.0, 1e-12).unwrap()
}

#[test]
fn constants_for_seven_eight_nine() {
    let c = structural_constants(7).unwrap();
    assert_eq!((c.gamma, c.gamma_tilde, c.hbar, c.delta), (2.0, 1.0, 1, 0.5));
    let c = structural_constants(8).unwrap();
    assert!((c.gamma_tilde - 8f64.sqrt()).abs() < 1e-15);
    assert!((c.gamma - 1.585786).abs() < 1e-6);
    assert_eq!(c.hbar, 2);
    assert!((c.delta - 0.414214).abs() < 1e-6);
    let c = structural_constants(9).unwrap();
    assert!((c.gamma_tilde - 17f64.sqrt()).abs() < 1e-15);
    assert!((c.gamma - 1.438447).abs() < 1e-6);
    assert_eq!(c.hbar, 3);
    assert!((c.delta - 0.061553).abs() < 1e-6);
}

#[test]
fn constants_reject_low_dimensions() {
    for d in 0..7 {
        assert!(structural_constants(d).is_err());
    }
}

#[test]
fn origin_slope_is_one() {
    let gs = seven();
    let (q, dq) = gs.q_at(1e-3);
    assert!((q / 1e-3 - 1.0).abs() < 1e-6);
    assert!((dq - 1.0).abs() < 1e-5);
    assert_eq!(gs.q.values[0], 0.0);
}

#[test]
fn tail_exponent_for_seven_and_eight() {
    for d in [7, 8] {
        let gs = solve_ground_state(d, 1000.0, 1e-12).unwrap();
        let g = gs.consts.gamma;
        let (_, slope) = loglog_fit(gs.grid.nodes(), &gs.gap.values, 50.0, 500.0).unwrap();
        assert!((slope + g).abs() <= 0.01 * g, "d = {d}: slope {slope}");
        let (_, lam_slope) = loglog_fit(gs.grid.nodes(), &gs.lam_q.values, 50.0, 500.0).unwrap();
        assert!((lam_slope + g).abs() <= 0.01 * g, "d = {d}: Lambda Q slope {lam_slope}");
        let (a0, a0_lam) = (gs.a0.unwrap(), gs.a0_from_lam_q.unwrap());
        assert!((a0 - a0_lam).abs() <= 0.02 * a0, "{a0} {a0_lam}");
    }
}

#[test]
fn profile_is_monotone_and_below_half_pi() {
    let gs = seven();
    assert!(gs.q.values.windows(2).all(|w| w[1] > w[0]));
    assert!(gs.q.values.iter().all(|q| *q < FRAC_PI_2));
    assert!(gs.gap.values.iter().all(|g| *g > 0.0));
}

#[test]
fn z_limits() {
    let gs = seven();
    assert_eq!(gs.z.values[0], 6.0);
    assert!((gs.z.at(900.0) + 6.0).abs() < 1e-4);
}

#[test]
fn v_approaches_minus_gamma() {
    let v = seven().v.at(100.0);
    assert!((-2.05..=-1.95).contains(&v), "V(100) = {v}");
}

#[test]
fn z_identity_holds() {
    for d in [7, 8, 9] {
        let gs = solve_ground_state(d, 1000.0, 1e-12).unwrap();
        assert!(gs.z_identity_defect(0.1, 500.0).unwrap() < 1e-6, "d = {d}");
    }
}

#[test]
fn prefactor_is_grid_independent() {
    let a0 = seven().a0.unwrap();
    let fine = Arc::new(RadialGrid::geometric(7, 1000.0, 5e-4, 10.0, 1.0025).unwrap());
    let mut gs = GroundState::on_grid(7, fine, 1e-12).unwrap();
    gs.fit_tail(50.0, 500.0).unwrap();
    let a0_fine = gs.a0.unwrap();
    assert!((a0 - a0_fine).abs() < 1e-3 * a0, "{a0} {a0_fine}");
}

#[test]
fn small_domain_is_rejected() {
    assert!(solve_ground_state(7, 50.0, 1e-12).is_err());
    assert!(solve_ground_state(6, 1000.0, 1e-12).is_err());
}

#[test]
fn self_similar_profile_values() {
    for d in 7..=10 {
        let a = ((d - 2) as f64).sqrt();
        assert!((self_similar_profile(d, a) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(self_similar_profile(d, 0.0), 0.0);
    }
}

#[test]
fn self_similar_residual_is_small() {
    let grid = Arc::new(RadialGrid::uniform(7, 2.0, 4001).unwrap());
    let res = self_similar_residual(7, &grid).unwrap();
    assert!(res.at(0.5).abs() < 1e-7, "{}", res.at(0.5));
    assert_eq!(res.values[0], 0.0);
    assert!(res.values[1].abs() < 1e-6);
}
