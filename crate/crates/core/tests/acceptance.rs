//! Acceptance criteria. Prints one line per criterion and exits non-zero if any fails.

use std::sync::Arc;
use std::time::Instant;
use wavemap_core::bsystem::BParams;
use wavemap_core::ground_state::{solve_ground_state, structural_constants};
use wavemap_core::profiles::ProfileSet;
use wavemap_core::verify::*;
use wavemap_core::wave::{run_blowup_experiment, ExperimentConfig};
use wavemap_core::Result;

// Tolerances, one per measured quantity.
const CONSTANTS_ULPS: f64 = 4.0 * f64::EPSILON;
const TAIL_REL: f64 = 0.01;
const Z_IDENTITY: f64 = 1e-6;
const KERNEL_REL: f64 = 1e-5;
const ADJOINT: f64 = 1e-6;
const ROUND_TRIP: f64 = 1e-5;
const PHI_GROWTH_REL: f64 = 0.02;
const ODD_COEFF: f64 = 1e-8;
const DUALITY: f64 = 1e-4;
const SPECTRUM: f64 = 1e-10;
const SLOPE_S_REL: f64 = 0.005;
const SLOPE_T_REL: f64 = 0.01;
const RESIDUAL_MARGIN_ABOVE_L: f64 = 2.5;
const ABLATION: f64 = 1.0;
const SELF_SIMILAR: f64 = 1e-4;
const ENERGY_DRIFT: f64 = 1e-6;
const SCALING_REL: f64 = 1e-6;
const TRACKING_REL: f64 = 0.05;
const EXPERIMENT_REL: f64 = 0.15;

/// `(gamma, gamma_tilde, hbar, delta)` for d = 7..=12, evaluated in 40 digit decimal arithmetic.
const CONSTANTS_TABLE: [(usize, f64, f64, i64, f64); 6] = [
    (7, 2.0, 1.0, 1, 0.5),
    (8, 1.5857864376269049, 2.8284271247461903, 2, 0.41421356237309503),
    (9, 1.4384471871911697, 4.123105625617661, 3, 0.06155281280883027),
    (10, 1.3542486889354095, 5.291502622129181, 3, 0.6457513110645906),
    (11, 1.2984378812835757, 6.4031242374328485, 4, 0.20156211871642435),
    (12, 1.2583426132260587, 7.483314773547883, 4, 0.7416573867739414),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Least squares slope of `log |v|` against `log y` for `y` in `[lo, hi]`.
fn slope(ys: &[f64], vs: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = ys.iter().zip(vs).filter(|(y, _)| **y >= lo && **y <= hi).map(|(y, v)| (y.ln(), v.abs().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn structural() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (d, g, gt, h, dl) in CONSTANTS_TABLE {
        let c = structural_constants(d)?;
        worst = worst.max(rel(c.gamma, g)).max(rel(c.gamma_tilde, gt)).max(rel(c.delta, dl));
        pass &= c.hbar == h;
    }
    let c7 = structural_constants(7)?;
    pass &= worst <= CONSTANTS_ULPS && c7.gamma == 2.0;
    outcome(pass, format!("d = 7..12, worst relative deviation {worst:.1e}, gamma(7) = {}", c7.gamma))
}

fn ground_state() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [7, 8, 9] {
        let gs = solve_ground_state(d, GS_Y_MAX, GS_TOL)?;
        let g = gs.consts.gamma;
        let (lo, hi) = (GS_Y_MAX / 20.0, GS_Y_MAX / 2.0);
        let tail = slope(gs.grid.nodes(), &gs.gap.values, lo, hi);
        let lam = slope(gs.grid.nodes(), &gs.lam_q.values, lo, hi);
        let z = gs.z_identity_defect(0.0, GS_Y_MAX / 2.0)?;
        pass &= rel(tail, -g) <= TAIL_REL && rel(lam, -g) <= TAIL_REL && z <= Z_IDENTITY;
        parts.push(format!("d={d}: tail {tail:.4} / LamQ {lam:.4} vs {:.4}, Z {z:.1e}", -g));
    }
    outcome(pass, parts.join("; "))
}

fn operators(ps: &ProfileSet) -> Result<Outcome> {
    let r = linop_report(&ps.ops, 50, 0)?;
    let adjoint = r.adjoint_a.max(r.adjoint_l).max(r.adjoint_h);
    let growth_ok = r.phi_growth.iter().all(|g| (g.slope - g.expected).abs() <= PHI_GROWTH_REL * g.expected.abs().max(1.0));
    let pass = r.kernel_lam_q <= KERNEL_REL && r.kernel_gamma <= KERNEL_REL && adjoint <= ADJOINT && r.invert_round_trip <= ROUND_TRIP && growth_ok;
    let growth: Vec<String> = r.phi_growth.iter().map(|g| format!("{:.3}/{:.3}", g.slope, g.expected)).collect();
    outcome(
        pass,
        format!(
            "kernel {:.1e}/{:.1e}, adjoint {adjoint:.1e}, round trip {:.1e}, phi growth {}",
            r.kernel_lam_q,
            r.kernel_gamma,
            r.invert_round_trip,
            growth.join(" ")
        ),
    )
}

fn phi_structure(ps: &ProfileSet) -> Result<Outcome> {
    let r = phi_report(ps, &[10.0, 20.0, 40.0])?;
    let odd = r.entries.iter().map(|e| e.odd_coeff_ratio).fold(0.0, f64::max);
    let dual = r.entries.iter().map(|e| e.duality_defect).fold(0.0, f64::max);
    outcome(odd <= ODD_COEFF && dual <= DUALITY, format!("L = 3, M = 10, 20, 40: odd coefficients {odd:.1e}, duality defect {dual:.1e}"))
}

fn inequalities(ps: &ProfileSet) -> Result<Outcome> {
    let r = inequality_report(ps, 50, 0)?;
    let slack = r.hardy.iter().map(|h| h.min_relative_slack).fold(f64::INFINITY, f64::min);
    let ratio = r.coercivity.iter().map(|c| c.min_ratio).fold(f64::INFINITY, f64::min);
    let pass = r.hardy.iter().all(|h| h.min_slack >= 0.0) && ratio > 0.0;
    outcome(pass, format!("{} Hardy variants, 50 functions, seed 0: min relative slack {slack:.2e}, min coercivity ratio {ratio:.2e}", r.hardy.len()))
}

fn bsystem() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, ell) in [(7, 3), (8, 2), (9, 2)] {
        let r = bsystem_report(d, ell, ell, 20.0, 2000.0)?;
        let g = structural_constants(d)?.gamma;
        let ellf = ell as f64;
        let mut predicted: Vec<f64> = std::iter::once(-1.0).chain((2..=ell).map(|k| k as f64 * g / (ellf - g))).collect();
        predicted.sort_by(f64::total_cmp);
        let defect = r.spectrum.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let (es, et) = (-ellf / (ellf - g), ellf / g);
        pass &= r.spectrum.len() == ell
            && defect <= SPECTRUM
            && rel(r.law.slope_s, es) <= SLOPE_S_REL
            && rel(r.law.slope_t, et) <= SLOPE_T_REL;
        parts.push(format!("({d},{ell}): spectrum {defect:.1e}, slope_s {:.4}/{es:.4}, slope_t {:.4}/{et:.4}", r.law.slope_s, r.law.slope_t));
    }
    outcome(pass, parts.join("; "))
}

fn shooting() -> Result<Outcome> {
    let s0 = 20.0;
    let r = shooting_report(8, 2, s0, 100.0 * s0)?;
    let res = &r.result;
    outcome(
        r.pass,
        format!(
            "d = 8, ell = 2: outcome {:?}, {} levels, {} candidates, {} rejected, min exit rate {:.2e}",
            res.final_outcome,
            res.levels.len(),
            res.candidates,
            res.rejected,
            res.min_exit_rate
        ),
    )
}

fn residual(ps: &ProfileSet) -> Result<Outcome> {
    let c1 = BParams::new(ps.ell, ps.l, ps.gamma())?.c[0];
    let r = residual_scaling_report(ps, &residual_scaling_times(c1))?;
    let required = ps.l as f64 + RESIDUAL_MARGIN_ABOVE_L;
    let pass = r.exponents.iter().zip(&r.exponents_without_s).all(|((_, e), (_, e0))| *e >= required && e - e0 >= ABLATION);
    let fmt = |v: &[(f64, f64)]| v.iter().map(|(m, e)| format!("M={m}:{e:.2}")).collect::<Vec<_>>().join(" ");
    outcome(pass, format!("L = 3: exponents {} (need {required}), without S {}", fmt(&r.exponents), fmt(&r.exponents_without_s)))
}

fn pde() -> Result<Outcome> {
    let r = wave_report(7)?;
    let pass = r.self_similar.sup_error <= SELF_SIMILAR && r.energy.relative_drift <= ENERGY_DRIFT && r.scaling.relative_error <= SCALING_REL;
    outcome(
        pass,
        format!(
            "self-similar error {:.1e}, energy drift {:.1e} over {} steps, scaling ratio {:.6} vs {}",
            r.self_similar.sup_error, r.energy.relative_drift, r.energy.steps, r.scaling.ratio, r.scaling.expected
        ),
    )
}

fn tracking(ps: Arc<ProfileSet>) -> Result<Outcome> {
    let r = tracking_check(ps, 50.0)?;
    let dev = r.report.max_relative_deviation;
    outcome(dev <= TRACKING_REL, format!("d = 7, ell = 3, s0 = 50, ds = {}: max relative deviation of b_1 {dev:.2e}", r.ds))
}

fn experiment(ps: &ProfileSet) -> Result<Outcome> {
    let (_, r) = run_blowup_experiment(&ExperimentConfig::new(50.0), ps)?;
    let pass = rel(r.exponent, r.expected_exponent) <= EXPERIMENT_REL;
    outcome(
        pass,
        format!(
            "early-window exponent {:.4} vs {:.4} ({:.1} decades, stop: {})",
            r.exponent, r.expected_exponent, r.window_decades, r.stop_reason
        ),
    )
}

fn main() {
    let ps_main = profile_set(7, 3, 3, GS_Y_MAX).expect("profile set at d = 7");
    let ps_small = profile_set(7, 3, 3, 2000.0).expect("profile set for the PDE runs");
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome>>)> = vec![
        ("1 structural constants", Box::new(structural)),
        ("2 ground state", Box::new(ground_state)),
        ("3 operator calculus", Box::new(|| operators(&ps_main))),
        ("4 Phi_M structure", Box::new(|| phi_structure(&ps_main))),
        ("5 Hardy and coercivity", Box::new(|| inequalities(&ps_main))),
        ("6 b-system rates", Box::new(bsystem)),
        ("7 shooting", Box::new(shooting)),
        ("8 profile residual scaling", Box::new(|| residual(&ps_main))),
        ("9 PDE validation", Box::new(pde)),
        ("10 PDE-ODE tracking", Box::new(|| tracking(ps_small.clone()))),
        ("qualitative: blowup experiment rate", Box::new(|| experiment(&ps_small))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} [{name}] {detail} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
