//! Invariant batteries shared by the command line driver and the test suites.
//!
//! Every report records the measured quantities next to a `pass` flag
//! computed against the tolerances declared here.

use crate::bsystem::{
    blowup_law, build_a_ell, explicit_solution, integrate_trajectory, shoot_unstable, BParams, BState, BlowupLaw, ShootingConfig,
    ShootingResult, SpectralData,
};
use crate::error::{Error, Result};
use crate::ground_state::{solve_ground_state, structural_constants, GroundState, StructuralConstants};
use crate::linop::{
    build_phi_m, coercivity_check, hardy_check, inner_scalar, random_test_functions, relative_sup, CoercivityOp, HardyVariant, LinearOps,
    RadialPair,
};
use crate::numerics::fit::{linear_fit, loglog_fit};
use crate::numerics::RadialField;
use crate::profiles::{make_t_profiles, residual_psib, ProfileSet, LOCAL_RADII};
use crate::wave::{
    energy, initial_state, self_similar_test, track_against_bsystem, Boundary, InitialData, Projector, SelfSimilarReport, SimConfig,
    TrackingReport,
};
use serde::Serialize;
use std::sync::Arc;

pub const TAIL_TOL: f64 = 0.01;
pub const A0_AGREEMENT_TOL: f64 = 0.02;
pub const Z_IDENTITY_TOL: f64 = 1e-6;
pub const KERNEL_TOL: f64 = 1e-5;
pub const ADJOINT_TOL: f64 = 1e-6;
pub const INVERSE_TOL: f64 = 1e-5;
pub const PHI_GROWTH_TOL: f64 = 0.02;
pub const PHI_ODD_COEFF_TOL: f64 = 1e-8;
pub const DUALITY_TOL: f64 = 1e-4;
pub const SPECTRUM_TOL: f64 = 1e-10;
pub const SLOPE_S_TOL: f64 = 0.005;
pub const SLOPE_T_TOL: f64 = 0.01;
pub const RESIDUAL_MARGIN: f64 = 2.5;
pub const ABLATION_DROP: f64 = 1.0;
pub const SELF_SIMILAR_TOL: f64 = 1e-4;
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
pub const SCALING_TOL: f64 = 1e-6;
pub const TRACKING_TOL: f64 = 0.05;

/// Ground state grid used by the batteries.
pub const GS_Y_MAX: f64 = 1e4;
pub const GS_TOL: f64 = 1e-12;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub constants: Vec<StructuralConstants>,
    /// Largest `|2 gamma + 2 hbar + 2 delta - d|`.
    pub identity_defect: f64,
    pub pass: bool,
}

/// Constants for each `d`, checked against the defining relations:
/// `gamma` is the smaller root of `g^2 - (d-2) g + (d-1) = 0` and `d/2 = gamma + hbar + delta`.
pub fn constants_report(ds: &[usize]) -> Result<ConstantsReport> {
    let constants = ds.iter().map(|&d| structural_constants(d)).collect::<Result<Vec<_>>>()?;
    let mut identity_defect: f64 = 0.0;
    let mut pass = true;
    for c in &constants {
        let df = c.d as f64;
        identity_defect = identity_defect.max((2.0 * c.gamma + 2.0 * c.hbar as f64 + 2.0 * c.delta - df).abs());
        let root = c.gamma * c.gamma - (df - 2.0) * c.gamma + (df - 1.0);
        pass &= root.abs() <= 1e-12 * df * df && (c.gamma_tilde - (df - 2.0 - 2.0 * c.gamma)).abs() <= 1e-12 * df;
    }
    pass &= identity_defect <= 1e-12;
    if ds.contains(&7) {
        let c = &constants[ds.iter().position(|&d| d == 7).unwrap_or(0)];
        pass &= c.gamma == 2.0 && c.hbar == 1 && c.delta == 0.5;
    }
    Ok(ConstantsReport { constants, identity_defect, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub d: usize,
    pub gamma: f64,
    pub tail_slope: f64,
    pub lam_q_slope: f64,
    pub a0: f64,
    pub a0_from_lam_q: f64,
    pub z_identity_defect: f64,
    pub monotone: bool,
    pub pass: bool,
}

pub fn ground_state_report(gs: &GroundState) -> Result<GroundStateReport> {
    let y_max = gs.grid.y_max();
    let gamma = gs.consts.gamma;
    let missing = || Error::Consistency("ground state has no tail fit".into());
    let tail_slope = gs.tail_slope.ok_or_else(missing)?;
    let a0 = gs.a0.ok_or_else(missing)?;
    let a0_from_lam_q = gs.a0_from_lam_q.ok_or_else(missing)?;
    let (_, lam_q_slope) = loglog_fit(gs.grid.nodes(), &gs.lam_q.values, y_max / 20.0, y_max / 2.0)?;
    let z_identity_defect = gs.z_identity_defect(0.0, y_max / 2.0)?;
    let monotone = gs.dq.values.iter().all(|v| *v > 0.0) && gs.gap.values.iter().all(|v| *v > 0.0);
    let pass = rel(tail_slope, -gamma) <= TAIL_TOL
        && rel(lam_q_slope, -gamma) <= TAIL_TOL
        && rel(a0_from_lam_q, a0) <= A0_AGREEMENT_TOL
        && z_identity_defect <= Z_IDENTITY_TOL
        && monotone;
    Ok(GroundStateReport { d: gs.d, gamma, tail_slope, lam_q_slope, a0, a0_from_lam_q, z_identity_defect, monotone, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiGrowth {
    pub k: usize,
    pub slope: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinopReport {
    pub d: usize,
    /// `sup |L Lambda Q|` relative to the size of the terms of `L`.
    pub kernel_lam_q: f64,
    pub kernel_gamma: f64,
    pub adjoint_a: f64,
    pub adjoint_l: f64,
    pub adjoint_h: f64,
    pub invert_round_trip: f64,
    pub phi_growth: Vec<PhiGrowth>,
    pub pass: bool,
}

fn adjoint_defect(lhs: f64, rhs: f64, scale: f64) -> f64 {
    (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE)
}

fn norm(f: &RadialField) -> f64 {
    inner_scalar(f, f).sqrt()
}

/// Kernel, adjointness, inversion and growth checks on `count` random test
/// functions drawn with `seed`.
pub fn linop_report(ops: &LinearOps, count: usize, seed: u64) -> Result<LinopReport> {
    let gs = &ops.gs;
    let y_max = gs.grid.y_max();
    let (lo, hi) = (0.1, y_max / 2.0);
    let kernel_lam_q = relative_sup(&ops.apply_l(&gs.lam_q)?, &ops.l_term_scale(&gs.lam_q)?, 1e-3, hi);
    let gamma_field = ops.kernel_gamma()?;
    let kernel_gamma = relative_sup(&ops.apply_l(&gamma_field)?, &ops.l_term_scale(&gamma_field)?, lo, hi);

    let fs = random_test_functions(&gs.grid, count, seed);
    let (mut adjoint_a, mut adjoint_l, mut adjoint_h, mut invert_round_trip): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for triple in fs.windows(3) {
        let (f, g, k) = (&triple[0], &triple[1], &triple[2]);
        let (af, asg) = (ops.apply_a(f)?, ops.apply_a_star(g)?);
        adjoint_a = adjoint_a.max(adjoint_defect(inner_scalar(&af, g), inner_scalar(f, &asg), norm(&af) * norm(g) + norm(f) * norm(&asg)));
        let (lf, lg) = (ops.apply_l(f)?, ops.apply_l(g)?);
        adjoint_l = adjoint_l.max(adjoint_defect(inner_scalar(&lf, g), inner_scalar(f, &lg), norm(&lf) * norm(g) + norm(f) * norm(&lg)));
        let p = RadialPair::new(f.clone(), g.clone())?;
        let q = RadialPair::new(g.clone(), k.clone())?;
        let (hp, hsq) = (ops.apply_h(&p)?, ops.apply_h_star(&q)?);
        let scale = ops.inner(&hp, &hp).sqrt() * ops.inner(&q, &q).sqrt() + ops.inner(&p, &p).sqrt() * ops.inner(&hsq, &hsq).sqrt();
        adjoint_h = adjoint_h.max(adjoint_defect(ops.inner(&hp, &q), ops.inner(&p, &hsq), scale));
        let w = ops.invert_l(f)?;
        let back = ops.apply_l(&w)?;
        invert_round_trip = invert_round_trip.max(relative_sup(&back.sub(f), &ops.l_term_scale(&w)?, lo, hi));
    }

    let gamma = gs.consts.gamma;
    let chain = ops.phi_chain(3)?;
    let phi_growth = (1..=3)
        .map(|k| {
            let (_, slope) = loglog_fit(gs.grid.nodes(), &chain[k].values, y_max / 20.0, y_max / 2.0)?;
            Ok(PhiGrowth { k, slope, expected: 2.0 * k as f64 - gamma })
        })
        .collect::<Result<Vec<_>>>()?;
    let growth_ok = phi_growth.iter().all(|g| (g.slope - g.expected).abs() <= PHI_GROWTH_TOL * g.expected.abs().max(1.0));
    let pass = kernel_lam_q <= KERNEL_TOL
        && kernel_gamma <= KERNEL_TOL
        && adjoint_a <= ADJOINT_TOL
        && adjoint_l <= ADJOINT_TOL
        && adjoint_h <= ADJOINT_TOL
        && invert_round_trip <= INVERSE_TOL
        && growth_ok;
    Ok(LinopReport { d: gs.d, kernel_lam_q, kernel_gamma, adjoint_a, adjoint_l, adjoint_h, invert_round_trip, phi_growth, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiEntry {
    pub m: f64,
    pub coeffs: Vec<f64>,
    /// Largest `|c_k| / M^{2k}` over odd `k`.
    pub odd_coeff_ratio: f64,
    /// Largest deviation of the duality matrix from `diag((-1)^k)`.
    pub duality_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiReport {
    pub l: usize,
    pub entries: Vec<PhiEntry>,
    pub pass: bool,
}

pub fn phi_report(ps: &ProfileSet, ms: &[f64]) -> Result<PhiReport> {
    let ops = &ps.ops;
    let mut entries = Vec::new();
    for &m in ms {
        let phi = build_phi_m(ops, &ps.t, m, ps.l)?;
        let odd_coeff_ratio =
            phi.coeffs.iter().enumerate().filter(|(k, _)| k % 2 == 1).map(|(k, c)| c.abs() / m.powi(2 * k as i32)).fold(0.0, f64::max);
        let dm = phi.duality_matrix(ops, &ps.t)?;
        let mut duality_defect: f64 = 0.0;
        for (i, row) in dm.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                let target = if i != k {
                    0.0
                } else if k % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                duality_defect = duality_defect.max((v - target).abs());
            }
        }
        entries.push(PhiEntry { m, coeffs: phi.coeffs.clone(), odd_coeff_ratio, duality_defect });
    }
    let pass = entries.iter().all(|e| e.odd_coeff_ratio <= PHI_ODD_COEFF_TOL && e.duality_defect <= DUALITY_TOL);
    Ok(PhiReport { l: ps.l, entries, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyEntry {
    pub variant: HardyVariant,
    /// Smallest slack over the ensemble.
    pub min_slack: f64,
    /// Smallest `slack / (|lhs| + |rhs|)`.
    pub min_relative_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityEntry {
    pub op: CoercivityOp,
    pub i: usize,
    pub p: f64,
    /// Smallest coercivity ratio over the ensemble.
    pub min_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub d: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub hardy: Vec<HardyEntry>,
    pub coercivity: Vec<CoercivityEntry>,
    pub pass: bool,
}

/// Hardy variants exercised for dimension `d`.
pub fn hardy_variants(d: usize) -> Vec<HardyVariant> {
    let critical = (d as f64 - 2.0) / 2.0;
    let mut v: Vec<HardyVariant> = (0..=2).map(|i| HardyVariant::Origin { i }).collect();
    v.extend([0.0, 1.0, critical + 1.0].into_iter().map(|alpha| HardyVariant::NonCritical { alpha }));
    v.push(HardyVariant::Critical);
    for (j, k) in [(0, 1), (1, 2), (0, 2)] {
        for mu in [0.0, 2.0] {
            v.push(HardyVariant::Weighted { j, k, mu });
        }
    }
    v
}

/// Coercivity weights `(i, p)` exercised for both operators.
pub const COERCIVITY_WEIGHTS: [(usize, f64); 4] = [(0, 0.0), (1, 0.0), (0, 1.0), (1, 1.0)];

/// Hardy inequalities and coercivity of `A` and `A*` over a random ensemble.
/// Functions tested against `A` are first made orthogonal to `Phi_M`.
pub fn inequality_report(ps: &ProfileSet, count: usize, seed: u64) -> Result<InequalityReport> {
    let ops = &ps.ops;
    let gs = &ops.gs;
    let phi = build_phi_m(ops, &ps.t, 10.0, ps.l)?;
    let fs = random_test_functions(&gs.grid, count, seed);
    let hardy = hardy_variants(gs.d)
        .into_iter()
        .map(|variant| {
            let reports = fs.iter().map(|f| hardy_check(f, variant)).collect::<Result<Vec<_>>>()?;
            let min_slack = reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
            let min_relative_slack = reports.iter().map(|r| r.slack / (r.lhs.abs() + r.rhs.abs())).fold(f64::INFINITY, f64::min);
            Ok(HardyEntry { variant, min_slack, min_relative_slack })
        })
        .collect::<Result<Vec<_>>>()?;
    let dir = &phi.field.first;
    let dir_sq = inner_scalar(dir, dir);
    let orth: Vec<RadialField> = fs.iter().map(|f| f.axpy(-inner_scalar(f, dir) / dir_sq, dir)).collect();
    let mut coercivity = Vec::new();
    for op in [CoercivityOp::A, CoercivityOp::AStar] {
        for (i, p) in COERCIVITY_WEIGHTS {
            let set = if op == CoercivityOp::A { &orth } else { &fs };
            let min_ratio = set
                .iter()
                .map(|f| coercivity_check(ops, Some(&phi), f, op, i, p))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            coercivity.push(CoercivityEntry { op, i, p, min_ratio });
        }
    }
    let pass = hardy.iter().all(|h| h.min_slack >= 0.0) && coercivity.iter().all(|c| c.min_ratio > 0.0);
    Ok(InequalityReport { d: gs.d, ensemble: count, seed, hardy, coercivity, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct BsystemReport {
    pub d: usize,
    pub ell: usize,
    pub l: usize,
    pub s0: f64,
    pub s_end: f64,
    pub spectrum: Vec<f64>,
    pub predicted: Vec<f64>,
    pub spectrum_defect: f64,
    pub law: BlowupLaw,
    pub expected_slope_s: f64,
    pub expected_slope_t: f64,
    /// `T = s0 / (c1 - 1)` for the explicit solution started at `lambda = 1`, `t = 0`.
    pub expected_t: f64,
    pub pass: bool,
}

/// Spectrum of the linearization and the blowup laws along the explicit solution.
pub fn bsystem_report(d: usize, ell: usize, l: usize, s0: f64, s_end: f64) -> Result<BsystemReport> {
    let p = BParams::for_dimension(d, ell, l)?;
    let spec: SpectralData = build_a_ell(ell, p.gamma)?;
    let mut spectrum = spec.d.clone();
    spectrum.sort_by(f64::total_cmp);
    let mut predicted = SpectralData::predicted(ell, p.gamma);
    predicted.sort_by(f64::total_cmp);
    let spectrum_defect = spectrum.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let state0 = BState { s: s0, b: explicit_solution(&p, s0), lambda: 1.0, t: 0.0 };
    let traj = integrate_trajectory(&p, &state0, s_end, 1e-12)?;
    let law = blowup_law(&traj)?;
    let ellf = ell as f64;
    let expected_slope_s = -ellf / (ellf - p.gamma);
    let expected_slope_t = ellf / p.gamma;
    let expected_t = s0 / (p.c[0] - 1.0);
    let pass = spectrum_defect <= SPECTRUM_TOL
        && rel(law.slope_s, expected_slope_s) <= SLOPE_S_TOL
        && rel(law.slope_t, expected_slope_t) <= SLOPE_T_TOL;
    Ok(BsystemReport { d, ell, l, s0, s_end, spectrum, predicted, spectrum_defect, law, expected_slope_s, expected_slope_t, expected_t, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingReport {
    pub d: usize,
    pub ell: usize,
    pub config: ShootingConfig,
    pub result: ShootingResult,
    pub pass: bool,
}

/// Box exponent `beta = (1 - delta) / 40` used by the default shooting runs.
pub fn default_box_exponent(d: usize) -> Result<f64> {
    Ok(0.025 * (1.0 - structural_constants(d)?.delta))
}

pub fn shooting_report(d: usize, ell: usize, s0: f64, s_end: f64) -> Result<ShootingReport> {
    let p = BParams::for_dimension(d, ell, ell)?;
    let config = ShootingConfig::new(s0, s_end, default_box_exponent(d)?);
    let result = shoot_unstable(&p, &config)?;
    let pass = result.final_outcome == crate::bsystem::Outcome::Trapped && result.transverse_ok();
    Ok(ShootingReport { d, ell, config, result, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualScalingReport {
    pub d: usize,
    pub l: usize,
    pub ell: usize,
    pub b1: Vec<f64>,
    /// `(M, fitted exponent)` of the local norm of `Psi_b` against `b_1`.
    pub exponents: Vec<(f64, f64)>,
    pub exponents_without_s: Vec<(f64, f64)>,
    pub required: f64,
    pub pass: bool,
}

fn residual_exponents(ps: &ProfileSet, p: &BParams, ss: &[f64]) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
    let mut b1s = Vec::new();
    let mut norms: Vec<Vec<f64>> = vec![Vec::new(); LOCAL_RADII.len()];
    for &s in ss {
        let b = explicit_solution(p, s);
        let b_dot = crate::bsystem::b_rhs(p, &b);
        let rep = residual_psib(ps, &b, &b_dot, b[0])?;
        b1s.push(b[0]);
        for (j, (_, sq)) in rep.local_sq_norms.iter().enumerate() {
            norms[j].push(sq.sqrt());
        }
    }
    let xs: Vec<f64> = b1s.iter().map(|b| b.ln()).collect();
    let fits = LOCAL_RADII
        .iter()
        .zip(&norms)
        .map(|(&m, ns)| {
            let ys: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
            Ok((m, linear_fit(&xs, &ys, None)?.1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((b1s, fits))
}

/// Fit `|Psi_b|_{loc} ~ b_1^e` along `b = b^e(s)` with `(b_k)_s` from the
/// modulation system and `-lambda_s / lambda = b_1`, with and without `S_k`.
pub fn residual_scaling_report(ps: &ProfileSet, ss: &[f64]) -> Result<ResidualScalingReport> {
    let p = BParams::new(ps.ell, ps.l, ps.gamma())?;
    let (b1, exponents) = residual_exponents(ps, &p, ss)?;
    let (_, exponents_without_s) = residual_exponents(&ps.without_s(), &p, ss)?;
    let required = ps.l as f64 + RESIDUAL_MARGIN;
    let pass = exponents.iter().zip(&exponents_without_s).all(|((_, e), (_, e0))| *e >= required && e - e0 >= ABLATION_DROP);
    Ok(ResidualScalingReport { d: ps.d, l: ps.l, ell: ps.ell, b1, exponents, exponents_without_s, required, pass })
}

/// Values of `s` used for the residual scaling fit: `b_1` from `0.06` to `0.006`.
pub fn residual_scaling_times(p_c1: f64) -> Vec<f64> {
    (0..=8).map(|i| p_c1 / 0.06 * 10f64.powf(i as f64 / 8.0)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyCheck {
    pub steps: usize,
    pub h: f64,
    pub initial: f64,
    pub relative_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub ratio: f64,
    pub expected: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveReport {
    pub self_similar: SelfSimilarReport,
    pub energy: EnergyCheck,
    pub scaling: ScalingCheck,
    pub pass: bool,
}

fn bump(d: usize, r_max: f64, n_r: usize, amplitude: f64, center: f64, width: f64) -> SimConfig {
    SimConfig {
        d,
        r_max,
        n_r,
        cfl: 0.5,
        t_end: 0.0,
        boundary: Boundary::Frozen,
        initial: InitialData::Bump { amplitude, center, width },
        monitor_radius: 0.0,
    }
}

/// Energy drift over `steps` steps of a small bump, kept away from the boundary.
/// Larger bumps (amplitude 0.1 at width 0.5 in d = 7) focus and blow up.
pub fn energy_check(d: usize, steps: usize) -> Result<EnergyCheck> {
    let h = 0.005;
    let cfl = 0.5;
    let t_end = steps as f64 * cfl * h;
    let r_max = (t_end + 10.0).ceil();
    let n_r = (r_max / h).round() as usize + 1;
    let cfg = bump(d, r_max, n_r, 0.01, 3.0, 0.5);
    let (mut solver, mut state) = initial_state(&cfg, None)?;
    let e0 = energy(&state)?.value;
    let dt = cfl * solver.h();
    for _ in 0..steps {
        solver.step(&mut state, dt)?;
    }
    let e1 = energy(&state)?.value;
    Ok(EnergyCheck { steps, h: solver.h(), initial: e0, relative_drift: rel(e1, e0) })
}

/// `E(u(. / lambda)) / E(u)` against `lambda^{d-2}`.
pub fn scaling_check(d: usize, lambda: f64) -> Result<ScalingCheck> {
    let h = 0.0025;
    let r_max = 12.0 * lambda.max(1.0);
    let n_r = (r_max / h).round() as usize + 1;
    let (_, base) = initial_state(&bump(d, r_max, n_r, 0.5, 3.0, 0.5), None)?;
    let (_, scaled) = initial_state(&bump(d, r_max, n_r, 0.5, 3.0 * lambda, 0.5 * lambda), None)?;
    let ratio = energy(&scaled)?.value / energy(&base)?.value;
    let expected = lambda.powi(d as i32 - 2);
    Ok(ScalingCheck { lambda, ratio, expected, relative_error: rel(ratio, expected) })
}

pub fn wave_report(d: usize) -> Result<WaveReport> {
    let self_similar = self_similar_test(d, 2.0, 0.5, 100)?;
    let energy = energy_check(d, 10_000)?;
    let scaling = scaling_check(d, 2.0)?;
    let pass = self_similar.sup_error <= SELF_SIMILAR_TOL && energy.relative_drift <= ENERGY_DRIFT_TOL && scaling.relative_error <= SCALING_TOL;
    Ok(WaveReport { self_similar, energy, scaling, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingCheck {
    pub s0: f64,
    pub ds: f64,
    pub report: TrackingReport,
    pub pass: bool,
}

/// Short PDE run from the localized profile at `b^e(s0)`, projected and
/// compared with the modulation system over `s0 / 2`.
pub fn tracking_check(ps: Arc<ProfileSet>, s0: f64) -> Result<TrackingCheck> {
    let proj = Projector::new(ps, 10.0)?;
    let ds = 0.5 * s0;
    let report = track_against_bsystem(&proj, s0, ds, 40.0, 8001, 25)?;
    let pass = report.max_relative_deviation <= TRACKING_TOL;
    Ok(TrackingCheck { s0, ds, report, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyAllReport {
    pub d: usize,
    pub l: usize,
    pub ell: usize,
    pub seed: u64,
    pub constants: ConstantsReport,
    pub ground_state: GroundStateReport,
    pub linop: LinopReport,
    pub phi: PhiReport,
    pub inequalities: InequalityReport,
    pub bsystem: Option<BsystemReport>,
    pub shooting: Option<ShootingReport>,
    pub residual_scaling: ResidualScalingReport,
    pub wave: Option<WaveReport>,
    pub tracking: Option<TrackingCheck>,
    /// Checks not run for these parameters, with the reason.
    pub skipped: Vec<String>,
    pub pass: bool,
}

/// Build the ground state, operators and profiles used by the batteries.
pub fn profile_set(d: usize, l: usize, ell: usize, y_max: f64) -> Result<Arc<ProfileSet>> {
    let gs = Arc::new(solve_ground_state(d, y_max, GS_TOL)?);
    let ops = Arc::new(LinearOps::new(gs));
    Ok(Arc::new(make_t_profiles(ops, l, ell)?.build_s_profiles()?))
}

/// Every battery for one `(d, L, ell)`. The PDE checks run only with `pde`.
pub fn verify_all(d: usize, l: usize, ell: usize, seed: u64, pde: bool) -> Result<VerifyAllReport> {
    let mut skipped = Vec::new();
    let constants = constants_report(&[d])?;
    let ps = profile_set(d, l, ell, GS_Y_MAX)?;
    let ground_state = ground_state_report(&ps.ops.gs)?;
    let linop = linop_report(&ps.ops, 20, seed)?;
    let phi = phi_report(&ps, &[10.0, 20.0, 40.0])?;
    let inequalities = inequality_report(&ps, 50, seed)?;
    let gamma = ps.gamma();
    let bsystem = if ell as f64 > gamma {
        Some(bsystem_report(d, ell, l, 20.0, 2000.0)?)
    } else {
        skipped.push(format!("b-system laws need ell > gamma = {gamma}"));
        None
    };
    let shooting = if ell as f64 > gamma && (2..=3).contains(&ell) {
        Some(shooting_report(d, ell, 20.0, 2000.0)?)
    } else {
        skipped.push("shooting runs for ell in {2, 3} with ell > gamma".into());
        None
    };
    let residual_scaling = if ell as f64 > gamma {
        let p = BParams::new(ell, l, gamma)?;
        residual_scaling_report(&ps, &residual_scaling_times(p.c[0]))?
    } else {
        return Err(Error::Domain(format!("ell = {ell} must exceed gamma = {gamma}")));
    };
    let (wave, tracking) = if pde {
        let w = wave_report(d)?;
        let t = if ell as f64 > gamma {
            let tps = profile_set(d, l, ell, 2000.0)?;
            Some(tracking_check(tps, 50.0)?)
        } else {
            None
        };
        (Some(w), t)
    } else {
        skipped.push("PDE checks (pass --pde)".into());
        (None, None)
    };
    let pass = constants.pass
        && ground_state.pass
        && linop.pass
        && phi.pass
        && inequalities.pass
        && bsystem.as_ref().map_or(true, |r| r.pass)
        && shooting.as_ref().map_or(true, |r| r.pass)
        && residual_scaling.pass
        && wave.as_ref().map_or(true, |r| r.pass)
        && tracking.as_ref().map_or(true, |r| r.pass);
    Ok(VerifyAllReport {
        d,
        l,
        ell,
        seed,
        constants,
        ground_state,
        linop,
        phi,
        inequalities,
        bsystem,
        shooting,
        residual_scaling,
        wave,
        tracking,
        skipped,
        pass,
    })
}
