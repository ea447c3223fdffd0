use super::{energy, extract_lambda, profile_state, Boundary, WaveSolver, WaveState};
use crate::bsystem::{explicit_solution, BParams};
use crate::error::{Error, Result};
use crate::numerics::fit::linear_fit;
use crate::numerics::RadialGrid;
use crate::profiles::ProfileSet;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Missing fields take the values of `ExperimentConfig::default()`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub s0: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub cfl: f64,
    /// Radius of the smooth truncation of the initial data.
    pub truncation: f64,
    pub t_max: f64,
    /// Steps between samples of the track.
    pub sample_every: usize,
    /// Halvings of the grid allowed when `lambda` halves.
    pub max_restarts: usize,
}

impl ExperimentConfig {
    pub fn new(s0: f64) -> ExperimentConfig {
        ExperimentConfig { s0, r_max: 80.0, n_r: 16001, cfl: 0.5, truncation: 25.0, t_max: 40.0, sample_every: 100, max_restarts: 4 }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::new(50.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackRow {
    pub t: f64,
    pub lambda: f64,
    pub energy: f64,
    pub sup_gradient: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub ell: usize,
    pub expected_exponent: f64,
    /// Blowup time of the power law fitted on the early window.
    pub t_fit: f64,
    /// Blowup time extrapolated from `1 / sup |u_r|` at the end of the track.
    pub t_blow: f64,
    /// Standard error of the blowup time from the extrapolation fit.
    pub t_blow_stderr: f64,
    /// Exponent `p` of `lambda = A (t_fit - t)^p` on the early window.
    pub exponent: f64,
    pub relative_error: f64,
    /// Decades of `T - t` covered by the early window.
    pub window_decades: f64,
    /// Set when the window covers less than one decade.
    pub short_window: bool,
    /// Ratio of `(T - t) sup |u_r|` at the end and at the start of the track.
    pub type_two_growth: f64,
    /// Largest relative energy drift within one grid.
    pub energy_drift: f64,
    pub restarts: usize,
    pub stop_reason: String,
    /// Qualitative check: exponent within 15% of `ell / gamma`.
    pub within_tolerance: bool,
}

fn resample(state: &WaveState, grid: &Arc<RadialGrid>) -> WaveState {
    let old = state.grid();
    WaveState::from_fn(grid, state.t, |r| old.interpolate(&state.u.values, r), |r| old.interpolate(&state.ut.values, r))
}

/// Evolve prepared data `Q_{b^e(s0)}` (truncated at large radius) and measure
/// the collapse rate. The grid is halved around the origin each time
/// `lambda` halves while the boundary stays out of causal contact with the
/// core; the run stops when `lambda` drops below ten grid cells.
pub fn run_blowup_experiment(cfg: &ExperimentConfig, ps: &ProfileSet) -> Result<(Vec<TrackRow>, RateReport)> {
    if !(cfg.cfl > 0.0 && cfg.cfl <= super::MAX_CFL) || cfg.sample_every == 0 {
        return Err(Error::Contract("need 0 < cfl <= 0.5 and sample_every > 0".into()));
    }
    let gs = &ps.ops.gs;
    let p = BParams::new(ps.ell, ps.l, ps.gamma())?;
    let b0 = explicit_solution(&p, cfg.s0);
    let mut solver = WaveSolver::new(ps.d, cfg.r_max, cfg.n_r, Boundary::Frozen)?;
    let mut state = profile_state(&solver.grid.clone(), ps, &b0, 1.0, Some(cfg.truncation))?;
    let mut rows: Vec<TrackRow> = Vec::new();
    let mut lambda_ref = 1.0;
    let mut restarts = 0;
    let mut e_ref = energy(&state)?.value;
    let mut drift: f64 = 0.0;
    let mut steps = 0usize;
    let stop_reason = loop {
        if steps % cfg.sample_every == 0 {
            let lambda = match extract_lambda(&state, gs) {
                Ok(l) => l,
                Err(e) => break format!("left the Q dominated regime: {e}"),
            };
            let e = energy(&state)?.value;
            drift = drift.max((e - e_ref).abs() / e_ref);
            rows.push(TrackRow { t: state.t, lambda, energy: e, sup_gradient: state.sup_gradient()?, h: solver.h() });
            if lambda < 10.0 * solver.h() {
                break "resolution exhausted".to_string();
            }
            if lambda <= 0.5 * lambda_ref && restarts < cfg.max_restarts && rows.len() >= 2 {
                let (a, b) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
                let rate = (a.lambda - b.lambda) / (b.t - a.t);
                let remaining = if rate > 0.0 { 2.0 * lambda / rate } else { f64::INFINITY };
                let r_new = 0.5 * solver.grid.y_max();
                if r_new - 20.0 * lambda > 2.0 * remaining {
                    let grid = Arc::new(RadialGrid::uniform(ps.d, r_new, cfg.n_r)?);
                    state = resample(&state, &grid);
                    solver = WaveSolver::on_grid(ps.d, grid, Boundary::Frozen);
                    e_ref = energy(&state)?.value;
                    restarts += 1;
                }
                lambda_ref = lambda;
            }
        }
        if state.t >= cfg.t_max {
            break "reached t_max".to_string();
        }
        let dt = cfg.cfl * solver.h();
        if let Err(e) = solver.step(&mut state, dt) {
            break format!("integration stopped: {e}");
        }
        steps += 1;
    };
    let report = rate_report(&rows, ps.ell, ps.gamma(), drift, restarts, stop_reason)?;
    Ok((rows, report))
}

/// Blowup time and collapse exponent of a sampled track, see [`RateReport`].
pub fn rate_report(rows: &[TrackRow], ell: usize, gamma: f64, drift: f64, restarts: usize, stop_reason: String) -> Result<RateReport> {
    if rows.len() < 10 {
        return Err(Error::Regime(format!("only {} samples recorded ({stop_reason})", rows.len())));
    }
    // T from a linear fit of 1 / sup |u_r| over the last quarter of the track
    let tail = &rows[rows.len() - (rows.len() / 4).max(5)..];
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let inv: Vec<f64> = tail.iter().map(|r| 1.0 / r.sup_gradient).collect();
    let (c0, c1) = linear_fit(&ts, &inv, None)?;
    if !(c1 < 0.0) {
        return Err(Error::Regime("inverse gradient is not decreasing; no blowup time estimate".into()));
    }
    let t_blow = -c0 / c1;
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - mean_t).powi(2)).sum();
    let sse: f64 = ts.iter().zip(&inv).map(|(t, v)| (v - c0 - c1 * t).powi(2)).sum();
    let sigma = (sse / (n - 2.0).max(1.0)).sqrt();
    let se_c1 = sigma / sxx.sqrt();
    let se_c0 = sigma * (1.0 / n + mean_t * mean_t / sxx).sqrt();
    let t_blow_stderr = ((se_c0 / c1).powi(2) + (c0 * se_c1 / (c1 * c1)).powi(2)).sqrt();

    // early window: the first half of the resolved lambda range in log scale
    let lam_first = rows[0].lambda;
    let lam_last = rows[rows.len() - 1].lambda;
    let lam_mid = (lam_first * lam_last).sqrt();
    let window: Vec<&TrackRow> = rows.iter().take_while(|r| r.lambda >= lam_mid).collect();
    if window.len() < 5 {
        return Err(Error::Regime("early window holds fewer than five samples".into()));
    }
    let ts: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = window.iter().map(|r| r.lambda.ln()).collect();
    let (t_fit, exponent) = fit_power_law(&ts, &ys)?;
    let xs: Vec<f64> = ts.iter().map(|t| (t_fit - t).ln()).collect();
    let window_decades = (xs[0] - xs[xs.len() - 1]) / std::f64::consts::LN_10;
    let expected = ell as f64 / gamma;
    let relative_error = (exponent - expected).abs() / expected;
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let type_two_growth = ((t_blow - last.t) * last.sup_gradient) / ((t_blow - first.t) * first.sup_gradient);
    Ok(RateReport {
        ell,
        expected_exponent: expected,
        t_fit,
        t_blow,
        t_blow_stderr,
        exponent,
        relative_error,
        window_decades,
        short_window: window_decades < 1.0,
        type_two_growth,
        energy_drift: drift,
        restarts,
        stop_reason,
        within_tolerance: relative_error <= 0.15,
    })
}

/// Least squares fit of `log lambda = a + p log(T - t)` with `T` profiled out
/// by golden section search in `log(T - t_last)`.
fn fit_power_law(ts: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let t_last = ts[ts.len() - 1];
    let span = t_last - ts[0];
    let sse = |z: f64| -> f64 {
        let tb = t_last + z.exp();
        let xs: Vec<f64> = ts.iter().map(|t| (tb - t).ln()).collect();
        match linear_fit(&xs, ys, None) {
            Ok((a, p)) => xs.iter().zip(ys).map(|(x, y)| (y - a - p * x).powi(2)).sum(),
            Err(_) => f64::INFINITY,
        }
    };
    // coarse scan then golden refinement
    let (lo, hi) = ((1e-4 * span).ln(), (100.0 * span).ln());
    let n = 200;
    let zs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let best = (0..=n).min_by(|&i, &j| sse(zs[i]).total_cmp(&sse(zs[j]))).unwrap_or(0);
    if best == 0 || best == n {
        return Err(Error::Regime("power law fit has no interior blowup time".into()));
    }
    let (mut a, mut b) = (zs[best - 1], zs[best + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if sse(c) < sse(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let tb = t_last + (0.5 * (a + b)).exp();
    let xs: Vec<f64> = ts.iter().map(|t| (tb - t).ln()).collect();
    let (_, p) = linear_fit(&xs, ys, None)?;
    Ok((tb, p))
}
