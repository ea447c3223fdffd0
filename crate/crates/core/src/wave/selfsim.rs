use super::{WaveSolver, WaveState, MAX_CFL};
use crate::error::{Error, Result};
use crate::ground_state::{self_similar_profile, self_similar_residual};
use crate::numerics::fit::linear_fit;
use crate::numerics::RadialGrid;
use serde::Serialize;
use std::sync::Arc;

/// `phi_0'(y)`.
fn profile_slope(d: usize, y: f64) -> f64 {
    let a = ((d - 2) as f64).sqrt();
    2.0 / a / (1.0 + (y / a).powi(2))
}

/// `u = phi_0(r / (T - t))` and its time derivative at time `t`.
pub(crate) fn exact_state(grid: &Arc<RadialGrid>, d: usize, t_blow: f64, t: f64) -> WaveState {
    let tau = t_blow - t;
    WaveState::from_fn(grid, t, |r| self_similar_profile(d, r / tau), |r| profile_slope(d, r / tau) * r / (tau * tau))
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfSimilarReport {
    pub d: usize,
    pub t_blow: f64,
    pub t_end: f64,
    pub r_max: f64,
    pub h: f64,
    /// `sup_{r <= 1} |u - phi_0(r / (T - t))|` at `t_end`.
    pub sup_error: f64,
    /// The same error on a grid twice as coarse.
    pub sup_error_coarse: f64,
    pub convergence_order: f64,
    /// Slope of `log u_r(0, t)` against `log (T - t)`.
    pub type_one_slope: f64,
    /// Range of `(T - t) u_r(0, t)` along the run.
    pub scaled_gradient: (f64, f64),
    /// `sup_{y <= 5}` of the self-similar ODE residual at the initial profile.
    pub ode_residual: f64,
}

fn run(d: usize, t_blow: f64, t_end: f64, r_max: f64, n: usize, samples: usize) -> Result<(f64, f64, Vec<(f64, f64)>)> {
    let mut solver = WaveSolver::new(d, r_max, n, super::Boundary::Frozen)?;
    let grid = solver.grid.clone();
    let mut state = exact_state(&grid, d, t_blow, 0.0);
    let dt = MAX_CFL * solver.h();
    let mut series = vec![(0.0, state.slope_at_origin())];
    for j in 1..=samples {
        solver.evolve(&mut state, t_end * j as f64 / samples as f64, dt)?;
        series.push((state.t, state.slope_at_origin()));
    }
    let exact = exact_state(&grid, d, t_blow, state.t);
    let err = grid
        .nodes()
        .iter()
        .zip(state.u.values.iter().zip(&exact.u.values))
        .filter(|(r, _)| **r <= 1.0)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((err, solver.h(), series))
}

/// Evolve the exact self-similar solution from `t = 0` to `t_end` with
/// `nodes_per_unit` grid nodes per unit radius and compare on `r <= 1`.
pub fn self_similar_test(d: usize, t_blow: f64, t_end: f64, nodes_per_unit: usize) -> Result<SelfSimilarReport> {
    if !(t_end > 0.0 && t_end < t_blow) {
        return Err(Error::Contract(format!("need 0 < t_end < T, got t_end = {t_end}, T = {t_blow}")));
    }
    if nodes_per_unit < 32 {
        return Err(Error::Contract(format!("at least 32 nodes per unit radius required, got {nodes_per_unit}")));
    }
    // boundary data travels inward at unit speed and must not reach r = 1
    let r_max = (1.0 + t_end + 2.5).ceil();
    let n = (r_max * nodes_per_unit as f64) as usize + 1;
    let (err, h, series) = run(d, t_blow, t_end, r_max, n, 50)?;
    let (err_coarse, _, _) = run(d, t_blow, t_end, r_max, (n - 1) / 2 + 1, 5)?;
    let xs: Vec<f64> = series.iter().map(|(t, _)| (t_blow - t).ln()).collect();
    let ys: Vec<f64> = series.iter().map(|(_, g)| g.ln()).collect();
    let (_, slope) = linear_fit(&xs, &ys, None)?;
    let scaled: Vec<f64> = series.iter().map(|(t, g)| (t_blow - t) * g).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ode_grid = Arc::new(RadialGrid::standard(d, 20.0)?);
    let res = self_similar_residual(d, &ode_grid)?;
    Ok(SelfSimilarReport {
        d,
        t_blow,
        t_end,
        r_max,
        h,
        sup_error: err,
        sup_error_coarse: err_coarse,
        convergence_order: (err_coarse / err).log2(),
        type_one_slope: slope,
        scaled_gradient: (lo, hi),
        ode_residual: res.sup_on(0.0, 5.0),
    })
}
