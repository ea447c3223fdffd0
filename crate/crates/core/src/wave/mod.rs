//! Radial wave map `u_tt = u_rr + (d-1)/r u_r - (d-1)/(2r^2) sin 2u` in physical variables.
//!
//! Method of lines on a uniform grid `r_i = i h`: fourth order centered
//! differences, odd ghost nodes at the origin and classical RK4 in time. The
//! singular terms are grouped as `(d-1)/r (u_r - u/r) - (d-1)/r^2 G(u)` with
//! `G(u) = (sin 2u - 2u)/2`, which is regular for odd `u`. A weak sixth order
//! dissipation on `u_t` keeps the axis closure stable. The two outermost
//! nodes are frozen, so runs must stay inside the light cone of the boundary.

mod experiment;
mod modulation;
mod selfsim;

pub use experiment::{rate_report, run_blowup_experiment, ExperimentConfig, RateReport, TrackRow};
pub use modulation::{extract_lambda, track_against_bsystem, Projection, Projector, TrackingReport, TrackingRow};
pub use selfsim::{self_similar_test, SelfSimilarReport};

use crate::error::{Error, Result};
use crate::ground_state::integrate_profile;
use crate::numerics::cutoff::chi;
use crate::numerics::{Parity, RadialField, RadialGrid};
use crate::profiles::{assemble_qb, ProfileSet};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Largest admissible `dt / h`.
pub const MAX_CFL: f64 = 0.5;

/// Strength of the sixth order Kreiss-Oliger dissipation acting on `u_t`.
/// The centered stencils couple to the `1/r` terms near the axis into a
/// semi-discrete operator with complex eigenvalues (growth rate `~ 0.02 / h`);
/// the dissipation removes them at an `O(h^5)` cost in accuracy.
pub const DISSIPATION: f64 = 0.1;

/// Policy at `r = r_max`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The last two nodes keep their initial values.
    #[default]
    Frozen,
}

/// Initial data descriptors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `(Q(r / lambda), 0)`.
    GroundState { lambda: f64 },
    /// The localized profile at `b = b^e(s0)`, scaled by `lambda` and
    /// multiplied by `chi(r / truncation)` when a truncation radius is given.
    LocalizedQb { ell: usize, l: usize, s0: f64, lambda: f64, truncation: Option<f64> },
    /// `phi_0(r / T)` with the time derivative of `phi_0(r / (T - t))` at `t = 0`.
    SelfSimilar { t_blow: f64 },
    /// `A (exp(-((r-c)/w)^2) - exp(-((r+c)/w)^2))` at rest.
    Bump { amplitude: f64, center: f64, width: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: usize,
    pub r_max: f64,
    /// Number of nodes, `r_0 = 0` and `r_{N-1} = r_max`.
    pub n_r: usize,
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub boundary: Boundary,
    pub initial: InitialData,
    /// Radius of the region whose solution is reported; `t_end` must stay below
    /// `r_max - monitor_radius`.
    #[serde(default = "default_monitor")]
    pub monitor_radius: f64,
}

fn default_monitor() -> f64 {
    0.0
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return Err(Error::Contract(format!("CFL number {} outside (0, {MAX_CFL}]", self.cfl)));
        }
        if self.n_r < 16 || !(self.r_max > 0.0) {
            return Err(Error::Contract(format!("need n_r >= 16 and r_max > 0 (n_r = {}, r_max = {})", self.n_r, self.r_max)));
        }
        if !(self.t_end >= 0.0 && self.t_end + self.monitor_radius < self.r_max) {
            return Err(Error::Contract(format!(
                "t_end = {} violates light cone safety (r_max = {}, monitored radius {})",
                self.t_end, self.r_max, self.monitor_radius
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.r_max / (self.n_r - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.h()
    }
}

/// `(u, u_t)` at time `t` on the simulation grid.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub t: f64,
    pub u: RadialField,
    pub ut: RadialField,
}

impl WaveState {
    /// Sample `(u, u_t)` at the nodes of `grid`.
    pub fn from_fn(grid: &Arc<RadialGrid>, t: f64, u: impl Fn(f64) -> f64, ut: impl Fn(f64) -> f64) -> WaveState {
        WaveState { t, u: RadialField::from_fn(grid, Parity::Odd, u), ut: RadialField::from_fn(grid, Parity::Odd, ut) }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.u.grid
    }

    pub fn h(&self) -> f64 {
        self.grid().h0()
    }

    /// `u_r(0)` from the odd extension, `(16 u_1 - 2 u_2) / (12 h)`.
    pub fn slope_at_origin(&self) -> f64 {
        let u = &self.u.values;
        (16.0 * u[1] - 2.0 * u[2]) / (12.0 * self.h())
    }

    /// `sup_r |u_r|`.
    pub fn sup_gradient(&self) -> Result<f64> {
        Ok(self.u.deriv(1)?.values.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.ut.is_finite()
    }
}

/// `(sin 2u - 2u) / 2`, by its Taylor series for small `|u|`.
fn g_term(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        let u2 = u * u;
        u * u2 * (-2.0 / 3.0 + u2 * (2.0 / 15.0 - u2 * 4.0 / 315.0))
    } else {
        0.5 * (2.0 * u).sin() - u
    }
}

/// Time stepper for one grid.
pub struct WaveSolver {
    pub d: usize,
    pub grid: Arc<RadialGrid>,
    pub boundary: Boundary,
    h: f64,
    k: [Vec<f64>; 8],
    tmp: [Vec<f64>; 2],
}

impl WaveSolver {
    pub fn new(d: usize, r_max: f64, n_r: usize, boundary: Boundary) -> Result<WaveSolver> {
        if d < 3 {
            return Err(Error::Domain(format!("dimension must be at least 3, got {d}")));
        }
        let grid = Arc::new(RadialGrid::uniform(d, r_max, n_r)?);
        Ok(WaveSolver::on_grid(d, grid, boundary))
    }

    pub fn on_grid(d: usize, grid: Arc<RadialGrid>, boundary: Boundary) -> WaveSolver {
        let n = grid.len();
        let h = grid.h0();
        let z = || vec![0.0; n];
        WaveSolver { d, grid, boundary, h, k: [z(), z(), z(), z(), z(), z(), z(), z()], tmp: [z(), z()] }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `u_rr + (d-1)/r u_r - (d-1)/(2r^2) sin 2u` at interior nodes, zero at
    /// the origin and at the frozen nodes.
    pub fn acceleration(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let h = self.h;
        let dm1 = (self.d - 1) as f64;
        let (c1, c2) = (1.0 / (12.0 * h), 1.0 / (12.0 * h * h));
        out[0] = 0.0;
        for i in 1..n - 2 {
            let um1 = u[i - 1];
            let um2 = if i >= 2 { u[i - 2] } else { -u[1] };
            let (up1, up2) = (u[i + 1], u[i + 2]);
            let d1 = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) * c1;
            let d2 = (-up2 + 16.0 * up1 - 30.0 * u[i] + 16.0 * um1 - um2) * c2;
            let r = i as f64 * h;
            out[i] = d2 + dm1 / r * (d1 - u[i] / r) - dm1 / (r * r) * g_term(u[i]);
        }
        out[n - 2] = 0.0;
        out[n - 1] = 0.0;
    }

    fn rhs(&self, u: &[f64], ut: &[f64], du: &mut [f64], dut: &mut [f64]) {
        let n = u.len();
        du.copy_from_slice(ut);
        du[0] = 0.0;
        match self.boundary {
            Boundary::Frozen => {
                du[n - 2] = 0.0;
                du[n - 1] = 0.0;
            }
        }
        self.acceleration(u, dut);
        self.dissipate(ut, dut);
    }

    /// Add `sigma h^5 / 64 (D+ D-)^3 u_t` with odd reflection at the axis.
    fn dissipate(&self, ut: &[f64], out: &mut [f64]) {
        const STENCIL: [f64; 7] = [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0];
        let n = ut.len();
        let c = DISSIPATION / (64.0 * self.h);
        let at = |j: isize| if j < 0 { -ut[(-j) as usize] } else { ut[j as usize] };
        for i in 1..n.saturating_sub(3) {
            let sum: f64 = STENCIL.iter().enumerate().map(|(o, w)| w * at(i as isize + o as isize - 3)).sum();
            out[i] += c * sum;
        }
    }

    /// One RK4 step. A non-finite result is reported as an integration error
    /// carrying the last finite `u`.
    pub fn step(&mut self, state: &mut WaveState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt <= MAX_CFL * self.h * (1.0 + 1e-12)) {
            return Err(Error::Contract(format!("dt = {dt} violates the CFL bound {} h", MAX_CFL)));
        }
        if state.u.values.len() != self.grid.len() {
            return Err(Error::Contract("state lives on a different grid".into()));
        }
        let n = self.grid.len();
        let mut k = std::mem::take(&mut self.k);
        let mut tmp = std::mem::take(&mut self.tmp);
        let (u, ut) = (&state.u.values, &state.ut.values);
        {
            let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut k;
            let [tu, tv] = &mut tmp;
            self.rhs(u, ut, k1u, k1v);
            for i in 0..n {
                tu[i] = u[i] + 0.5 * dt * k1u[i];
                tv[i] = ut[i] + 0.5 * dt * k1v[i];
            }
            self.rhs(tu, tv, k2u, k2v);
            for i in 0..n {
                tu[i] = u[i] + 0.5 * dt * k2u[i];
                tv[i] = ut[i] + 0.5 * dt * k2v[i];
            }
            self.rhs(tu, tv, k3u, k3v);
            for i in 0..n {
                tu[i] = u[i] + dt * k3u[i];
                tv[i] = ut[i] + dt * k3v[i];
            }
            self.rhs(tu, tv, k4u, k4v);
            for i in 0..n {
                tu[i] = u[i] + dt / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
                tv[i] = ut[i] + dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
            }
        }
        let finite = tmp[0].iter().chain(&tmp[1]).all(|v| v.is_finite());
        if finite {
            state.u.values.copy_from_slice(&tmp[0]);
            state.ut.values.copy_from_slice(&tmp[1]);
            state.t += dt;
        }
        self.k = k;
        self.tmp = tmp;
        if !finite {
            return Err(Error::Integration { t: state.t, state: state.u.values.clone(), reason: "non-finite wave state (blowup)".into() });
        }
        Ok(())
    }

    /// Advance to `t_end` with steps of at most `dt`, the last one shortened.
    pub fn evolve(&mut self, state: &mut WaveState, t_end: f64, dt: f64) -> Result<()> {
        while state.t < t_end - 1e-14 * t_end.abs().max(1.0) {
            let step = dt.min(t_end - state.t);
            self.step(state, step)?;
        }
        Ok(())
    }
}

/// Energy and the share of it carried by the outermost tenth of the grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub tail_fraction: f64,
    /// Set when the density does not decay at `r_max`, so the integral is
    /// not meaningful (e.g. `u -> pi/2` at infinity).
    pub divergent: bool,
}

/// `int (u_t^2 + u_r^2 + (d-1)/r^2 sin^2 u) r^{d-1} dr`.
pub fn energy(state: &WaveState) -> Result<EnergyReport> {
    let grid = state.grid();
    let d = grid.dim();
    let ur = state.u.deriv(1)?;
    let dm1 = (d - 1) as f64;
    let dens: Vec<f64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let u = state.u.values[i];
            let angular = if r == 0.0 { 0.0 } else { dm1 * (u.sin() / r).powi(2) };
            state.ut.values[i].powi(2) + ur.values[i].powi(2) + angular
        })
        .collect();
    let value = grid.integrate_all(&dens);
    let r_max = grid.y_max();
    let tail = grid.integrate_weighted(&dens, 0.9 * r_max, r_max)?;
    let tail_fraction = if value > 0.0 { tail / value } else { 0.0 };
    Ok(EnergyReport { value, tail_fraction, divergent: tail_fraction > 1e-3 })
}

/// Build the initial state of a configuration; `ps` is needed for the localized profile.
pub fn initial_state(cfg: &SimConfig, ps: Option<&ProfileSet>) -> Result<(WaveSolver, WaveState)> {
    cfg.validate()?;
    let solver = WaveSolver::new(cfg.d, cfg.r_max, cfg.n_r, cfg.boundary)?;
    let grid = solver.grid.clone();
    let state = match &cfg.initial {
        InitialData::GroundState { lambda } => ground_state_data(&grid, cfg.d, *lambda)?,
        InitialData::LocalizedQb { ell, l, s0, lambda, truncation } => {
            let ps = ps.ok_or_else(|| Error::Dependency("profile set required".into()))?;
            check_dimension(cfg.d, ps.d)?;
            if ps.ell != *ell || ps.l != *l {
                return Err(Error::Contract(format!("profile set has (ell, L) = ({}, {}), config asks ({ell}, {l})", ps.ell, ps.l)));
            }
            let p = crate::bsystem::BParams::new(*ell, *l, ps.gamma())?;
            let b = crate::bsystem::explicit_solution(&p, *s0);
            profile_state(&grid, ps, &b, *lambda, *truncation)?
        }
        InitialData::SelfSimilar { t_blow } => {
            let d = cfg.d;
            let t = *t_blow;
            selfsim::exact_state(&grid, d, t, 0.0)
        }
        InitialData::Bump { amplitude, center, width } => {
            let (a, c, w) = (*amplitude, *center, *width);
            WaveState::from_fn(&grid, 0.0, |r| a * ((-((r - c) / w).powi(2)).exp() - (-((r + c) / w).powi(2)).exp()), |_| 0.0)
        }
    };
    Ok((solver, state))
}

/// `(Q(r / lambda), 0)` with `Q` integrated directly at the grid nodes, so the
/// data is as smooth as the profile itself.
pub fn ground_state_data(grid: &Arc<RadialGrid>, d: usize, lambda: f64) -> Result<WaveState> {
    if !(lambda > 0.0) {
        return Err(Error::Contract(format!("lambda must be positive, got {lambda}")));
    }
    let ys: Vec<f64> = grid.nodes().iter().map(|r| r / lambda).collect();
    let pts = integrate_profile(d, &ys, 1e-13)?;
    let u = pts.iter().map(|p| p.q).collect();
    Ok(WaveState { t: 0.0, u: RadialField::new(grid.clone(), u, Parity::Odd)?, ut: RadialField::zeros(grid, Parity::Odd) })
}

fn check_dimension(cfg: usize, data: usize) -> Result<()> {
    if cfg != data {
        return Err(Error::Contract(format!("configuration dimension {cfg} differs from data dimension {data}")));
    }
    Ok(())
}

/// Physical data `u = (Q_b)_1(r / lambda)`, `u_t = (Q_b)_2(r / lambda) / lambda`
/// of the localized profile, optionally multiplied by `chi(r / truncation)`.
pub fn profile_state(grid: &Arc<RadialGrid>, ps: &ProfileSet, b: &[f64], lambda: f64, truncation: Option<f64>) -> Result<WaveState> {
    let qb = assemble_qb(ps, b, true)?;
    let gs = &ps.ops.gs;
    let y_max = gs.grid.y_max();
    let cut = |r: f64| truncation.map_or(1.0, |rt| chi(r / rt));
    let first = |r: f64| {
        let y = r / lambda;
        // beyond the profile grid the localized correction vanishes
        let v = if y < y_max { qb.first.at(y) } else { gs.q_at(y).0 };
        v * cut(r)
    };
    let second = |r: f64| {
        let y = r / lambda;
        let v = if y < y_max { qb.second.at(y) } else { 0.0 };
        v / lambda * cut(r)
    };
    Ok(WaveState::from_fn(grid, 0.0, first, second))
}
