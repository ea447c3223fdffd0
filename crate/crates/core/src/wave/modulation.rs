use super::{profile_state, Boundary, WaveSolver, WaveState, MAX_CFL};
use crate::bsystem::{explicit_solution, integrate_sampled, BParams, BState};
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::linop::{build_phi_m, PhiM, RadialPair};
use crate::numerics::linalg::solve;
use crate::numerics::{Parity, RadialField};
use crate::profiles::{assemble_qb, ProfileSet};
use serde::Serialize;
use std::sync::Arc;

/// `lambda` with `u ~ Q(r / lambda)`: the guess `1 / u_r(0)` refined by a
/// least squares fit of `u` against `Q(r / lambda)` on `r <= 10 lambda`.
pub fn extract_lambda(state: &WaveState, gs: &GroundState) -> Result<f64> {
    let slope = state.slope_at_origin();
    if !(slope > 0.0) {
        return Err(Error::Regime(format!("u_r(0) = {slope:e} is not positive; the state is not Q dominated")));
    }
    let nodes = state.grid().nodes();
    let mut lambda = 1.0 / slope;
    for _ in 0..30 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &r) in nodes.iter().enumerate().skip(1) {
            if r > 10.0 * lambda {
                break;
            }
            let y = r / lambda;
            let (q, dq) = gs.q_at(y);
            // d/d lambda Q(r / lambda) = -y Q'(y) / lambda
            let jac = -y * dq / lambda;
            num += jac * (state.u.values[i] - q);
            den += jac * jac;
        }
        if den == 0.0 {
            return Err(Error::Regime("no grid node inside r <= 10 lambda".into()));
        }
        let step = num / den;
        lambda += step;
        if !(lambda > 0.0) {
            return Err(Error::Regime("least squares fit drove lambda negative".into()));
        }
        if step.abs() <= 1e-14 * lambda {
            break;
        }
    }
    Ok(lambda)
}

/// Result of the modulation decomposition `w = Q_b + q`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub lambda: f64,
    pub b: Vec<f64>,
    /// Renormalized remainder on the profile grid, zero beyond the support of the directions.
    pub q: RadialPair,
    /// `max_k |<q, H*^k Phi_M>| / <|w|, |H*^k Phi_M|>`.
    pub orthogonality: f64,
    pub iterations: usize,
}

/// Newton solver for the orthogonality conditions `<q, H*^k Phi_M> = 0`, `0 <= k <= L`.
pub struct Projector {
    pub ps: Arc<ProfileSet>,
    pub phi: PhiM,
    /// Nodes of the profile grid at which `w` is sampled.
    n_cut: usize,
    /// Quadrature weights of `y^{d-1} dy` on those nodes.
    weights: Vec<f64>,
}

const TOLERANCE: f64 = 1e-10;

impl Projector {
    pub fn new(ps: Arc<ProfileSet>, m: f64) -> Result<Projector> {
        let phi = build_phi_m(&ps.ops, &ps.t, m, ps.l)?;
        let grid = &ps.ops.gs.grid;
        let cut = 2.2 * m;
        if cut > grid.y_max() {
            return Err(Error::Range(format!("directions reach y = {cut}, beyond the profile grid")));
        }
        let n_cut = grid.nodes().partition_point(|&y| y <= cut);
        let mut weights = grid.quadrature_weights((grid.dim() - 1) as f64);
        weights.truncate(n_cut);
        Ok(Projector { ps, phi, n_cut, weights })
    }

    /// Largest renormalized radius used by the projection.
    pub fn support(&self) -> f64 {
        self.ps.ops.gs.grid.nodes()[self.n_cut - 1]
    }

    /// `(u(lambda y), lambda u_t(lambda y))` on the profile grid, zero beyond the cut.
    fn renormalize(&self, state: &WaveState, lambda: f64) -> Result<RadialPair> {
        let grid = &self.ps.ops.gs.grid;
        let r_max = state.grid().y_max();
        if lambda * self.support() > r_max {
            return Err(Error::Projection(format!("lambda = {lambda} maps the directions beyond r_max = {r_max}")));
        }
        let n = grid.len();
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        let sim = state.grid();
        for (i, &y) in grid.nodes().iter().enumerate().take(self.n_cut) {
            a[i] = sim.interpolate(&state.u.values, lambda * y);
            b[i] = lambda * sim.interpolate(&state.ut.values, lambda * y);
        }
        Ok(RadialPair { first: RadialField::new(grid.clone(), a, Parity::Odd)?, second: RadialField::new(grid.clone(), b, Parity::Odd)? })
    }

    fn remainder(&self, w: &RadialPair, b: &[f64]) -> Result<RadialPair> {
        let qb = assemble_qb(&self.ps, b, true).map_err(|e| Error::Projection(format!("profile rejected b = {b:?}: {e}")))?;
        let mut q = w.sub(&qb);
        for v in q.first.values.iter_mut().skip(self.n_cut) {
            *v = 0.0;
        }
        for v in q.second.values.iter_mut().skip(self.n_cut) {
            *v = 0.0;
        }
        Ok(q)
    }

    fn conditions(&self, state: &WaveState, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, RadialPair)> {
        let lambda = x[0].exp();
        let w = self.renormalize(state, lambda)?;
        let q = self.remainder(&w, &x[1..])?;
        // q vanishes beyond the cut, so the sums stop there
        let dot = |a: &RadialPair, b: &RadialPair, abs: bool| -> f64 {
            (0..self.n_cut)
                .map(|i| {
                    let (x1, x2, y1, y2) = (a.first.values[i], a.second.values[i], b.first.values[i], b.second.values[i]);
                    let v = if abs { (x1 * y1).abs() + (x2 * y2).abs() } else { x1 * y1 + x2 * y2 };
                    self.weights[i] * v
                })
                .sum()
        };
        let g: Vec<f64> = self.phi.directions.iter().map(|dir| dot(&q, dir, false)).collect();
        let scale: Vec<f64> = self.phi.directions.iter().map(|dir| dot(&w, dir, true)).collect();
        Ok((g, scale, q))
    }

    /// Solve for `(lambda, b)` starting from a guess.
    pub fn project(&self, state: &WaveState, lambda0: f64, b0: &[f64]) -> Result<Projection> {
        let l = self.ps.l;
        if b0.len() != l || !(lambda0 > 0.0) {
            return Err(Error::Contract(format!("guess needs lambda > 0 and {l} parameters")));
        }
        let mut x: Vec<f64> = std::iter::once(lambda0.ln()).chain(b0.iter().copied()).collect();
        let rel = |g: &[f64], sc: &[f64]| g.iter().zip(sc).map(|(a, s)| (a / s).abs()).fold(0.0, f64::max);
        let (mut g, mut sc, mut q) = self.conditions(state, &x)?;
        let mut iterations = 0;
        while rel(&g, &sc) > TOLERANCE {
            iterations += 1;
            if iterations > 30 {
                return Err(Error::Projection(format!("Newton did not converge (defect {:e})", rel(&g, &sc))));
            }
            let mut jac = vec![vec![0.0; l + 1]; l + 1];
            for j in 0..=l {
                let hstep = if j == 0 { 1e-7 } else { 1e-7 * x[1].powi(j as i32).max(x[j].abs()) };
                let mut xp = x.clone();
                xp[j] += hstep;
                let mut xm = x.clone();
                xm[j] -= hstep;
                let (gp, _, _) = self.conditions(state, &xp)?;
                let (gm, _, _) = self.conditions(state, &xm)?;
                for i in 0..=l {
                    jac[i][j] = (gp[i] - gm[i]) / (2.0 * hstep);
                }
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let dx = solve(&jac, &rhs).map_err(|e| Error::Projection(format!("singular modulation Jacobian: {e}")))?;
            let current = rel(&g, &sc);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
                if let Ok((g2, sc2, q2)) = self.conditions(state, &trial) {
                    if rel(&g2, &sc2) < current {
                        x = trial;
                        g = g2;
                        sc = sc2;
                        q = q2;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-4 {
                    return Err(Error::Projection(format!("line search failed at defect {current:e}")));
                }
            }
        }
        Ok(Projection { lambda: x[0].exp(), b: x[1..].to_vec(), q, orthogonality: rel(&g, &sc), iterations })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingRow {
    pub t: f64,
    pub s: f64,
    pub lambda: f64,
    pub b: Vec<f64>,
    pub b1_ode: f64,
    pub relative_deviation: f64,
    pub orthogonality: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingReport {
    pub rows: Vec<TrackingRow>,
    pub max_relative_deviation: f64,
    /// `max |lambda_s / lambda + b_1| / b_1^2` over interior rows.
    pub modulation_defect: f64,
    pub h: f64,
    pub r_max: f64,
}

/// Launch the PDE at the localized profile `Q_{b^e(s0)}` with `lambda = 1`,
/// project every `t_end / projections`, rebuild `s = s0 + int dt / lambda`
/// and compare `b_1(s)` with the modulation system started at `b^e(s0)`.
pub fn track_against_bsystem(proj: &Projector, s0: f64, ds: f64, r_max: f64, n_r: usize, projections: usize) -> Result<TrackingReport> {
    let ps = &proj.ps;
    let p = BParams::new(ps.ell, ps.l, ps.gamma())?;
    let b0 = explicit_solution(&p, s0);
    let ode = integrate_sampled(&p, &BState { s: s0, b: b0.clone(), lambda: 1.0, t: 0.0 }, s0 + ds, 1e-11, 2000)?;
    if ode.exit.is_some() {
        return Err(Error::Regime("modulation trajectory left the a priori region".into()));
    }
    let t_end = ode.states.last().map(|st| st.t).unwrap_or(0.0);
    if t_end + proj.support() >= r_max {
        return Err(Error::Contract(format!("r_max = {r_max} too small for t_end = {t_end} and projection radius {}", proj.support())));
    }
    let mut solver = WaveSolver::new(ps.d, r_max, n_r, Boundary::Frozen)?;
    let mut state = profile_state(&solver.grid.clone(), ps, &b0, 1.0, None)?;
    let dt = MAX_CFL * solver.h();
    let b1_ode = |s: f64| -> f64 {
        let st = &ode.states;
        let i = st.partition_point(|x| x.s < s).clamp(1, st.len() - 1);
        let (a, b) = (&st[i - 1], &st[i]);
        let w = (s.ln() - a.s.ln()) / (b.s.ln() - a.s.ln());
        a.b[0] + w * (b.b[0] - a.b[0])
    };
    let mut rows = Vec::new();
    let mut guess = (1.0, b0.clone());
    let mut s = s0;
    let mut prev: Option<(f64, f64)> = None;
    for j in 0..=projections {
        let t = t_end * j as f64 / projections as f64;
        solver.evolve(&mut state, t, dt)?;
        let pr = proj.project(&state, guess.0, &guess.1)?;
        if let Some((t_prev, lam_prev)) = prev {
            // exact for lambda exponential in t between projections
            let ratio = pr.lambda / lam_prev;
            let mean_inv = if (ratio - 1.0).abs() < 1e-12 { 1.0 / pr.lambda } else { (1.0 / lam_prev - 1.0 / pr.lambda) / ratio.ln() };
            s += (t - t_prev) * mean_inv;
        }
        prev = Some((t, pr.lambda));
        let reference = b1_ode(s);
        rows.push(TrackingRow {
            t,
            s,
            lambda: pr.lambda,
            b: pr.b.clone(),
            b1_ode: reference,
            relative_deviation: (pr.b[0] - reference).abs() / reference,
            orthogonality: pr.orthogonality,
        });
        guess = (pr.lambda, pr.b);
    }
    let max_relative_deviation = rows.iter().map(|r| r.relative_deviation).fold(0.0, f64::max);
    let mut modulation_defect: f64 = 0.0;
    for w in rows.windows(3) {
        let lam_s = (w[2].lambda.ln() - w[0].lambda.ln()) / (w[2].s - w[0].s);
        let b1 = w[1].b[0];
        modulation_defect = modulation_defect.max((lam_s + b1).abs() / (b1 * b1));
    }
    Ok(TrackingReport { rows, max_relative_deviation, modulation_defect, h: solver.h(), r_max })
}

