//! Modulation dynamics `(b_k)_s = -(k - gamma) b_1 b_k + b_{k+1}` (`b_{L+1} = 0`),
//! `-lambda_s / lambda = b_1`, `dt/ds = lambda`.
//!
//! Trajectories are integrated in the rescaled unknowns
//! `U_k = s^k b_k - c_k` and logarithmic time `tau = ln s`, where the explicit
//! solution `b_k = c_k / s^k` is the fixed point `U = 0` and the linearization
//! is the constant matrix `A_ell`.

mod shooting;

pub use shooting::{run_candidate, shoot_unstable, Outcome, ShootingConfig, ShootingResult};

use crate::error::{Error, Result};
use crate::ground_state::structural_constants;
use crate::numerics::fit::linear_fit;
use crate::numerics::linalg::{inverse, matmul, Matrix};
use crate::numerics::{eig_small, OdeOptions, Stepper};
use serde::Serialize;

/// Parameters of the modulation system for one blowup rate `ell`.
#[derive(Debug, Clone, Serialize)]
pub struct BParams {
    pub ell: usize,
    pub l: usize,
    pub gamma: f64,
    /// `c_1..=c_L` at indices `0..L`.
    pub c: Vec<f64>,
}

impl BParams {
    pub fn new(ell: usize, l: usize, gamma: f64) -> Result<Self> {
        if !(ell as f64 > gamma) {
            return Err(Error::Domain(format!("ell = {ell} must exceed gamma = {gamma}")));
        }
        if l < ell {
            return Err(Error::Domain(format!("L = {l} must be at least ell = {ell}")));
        }
        let lf = ell as f64;
        let mut c = vec![0.0; l];
        c[0] = lf / (lf - gamma);
        for k in 1..ell {
            c[k] = -gamma * (lf - k as f64) / (lf - gamma) * c[k - 1];
        }
        Ok(BParams { ell, l, gamma, c })
    }

    /// Parameters with `gamma = gamma(d)`.
    pub fn for_dimension(d: usize, ell: usize, l: usize) -> Result<Self> {
        BParams::new(ell, l, structural_constants(d)?.gamma)
    }
}

/// `b_k^e(s) = c_k / s^k`.
pub fn explicit_solution(p: &BParams, s: f64) -> Vec<f64> {
    p.c.iter().enumerate().map(|(i, c)| c / s.powi(i as i32 + 1)).collect()
}

/// Point of the modulation dynamics.
#[derive(Debug, Clone, Serialize)]
pub struct BState {
    pub s: f64,
    pub b: Vec<f64>,
    pub lambda: f64,
    pub t: f64,
}

/// `d/ds` of `(b, lambda, t)`.
#[derive(Debug, Clone, Serialize)]
pub struct BRhs {
    pub b: Vec<f64>,
    pub lambda: f64,
    pub t: f64,
}

pub fn rhs(p: &BParams, st: &BState) -> Result<BRhs> {
    if !(st.lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {} must be positive", st.lambda)));
    }
    Ok(BRhs { b: b_rhs(p, &st.b), lambda: -st.b[0] * st.lambda, t: st.lambda })
}

/// `(b_k)_s = -(k - gamma) b_1 b_k + b_{k+1}`.
pub fn b_rhs(p: &BParams, b: &[f64]) -> Vec<f64> {
    (0..p.l)
        .map(|i| {
            let next = if i + 1 < p.l { b[i + 1] } else { 0.0 };
            -((i + 1) as f64 - p.gamma) * b[0] * b[i] + next
        })
        .collect()
}

/// `A_ell`, its eigenvalues `D` and the change of basis `P` with `A = P^{-1} D P`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralData {
    pub a: Matrix,
    /// Rows are left eigenvectors: `V = P U` are the eigencoordinates.
    pub p: Matrix,
    pub p_inv: Matrix,
    /// `-1, 2 gamma/(ell - gamma), ..., ell gamma/(ell - gamma)`, as computed.
    pub d: Vec<f64>,
}

impl SpectralData {
    /// `max |A - P^{-1} D P|`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.d.len();
        let dp: Matrix = (0..n).map(|i| self.p[i].iter().map(|v| v * self.d[i]).collect()).collect();
        let r = matmul(&self.p_inv, &dp);
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (r[i][j] - self.a[i][j]).abs()).fold(0.0, f64::max)
    }

    /// The predicted spectrum `{-1} u {k gamma / (ell - gamma)}`.
    pub fn predicted(ell: usize, gamma: f64) -> Vec<f64> {
        let mut v = vec![-1.0];
        v.extend((2..=ell).map(|k| k as f64 * gamma / (ell as f64 - gamma)));
        v
    }
}

/// Linearization of the rescaled system at `U = 0`:
/// `a_11 = gamma (ell-1)/(ell-gamma) - (1-gamma) c_1`, `a_ii = gamma (ell-i)/(ell-gamma)`,
/// `a_{i,i+1} = 1` and `a_{i,1} = -(i - gamma) c_i` for `i >= 2`.
pub fn build_a_ell(ell: usize, gamma: f64) -> Result<SpectralData> {
    if ell < 2 {
        return Err(Error::Domain(format!("ell must be at least 2, got {ell}")));
    }
    let p = BParams::new(ell, ell, gamma)?;
    let lf = ell as f64;
    let mut a = vec![vec![0.0; ell]; ell];
    for i in 0..ell {
        let k = (i + 1) as f64;
        a[i][i] = gamma * (lf - k) / (lf - gamma);
        if i + 1 < ell {
            a[i][i + 1] = 1.0;
        }
        if i > 0 {
            a[i][0] = -(k - gamma) * p.c[i];
        }
    }
    a[0][0] -= (1.0 - gamma) * p.c[0];
    let eig = eig_small(&a)?;
    let mut d = Vec::with_capacity(ell);
    let mut cols = Vec::with_capacity(ell);
    for (v, vec) in eig.values.iter().zip(&eig.vectors) {
        match (v.is_real(), vec) {
            (true, Some(x)) => {
                d.push(v.re);
                cols.push(x.clone());
            }
            _ => return Err(Error::Numerical(format!("A_ell has a complex eigenvalue {} + {}i", v.re, v.im))),
        }
    }
    let p_inv: Matrix = (0..ell).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let p_mat = inverse(&p_inv)?;
    let out = SpectralData { a, p: p_mat, p_inv, d };
    let err = out.reconstruction_error();
    if !(err <= 1e-8 * (1.0 + crate::numerics::linalg::mat_norm(&out.a))) {
        return Err(Error::Numerical(format!("A_ell is not diagonalized accurately (defect {err:e})")));
    }
    Ok(out)
}

/// Right side of the rescaled system in `tau = ln s` for `y = (U_1..U_L, ln lambda, t)`:
/// `dU_k/dtau = k U_k - (k - gamma)(c_1 U_k + c_k U_1 + U_1 U_k) + U_{k+1}`,
/// `d ln lambda / dtau = -(c_1 + U_1)`, `dt/dtau = s lambda`.
pub fn rescaled_rhs(p: &BParams, tau: f64, y: &[f64], out: &mut [f64]) {
    let l = p.l;
    let u1 = y[0];
    for i in 0..l {
        let k = (i + 1) as f64;
        let next = if i + 1 < l { y[i + 1] } else { 0.0 };
        out[i] = k * y[i] - (k - p.gamma) * (p.c[0] * y[i] + p.c[i] * u1 + u1 * y[i]) + next;
    }
    out[l] = -(p.c[0] + u1);
    out[l + 1] = (tau + y[l]).exp();
}

/// Direction of [`change_vars`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `b -> U`.
    BToU,
    /// `U -> b`.
    UToB,
    /// `U -> V`, the first `ell` entries mapped by `P`, the rest unchanged.
    UToV,
    /// `V -> U`.
    VToU,
}

/// `b_k = b_k^e + U_k / s^k` and `V = P U` on the first `ell` components.
pub fn change_vars(p: &BParams, spec: &SpectralData, x: &[f64], s: f64, dir: Direction) -> Vec<f64> {
    let ell = spec.d.len();
    match dir {
        Direction::BToU => x.iter().enumerate().map(|(i, b)| s.powi(i as i32 + 1) * b - p.c[i]).collect(),
        Direction::UToB => x.iter().enumerate().map(|(i, u)| (p.c[i] + u) / s.powi(i as i32 + 1)).collect(),
        Direction::UToV | Direction::VToU => {
            let m = if dir == Direction::UToV { &spec.p } else { &spec.p_inv };
            let mut out = x.to_vec();
            for i in 0..ell {
                out[i] = (0..ell).map(|j| m[i][j] * x[j]).sum();
            }
            out
        }
    }
}

/// Finite difference Jacobian of the rescaled vector field at `U = 0`,
/// evaluated through [`b_rhs`] in the original variables at scale `s`.
pub fn fd_jacobian(p: &BParams, s: f64, h: f64) -> Matrix {
    let l = p.l;
    let field = |u: &[f64]| -> Vec<f64> {
        let b: Vec<f64> = (0..l).map(|i| (p.c[i] + u[i]) / s.powi(i as i32 + 1)).collect();
        let db = b_rhs(p, &b);
        // dU_k/dtau = s d/ds (s^k b_k) = k s^k b_k + s^{k+1} b_k'
        (0..l).map(|i| (i + 1) as f64 * s.powi(i as i32 + 1) * b[i] + s.powi(i as i32 + 2) * db[i]).collect()
    };
    let mut jac = vec![vec![0.0; l]; l];
    for j in 0..l {
        let mut up = vec![0.0; l];
        let mut um = vec![0.0; l];
        up[j] = h;
        um[j] = -h;
        let (fp, fm) = (field(&up), field(&um));
        for i in 0..l {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Sampled trajectory of the modulation system.
#[derive(Debug, Clone, Serialize)]
pub struct BTrajectory {
    pub states: Vec<BState>,
    /// Set when `b` left the region `0 < b_1 <= 1`, `|b_k| <= 10 b_1^k`.
    pub exit: Option<BState>,
}

fn in_region(b: &[f64]) -> bool {
    let b1 = b[0];
    b1 > 0.0 && b1 <= 1.0 && b.iter().enumerate().skip(1).all(|(i, bk)| bk.abs() <= 10.0 * b1.powi(i as i32 + 1))
}

/// Integrate from `state0` to `s_end`, sampling `samples_per_decade` points per
/// decade of `s`. Stops early with an exit event if `b` leaves the a priori region.
pub fn integrate_trajectory(p: &BParams, state0: &BState, s_end: f64, tol: f64) -> Result<BTrajectory> {
    integrate_sampled(p, state0, s_end, tol, 200)
}

pub fn integrate_sampled(p: &BParams, state0: &BState, s_end: f64, tol: f64, samples_per_decade: usize) -> Result<BTrajectory> {
    if state0.b.len() != p.l {
        return Err(Error::Contract(format!("state has {} parameters, expected {}", state0.b.len(), p.l)));
    }
    if !(state0.s > 0.0 && s_end > state0.s && state0.lambda > 0.0) {
        return Err(Error::Contract("need 0 < s0 < s_end and lambda > 0".into()));
    }
    let l = p.l;
    let mut y0 = change_vars_u(p, &state0.b, state0.s);
    y0.push(state0.lambda.ln());
    y0.push(state0.t);
    let unpack = |tau: f64, y: &[f64]| -> BState {
        let s = tau.exp();
        BState { s, b: (0..l).map(|i| (p.c[i] + y[i]) / s.powi(i as i32 + 1)).collect(), lambda: y[l].exp(), t: y[l + 1] }
    };
    let mut opts = OdeOptions::with_tol(tol);
    opts.atol = tol * 1e-3;
    let mut stepper = Stepper::new(|tau: f64, y: &[f64], out: &mut [f64]| rescaled_rhs(p, tau, y, out), state0.s.ln(), &y0, opts);
    let tau_end = s_end.ln();
    let n = ((tau_end - state0.s.ln()) / std::f64::consts::LN_10 * samples_per_decade as f64).ceil().max(1.0) as usize;
    let mut states = vec![state0.clone()];
    for i in 1..=n {
        let target = state0.s.ln() + (tau_end - state0.s.ln()) * i as f64 / n as f64;
        while stepper.t() < target {
            stepper.step(target)?;
            let st = unpack(stepper.t(), stepper.y());
            if !in_region(&st.b) {
                states.push(st.clone());
                return Ok(BTrajectory { states, exit: Some(st) });
            }
        }
        states.push(unpack(stepper.t(), stepper.y()));
    }
    Ok(BTrajectory { states, exit: None })
}

fn change_vars_u(p: &BParams, b: &[f64], s: f64) -> Vec<f64> {
    b.iter().enumerate().map(|(i, bk)| s.powi(i as i32 + 1) * bk - p.c[i]).collect()
}

/// Fitted blowup laws of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupLaw {
    /// Slope of `log lambda` against `log s`.
    pub slope_s: f64,
    /// Slope of `log lambda` against `log (T - t)`.
    pub slope_t: f64,
    /// Extrapolated blowup time.
    pub t_est: f64,
}

/// Aitken extrapolation of `t(s)` from `s_end/4`, `s_end/2`, `s_end`, then
/// fits over `[s_0, s_end]` (for `s`) and `[2 s_0, s_end/10]` (for `T - t`).
pub fn blowup_law(traj: &BTrajectory) -> Result<BlowupLaw> {
    if traj.exit.is_some() {
        return Err(Error::Regime("trajectory left the a priori region".into()));
    }
    let st = &traj.states;
    let (s0, s_end) = (st[0].s, st.last().unwrap().s);
    if s_end < 40.0 * s0 {
        return Err(Error::Contract("blowup law fits need s_end >= 40 s0".into()));
    }
    let t_at = |s: f64| -> f64 {
        let i = st.partition_point(|x| x.s < s).min(st.len() - 1).max(1);
        let (a, b) = (&st[i - 1], &st[i]);
        // t is smooth in log s; interpolate linearly in log s
        let w = (s.ln() - a.s.ln()) / (b.s.ln() - a.s.ln());
        a.t + w * (b.t - a.t)
    };
    let (t1, t2, t3) = (t_at(s_end / 4.0), t_at(s_end / 2.0), st.last().unwrap().t);
    let denom = t3 - 2.0 * t2 + t1;
    let t_est = if denom.abs() > 0.0 { t3 - (t3 - t2).powi(2) / denom } else { t3 };
    let ls: Vec<f64> = st.iter().map(|x| x.s.ln()).collect();
    let ll: Vec<f64> = st.iter().map(|x| x.lambda.ln()).collect();
    let (_, slope_s) = linear_fit(&ls, &ll, None)?;
    let sel: Vec<&BState> = st.iter().filter(|x| x.s >= 2.0 * s0 && x.s <= s_end / 10.0).collect();
    let xs: Vec<f64> = sel.iter().map(|x| (t_est - x.t).ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|x| x.lambda.ln()).collect();
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("T - t is not positive along the fit window".into()));
    }
    let (_, slope_t) = linear_fit(&xs, &ys, None)?;
    Ok(BlowupLaw { slope_s, slope_t, t_est })
}
