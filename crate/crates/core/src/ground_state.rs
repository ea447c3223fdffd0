//! The stationary profile `Q` and the fields derived from it.
//!
//! `Q` solves `Q'' + (d-1)/y Q' - (d-1)/(2y^2) sin 2Q = 0` with `Q(0) = 0`,
//! `Q'(0) = 1`, and increases to `pi/2` with tail `pi/2 - Q ~ a0 y^{-gamma}`.

use crate::error::{Error, Result};
use crate::numerics::fit::loglog_fit;
use crate::numerics::{OdeOptions, Parity, RadialField, RadialGrid, Stepper};
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

/// Exponents fixed by the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuralConstants {
    pub d: usize,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub hbar: i64,
    pub delta: f64,
}

pub fn structural_constants(d: usize) -> Result<StructuralConstants> {
    if d < 7 {
        return Err(Error::Domain(format!("dimension must be at least 7, got {d}")));
    }
    let df = d as f64;
    let gamma_tilde = (df * df - 8.0 * df + 8.0).sqrt();
    let gamma = 0.5 * (df - 2.0 - gamma_tilde);
    let excess = 0.5 * df - gamma;
    let hbar = excess.floor();
    let delta = excess - hbar;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("fractional part {delta} not in (0, 1) for d = {d}")));
    }
    Ok(StructuralConstants { d, gamma, gamma_tilde, hbar: hbar as i64, delta })
}

/// Cubic Taylor coefficient of `Q` at the origin: `Q = y + c1 y^3 + O(y^5)`.
pub fn series_c1(d: usize) -> f64 {
    let df = d as f64;
    -(df - 1.0) / (3.0 * (df + 2.0))
}

/// Where the seed series hands over to the integrator.
pub const SEED_RADIUS: f64 = 1e-3;
/// Beyond this radius the gap `pi/2 - Q` is integrated instead of `Q`, so that
/// relative accuracy is kept in the tail.
const GAP_SWITCH: f64 = 1.0;

/// Values of `Q`, `Q'` and the gap `pi/2 - Q` at a point.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub q: f64,
    pub dq: f64,
    pub gap: f64,
}

/// Integrate the profile equation and report it at the sorted points `ys`.
pub fn integrate_profile(d: usize, ys: &[f64], tol: f64) -> Result<Vec<ProfilePoint>> {
    if ys.windows(2).any(|w| w[1] < w[0]) || ys.first().is_some_and(|y| *y < 0.0) {
        return Err(Error::Contract("profile points must be sorted and non-negative".into()));
    }
    let dm1 = (d - 1) as f64;
    let c1 = series_c1(d);
    let mut opts = OdeOptions::with_tol(tol);
    opts.atol = 1e-30;
    opts.h_init = Some(1e-4);
    let inner = move |y: f64, s: &[f64], ds: &mut [f64]| {
        ds[0] = s[1];
        ds[1] = -dm1 / y * s[1] + dm1 / (2.0 * y * y) * (2.0 * s[0]).sin();
    };
    let outer = move |y: f64, s: &[f64], ds: &mut [f64]| {
        ds[0] = s[1];
        ds[1] = -dm1 / y * s[1] - dm1 / (2.0 * y * y) * (2.0 * s[0]).sin();
    };
    let y0 = SEED_RADIUS;
    let seed = [y0 + c1 * y0.powi(3), 1.0 + 3.0 * c1 * y0 * y0];
    let mut out = Vec::with_capacity(ys.len());
    let mut inner_st = Stepper::new(inner, y0, &seed, opts);
    let mut outer_st: Option<Stepper<_>> = None;
    for &y in ys {
        if y <= y0 {
            let q = y + c1 * y.powi(3);
            out.push(ProfilePoint { q, dq: 1.0 + 3.0 * c1 * y * y, gap: FRAC_PI_2 - q });
        } else if y <= GAP_SWITCH {
            inner_st.advance_to(y)?;
            let s = inner_st.y();
            out.push(ProfilePoint { q: s[0], dq: s[1], gap: FRAC_PI_2 - s[0] });
        } else {
            if outer_st.is_none() {
                inner_st.advance_to(GAP_SWITCH)?;
                let s = inner_st.y();
                outer_st = Some(Stepper::new(outer, GAP_SWITCH, &[FRAC_PI_2 - s[0], -s[1]], opts));
            }
            let st = outer_st.as_mut().unwrap();
            st.advance_to(y)?;
            let s = st.y();
            if !(s[0] > 0.0) {
                return Err(Error::Numerical(format!("profile reached pi/2 at y = {y}")));
            }
            out.push(ProfilePoint { q: FRAC_PI_2 - s[0], dq: -s[1], gap: s[0] });
        }
    }
    Ok(out)
}

/// Stationary profile and derived fields on a grid.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub d: usize,
    pub consts: StructuralConstants,
    pub grid: Arc<RadialGrid>,
    pub tol: f64,
    pub q: RadialField,
    pub dq: RadialField,
    /// `pi/2 - Q`, kept separately for relative accuracy in the tail.
    pub gap: RadialField,
    /// `Lambda Q = y Q'`.
    pub lam_q: RadialField,
    /// `V = Lambda log Lambda Q`.
    pub v: RadialField,
    /// `Lambda V`.
    pub lam_v: RadialField,
    /// `Z = (d-1) cos 2Q`.
    pub z: RadialField,
    /// `(sin Q / y)^2`, the regular part of `(Z - (d-1)) / y^2`.
    pub sin_q_over_y_sq: RadialField,
    /// Tail prefactor from the fit of `pi/2 - Q`, when a fit window exists.
    pub a0: Option<f64>,
    pub tail_slope: Option<f64>,
    /// Prefactor of the `Lambda Q` tail divided by gamma.
    pub a0_from_lam_q: Option<f64>,
}

impl GroundState {
    /// Compute the profile on an arbitrary grid (no tail fit).
    pub fn on_grid(d: usize, grid: Arc<RadialGrid>, tol: f64) -> Result<Self> {
        let consts = structural_constants(d)?;
        if grid.dim() != d {
            return Err(Error::Contract(format!("grid dimension {} differs from d = {d}", grid.dim())));
        }
        if !(tol > 0.0 && tol <= 1e-8) {
            return Err(Error::Contract(format!("tolerance must lie in (0, 1e-8], got {tol}")));
        }
        let pts = integrate_profile(d, grid.nodes(), tol)?;
        let dm1 = (d - 1) as f64;
        let c1 = series_c1(d);
        let n = grid.len();
        let (mut q, mut dq, mut gap) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let (mut lam_q, mut v, mut lam_v, mut z, mut sq) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (i, (&y, p)) in grid.nodes().iter().zip(&pts).enumerate() {
            q[i] = p.q;
            dq[i] = p.dq;
            gap[i] = p.gap;
            lam_q[i] = y * p.dq;
            // cos 2Q = -cos 2(gap) is accurate in the tail.
            z[i] = -dm1 * (2.0 * p.gap).cos();
            if y == 0.0 {
                v[i] = 1.0;
                lam_v[i] = 0.0;
                sq[i] = 1.0;
                continue;
            }
            if y <= SEED_RADIUS {
                // V = 1 + 6 c1 y^2 + O(y^4)
                v[i] = 1.0 + 6.0 * c1 * y * y;
                lam_v[i] = 12.0 * c1 * y * y;
            } else {
                let s2 = if p.q < 1.0 { (2.0 * p.q).sin() } else { (2.0 * p.gap).sin() };
                let c2 = -(2.0 * p.gap).cos();
                let d2 = -dm1 / y * p.dq + dm1 / (2.0 * y * y) * s2;
                let d3 = dm1 / (y * y) * p.dq - dm1 / y * d2 - dm1 / (y * y * y) * s2 + dm1 / (y * y) * c2 * p.dq;
                let ratio = d2 / p.dq;
                v[i] = 1.0 + y * ratio;
                lam_v[i] = y * (ratio + y * (d3 / p.dq - ratio * ratio));
            }
            let s = p.gap.cos();
            sq[i] = (s / y) * (s / y);
        }
        let f = |vals: Vec<f64>, parity| RadialField::new(grid.clone(), vals, parity);
        Ok(GroundState {
            d,
            consts,
            tol,
            q: f(q, Parity::Odd)?,
            dq: f(dq, Parity::Even)?,
            gap: f(gap, Parity::None)?,
            lam_q: f(lam_q, Parity::Odd)?,
            v: f(v, Parity::Even)?,
            lam_v: f(lam_v, Parity::Even)?,
            z: f(z, Parity::Even)?,
            sin_q_over_y_sq: f(sq, Parity::Even)?,
            grid,
            a0: None,
            tail_slope: None,
            a0_from_lam_q: None,
        })
    }

    /// Fit `pi/2 - Q ~ a0 y^{-gamma}` and `Lambda Q ~ a0 gamma y^{-gamma}` on `[lo, hi]`.
    pub fn fit_tail(&mut self, lo: f64, hi: f64) -> Result<()> {
        let (_, slope) = loglog_fit(self.grid.nodes(), &self.gap.values, lo, hi)?;
        // Prefactors are fitted with the exponent pinned to -gamma so that the
        // two estimates are comparable.
        let g = self.consts.gamma;
        let pref = |vals: &[f64]| {
            let (s, c) = self
                .grid
                .nodes()
                .iter()
                .zip(vals)
                .filter(|(y, _)| **y >= lo && **y <= hi)
                .fold((0.0, 0usize), |(s, c), (y, v)| (s + (v.abs() * y.powf(g)).ln(), c + 1));
            (s / c as f64).exp()
        };
        self.tail_slope = Some(slope);
        self.a0 = Some(pref(&self.gap.values));
        self.a0_from_lam_q = Some(pref(&self.lam_q.values) / g);
        Ok(())
    }

    /// `Q` and `Q'` at an arbitrary radius by cubic Hermite interpolation.
    pub fn q_at(&self, y: f64) -> (f64, f64) {
        let nodes = self.grid.nodes();
        let y_max = self.grid.y_max();
        if y >= y_max {
            let g = self.consts.gamma;
            let gap = self.gap.values[nodes.len() - 1] * (y / y_max).powf(-g);
            return (FRAC_PI_2 - gap, g * gap / y);
        }
        let i = self.grid.locate(y).min(nodes.len() - 2);
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let h = x1 - x0;
        let t = (y - x0) / h;
        let (f0, f1) = (self.q.values[i], self.q.values[i + 1]);
        let (d0, d1) = (self.dq.values[i] * h, self.dq.values[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let q = (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * f1 + (t3 - t2) * d1;
        let dq = ((6.0 * t2 - 6.0 * t) * f0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * f1 + (3.0 * t2 - 2.0 * t) * d1) / h;
        (q, dq)
    }

    /// `sup |Z - (V^2 + Lambda V + (d-2) V)|` on `[lo, hi]`, with `Lambda V`
    /// taken from finite differences of the tabulated `V`.
    pub fn z_identity_defect(&self, lo: f64, hi: f64) -> Result<f64> {
        let lam_v = self.v.lambda()?;
        let dm2 = (self.d - 2) as f64;
        Ok(self
            .grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, y)| **y >= lo && **y <= hi)
            .map(|(i, _)| {
                let v = self.v.values[i];
                (self.z.values[i] - (v * v + lam_v.values[i] + dm2 * v)).abs()
            })
            .fold(0.0, f64::max))
    }
}

/// Solve on the standard grid up to `y_max` and fit the tail over the last
/// decade below `y_max / 2`.
pub fn solve_ground_state(d: usize, y_max: f64, tol: f64) -> Result<GroundState> {
    if y_max < 100.0 {
        return Err(Error::Contract(format!("y_max must be at least 100, got {y_max}")));
    }
    let grid = Arc::new(RadialGrid::standard(d, y_max)?);
    let mut gs = GroundState::on_grid(d, grid, tol)?;
    gs.fit_tail(y_max / 20.0, y_max / 2.0)?;
    Ok(gs)
}

/// `phi_0(y) = 2 arctan(y / sqrt(d-2))`, the explicit self-similar profile.
pub fn self_similar_profile(d: usize, y: f64) -> f64 {
    2.0 * (y / ((d - 2) as f64).sqrt()).atan()
}

/// Residual of `(1-y^2) phi'' + ((d-1)/y - 2y) phi' - (d-1)/(2y^2) sin 2phi`
/// at `phi_0`, with derivatives from the grid stencils. Node 0 is set to 0.
pub fn self_similar_residual(d: usize, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    let phi = RadialField::from_fn(grid, Parity::Odd, |y| self_similar_profile(d, y));
    let d1 = phi.deriv(1)?;
    let d2 = phi.deriv(2)?;
    let dm1 = (d - 1) as f64;
    let vals = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y == 0.0 {
                return 0.0;
            }
            (1.0 - y * y) * d2.values[i] + (dm1 / y - 2.0 * y) * d1.values[i] - dm1 / (2.0 * y * y) * (2.0 * phi.values[i]).sin()
        })
        .collect();
    RadialField::new(grid.clone(), vals, Parity::Odd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_seven() {
        let c = structural_constants(7).unwrap();
        assert!((c.gamma - 2.0).abs() < 1e-15 && (c.gamma_tilde - 1.0).abs() < 1e-15);
        assert_eq!(c.hbar, 1);
        assert!((c.delta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_reject_low_dimension() {
        assert!(matches!(structural_constants(6), Err(Error::Domain(_))));
    }

    #[test]
    fn series_coefficient_matches_two_dimensional_harmonic_map() {
        // For d = 2 the profile is 2 arctan(y/2) = y - y^3/12 + ..., which the
        // same matching formula reproduces.
        assert!((series_c1(2) + 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn self_similar_profile_solves_its_equation_symbolically() {
        let d = 7usize;
        let a = ((d - 2) as f64).sqrt();
        let y = 0.5f64;
        let p = self_similar_profile(d, y);
        let p1 = 2.0 * a / (a * a + y * y);
        let p2 = -4.0 * a * y / (a * a + y * y).powi(2);
        let dm1 = (d - 1) as f64;
        let r = (1.0 - y * y) * p2 + (dm1 / y - 2.0 * y) * p1 - dm1 / (2.0 * y * y) * (2.0 * p).sin();
        assert!(r.abs() < 1e-14);
    }
}
