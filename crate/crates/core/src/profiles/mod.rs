//! Approximate blowup profiles.
//!
//! `T_k` generate the generalized kernel of `H` (`H T_{k+1} = -T_k`,
//! `T_0 = (Lambda Q, 0)`). The corrections `S_k`, polynomial in `b`, remove the
//! slowest decaying part of the error order by order, and
//! `Q_b = Q + sum b_k T_k + sum S_k` solves the renormalized flow up to a
//! residual `Psi_b` of order `b_1^{L+3}` near the origin.
//!
//! The flow is `w_s - (lambda_s / lambda) Lambda w = F(w)` with
//! `F(w) = (w_2, Delta w_1 - (d-1)/(2y^2) sin 2w_1)`, so that
//! `F(Q + q) = -H q - (0, N(q_1))` and
//! `N(q) = (d-1)/(2y^2) [sin(2Q + 2q) - sin 2Q - 2 cos(2Q) q]`.

pub mod poly;
mod residual;

pub use poly::{Exponents, Poly};
pub use residual::{assemble_qb, residual_from_expansion, residual_psib, PsiReport, LOCAL_RADII};

use crate::error::{Error, Result};
use crate::linop::{relative_sup, LinearOps, RadialPair};
use crate::numerics::fit::{linear_fit, loglog_fit};
use crate::numerics::{Parity, RadialField};
use serde::Serialize;
use std::sync::Arc;

/// Profile polynomial in `b` with pair coefficients.
pub type HomogeneousProfile = Poly<RadialPair>;

/// Default `eta` in `B_1 = B_0^{1 + eta}`.
pub const DEFAULT_ETA: f64 = 0.05;

/// `(p1, p2, iota)`: origin order, growth order and occupied component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeTag {
    pub p1: usize,
    pub p2: f64,
    pub iota: u8,
}

impl DegreeTag {
    pub fn new(p1: usize, p2: f64, iota: u8) -> Self {
        DegreeTag { p1, p2, iota }
    }
}

/// `Lambda (f1, f2) = (y f1', f2 + y f2')`.
pub fn lambda_vec(p: &RadialPair) -> Result<RadialPair> {
    Ok(RadialPair { first: p.first.lambda()?, second: p.second.add(&p.second.lambda()?) })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    /// The component that should vanish does.
    pub position_ok: bool,
    /// Fitted log-log slope on `[0.01, 0.1]` and the required lower bound.
    pub origin_slope: f64,
    pub origin_required: f64,
    /// Fitted log-log slope in the far field and the allowed upper bound.
    pub far_slope: f64,
    pub far_allowed: f64,
    /// Largest deviation of `log |f|` from the far field fit.
    pub far_fit_deviation: f64,
    /// The far field keeps one sign.
    pub far_sign_ok: bool,
}

const ORIGIN_WINDOW: (f64, f64) = (0.01, 0.1);
const ORIGIN_SLACK: f64 = 0.15;
const FAR_SLACK: f64 = 0.1;
const FAR_FIT_DEVIATION: f64 = 0.5;

/// Check a pair against the admissibility conditions of the given degree:
/// the other component vanishes, the occupied one is odd with Taylor
/// expansion starting at `y^{m+1}` (`m` the least even integer `>= p1 - iota`),
/// and it grows at most like `y^{p2 - gamma - iota}` on `[y_max/20, y_max/2]`.
pub fn admissibility_check(p: &RadialPair, deg: DegreeTag, gamma: f64) -> Result<AdmissibilityReport> {
    let (f, other) = if deg.iota == 0 { (&p.first, &p.second) } else { (&p.second, &p.first) };
    let grid = &f.grid;
    let scale = f.sup_on(0.0, grid.y_max());
    let position_ok = other.sup_on(0.0, grid.y_max()) <= 1e-12 * scale.max(f64::MIN_POSITIVE);
    if scale == 0.0 {
        // nothing in the occupied component
        let nan = f64::NAN;
        return Ok(AdmissibilityReport {
            pass: false,
            position_ok,
            origin_slope: nan,
            origin_required: nan,
            far_slope: nan,
            far_allowed: nan,
            far_fit_deviation: nan,
            far_sign_ok: false,
        });
    }
    let lead = (deg.p1 as i64 - deg.iota as i64).max(0) as usize;
    let m = lead + lead % 2;
    let origin_required = (m + 1) as f64 - ORIGIN_SLACK;
    let (_, origin_slope) = loglog_fit(grid.nodes(), &f.values, ORIGIN_WINDOW.0, ORIGIN_WINDOW.1)?;
    let (lo, hi) = (grid.y_max() / 20.0, grid.y_max() / 2.0);
    let window: Vec<(f64, f64)> = grid.nodes().iter().zip(&f.values).filter(|(y, _)| **y >= lo && **y <= hi).map(|(y, v)| (*y, *v)).collect();
    let far_sign_ok = window.iter().all(|(_, v)| *v > 0.0) || window.iter().all(|(_, v)| *v < 0.0);
    let xs: Vec<f64> = window.iter().map(|(y, _)| y.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|(_, v)| v.abs().max(f64::MIN_POSITIVE).ln()).collect();
    let (c, far_slope) = linear_fit(&xs, &ys, None)?;
    let far_fit_deviation = xs.iter().zip(&ys).map(|(x, y)| (y - c - far_slope * x).abs()).fold(0.0, f64::max);
    let far_allowed = deg.p2 - gamma - deg.iota as f64 + FAR_SLACK;
    let pass = position_ok
        && origin_slope >= origin_required
        && far_sign_ok
        && far_fit_deviation <= FAR_FIT_DEVIATION
        && far_slope <= far_allowed;
    Ok(AdmissibilityReport { pass, position_ok, origin_slope, origin_required, far_slope, far_allowed, far_fit_deviation, far_sign_ok })
}

/// `T_k`, `phi_k` and the corrections `S_k` for one choice of `L`.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub d: usize,
    pub l: usize,
    pub ell: usize,
    pub ops: Arc<LinearOps>,
    /// `T_0..=T_{L+2}`.
    pub t: Vec<RadialPair>,
    /// `phi_0..`, with `T_{2i} = (phi_i, 0)` and `T_{2i+1} = (0, phi_i)`.
    pub phi: Vec<RadialField>,
    /// `S_k` at index `k`; indices 0 and 1 hold empty polynomials.
    pub s: Vec<HomogeneousProfile>,
    pub eta: f64,
}

/// Build `T_0..=T_{L+2}` from the chain `phi_{k+1} = -L^{-1} phi_k`.
pub fn make_t_profiles(ops: Arc<LinearOps>, l: usize, ell: usize) -> Result<ProfileSet> {
    if l % 2 == 0 || l > 7 {
        return Err(Error::Contract(format!("L must be odd and at most 7, got {l}")));
    }
    if ell == 0 || ell > l {
        return Err(Error::Contract(format!("ell must satisfy 1 <= ell <= L, got ell = {ell}, L = {l}")));
    }
    let phi = ops.phi_chain((l + 2) / 2)?;
    let t = (0..=l + 2)
        .map(|k| {
            let f = phi[k / 2].clone();
            if k % 2 == 0 {
                RadialPair::first_only(f)
            } else {
                RadialPair::second_only(f)
            }
        })
        .collect();
    let s = (0..=l + 2).map(|_| Poly::zero(l)).collect();
    Ok(ProfileSet { d: ops.gs.d, l, ell, ops, t, phi, s, eta: DEFAULT_ETA })
}

impl ProfileSet {
    pub fn gamma(&self) -> f64 {
        self.ops.gs.consts.gamma
    }

    /// `sup |H T_{k+1} + T_k| / sup |T_k|` on `[0.1, y_max/4]`, using the
    /// pointwise size of the terms of `L` as scale where `L` is applied.
    pub fn recursion_residual(&self, k: usize) -> Result<f64> {
        let (a, b) = (0.1, self.ops.gs.grid.y_max() / 4.0);
        let next = &self.t[k + 1];
        let res = self.ops.apply_h(next)?.add(&self.t[k]);
        if k % 2 == 0 {
            // second component: L phi + phi_prev
            let scale = self.ops.l_term_scale(&next.second)?;
            Ok(relative_sup(&res.second, &scale, a, b).max(res.first.sup_on(a, b)))
        } else {
            let scale = self.ops.l_term_scale(&next.first)?;
            Ok(relative_sup(&res.second, &scale, a, b).max(res.first.sup_on(a, b) / self.t[k].second.sup_on(a, b)))
        }
    }

    /// `B_0 = 1 / b_1` and `B_1 = B_0^{1 + eta}`.
    pub fn radii(&self, b1: f64) -> (f64, f64) {
        let b0 = 1.0 / b1;
        (b0, b0.powf(1.0 + self.eta))
    }

    /// `E_k = b_1 b_k (Lambda T_k - (k - gamma) T_k) + b_1 Lambda S_k
    ///  - sum_{j <= L} ((j - gamma) b_1 b_j - b_{j+1}) dS_k/db_j`, the `T` term only for `k <= L`.
    pub fn e_term(&self, k: usize) -> Result<HomogeneousProfile> {
        let l = self.l;
        let gamma = self.gamma();
        let mut out = Poly::zero(l);
        if (1..=l).contains(&k) {
            let tk = &self.t[k];
            let c = lambda_vec(tk)?.axpy(-(k as f64 - gamma), tk);
            let mut e = poly::unit(l, 1);
            e[k - 1] += 1;
            out.add_term(e, 1.0, &c);
        }
        if k < self.s.len() {
            let sk = &self.s[k];
            out.add_poly(1.0, &sk.try_map(lambda_vec)?.shift(&poly::unit(l, 1), 1.0));
            for j in 1..=l {
                let ds = sk.partial(j);
                if ds.terms.is_empty() {
                    continue;
                }
                let mut e = poly::unit(l, 1);
                e[j - 1] += 1;
                out.add_poly(-(j as f64 - gamma), &ds.shift(&e, 1.0));
                if j < l {
                    out.add_poly(1.0, &ds.shift(&poly::unit(l, j + 1), 1.0));
                }
            }
        }
        Ok(out)
    }

    /// First component of the correction `sum b_k T_k + sum S_m` restricted to
    /// `m < below`, as a polynomial. Only even indices contribute.
    fn theta_first(&self, below: usize) -> Poly<RadialField> {
        let l = self.l;
        let mut th = Poly::zero(l);
        for k in (2..=l).step_by(2) {
            th.add_term(poly::unit(l, k), 1.0, &self.t[k].first);
        }
        for m in (2..below.min(self.s.len())).step_by(2) {
            th.add_poly(1.0, &self.s[m].map(|p| p.first.clone()));
        }
        th
    }

    /// `f^{(j)}(Q) / j!` for `f = sin 2x`.
    pub(crate) fn taylor_factor(&self, j: usize) -> RadialField {
        let gs = &self.ops.gs;
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        let c = 2f64.powi(j as i32) / fact;
        let (sign, use_sin) = match j % 4 {
            0 => (1.0, true),
            1 => (1.0, false),
            2 => (-1.0, true),
            _ => (-1.0, false),
        };
        let parity = if use_sin { Parity::Odd } else { Parity::Even };
        RadialField::new(
            gs.grid.clone(),
            gs.q.values.iter().map(|q| sign * c * if use_sin { (2.0 * q).sin() } else { (2.0 * q).cos() }).collect(),
            parity,
        )
        .expect("same grid")
    }

    /// `(d-1)/(2y^2) P_k`: the weight-`k` part of the Taylor expansion of the
    /// nonlinearity in the first component of the correction.
    pub fn p_term(&self, k: usize) -> Result<Poly<RadialField>> {
        let l = self.l;
        let th = self.theta_first(k);
        let mut out = Poly::zero(l);
        let mut power = th.clone();
        for j in 2..=k {
            power = power.mul_truncated(&th, k);
            if power.terms.is_empty() {
                break;
            }
            let part = power.of_weight(k);
            let fj = self.taylor_factor(j);
            out.add_poly(1.0, &part.map(|c| fj.mul(c)));
        }
        let dm1 = (self.d - 1) as f64;
        out.try_map(|c| Ok::<_, Error>(c.div_y()?.div_y()?.scale(0.5 * dm1)))
    }

    /// Build `S_2..=S_{L+2}` from `S_k = -H^{-1} F_k`,
    /// `F_k = E_{k-1} + (0, (d-1)/(2y^2) P_k)`.
    pub fn build_s_profiles(mut self) -> Result<ProfileSet> {
        let l = self.l;
        for k in 2..=l + 2 {
            let mut f = self.e_term(k - 1)?;
            let p = self.p_term(k)?;
            for (e, c) in &p.terms {
                f.add_term(e.clone(), 1.0, &RadialPair::second_only(c.clone()));
            }
            for e in f.terms.keys() {
                if poly::weight(e) != k {
                    return Err(Error::Consistency(format!("F_{k} contains a monomial {e:?} of weight {}", poly::weight(e))));
                }
            }
            let ops = self.ops.clone();
            let sk = f.try_map(|p| -> Result<RadialPair> {
                Ok(RadialPair { first: ops.invert_l(&p.second)?.scale(-1.0), second: p.first.clone() })
            })?;
            for m in k..=l {
                if sk.depends_on(m) {
                    return Err(Error::Consistency(format!("S_{k} depends on b_{m}")));
                }
            }
            self.s[k] = sk;
        }
        Ok(self)
    }

    /// Copy with all `S_k` removed, used as an ablation control.
    pub fn without_s(&self) -> ProfileSet {
        let mut out = self.clone();
        for s in out.s.iter_mut() {
            *s = Poly::zero(self.l);
        }
        out
    }

    /// Far field slope of `phi_k` on `[lo, hi]`.
    pub fn phi_slope(&self, k: usize, lo: f64, hi: f64) -> Result<f64> {
        Ok(loglog_fit(self.ops.gs.grid.nodes(), &self.phi[k].values, lo, hi)?.1)
    }
}
