use super::{lambda_vec, ProfileSet};
use crate::error::{Error, Result};
use crate::linop::RadialPair;
use crate::numerics::cutoff::{chi, chi_prime};
use crate::numerics::{Parity, RadialField};

/// Radii `M` of the local residual norms.
pub const LOCAL_RADII: [f64; 3] = [5.0, 10.0, 20.0];

/// Constant in the a priori bound `|b_k| <= C b_1^k`.
const APRIORI_CONSTANT: f64 = 10.0;

fn check_b(ps: &ProfileSet, b: &[f64]) -> Result<()> {
    if b.len() != ps.l {
        return Err(Error::Contract(format!("expected {} parameters, got {}", ps.l, b.len())));
    }
    let b1 = b[0];
    if !(b1 > 0.0 && b1 <= 0.1) {
        return Err(Error::Contract(format!("b_1 = {b1} outside (0, 0.1]")));
    }
    for (k, bk) in b.iter().enumerate().skip(1) {
        let bound = APRIORI_CONSTANT * b1.powi(k as i32 + 1);
        if bk.abs() > bound {
            return Err(Error::Contract(format!("|b_{}| = {} exceeds {bound:e}", k + 1, bk.abs())));
        }
    }
    let (_, b1_radius) = ps.radii(b1);
    if 2.0 * b1_radius > ps.ops.gs.grid.y_max() {
        return Err(Error::Range(format!("localization radius 2 B_1 = {} exceeds the grid", 2.0 * b1_radius)));
    }
    Ok(())
}

/// `sum_{k <= L} b_k T_k + sum_k S_k(b)`.
fn correction(ps: &ProfileSet, b: &[f64]) -> RadialPair {
    let mut th = ps.t[1].scale(b[0]);
    for k in 2..=ps.l {
        th = th.axpy(b[k - 1], &ps.t[k]);
    }
    for s in &ps.s {
        if let Some(v) = s.evaluate(b) {
            th = th.add(&v);
        }
    }
    th
}

fn cutoff_field(ps: &ProfileSet, radius: f64) -> RadialField {
    RadialField::from_fn(&ps.ops.gs.grid, Parity::Even, |y| chi(y / radius))
}

fn mul_pair(p: &RadialPair, f: &RadialField) -> RadialPair {
    RadialPair { first: p.first.mul(f), second: p.second.mul(f) }
}

/// `Q_b = (Q, 0) + sum b_k T_k + sum S_k`, optionally with the correction
/// multiplied by `chi_{B_1}`.
pub fn assemble_qb(ps: &ProfileSet, b: &[f64], localize: bool) -> Result<RadialPair> {
    check_b(ps, b)?;
    let mut th = correction(ps, b);
    if localize {
        let (_, b1_radius) = ps.radii(b[0]);
        th = mul_pair(&th, &cutoff_field(ps, b1_radius));
    }
    let gs = &ps.ops.gs;
    Ok(RadialPair { first: gs.q.add(&th.first), second: th.second })
}

/// `N(theta) = (d-1)/(2y^2) [sin(2Q + 2 theta) - sin 2Q - 2 cos(2Q) theta]`, with
/// the difference of sines written as `2 cos(2Q + theta) sin theta`.
fn nonlinear(ps: &ProfileSet, theta: &RadialField) -> Result<RadialField> {
    let gs = &ps.ops.gs;
    let dm1 = (ps.d - 1) as f64;
    let vals = gs
        .q
        .values
        .iter()
        .zip(&theta.values)
        .map(|(q, t)| 2.0 * (2.0 * q + t).cos() * t.sin() - 2.0 * (2.0 * q).cos() * t)
        .collect();
    let bracket = RadialField::new(gs.grid.clone(), vals, Parity::Odd)?;
    Ok(bracket.div_y()?.div_y()?.scale(0.5 * dm1))
}

#[derive(Debug, Clone)]
pub struct PsiReport {
    pub psi: RadialPair,
    /// `(M, int_{y <= M} |Psi_b|^2 y^{d-1} dy)` for `M` in [`LOCAL_RADII`].
    pub local_sq_norms: Vec<(f64, f64)>,
}

fn local_norms(psi: &RadialPair) -> Result<Vec<(f64, f64)>> {
    let grid = &psi.first.grid;
    let sq: Vec<f64> = psi.first.values.iter().zip(&psi.second.values).map(|(a, b)| a * a + b * b).collect();
    LOCAL_RADII.iter().map(|&m| Ok((m, grid.integrate_weighted(&sq, 0.0, m)?))).collect()
}

/// Residual of the localized profile:
/// `Psi_b = d_s Q_b + lam_ratio Lambda Q_b - F(Q_b) - chi_{B_1} Mod`,
/// where `lam_ratio = -lambda_s / lambda`, `b_dot = (b_k)_s` and
/// `Mod = sum_k ((b_k)_s + (k - gamma) b_1 b_k - b_{k+1}) (T_k + sum_{j > k} dS_j/db_k)`.
///
/// Every term is evaluated on the grid: `d_s` through the chain rule in `b`
/// and in the cutoff radius, `L` by finite differences and the nonlinearity
/// pointwise.
pub fn residual_psib(ps: &ProfileSet, b: &[f64], b_dot: &[f64], lam_ratio: f64) -> Result<PsiReport> {
    check_b(ps, b)?;
    if b_dot.len() != ps.l {
        return Err(Error::Contract(format!("expected {} derivatives, got {}", ps.l, b_dot.len())));
    }
    let l = ps.l;
    let gamma = ps.gamma();
    let gs = &ps.ops.gs;
    let b1 = b[0];
    let (_, radius) = ps.radii(b1);
    let chi_f = cutoff_field(ps, radius);
    // d_s chi(y / B_1) = chi'(y/B_1) (y/B_1) (1 + eta) (b_1)_s / b_1
    let rate = (1.0 + ps.eta) * b_dot[0] / b1;
    let dchi = RadialField::from_fn(&gs.grid, Parity::Even, |y| chi_prime(y / radius) * (y / radius) * rate);

    let theta = correction(ps, b);
    let mut theta_dot = ps.t[1].scale(b_dot[0]);
    for k in 2..=l {
        theta_dot = theta_dot.axpy(b_dot[k - 1], &ps.t[k]);
    }
    for s in &ps.s {
        for j in 1..=l {
            if let Some(v) = s.partial(j).evaluate(b) {
                theta_dot = theta_dot.axpy(b_dot[j - 1], &v);
            }
        }
    }
    let theta_loc = mul_pair(&theta, &chi_f);
    let ds = mul_pair(&theta, &dchi).add(&mul_pair(&theta_dot, &chi_f));
    let lam_q_vec = RadialPair::first_only(gs.lam_q.clone());
    let scaling = lam_q_vec.add(&lambda_vec(&theta_loc)?).scale(lam_ratio);
    let h = ps.ops.apply_h(&theta_loc)?;
    let nl = RadialPair::second_only(nonlinear(ps, &theta_loc.first)?);
    let lhs = ds.add(&scaling).add(&h).add(&nl);

    let mut modulation = RadialPair::first_only(RadialField::zeros(&gs.grid, Parity::Odd));
    for k in 1..=l {
        let next = if k < l { b[k] } else { 0.0 };
        let mk = b_dot[k - 1] + (k as f64 - gamma) * b1 * b[k - 1] - next;
        let mut dir = ps.t[k].clone();
        for j in k + 1..ps.s.len() {
            if let Some(v) = ps.s[j].partial(k).evaluate(b) {
                dir = dir.add(&v);
            }
        }
        modulation = modulation.axpy(mk, &dir);
    }
    let psi = lhs.sub(&mul_pair(&modulation, &chi_f));
    let local_sq_norms = local_norms(&psi)?;
    Ok(PsiReport { psi, local_sq_norms })
}

/// Residual of the unlocalized profile from its expansion,
/// `E_{L+2} + (0, N(Theta_1) - (d-1)/(2y^2) sum_{k <= L+2} P_k)`, valid when
/// `b` solves the modulation equations (`Mod = 0`) and `-lambda_s/lambda = b_1`.
pub fn residual_from_expansion(ps: &ProfileSet, b: &[f64]) -> Result<PsiReport> {
    check_b(ps, b)?;
    let l = ps.l;
    let gs = &ps.ops.gs;
    let mut psi = ps.e_term(l + 2)?.evaluate(b).unwrap_or_else(|| RadialPair::first_only(RadialField::zeros(&gs.grid, Parity::Odd)));
    let theta = correction(ps, b);
    let mut nl = nonlinear(ps, &theta.first)?;
    for k in 2..=l + 2 {
        if let Some(p) = ps.p_term(k)?.evaluate(b) {
            nl = nl.sub(&p);
        }
    }
    psi.second = psi.second.add(&nl);
    let local_sq_norms = local_norms(&psi)?;
    Ok(PsiReport { psi, local_sq_norms })
}
