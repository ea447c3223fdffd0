use super::{LinearOps, RadialPair};
use crate::error::{Error, Result};
use crate::numerics::cutoff::chi;
use crate::numerics::Parity;

/// Localized direction `Phi_M = sum_k c_k H*^k (chi_M Lambda Q, 0)` chosen so
/// that `<H^i T_k, Phi_M> = (-1)^k delta_{ik} <chi_M Lambda Q, Lambda Q>`.
#[derive(Debug, Clone)]
pub struct PhiM {
    pub m: f64,
    pub l: usize,
    pub coeffs: Vec<f64>,
    pub field: RadialPair,
    /// `<chi_M Lambda Q, Lambda Q>`.
    pub norm: f64,
    /// `H*^k Phi_M` for `k = 0..=L`, the modulation directions.
    pub directions: Vec<RadialPair>,
}

impl PhiM {
    /// `<H^i T_k, Phi_M> / norm` for `0 <= i, k <= L`.
    pub fn duality_matrix(&self, ops: &LinearOps, t: &[RadialPair]) -> Result<Vec<Vec<f64>>> {
        (0..=self.l)
            .map(|i| (0..=self.l).map(|k| Ok(ops.inner(&ops.apply_h_power(&t[k], i)?, &self.field) / self.norm)).collect())
            .collect()
    }
}

/// Build `Phi_M` from the profiles `T_0..=T_L` (`T_0 = (Lambda Q, 0)`).
pub fn build_phi_m(ops: &LinearOps, t: &[RadialPair], m: f64, l: usize) -> Result<PhiM> {
    if m < 10.0 {
        return Err(Error::Contract(format!("M must be at least 10, got {m}")));
    }
    if l % 2 == 0 || l > 7 || t.len() < l + 1 {
        return Err(Error::Contract(format!("L must be odd and at most 7 with T_0..=T_L supplied (L = {l}, {} profiles)", t.len())));
    }
    if 2.0 * m > ops.gs.grid.y_max() {
        return Err(Error::Range(format!("cutoff support 2M = {} exceeds the grid", 2.0 * m)));
    }
    let lam_q = &ops.gs.lam_q;
    let chi_lam = lam_q.mul_fn(Parity::Odd, |y| chi(y / m));
    let base = RadialPair::first_only(chi_lam.clone());
    let norm = super::inner_scalar(&chi_lam, lam_q);
    let mut basis = vec![base];
    for k in 1..=l {
        let next = ops.apply_h_star(&basis[k - 1])?;
        basis.push(next);
    }
    // The recursion divides by <H*^k base, T_k>, which equals (-1)^k norm in
    // exact arithmetic. Using the quadratured value keeps <Phi_M, T_k> = 0 to
    // rounding even where the discrete adjoint identity is only approximate.
    let mut coeffs = vec![1.0];
    for k in 1..=l {
        let sum: f64 = (0..k).map(|j| coeffs[j] * ops.inner(&basis[j], &t[k])).sum();
        let pivot = ops.inner(&basis[k], &t[k]);
        let expected = if k % 2 == 0 { norm } else { -norm };
        if !((pivot - expected).abs() <= 1e-2 * norm) {
            return Err(Error::Numerical(format!("<H*^{k} chi_M Lambda Q, T_{k}> = {pivot:e} deviates from {expected:e}")));
        }
        coeffs.push(-sum / pivot);
    }
    let mut field = basis[0].scale(coeffs[0]);
    for k in 1..=l {
        field = field.axpy(coeffs[k], &basis[k]);
    }
    let mut directions = vec![field.clone()];
    for k in 1..=l {
        let next = ops.apply_h_star(&directions[k - 1])?;
        directions.push(next);
    }
    Ok(PhiM { m, l, coeffs, field, norm, directions })
}
