//! Numerical checks of weighted Hardy inequalities and of the coercivity of
//! `A` and `A*`. All integrals carry the measure `y^{d-1} dy`.

use super::{LinearOps, PhiM};
use crate::error::{Error, Result};
use crate::numerics::{Parity, RadialField, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// Constant placed in front of the right side of the weighted variant, whose
/// statement only asserts an inequality up to a constant.
pub const WEIGHTED_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub enum HardyVariant {
    /// `int_{y<=1} |f'|^2 / y^{2i} >= ((d-2-2i)^2/4) int_{y<=1} f^2 / y^{2+2i} - C f(1)^2`.
    Origin { i: usize },
    /// `int_{y>=1} |f'|^2 / y^{2a} >= ((d-2a-2)/2)^2 int_{y>=1} f^2 / y^{2+2a} - C f(1)^2`.
    NonCritical { alpha: f64 },
    /// `alpha = (d-2)/2`, with the logarithmic weight `1 / (y^{2+2a} (1 + log y)^2)` and factor 1/4.
    Critical,
    /// `int |d^j f|^2 / (1 + y^{mu + 2(k-j)}) <= C (int |d^k f|^2 / (1 + y^mu) + int f^2 / (1 + y^{mu+2k}))`.
    Weighted { j: usize, k: usize, mu: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs` (or `rhs - lhs` for the weighted variant); non-negative when the inequality holds.
    pub slack: f64,
    /// Boundary or multiplicative constant used.
    pub constant: f64,
}

fn derivative_k(f: &RadialField, k: usize) -> Result<RadialField> {
    match k {
        0 => Ok(f.clone()),
        1 => f.deriv(1),
        2 => f.deriv(2),
        _ => Err(Error::Contract(format!("derivative order {k} not supported"))),
    }
}

fn sq(f: &RadialField) -> Vec<f64> {
    f.values.iter().map(|v| v * v).collect()
}

fn weighted(vals: &[f64], grid: &RadialGrid, w: impl Fn(f64) -> f64) -> Vec<f64> {
    vals.iter().zip(grid.nodes()).map(|(v, y)| v * w(*y)).collect()
}

/// Evaluate one Hardy inequality for `f`. The boundary constants are the ones
/// produced by completing the square: `(d-2-2i)/2`, `|d-2-2a|/2` and `1/2`.
pub fn hardy_check(f: &RadialField, variant: HardyVariant) -> Result<HardyReport> {
    let grid = f.grid.clone();
    let d = grid.dim() as f64;
    let df2 = sq(&f.deriv(1)?);
    let f2 = sq(f);
    let y_max = grid.y_max();
    let f1 = f.at(1.0);
    match variant {
        HardyVariant::Origin { i } => {
            if i > 2 {
                return Err(Error::Contract(format!("origin variant needs i <= 2, got {i}")));
            }
            let i = i as f64;
            let lhs = grid.integrate_power(&df2, d - 1.0 - 2.0 * i, 0.0, 1.0)?;
            let base = grid.integrate_power(&f2, d - 3.0 - 2.0 * i, 0.0, 1.0)?;
            let a = (d - 2.0 - 2.0 * i) / 2.0;
            let rhs = a * a * base - a * f1 * f1;
            Ok(HardyReport { lhs, rhs, slack: lhs - rhs, constant: a })
        }
        HardyVariant::NonCritical { alpha } => {
            if (alpha - (d - 2.0) / 2.0).abs() < 1e-12 {
                return Err(Error::Contract("alpha = (d-2)/2 is the critical case".into()));
            }
            let lhs = grid.integrate_power(&df2, d - 1.0 - 2.0 * alpha, 1.0, y_max)?;
            let base = grid.integrate_power(&f2, d - 3.0 - 2.0 * alpha, 1.0, y_max)?;
            let b = (d - 2.0 * alpha - 2.0) / 2.0;
            let c = b.abs();
            let rhs = b * b * base - c * f1 * f1;
            Ok(HardyReport { lhs, rhs, slack: lhs - rhs, constant: c })
        }
        HardyVariant::Critical => {
            let lhs = grid.integrate_power(&df2, 1.0, 1.0, y_max)?;
            let logw = weighted(&f2, &grid, |y| if y >= 1.0 { 1.0 / (1.0 + y.ln()).powi(2) } else { 0.0 });
            let base = grid.integrate_power(&logw, -1.0, 1.0, y_max)?;
            let rhs = 0.25 * base - 0.5 * f1 * f1;
            Ok(HardyReport { lhs, rhs, slack: lhs - rhs, constant: 0.5 })
        }
        HardyVariant::Weighted { j, k, mu } => {
            if j > k || k > 2 {
                return Err(Error::Contract(format!("weighted variant needs j <= k <= 2, got j = {j}, k = {k}")));
            }
            let dj = sq(&derivative_k(f, j)?);
            let dk = sq(&derivative_k(f, k)?);
            let shift = 2.0 * (k - j) as f64;
            let lhs = grid.integrate_all(&weighted(&dj, &grid, |y| 1.0 / (1.0 + y.powf(mu + shift))));
            let r1 = grid.integrate_all(&weighted(&dk, &grid, |y| 1.0 / (1.0 + y.powf(mu))));
            let r2 = grid.integrate_all(&weighted(&f2, &grid, |y| 1.0 / (1.0 + y.powf(mu + 2.0 * k as f64))));
            let rhs = WEIGHTED_CONSTANT * (r1 + r2);
            Ok(HardyReport { lhs, rhs, slack: rhs - lhs, constant: WEIGHTED_CONSTANT })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoercivityOp {
    A,
    AStar,
}

/// `int |op f|^2 / (y^{2i} (1 + y^{2p}))` divided by
/// `int |f'|^2 / (y^{2i} (1 + y^{2p})) + int f^2 / (y^{2i+2} (1 + y^{2p}))`.
///
/// For `op = A` with `2i + 2p > d - 2 gamma - 2`, `f` must be orthogonal to
/// `Phi_M` (relative tolerance `1e-8`); otherwise a contract error is returned.
pub fn coercivity_check(ops: &LinearOps, phi: Option<&PhiM>, f: &RadialField, op: CoercivityOp, i: usize, p: f64) -> Result<f64> {
    let d = ops.gs.d as f64;
    let gamma = ops.gs.consts.gamma;
    if op == CoercivityOp::A && 2.0 * i as f64 + 2.0 * p > d - 2.0 * gamma - 2.0 {
        let phi = phi.ok_or_else(|| Error::Contract("orthogonality to Phi_M is required but no Phi_M was given".into()))?;
        let ip = super::inner_scalar(f, &phi.field.first);
        let scale = super::inner_scalar(f, f).sqrt() * super::inner_scalar(&phi.field.first, &phi.field.first).sqrt();
        if !(ip.abs() <= 1e-8 * scale) {
            return Err(Error::Contract(format!("f is not orthogonal to Phi_M: <f, Phi_M> = {ip:e} (scale {scale:e})")));
        }
    }
    let g = match op {
        CoercivityOp::A => ops.apply_a(f)?,
        CoercivityOp::AStar => ops.apply_a_star(f)?,
    };
    let grid = &f.grid;
    let y_max = grid.y_max();
    let w = |y: f64| 1.0 / (1.0 + y.powf(2.0 * p));
    let pw = d - 1.0 - 2.0 * i as f64;
    let num = grid.integrate_power(&weighted(&sq(&g), grid, w), pw, 0.0, y_max)?;
    let den1 = grid.integrate_power(&weighted(&sq(&f.deriv(1)?), grid, w), pw, 0.0, y_max)?;
    let den2 = grid.integrate_power(&weighted(&sq(f), grid, w), pw - 2.0, 0.0, y_max)?;
    let den = den1 + den2;
    if !(den > 0.0) {
        return Err(Error::Numerical("coercivity denominator vanishes".into()));
    }
    Ok(num / den)
}

/// Reproducible ensemble of smooth, rapidly decaying test functions
/// `y * sum_j a_j exp(-((y - c_j) / w_j)^2)`, all vanishing at the origin.
pub fn random_test_functions(grid: &Arc<RadialGrid>, count: usize, seed: u64) -> Vec<RadialField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0), rng.gen_range(0.3..2.0)))
                .collect();
            RadialField::from_fn(grid, Parity::None, |y| {
                y * terms.iter().map(|(a, c, w)| a * (-((y - c) / w).powi(2)).exp()).sum::<f64>()
            })
        })
        .collect()
}
