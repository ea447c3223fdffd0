//! Least squares line fits.

use crate::error::{Error, Result};

/// Weighted least squares line `y = a + b x`. Returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Numerical(format!("line fit needs at least two points, got {}", x.len())));
    }
    let wt = |i: usize| w.map_or(1.0, |w| w[i]);
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sw += wt(i);
        sx += wt(i) * x[i];
        sy += wt(i) * y[i];
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..x.len() {
        sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
        sxy += wt(i) * (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 || !sxx.is_finite() || !sxy.is_finite() {
        return Err(Error::Numerical("degenerate abscissae in line fit".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Slope and intercept of `log|f|` against `log x` for samples with `x` in `[lo, hi]`.
/// Returns `(log_prefactor, slope)`.
pub fn loglog_fit(x: &[f64], f: &[f64], lo: f64, hi: f64) -> Result<(f64, f64)> {
    let (lx, lf): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(f)
        .filter(|(x, f)| **x >= lo && **x <= hi && f.abs() > 0.0 && f.is_finite())
        .map(|(x, f)| (x.ln(), f.abs().ln()))
        .unzip();
    if lx.len() < 2 {
        return Err(Error::Numerical(format!("no usable samples for log-log fit on [{lo}, {hi}]")));
    }
    // Equal weight per unit of log x so that dense uniform blocks do not dominate.
    let w: Vec<f64> = (0..lx.len())
        .map(|i| {
            let left = if i > 0 { lx[i] - lx[i - 1] } else { 0.0 };
            let right = if i + 1 < lx.len() { lx[i + 1] - lx[i] } else { 0.0 };
            0.5 * (left + right) + 1e-300
        })
        .collect();
    linear_fit(&lx, &lf, Some(&w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let x: Vec<f64> = (1..100).map(|i| i as f64).collect();
        let f: Vec<f64> = x.iter().map(|x| 3.0 * x.powf(-1.7)).collect();
        let (a, b) = loglog_fit(&x, &f, 1.0, 100.0).unwrap();
        assert!((b + 1.7).abs() < 1e-12);
        assert!((a - 3f64.ln()).abs() < 1e-12);
    }
}
