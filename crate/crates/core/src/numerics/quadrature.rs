//! Product quadrature on a radial grid.
//!
//! On each cell the integrand is replaced by the cubic through four
//! neighbouring nodes and integrated exactly against the power weight `y^p`
//! with an eight point Gauss-Legendre rule. Polynomial integrands of degree
//! three or less are exact for every integer power `p <= 11`.

use super::grid::RadialGrid;
use crate::error::{Error, Result};

const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

impl RadialGrid {
    fn cell_stencil(&self, cell: usize) -> usize {
        (cell as isize - 1).clamp(0, self.len() as isize - 4) as usize
    }

    /// Weights of the four stencil nodes for `int_a^b f y^p dy`, `[a, b]` inside `cell`.
    fn cell_weights(&self, cell: usize, a: f64, b: f64, power: f64) -> (usize, [f64; 4]) {
        let j0 = self.cell_stencil(cell);
        let xs = &self.nodes()[j0..j0 + 4];
        let mut w = [0.0; 4];
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (gx, gw) in GL_X.iter().zip(GL_W.iter()) {
            let x = mid + half * gx;
            let weight = gw * half * x.powf(power);
            for k in 0..4 {
                let mut l = 1.0;
                for m in 0..4 {
                    if m != k {
                        l *= (x - xs[m]) / (xs[k] - xs[m]);
                    }
                }
                w[k] += weight * l;
            }
        }
        (j0, w)
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Contract(format!("field has {} values on a grid of {}", f.len(), self.len())));
        }
        Ok(())
    }

    /// `int_a^b f(y) y^power dy` for `y_0 <= a <= b <= y_max`.
    pub fn integrate_power(&self, f: &[f64], power: f64, a: f64, b: f64) -> Result<f64> {
        self.check_len(f)?;
        let (lo, hi) = (self.nodes()[0], self.y_max());
        let slack = 1e-12 * hi.max(1.0);
        if a < lo - slack || b > hi + slack || a > b {
            return Err(Error::Range(format!("interval [{a}, {b}] is outside the grid span [{lo}, {hi}]")));
        }
        let (a, b) = (a.max(lo), b.min(hi));
        if a == b {
            return Ok(0.0);
        }
        let first = self.locate(a).min(self.len() - 2);
        let mut total = 0.0;
        let mut cell = first;
        while cell + 1 < self.len() && self.nodes()[cell] < b {
            let ca = self.nodes()[cell].max(a);
            let cb = self.nodes()[cell + 1].min(b);
            if cb > ca {
                let (j0, w) = self.cell_weights(cell, ca, cb, power);
                total += (0..4).map(|k| w[k] * f[j0 + k]).sum::<f64>();
            }
            cell += 1;
        }
        Ok(total)
    }

    /// `int_a^b f(y) y^{d-1} dy`.
    pub fn integrate_weighted(&self, f: &[f64], a: f64, b: f64) -> Result<f64> {
        self.integrate_power(f, (self.dim() - 1) as f64, a, b)
    }

    /// `int f(y) y^{d-1} dy` over the whole grid.
    pub fn integrate_all(&self, f: &[f64]) -> f64 {
        self.integrate_weighted(f, self.nodes()[0], self.y_max()).unwrap_or(f64::NAN)
    }

    /// Nodal weights `w` with `sum_i w_i f_i = int f(y) y^power dy` over the whole grid.
    pub fn quadrature_weights(&self, power: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        for cell in 0..self.len() - 1 {
            let (j0, cw) = self.cell_weights(cell, self.nodes()[cell], self.nodes()[cell + 1], power);
            for k in 0..4 {
                w[j0 + k] += cw[k];
            }
        }
        w
    }

    /// `F_i = int_{y_from}^{y_i} f(x) x^power dx` at every node `i >= from`.
    /// Entries below `from` are NaN.
    pub fn cumulative_power(&self, f: &[f64], power: f64, from: usize) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let mut out = vec![f64::NAN; self.len()];
        out[from] = 0.0;
        for cell in from..self.len() - 1 {
            let (a, b) = (self.nodes()[cell], self.nodes()[cell + 1]);
            let (j0, w) = self.cell_weights(cell, a, b, power);
            out[cell + 1] = out[cell] + (0..4).map(|k| w[k] * f[j0 + k]).sum::<f64>();
        }
        Ok(out)
    }

    /// Like [`cumulative_power`](Self::cumulative_power) but also filled
    /// backwards from `anchor` down to node `lowest`, so `F_i = -int_{y_i}^{y_anchor}`
    /// there.
    pub fn cumulative_power_anchored(&self, f: &[f64], power: f64, anchor: usize, lowest: usize) -> Result<Vec<f64>> {
        let mut out = self.cumulative_power(f, power, anchor)?;
        for cell in (lowest..anchor).rev() {
            let (a, b) = (self.nodes()[cell], self.nodes()[cell + 1]);
            let (j0, w) = self.cell_weights(cell, a, b, power);
            out[cell] = out[cell + 1] - (0..4).map(|k| w[k] * f[j0 + k]).sum::<f64>();
        }
        Ok(out)
    }

    /// Cubic interpolation of nodal data at `x`.
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let cell = self.locate(x).min(self.len() - 2);
        let j0 = self.cell_stencil(cell);
        let xs = &self.nodes()[j0..j0 + 4];
        (0..4)
            .map(|k| {
                let mut l = 1.0;
                for m in 0..4 {
                    if m != k {
                        l *= (x - xs[m]) / (xs[k] - xs[m]);
                    }
                }
                l * f[j0 + k]
            })
            .sum()
    }
}
