//! Radial grids and the five point finite difference stencils attached to them.

use crate::error::{Error, Result};
use serde::Serialize;

/// Node placement policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Spacing {
    /// Equal spacing on the whole range.
    Uniform,
    /// Equal spacing up to a switch point, then spacing growing by a fixed ratio.
    Geometric,
}

/// Reflection symmetry of a radial function about `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Odd,
    Even,
    None,
}

impl Parity {
    pub fn sign(self) -> Option<f64> {
        match self {
            Parity::Odd => Some(-1.0),
            Parity::Even => Some(1.0),
            Parity::None => None,
        }
    }

    /// Parity of a product.
    pub fn times(self, other: Parity) -> Parity {
        match (self.sign(), other.sign()) {
            (Some(a), Some(b)) if a * b > 0.0 => Parity::Even,
            (Some(_), Some(_)) => Parity::Odd,
            _ => Parity::None,
        }
    }

    /// Parity after one derivative or one division by `y`.
    pub fn flip(self) -> Parity {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
            Parity::None => Parity::None,
        }
    }
}

#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    w1: [f64; 5],
    /// Second derivative weights; six one-sided nodes near the ends keep fourth order.
    start2: usize,
    w2: [f64; 6],
}

/// Ordered radial nodes `0 <= y_0 < ... < y_{N-1}` with dimension `d`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    dim: usize,
    spacing: Spacing,
    /// Number of leading nodes on the uniform block.
    n_uniform: usize,
    h0: f64,
    stencils: Vec<Stencil>,
}

/// Finite difference weights for derivatives `0..=m` at `x0` on the nodes `xs`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

const CENTERED_D1: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const CENTERED_D2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];

impl RadialGrid {
    fn check_dim(dim: usize) -> Result<()> {
        if dim < 7 {
            return Err(Error::Domain(format!("dimension must be at least 7, got {dim}")));
        }
        Ok(())
    }

    /// `n` equally spaced nodes on `[0, y_max]`.
    pub fn uniform(dim: usize, y_max: f64, n: usize) -> Result<Self> {
        Self::check_dim(dim)?;
        if n < 6 || !(y_max > 0.0) {
            return Err(Error::Range(format!("uniform grid needs n >= 5 and y_max > 0 (n = {n}, y_max = {y_max})")));
        }
        let h = y_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| if i + 1 == n { y_max } else { i as f64 * h }).collect();
        Ok(Self::build(nodes, dim, Spacing::Uniform, n, h))
    }

    /// Uniform spacing `h0` on `[0, y_switch]`, then spacing multiplied by `ratio`
    /// at every node until `y_max`.
    pub fn geometric(dim: usize, y_max: f64, h0: f64, y_switch: f64, ratio: f64) -> Result<Self> {
        Self::check_dim(dim)?;
        if !(ratio > 1.0 && ratio <= 1.01) {
            return Err(Error::Range(format!("spacing ratio must lie in (1, 1.01], got {ratio}")));
        }
        if !(h0 > 0.0 && y_switch >= 4.0 * h0 && y_max > y_switch) {
            return Err(Error::Range("geometric grid needs 0 < 4 h0 <= y_switch < y_max".into()));
        }
        let n_u = (y_switch / h0).round() as usize;
        let mut nodes: Vec<f64> = (0..=n_u).map(|i| i as f64 * h0).collect();
        let mut h = h0;
        let mut y = *nodes.last().unwrap();
        loop {
            h *= ratio;
            if y + h >= y_max - 0.3 * h {
                nodes.push(y_max);
                break;
            }
            y += h;
            nodes.push(y);
        }
        Ok(Self::build(nodes, dim, Spacing::Geometric, n_u + 1, h0))
    }

    /// Default production grid: `h0 = 1e-3` up to `y = 10`, ratio `1.005` beyond.
    pub fn standard(dim: usize, y_max: f64) -> Result<Self> {
        Self::geometric(dim, y_max, 1e-3, 10.0, 1.005)
    }

    fn build(nodes: Vec<f64>, dim: usize, spacing: Spacing, n_uniform: usize, h0: f64) -> Self {
        let n = nodes.len();
        let stencils = (0..n)
            .map(|i| {
                let start = i.saturating_sub(2).min(n - 5);
                let c = fornberg(nodes[i], &nodes[start..start + 5], 1);
                let mut w1 = [0.0; 5];
                w1.copy_from_slice(&c[1]);
                let interior = i >= 2 && i + 2 < n;
                let (start2, width) = if interior { (start, 5) } else { (i.saturating_sub(3).min(n - 6), 6) };
                let c2 = fornberg(nodes[i], &nodes[start2..start2 + width], 2);
                let mut w2 = [0.0; 6];
                w2[..width].copy_from_slice(&c2[2]);
                Stencil { start, w1, start2, w2 }
            })
            .collect();
        RadialGrid { nodes, dim, spacing, n_uniform, h0, stencils }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn spacing(&self) -> Spacing {
        self.spacing
    }
    pub fn h0(&self) -> f64 {
        self.h0
    }
    pub fn y_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Index of the last node with `y <= x` (clamped to the grid).
    pub fn locate(&self, x: f64) -> usize {
        match self.nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.locate(x);
        if i + 1 < self.len() && (self.nodes[i + 1] - x).abs() < (x - self.nodes[i]).abs() {
            i + 1
        } else {
            i
        }
    }

    fn ghost_ok(&self) -> bool {
        self.nodes[0] == 0.0 && self.n_uniform >= 5
    }

    /// Derivative of order 1 or 2. Centered fourth order in the interior and
    /// one-sided at the ends, unless a parity is given, in which case ghost
    /// values mirrored through `y = 0` keep the stencil centered there.
    pub fn derivative(&self, f: &[f64], order: usize, parity: Parity) -> Result<Vec<f64>> {
        if f.len() != self.len() {
            return Err(Error::Contract(format!("field has {} values on a grid of {}", f.len(), self.len())));
        }
        if order != 1 && order != 2 {
            return Err(Error::Contract(format!("derivative order must be 1 or 2, got {order}")));
        }
        let mut out = vec![0.0; f.len()];
        for (i, st) in self.stencils.iter().enumerate() {
            out[i] = if order == 1 {
                (0..5).map(|k| st.w1[k] * f[st.start + k]).sum()
            } else {
                let width = if st.w2[5] == 0.0 { 5 } else { 6 };
                (0..width).map(|k| st.w2[k] * f[st.start2 + k]).sum()
            };
        }
        if let (Some(sign), true) = (parity.sign(), self.ghost_ok()) {
            let h = self.h0;
            let (w, scale) = if order == 1 { (&CENTERED_D1, 1.0 / h) } else { (&CENTERED_D2, 1.0 / (h * h)) };
            for (i, o) in out.iter_mut().enumerate().take(2) {
                let mut acc = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let j = i as isize + k as isize - 2;
                    let v = if j < 0 { sign * f[(-j) as usize] } else { f[j as usize] };
                    acc += wk * v;
                }
                *o = acc * scale;
            }
        }
        Ok(out)
    }

    /// `f / y`, with the value at `y = 0` taken as `f'(0)` (requires `f(0) = 0`).
    pub fn div_by_y(&self, f: &[f64], parity: Parity) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = f.iter().zip(&self.nodes).map(|(v, y)| v / y).collect();
        if self.nodes[0] == 0.0 {
            out[0] = match parity {
                Parity::Even => 0.0,
                _ => self.derivative(f, 1, parity)?[0],
            };
        }
        Ok(out)
    }
}
