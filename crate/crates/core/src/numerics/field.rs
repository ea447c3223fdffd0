//! Values on a shared radial grid.

use super::grid::{Parity, RadialGrid};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Scalar radial function sampled on a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub parity: Parity,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!("{} values on a grid of {}", values.len(), grid.len())));
        }
        Ok(RadialField { grid, values, parity })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&y| f(y)).collect();
        RadialField { grid: grid.clone(), values, parity }
    }

    pub fn zeros(grid: &Arc<RadialGrid>, parity: Parity) -> Self {
        RadialField { grid: grid.clone(), values: vec![0.0; grid.len()], parity }
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    fn combine(&self, other: &RadialField, parity: Parity, op: impl Fn(f64, f64) -> f64) -> RadialField {
        assert!(self.same_grid(other), "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect();
        RadialField { grid: self.grid.clone(), values, parity }
    }

    fn sum_parity(&self, other: &RadialField) -> Parity {
        if self.parity == other.parity {
            self.parity
        } else {
            Parity::None
        }
    }

    pub fn add(&self, other: &RadialField) -> RadialField {
        self.combine(other, self.sum_parity(other), |a, b| a + b)
    }
    pub fn sub(&self, other: &RadialField) -> RadialField {
        self.combine(other, self.sum_parity(other), |a, b| a - b)
    }
    pub fn mul(&self, other: &RadialField) -> RadialField {
        self.combine(other, self.parity.times(other.parity), |a, b| a * b)
    }
    pub fn scale(&self, c: f64) -> RadialField {
        self.map(|v| c * v)
    }
    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &RadialField) -> RadialField {
        self.combine(other, self.sum_parity(other), |a, b| a + c * b)
    }
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RadialField {
        RadialField { grid: self.grid.clone(), values: self.values.iter().map(|v| f(*v)).collect(), parity: self.parity }
    }
    /// Pointwise product with a function of `y`.
    pub fn mul_fn(&self, parity: Parity, f: impl Fn(f64) -> f64) -> RadialField {
        let values = self.values.iter().zip(self.grid.nodes()).map(|(v, y)| v * f(*y)).collect();
        RadialField { grid: self.grid.clone(), values, parity }
    }

    pub fn deriv(&self, order: usize) -> Result<RadialField> {
        let values = self.grid.derivative(&self.values, order, self.parity)?;
        let parity = if order == 1 { self.parity.flip() } else { self.parity };
        Ok(RadialField { grid: self.grid.clone(), values, parity })
    }

    /// `f / y` with the limit `f'(0)` at the origin.
    pub fn div_y(&self) -> Result<RadialField> {
        let values = self.grid.div_by_y(&self.values, self.parity)?;
        Ok(RadialField { grid: self.grid.clone(), values, parity: self.parity.flip() })
    }

    /// `y f'`.
    pub fn lambda(&self) -> Result<RadialField> {
        let d = self.deriv(1)?;
        Ok(d.mul_fn(self.parity, |y| y))
    }

    /// `int f y^{d-1} dy` over the grid.
    pub fn integral(&self) -> f64 {
        self.grid.integrate_all(&self.values)
    }

    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.nodes())
            .filter(|(_, y)| **y >= a && **y <= b)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn at(&self, y: f64) -> f64 {
        self.grid.interpolate(&self.values, y)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
