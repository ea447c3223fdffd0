//! Grids, stencils, quadrature, ODE integration and small eigenproblems.

pub mod cutoff;
pub mod field;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod ode;
mod quadrature;

pub use field::RadialField;
pub use grid::{Parity, RadialGrid, Spacing};
pub use linalg::{eig_small, EigenPairs, Eigenvalue, Matrix};
pub use ode::{solve_ivp, solve_ivp_until, OdeOptions, Stepper, Trajectory};

/// Free function form of [`RadialGrid::integrate_weighted`].
pub fn integrate_weighted(grid: &RadialGrid, f: &[f64], a: f64, b: f64) -> crate::Result<f64> {
    grid.integrate_weighted(f, a, b)
}

/// Free function form of [`RadialGrid::derivative`].
pub fn derivative(grid: &RadialGrid, f: &[f64], order: usize, parity: Parity) -> crate::Result<Vec<f64>> {
    grid.derivative(f, order, parity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn weight_alone_integrates_exactly() {
        let g = RadialGrid::uniform(7, 1.0, 101).unwrap();
        let one = vec![1.0; g.len()];
        let v = g.integrate_weighted(&one, 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-15, "{:e}", v - 1.0 / 7.0);
    }

    #[test]
    fn quadratic_against_weight() {
        let g = RadialGrid::uniform(7, 2.0, 64).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|y| y * y).collect();
        let v = g.integrate_weighted(&f, 0.0, 2.0).unwrap();
        let want = 2f64.powi(9) / 9.0;
        assert!(((v - want) / want).abs() < 1e-13, "{:e}", (v - want) / want);
    }

    #[test]
    fn big_uniform_grid_and_partial_range() {
        let g = RadialGrid::uniform(9, 1000.0, 10_001).unwrap();
        let one = vec![1.0; g.len()];
        let v = g.integrate_weighted(&one, 0.0, 1000.0).unwrap();
        let want = 1000f64.powi(9) / 9.0;
        assert!(((v - want) / want).abs() < 1e-10);
        let part = g.integrate_weighted(&one, 3.3, 7.05).unwrap();
        let want = (7.05f64.powi(9) - 3.3f64.powi(9)) / 9.0;
        assert!(((part - want) / want).abs() < 1e-12);
    }

    #[test]
    fn geometric_grid_cubic_exact() {
        let g = RadialGrid::geometric(8, 200.0, 0.01, 2.0, 1.01).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|y| 1.0 - y + 0.5 * y * y * y).collect();
        let v = g.integrate_weighted(&f, 0.0, 200.0).unwrap();
        let b = 200f64;
        let want = b.powi(8) / 8.0 - b.powi(9) / 9.0 + 0.5 * b.powi(11) / 11.0;
        assert!(((v - want) / want).abs() < 1e-12);
    }

    #[test]
    fn range_error_outside_grid() {
        let g = RadialGrid::uniform(7, 1.0, 11).unwrap();
        let one = vec![1.0; g.len()];
        assert!(matches!(g.integrate_weighted(&one, 0.0, 1.5), Err(Error::Range(_))));
    }

    #[test]
    fn dimension_below_seven_rejected() {
        assert!(matches!(RadialGrid::uniform(6, 1.0, 11), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_of_cubic() {
        let g = RadialGrid::uniform(7, 1.0, 10_001).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|y| y * y * y).collect();
        for parity in [Parity::Odd, Parity::None] {
            let d = g.derivative(&f, 1, parity).unwrap();
            for (i, y) in g.nodes().iter().enumerate().skip(1) {
                let want = 3.0 * y * y;
                assert!(((d[i] - want) / want).abs() < 1e-8, "y = {y}, {parity:?}");
            }
        }
    }

    #[test]
    fn second_derivative_fourth_order() {
        let err = |n: usize| {
            let g = RadialGrid::uniform(7, 3.0, n).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|y| y.sin()).collect();
            let d = g.derivative(&f, 2, Parity::Odd).unwrap();
            d.iter().zip(g.nodes()).map(|(v, y)| (v + y.sin()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(201), err(401));
        let rate = (e1 / e2).log2();
        assert!(rate > 3.5, "observed order {rate}");
    }

    #[test]
    fn interpolation_is_cubic_exact() {
        let g = RadialGrid::standard(7, 100.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|y| 2.0 + y - 0.1 * y * y * y).collect();
        for &x in &[0.00037, 1.2345, 9.9999, 10.0021, 57.3] {
            let want = 2.0 + x - 0.1 * x * x * x;
            assert!((g.interpolate(&f, x) - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }
}
