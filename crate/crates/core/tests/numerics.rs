use std::sync::Arc;
use wavemap_core::numerics::{eig_small, solve_ivp, OdeOptions, Parity, RadialField, RadialGrid};

fn uniform(y_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(7, y_max, n).unwrap())
}

#[test]
fn quadrature_examples() {
    let g = uniform(2.0, 401);
    let zero = vec![0.0; g.len()];
    assert_eq!(g.integrate_weighted(&zero, 0.0, 1.0).unwrap(), 0.0);
    let one = vec![1.0; g.len()];
    assert!((g.integrate_weighted(&one, 0.0, 1.0).unwrap() - 1.0 / 7.0).abs() < 1e-13);
    let sq: Vec<f64> = g.nodes().iter().map(|y| y * y).collect();
    let exact = 2f64.powi(9) / 9.0;
    assert!((g.integrate_weighted(&sq, 0.0, 2.0).unwrap() - exact).abs() < 1e-12 * exact);
}

#[test]
fn quadrature_on_geometric_grid_is_cubic_exact() {
    let g = RadialGrid::standard(7, 200.0).unwrap();
    let f: Vec<f64> = g.nodes().iter().map(|y| 1.0 - 2.0 * y + 0.5 * y * y * y).collect();
    // int_0^b (1 - 2y + y^3/2) y^6 dy = b^7/7 - b^8/4 + b^10/20
    let b: f64 = 150.0;
    let exact = b.powi(7) / 7.0 - b.powi(8) / 4.0 + b.powi(10) / 20.0;
    assert!((g.integrate_weighted(&f, 0.0, b).unwrap() - exact).abs() < 1e-12 * exact.abs());
}

#[test]
fn out_of_range_interval_is_an_error() {
    let g = uniform(1.0, 101);
    assert!(g.integrate_weighted(&vec![1.0; 101], 0.0, 2.0).is_err());
    assert!(g.integrate_weighted(&vec![1.0; 100], 0.0, 1.0).is_err());
}

#[test]
fn first_derivative_of_cubic() {
    let g = uniform(1.0, 10_001);
    let f = RadialField::from_fn(&g, Parity::Odd, |y| y * y * y);
    let d = f.deriv(1).unwrap();
    for (y, v) in g.nodes().iter().zip(&d.values).skip(1) {
        let exact = 3.0 * y * y;
        assert!((v - exact).abs() <= 1e-8 * exact.max(1e-8), "y = {y}");
    }
}

#[test]
fn derivative_of_constant_vanishes() {
    let g = uniform(1.0, 1001);
    let f = RadialField::from_fn(&g, Parity::Even, |_| 2.5);
    assert!(f.deriv(1).unwrap().values.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn second_derivative_is_fourth_order() {
    let err = |n: usize| {
        let g = uniform(3.0, n);
        let f = RadialField::from_fn(&g, Parity::Odd, f64::sin);
        let d2 = f.deriv(2).unwrap();
        g.nodes().iter().zip(&d2.values).map(|(y, v)| (v + y.sin()).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(301), err(601));
    let order = (coarse / fine).log2();
    assert!(order > 3.5, "order {order} ({coarse:e}, {fine:e})");
}

#[test]
fn derivative_inverts_cumulative_integral() {
    let g = uniform(4.0, 2001);
    let f: Vec<f64> = g.nodes().iter().map(|y| (-y * y).exp() * y.cos()).collect();
    let cum = g.cumulative_power(&f, 0.0, 0).unwrap();
    let back = RadialField::new(g.clone(), cum, Parity::None).unwrap().deriv(1).unwrap();
    let err = back.values.iter().zip(&f).skip(2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn exponential_to_one() {
    let traj = solve_ivp(|_, y: &[f64], out: &mut [f64]| out[0] = y[0], &[1.0], (0.0, 1.0), &OdeOptions::with_tol(1e-12)).unwrap();
    let (t, y) = traj.last();
    assert_eq!(*t, 1.0);
    assert!((y[0] - std::f64::consts::E).abs() < 1e-9);
}

#[test]
fn zero_field_gives_constant_trajectory() {
    let traj = solve_ivp(|_, _: &[f64], out: &mut [f64]| out.fill(0.0), &[3.0, -1.0], (0.0, 5.0), &OdeOptions::with_tol(1e-10)).unwrap();
    assert!(traj.y.iter().all(|y| y == &vec![3.0, -1.0]));
}

#[test]
fn oscillator_energy_over_ten_periods() {
    let span = (0.0, 20.0 * std::f64::consts::PI);
    let traj = solve_ivp(
        |_, y: &[f64], out: &mut [f64]| {
            out[0] = y[1];
            out[1] = -y[0];
        },
        &[1.0, 0.0],
        span,
        &OdeOptions::with_tol(1e-10),
    )
    .unwrap();
    let drift = traj.y.iter().map(|y| (0.5 * (y[0] * y[0] + y[1] * y[1]) - 0.5).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "{drift:e}");
}

#[test]
fn halving_tolerance_reduces_error() {
    let err = |tol: f64| {
        let traj = solve_ivp(|_, y: &[f64], out: &mut [f64]| out[0] = y[0], &[1.0], (0.0, 1.0), &OdeOptions::with_tol(tol)).unwrap();
        (traj.last().1[0] - std::f64::consts::E).abs()
    };
    // the controller keeps the error roughly proportional to tol
    let (a, b) = (err(1.6e-7), err(1e-8));
    assert!(a / b >= 4.0, "{a:e} {b:e}");
}

#[test]
fn small_eigenproblems() {
    let eig = |a: Vec<Vec<f64>>| -> Vec<f64> {
        let e = eig_small(&a).unwrap();
        assert!(e.values.iter().all(|v| v.is_real()));
        e.values.iter().map(|v| v.re).collect()
    };
    let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    assert!(eig(id).iter().all(|v| (v - 1.0).abs() < 1e-14));
    let diag = vec![vec![4.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 6.0]];
    for (v, e) in eig(diag).iter().zip([-1.0, 4.0, 6.0]) {
        assert!((v - e).abs() < 1e-14);
    }
    // companion matrix of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    let comp = vec![vec![0.0, 0.0, 6.0], vec![1.0, 0.0, -11.0], vec![0.0, 1.0, 6.0]];
    for (v, e) in eig(comp).iter().zip([1.0, 2.0, 3.0]) {
        assert!((v - e).abs() < 1e-10, "{v} vs {e}");
    }
}
