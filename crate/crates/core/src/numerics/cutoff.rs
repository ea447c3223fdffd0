//! Smooth cutoff equal to 1 on `[0, 1]` and 0 on `[2, inf)`.

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// `chi(x)`: infinitely differentiable, non-increasing.
pub fn chi(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let a = psi(2.0 - x);
        a / (a + psi(x - 1.0))
    }
}

/// `chi'(x)`.
pub fn chi_prime(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let (u, v) = (2.0 - x, x - 1.0);
    let (a, b) = (psi(u), psi(v));
    // d/dx psi(2-x) = -psi(u)/u^2, d/dx psi(x-1) = psi(v)/v^2
    let da = -a / (u * u);
    let db = b / (v * v);
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// `chi(y / scale)`.
pub fn chi_scaled(y: f64, scale: f64) -> f64 {
    chi(y / scale)
}
