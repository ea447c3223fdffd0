//! Adaptive Dormand-Prince 5(4) integrator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; a fraction of the span when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Disable step control and take steps of exactly this size.
    pub fixed_step: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000, fixed_step: None }
    }
}

/// Accepted steps of an integration.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> (&f64, &Vec<f64>) {
        (self.t.last().unwrap(), self.y.last().unwrap())
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Stateful integrator that can be advanced to successive output times.
pub struct Stepper<F: FnMut(f64, &[f64], &mut [f64])> {
    f: F,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: Vec<Vec<f64>>,
    fsal_valid: bool,
    opts: OdeOptions,
    steps: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Stepper<F> {
    pub fn new(f: F, t0: f64, y0: &[f64], opts: OdeOptions) -> Self {
        let n = y0.len();
        Stepper {
            f,
            t: t0,
            y: y0.to_vec(),
            h: opts.fixed_step.or(opts.h_init).unwrap_or(0.0),
            k: vec![vec![0.0; n]; 7],
            fsal_valid: false,
            opts,
            steps: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Integration { t: self.t, state: self.y.clone(), reason: reason.into() }
    }

    /// Take one accepted step that does not pass `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        let n = self.y.len();
        if !self.fsal_valid {
            let (t, y) = (self.t, self.y.clone());
            (self.f)(t, &y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = (1e-3 * (t_limit - self.t)).min(self.opts.h_max).max(1e-12);
        }
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(self.fail("maximum number of steps exceeded"));
            }
            let last = self.t + self.h >= t_limit;
            let h = if last { t_limit - self.t } else { self.h };
            if h <= 1e-14 * self.t.abs().max(1.0) && !last {
                return Err(self.fail(format!("step size underflow (h = {h:e})")));
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for j in 0..s {
                        acc += h * A[s][j] * self.k[j][i];
                    }
                    ytmp[i] = acc;
                }
                let ts = self.t + C[s] * h;
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                (self.f)(ts, &ytmp, &mut tail[0]);
            }
            // The seventh stage was evaluated at the fifth order solution.
            ynew.copy_from_slice(&ytmp);
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * self.k[s][i];
                }
                let sc = self.opts.atol + self.opts.rtol * self.y[i].abs().max(ynew[i].abs());
                err = err.max((h * e / sc).abs());
            }
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                if self.opts.fixed_step.is_some() {
                    return Err(self.fail("non-finite state"));
                }
                self.h = 0.25 * h;
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(self.fail("non-finite state with vanishing step"));
                }
                continue;
            }
            if self.opts.fixed_step.is_some() || err <= 1.0 {
                self.t = if last { t_limit } else { self.t + h };
                self.y.copy_from_slice(&ynew);
                let k6 = self.k[6].clone();
                self.k[0].copy_from_slice(&k6);
                if self.opts.fixed_step.is_none() {
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    let grown = (h * fac).min(self.opts.h_max);
                    // Keep the untruncated step when the last one was clipped by the limit.
                    self.h = if last { grown.max(self.h) } else { grown };
                }
                return Ok(());
            }
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if self.h < 1e-14 * self.t.abs().max(1.0) {
                return Err(self.fail(format!("step size underflow (h = {:e})", self.h)));
            }
        }
    }

    /// Integrate until `t == t_target`.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        if t_target < self.t {
            return Err(Error::Contract(format!("cannot integrate backwards from {} to {t_target}", self.t)));
        }
        while self.t < t_target {
            self.step(t_target)?;
        }
        Ok(())
    }
}

/// Integrate `y' = f(t, y)` over `span`, recording every accepted step.
pub fn solve_ivp<F>(f: F, y0: &[f64], span: (f64, f64), opts: &OdeOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    solve_ivp_until(f, y0, span, opts, |_, _| false).map(|(tr, _)| tr)
}

/// As [`solve_ivp`], stopping early at the first accepted step where `stop`
/// returns true. The flag reports whether that happened.
pub fn solve_ivp_until<F, S>(f: F, y0: &[f64], span: (f64, f64), opts: &OdeOptions, mut stop: S) -> Result<(Trajectory, bool)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    let (t0, t1) = span;
    let mut st = Stepper::new(f, t0, y0, *opts);
    let mut tr = Trajectory { t: vec![t0], y: vec![y0.to_vec()] };
    while st.t() < t1 {
        st.step(t1)?;
        tr.t.push(st.t());
        tr.y.push(st.y().to_vec());
        if stop(st.t(), st.y()) {
            return Ok((tr, true));
        }
    }
    Ok((tr, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_reaches_e() {
        let tr = solve_ivp(|_, y, dy| dy[0] = y[0], &[1.0], (0.0, 1.0), &OdeOptions::with_tol(1e-12)).unwrap();
        let (_, y) = tr.last();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn oscillator_energy_is_conserved() {
        let period = 2.0 * std::f64::consts::PI;
        let tr = solve_ivp(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            (0.0, 10.0 * period),
            &OdeOptions::with_tol(1e-10),
        )
        .unwrap();
        let drift = tr.y.iter().map(|y| (0.5 * (y[0] * y[0] + y[1] * y[1]) - 0.5).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "energy drift {drift:e}");
    }

    #[test]
    fn error_decreases_with_tolerance() {
        let err = |tol: f64| {
            let tr = solve_ivp(|_, y, dy| dy[0] = y[0], &[1.0], (0.0, 1.0), &OdeOptions::with_tol(tol)).unwrap();
            (tr.last().1[0] - std::f64::consts::E).abs()
        };
        let (e1, e2) = (err(1e-6), err(1e-6 / 16.0));
        assert!(e2 < e1 / 4.0, "{e1:e} -> {e2:e}");
    }

    #[test]
    fn fixed_step_convergence_order() {
        let err = |h: f64| {
            let mut o = OdeOptions::with_tol(1.0);
            o.fixed_step = Some(h);
            let tr = solve_ivp(|_, y, dy| dy[0] = y[0], &[1.0], (0.0, 1.0), &o).unwrap();
            (tr.last().1[0] - std::f64::consts::E).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 / e2 >= 8.0, "halving the step gave ratio {}", e1 / e2);
    }

    #[test]
    fn underflow_reports_last_state() {
        let r = solve_ivp(|t, _, dy| dy[0] = 1.0 / (1.0 - t), &[0.0], (0.0, 2.0), &OdeOptions::with_tol(1e-10));
        match r {
            Err(Error::Integration { t, state, .. }) => {
                assert!(t < 1.0 && t > 0.9);
                assert!(state[0].is_finite());
            }
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
