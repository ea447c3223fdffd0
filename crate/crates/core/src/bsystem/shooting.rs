//! Shooting over the unstable eigencoordinates `V_2..V_ell` of the modulation system.
//!
//! A candidate is integrated with a fixed step in `tau = ln s`, so that its
//! fate depends continuously on the initial data. Exits through an unstable
//! face are classified by the sign of the exiting coordinate and bisected.

use super::{rescaled_rhs, BParams, SpectralData};
use crate::error::{Error, Result};
use crate::numerics::{OdeOptions, Stepper};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ShootingConfig {
    pub s0: f64,
    pub s_end: f64,
    /// `beta` in the box `|V_k| <= s^{-beta}`, `2 <= k <= ell`.
    pub box_exponent: f64,
    /// Initial stable coordinate `V_1(s_0)`, as a multiple of `s_0^{-beta}`.
    pub stable_fraction: f64,
    /// Fixed step in `tau`.
    pub tau_step: f64,
    pub threads: usize,
}

impl ShootingConfig {
    pub fn new(s0: f64, s_end: f64, box_exponent: f64) -> Self {
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
        ShootingConfig { s0, s_end, box_exponent, stable_fraction: 0.5, tau_step: 2e-3, threads }
    }

    fn radius(&self, s: f64) -> f64 {
        s.powf(-self.box_exponent)
    }
}

/// Fate of one candidate up to a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Outcome {
    Trapped,
    /// Left through the unstable face `face` with `sign V_face`; `rate` is
    /// `d/ds sum_{k >= 2} (s^beta V_k)^2` at the exit.
    Exit { s: f64, face: usize, sign: f64, rate: f64 },
    /// Broke `|V_1| <= 10 s^{-beta}` or `|b_k| <= s^{-k}` for `k > ell`.
    StableExit { s: f64 },
}

/// Integrate the candidate with eigencoordinates `v` (`V_1..V_ell`) at `s_0`
/// and `b_k = 0` for `k > ell`, until it leaves the box or reaches `horizon`.
pub fn run_candidate(p: &BParams, spec: &SpectralData, cfg: &ShootingConfig, v: &[f64], horizon: f64) -> Result<Outcome> {
    let ell = spec.d.len();
    if v.len() != ell {
        return Err(Error::Contract(format!("expected {ell} eigencoordinates, got {}", v.len())));
    }
    let l = p.l;
    let mut y0 = vec![0.0; l + 2];
    for i in 0..ell {
        y0[i] = (0..ell).map(|j| spec.p_inv[i][j] * v[j]).sum();
    }
    let mut opts = OdeOptions::with_tol(1e-10);
    opts.fixed_step = Some(cfg.tau_step);
    let rhs = |tau: f64, y: &[f64], out: &mut [f64]| rescaled_rhs(p, tau, y, out);
    let mut stepper = Stepper::new(rhs, cfg.s0.ln(), &y0, opts);
    let tau_end = horizon.ln();
    let mut dy = vec![0.0; l + 2];
    while stepper.t() < tau_end {
        stepper.step(tau_end)?;
        let (tau, y) = (stepper.t(), stepper.y());
        let s = tau.exp();
        let r = cfg.radius(s);
        let vk: Vec<f64> = (0..ell).map(|i| (0..ell).map(|j| spec.p[i][j] * y[j]).sum()).collect();
        let worst = (1..ell).max_by(|&a, &b| vk[a].abs().total_cmp(&vk[b].abs()));
        if let Some(i) = worst.filter(|&i| vk[i].abs() > r) {
            rescaled_rhs(p, tau, y, &mut dy);
            let dv: Vec<f64> = (0..ell).map(|i| (0..ell).map(|j| spec.p[i][j] * dy[j]).sum()).collect();
            let w = s.powf(2.0 * cfg.box_exponent);
            let d_tau: f64 = (1..ell).map(|k| 2.0 * w * (cfg.box_exponent * vk[k] * vk[k] + vk[k] * dv[k])).sum();
            return Ok(Outcome::Exit { s, face: i + 1, sign: vk[i].signum(), rate: d_tau / s });
        }
        if vk[0].abs() > 10.0 * r || y[ell..l].iter().any(|u| u.abs() > 1.0) {
            return Ok(Outcome::StableExit { s });
        }
    }
    Ok(Outcome::Trapped)
}

/// Trapped bracket of `V_2(s_0)` at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub horizon: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Level {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingResult {
    /// `V_1..V_ell` at `s_0` of the returned trajectory.
    pub v_init: Vec<f64>,
    pub levels: Vec<Level>,
    pub candidates: usize,
    /// Candidates rejected through an unstable face.
    pub rejected: usize,
    pub stable_exits: usize,
    /// Smallest exit rate among rejected candidates.
    pub min_exit_rate: f64,
    /// Final outcome of `v_init` up to `s_end`.
    pub final_outcome: Outcome,
}

impl ShootingResult {
    pub fn transverse_ok(&self) -> bool {
        self.rejected > 0 && self.min_exit_rate > 0.0
    }
}

struct Tally {
    candidates: usize,
    rejected: usize,
    stable_exits: usize,
    min_rate: f64,
}

impl Tally {
    fn record(&mut self, o: &Outcome) {
        self.candidates += 1;
        match o {
            Outcome::Exit { rate, .. } => {
                self.rejected += 1;
                self.min_rate = self.min_rate.min(*rate);
            }
            Outcome::StableExit { .. } => self.stable_exits += 1,
            Outcome::Trapped => {}
        }
    }
}

struct Shooter<'a> {
    p: &'a BParams,
    spec: &'a SpectralData,
    cfg: &'a ShootingConfig,
    v1: f64,
}

/// Sign on `face`, or `None` when the outcome is decided elsewhere.
fn face_sign(o: &Outcome, face: usize) -> Option<f64> {
    match o {
        Outcome::Exit { face: f, sign, .. } if *f == face => Some(*sign),
        _ => None,
    }
}

fn collapsed(a: f64, b: f64) -> bool {
    (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl Shooter<'_> {
    fn ell(&self) -> usize {
        self.spec.d.len()
    }

    /// Outcome of `V_2 = x`, with `V_3` tuned by an inner bisection when `ell = 3`.
    fn classify(&self, x: f64, horizon: f64, tally: &mut Tally) -> Result<(Outcome, Vec<f64>)> {
        let mut v = vec![0.0; self.ell()];
        v[0] = self.v1;
        v[1] = x;
        if self.ell() == 2 {
            let o = run_candidate(self.p, self.spec, self.cfg, &v, horizon)?;
            tally.record(&o);
            return Ok((o, v));
        }
        let r0 = self.cfg.radius(self.cfg.s0);
        let (mut a, mut b) = (-r0, r0);
        v[2] = a;
        let oa = run_candidate(self.p, self.spec, self.cfg, &v, horizon)?;
        v[2] = b;
        let ob = run_candidate(self.p, self.spec, self.cfg, &v, horizon)?;
        tally.record(&oa);
        tally.record(&ob);
        // an end leaving through another face decides the outer classification
        let sa = match (face_sign(&oa, 3), face_sign(&ob, 3)) {
            (Some(sa), Some(sb)) if sa != sb => sa,
            (None, _) => return Ok((oa, vec![v[0], v[1], a])),
            (_, None) => return Ok((ob, v)),
            _ => return Err(Error::Search { lo: a, hi: b, reason: "inner bracket ends exit with the same sign".into() }),
        };
        loop {
            let m = 0.5 * (a + b);
            v[2] = m;
            let o = run_candidate(self.p, self.spec, self.cfg, &v, horizon)?;
            tally.record(&o);
            match face_sign(&o, 3) {
                Some(s) if s == sa => a = m,
                Some(_) => b = m,
                None => return Ok((o, v)),
            }
            if collapsed(a, b) {
                return Err(Error::Search { lo: a, hi: b, reason: "inner bisection reached machine resolution".into() });
            }
        }
    }

    fn classify_many(&self, xs: &[f64], horizon: f64, tally: &mut Tally) -> Result<Vec<(Outcome, Vec<f64>)>> {
        let results: Vec<Result<(Outcome, Vec<f64>, Tally)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = xs
                .iter()
                .map(|&x| {
                    scope.spawn(move || {
                        let mut t = Tally { candidates: 0, rejected: 0, stable_exits: 0, min_rate: f64::INFINITY };
                        self.classify(x, horizon, &mut t).map(|(o, v)| (o, v, t))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("shooting worker panicked")).collect()
        });
        let mut out = Vec::with_capacity(xs.len());
        for r in results {
            let (o, v, t) = r?;
            tally.candidates += t.candidates;
            tally.rejected += t.rejected;
            tally.stable_exits += t.stable_exits;
            tally.min_rate = tally.min_rate.min(t.min_rate);
            out.push((o, v));
        }
        Ok(out)
    }

    /// Multisection of `(a, b)` for a candidate that survives to `horizon`.
    fn find_trapped(&self, mut a: f64, mut b: f64, sign_a: f64, horizon: f64, tally: &mut Tally) -> Result<f64> {
        let m = self.cfg.threads.max(1) + 1;
        loop {
            let xs: Vec<f64> = (1..m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
            let outs = self.classify_many(&xs, horizon, tally)?;
            if let Some(i) = outs.iter().position(|(o, _)| face_sign(o, 2).is_none()) {
                if let Outcome::StableExit { s } = outs[i].0 {
                    return Err(Error::Search { lo: a, hi: b, reason: format!("candidate broke a stable bound at s = {s}") });
                }
                return Ok(xs[i]);
            }
            // every point exits through the V_2 face; keep the sign change
            let mut lo = a;
            let mut hi = b;
            for (i, (o, _)) in outs.iter().enumerate() {
                if face_sign(o, 2) == Some(sign_a) {
                    lo = xs[i];
                } else {
                    hi = xs[i];
                    break;
                }
            }
            a = lo;
            b = hi;
            if collapsed(a, b) {
                return Err(Error::Search { lo: a, hi: b, reason: "no trapped candidate at machine resolution".into() });
            }
        }
    }

    /// Boundary between an exit with `sign` at `out` and a trapped point `inside`.
    fn boundary(&self, mut out: f64, mut inside: f64, sign: f64, horizon: f64, tally: &mut Tally) -> Result<(f64, f64)> {
        let tol = 1e-10 * (inside - out).abs();
        while (inside - out).abs() > tol && !collapsed(out, inside) {
            let m = 0.5 * (out + inside);
            let (o, _) = self.classify(m, horizon, tally)?;
            match face_sign(&o, 2) {
                Some(s) if s == sign => out = m,
                _ => inside = m,
            }
        }
        Ok((out, inside))
    }
}

/// Find `V_2(s_0)` (and `V_3(s_0)` when `ell = 3`) whose trajectory stays in the
/// box `|V_k| <= s^{-beta}` up to `s_end`.
///
/// The horizon doubles from `2 s_0` to `s_end`; at each level the interval of
/// `V_2` surviving to the horizon is bracketed between two rejected candidates,
/// and the next level searches inside that bracket.
pub fn shoot_unstable(p: &BParams, cfg: &ShootingConfig) -> Result<ShootingResult> {
    let spec = super::build_a_ell(p.ell, p.gamma)?;
    if !(2..=3).contains(&p.ell) {
        return Err(Error::Domain(format!("shooting supports ell in {{2, 3}}, got {}", p.ell)));
    }
    if !(cfg.box_exponent > 0.0 && cfg.s0 > 0.0 && cfg.s_end > cfg.s0) {
        return Err(Error::Contract("need box_exponent > 0 and 0 < s0 < s_end".into()));
    }
    let r0 = cfg.radius(cfg.s0);
    let sh = Shooter { p, spec: &spec, cfg, v1: cfg.stable_fraction * r0 };
    let mut tally = Tally { candidates: 0, rejected: 0, stable_exits: 0, min_rate: f64::INFINITY };
    let (mut a, mut b) = (-r0, r0);
    let first = (2.0 * cfg.s0).min(cfg.s_end);
    let (oa, _) = sh.classify(a, first, &mut tally)?;
    let (ob, _) = sh.classify(b, first, &mut tally)?;
    let sign_a = match (face_sign(&oa, 2), face_sign(&ob, 2)) {
        (Some(sa), Some(sb)) if sa != sb => sa,
        _ => return Err(Error::Search { lo: a, hi: b, reason: "box corners do not exit with opposite signs".into() }),
    };
    let mut levels = Vec::new();
    let mut horizon = first;
    let inside = loop {
        let inside = sh.find_trapped(a, b, sign_a, horizon, &mut tally)?;
        let (lo, _) = sh.boundary(a, inside, sign_a, horizon, &mut tally)?;
        let (hi, _) = sh.boundary(b, inside, -sign_a, horizon, &mut tally)?;
        a = lo;
        b = hi;
        levels.push(Level { horizon, lo, hi });
        if horizon >= cfg.s_end {
            break inside;
        }
        horizon = (2.0 * horizon).min(cfg.s_end);
    };
    let (final_outcome, v_init) = sh.classify(inside, cfg.s_end, &mut tally)?;
    if final_outcome != Outcome::Trapped {
        return Err(Error::Search { lo: a, hi: b, reason: format!("selected candidate is not trapped: {final_outcome:?}") });
    }
    Ok(ShootingResult {
        v_init,
        levels,
        candidates: tally.candidates,
        rejected: tally.rejected,
        stable_exits: tally.stable_exits,
        min_exit_rate: tally.min_rate,
        final_outcome,
    })
}
