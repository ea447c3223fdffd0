//! `wavemap`: command line driver for the blowup toolkit.
//!
//! Series go to CSV files and scalar reports to JSON files in the output
//! directory (`--out`, else `$WAVEMAP_OUT`, else `wavemap_out`). The JSON
//! report is echoed on stdout. Exit codes: 0 success, 1 numerical failure or
//! failed invariant, 2 invalid usage or configuration.

mod output;

use clap::{Args, Parser, Subcommand};
use output::{emit_error, Output};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use wavemap_core::bsystem::{blowup_law, build_a_ell, explicit_solution, integrate_trajectory, BParams, BState, SpectralData};
use wavemap_core::ground_state::solve_ground_state;
use wavemap_core::profiles::{assemble_qb, residual_psib, LOCAL_RADII};
use wavemap_core::verify;
use wavemap_core::wave::{
    energy, extract_lambda, initial_state, rate_report, run_blowup_experiment, ExperimentConfig, InitialData, Projector, SimConfig,
    TrackRow,
};
use wavemap_core::Error;

const OUT_ENV: &str = "WAVEMAP_OUT";

#[derive(Parser)]
#[command(name = "wavemap", version, about = "Blowup profiles, modulation dynamics and simulations for the supercritical wave map")]
struct Cli {
    /// Output directory; defaults to $WAVEMAP_OUT, then ./wavemap_out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the stationary profile Q and fit its tail.
    GroundState(GroundStateArgs),
    /// Linearized operator checks.
    Linop {
        #[command(subcommand)]
        action: LinopAction,
    },
    /// Approximate profiles T_k, S_k and the residual scaling.
    Profiles(ProfilesArgs),
    /// Integrate the modulation system along the explicit solution.
    Bsys(BsysArgs),
    /// Run a wave map simulation from a JSON configuration.
    Simulate(SimulateArgs),
    /// Run every invariant battery and write a consolidated report.
    VerifyAll(VerifyAllArgs),
}

#[derive(Subcommand)]
enum LinopAction {
    /// Kernel, adjointness, inversion, Phi_M and inequality checks.
    Verify(LinopArgs),
}

#[derive(Args)]
struct GroundStateArgs {
    #[arg(long, default_value_t = 7)]
    d: usize,
    #[arg(long, default_value_t = 1000.0)]
    ymax: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct LinopArgs {
    #[arg(long, default_value_t = 7)]
    d: usize,
    #[arg(long = "L", default_value_t = 3)]
    l: usize,
    #[arg(long, default_value_t = verify::GS_Y_MAX)]
    ymax: f64,
    /// Size of the random ensemble for the inequality checks.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ProfilesArgs {
    #[arg(long, default_value_t = 7)]
    d: usize,
    #[arg(long = "L", default_value_t = 3)]
    l: usize,
    #[arg(long, default_value_t = 3)]
    ell: usize,
    /// Evaluate the profile at b = b^e(s).
    #[arg(long, default_value_t = 100.0)]
    s: f64,
    #[arg(long, default_value_t = verify::GS_Y_MAX)]
    ymax: f64,
}

#[derive(Args)]
struct BsysArgs {
    #[arg(long, default_value_t = 7)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    ell: usize,
    /// Number of modulation parameters; defaults to ell.
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long, default_value_t = 20.0)]
    s0: f64,
    #[arg(long, default_value_t = 2000.0)]
    send: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct VerifyAllArgs {
    #[arg(long, default_value_t = 7)]
    d: usize,
    #[arg(long = "L", default_value_t = 3)]
    l: usize,
    #[arg(long, default_value_t = 3)]
    ell: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the wave equation checks (minutes).
    #[arg(long)]
    pde: bool,
}

/// Failure of a run: invalid configuration (exit 2) or a numerical error (exit 1).
enum Failure {
    Usage(String),
    Numerical(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Run = std::result::Result<bool, Failure>;

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn check_dimension(d: usize) -> std::result::Result<(), Failure> {
    if d < 7 {
        return usage(format!("--d must be at least 7, got {d}"));
    }
    Ok(())
}

fn check_l_ell(l: usize, ell: usize) -> std::result::Result<(), Failure> {
    if l % 2 == 0 || l > 7 {
        return usage(format!("--L must be odd and at most 7, got {l}"));
    }
    if ell == 0 || ell > l {
        return usage(format!("--ell must satisfy 1 <= ell <= L, got ell = {ell}, L = {l}"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dir = cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("wavemap_out"));
    let out = Output::new(dir);
    let result = match cli.command {
        Command::GroundState(a) => ground_state(&out, a),
        Command::Linop { action: LinopAction::Verify(a) } => linop_verify(&out, a),
        Command::Profiles(a) => profiles(&out, a),
        Command::Bsys(a) => bsys(&out, a),
        Command::Simulate(a) => simulate(&out, a),
        Command::VerifyAll(a) => verify_all(&out, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            emit_error(e.kind(), &e.to_string());
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            emit_error("io", &msg);
            ExitCode::from(1)
        }
    }
}

#[derive(Serialize)]
struct GroundStateSummary {
    d: usize,
    gamma: f64,
    gamma_tilde: f64,
    hbar: i64,
    delta: f64,
    a0: Option<f64>,
    a0_from_lam_q: Option<f64>,
    tail_slope: Option<f64>,
    y_max: f64,
    nodes: usize,
}

fn ground_state(out: &Output, a: GroundStateArgs) -> Run {
    check_dimension(a.d)?;
    if !(a.ymax >= 100.0) || !(a.tol > 0.0 && a.tol <= 1e-8) {
        return usage("need --ymax >= 100 and 0 < --tol <= 1e-8");
    }
    let gs = solve_ground_state(a.d, a.ymax, a.tol)?;
    let c = gs.consts;
    let rows = gs.grid.nodes().iter().enumerate().map(|(i, &y)| vec![y, gs.q.values[i], gs.lam_q.values[i], gs.v.values[i], gs.z.values[i]]);
    out.csv("ground_state.csv", &["y", "Q", "LamQ", "V", "Z"], rows)?;
    let summary = GroundStateSummary {
        d: a.d,
        gamma: c.gamma,
        gamma_tilde: c.gamma_tilde,
        hbar: c.hbar,
        delta: c.delta,
        a0: gs.a0,
        a0_from_lam_q: gs.a0_from_lam_q,
        tail_slope: gs.tail_slope,
        y_max: a.ymax,
        nodes: gs.grid.len(),
    };
    out.json("ground_state.json", &summary)?;
    Ok(true)
}

#[derive(Serialize)]
struct LinopBattery {
    linop: verify::LinopReport,
    phi: verify::PhiReport,
    inequalities: verify::InequalityReport,
    pass: bool,
}

fn linop_verify(out: &Output, a: LinopArgs) -> Run {
    check_dimension(a.d)?;
    check_l_ell(a.l, 1)?;
    if a.count < 3 || !(a.ymax >= 100.0) {
        return usage("need --count >= 3 and --ymax >= 100");
    }
    let ps = verify::profile_set(a.d, a.l, 1, a.ymax)?;
    let linop = verify::linop_report(&ps.ops, a.count.min(20), a.seed)?;
    let phi = verify::phi_report(&ps, &[10.0, 20.0, 40.0])?;
    let inequalities = verify::inequality_report(&ps, a.count, a.seed)?;
    let pass = linop.pass && phi.pass && inequalities.pass;
    out.json("linop_verify.json", &LinopBattery { linop, phi, inequalities, pass })?;
    Ok(pass)
}

#[derive(Serialize)]
struct ProfilesSummary {
    d: usize,
    l: usize,
    ell: usize,
    s: f64,
    b: Vec<f64>,
    recursion_residuals: Vec<f64>,
    /// `(M, |Psi_b|_{L^2(y <= M)})` at `b = b^e(s)`.
    local_residual: Vec<(f64, f64)>,
    scaling: verify::ResidualScalingReport,
}

fn profiles(out: &Output, a: ProfilesArgs) -> Run {
    check_dimension(a.d)?;
    check_l_ell(a.l, a.ell)?;
    let ps = verify::profile_set(a.d, a.l, a.ell, a.ymax)?;
    let p = BParams::new(a.ell, a.l, ps.gamma()).map_err(|e| Failure::Usage(e.to_string()))?;
    let b = explicit_solution(&p, a.s);
    let qb = assemble_qb(&ps, &b, true)?;
    let grid = &ps.ops.gs.grid;
    let mut header: Vec<String> = vec!["y".into()];
    header.extend((0..ps.phi.len()).map(|k| format!("phi_{k}")));
    header.extend(["Qb_1".to_string(), "Qb_2".to_string()]);
    let rows = grid.nodes().iter().enumerate().map(|(i, &y)| {
        let mut row = vec![y];
        row.extend(ps.phi.iter().map(|f| f.values[i]));
        row.push(qb.first.values[i]);
        row.push(qb.second.values[i]);
        row
    });
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    out.csv("profiles.csv", &header_refs, rows)?;
    let recursion_residuals = (0..=a.l).map(|k| ps.recursion_residual(k)).collect::<wavemap_core::Result<Vec<_>>>()?;
    let b_dot = wavemap_core::bsystem::b_rhs(&p, &b);
    let psi = residual_psib(&ps, &b, &b_dot, b[0])?;
    let local_residual = psi.local_sq_norms.iter().map(|(m, sq)| (*m, sq.sqrt())).collect();
    let scaling = verify::residual_scaling_report(&ps, &verify::residual_scaling_times(p.c[0]))?;
    debug_assert_eq!(scaling.exponents.len(), LOCAL_RADII.len());
    let pass = scaling.pass;
    out.json("profiles.json", &ProfilesSummary { d: a.d, l: a.l, ell: a.ell, s: a.s, b, recursion_residuals, local_residual, scaling })?;
    Ok(pass)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct BsysSummary {
    d: usize,
    ell: usize,
    l: usize,
    s0: f64,
    send: f64,
    T_est: f64,
    slope_s: f64,
    slope_t: f64,
    spectrum: Vec<f64>,
    predicted_spectrum: Vec<f64>,
}

fn bsys(out: &Output, a: BsysArgs) -> Run {
    check_dimension(a.d)?;
    let l = a.l.unwrap_or(a.ell);
    if a.ell < 2 || l < a.ell {
        return usage(format!("need 2 <= ell <= L, got ell = {}, L = {l}", a.ell));
    }
    if !(a.s0 > 0.0 && a.send >= 40.0 * a.s0) {
        return usage("need --s0 > 0 and --send >= 40 s0");
    }
    let p = BParams::for_dimension(a.d, a.ell, l).map_err(|e| Failure::Usage(e.to_string()))?;
    let spec = build_a_ell(a.ell, p.gamma)?;
    let state0 = BState { s: a.s0, b: explicit_solution(&p, a.s0), lambda: 1.0, t: 0.0 };
    let traj = integrate_trajectory(&p, &state0, a.send, a.tol)?;
    let mut header: Vec<String> = vec!["s".into()];
    header.extend((1..=l).map(|k| format!("b{k}")));
    header.extend(["lambda".to_string(), "t".to_string()]);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows = traj.states.iter().map(|st| {
        let mut row = vec![st.s];
        row.extend(&st.b);
        row.push(st.lambda);
        row.push(st.t);
        row
    });
    out.csv("bsys.csv", &header_refs, rows)?;
    let law = blowup_law(&traj)?;
    let mut spectrum = spec.d.clone();
    spectrum.sort_by(f64::total_cmp);
    let mut predicted_spectrum = SpectralData::predicted(a.ell, p.gamma);
    predicted_spectrum.sort_by(f64::total_cmp);
    let summary = BsysSummary {
        d: a.d,
        ell: a.ell,
        l,
        s0: a.s0,
        send: a.send,
        T_est: law.t_est,
        slope_s: law.slope_s,
        slope_t: law.slope_t,
        spectrum,
        predicted_spectrum,
    };
    out.json("bsys.json", &summary)?;
    Ok(true)
}

/// Configuration of `simulate`: a [`SimConfig`] plus output controls.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    #[serde(flatten)]
    sim: SimConfig,
    /// Number of output rows.
    #[serde(default = "default_samples")]
    samples: usize,
    /// Ground state grid for profile data.
    #[serde(default = "default_profile_ymax")]
    profile_ymax: f64,
    /// Run the adaptive blowup experiment instead of a single grid run; its
    /// `s0` is taken from the initial data.
    #[serde(default)]
    experiment: Option<ExperimentConfig>,
}

fn default_samples() -> usize {
    100
}

fn default_profile_ymax() -> f64 {
    2000.0
}

#[derive(Serialize)]
struct SimulateSummary {
    t_final: f64,
    steps: usize,
    h: f64,
    energy_initial: f64,
    energy_final: f64,
    energy_drift: f64,
    stop_reason: String,
    rate: Option<wavemap_core::wave::RateReport>,
    rate_error: Option<String>,
    /// First failure of the parameter projection; later rows carry NaN.
    projection_error: Option<String>,
}

fn simulate(out: &Output, a: SimulateArgs) -> Run {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", a.config.display())))?;
    let cfg: SimulateConfig = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid configuration: {e}")))?;
    check_dimension(cfg.sim.d)?;
    if cfg.samples == 0 {
        return usage("samples must be positive");
    }
    cfg.sim.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let profile = match &cfg.sim.initial {
        InitialData::LocalizedQb { ell, l, .. } => {
            check_l_ell(*l, *ell)?;
            Some(verify::profile_set(cfg.sim.d, *l, *ell, cfg.profile_ymax)?)
        }
        _ => None,
    };
    if let Some(exp) = &cfg.experiment {
        let (ps, s0) = match (profile, &cfg.sim.initial) {
            (Some(ps), InitialData::LocalizedQb { s0, .. }) => (ps, *s0),
            _ => return usage("the blowup experiment needs localized_qb initial data"),
        };
        // the experiment starts from the same b^e(s0) as the initial data
        let exp = ExperimentConfig { s0, ..exp.clone() };
        return experiment(out, &exp, &ps);
    }
    single_run(out, &cfg, profile)
}

fn experiment(out: &Output, exp: &ExperimentConfig, ps: &wavemap_core::profiles::ProfileSet) -> Run {
    let (rows, report) = run_blowup_experiment(exp, ps)?;
    out.csv("simulate.csv", &["t", "lambda", "energy", "sup_gradient", "h"], rows.iter().map(|r| vec![r.t, r.lambda, r.energy, r.sup_gradient, r.h]))?;
    out.json("simulate.json", &report)?;
    Ok(true)
}

fn single_run(out: &Output, cfg: &SimulateConfig, profile: Option<Arc<wavemap_core::profiles::ProfileSet>>) -> Run {
    let (mut solver, mut state) = initial_state(&cfg.sim, profile.as_deref())?;
    let gs = match &profile {
        Some(ps) => ps.ops.gs.clone(),
        None => Arc::new(solve_ground_state(cfg.sim.d, 1000.0, 1e-12)?),
    };
    let mut projection_error: Option<String> = None;
    let projector = match (&profile, &cfg.sim.initial) {
        (Some(ps), InitialData::LocalizedQb { lambda, truncation, .. }) => {
            let proj = Projector::new(ps.clone(), 10.0)?;
            let reach = lambda * proj.support();
            match truncation {
                Some(r) if *r < reach => {
                    projection_error = Some(format!("truncation radius {r} lies inside the projection support {reach}"));
                    None
                }
                _ => Some(proj),
            }
        }
        _ => None,
    };
    let l = profile.as_ref().map_or(0, |ps| ps.l);
    let mut b_guess: Option<Vec<f64>> = match (&cfg.sim.initial, &profile) {
        (InitialData::LocalizedQb { s0, ell, l, .. }, Some(ps)) => Some(explicit_solution(&BParams::new(*ell, *l, ps.gamma())?, *s0)),
        _ => None,
    };
    let dt = cfg.sim.dt();
    let e0 = energy(&state)?.value;
    let mut header: Vec<String> = vec!["t".into(), "lambda".into()];
    header.extend((1..=l).map(|k| format!("b{k}")));
    header.extend(["energy".to_string(), "sup_gradient".to_string()]);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut track: Vec<TrackRow> = Vec::new();
    let mut lambda_guess = match &cfg.sim.initial {
        InitialData::LocalizedQb { lambda, .. } | InitialData::GroundState { lambda } => *lambda,
        _ => 1.0,
    };
    let mut steps = 0usize;
    let mut stop_reason = "reached t_end".to_string();
    for j in 0..=cfg.samples {
        let target = cfg.sim.t_end * j as f64 / cfg.samples as f64;
        if let Err(e) = advance(&mut solver, &mut state, target, dt, &mut steps) {
            stop_reason = format!("integration stopped: {e}");
            break;
        }
        let lambda = extract_lambda(&state, &gs).unwrap_or(f64::NAN);
        let mut b_row = vec![f64::NAN; l];
        if let (Some(proj), Some(b0)) = (&projector, &b_guess) {
            let guess = if lambda.is_finite() { lambda } else { lambda_guess };
            match proj.project(&state, guess, b0) {
                Ok(pr) => {
                    lambda_guess = pr.lambda;
                    b_row.clone_from(&pr.b);
                    b_guess = Some(pr.b);
                }
                Err(e) => {
                    projection_error.get_or_insert(format!("t = {}: {e}", state.t));
                    b_guess = None;
                }
            }
        }
        let en = energy(&state)?.value;
        let grad = state.sup_gradient()?;
        let mut row = vec![state.t, lambda];
        row.extend(&b_row);
        row.push(en);
        row.push(grad);
        rows.push(row);
        if lambda.is_finite() {
            track.push(TrackRow { t: state.t, lambda, energy: en, sup_gradient: grad, h: solver.h() });
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    out.csv("simulate.csv", &header_refs, rows.iter().cloned())?;
    let e1 = energy(&state)?.value;
    let (rate, rate_error) = match &cfg.sim.initial {
        InitialData::LocalizedQb { ell, .. } => {
            let gamma = gs.consts.gamma;
            let drift = (e1 - e0).abs() / e0;
            match rate_report(&track, *ell, gamma, drift, 0, stop_reason.clone()) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
        _ => (None, None),
    };
    let summary = SimulateSummary {
        t_final: state.t,
        steps,
        h: solver.h(),
        energy_initial: e0,
        energy_final: e1,
        energy_drift: (e1 - e0).abs() / e0.abs().max(f64::MIN_POSITIVE),
        stop_reason,
        rate,
        rate_error,
        projection_error,
    };
    out.json("simulate.json", &summary)?;
    Ok(true)
}

fn advance(
    solver: &mut wavemap_core::wave::WaveSolver,
    state: &mut wavemap_core::wave::WaveState,
    target: f64,
    dt: f64,
    steps: &mut usize,
) -> wavemap_core::Result<()> {
    while state.t < target - 1e-14 * target.abs().max(1.0) {
        solver.step(state, dt.min(target - state.t))?;
        *steps += 1;
    }
    Ok(())
}

fn verify_all(out: &Output, a: VerifyAllArgs) -> Run {
    check_dimension(a.d)?;
    check_l_ell(a.l, a.ell)?;
    let report = verify::verify_all(a.d, a.l, a.ell, a.seed, a.pde)?;
    let pass = report.pass;
    out.json("verify_all.json", &report)?;
    Ok(pass)
}
