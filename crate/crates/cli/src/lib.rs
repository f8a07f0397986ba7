//! Command implementations behind the `perimeter` binary.
//!
//! Every command reads a [`RunConfig`], applies command-line overrides and
//! stamps each file it writes with the hash of the effective configuration.

pub mod config;

use config::{ConfigError, RunConfig};
use perimeter_core::analytics::{asymptotic_percentage, fraction_standard_error, monte_carlo_summary, MarkovModel};
use perimeter_core::engagement::{guarding_arc, head_on_region, solve_critical_radius, Branch, CapturePoint, EngagementSolution, GuardingArc};
use perimeter_core::game::{
    report_assumptions, ArrivalProcess, EngagementRecord, EngineOptions, GameEngine, Outcome, StartState, Trajectory,
    ValidationReport,
};
use perimeter_core::geometry::{Configuration, Point};
use serde::Serialize;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(PathBuf, io::Error),
    Solver(perimeter_core::Error),
}

impl CliError {
    /// 1 for anything wrong with the input or the file system, 3 when the
    /// solver finds the game infeasible.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(..) => 1,
            CliError::Solver(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<perimeter_core::Error> for CliError {
    fn from(e: perimeter_core::Error) -> Self {
        CliError::Solver(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub arrivals: Option<usize>,
    pub trials: Option<usize>,
    pub angles: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(v) = overrides.seed {
        config.seed = v;
    }
    if let Some(v) = overrides.arrivals {
        config.arrivals = v;
    }
    if let Some(v) = overrides.trials {
        config.trials = v;
    }
    if let Some(v) = &overrides.angles {
        config.angles = Some(v.clone());
    }
    if let Some(v) = &overrides.out_dir {
        config.out_dir = v.clone();
    }
    config.check()?;
    Ok(config)
}

fn engine_options(config: &RunConfig, trajectories: bool) -> EngineOptions {
    EngineOptions {
        n_boundary: config.boundary_samples,
        n_arc_samples: config.arc_samples,
        dt: config.dt,
        record_trajectories: trajectories,
        branch_policy: config.capture_branch,
    }
}

fn build_engine(config: &RunConfig, trajectories: bool) -> CliResult<GameEngine> {
    let grid = config.params.grid(config.resolution)?;
    let sol = solve_critical_radius(&config.params, grid)?;
    Ok(GameEngine::with_solution(config.params, grid, sol, engine_options(config, trajectories))?)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_owned(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(path.to_owned(), e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(path.to_owned(), e.into()))
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_owned(), e.into())
}

#[derive(Debug, Clone, Serialize)]
struct Timing<'a> {
    command: &'a str,
    config_hash: &'a str,
    wall_clock_seconds: f64,
}

/// Wall-clock time goes in its own file so that the result files stay
/// byte-identical across reruns.
fn write_timing(config: &RunConfig, command: &str, started: Instant) -> CliResult<()> {
    let timing = Timing {
        command,
        config_hash: &config.hash(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&config.out_dir.join("run_timing.json"), &timing)
}

/// Outcome of `validate`: the report plus the process exit code.
pub fn cmd_validate(config: &RunConfig) -> CliResult<(ValidationReport, u8)> {
    let grid = config.params.grid(config.resolution)?;
    let solved = solve_critical_radius(&config.params, grid);
    let report = report_assumptions(&config.params, grid, &solved);
    println!("config hash: {}", config.hash());
    let verdict = |pass| if pass { "PASS" } else { "WARN" };
    let a1 = report.assumption1;
    match &report.assumption1_error {
        Some(err) => println!("assumption 1: {}  ({err})", verdict(a1.pass)),
        None => println!(
            "assumption 1: {}  max engagement-region radius {:.4} <= {:.4}",
            verdict(a1.pass),
            a1.lhs,
            a1.rhs
        ),
    }
    let a2 = report.assumption2;
    println!(
        "assumption 2: {}  return bound {:.4} {} sensing time {:.4}",
        verdict(a2.pass),
        a2.lhs,
        if a2.pass { "<=" } else { ">" },
        a2.rhs
    );
    for (name, check) in [("1", a1), ("2", a2)] {
        if !check.pass {
            log::warn!("assumption {name} does not hold; results may not carry its guarantees");
        }
    }
    let code = if report.all_pass() { 0 } else { 2 };
    Ok((report, code))
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub config_hash: String,
    pub r_d_star: f64,
    pub t_star: f64,
    pub deadline: f64,
    pub r_cap: f64,
    pub theta_cap: f64,
    pub p1: f64,
    pub p2: f64,
    pub asymptotic_pct: Option<f64>,
    /// Capture point for an intruder arriving at angle 0, ccw branch.
    pub capture_point: CapturePoint,
    pub guarding_arc_center: GuardingArc,
    pub guarding_arc_capture: GuardingArc,
}

fn solve_summary(config: &RunConfig, engine: &GameEngine) -> SolveSummary {
    let sol = engine.solution();
    let cap = engine.capture_point(0.0, Branch::Ccw);
    let model = engine.markov_model();
    let n = config.arc_samples;
    SolveSummary {
        config_hash: config.hash(),
        r_d_star: sol.r_d_star,
        t_star: sol.t_star,
        deadline: sol.deadline,
        r_cap: cap.r_cap,
        theta_cap: cap.theta_cap,
        p1: model.p1,
        p2: model.p2,
        asymptotic_pct: asymptotic_percentage(&model).ok(),
        capture_point: cap,
        guarding_arc_center: guarding_arc(Configuration::new(0.0, 0.0, 0.0), &config.params, sol, n),
        guarding_arc_capture: guarding_arc(cap.defender_pose(), &config.params, sol, n),
    }
}

pub fn cmd_solve(config: &RunConfig) -> CliResult<SolveSummary> {
    let started = Instant::now();
    let engine = build_engine(config, false)?;
    let summary = solve_summary(config, &engine);
    create_dir(&config.out_dir)?;
    write_json(&config.out_dir.join("solve.json"), &summary)?;
    write_timing(config, "solve", started)?;
    println!("critical radius r_D*   {:.4}", summary.r_d_star);
    println!("engagement deadline    {:.4}", summary.deadline);
    println!("capture radius r_cap   {:.4}", summary.r_cap);
    println!("capture bearing theta  {:.4}", summary.theta_cap);
    println!("p1 (from center)       {:.4}", summary.p1);
    println!("p2 (from capture ring) {:.4}", summary.p2);
    match summary.asymptotic_pct {
        Some(v) => println!("asymptotic capture %   {v:.2}"),
        None => println!("asymptotic capture %   undefined (degenerate chain)"),
    }
    Ok(summary)
}

/// One engagement as stored in the run record; trajectories go to CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RecordSummary {
    pub index: usize,
    pub phi: f64,
    pub outcome: Outcome,
    pub start_state: StartState,
    pub start_pose: Configuration,
    pub t_start: f64,
    pub t_end: f64,
    pub capture_point: Option<CapturePoint>,
    pub breach_point: Option<Point>,
    pub breach_time: Option<f64>,
}

impl From<&EngagementRecord> for RecordSummary {
    fn from(r: &EngagementRecord) -> Self {
        Self {
            index: r.index,
            phi: r.phi,
            outcome: r.outcome,
            start_state: r.start_state,
            start_pose: r.start_pose,
            t_start: r.t_start,
            t_end: r.t_end,
            capture_point: r.capture_point,
            breach_point: r.breach_point,
            breach_time: r.breach_time,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    /// Canonical text of the effective configuration, minus the output
    /// directory.
    pub config: String,
    pub solution: EngagementSolution,
    pub model: MarkovModel,
    pub validation: ValidationReport,
    pub arrival_angles: Vec<f64>,
    pub n_captures: usize,
    pub capture_fraction: f64,
    pub records: Vec<RecordSummary>,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    t: f64,
    agent: &'a str,
    x: f64,
    y: f64,
    heading: f64,
    config_hash: &'a str,
}

fn write_trajectory(path: &Path, agent: &str, traj: &Trajectory, hash: &str) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    for (t, pose) in traj {
        w.serialize(TrajectoryRow {
            t: *t,
            agent,
            x: pose.x,
            y: pose.y,
            heading: pose.heading(),
            config_hash: hash,
        })
        .map_err(csv_io(path))?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_owned(), e))
}

#[derive(Serialize)]
struct BoundaryFile {
    config_hash: String,
    index: usize,
    phi: f64,
    /// Polylines of `[x, y]` vertices.
    boundary: Vec<Vec<[f64; 2]>>,
}

pub fn cmd_simulate(config: &RunConfig) -> CliResult<RunRecord> {
    let started = Instant::now();
    let engine = build_engine(config, true)?;
    let arrivals = ArrivalProcess::new(config.seed, config.arrivals);
    let angles = config.angles.clone().unwrap_or_else(|| arrivals.angles());
    let result = engine.run_angles(&angles, &mut arrivals.branch_rng());
    let hash = config.hash();

    let validation = report_assumptions(&config.params, engine.grid(), &Ok(*engine.solution()));
    let record = RunRecord {
        tool: TOOL.to_owned(),
        version: VERSION.to_owned(),
        config_hash: hash.clone(),
        config: config.run_text(),
        solution: *engine.solution(),
        model: engine.markov_model(),
        validation,
        arrival_angles: angles,
        n_captures: result.n_captures,
        capture_fraction: result.capture_fraction,
        records: result.records.iter().map(RecordSummary::from).collect(),
    };

    let out = &config.out_dir;
    create_dir(out)?;
    write_json(&out.join("run_record.json"), &record)?;
    // The engagement region on ray 0, rotated onto each captured arrival.
    let canonical = head_on_region(&config.params, 0.0, engine.solution().r_d_star, engine.grid())?.boundary;
    for r in &result.records {
        write_trajectory(&out.join(format!("traj_{}_defender.csv", r.index)), "defender", &r.defender_trajectory, &hash)?;
        write_trajectory(&out.join(format!("traj_{}_intruder.csv", r.index)), "intruder", &r.intruder_trajectory, &hash)?;
        if r.outcome == Outcome::Capture {
            let boundary = canonical
                .iter()
                .map(|line| {
                    line.iter()
                        .map(|p| {
                            let q = p.rotated(r.phi);
                            [q.x, q.y]
                        })
                        .collect()
                })
                .collect();
            let file = BoundaryFile {
                config_hash: hash.clone(),
                index: r.index,
                phi: r.phi,
                boundary,
            };
            write_json(&out.join(format!("dominance_boundary_{}.json", r.index)), &file)?;
        }
    }
    write_timing(config, "simulate", started)?;

    for r in &record.records {
        match (r.outcome, r.capture_point, r.breach_point) {
            (Outcome::Capture, Some(c), _) => println!(
                "game {:>4}  phi {:+.3}  capture at ({:.2}, {:.2}) heading {:.3}  t = {:.2}",
                r.index, r.phi, c.x_cap.x, c.x_cap.y, c.psi_cap, r.t_end
            ),
            (_, _, Some(b)) => println!(
                "game {:>4}  phi {:+.3}  breach at ({:.2}, {:.2})  t = {:.2}",
                r.index,
                r.phi,
                b.x,
                b.y,
                r.breach_time.unwrap_or(r.t_end)
            ),
            _ => unreachable!("records carry a capture or a breach point"),
        }
    }
    println!("captured {} of {}", record.n_captures, record.records.len());
    Ok(record)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub config_hash: String,
    pub n_trials: usize,
    pub n_arrivals: usize,
    pub model: MarkovModel,
    pub empirical_mean_pct: Option<f64>,
    pub theory_pct: Option<f64>,
    pub asymptotic_pct: Option<f64>,
    /// Standard error of one trial's capture fraction, in percent.
    pub trial_standard_error_pct: Option<f64>,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    n: usize,
    empirical_mean_pct: f64,
    theory_pct: f64,
    asymptotic_pct: Option<f64>,
    config_hash: &'a str,
}

#[derive(Serialize)]
struct TrialRow<'a> {
    trial: usize,
    fraction: f64,
    config_hash: &'a str,
}

pub fn cmd_montecarlo(config: &RunConfig) -> CliResult<MonteCarloReport> {
    let started = Instant::now();
    let engine = build_engine(config, false)?;
    let summary = monte_carlo_summary(&engine, config.trials, config.arrivals, config.seed)?;
    let hash = config.hash();
    let out = &config.out_dir;
    create_dir(out)?;

    let path = out.join("percentage_curves.csv");
    let mut w = csv_writer(&path)?;
    for (k, (mean, theory)) in summary.mean_curve.iter().zip(&summary.theory_curve).enumerate() {
        w.serialize(CurveRow {
            n: k + 1,
            empirical_mean_pct: *mean,
            theory_pct: *theory,
            asymptotic_pct: summary.asymptotic_pct,
            config_hash: &hash,
        })
        .map_err(csv_io(&path))?;
    }
    w.flush().map_err(|e| CliError::Io(path.clone(), e))?;

    let path = out.join("trials.csv");
    let mut w = csv_writer(&path)?;
    for (k, fraction) in summary.per_trial_fractions.iter().enumerate() {
        w.serialize(TrialRow {
            trial: k,
            fraction: *fraction,
            config_hash: &hash,
        })
        .map_err(csv_io(&path))?;
    }
    w.flush().map_err(|e| CliError::Io(path.clone(), e))?;

    let report = MonteCarloReport {
        config_hash: hash,
        n_trials: summary.n_trials,
        n_arrivals: summary.n_arrivals,
        model: summary.model,
        empirical_mean_pct: summary.mean_curve.last().copied(),
        theory_pct: summary.theory_curve.last().copied(),
        asymptotic_pct: summary.asymptotic_pct,
        trial_standard_error_pct: fraction_standard_error(&summary.model, config.arrivals)
            .ok()
            .map(|se| 100.0 * se),
    };
    write_json(&out.join("montecarlo.json"), &report)?;
    write_timing(config, "montecarlo", started)?;

    println!("p1 {:.4}  p2 {:.4}", report.model.p1, report.model.p2);
    if let (Some(mean), Some(theory)) = (report.empirical_mean_pct, report.theory_pct) {
        println!(
            "capture % after {} games: empirical mean {mean:.2}, theory {theory:.2} ({} trials)",
            report.n_arrivals, report.n_trials
        );
    }
    if let Some(v) = report.asymptotic_pct {
        println!("asymptotic capture %: {v:.2}");
    }
    Ok(report)
}
