//! The sequential game loop.
//!
//! Each intruder appears on the outer sensing boundary at a uniform random
//! angle and heads for the target center. If the defender can reach the
//! head-on engagement pose for that angle by the deadline it engages and
//! captures on the capture circle; otherwise it concedes the breach and
//! returns to the center. The next intruder appears once both agents are done.

use crate::dubins::{sample_path, shortest_path_fixed_heading, shortest_path_free_heading, Kinematics};
use crate::analytics::MarkovModel;
use crate::engagement::{
    can_engage, engagement_configs, guarding_arc, head_on_region, solve_capture_point, solve_critical_radius, Branch,
    CapturePoint, EngagementSolution, GameParams, DEFAULT_ARC_SAMPLES, DEFAULT_BOUNDARY_SAMPLES,
};
use crate::geometry::{wrap_angle, Configuration, Point};
use crate::reachability::{region_max_norm, GridSpec};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const DEFAULT_DT: f64 = 0.05;
const HEAD_ON_TOL: f64 = 1e-6;
/// Stream of the arrival seed that drives capture-branch coins.
const BRANCH_STREAM: u64 = 1;

/// Seeded source of independent, uniform arrival angles on `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    pub seed: u64,
    pub count: usize,
}

impl ArrivalProcess {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count }
    }

    pub fn angles(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count).map(|_| draw_angle(&mut rng)).collect()
    }

    /// Generator for the capture-branch coins, independent of the angles.
    pub fn branch_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(BRANCH_STREAM);
        rng
    }
}

/// `u ∈ [0, 1)` maps to `π − 2πu ∈ (−π, π]`.
fn draw_angle<R: Rng>(rng: &mut R) -> f64 {
    PI - TAU * rng.gen::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Feasible engagement exists and its region stays inside the sensing
    /// disk: `max ‖x‖ ≤ r_T + ρ_T − ρ_A`.
    pub assumption1: AssumptionCheck,
    /// Return-to-center time bound `ρ̂ + (π + atan m)/ω_D ≤ ρ_T/ν`.
    pub assumption2: AssumptionCheck,
    /// Solver message when no feasible engagement exists.
    pub assumption1_error: Option<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.assumption1.pass && self.assumption2.pass
    }
}

pub fn assumption2(params: &GameParams) -> AssumptionCheck {
    let rho_hat = params.engagement_span();
    let m = 2.0 * rho_hat * params.omega_d / (rho_hat * rho_hat - 1.0);
    let lhs = rho_hat + (PI + m.atan()) / params.omega_d;
    let rhs = params.rho_t / params.nu;
    AssumptionCheck { pass: lhs <= rhs, lhs, rhs }
}

/// Report-only check of both standing assumptions; never aborts.
pub fn validate_assumptions(params: &GameParams, grid: GridSpec) -> ValidationReport {
    report_assumptions(params, grid, &solve_critical_radius(params, grid))
}

/// As [`validate_assumptions`], reusing an existing critical-radius solve.
pub fn report_assumptions(
    params: &GameParams,
    grid: GridSpec,
    solved: &Result<EngagementSolution>,
) -> ValidationReport {
    let rhs = params.engagement_span();
    let a1 = solved
        .clone()
        .and_then(|sol| head_on_region(params, 0.0, sol.r_d_star, grid))
        .and_then(|region| region_max_norm(&region));
    let (assumption1, assumption1_error) = match a1 {
        Ok(lhs) => (AssumptionCheck { pass: lhs <= rhs, lhs, rhs }, None),
        Err(e) => (
            AssumptionCheck {
                pass: false,
                lhs: f64::NAN,
                rhs,
            },
            Some(e.to_string()),
        ),
    };
    ValidationReport {
        assumption1,
        assumption2: assumption2(params),
        assumption1_error,
    }
}

/// Defender pointing at the intruder and the intruder pointing back.
pub fn is_head_on(xi_d: Configuration, xi_a: Configuration) -> Result<bool> {
    let rel = xi_a.position() - xi_d.position();
    if rel.norm() == 0.0 {
        return Err(Error::Collocated);
    }
    let facing = wrap_angle(xi_d.heading() - rel.angle()).abs() <= HEAD_ON_TOL;
    let opposed = wrap_angle(xi_a.heading() - xi_d.heading() - PI).abs() <= HEAD_ON_TOL;
    Ok(facing && opposed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Capture,
    Breach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    Center,
    CaptureCircle,
}

/// How the intruder's choice between the two mirror capture points is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// Fair coin per capture from the seeded branch stream.
    Random,
    Fixed(Branch),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub n_boundary: usize,
    pub n_arc_samples: usize,
    pub dt: f64,
    pub record_trajectories: bool,
    pub branch_policy: BranchPolicy,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            n_boundary: DEFAULT_BOUNDARY_SAMPLES,
            n_arc_samples: DEFAULT_ARC_SAMPLES,
            dt: DEFAULT_DT,
            record_trajectories: true,
            branch_policy: BranchPolicy::Random,
        }
    }
}

pub type Trajectory = Vec<(f64, Configuration)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementRecord {
    pub index: usize,
    pub phi: f64,
    pub outcome: Outcome,
    pub start_state: StartState,
    pub start_pose: Configuration,
    pub t_start: f64,
    /// Capture instant, or the later of breach and defender return.
    pub t_end: f64,
    pub capture_point: Option<CapturePoint>,
    pub breach_point: Option<Point>,
    pub breach_time: Option<f64>,
    pub defender_trajectory: Trajectory,
    pub intruder_trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub records: Vec<EngagementRecord>,
    pub n_captures: usize,
    pub capture_fraction: f64,
}

impl SequenceResult {
    fn from_records(records: Vec<EngagementRecord>) -> Self {
        let n_captures = records.iter().filter(|r| r.outcome == Outcome::Capture).count();
        let capture_fraction = n_captures as f64 / records.len().max(1) as f64;
        Self {
            records,
            n_captures,
            capture_fraction,
        }
    }
}

/// Solved game ready to play. Capture points are computed once on the ray
/// at angle 0 and rotated onto each arrival ray.
#[derive(Debug, Clone)]
pub struct GameEngine {
    params: GameParams,
    grid: GridSpec,
    solution: EngagementSolution,
    options: EngineOptions,
    ccw: CapturePoint,
    cw: CapturePoint,
}

impl GameEngine {
    pub fn new(params: GameParams, grid: GridSpec, options: EngineOptions) -> Result<Self> {
        let solution = solve_critical_radius(&params, grid)?;
        Self::with_solution(params, grid, solution, options)
    }

    pub fn with_solution(
        params: GameParams,
        grid: GridSpec,
        solution: EngagementSolution,
        options: EngineOptions,
    ) -> Result<Self> {
        if !(options.dt.is_finite() && options.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", options.dt)));
        }
        let solve = |branch| {
            solve_capture_point(
                0.0,
                &params,
                &solution,
                grid,
                options.n_boundary,
                options.n_arc_samples,
                branch,
            )
        };
        Ok(Self {
            params,
            grid,
            solution,
            options,
            ccw: solve(Branch::Ccw)?,
            cw: solve(Branch::Cw)?,
        })
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn solution(&self) -> &EngagementSolution {
        &self.solution
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn with_trajectories(mut self, record: bool) -> Self {
        self.options.record_trajectories = record;
        self
    }

    /// Single-game capture probabilities: `p1` from the target center, `p2`
    /// from the capture circle.
    pub fn markov_model(&self) -> MarkovModel {
        let center = guarding_arc(Configuration::new(0.0, 0.0, 0.0), &self.params, &self.solution, self.options.n_arc_samples);
        MarkovModel {
            p1: center.probability(),
            p2: self.ccw.arc_measure / TAU,
        }
    }

    /// Capture point on the arrival ray `phi`.
    pub fn capture_point(&self, phi: f64, branch: Branch) -> CapturePoint {
        match branch {
            Branch::Ccw => self.ccw,
            Branch::Cw => self.cw,
        }
        .rotated(phi)
    }

    fn pick_branch<R: Rng>(&self, rng: &mut R) -> Branch {
        match self.options.branch_policy {
            BranchPolicy::Random => {
                if rng.gen_bool(0.5) {
                    Branch::Ccw
                } else {
                    Branch::Cw
                }
            }
            BranchPolicy::Fixed(b) => b,
        }
    }

    /// Plays one intruder. Returns the record and the defender's pose at the
    /// start of the next game.
    pub fn run_single_engagement<R: Rng>(
        &self,
        index: usize,
        xi_d: Configuration,
        start_state: StartState,
        phi: f64,
        t_start: f64,
        rng: &mut R,
    ) -> (EngagementRecord, Configuration) {
        let p = &self.params;
        let sol = &self.solution;
        let phi = wrap_angle(phi);
        let kin_d = p.defender_kinematics();
        let kin_a = p.intruder_kinematics();
        let arrival = Configuration::at(Point::polar(p.arrival_radius(), phi), phi + PI);
        let record = self.options.record_trajectories;

        if can_engage(xi_d, phi, p, sol) {
            let cap = self.capture_point(phi, self.pick_branch(rng));
            let t_engage = t_start + sol.deadline;
            // x_cap comes from a sampled boundary, so the two arrivals can
            // differ by about one cell; capture is when both are there.
            let t_end = t_engage + cap.capture_delay();
            let (mut defender_trajectory, mut intruder_trajectory) = (Vec::new(), Vec::new());
            if record {
                let (xi_d_star, xi_a_star) = engagement_configs(phi, sol.r_d_star, p);
                let dt = self.options.dt;
                let to_ring = shortest_path_fixed_heading(xi_d, xi_d_star, kin_d.turning_radius());
                push_path(&mut defender_trajectory, &to_ring, dt, kin_d, t_start);
                hold(&mut defender_trajectory, xi_d_star, t_engage, dt);
                let pursue = shortest_path_free_heading(xi_d_star, cap.x_cap, kin_d.turning_radius());
                push_path(&mut defender_trajectory, &pursue, dt, kin_d, t_engage);
                hold(&mut defender_trajectory, cap.defender_pose(), t_end, dt);

                let inbound = shortest_path_fixed_heading(arrival, xi_a_star, kin_a.turning_radius());
                push_path(&mut intruder_trajectory, &inbound, dt, kin_a, t_start);
                let escape = shortest_path_free_heading(xi_a_star, cap.x_cap, kin_a.turning_radius());
                push_path(&mut intruder_trajectory, &escape, dt, kin_a, t_engage);
                hold(&mut intruder_trajectory, escape.end(), t_end, dt);
            }
            let next = cap.defender_pose();
            let rec = EngagementRecord {
                index,
                phi,
                outcome: Outcome::Capture,
                start_state,
                start_pose: xi_d,
                t_start,
                t_end,
                capture_point: Some(cap),
                breach_point: None,
                breach_time: None,
                defender_trajectory,
                intruder_trajectory,
            };
            (rec, next)
        } else {
            let breach_point = Point::polar(p.r_t, phi);
            let breach_time = t_start + p.rho_t / p.nu;
            let home = shortest_path_free_heading(xi_d, Point::ORIGIN, kin_d.turning_radius());
            let t_home = t_start + home.length() / kin_d.speed();
            let t_end = breach_time.max(t_home);
            let next = home.end();
            let (mut defender_trajectory, mut intruder_trajectory) = (Vec::new(), Vec::new());
            if record {
                let dt = self.options.dt;
                push_path(&mut defender_trajectory, &home, dt, kin_d, t_start);
                hold(&mut defender_trajectory, next, t_end, dt);
                let inbound = shortest_path_fixed_heading(
                    arrival,
                    Configuration::at(breach_point, phi + PI),
                    kin_a.turning_radius(),
                );
                push_path(&mut intruder_trajectory, &inbound, dt, kin_a, t_start);
                hold(&mut intruder_trajectory, inbound.end(), t_end, dt);
            }
            let rec = EngagementRecord {
                index,
                phi,
                outcome: Outcome::Breach,
                start_state,
                start_pose: xi_d,
                t_start,
                t_end,
                capture_point: None,
                breach_point: Some(breach_point),
                breach_time: Some(breach_time),
                defender_trajectory,
                intruder_trajectory,
            };
            (rec, next)
        }
    }

    /// Plays the given arrival angles in order from a defender at the
    /// target center (heading 0) at time 0.
    pub fn run_angles<R: Rng>(&self, angles: &[f64], rng: &mut R) -> SequenceResult {
        let mut pose = Configuration::new(0.0, 0.0, 0.0);
        let mut state = StartState::Center;
        let mut t = 0.0;
        let mut records = Vec::with_capacity(angles.len());
        for (k, &phi) in angles.iter().enumerate() {
            let (rec, next) = self.run_single_engagement(k + 1, pose, state, phi, t, rng);
            state = match rec.outcome {
                Outcome::Capture => StartState::CaptureCircle,
                Outcome::Breach => StartState::Center,
            };
            t = rec.t_end;
            pose = next;
            records.push(rec);
        }
        SequenceResult::from_records(records)
    }

    /// Random arrivals drawn from `seed`.
    pub fn run_sequence(&self, n_arrivals: usize, seed: u64) -> SequenceResult {
        let arrivals = ArrivalProcess::new(seed, n_arrivals);
        self.run_angles(&arrivals.angles(), &mut arrivals.branch_rng())
    }
}

/// Appends samples of `path` shifted to start at `t0`, skipping a sample
/// that would repeat the previous timestamp.
fn push_path(out: &mut Trajectory, path: &crate::dubins::DubinsPath, dt: f64, kin: Kinematics, t0: f64) {
    for (t, pose) in sample_path(path, dt, kin) {
        let t = t0 + t;
        if out.last().is_some_and(|(last, _)| *last >= t) {
            continue;
        }
        out.push((t, pose));
    }
}

/// Stationary samples at `pose` every `dt` up to and including `until`.
fn hold(out: &mut Trajectory, pose: Configuration, until: f64, dt: f64) {
    let Some(&(mut t, _)) = out.last() else {
        return;
    };
    while t + dt < until {
        t += dt;
        out.push((t, pose));
    }
    if t < until {
        out.push((until, pose));
    }
}
