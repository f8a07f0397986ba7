//! The two optimizations that decide each game.
//!
//! The defender picks the innermost head-on engagement radius whose intruder
//! dominance region still avoids the target ([`solve_critical_radius`]); the
//! set of arrival angles it can reach in time is its guarding arc
//! ([`guarding_arc`]). Once engaged, the intruder picks the point on its
//! dominance boundary that leaves the defender with the smallest guarding arc
//! for the next game ([`solve_capture_point`]).

use crate::dubins::{shortest_path_free_heading, time_to_config, time_to_point, Kinematics};
use crate::geometry::{wrap_angle, Configuration, Point};
use crate::reachability::{capture_free_region, polyline_length, region_intersects_disk, GridSpec, Region};
use crate::{Error, Result};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const DEFAULT_RESOLUTION: usize = 512;
pub const DEFAULT_ARC_SAMPLES: usize = 1440;
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 720;
pub const MIN_ARC_SAMPLES: usize = 360;

/// Bisection tolerance on the engagement radius.
const RADIUS_TOL: f64 = 1e-3;
const PRESCAN_POINTS: usize = 50;
/// Bisection tolerance on guarding-arc endpoints, radians.
const ARC_ENDPOINT_TOL: f64 = 1e-4;
const MEASURE_TIE_TOL: f64 = 1e-6;

/// Game geometry and agent limits. The defender's speed is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub r_t: f64,
    pub rho_t: f64,
    pub rho_a: f64,
    pub nu: f64,
    pub omega_d: f64,
    pub omega_a: f64,
}

impl GameParams {
    /// Target radius 10, sensing annulus 20, intruder sensing 3, speed ratio
    /// 0.8, turn rates 0.5 (defender) and 1.5 (intruder).
    pub const BASELINE: GameParams = GameParams {
        r_t: 10.0,
        rho_t: 20.0,
        rho_a: 3.0,
        nu: 0.8,
        omega_d: 0.5,
        omega_a: 1.5,
    };

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("r_t", self.r_t),
            ("rho_t", self.rho_t),
            ("rho_a", self.rho_a),
            ("nu", self.nu),
            ("omega_d", self.omega_d),
            ("omega_a", self.omega_a),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.nu >= 1.0 {
            return Err(Error::SpeedRatio(self.nu));
        }
        if self.rho_a >= self.rho_t {
            return Err(Error::InvalidParameter(format!(
                "rho_a ({}) must be smaller than rho_t ({})",
                self.rho_a, self.rho_t
            )));
        }
        Ok(())
    }

    pub fn defender_kinematics(&self) -> Kinematics {
        Kinematics::new(1.0, self.omega_d).expect("validated turn rate")
    }

    pub fn intruder_kinematics(&self) -> Kinematics {
        Kinematics::new(self.nu, self.omega_a).expect("validated speed and turn rate")
    }

    /// Outer radius of the sensing annulus, where intruders appear.
    pub fn arrival_radius(&self) -> f64 {
        self.r_t + self.rho_t
    }

    /// Largest possible head-on engagement radius, `r_T + ρ_T − ρ_A`.
    pub fn engagement_span(&self) -> f64 {
        self.r_t + self.rho_t - self.rho_a
    }

    /// Grid covering the whole sensing annulus.
    pub fn grid(&self, resolution: usize) -> Result<GridSpec> {
        GridSpec::new(Point::ORIGIN, self.arrival_radius(), resolution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementSolution {
    pub t_star: f64,
    pub r_d_star: f64,
    /// Intruder travel time to the engagement point; equals `t_star`.
    pub deadline: f64,
    /// False when the feasibility prescan saw more than one sign change.
    pub feasibility_monotone: bool,
}

impl EngagementSolution {
    fn at_time(params: &GameParams, t: f64, monotone: bool) -> Self {
        let r_d_star = params.engagement_span() - params.nu * t;
        Self {
            t_star: t,
            r_d_star,
            deadline: (params.engagement_span() - r_d_star) / params.nu,
            feasibility_monotone: monotone,
        }
    }
}

/// Head-on engagement poses `(ξ_D*, ξ_A*)` on the ray at angle `phi`.
pub fn engagement_configs(phi: f64, r_d: f64, params: &GameParams) -> (Configuration, Configuration) {
    let xi_d = Configuration::at(Point::polar(r_d, phi), phi);
    let xi_a = Configuration::at(Point::polar(r_d + params.rho_a, phi), phi + PI);
    (xi_d, xi_a)
}

/// Capture-free intruder dominance region for a head-on engagement at
/// defender radius `r_d`.
pub fn head_on_region(params: &GameParams, phi: f64, r_d: f64, grid: GridSpec) -> Result<Region> {
    let (xi_d, xi_a) = engagement_configs(phi, r_d, params);
    capture_free_region(
        xi_a,
        params.intruder_kinematics(),
        xi_d,
        params.defender_kinematics(),
        grid,
    )
}

/// Sub-grid of `grid` that just covers the target disk. Its cells coincide
/// with cells of `grid`, so membership inside the target is unchanged while
/// the feasibility test skips most of the annulus.
fn target_window(params: &GameParams, grid: GridSpec) -> GridSpec {
    let h = grid.cell_size();
    let corner = grid.center - Point::new(grid.half_extent, grid.half_extent);
    let reach = params.r_t + 2.0 * h;
    let lo_x = ((-reach - corner.x) / h).floor().max(0.0) as usize;
    let lo_y = ((-reach - corner.y) / h).floor().max(0.0) as usize;
    let hi_x = (((reach - corner.x) / h).ceil() as usize).min(grid.resolution);
    let hi_y = (((reach - corner.y) / h).ceil() as usize).min(grid.resolution);
    let n = hi_x.saturating_sub(lo_x).max(hi_y.saturating_sub(lo_y));
    if n >= grid.resolution {
        return grid;
    }
    let n = n.max(crate::reachability::MIN_RESOLUTION);
    let half = 0.5 * n as f64 * h;
    let center = corner + Point::new(lo_x as f64 * h + half, lo_y as f64 * h + half);
    GridSpec::new(center, half, n).unwrap_or(grid)
}

fn engagement_feasible(params: &GameParams, t: f64, grid: GridSpec) -> Result<bool> {
    let r_d = params.engagement_span() - params.nu * t;
    if r_d <= 0.0 {
        return Ok(false);
    }
    let region = head_on_region(params, 0.0, r_d, target_window(params, grid))?;
    Ok(!region_intersects_disk(&region, Point::ORIGIN, params.r_t))
}

/// Smallest head-on engagement radius whose capture-free dominance region
/// avoids the target. The answer does not depend on the arrival angle, so
/// the search runs on the ray at angle 0.
pub fn solve_critical_radius(params: &GameParams, grid: GridSpec) -> Result<EngagementSolution> {
    params.validate()?;
    let t_max = params.engagement_span() / params.nu;
    let step = t_max / (PRESCAN_POINTS - 1) as f64;
    let scan: Vec<bool> = (0..PRESCAN_POINTS)
        .into_par_iter()
        .map(|k| engagement_feasible(params, k as f64 * step, grid))
        .collect::<Result<_>>()?;

    let Some(last) = scan.iter().rposition(|f| *f) else {
        return Err(Error::NoFeasibleEngagement);
    };
    let monotone = scan[..=last].iter().all(|f| *f);
    if !monotone {
        warn!("engagement feasibility is not monotone in t; using the latest feasible scan point");
    }
    if last == PRESCAN_POINTS - 1 {
        return Ok(EngagementSolution::at_time(params, t_max, monotone));
    }
    let (mut lo, mut hi) = (last as f64 * step, (last + 1) as f64 * step);
    while (hi - lo) * params.nu > RADIUS_TOL {
        let mid = 0.5 * (lo + hi);
        if engagement_feasible(params, mid, grid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EngagementSolution::at_time(params, lo, monotone))
}

/// Defender time to reach the head-on engagement pose for arrival angle `phi`.
pub fn tau(xi_d: Configuration, phi: f64, params: &GameParams, sol: &EngagementSolution) -> f64 {
    let (target, _) = engagement_configs(phi, sol.r_d_star, params);
    time_to_config(xi_d, target, params.defender_kinematics())
}

/// Whether the defender at `xi_d` can make the engagement for `phi`.
pub fn can_engage(xi_d: Configuration, phi: f64, params: &GameParams, sol: &EngagementSolution) -> bool {
    tau(xi_d, phi, params, sol) <= sol.deadline
}

/// Arrival angles the defender can still intercept, as disjoint intervals
/// inside `(-π, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardingArc {
    pub intervals: Vec<(f64, f64)>,
    pub measure: f64,
}

impl GuardingArc {
    pub fn contains(&self, phi: f64) -> bool {
        let phi = wrap_angle(phi);
        self.intervals.iter().any(|(a, b)| phi >= *a && phi <= *b)
    }

    /// Fraction of the circle covered.
    pub fn probability(&self) -> f64 {
        self.measure / TAU
    }
}

pub fn guarding_arc(xi_d: Configuration, params: &GameParams, sol: &EngagementSolution, n_samples: usize) -> GuardingArc {
    let n = n_samples.max(MIN_ARC_SAMPLES);
    let step = TAU / n as f64;
    let angle = |k: usize| -PI + (k + 1) as f64 * step;
    let member = |phi: f64| can_engage(xi_d, phi, params, sol);
    let samples: Vec<bool> = (0..n).map(|k| member(angle(k))).collect();

    // (angle, entering) for every membership change, found by bisection
    let mut edges: Vec<(f64, bool)> = Vec::new();
    for k in 0..n {
        let next = (k + 1) % n;
        if samples[k] == samples[next] {
            continue;
        }
        let (mut lo, mut hi) = (angle(k), angle(k) + step);
        while hi - lo > ARC_ENDPOINT_TOL {
            let mid = 0.5 * (lo + hi);
            if member(mid) == samples[k] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edges.push((0.5 * (lo + hi), samples[next]));
    }

    if edges.is_empty() {
        return if samples[0] {
            GuardingArc {
                intervals: vec![(-PI, PI)],
                measure: TAU,
            }
        } else {
            GuardingArc {
                intervals: Vec::new(),
                measure: 0.0,
            }
        };
    }

    let mut intervals = Vec::new();
    let mut measure = 0.0;
    let first_enter = edges.iter().position(|e| e.1).expect("changes alternate");
    let m = edges.len();
    for s in 0..m {
        let (start, entering) = edges[(first_enter + s) % m];
        if !entering {
            continue;
        }
        let (end, _) = edges[(first_enter + s + 1) % m];
        let (a, b) = (wrap_angle(start), wrap_angle(end));
        let len = (b - a).rem_euclid(TAU);
        measure += len;
        if a <= b {
            intervals.push((a, b));
        } else {
            intervals.push((a, PI));
            intervals.push((-PI, b));
        }
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    GuardingArc { intervals, measure }
}

/// Which of the two mirror-image capture points the intruder steers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Capture point at a larger polar angle than the arrival ray.
    Ccw,
    /// Capture point at a smaller polar angle than the arrival ray.
    Cw,
}

impl Branch {
    pub fn mirror(self) -> Branch {
        match self {
            Branch::Ccw => Branch::Cw,
            Branch::Cw => Branch::Ccw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapturePoint {
    pub x_cap: Point,
    /// Defender heading on arrival at `x_cap`.
    pub psi_cap: f64,
    pub r_cap: f64,
    /// `∠x_cap − psi_cap`, wrapped.
    pub theta_cap: f64,
    /// Guarding-arc measure from the post-capture pose.
    pub arc_measure: f64,
    /// Intruder time from its engagement pose to `x_cap`.
    pub intercept_time: f64,
    /// Defender time from its engagement pose to `x_cap`.
    pub defender_time: f64,
    pub branch: Branch,
}

impl CapturePoint {
    /// Time from engagement to capture: the later of the two arrivals.
    pub fn capture_delay(&self) -> f64 {
        self.intercept_time.max(self.defender_time)
    }

    pub fn defender_pose(&self) -> Configuration {
        Configuration::at(self.x_cap, self.psi_cap)
    }

    /// The same capture rotated about the target center.
    pub fn rotated(&self, angle: f64) -> Self {
        let x_cap = self.x_cap.rotated(angle);
        Self {
            x_cap,
            psi_cap: wrap_angle(self.psi_cap + angle),
            ..*self
        }
    }
}

/// `n` points spaced evenly by arc length along a polyline.
fn resample(line: &[Point], n: usize) -> Vec<Point> {
    let total = polyline_length(line);
    if total == 0.0 || n == 0 {
        return Vec::new();
    }
    let closed = line.first() == line.last();
    let spacing = if closed { total / n as f64 } else { total / (n.max(2) - 1) as f64 };
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..n {
        let s = (k as f64 * spacing).min(total);
        while seg + 1 < line.len() - 1 && seg_start + line[seg].distance(line[seg + 1]) < s {
            seg_start += line[seg].distance(line[seg + 1]);
            seg += 1;
        }
        let len = line[seg].distance(line[seg + 1]);
        let t = if len > 0.0 { ((s - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(line[seg] + (line[seg + 1] - line[seg]) * t);
    }
    out
}

/// Capture point chosen by the intruder after a head-on engagement on the
/// ray `phi`: the dominance-boundary point that minimizes the defender's next
/// guarding arc, restricted to one side of the engagement axis.
#[allow(clippy::too_many_arguments)]
pub fn solve_capture_point(
    phi: f64,
    params: &GameParams,
    sol: &EngagementSolution,
    grid: GridSpec,
    n_boundary: usize,
    n_arc_samples: usize,
    branch: Branch,
) -> Result<CapturePoint> {
    let (xi_d, xi_a) = engagement_configs(phi, sol.r_d_star, params);
    let kin_d = params.defender_kinematics();
    let kin_a = params.intruder_kinematics();
    let region = head_on_region(params, phi, sol.r_d_star, grid)?;
    let line = region.main_boundary().ok_or(Error::NoBoundary)?;
    let points = resample(line, n_boundary);
    if points.is_empty() {
        return Err(Error::NoBoundary);
    }

    let on_branch = |p: &Point| {
        let rel = wrap_angle(p.angle() - phi);
        match branch {
            Branch::Ccw => rel > 0.0,
            Branch::Cw => rel < 0.0,
        }
    };
    let scored: Vec<(Point, f64, f64, f64)> = points
        .par_iter()
        .filter(|p| on_branch(p))
        .map(|&x| {
            let psi = shortest_path_free_heading(xi_d, x, kin_d.turning_radius()).end().heading();
            let arc = guarding_arc(Configuration::at(x, psi), params, sol, n_arc_samples);
            (x, psi, arc.measure, wrap_angle(x.angle() - phi))
        })
        .collect();

    let best = scored
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.2 < a.2 - MEASURE_TIE_TOL || ((b.2 - a.2).abs() <= MEASURE_TIE_TOL && b.3 < a.3) {
                b
            } else {
                a
            }
        })
        .ok_or(Error::NoBoundary)?;

    let (x_cap, psi_cap, arc_measure, _) = best;
    Ok(CapturePoint {
        x_cap,
        psi_cap,
        r_cap: x_cap.norm(),
        theta_cap: wrap_angle(x_cap.angle() - psi_cap),
        arc_measure,
        intercept_time: time_to_point(xi_a, x_cap, kin_a),
        defender_time: time_to_point(xi_d, x_cap, kin_d),
        branch,
    })
}

/// Single-game capture probabilities from the target center (`p1`) and from
/// the capture circle (`p2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureProbabilities {
    pub p1: f64,
    pub p2: f64,
}

pub fn capture_probabilities(
    params: &GameParams,
    sol: &EngagementSolution,
    grid: GridSpec,
    n_boundary: usize,
    n_arc_samples: usize,
    branch: Branch,
) -> Result<CaptureProbabilities> {
    let center = guarding_arc(Configuration::new(0.0, 0.0, 0.0), params, sol, n_arc_samples);
    let cap = solve_capture_point(0.0, params, sol, grid, n_boundary, n_arc_samples, branch)?;
    Ok(CaptureProbabilities {
        p1: center.probability(),
        p2: cap.arc_measure / TAU,
    })
}
