//! Time-optimal paths for constant-speed agents with a bounded turn rate.
//!
//! Two problems are solved in closed form:
//!
//! * fixed final heading, over the six classical words `LSL, RSR, LSR, RSL,
//!   RLR, LRL`;
//! * free final heading, over `C`, `CS` (both turn directions) and `CC`
//!   (opposite turns). The `CC` family is what reaches points inside either
//!   initial turning circle.
//!
//! Lengths are in the same units as positions; [`time_to_config`] and
//! [`time_to_point`] divide by the agent speed.

use crate::geometry::{mod_two_pi, wrap_angle, Configuration, Point};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

/// Length tolerance for "on the circle" and "same pose" degeneracies.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Relative slack used when breaking ties between equal-length words.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    speed: f64,
    max_turn_rate: f64,
}

impl Kinematics {
    pub fn new(speed: f64, max_turn_rate: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::InvalidParameter(format!("speed must be > 0, got {speed}")));
        }
        if !(max_turn_rate.is_finite() && max_turn_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "turn rate must be > 0, got {max_turn_rate}"
            )));
        }
        Ok(Self { speed, max_turn_rate })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn max_turn_rate(&self) -> f64 {
        self.max_turn_rate
    }

    /// Minimum turning radius `speed / max_turn_rate`.
    pub fn turning_radius(&self) -> f64 {
        self.speed / self.max_turn_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    LeftArc,
    RightArc,
    Straight,
}

impl SegmentKind {
    fn letter(self) -> char {
        match self {
            SegmentKind::LeftArc => 'L',
            SegmentKind::RightArc => 'R',
            SegmentKind::Straight => 'S',
        }
    }
}

/// One piece of a Dubins path; `length` is arc length, not turning angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub length: f64,
}

/// Advances `pose` along a single segment.
pub fn advance(pose: Configuration, kind: SegmentKind, length: f64, radius: f64) -> Configuration {
    let h = pose.heading();
    let p = pose.position();
    match kind {
        SegmentKind::Straight => Configuration::at(p + Point::from_angle(h) * length, h),
        SegmentKind::LeftArc => {
            let center = p + Point::new(-h.sin(), h.cos()) * radius;
            let h1 = h + length / radius;
            Configuration::at(center + Point::new(h1.sin(), -h1.cos()) * radius, h1)
        }
        SegmentKind::RightArc => {
            let center = p + Point::new(h.sin(), -h.cos()) * radius;
            let h1 = h - length / radius;
            Configuration::at(center + Point::new(-h1.sin(), h1.cos()) * radius, h1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub start: Configuration,
    pub segments: Vec<Segment>,
    pub turning_radius: f64,
}

impl DubinsPath {
    fn from_parts(start: Configuration, radius: f64, parts: &[(SegmentKind, f64)]) -> Self {
        let segments = parts
            .iter()
            .filter(|(_, len)| *len > 0.0)
            .map(|&(kind, length)| Segment { kind, length })
            .collect();
        Self {
            start,
            segments,
            turning_radius: radius,
        }
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Segment letters, e.g. `"LSR"`; empty for the zero path.
    pub fn word(&self) -> String {
        self.segments.iter().map(|s| s.kind.letter()).collect()
    }

    pub fn end(&self) -> Configuration {
        self.segments
            .iter()
            .fold(self.start, |pose, seg| advance(pose, seg.kind, seg.length, self.turning_radius))
    }

    /// Pose after travelling `distance` along the path, clamped to `[0, length]`.
    pub fn pose_at(&self, distance: f64) -> Configuration {
        let mut remaining = distance.max(0.0);
        let mut pose = self.start;
        for seg in &self.segments {
            if remaining <= seg.length {
                return advance(pose, seg.kind, remaining, self.turning_radius);
            }
            pose = advance(pose, seg.kind, seg.length, self.turning_radius);
            remaining -= seg.length;
        }
        pose
    }
}

/// Arcs that come out of `mod_two_pi` a hair below a full turn are really zero.
fn snap_arc(angle: f64) -> f64 {
    let a = mod_two_pi(angle);
    if a > TAU - DEGENERACY_TOL {
        0.0
    } else {
        a
    }
}

/// Word families for the fixed-heading problem, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FixedWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl FixedWord {
    const ALL: [FixedWord; 6] = [
        FixedWord::Lsl,
        FixedWord::Rsr,
        FixedWord::Lsr,
        FixedWord::Rsl,
        FixedWord::Rlr,
        FixedWord::Lrl,
    ];

    fn kinds(self) -> [SegmentKind; 3] {
        use SegmentKind::*;
        match self {
            FixedWord::Lsl => [LeftArc, Straight, LeftArc],
            FixedWord::Rsr => [RightArc, Straight, RightArc],
            FixedWord::Lsr => [LeftArc, Straight, RightArc],
            FixedWord::Rsl => [RightArc, Straight, LeftArc],
            FixedWord::Rlr => [RightArc, LeftArc, RightArc],
            FixedWord::Lrl => [LeftArc, RightArc, LeftArc],
        }
    }

    /// Normalized segment parameters `(t, p, q)` for unit radius, where arcs
    /// are turning angles and the straight part is a length.
    fn params(self, alpha: f64, beta: f64, d: f64) -> Option<[f64; 3]> {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        let cab = (alpha - beta).cos();
        let d2 = d * d;
        match self {
            FixedWord::Lsl => {
                let p_sq = 2.0 + d2 - 2.0 * cab + 2.0 * d * (sa - sb);
                if p_sq < 0.0 {
                    return None;
                }
                let tmp = (cb - ca).atan2(d + sa - sb);
                Some([snap_arc(tmp - alpha), p_sq.sqrt(), snap_arc(beta - tmp)])
            }
            FixedWord::Rsr => {
                let p_sq = 2.0 + d2 - 2.0 * cab + 2.0 * d * (sb - sa);
                if p_sq < 0.0 {
                    return None;
                }
                let tmp = (ca - cb).atan2(d - sa + sb);
                Some([snap_arc(alpha - tmp), p_sq.sqrt(), snap_arc(tmp - beta)])
            }
            FixedWord::Lsr => {
                let p_sq = -2.0 + d2 + 2.0 * cab + 2.0 * d * (sa + sb);
                if p_sq < 0.0 {
                    return None;
                }
                let p = p_sq.sqrt();
                let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
                Some([snap_arc(tmp - alpha), p, snap_arc(tmp - beta)])
            }
            FixedWord::Rsl => {
                let p_sq = -2.0 + d2 + 2.0 * cab - 2.0 * d * (sa + sb);
                if p_sq < 0.0 {
                    return None;
                }
                let p = p_sq.sqrt();
                let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
                Some([snap_arc(alpha - tmp), p, snap_arc(beta - tmp)])
            }
            FixedWord::Rlr => {
                let c = (6.0 - d2 + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
                if c.abs() > 1.0 {
                    return None;
                }
                let phi = (ca - cb).atan2(d - sa + sb);
                let p = mod_two_pi(TAU - c.acos());
                let t = snap_arc(alpha - phi + mod_two_pi(p / 2.0));
                let q = snap_arc(alpha - beta - t + mod_two_pi(p));
                Some([t, p, q])
            }
            FixedWord::Lrl => {
                let c = (6.0 - d2 + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
                if c.abs() > 1.0 {
                    return None;
                }
                let phi = (ca - cb).atan2(d + sa - sb);
                let p = mod_two_pi(TAU - c.acos());
                let t = snap_arc(-alpha - phi + p / 2.0);
                let q = snap_arc(mod_two_pi(beta) - alpha - t + mod_two_pi(p));
                Some([t, p, q])
            }
        }
    }
}

fn same_pose(a: &Configuration, b: &Configuration) -> bool {
    a.position().distance(b.position()) <= DEGENERACY_TOL
        && wrap_angle(a.heading() - b.heading()).abs() <= DEGENERACY_TOL
}

/// Best fixed-heading word and its segment lengths (already scaled by radius).
fn best_fixed(start: &Configuration, goal: &Configuration, radius: f64) -> Option<(FixedWord, [f64; 3])> {
    let delta = goal.position() - start.position();
    let d = delta.norm() / radius;
    let theta = if d > 0.0 { delta.y.atan2(delta.x) } else { 0.0 };
    let alpha = mod_two_pi(start.heading() - theta);
    let beta = mod_two_pi(goal.heading() - theta);

    let mut best: Option<(FixedWord, [f64; 3], f64)> = None;
    for word in FixedWord::ALL {
        if let Some([t, p, q]) = word.params(alpha, beta, d) {
            let total = t + p + q;
            let better = match &best {
                None => true,
                Some((_, _, b)) => total < b - TIE_TOL * b.max(1.0),
            };
            if better {
                best = Some((word, [t * radius, p * radius, q * radius], total));
            }
        }
    }
    best.map(|(w, l, _)| (w, l))
}

/// Shortest path from `start` to `goal` arriving with `goal`'s heading.
///
/// Ties between words of equal length resolve in the order
/// `LSL < RSR < LSR < RSL < RLR < LRL`.
pub fn shortest_path_fixed_heading(start: Configuration, goal: Configuration, radius: f64) -> DubinsPath {
    assert!(radius > 0.0, "turning radius must be positive");
    if same_pose(&start, &goal) {
        return DubinsPath::from_parts(start, radius, &[]);
    }
    let (word, lengths) = best_fixed(&start, &goal, radius).expect("LSL or RSR always exists");
    let kinds = word.kinds();
    DubinsPath::from_parts(
        start,
        radius,
        &[(kinds[0], lengths[0]), (kinds[1], lengths[1]), (kinds[2], lengths[2])],
    )
}

/// Length of [`shortest_path_fixed_heading`] without building the path.
pub fn fixed_heading_length(start: Configuration, goal: Configuration, radius: f64) -> f64 {
    if same_pose(&start, &goal) {
        return 0.0;
    }
    best_fixed(&start, &goal, radius)
        .map(|(_, l)| l.iter().sum())
        .expect("LSL or RSR always exists")
}

#[derive(Debug, Clone, Copy)]
struct FreeSolution {
    first: (SegmentKind, f64),
    second: (SegmentKind, f64),
    length: f64,
}

fn left_center(pose: &Configuration, radius: f64) -> Point {
    let h = pose.heading();
    pose.position() + Point::new(-h.sin(), h.cos()) * radius
}

fn right_center(pose: &Configuration, radius: f64) -> Point {
    let h = pose.heading();
    pose.position() + Point::new(h.sin(), -h.cos()) * radius
}

/// Turn (left or right) then go straight. `None` when the goal is strictly
/// inside that turning circle.
fn turn_then_straight(pose: &Configuration, goal: Point, radius: f64, left: bool) -> Option<FreeSolution> {
    let center = if left {
        left_center(pose, radius)
    } else {
        right_center(pose, radius)
    };
    let v = goal - center;
    let d = v.norm();
    if d < radius - DEGENERACY_TOL {
        return None;
    }
    let straight = (d * d - radius * radius).max(0.0).sqrt();
    let offset = radius.atan2(straight);
    let (kind, arc) = if left {
        (SegmentKind::LeftArc, snap_arc(v.angle() + offset - pose.heading()))
    } else {
        (SegmentKind::RightArc, snap_arc(pose.heading() - (v.angle() - offset)))
    };
    let arc_len = arc * radius;
    Some(FreeSolution {
        first: (kind, arc_len),
        second: (SegmentKind::Straight, straight),
        length: arc_len + straight,
    })
}

/// Turn one way, then the other, ending on `goal`. Both tangent circles are
/// tried and the shorter is kept.
fn turn_then_counter_turn(pose: &Configuration, goal: Point, radius: f64, left_first: bool) -> Option<FreeSolution> {
    let c1 = if left_first {
        left_center(pose, radius)
    } else {
        right_center(pose, radius)
    };
    // second circle center lies 2r from c1 and r from the goal
    let v = goal - c1;
    let d = v.norm();
    if d < radius || d > 3.0 * radius || d == 0.0 {
        return None;
    }
    let along = (d * d + 3.0 * radius * radius) / (2.0 * d);
    let across_sq = 4.0 * radius * radius - along * along;
    if across_sq < 0.0 {
        return None;
    }
    let across = across_sq.sqrt();
    let u = v * (1.0 / d);
    let n = Point::new(-u.y, u.x);

    let mut best: Option<FreeSolution> = None;
    for sign in [1.0, -1.0] {
        let c2 = c1 + u * along + n * (sign * across);
        let contact_dir = (c2 - c1).angle();
        let (first, second) = if left_first {
            let h1 = contact_dir + FRAC_PI_2;
            let h2 = (goal - c2).angle() - FRAC_PI_2;
            (
                (SegmentKind::LeftArc, snap_arc(h1 - pose.heading()) * radius),
                (SegmentKind::RightArc, snap_arc(h1 - h2) * radius),
            )
        } else {
            let h1 = contact_dir - FRAC_PI_2;
            let h2 = (goal - c2).angle() + FRAC_PI_2;
            (
                (SegmentKind::RightArc, snap_arc(pose.heading() - h1) * radius),
                (SegmentKind::LeftArc, snap_arc(h2 - h1) * radius),
            )
        };
        let length = first.1 + second.1;
        if best.is_none_or(|b| length < b.length - TIE_TOL * b.length.max(1.0)) {
            best = Some(FreeSolution { first, second, length });
        }
    }
    best
}

fn best_free(start: &Configuration, goal: Point, radius: f64) -> Option<FreeSolution> {
    if start.position().distance(goal) <= DEGENERACY_TOL {
        return None;
    }
    let candidates = [
        turn_then_straight(start, goal, radius, true),
        turn_then_straight(start, goal, radius, false),
        turn_then_counter_turn(start, goal, radius, true),
        turn_then_counter_turn(start, goal, radius, false),
    ];
    let mut best: Option<FreeSolution> = None;
    for cand in candidates.into_iter().flatten() {
        if best.is_none_or(|b| cand.length < b.length - TIE_TOL * b.length.max(1.0)) {
            best = Some(cand);
        }
    }
    Some(best.expect("the CS or CC family always reaches a point"))
}

/// Shortest path from `start` to a point with unconstrained arrival heading.
/// The arrival tangent is the heading of [`DubinsPath::end`].
pub fn shortest_path_free_heading(start: Configuration, goal: Point, radius: f64) -> DubinsPath {
    assert!(radius > 0.0, "turning radius must be positive");
    match best_free(&start, goal, radius) {
        None => DubinsPath::from_parts(start, radius, &[]),
        Some(sol) => DubinsPath::from_parts(start, radius, &[sol.first, sol.second]),
    }
}

/// Length of [`shortest_path_free_heading`] without building the path.
pub fn free_heading_length(start: Configuration, goal: Point, radius: f64) -> f64 {
    best_free(&start, goal, radius).map_or(0.0, |s| s.length)
}

/// Minimum time to reach `goal` with its heading.
pub fn time_to_config(start: Configuration, goal: Configuration, kin: Kinematics) -> f64 {
    fixed_heading_length(start, goal, kin.turning_radius()) / kin.speed()
}

/// Minimum time to reach a point with any heading.
pub fn time_to_point(start: Configuration, goal: Point, kin: Kinematics) -> f64 {
    free_heading_length(start, goal, kin.turning_radius()) / kin.speed()
}

/// Poses at `t = 0, dt, 2dt, ...` along `path` traversed at `kin.speed()`.
/// The final sample is always the exact endpoint.
pub fn sample_path(path: &DubinsPath, dt: f64, kin: Kinematics) -> Vec<(f64, Configuration)> {
    assert!(dt > 0.0, "dt must be positive");
    let t_end = path.length() / kin.speed();
    let steps = (t_end / dt + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(steps + 2);
    for k in 0..=steps {
        let t = (k as f64 * dt).min(t_end);
        out.push((t, path.pose_at(t * kin.speed())));
    }
    if out.last().is_none_or(|(t, _)| *t < t_end) {
        out.push((t_end, path.end()));
    } else if let Some(last) = out.last_mut() {
        last.1 = path.end();
    }
    out
}
