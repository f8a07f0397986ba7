//! Reference computations that do not share code paths with the library.
//!
//! * Fixed heading: tangent-line and tangent-circle constructions built
//!   directly from turning-circle centers, with every candidate verified by
//!   forward integration of the unicycle model.
//! * Free heading: bang-bang enumeration. The first arc angle is swept on a
//!   dense grid in both turn directions; the second piece (straight or
//!   counter-turn) is located by bracketing sign changes of its miss
//!   function and interpolating.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Clone, Copy, Debug)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

fn m2pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > TAU - 1e-9 {
        0.0
    } else {
        w
    }
}

fn ang(x: f64, y: f64) -> f64 {
    y.atan2(x)
}

/// Forward-integrates controls `(turn, length)` with small Euler steps.
/// `turn` is +1 left, -1 right, 0 straight.
pub fn integrate(start: Pose, radius: f64, pieces: &[(i32, f64)], step: f64) -> Pose {
    let mut p = start;
    for &(turn, len) in pieces {
        let n = (len / step).ceil().max(1.0) as usize;
        let ds = len / n as f64;
        for _ in 0..n {
            // midpoint rule on heading keeps the error second order
            let hm = p.h + 0.5 * turn as f64 * ds / radius;
            p.x += ds * hm.cos();
            p.y += ds * hm.sin();
            p.h += turn as f64 * ds / radius;
        }
    }
    p
}

fn lc(p: Pose, r: f64) -> (f64, f64) {
    (p.x - r * p.h.sin(), p.y + r * p.h.cos())
}

fn rc(p: Pose, r: f64) -> (f64, f64) {
    (p.x + r * p.h.sin(), p.y - r * p.h.cos())
}

/// All geometric fixed-heading candidates as `(word, pieces)`.
pub fn fixed_candidates(s: Pose, g: Pose, r: f64) -> Vec<(&'static str, Vec<(i32, f64)>)> {
    let mut out = Vec::new();
    let (sl, sr, gl, gr) = (lc(s, r), rc(s, r), lc(g, r), rc(g, r));

    // LSL / RSR: outer tangents between equal circles
    for (word, c0, c1, turn) in [("LSL", sl, gl, 1), ("RSR", sr, gr, -1)] {
        let (vx, vy) = (c1.0 - c0.0, c1.1 - c0.1);
        let len = vx.hypot(vy);
        let th = if len > 0.0 { ang(vx, vy) } else { s.h };
        let (a1, a2) = if turn == 1 {
            (m2pi(th - s.h), m2pi(g.h - th))
        } else {
            (m2pi(s.h - th), m2pi(th - g.h))
        };
        out.push((word, vec![(turn, a1 * r), (0, len), (turn, a2 * r)]));
    }
    // LSR / RSL: inner tangents
    for (word, c0, c1, t0, t1) in [("LSR", sl, gr, 1, -1), ("RSL", sr, gl, -1, 1)] {
        let (vx, vy) = (c1.0 - c0.0, c1.1 - c0.1);
        let dd = vx.hypot(vy);
        if dd < 2.0 * r {
            continue;
        }
        let len = (dd * dd - 4.0 * r * r).sqrt();
        let th = if t0 == 1 {
            ang(vx, vy) + (2.0 * r).atan2(len)
        } else {
            ang(vx, vy) - (2.0 * r).atan2(len)
        };
        let (a1, a2) = if t0 == 1 {
            (m2pi(th - s.h), m2pi(th - g.h))
        } else {
            (m2pi(s.h - th), m2pi(g.h - th))
        };
        out.push((word, vec![(t0, a1 * r), (0, len), (t1, a2 * r)]));
    }
    // LRL / RLR: middle circle tangent to both end circles
    for (word, c0, c1, t) in [("LRL", sl, gl, 1), ("RLR", sr, gr, -1)] {
        let (vx, vy) = (c1.0 - c0.0, c1.1 - c0.1);
        let dd = vx.hypot(vy);
        if dd > 4.0 * r || dd == 0.0 {
            continue;
        }
        let half = dd / 2.0;
        let off = (4.0 * r * r - half * half).max(0.0).sqrt();
        let (ux, uy) = (vx / dd, vy / dd);
        for sgn in [1.0, -1.0] {
            let cm = (c0.0 + ux * half - uy * off * sgn, c0.1 + uy * half + ux * off * sgn);
            let d0 = ang(cm.0 - c0.0, cm.1 - c0.1);
            let d1 = ang(c1.0 - cm.0, c1.1 - cm.1);
            let pieces = if t == 1 {
                let h1 = d0 + FRAC_PI_2;
                let h2 = d1 - FRAC_PI_2;
                vec![
                    (1, m2pi(h1 - s.h) * r),
                    (-1, m2pi(h1 - h2) * r),
                    (1, m2pi(g.h - h2) * r),
                ]
            } else {
                let h1 = d0 - FRAC_PI_2;
                let h2 = d1 + FRAC_PI_2;
                vec![
                    (-1, m2pi(s.h - h1) * r),
                    (1, m2pi(h2 - h1) * r),
                    (-1, m2pi(h2 - g.h) * r),
                ]
            };
            out.push((word, pieces));
        }
    }
    out
}

fn pose_err(a: Pose, b: Pose) -> f64 {
    let dh = (a.h - b.h).rem_euclid(TAU);
    let dh = dh.min(TAU - dh);
    (a.x - b.x).hypot(a.y - b.y) + dh
}

/// Shortest verified fixed-heading length. Candidates whose integrated
/// endpoint misses the goal by more than `tol` are discarded.
pub fn fixed_length(s: Pose, g: Pose, r: f64, tol: f64) -> f64 {
    if (s.x - g.x).hypot(s.y - g.y) < 1e-12 && pose_err(s, g) < 1e-12 {
        return 0.0;
    }
    fixed_candidates(s, g, r)
        .into_iter()
        .filter(|(_, pieces)| pose_err(integrate(s, r, pieces, r * 1e-3), g) < tol)
        .map(|(_, pieces)| pieces.iter().map(|p| p.1).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn after_arc(s: Pose, r: f64, turn: i32, angle: f64) -> Pose {
    let (cx, cy) = if turn == 1 { lc(s, r) } else { rc(s, r) };
    let h = s.h + turn as f64 * angle;
    if turn == 1 {
        Pose { x: cx + r * h.sin(), y: cy - r * h.cos(), h }
    } else {
        Pose { x: cx - r * h.sin(), y: cy + r * h.cos(), h }
    }
}

/// Free-heading minimum length by bang-bang enumeration with `n` samples of
/// the first arc angle per turn direction.
pub fn free_length(s: Pose, gx: f64, gy: f64, r: f64, n: usize) -> f64 {
    if (s.x - gx).hypot(s.y - gy) < 1e-12 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for turn in [1, -1] {
        // f: lateral miss of the ray after the first arc (CS family)
        // g: radial miss from the counter-turn circle (CC family)
        let eval = |a: f64| {
            let p = after_arc(s, r, turn, a);
            let (dx, dy) = (gx - p.x, gy - p.y);
            let along = dx * p.h.cos() + dy * p.h.sin();
            let lateral = -dx * p.h.sin() + dy * p.h.cos();
            let (cx, cy) = if turn == 1 { rc(p, r) } else { lc(p, r) };
            let radial = (gx - cx).hypot(gy - cy) - r;
            (p, along, lateral, radial)
        };
        let da = TAU / n as f64;
        let mut prev = eval(0.0);
        for k in 1..=n {
            let a1 = k as f64 * da;
            let cur = eval(a1);
            let a0 = a1 - da;
            // CS: lateral changes sign with the goal ahead
            if prev.2 == 0.0 || prev.2.signum() != cur.2.signum() {
                let w = if prev.2 == cur.2 { 0.0 } else { prev.2 / (prev.2 - cur.2) };
                let a = a0 + w * da;
                let (_, along, _, _) = eval(a);
                if along >= 0.0 {
                    best = best.min(a * r + along);
                }
            }
            // CC: goal crosses the counter-turn circle
            if prev.3 == 0.0 || prev.3.signum() != cur.3.signum() {
                let w = if prev.3 == cur.3 { 0.0 } else { prev.3 / (prev.3 - cur.3) };
                let a = a0 + w * da;
                let (p, _, _, _) = eval(a);
                let (cx, cy) = if turn == 1 { rc(p, r) } else { lc(p, r) };
                // heading on the counter-turn circle at the goal
                let hg = if turn == 1 {
                    ang(gx - cx, gy - cy) - FRAC_PI_2
                } else {
                    ang(gx - cx, gy - cy) + FRAC_PI_2
                };
                let a2 = if turn == 1 { m2pi(p.h - hg) } else { m2pi(hg - p.h) };
                best = best.min((a + a2) * r);
            }
            prev = cur;
        }
    }
    best
}

/// Integrates an arbitrary bang-bang schedule against the unicycle model
/// with forward Euler at step `dt`; returns poses at every step.
pub fn euler_trace(start: Pose, speed: f64, omega: f64, controls: &[(i32, f64)], dt: f64) -> Vec<(f64, Pose)> {
    let mut out = vec![(0.0, start)];
    let mut p = start;
    let mut t = 0.0;
    for &(turn, dur) in controls {
        let n = (dur / dt).round().max(0.0) as usize;
        let step = if n > 0 { dur / n as f64 } else { 0.0 };
        for _ in 0..n {
            p.x += speed * p.h.cos() * step;
            p.y += speed * p.h.sin() * step;
            p.h += turn as f64 * omega * step;
            t += step;
            out.push((t, p));
        }
    }
    out
}

pub const HALF_TURN: f64 = PI;
