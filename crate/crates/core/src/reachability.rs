//! Grid-backed reachable sets and dominance regions.
//!
//! Every cell value is an exact closed-form Dubins time evaluated at the cell
//! center, so there is no propagation error to tune. Region boundaries come
//! from linear-interpolation contouring (marching squares) of a signed level
//! field that is non-positive inside the region.

use crate::dubins::{shortest_path_free_heading, time_to_point, Kinematics};
use crate::geometry::{Configuration, Point};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{self, Write};

pub const MIN_RESOLUTION: usize = 16;

/// Square sampling grid. Samples sit at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: Point,
    pub half_extent: f64,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(center: Point, half_extent: f64, resolution: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid half extent must be > 0, got {half_extent}"
            )));
        }
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be >= {MIN_RESOLUTION}, got {resolution}"
            )));
        }
        Ok(Self {
            center,
            half_extent,
            resolution,
        })
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_extent / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        let h = self.cell_size();
        Point::new(
            self.center.x - self.half_extent + (i as f64 + 0.5) * h,
            self.center.y - self.half_extent + (j as f64 + 0.5) * h,
        )
    }

    pub fn center_of(&self, index: usize) -> Point {
        self.cell_center(index % self.resolution, index / self.resolution)
    }

    /// Cell that contains `p`, if it lies on the grid.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let h = self.cell_size();
        let fx = (p.x - (self.center.x - self.half_extent)) / h;
        let fy = (p.y - (self.center.y - self.half_extent)) / h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        (i < self.resolution && j < self.resolution).then_some((i, j))
    }
}

/// Minimum arrival time from `source` at every cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub source: Configuration,
    pub kin: Kinematics,
}

impl TimeField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

pub fn time_field(source: Configuration, kin: Kinematics, grid: GridSpec) -> TimeField {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| time_to_point(source, grid.center_of(k), kin))
        .collect();
    TimeField {
        grid,
        values,
        source,
        kin,
    }
}

/// A set of grid cells plus its contour.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub grid: GridSpec,
    pub membership: Vec<bool>,
    /// Signed field the boundary was contoured from (`<= 0` inside).
    pub level: Vec<f64>,
    /// Counter-clockwise polylines; closed ones repeat their first vertex.
    pub boundary: Vec<Vec<Point>>,
}

impl Region {
    fn from_level(grid: GridSpec, level: Vec<f64>, forced: Option<Point>) -> Self {
        let mut membership: Vec<bool> = level.iter().map(|v| *v <= 0.0).collect();
        if let Some((i, j)) = forced.and_then(|p| grid.locate(p)) {
            membership[grid.index(i, j)] = true;
        }
        let boundary = contour(&grid, &level);
        Self {
            grid,
            membership,
            level,
            boundary,
        }
    }

    pub fn member_count(&self) -> usize {
        self.membership.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.member_count() == 0
    }

    pub fn area(&self) -> f64 {
        let h = self.grid.cell_size();
        self.member_count() as f64 * h * h
    }

    pub fn contains_cell(&self, i: usize, j: usize) -> bool {
        self.membership[self.grid.index(i, j)]
    }

    pub fn member_centers(&self) -> impl Iterator<Item = Point> + '_ {
        self.membership
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(k, _)| self.grid.center_of(k))
    }

    /// Longest boundary polyline, which for the regions built here is the
    /// outer contour.
    pub fn main_boundary(&self) -> Option<&[Point]> {
        self.boundary
            .iter()
            .max_by(|a, b| polyline_length(a).total_cmp(&polyline_length(b)))
            .map(Vec::as_slice)
    }

    /// Boundary polylines as a JSON array of arrays of `[x, y]` pairs.
    pub fn boundary_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.boundary
                .iter()
                .map(|line| serde_json::json!(line.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>()))
                .collect(),
        )
    }
}

pub fn polyline_length(line: &[Point]) -> f64 {
    line.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Points `t ≤ T` from `source`. The cell holding the source is always a
/// member, so `T = 0` yields exactly that cell.
pub fn reach_set(source: Configuration, kin: Kinematics, horizon: f64, grid: GridSpec) -> Region {
    let field = time_field(source, kin, grid);
    let level = field.values.iter().map(|t| t - horizon).collect();
    Region::from_level(grid, level, Some(source.position()))
}

/// Both agents' time fields for a dominance query.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceFields {
    pub intruder: TimeField,
    pub defender: TimeField,
}

pub fn dominance_fields(
    xi_a: Configuration,
    kin_a: Kinematics,
    xi_d: Configuration,
    kin_d: Kinematics,
    grid: GridSpec,
) -> DominanceFields {
    DominanceFields {
        intruder: time_field(xi_a, kin_a, grid),
        defender: time_field(xi_d, kin_d, grid),
    }
}

/// Points the intruder reaches no later than the defender: `t_A ≤ t_D`.
pub fn dominance_region(
    xi_a: Configuration,
    kin_a: Kinematics,
    xi_d: Configuration,
    kin_d: Kinematics,
    grid: GridSpec,
) -> Result<Region> {
    if xi_a.position().distance(xi_d.position()) == 0.0 {
        return Err(Error::Collocated);
    }
    let fields = dominance_fields(xi_a, kin_a, xi_d, kin_d, grid);
    Ok(region_from_fields(&fields))
}

/// Points the intruder reaches no later than the defender along a min-time
/// path that never passes a point the defender reaches first. Passing such a
/// point means running into a defender that can wait there, so the plain
/// timing comparison overstates what the intruder can take: it concedes
/// everything behind a defender facing it.
///
/// Along the path, sampled every half cell, the level is the first positive
/// timing margin `s/ν − t_D(y(s))`; on paths without one it is the endpoint
/// margin `t_A − t_D`. Its zero contour is the region boundary.
pub fn capture_free_region(
    xi_a: Configuration,
    kin_a: Kinematics,
    xi_d: Configuration,
    kin_d: Kinematics,
    grid: GridSpec,
) -> Result<Region> {
    if xi_a.position().distance(xi_d.position()) == 0.0 {
        return Err(Error::Collocated);
    }
    let fields = dominance_fields(xi_a, kin_a, xi_d, kin_d, grid);
    let step = 0.5 * grid.cell_size();
    let radius = kin_a.turning_radius();
    let level: Vec<f64> = fields
        .intruder
        .values
        .par_iter()
        .zip(&fields.defender.values)
        .enumerate()
        .map(|(k, (ta, td))| {
            let endpoint = ta - td;
            if endpoint > 0.0 {
                return endpoint;
            }
            let path = shortest_path_free_heading(xi_a, grid.center_of(k), radius);
            let n = (path.length() / step).ceil() as usize;
            (1..n)
                .map(|m| {
                    let s = m as f64 * step;
                    s / kin_a.speed() - time_to_point(xi_d, path.pose_at(s).position(), kin_d)
                })
                .find(|margin| *margin > 0.0)
                .unwrap_or(endpoint)
        })
        .collect();
    Ok(Region::from_level(grid, level, None))
}

pub fn region_from_fields(fields: &DominanceFields) -> Region {
    let level = fields
        .intruder
        .values
        .iter()
        .zip(&fields.defender.values)
        .map(|(ta, td)| ta - td)
        .collect();
    Region::from_level(fields.intruder.grid, level, Some(fields.intruder.source.position()))
}

/// Writes `x,y,t_A,t_D,member` rows for every cell.
pub fn write_dominance_csv<W: Write>(mut out: W, fields: &DominanceFields, region: &Region) -> io::Result<()> {
    writeln!(out, "x,y,t_A,t_D,member")?;
    let grid = fields.intruder.grid;
    for k in 0..grid.len() {
        let c = grid.center_of(k);
        writeln!(
            out,
            "{},{},{},{},{}",
            c.x,
            c.y,
            fields.intruder.values[k],
            fields.defender.values[k],
            u8::from(region.membership[k])
        )?;
    }
    Ok(())
}

/// Disk of points a holonomic intruder reaches first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApolloniusDisk {
    pub center: Point,
    pub radius: f64,
}

impl ApolloniusDisk {
    pub fn contains(&self, p: Point) -> bool {
        p.distance(self.center) <= self.radius
    }
}

pub fn apollonius_disk(x_a: Point, x_d: Point, nu: f64) -> Result<ApolloniusDisk> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::SpeedRatio(nu));
    }
    let alpha = 1.0 / (1.0 - nu * nu);
    let beta = nu * nu * alpha;
    let gamma = nu * alpha;
    Ok(ApolloniusDisk {
        center: x_a * alpha - x_d * beta,
        radius: gamma * x_a.distance(x_d),
    })
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// True when some member cell center, or some point of the interpolated
/// boundary, lies strictly inside the disk.
pub fn region_intersects_disk(region: &Region, center: Point, radius: f64) -> bool {
    if region.member_centers().any(|c| c.distance(center) < radius) {
        return true;
    }
    region
        .boundary
        .iter()
        .flat_map(|line| line.windows(2))
        .any(|w| segment_distance(center, w[0], w[1]) < radius)
}

/// Largest distance from the origin over the boundary vertices. A region
/// with no contour (the whole grid) falls back to its member centers.
pub fn region_max_norm(region: &Region) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let from_boundary = region
        .boundary
        .iter()
        .flatten()
        .map(|p| p.norm())
        .fold(f64::NEG_INFINITY, f64::max);
    if from_boundary.is_finite() {
        Ok(from_boundary)
    } else {
        Ok(region.member_centers().map(Point::norm).fold(0.0, f64::max))
    }
}

/// Marching squares on cell-center samples at level 0 with linear
/// interpolation. Polylines run counter-clockwise around the `<= 0` side;
/// open ones end on the grid edge. Saddles are split by the cell average.
pub fn contour(grid: &GridSpec, level: &[f64]) -> Vec<Vec<Point>> {
    let n = grid.resolution;
    let inside = |i: usize, j: usize| level[grid.index(i, j)] <= 0.0;
    let h_edge = |i: usize, j: usize| 2 * (j * n + i);
    let v_edge = |i: usize, j: usize| 2 * (j * n + i) + 1;

    // (start edge, end edge, start point, end point)
    let mut segments: Vec<(usize, usize, Point, Point)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let ins = corners.map(|(a, b)| inside(a, b));
            if ins.iter().all(|x| *x) || ins.iter().all(|x| !*x) {
                continue;
            }
            // edges: bottom c0-c1, right c1-c2, top c3-c2, left c0-c3
            let edges = [
                (h_edge(i, j), 0, 1),
                (v_edge(i + 1, j), 1, 2),
                (h_edge(i, j + 1), 3, 2),
                (v_edge(i, j), 0, 3),
            ];
            let crossing = |e: usize| ins[edges[e].1] != ins[edges[e].2];
            let point_on = |e: usize| {
                let (_, a, b) = edges[e];
                let (fa, fb) = (
                    level[grid.index(corners[a].0, corners[a].1)],
                    level[grid.index(corners[b].0, corners[b].1)],
                );
                let t = if fa == fb { 0.5 } else { fa / (fa - fb) };
                let pa = grid.cell_center(corners[a].0, corners[a].1);
                let pb = grid.cell_center(corners[b].0, corners[b].1);
                pa + (pb - pa) * t
            };
            let inside_end = |e: usize| {
                let (_, a, b) = edges[e];
                let c = if ins[a] { corners[a] } else { corners[b] };
                grid.cell_center(c.0, c.1)
            };
            let crossed: Vec<usize> = (0..4).filter(|e| crossing(*e)).collect();
            let pairs: Vec<(usize, usize)> = if crossed.len() == 2 {
                vec![(crossed[0], crossed[1])]
            } else {
                // saddle: corner k touches edges (k-1 mod 4 as listed) below
                let corner_edges = [(0, 3), (0, 1), (1, 2), (2, 3)];
                let avg = corners
                    .iter()
                    .map(|(a, b)| level[grid.index(*a, *b)])
                    .sum::<f64>()
                    / 4.0;
                let center_inside = avg <= 0.0;
                // isolate the corners whose state differs from the center
                (0..4)
                    .filter(|k| ins[*k] != center_inside)
                    .map(|k| corner_edges[k])
                    .collect()
            };
            for (ea, eb) in pairs {
                let (pa, pb) = (point_on(ea), point_on(eb));
                let probe = inside_end(ea);
                if (pb - pa).cross(probe - pa) > 0.0 {
                    segments.push((edges[ea].0, edges[eb].0, pa, pb));
                } else {
                    segments.push((edges[eb].0, edges[ea].0, pb, pa));
                }
            }
        }
    }

    let by_start: HashMap<usize, usize> = segments.iter().enumerate().map(|(k, s)| (s.0, k)).collect();
    let ends: std::collections::HashSet<usize> = segments.iter().map(|s| s.1).collect();
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let follow = |first: usize, used: &mut Vec<bool>| {
        let mut line = vec![segments[first].2];
        let mut k = first;
        loop {
            used[k] = true;
            line.push(segments[k].3);
            match by_start.get(&segments[k].1) {
                Some(&next) if !used[next] => k = next,
                _ => break,
            }
        }
        line
    };

    // open chains first (they start on the grid edge), then loops
    for k in 0..segments.len() {
        if !used[k] && !ends.contains(&segments[k].0) {
            lines.push(follow(k, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            lines.push(follow(k, &mut used));
        }
    }
    lines
}
