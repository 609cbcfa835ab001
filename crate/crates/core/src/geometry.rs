//! Geometric primitives shared by every planner: points, cubic obstacles,
//! workspace bounds, scenarios, plans, and the collision / clearance
//! predicates used to score them.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacing used when densely resampling a path for clearance checks.
pub const CLEARANCE_SAMPLE_STEP: f64 = 0.05;

/// A position in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*other - *self).norm()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn lerp(&self, other: &Point3, t: f64) -> Point3 {
        *self + (*other - *self) * t
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub(crate) fn axis(&self, k: usize) -> f64 {
        match k {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub(crate) fn set_axis(&mut self, k: usize, v: f64) {
        match k {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.as_array()
    }
}

impl std::ops::Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Point3 {
    /// Canonical two-decimal tuple rendering, e.g. `(0.00, 6.00, 0.50)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", fmt2(self.x), fmt2(self.y), fmt2(self.z))
    }
}

/// Two-decimal rendering with `-0.00` folded into `0.00`.
pub fn fmt2(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{:.2}", if r == 0.0 { 0.0 } else { r })
}

/// Axis-aligned cube obstacle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuboidObstacle {
    pub center: Point3,
    pub edge: f64,
}

impl CuboidObstacle {
    pub fn new(center: Point3, edge: f64) -> Result<Self> {
        if !(edge > 0.0 && edge.is_finite()) {
            return Err(Error::Contract(format!("obstacle edge must be > 0, got {edge}")));
        }
        if !center.is_finite() {
            return Err(Error::Contract("obstacle center must be finite".into()));
        }
        Ok(Self { center, edge })
    }

    pub fn half_extent(&self) -> f64 {
        0.5 * self.edge
    }

    /// Closed containment test against the cube grown by `inflate` on every face.
    pub fn contains(&self, p: &Point3, inflate: f64) -> bool {
        let h = self.half_extent() + inflate;
        (p.x - self.center.x).abs() <= h
            && (p.y - self.center.y).abs() <= h
            && (p.z - self.center.z).abs() <= h
    }

    /// Signed distance to the cube surface: positive outside, minus the
    /// penetration depth inside.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        let h = self.half_extent();
        let d = [
            (p.x - self.center.x).abs() - h,
            (p.y - self.center.y).abs() - h,
            (p.z - self.center.z).abs() - h,
        ];
        let outside = d.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
        let inside = d[0].max(d[1]).max(d[2]).min(0.0);
        outside + inside
    }
}

/// Slab test: does the closed segment `[a, b]` touch the cube grown by `inflate`?
pub fn segment_intersects_cuboid(a: Point3, b: Point3, obs: &CuboidObstacle, inflate: f64) -> bool {
    let h = obs.half_extent() + inflate;
    let dir = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for k in 0..3 {
        let lo = obs.center.axis(k) - h;
        let hi = obs.center.axis(k) + h;
        let o = a.axis(k);
        let d = dir.axis(k);
        if d.abs() < 1e-15 {
            if o < lo || o > hi {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo - o) / d, (hi - o) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: Point3,
    pub max: Point3,
}

impl Workspace {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::Contract("workspace corners must be finite".into()));
        }
        if !(min.x < max.x && min.y < max.y && min.z < max.z) {
            return Err(Error::Contract(format!(
                "workspace min {min} must be below max {max} on every axis"
            )));
        }
        Ok(Self { min, max })
    }

    /// The benchmark arena: x in [-3, 3], y in [-8, 8], z in [0, 3].
    pub fn standard() -> Self {
        Self {
            min: Point3::new(-3.0, -8.0, 0.0),
            max: Point3::new(3.0, 8.0, 3.0),
        }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn center(&self) -> Point3 {
        self.min.lerp(&self.max, 0.5)
    }
}

/// One benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub start: Point3,
    pub goal: Point3,
    pub obstacles: Vec<CuboidObstacle>,
    pub workspace: Workspace,
    pub safety_margin: f64,
    pub obstacle_edge: f64,
}

/// On-disk scenario layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub start: [f64; 3],
    pub goal: [f64; 3],
    pub obstacles: Vec<[f64; 3]>,
    pub obstacle_edge_m: f64,
    pub safety_margin_m: f64,
    pub workspace: WorkspaceFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorkspaceFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Scenario {
    /// Builds and validates a scenario. Start and goal must lie inside the
    /// workspace and outside every physical cube; obstacle centers must lie
    /// inside the workspace.
    pub fn new(
        name: impl Into<String>,
        start: Point3,
        goal: Point3,
        obstacle_centers: &[Point3],
        obstacle_edge: f64,
        safety_margin: f64,
        workspace: Workspace,
    ) -> Result<Self> {
        let name = name.into();
        if !(safety_margin >= 0.0 && safety_margin.is_finite()) {
            return Err(Error::Contract(format!("safety margin must be >= 0, got {safety_margin}")));
        }
        let obstacles = obstacle_centers
            .iter()
            .map(|c| CuboidObstacle::new(*c, obstacle_edge))
            .collect::<Result<Vec<_>>>()?;
        for (label, p) in [("start", start), ("goal", goal)] {
            if !p.is_finite() || !workspace.contains(&p) {
                return Err(Error::Contract(format!("{label} {p} lies outside the workspace")));
            }
            if let Some(i) = obstacles.iter().position(|o| o.contains(&p, 0.0)) {
                return Err(Error::Contract(format!("{label} {p} lies inside obstacle #{i}")));
            }
        }
        for (i, o) in obstacles.iter().enumerate() {
            if !workspace.contains(&o.center) {
                return Err(Error::Contract(format!(
                    "obstacle #{i} center {} lies outside the workspace",
                    o.center
                )));
            }
        }
        Ok(Self {
            name,
            start,
            goal,
            obstacles,
            workspace,
            safety_margin,
            obstacle_edge,
        })
    }

    pub fn obstacle_centers(&self) -> Vec<Point3> {
        self.obstacles.iter().map(|o| o.center).collect()
    }

    /// Same scenario with a different obstacle set (used by detection ingest).
    pub fn with_obstacles(&self, centers: &[Point3]) -> Result<Self> {
        Scenario::new(
            self.name.clone(),
            self.start,
            self.goal,
            centers,
            self.obstacle_edge,
            self.safety_margin,
            self.workspace,
        )
    }

    pub fn from_file_repr(f: ScenarioFile) -> Result<Self> {
        let workspace = Workspace::new(f.workspace.min.into(), f.workspace.max.into())?;
        let centers: Vec<Point3> = f.obstacles.iter().map(|&c| c.into()).collect();
        Scenario::new(
            f.name,
            f.start.into(),
            f.goal.into(),
            &centers,
            f.obstacle_edge_m,
            f.safety_margin_m,
            workspace,
        )
    }

    pub fn to_file_repr(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.name.clone(),
            start: self.start.into(),
            goal: self.goal.into(),
            obstacles: self.obstacles.iter().map(|o| o.center.into()).collect(),
            obstacle_edge_m: self.obstacle_edge,
            safety_margin_m: self.safety_margin,
            workspace: WorkspaceFile {
                min: self.workspace.min.into(),
                max: self.workspace.max.into(),
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file_repr(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_repr()).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Stable 64-bit FNV-1a digest of the scenario geometry.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for p in [self.start, self.goal] {
            p.as_array().into_iter().for_each(&mut eat);
        }
        for o in &self.obstacles {
            o.center.as_array().into_iter().for_each(&mut eat);
            eat(o.edge);
        }
        h
    }
}

/// Processing stage of a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStage {
    Raw,
    Interpolated,
    Refined,
}

/// Ordered waypoint list with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    waypoints: Vec<Point3>,
    pub source: String,
    pub stage: PlanStage,
}

impl PathPlan {
    pub fn new(waypoints: Vec<Point3>, source: impl Into<String>, stage: PlanStage) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::Contract(format!(
                "a plan needs at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        if let Some(i) = waypoints.iter().position(|p| !p.is_finite()) {
            return Err(Error::Contract(format!("waypoint #{i} is not finite")));
        }
        Ok(Self {
            waypoints,
            source: source.into(),
            stage,
        })
    }

    pub fn waypoints(&self) -> &[Point3] {
        &self.waypoints
    }

    pub fn start(&self) -> Point3 {
        self.waypoints[0]
    }

    pub fn end(&self) -> Point3 {
        *self.waypoints.last().expect("plan has >= 2 waypoints")
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_waypoints(&self, waypoints: Vec<Point3>, stage: PlanStage) -> Result<Self> {
        PathPlan::new(waypoints, self.source.clone(), stage)
    }

    pub fn max_spacing(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .fold(0.0, f64::max)
    }
}

pub fn path_length(p: &PathPlan) -> f64 {
    polyline_length(p.waypoints())
}

pub fn polyline_length(points: &[Point3]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Minimum signed clearance to the physical obstacles over a dense
/// resampling of the path. `f64::INFINITY` when there are no obstacles.
pub fn min_clearance(p: &PathPlan, obstacles: &[CuboidObstacle]) -> f64 {
    polyline_min_clearance(p.waypoints(), obstacles)
}

pub fn polyline_min_clearance(points: &[Point3], obstacles: &[CuboidObstacle]) -> f64 {
    if obstacles.is_empty() {
        return f64::INFINITY;
    }
    let clearance_at = |q: &Point3| {
        obstacles
            .iter()
            .map(|o| o.signed_distance(q))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = points.first().map(clearance_at).unwrap_or(f64::INFINITY);
    for w in points.windows(2) {
        let len = w[0].distance(&w[1]);
        let n = (len / CLEARANCE_SAMPLE_STEP).ceil().max(1.0) as usize;
        for k in 1..=n {
            let q = w[0].lerp(&w[1], k as f64 / n as f64);
            best = best.min(clearance_at(&q));
        }
    }
    best
}

/// True if any segment of the polyline touches any obstacle grown by `inflate`.
pub fn polyline_collides(points: &[Point3], obstacles: &[CuboidObstacle], inflate: f64) -> bool {
    points.windows(2).any(|w| {
        obstacles
            .iter()
            .any(|o| segment_intersects_cuboid(w[0], w[1], o, inflate))
    })
}
