//! Post-processing of raw waypoints into a dense, margin-respecting
//! setpoint sequence.
//!
//! Margin enforcement pushes offending waypoints out of the margin-inflated
//! obstacle boxes along the horizontal axis of least displacement. The
//! vertical axis is never used: plans are flown at a fixed altitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    segment_intersects_cuboid, CuboidObstacle, PathPlan, PlanStage, Point3, Workspace, CLEARANCE_SAMPLE_STEP,
};

/// Interpolation step used for text-only model plans.
pub const LLM_INTERP_STEP: f64 = 0.5;
/// Interpolation step used for vision-language model plans.
pub const VLM_INTERP_STEP: f64 = 0.1;
pub const DEFAULT_MARGIN: f64 = 1.2;
/// Pushes per waypoint before it is flagged as unresolved.
pub const MAX_PUSH_ITERATIONS: usize = 8;

const SPACING_TOL: f64 = 1e-9;

/// Inserts points every `step` meters along each segment. Consecutive
/// duplicates are dropped.
pub fn interpolate(p: &PathPlan, step: f64) -> Result<PathPlan> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Contract(format!("interpolation step must be > 0, got {step}")));
    }
    let wps = p.waypoints();
    let mut out = Vec::with_capacity(wps.len());
    out.push(wps[0]);
    for w in wps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(&b);
        if len < 1e-12 {
            continue;
        }
        let mut j = 1usize;
        while (j as f64) * step < len - SPACING_TOL {
            out.push(a + (b - a) * (step * j as f64 / len));
            j += 1;
        }
        out.push(b);
    }
    if out.len() == 1 {
        // Every waypoint coincided; keep a valid two-point plan.
        out.push(out[0]);
    }
    p.with_waypoints(out, PlanStage::Interpolated)
}

/// How waypoints near the fixed endpoints are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointPolicy {
    /// An endpoint inside an inflated box is an error.
    #[default]
    Strict,
    /// The margin around an obstacle shrinks to the clearance of any
    /// endpoint that lies within it.
    Relax,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MarginOptions {
    /// Pushes that would leave these bounds (horizontally) are not considered.
    pub bounds: Option<Workspace>,
    pub endpoints: EndpointPolicy,
    /// Also split segments whose interior dips below the margin and push
    /// the split point out. Off by default: it lengthens grid routes.
    pub split_chords: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginReport {
    pub plan: PathPlan,
    /// Indices of waypoints still inside an inflated box after
    /// [`MAX_PUSH_ITERATIONS`] pushes.
    pub unresolved: Vec<usize>,
    /// Effective per-obstacle margin actually enforced.
    pub margins: Vec<f64>,
}

/// Projects every interior waypoint lying inside a margin-inflated obstacle
/// onto the inflated box surface. First and last waypoints never move.
pub fn enforce_margin(p: &PathPlan, obstacles: &[CuboidObstacle], margin: f64) -> Result<PathPlan> {
    enforce_margin_with(p, obstacles, margin, &MarginOptions::default()).map(|r| r.plan)
}

pub fn enforce_margin_with(
    p: &PathPlan,
    obstacles: &[CuboidObstacle],
    margin: f64,
    opts: &MarginOptions,
) -> Result<MarginReport> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::Contract(format!("margin must be >= 0, got {margin}")));
    }
    let (first, last) = (p.start(), p.end());
    let mut margins = vec![margin; obstacles.len()];
    for (k, o) in obstacles.iter().enumerate() {
        for (label, q) in [("start", first), ("goal", last)] {
            if !strictly_inside(o, margins[k], &q) {
                continue;
            }
            match opts.endpoints {
                EndpointPolicy::Strict => {
                    return Err(Error::InfeasibleMargin {
                        endpoint: format!("{label} {q}"),
                        obstacle: k,
                    })
                }
                EndpointPolicy::Relax => {
                    margins[k] = horizontal_clearance(o, &q).max(0.0).min(margins[k]);
                }
            }
        }
    }

    let wps = p.waypoints();
    let mut out = wps.to_vec();
    let n = out.len();
    let inside_any = |q: &Point3| {
        obstacles
            .iter()
            .zip(&margins)
            .position(|(o, &m)| strictly_inside(o, m, q))
    };
    for idx in 1..n.saturating_sub(1) {
        let original = out[idx];
        let mut q = original;
        for _ in 0..MAX_PUSH_ITERATIONS {
            match inside_any(&q) {
                None => break,
                Some(k) => q = push_out(obstacles, &margins, k, q, opts.bounds.as_ref(), false),
            }
        }
        if inside_any(&q).is_some() {
            // Ping-pong between overlapping boxes: retry from the original
            // point, accepting only faces that clear every box and do not
            // drag the neighbouring segments through a cube.
            let (prev, next) = (out[idx - 1], out[idx + 1]);
            let cuts_cube = |c: &Point3| {
                obstacles
                    .iter()
                    .any(|o| segment_intersects_cuboid(prev, *c, o, 0.0) || segment_intersects_cuboid(*c, next, o, 0.0))
            };
            let escape = obstacles
                .iter()
                .enumerate()
                .filter(|(k, o)| strictly_inside(o, margins[*k], &original))
                .map(|(k, _)| push_out(obstacles, &margins, k, original, opts.bounds.as_ref(), true))
                .filter(|c| inside_any(c).is_none() && !cuts_cube(c))
                .min_by(|a, b| a.distance(&original).total_cmp(&b.distance(&original)));
            if let Some(c) = escape {
                q = c;
            }
        }
        out[idx] = q;
    }

    // Pushed neighbours can still leave the chord between them cutting a
    // corner; split such segments at their deepest sample and push that.
    let cuts_cube = |a: &Point3, b: &Point3| obstacles.iter().any(|o| segment_intersects_cuboid(*a, *b, o, 0.0));
    let rounds = if opts.split_chords { MAX_PUSH_ITERATIONS } else { 0 };
    for _ in 0..rounds {
        let mut split = Vec::with_capacity(out.len());
        split.push(out[0]);
        for w in out.windows(2) {
            if let Some(mut q) = deepest_violation(w[0], w[1], obstacles, &margins) {
                for _ in 0..MAX_PUSH_ITERATIONS {
                    match inside_any(&q) {
                        None => break,
                        Some(k) => q = push_out(obstacles, &margins, k, q, opts.bounds.as_ref(), false),
                    }
                }
                if inside_any(&q).is_none() && !cuts_cube(&w[0], &q) && !cuts_cube(&q, &w[1]) {
                    split.push(q);
                }
            }
            split.push(w[1]);
        }
        let grew = split.len() > out.len();
        out = split;
        if !grew {
            break;
        }
    }
    let unresolved = (1..out.len().saturating_sub(1))
        .filter(|&i| inside_any(&out[i]).is_some())
        .collect();
    Ok(MarginReport {
        plan: p.with_waypoints(out, p.stage)?,
        unresolved,
        margins,
    })
}

/// Sample of segment `a -> b` (at the clearance sampling step) that falls
/// deepest below its obstacle's margin, if any falls more than half the
/// clearance tolerance below it.
fn deepest_violation(a: Point3, b: Point3, obstacles: &[CuboidObstacle], margins: &[f64]) -> Option<Point3> {
    let n = (a.distance(&b) / CLEARANCE_SAMPLE_STEP).ceil().max(1.0) as usize;
    let mut worst: Option<(f64, Point3)> = None;
    for s in 1..n {
        let q = a.lerp(&b, s as f64 / n as f64);
        for (o, &m) in obstacles.iter().zip(margins) {
            let deficit = m - o.signed_distance(&q);
            if deficit > CLEARANCE_SAMPLE_STEP / 2.0 && worst.is_none_or(|(d, _)| deficit > d) {
                worst = Some((deficit, q));
            }
        }
    }
    worst.map(|(_, q)| q)
}

fn strictly_inside(o: &CuboidObstacle, margin: f64, q: &Point3) -> bool {
    let h = o.half_extent() + margin - 1e-9;
    (q.x - o.center.x).abs() < h && (q.y - o.center.y).abs() < h && (q.z - o.center.z).abs() < h
}

/// Horizontal distance from `q` to the physical cube footprint (negative inside).
fn horizontal_clearance(o: &CuboidObstacle, q: &Point3) -> f64 {
    let h = o.half_extent();
    let dx = (q.x - o.center.x).abs() - h;
    let dy = (q.y - o.center.y).abs() - h;
    let outside = (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt();
    outside + dx.max(dy).min(0.0)
}

/// Moves `q` onto the nearest horizontal face of inflated box `k`. With
/// `require_clear`, faces whose projection lands in another inflated box
/// rank after every face that does not.
fn push_out(
    obstacles: &[CuboidObstacle],
    margins: &[f64],
    k: usize,
    q: Point3,
    bounds: Option<&Workspace>,
    require_clear: bool,
) -> Point3 {
    let o = &obstacles[k];
    let h = o.half_extent() + margins[k];
    let mut best: Option<((bool, f64), Point3)> = None;
    // +x, -x, +y, -y; ties keep the earlier candidate.
    for (axis, sign) in [(0usize, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
        let target = o.center.axis(axis) + sign * h;
        let disp = (target - q.axis(axis)).abs();
        let mut cand = q;
        cand.set_axis(axis, target);
        if let Some(ws) = bounds {
            if cand.x < ws.min.x || cand.x > ws.max.x || cand.y < ws.min.y || cand.y > ws.max.y {
                continue;
            }
        }
        let blocked = require_clear
            && obstacles
                .iter()
                .zip(margins)
                .any(|(other, &m)| strictly_inside(other, m, &cand));
        let key = (blocked, disp);
        if best.is_none_or(|(b, _)| key < b) {
            best = Some((key, cand));
        }
    }
    best.map(|(_, c)| c).unwrap_or(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub interp_step: f64,
    pub margin: f64,
    pub endpoints: EndpointPolicy,
    pub split_chords: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            interp_step: LLM_INTERP_STEP,
            margin: DEFAULT_MARGIN,
            endpoints: EndpointPolicy::Relax,
            split_chords: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutcome {
    pub plan: PathPlan,
    pub unresolved: usize,
    pub margins: Vec<f64>,
}

/// interpolate -> enforce margin -> interpolate again, tagging the result
/// as refined.
pub fn refine(
    p: &PathPlan,
    obstacles: &[CuboidObstacle],
    cfg: &RefineConfig,
    bounds: Option<Workspace>,
) -> Result<RefineOutcome> {
    let dense = interpolate(p, cfg.interp_step)?;
    let report = enforce_margin_with(
        &dense,
        obstacles,
        cfg.margin,
        &MarginOptions {
            bounds,
            endpoints: cfg.endpoints,
            split_chords: cfg.split_chords,
        },
    )?;
    let redense = interpolate(&report.plan, cfg.interp_step)?;
    Ok(RefineOutcome {
        plan: redense.with_waypoints(redense.waypoints().to_vec(), PlanStage::Refined)?,
        unresolved: report.unresolved.len(),
        margins: report.margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{path_length, polyline_min_clearance};

    fn plan(pts: &[[f64; 3]]) -> PathPlan {
        PathPlan::new(pts.iter().map(|&a| a.into()).collect(), "t", PlanStage::Raw).unwrap()
    }

    fn cube(c: [f64; 3], edge: f64) -> CuboidObstacle {
        CuboidObstacle::new(c.into(), edge).unwrap()
    }

    #[test]
    fn midpoint_insertion() {
        let out = interpolate(&plan(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 0.5).unwrap();
        assert_eq!(
            out.waypoints(),
            &[
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(0.5, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0)
            ]
        );
        assert_eq!(out.stage, PlanStage::Interpolated);
    }

    #[test]
    fn uneven_last_interval() {
        let out = interpolate(&plan(&[[0.0, 0.0, 0.0], [0.0, 1.2, 0.0]]), 0.5).unwrap();
        let ys: Vec<f64> = out.waypoints().iter().map(|p| p.y).collect();
        assert_eq!(ys.len(), 4);
        for (got, want) in ys.iter().zip([0.0, 0.5, 1.0, 1.2]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_waypoints_are_dropped() {
        let out = interpolate(&plan(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 0.5).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.waypoints().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn non_positive_step_rejected() {
        let p = plan(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(interpolate(&p, 0.0).is_err());
        assert!(interpolate(&p, -0.5).is_err());
    }

    #[test]
    fn interpolation_preserves_length() {
        let p = plan(&[[0.0, 6.0, 0.5], [2.2, 0.0, 0.5], [2.2, -4.0, 0.5], [0.0, -7.0, 0.5]]);
        let out = interpolate(&p, 0.5).unwrap();
        assert!((path_length(&out) - path_length(&p)).abs() < 1e-9);
    }

    #[test]
    fn projection_along_smallest_displacement() {
        let p = plan(&[[5.0, 6.0, 0.5], [0.5, -1.5, 0.5], [5.0, -7.0, 0.5]]);
        let out = enforce_margin(&p, &[cube([0.0, -1.5, 0.5], 2.0)], 1.2).unwrap();
        let q = out.waypoints()[1];
        assert!((q.x - 2.2).abs() < 1e-12 && (q.y + 1.5).abs() < 1e-12 && (q.z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clear_path_is_a_fixed_point() {
        let p = plan(&[[3.0, 6.0, 0.5], [3.0, 0.0, 0.5], [3.0, -7.0, 0.5]]);
        let out = enforce_margin(&p, &[cube([-1.0, 0.0, 0.5], 1.0)], 1.2).unwrap();
        assert_eq!(out, p);
        assert_eq!(enforce_margin(&p, &[], 1.2).unwrap(), p);
    }

    #[test]
    fn endpoint_inside_margin_is_an_error() {
        let p = plan(&[[0.0, 6.0, 0.5], [0.0, -7.0, 0.5]]);
        let err = enforce_margin(&p, &[cube([0.0, -5.5, 0.5], 2.0)], 1.2).unwrap_err();
        assert!(matches!(err, Error::InfeasibleMargin { obstacle: 0, .. }));
    }

    #[test]
    fn relaxed_endpoint_shrinks_that_margin_only() {
        let p = plan(&[[3.0, 6.0, 0.5], [0.5, -5.5, 0.5], [0.0, -7.0, 0.5]]);
        let obstacles = [cube([0.0, -5.5, 0.5], 2.0), cube([0.0, 2.0, 0.5], 2.0)];
        let r = enforce_margin_with(
            &p,
            &obstacles,
            1.2,
            &MarginOptions {
                bounds: None,
                endpoints: EndpointPolicy::Relax,
                split_chords: false,
            },
        )
        .unwrap();
        assert!((r.margins[0] - 0.5).abs() < 1e-12);
        assert_eq!(r.margins[1], 1.2);
        assert_eq!(r.plan.end(), Point3::new(0.0, -7.0, 0.5));
        assert!((r.plan.waypoints()[1].x - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bounds_exclude_outward_pushes() {
        let p = plan(&[[0.0, 6.0, 0.5], [-2.4, 0.0, 0.5], [0.0, -7.0, 0.5]]);
        let r = enforce_margin_with(
            &p,
            &[cube([-2.5, 0.0, 0.5], 2.0)],
            1.2,
            &MarginOptions {
                bounds: Some(Workspace::standard()),
                endpoints: EndpointPolicy::Strict,
                split_chords: false,
            },
        )
        .unwrap();
        // -x would land at -4.7, outside x >= -3.
        assert!((r.plan.waypoints()[1].x + 0.3).abs() < 1e-12);
    }

    #[test]
    fn overlapping_boxes_resolve_iteratively() {
        let p = plan(&[[0.0, 3.0, 0.5], [0.0, 0.2, 0.5], [3.0, 0.2, 0.5]]);
        let obstacles = [cube([-0.5, 0.0, 0.5], 1.0), cube([0.5, 0.0, 0.5], 1.0)];
        let r = enforce_margin_with(&p, &obstacles, 0.2, &MarginOptions::default()).unwrap();
        assert!(r.unresolved.is_empty());
        let q = r.plan.waypoints()[1];
        assert!(obstacles.iter().all(|o| !strictly_inside(o, 0.2, &q)));
        assert!((q.y - 0.7).abs() < 1e-12);
    }

    #[test]
    fn chord_splitting_restores_corner_clearance() {
        let p = plan(&[[0.0, 4.0, 0.5], [1.3, 0.0, 0.5], [0.0, -4.0, 0.5]]);
        let obstacles = [cube([0.0, 0.0, 0.5], 1.0)];
        let plain = enforce_margin(&p, &obstacles, 1.2).unwrap();
        assert_eq!(plain.waypoints()[1], Point3::new(1.7, 0.0, 0.5));
        assert!(polyline_min_clearance(plain.waypoints(), &obstacles) < 1.0);

        let opts = MarginOptions {
            split_chords: true,
            ..Default::default()
        };
        let split = enforce_margin_with(&p, &obstacles, 1.2, &opts).unwrap();
        assert!(split.plan.len() > 3);
        assert_eq!(split.plan.start(), p.start());
        assert_eq!(split.plan.end(), p.end());
        assert!(polyline_min_clearance(split.plan.waypoints(), &obstacles) >= 1.2 - 0.05);
    }
}
