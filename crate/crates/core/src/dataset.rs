//! Synthetic instruction-tuning corpus: random obstacle fields, RRT routes
//! shortcut and pushed to a clearance, serialized as JSON lines.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polyline_collides, polyline_min_clearance, CuboidObstacle, PathPlan, PlanStage, Point3, Scenario, Workspace};
use crate::llm::{build_prompt, render_waypoints, PromptSpec};
use crate::planners::{astar, plan_scenario, GridConfig, GridPlanner, PlannerConfig};
use crate::refine::{refine, EndpointPolicy, RefineConfig};

const MAX_DRAWS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Inclusive range for the per-entry obstacle count.
    pub obstacle_count: (usize, usize),
    pub obstacle_edge: f64,
    pub min_obstacle_separation: f64,
    pub min_start_goal_distance: f64,
    pub altitude: f64,
    pub workspace: Workspace,
    pub grid: GridConfig,
    pub planner: PlannerConfig,
    /// Clearance every answer must keep from every obstacle surface.
    pub clearance: f64,
    /// Slack on `clearance` when verifying answers.
    pub clearance_tolerance: f64,
    pub interp_step: f64,
    pub max_attempts: usize,
    /// Safety margin quoted in the rendered prompt.
    pub prompt_margin: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            obstacle_count: (2, 5),
            obstacle_edge: 1.0,
            min_obstacle_separation: 2.5,
            min_start_goal_distance: 6.0,
            altitude: 0.5,
            workspace: Workspace::standard(),
            grid: GridConfig {
                inflation: 1.0,
                ..Default::default()
            },
            planner: PlannerConfig::default(),
            clearance: 1.0,
            clearance_tolerance: 0.05,
            interp_step: 0.5,
            max_attempts: 50,
            prompt_margin: 1.2,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.obstacle_count;
        if lo > hi {
            return Err(Error::Contract(format!("obstacle count range {lo}..={hi} is empty")));
        }
        if self.max_attempts == 0 {
            return Err(Error::Contract("max_attempts must be >= 1".into()));
        }
        if !(self.clearance >= 0.0 && self.interp_step > 0.0 && self.obstacle_edge > 0.0) {
            return Err(Error::Contract("clearance, interp_step and obstacle_edge must be positive".into()));
        }
        self.planner.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub instruction: String,
    pub scenario: Scenario,
    pub answer: Vec<Point3>,
    /// `f64::INFINITY` when the scene has no obstacles.
    pub clearance: f64,
}

#[derive(Serialize, Deserialize)]
pub struct DatasetLine {
    pub instruction: String,
    pub output: String,
}

/// Generates `count` entries; entry `k` draws from seed `seed + k`, so the
/// output is identical regardless of thread count.
pub fn generate(count: usize, seed: u64, cfg: &DatasetConfig) -> Result<Vec<DatasetEntry>> {
    if count == 0 {
        return Err(Error::Contract("count must be >= 1".into()));
    }
    cfg.validate()?;
    (0..count)
        .into_par_iter()
        .map(|k| generate_entry(k, seed.wrapping_add(k as u64), cfg))
        .collect()
}

pub fn generate_entry(index: usize, entry_seed: u64, cfg: &DatasetConfig) -> Result<DatasetEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(entry_seed);
    for attempt in 0..cfg.max_attempts {
        match try_entry(index, &mut rng, cfg) {
            Ok(Some(e)) => return Ok(e),
            Ok(None) => {}
            Err(e) => log::debug!("entry {index} attempt {attempt}: {e}"),
        }
    }
    Err(Error::UnsatisfiableSample {
        seed: entry_seed,
        attempts: cfg.max_attempts,
    })
}

fn uniform_xy(rng: &mut ChaCha8Rng, ws: &Workspace, inset: f64, z: f64) -> Point3 {
    Point3::new(
        rng.gen_range(ws.min.x + inset..=ws.max.x - inset),
        rng.gen_range(ws.min.y + inset..=ws.max.y - inset),
        z,
    )
}

/// Redraws until `accept` holds, giving up after [`MAX_DRAWS`] tries.
fn draw(
    rng: &mut ChaCha8Rng,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> Point3,
    accept: impl Fn(&Point3) -> bool,
) -> Option<Point3> {
    (0..MAX_DRAWS).map(|_| sample(rng)).find(|p| accept(p))
}

fn try_entry(index: usize, rng: &mut ChaCha8Rng, cfg: &DatasetConfig) -> Result<Option<DatasetEntry>> {
    let ws = cfg.workspace;
    let z = cfg.altitude;
    let n = rng.gen_range(cfg.obstacle_count.0..=cfg.obstacle_count.1);
    let half = cfg.obstacle_edge / 2.0;

    let mut centers: Vec<Point3> = Vec::with_capacity(n);
    for _ in 0..n {
        let spaced = |c: &Point3| centers.iter().all(|o| o.distance(c) >= cfg.min_obstacle_separation);
        match draw(rng, |r| uniform_xy(r, &ws, half, z), spaced) {
            Some(c) => centers.push(c),
            None => return Ok(None),
        }
    }
    let cubes: Vec<CuboidObstacle> = centers
        .iter()
        .map(|&c| CuboidObstacle::new(c, cfg.obstacle_edge))
        .collect::<Result<_>>()?;
    let clear_enough = |p: &Point3| cubes.iter().all(|o| o.signed_distance(p) >= cfg.clearance);
    let Some(start) = draw(rng, |r| uniform_xy(r, &ws, 0.0, z), clear_enough) else {
        return Ok(None);
    };
    let far_clear = |p: &Point3| clear_enough(p) && start.distance(p) >= cfg.min_start_goal_distance;
    let Some(goal) = draw(rng, |r| uniform_xy(r, &ws, 0.0, z), far_clear) else {
        return Ok(None);
    };
    let scenario = Scenario::new(
        format!("synthetic-{index}"),
        start,
        goal,
        &centers,
        cfg.obstacle_edge,
        cfg.prompt_margin,
        ws,
    )?;

    let planner = cfg.planner.with_seed(rng.gen());
    // RRT only gives up after its whole iteration budget, so walled-off
    // goals are screened out with a grid search first.
    let grid = cfg.grid.rasterize(&scenario)?;
    let (s, g) = (grid.spec.world_to_cell(&start)?, grid.spec.world_to_cell(&goal)?);
    if let Err(Error::UnreachableGoal { .. }) = astar(&grid, s, g) {
        return Ok(None);
    }
    let raw = plan_scenario(GridPlanner::Rrt, &scenario, &cfg.grid, &planner)?;
    let short = shortcut(raw.waypoints(), &scenario.obstacles, cfg.clearance);
    let refined = refine(
        &raw.with_waypoints(short, PlanStage::Raw)?,
        &scenario.obstacles,
        &RefineConfig {
            interp_step: cfg.interp_step,
            margin: cfg.clearance,
            endpoints: EndpointPolicy::Strict,
            split_chords: true,
        },
        Some(ws),
    )?;
    let answer: Vec<Point3> = shortcut(refined.plan.waypoints(), &scenario.obstacles, cfg.clearance)
        .into_iter()
        .map(round2)
        .collect();

    let clearance = polyline_min_clearance(&answer, &scenario.obstacles);
    if polyline_collides(&answer, &scenario.obstacles, 0.0) || clearance < cfg.clearance - cfg.clearance_tolerance {
        return Ok(None);
    }
    let instruction = build_prompt(&PromptSpec::instruction(scenario.clone()))?;
    Ok(Some(DatasetEntry {
        instruction,
        scenario,
        answer,
        clearance,
    }))
}

fn round2(p: Point3) -> Point3 {
    let r = |v: f64| (v * 100.0).round() / 100.0;
    Point3::new(r(p.x), r(p.y), r(p.z))
}

/// From each kept waypoint, jumps to the farthest later waypoint whose
/// direct segment keeps `clearance` from every obstacle.
pub fn shortcut(points: &[Point3], obstacles: &[CuboidObstacle], clearance: f64) -> Vec<Point3> {
    let mut out = vec![points[0]];
    let mut i = 0;
    while i + 1 < points.len() {
        let mut next = i + 1;
        for j in (i + 2..points.len()).rev() {
            if polyline_min_clearance(&[points[i], points[j]], obstacles) >= clearance {
                next = j;
                break;
            }
        }
        out.push(points[next]);
        i = next;
    }
    out
}

/// One JSON object per line with `instruction` and `output` keys.
pub fn serialize<W: Write>(entries: &[DatasetEntry], mut w: W) -> std::io::Result<()> {
    for e in entries {
        let line = DatasetLine {
            instruction: e.instruction.clone(),
            output: render_waypoints(&e.answer),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// A plan over an entry's answer, for feeding back into refinement or sim.
pub fn answer_plan(entry: &DatasetEntry) -> Result<PathPlan> {
    PathPlan::new(entry.answer.clone(), "dataset", PlanStage::Raw)
}
