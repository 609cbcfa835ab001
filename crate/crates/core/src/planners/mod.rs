//! Classical grid baselines: A*, RRT and the greedy next-cell policy.

mod astar;
mod greedy;
mod rrt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use astar::{astar, AstarResult};
pub use greedy::{greedy, GreedyResult};
pub use rrt::{rrt, RrtResult};

use crate::error::{Error, Result};
use crate::geometry::{PathPlan, PlanStage, Point3, Scenario};
use crate::grid::{rasterize_with, Cell, CellRule, GridSpec, OccupancyGrid};

/// Occupancy-grid settings used when a scenario is handed to a grid planner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub cells_x: usize,
    pub cells_y: usize,
    /// Half side of the square each obstacle center expands into.
    /// `None` means half the scenario's obstacle edge.
    pub footprint_half_extent: Option<f64>,
    pub inflation: f64,
    pub cell_rule: CellRule,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            cells_x: 50,
            cells_y: 50,
            footprint_half_extent: None,
            inflation: 0.0,
            cell_rule: CellRule::Overlap,
        }
    }
}

impl GridConfig {
    pub fn rasterize(&self, scenario: &Scenario) -> Result<OccupancyGrid> {
        let spec = GridSpec::new(self.cells_x, self.cells_y, &scenario.workspace)?;
        let fp = self
            .footprint_half_extent
            .unwrap_or(scenario.obstacle_edge / 2.0);
        rasterize_with(scenario, &spec, fp, self.inflation, self.cell_rule)
    }
}

/// Rasterizes `scenario`, runs `kind` between the start and goal cells and
/// swaps the first and last cell centers for the exact start and goal.
pub fn plan_scenario(
    kind: GridPlanner,
    scenario: &Scenario,
    grid_cfg: &GridConfig,
    cfg: &PlannerConfig,
) -> Result<PathPlan> {
    let grid = grid_cfg.rasterize(scenario)?;
    let start = grid.spec.world_to_cell(&scenario.start)?;
    let goal = grid.spec.world_to_cell(&scenario.goal)?;
    let plan = plan_on_grid(kind, &grid, start, goal, cfg, scenario.start.z)?;
    attach_endpoints(&plan, scenario.start, scenario.goal)
}

pub fn attach_endpoints(plan: &PathPlan, start: Point3, goal: Point3) -> Result<PathPlan> {
    let mut pts = plan.waypoints().to_vec();
    let n = pts.len();
    pts[0] = start;
    pts[n - 1] = goal;
    plan.with_waypoints(pts, plan.stage)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// RRT extension length in cells.
    pub rrt_step_cells: u32,
    /// RRT goal radius in cells.
    pub rrt_goal_eps_cells: u32,
    pub rrt_max_iterations: usize,
    pub greedy_max_steps: usize,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            rrt_step_cells: 1,
            rrt_goal_eps_cells: 2,
            rrt_max_iterations: 50_000,
            greedy_max_steps: 500,
            rng_seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rrt_step_cells == 0
            || self.rrt_goal_eps_cells == 0
            || self.rrt_max_iterations == 0
            || self.greedy_max_steps == 0
        {
            return Err(Error::Contract("planner counts must all be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

/// Which grid baseline to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPlanner {
    Astar,
    Rrt,
    /// Also accepted as `qlearning`, the name the baseline is usually reported under.
    #[serde(alias = "qlearning", alias = "q-learning")]
    Greedy,
}

impl GridPlanner {
    pub fn id(&self) -> &'static str {
        match self {
            GridPlanner::Astar => "astar",
            GridPlanner::Rrt => "rrt",
            GridPlanner::Greedy => "greedy",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GridPlanner::Astar => "A*",
            GridPlanner::Rrt => "RRT",
            GridPlanner::Greedy => "Greedy",
        }
    }
}

impl fmt::Display for GridPlanner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for GridPlanner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "astar" | "a*" => Ok(GridPlanner::Astar),
            "rrt" => Ok(GridPlanner::Rrt),
            "greedy" | "qlearning" | "q-learning" => Ok(GridPlanner::Greedy),
            other => Err(Error::Contract(format!("unknown planner {other:?}"))),
        }
    }
}

/// Runs a grid baseline and converts its route to a world-frame plan at
/// altitude `z`. Greedy runs that exhaust their step budget are reported as
/// [`Error::GoalNotReached`].
pub fn plan_on_grid(
    kind: GridPlanner,
    grid: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    cfg: &PlannerConfig,
    z: f64,
) -> Result<PathPlan> {
    match kind {
        GridPlanner::Astar => astar(grid, start, goal)?.to_plan(&grid.spec, z),
        GridPlanner::Rrt => rrt(grid, start, goal, cfg)?.to_plan(&grid.spec, z),
        GridPlanner::Greedy => {
            let r = greedy(grid, start, goal, cfg)?;
            if !r.reached {
                return Err(Error::GoalNotReached {
                    steps: r.steps,
                    max_steps: cfg.greedy_max_steps,
                });
            }
            r.to_plan(&grid.spec, z)
        }
    }
}

pub(crate) fn cells_to_plan(cells: &[Cell], spec: &GridSpec, z: f64, source: &str) -> Result<PathPlan> {
    let mut pts: Vec<Point3> = cells.iter().map(|&c| spec.cell_to_world(c, z)).collect();
    if pts.len() == 1 {
        pts.push(pts[0]);
    }
    PathPlan::new(pts, source, PlanStage::Raw)
}
