use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{PathPlan, PlanStage, Point3};
use crate::grid::{Cell, GridSpec, OccupancyGrid};

use super::PlannerConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RrtResult {
    /// Root-to-terminal node chain in continuous cell coordinates.
    pub nodes: Vec<(f64, f64)>,
    /// Goal cell center in continuous cell coordinates.
    pub goal: (f64, f64),
    pub tree_size: usize,
    pub iterations: usize,
}

impl RrtResult {
    /// World-frame plan through the node chain. A run that succeeded
    /// without growing the tree yields `[start, goal]`.
    pub fn to_plan(&self, spec: &GridSpec, z: f64) -> Result<PathPlan> {
        let mut pts: Vec<Point3> = self
            .nodes
            .iter()
            .map(|&(u, v)| spec.grid_to_world(u, v, z))
            .collect();
        if pts.len() == 1 {
            pts.push(spec.grid_to_world(self.goal.0, self.goal.1, z));
        }
        PathPlan::new(pts, "rrt", PlanStage::Raw)
    }

    pub fn terminal_distance(&self) -> f64 {
        let t = self.nodes.last().expect("rrt path is never empty");
        dist(*t, self.goal)
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Nearest-node index over a cell-bucketed point set.
struct Buckets {
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        }
    }

    fn key(&self, p: (f64, f64)) -> (isize, isize) {
        (
            (p.0.floor() as isize).clamp(0, self.nx as isize - 1),
            (p.1.floor() as isize).clamp(0, self.ny as isize - 1),
        )
    }

    fn insert(&mut self, p: (f64, f64), id: usize) {
        let (i, j) = self.key(p);
        self.cells[j as usize * self.nx + i as usize].push(id);
    }

    /// Lowest distance wins; ties go to the lower node id.
    fn nearest(&self, q: (f64, f64), nodes: &[(f64, f64)]) -> usize {
        let (ci, cj) = self.key(q);
        let max_r = self.nx.max(self.ny) as isize;
        let mut best: Option<(f64, usize)> = None;
        for r in 0..=max_r {
            if let Some((d, _)) = best {
                // Anything in ring r is at least r - 1 cells away.
                if (r - 1) as f64 > d {
                    break;
                }
            }
            for j in (cj - r)..=(cj + r) {
                for i in (ci - r)..=(ci + r) {
                    if (i - ci).abs() != r && (j - cj).abs() != r {
                        continue;
                    }
                    if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                        continue;
                    }
                    for &id in &self.cells[j as usize * self.nx + i as usize] {
                        let d = dist(q, nodes[id]);
                        let better = match best {
                            None => true,
                            Some((bd, bid)) => d < bd || (d == bd && id < bid),
                        };
                        if better {
                            best = Some((d, id));
                        }
                    }
                }
            }
        }
        best.expect("tree always holds the root").1
    }
}

/// Basic RRT in continuous cell coordinates: uniform samples over free
/// cells, nearest-node extension by `rrt_step_cells`, node accepted only if
/// the segment from its parent crosses free cells alone. Terminates once a
/// new node is within `rrt_goal_eps_cells` of the goal cell center.
pub fn rrt(grid: &OccupancyGrid, start: Cell, goal: Cell, cfg: &PlannerConfig) -> Result<RrtResult> {
    cfg.validate()?;
    let spec = &grid.spec;
    for (label, c) in [("start", start), ("goal", goal)] {
        if !spec.contains_cell(c.i as isize, c.j as isize) || grid.is_occupied(c) {
            return Err(Error::Contract(format!(
                "{label} cell ({}, {}) is not a free grid cell",
                c.i, c.j
            )));
        }
    }
    let delta = cfg.rrt_step_cells as f64;
    let eps = cfg.rrt_goal_eps_cells as f64;
    let root = start.center();
    let target = goal.center();

    if dist(root, target) <= eps {
        return Ok(RrtResult {
            nodes: vec![root],
            goal: target,
            tree_size: 1,
            iterations: 0,
        });
    }

    let free: Vec<Cell> = grid.free_cells().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut nodes = vec![root];
    let mut parent: Vec<usize> = vec![usize::MAX];
    let mut index = Buckets::new(spec.cells_x, spec.cells_y);
    index.insert(root, 0);

    for iter in 1..=cfg.rrt_max_iterations {
        let c = free[rng.gen_range(0..free.len())];
        let sample = (c.i as f64 + rng.gen::<f64>(), c.j as f64 + rng.gen::<f64>());
        let near_id = index.nearest(sample, &nodes);
        let near = nodes[near_id];
        let d = dist(near, sample);
        if d < 1e-12 {
            continue;
        }
        let new = (
            near.0 + delta * (sample.0 - near.0) / d,
            near.1 + delta * (sample.1 - near.1) / d,
        );
        let (ni, nj) = (new.0.floor() as isize, new.1.floor() as isize);
        if !grid.is_free_at(ni, nj) || !grid.segment_is_free(near, new) {
            continue;
        }
        let id = nodes.len();
        nodes.push(new);
        parent.push(near_id);
        index.insert(new, id);

        if dist(new, target) <= eps {
            let mut chain = vec![new];
            let mut cur = id;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                chain.push(nodes[cur]);
            }
            chain.reverse();
            return Ok(RrtResult {
                nodes: chain,
                goal: target,
                tree_size: nodes.len(),
                iterations: iter,
            });
        }
    }
    Err(Error::RrtBudgetExceeded {
        iterations: cfg.rrt_max_iterations,
        tree_size: nodes.len(),
    })
}
