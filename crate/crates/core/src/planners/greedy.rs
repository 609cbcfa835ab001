use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::geometry::PathPlan;
use crate::grid::{Cell, GridSpec, OccupancyGrid};

use super::{cells_to_plan, PlannerConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyResult {
    /// Visited cells in order, starting with the start cell.
    pub cells: Vec<Cell>,
    pub reached: bool,
    pub steps: usize,
}

impl GreedyResult {
    pub fn to_plan(&self, spec: &GridSpec, z: f64) -> Result<PathPlan> {
        cells_to_plan(&self.cells, spec, z, "greedy")
    }
}

/// Myopic next-cell policy: step to the free 4-neighbour closest to the goal
/// (Euclidean, world meters). When that neighbour does not reduce the
/// distance or was already visited, fall back to the first free neighbour in
/// N-E-S-W order. Stops at the goal or after `greedy_max_steps` moves.
pub fn greedy(grid: &OccupancyGrid, start: Cell, goal: Cell, cfg: &PlannerConfig) -> Result<GreedyResult> {
    cfg.validate()?;
    let spec = &grid.spec;
    if !spec.contains_cell(start.i as isize, start.j as isize) || grid.is_occupied(start) {
        return Err(Error::Contract(format!(
            "start cell ({}, {}) is not a free grid cell",
            start.i, start.j
        )));
    }
    if !spec.contains_cell(goal.i as isize, goal.j as isize) {
        return Err(Error::Range(format!("goal cell ({}, {}) outside grid", goal.i, goal.j)));
    }
    let goal_w = spec.cell_to_world(goal, 0.0);
    let dist = |c: Cell| {
        let w = spec.cell_to_world(c, 0.0);
        ((w.x - goal_w.x).powi(2) + (w.y - goal_w.y).powi(2)).sqrt()
    };

    let mut cur = start;
    let mut cells = vec![start];
    let mut visited: HashSet<Cell> = HashSet::from([start]);
    let mut steps = 0;
    while cur != goal && steps < cfg.greedy_max_steps {
        let neighbors: Vec<Cell> = grid.free_neighbors(cur).collect();
        if neighbors.is_empty() {
            break;
        }
        // min_by keeps the first of equal elements, so ties follow N-E-S-W.
        let best = *neighbors
            .iter()
            .min_by(|a, b| dist(**a).total_cmp(&dist(**b)))
            .expect("non-empty");
        let next = if dist(best) < dist(cur) && !visited.contains(&best) {
            best
        } else {
            neighbors[0]
        };
        cur = next;
        visited.insert(cur);
        cells.push(cur);
        steps += 1;
    }
    Ok(GreedyResult {
        reached: cur == goal,
        cells,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Workspace;

    fn open_grid(nx: usize, ny: usize) -> OccupancyGrid {
        OccupancyGrid::empty(GridSpec::new(nx, ny, &Workspace::standard()).unwrap())
    }

    #[test]
    fn adjacent_goal_takes_one_step() {
        let g = open_grid(10, 10);
        let r = greedy(&g, Cell::new(4, 4), Cell::new(5, 4), &PlannerConfig::default()).unwrap();
        assert!(r.reached);
        assert_eq!(r.steps, 1);
    }

    #[test]
    fn boxed_in_start_stops_without_moving() {
        let mut g = open_grid(5, 5);
        for c in [Cell::new(1, 2), Cell::new(3, 2), Cell::new(2, 1), Cell::new(2, 3)] {
            g.set(c, true);
        }
        let r = greedy(&g, Cell::new(2, 2), Cell::new(0, 0), &PlannerConfig::default()).unwrap();
        assert!(!r.reached);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn occupied_start_is_contract_error() {
        let mut g = open_grid(5, 5);
        g.set(Cell::new(0, 0), true);
        let err = greedy(&g, Cell::new(0, 0), Cell::new(4, 4), &PlannerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn full_wall_fails_within_budget() {
        let mut g = open_grid(10, 10);
        for i in 0..10 {
            g.set(Cell::new(i, 5), true);
        }
        let cfg = PlannerConfig::default();
        let r = greedy(&g, Cell::new(5, 9), Cell::new(5, 0), &cfg).unwrap();
        assert!(!r.reached);
        assert!(r.steps <= cfg.greedy_max_steps);
        assert!(r.cells.iter().all(|&c| g.is_free(c)));
    }
}
