use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::PathPlan;
use crate::grid::{Cell, GridSpec, OccupancyGrid, NEIGHBOR_ORDER};

use super::cells_to_plan;

#[derive(Clone, Debug, PartialEq)]
pub struct AstarResult {
    /// Start to goal inclusive; a single cell when start == goal.
    pub cells: Vec<Cell>,
    /// Sum of per-axis edge costs in meters.
    pub cost: f64,
    pub explored: usize,
}

impl AstarResult {
    pub fn to_plan(&self, spec: &GridSpec, z: f64) -> Result<PathPlan> {
        cells_to_plan(&self.cells, spec, z, "astar")
    }
}

#[derive(Debug)]
struct Open {
    f: f64,
    h: f64,
    seq: u64,
    cell: Cell,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // BinaryHeap is a max-heap: invert so the lowest f, then lowest h, then
    // earliest insertion pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// 4-connected A* with per-axis edge costs (`dx` for east/west moves, `dy`
/// for north/south) and the Manhattan heuristic in meters.
pub fn astar(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<AstarResult> {
    let spec = &grid.spec;
    for (label, c) in [("start", start), ("goal", goal)] {
        if !spec.contains_cell(c.i as isize, c.j as isize) {
            return Err(Error::Range(format!("{label} cell ({}, {}) outside grid", c.i, c.j)));
        }
        if grid.is_occupied(c) {
            return Err(Error::Contract(format!("{label} cell ({}, {}) is occupied", c.i, c.j)));
        }
    }
    let (dx, dy) = (spec.dx(), spec.dy());
    let heuristic = |c: Cell| {
        (c.i as f64 - goal.i as f64).abs() * dx + (c.j as f64 - goal.j as f64).abs() * dy
    };

    let n = spec.cell_count();
    let mut g = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut explored = 0usize;

    g[spec.index(start)] = 0.0;
    let h0 = heuristic(start);
    open.push(Open { f: h0, h: h0, seq, cell: start });

    while let Some(Open { cell, .. }) = open.pop() {
        let k = spec.index(cell);
        if closed[k] {
            continue;
        }
        closed[k] = true;
        explored += 1;
        if cell == goal {
            let mut cells = vec![cell];
            let mut cur = k;
            while let Some(p) = parent[cur] {
                cells.push(spec.cell_at(p));
                cur = p;
            }
            cells.reverse();
            return Ok(AstarResult {
                cells,
                cost: g[k],
                explored,
            });
        }
        for &(di, dj) in &NEIGHBOR_ORDER {
            let (i, j) = (cell.i as isize + di, cell.j as isize + dj);
            if !grid.is_free_at(i, j) {
                continue;
            }
            let next = Cell::new(i as usize, j as usize);
            let nk = spec.index(next);
            if closed[nk] {
                continue;
            }
            let step = if di != 0 { dx } else { dy };
            let tentative = g[k] + step;
            if tentative < g[nk] {
                g[nk] = tentative;
                parent[nk] = Some(k);
                let h = heuristic(next);
                seq += 1;
                open.push(Open {
                    f: tentative + h,
                    h,
                    seq,
                    cell: next,
                });
            }
        }
    }
    Err(Error::UnreachableGoal { explored })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Workspace;

    fn open_grid(nx: usize, ny: usize) -> OccupancyGrid {
        OccupancyGrid::empty(GridSpec::new(nx, ny, &Workspace::standard()).unwrap())
    }

    #[test]
    fn start_equals_goal() {
        let g = open_grid(5, 5);
        let r = astar(&g, Cell::new(2, 2), Cell::new(2, 2)).unwrap();
        assert_eq!(r.cells, vec![Cell::new(2, 2)]);
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.to_plan(&g.spec, 0.5).unwrap().len(), 2);
    }

    #[test]
    fn walled_off_goal_is_unreachable() {
        let mut g = open_grid(5, 5);
        for j in 0..5 {
            g.set(Cell::new(2, j), true);
        }
        let err = astar(&g, Cell::new(0, 0), Cell::new(4, 4)).unwrap_err();
        match err {
            Error::UnreachableGoal { explored } => assert_eq!(explored, 10),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn occupied_start_rejected() {
        let mut g = open_grid(5, 5);
        g.set(Cell::new(0, 0), true);
        assert!(astar(&g, Cell::new(0, 0), Cell::new(4, 4)).is_err());
    }

    #[test]
    fn path_is_four_connected() {
        let mut g = open_grid(8, 8);
        for j in 1..8 {
            g.set(Cell::new(4, j), true);
        }
        let r = astar(&g, Cell::new(0, 7), Cell::new(7, 7)).unwrap();
        for w in r.cells.windows(2) {
            assert_eq!(w[0].manhattan(&w[1]), 1);
        }
        assert!(r.cells.iter().all(|&c| g.is_free(c)));
    }

    #[test]
    fn repeated_runs_are_identical() {
        let g = open_grid(20, 20);
        let a = astar(&g, Cell::new(1, 18), Cell::new(17, 2)).unwrap();
        let b = astar(&g, Cell::new(1, 18), Cell::new(17, 2)).unwrap();
        assert_eq!(a, b);
    }
}
