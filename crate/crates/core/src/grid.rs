//! Uniform 2D occupancy grid over the workspace footprint.
//!
//! Cell `(i, j)` covers `[min_x + i*dx, min_x + (i+1)*dx) x [min_y + j*dy, ...)`.
//! Cell size is derived per axis from the workspace extent and the cell
//! counts, so non-square cells are allowed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Scenario, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

impl Cell {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    pub fn manhattan(&self, other: &Cell) -> usize {
        self.i.abs_diff(other.i) + self.j.abs_diff(other.j)
    }

    /// Center in continuous cell coordinates.
    pub fn center(&self) -> (f64, f64) {
        (self.i as f64 + 0.5, self.j as f64 + 0.5)
    }
}

/// 4-neighbourhood in the fixed N-E-S-W order (north is +y).
pub const NEIGHBOR_ORDER: [(isize, isize); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells_x: usize,
    pub cells_y: usize,
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl GridSpec {
    pub fn new(cells_x: usize, cells_y: usize, workspace: &Workspace) -> Result<Self> {
        if cells_x < 2 || cells_y < 2 {
            return Err(Error::Contract(format!(
                "grid needs at least 2x2 cells, got {cells_x}x{cells_y}"
            )));
        }
        Ok(Self {
            cells_x,
            cells_y,
            min_x: workspace.min.x,
            min_y: workspace.min.y,
            max_x: workspace.max.x,
            max_y: workspace.max.y,
        })
    }

    /// 50x50 cells over the given workspace.
    pub fn standard(workspace: &Workspace) -> Self {
        Self::new(50, 50, workspace).expect("50x50 is a valid grid")
    }

    pub fn dx(&self) -> f64 {
        (self.max_x - self.min_x) / self.cells_x as f64
    }

    pub fn dy(&self) -> f64 {
        (self.max_y - self.min_y) / self.cells_y as f64
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x * self.cells_y
    }

    pub fn index(&self, c: Cell) -> usize {
        c.j * self.cells_x + c.i
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.cells_x, index / self.cells_x)
    }

    pub fn contains_cell(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.cells_x && (j as usize) < self.cells_y
    }

    pub fn world_to_cell(&self, p: &Point3) -> Result<Cell> {
        if !(p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y) {
            return Err(Error::Range(format!("{p} lies outside the grid footprint")));
        }
        let i = (((p.x - self.min_x) / self.dx()).floor() as usize).min(self.cells_x - 1);
        let j = (((p.y - self.min_y) / self.dy()).floor() as usize).min(self.cells_y - 1);
        Ok(Cell::new(i, j))
    }

    /// Cell center at altitude `z`.
    pub fn cell_to_world(&self, c: Cell, z: f64) -> Point3 {
        let (u, v) = c.center();
        self.grid_to_world(u, v, z)
    }

    /// Continuous cell coordinates to world coordinates.
    pub fn grid_to_world(&self, u: f64, v: f64, z: f64) -> Point3 {
        Point3::new(self.min_x + u * self.dx(), self.min_y + v * self.dy(), z)
    }

    pub fn world_to_grid(&self, p: &Point3) -> (f64, f64) {
        ((p.x - self.min_x) / self.dx(), (p.y - self.min_y) / self.dy())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            occupied: vec![false; spec.cell_count()],
            spec,
        }
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.occupied[self.spec.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_occupied(c)
    }

    /// Free and inside the grid.
    pub fn is_free_at(&self, i: isize, j: isize) -> bool {
        self.spec.contains_cell(i, j) && self.is_free(Cell::new(i as usize, j as usize))
    }

    pub fn set(&mut self, c: Cell, occupied: bool) {
        let k = self.spec.index(c);
        self.occupied[k] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.spec.cell_count())
            .filter(|&k| !self.occupied[k])
            .map(|k| self.spec.cell_at(k))
    }

    /// Free 4-neighbours of `c` in N-E-S-W order.
    pub fn free_neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBOR_ORDER.iter().filter_map(move |&(di, dj)| {
            let (i, j) = (c.i as isize + di, c.j as isize + dj);
            self.is_free_at(i, j).then(|| Cell::new(i as usize, j as usize))
        })
    }

    /// Text raster, top row = highest y. `.` free, `#` occupied.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.spec.cells_x + 1) * self.spec.cells_y);
        for j in (0..self.spec.cells_y).rev() {
            for i in 0..self.spec.cells_x {
                out.push(if self.is_occupied(Cell::new(i, j)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`OccupancyGrid::to_text`].
    pub fn from_text(spec: GridSpec, text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().collect();
        if rows.len() != spec.cells_y || rows.iter().any(|r| r.chars().count() != spec.cells_x) {
            return Err(Error::Contract(format!(
                "raster must be {}x{} characters",
                spec.cells_x, spec.cells_y
            )));
        }
        let mut grid = OccupancyGrid::empty(spec);
        for (r, row) in rows.iter().enumerate() {
            let j = spec.cells_y - 1 - r;
            for (i, ch) in row.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => grid.set(Cell::new(i, j), true),
                    other => {
                        return Err(Error::Contract(format!("unexpected raster character {other:?}")))
                    }
                }
            }
        }
        Ok(grid)
    }

    /// True when every cell crossed by the straight segment between two
    /// continuous grid points is free.
    pub fn segment_is_free(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        supercover(a, b).into_iter().all(|(i, j)| self.is_free_at(i, j))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{}x{} grid, cell {:.3} x {:.3} m, {} occupied",
            self.spec.cells_x,
            self.spec.cells_y,
            self.spec.dx(),
            self.spec.dy(),
            self.occupied_count()
        );
        s
    }
}

/// When a cell counts as blocked by an obstacle square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRule {
    /// The cell center lies within the square.
    Center,
    /// Any part of the cell touches the square, so free cells never
    /// overlap an obstacle footprint.
    #[default]
    Overlap,
}

/// Marks a cell occupied iff its center lies within the axis-aligned square
/// of half-extent `footprint_half_extent + inflation` around any obstacle
/// center (2D projection). Fails if the start or goal cell ends up occupied.
pub fn rasterize(
    scenario: &Scenario,
    spec: &GridSpec,
    footprint_half_extent: f64,
    inflation: f64,
) -> Result<OccupancyGrid> {
    rasterize_with(scenario, spec, footprint_half_extent, inflation, CellRule::Center)
}

pub fn rasterize_with(
    scenario: &Scenario,
    spec: &GridSpec,
    footprint_half_extent: f64,
    inflation: f64,
    rule: CellRule,
) -> Result<OccupancyGrid> {
    let grid = rasterize_centers_with(&scenario.obstacle_centers(), spec, footprint_half_extent, inflation, rule)?;
    for (label, p) in [("start", scenario.start), ("goal", scenario.goal)] {
        let c = spec.world_to_cell(&p)?;
        if grid.is_occupied(c) {
            return Err(Error::InfeasibleRasterization {
                entity: format!("{label} {p} (cell {},{})", c.i, c.j),
            });
        }
    }
    Ok(grid)
}

/// Rasterization without the start/goal feasibility check.
pub fn rasterize_centers(
    centers: &[Point3],
    spec: &GridSpec,
    footprint_half_extent: f64,
    inflation: f64,
) -> Result<OccupancyGrid> {
    rasterize_centers_with(centers, spec, footprint_half_extent, inflation, CellRule::Center)
}

pub fn rasterize_centers_with(
    centers: &[Point3],
    spec: &GridSpec,
    footprint_half_extent: f64,
    inflation: f64,
    rule: CellRule,
) -> Result<OccupancyGrid> {
    if !(footprint_half_extent >= 0.0 && inflation >= 0.0) {
        return Err(Error::Contract(
            "footprint half-extent and inflation must be >= 0".into(),
        ));
    }
    let h = footprint_half_extent + inflation;
    let (hx, hy) = match rule {
        CellRule::Center => (h, h),
        CellRule::Overlap => (h + spec.dx() / 2.0, h + spec.dy() / 2.0),
    };
    let mut grid = OccupancyGrid::empty(*spec);
    for k in 0..spec.cell_count() {
        let c = spec.cell_at(k);
        let w = spec.cell_to_world(c, 0.0);
        if centers
            .iter()
            .any(|o| (w.x - o.x).abs() <= hx && (w.y - o.y).abs() <= hy)
        {
            grid.occupied[k] = true;
        }
    }
    Ok(grid)
}

/// Every cell touched by the segment `a -> b` in continuous cell
/// coordinates, including both side cells when the line passes exactly
/// through a cell corner.
pub fn supercover(a: (f64, f64), b: (f64, f64)) -> Vec<(isize, isize)> {
    let mut i = a.0.floor() as isize;
    let mut j = a.1.floor() as isize;
    let end = (b.0.floor() as isize, b.1.floor() as isize);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let step_i: isize = if dx > 0.0 { 1 } else { -1 };
    let step_j: isize = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        ((i + 1) as f64 - a.0) / dx
    } else if dx < 0.0 {
        (a.0 - i as f64) / -dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((j + 1) as f64 - a.1) / dy
    } else if dy < 0.0 {
        (a.1 - j as f64) / -dy
    } else {
        f64::INFINITY
    };

    let mut cells = vec![(i, j)];
    while (i, j) != end {
        if t_max_x.min(t_max_y) > 1.0 {
            break;
        }
        if (t_max_x - t_max_y).abs() < 1e-12 {
            cells.push((i + step_i, j));
            cells.push((i, j + step_j));
            i += step_i;
            j += step_j;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            i += step_i;
            t_max_x += t_delta_x;
        } else {
            j += step_j;
            t_max_y += t_delta_y;
        }
        cells.push((i, j));
    }
    cells
}
