//! Uniform cell grid for fixed-radius neighbor queries in a window.

use crate::geometry::Point2D;
use crate::pointprocess::{BoundaryMode, SimulationWindow};

pub(crate) struct CellGrid {
    cells_per_side: usize,
    cell_size: f64,
    torus: bool,
    /// `starts[c]..starts[c + 1]` indexes `items` for cell `c`.
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl CellGrid {
    /// Cells are at least `radius` wide, so every point within `radius` of
    /// a query lies in the query cell or one of its eight neighbors.
    pub(crate) fn new(points: &[Point2D], window: &SimulationWindow, radius: f64) -> Self {
        let side = window.side_length();
        let max_cells = ((points.len() as f64).sqrt() as usize).clamp(1, 4096);
        let cells_per_side = ((side / radius).floor() as usize).clamp(1, max_cells);
        let cell_size = side / cells_per_side as f64;
        let mut grid = Self {
            cells_per_side,
            cell_size,
            torus: window.mode() == BoundaryMode::Torus,
            starts: vec![0; cells_per_side * cells_per_side + 1],
            items: vec![0; points.len()],
        };
        let cell_of: Vec<usize> = points.iter().map(|p| grid.cell_index(*p)).collect();
        for &c in &cell_of {
            grid.starts[c + 1] += 1;
        }
        for c in 0..grid.starts.len() - 1 {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cell_of.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn axis_cell(&self, v: f64) -> usize {
        ((v / self.cell_size) as usize).min(self.cells_per_side - 1)
    }

    fn cell_index(&self, p: Point2D) -> usize {
        self.axis_cell(p.y) * self.cells_per_side + self.axis_cell(p.x)
    }

    /// Column or row indices adjacent to `c`, without repeats.
    fn adjacent(&self, c: usize) -> ([usize; 3], usize) {
        let n = self.cells_per_side;
        if self.torus {
            match n {
                1 => ([0, 0, 0], 1),
                2 => ([0, 1, 0], 2),
                _ => ([(c + n - 1) % n, c, (c + 1) % n], 3),
            }
        } else {
            let lo = c.saturating_sub(1);
            let hi = (c + 1).min(n - 1);
            let mut out = [0; 3];
            let mut k = 0;
            for v in lo..=hi {
                out[k] = v;
                k += 1;
            }
            (out, k)
        }
    }

    /// Calls `f` with the index of every point that may lie within the grid
    /// radius of `p`; stops early and returns true once `f` returns true.
    pub(crate) fn any_candidate(&self, p: Point2D, mut f: impl FnMut(usize) -> bool) -> bool {
        let (cols, nc) = self.adjacent(self.axis_cell(p.x));
        let (rows, nr) = self.adjacent(self.axis_cell(p.y));
        for &row in &rows[..nr] {
            for &col in &cols[..nc] {
                let c = row * self.cells_per_side + col;
                let (a, b) = (self.starts[c] as usize, self.starts[c + 1] as usize);
                for &i in &self.items[a..b] {
                    if f(i as usize) {
                        return true;
                    }
                }
            }
        }
        false
    }
}
