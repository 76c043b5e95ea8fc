//! Uniform cell grid over a square domain, used for neighbor candidate
//! queries by the interaction graph and the collision solver.
//!
//! Cells are at least `min_cell` wide, so two points closer than `min_cell`
//! (under the domain metric) always sit in the same or adjacent cells. With
//! fewer than 3 cells per side adjacency offsets would alias under wrapping,
//! so those degenerate grids fall back to exhaustive enumeration.

use crate::vec2::Vec2;

pub(crate) struct CellGrid {
    cells_per_side: usize,
    cell: f64,
    periodic: bool,
    heads: Vec<i32>,
    next: Vec<i32>,
    count: usize,
}

impl CellGrid {
    pub fn new(side: f64, min_cell: f64, periodic: bool) -> Self {
        debug_assert!(side > 0.0 && min_cell > 0.0);
        let m = ((side / min_cell).floor() as usize).max(1);
        CellGrid {
            cells_per_side: m,
            cell: side / m as f64,
            periodic,
            heads: vec![-1; m * m],
            next: Vec::new(),
            count: 0,
        }
    }

    fn exhaustive(&self) -> bool {
        self.cells_per_side < 3
    }

    fn coord(&self, x: f64) -> usize {
        // positions are wrapped (periodic) or clamped into walls already;
        // the min guards the x == side edge case
        (((x / self.cell) as isize).max(0) as usize).min(self.cells_per_side - 1)
    }

    fn cell_index(&self, p: Vec2) -> usize {
        self.coord(p.y) * self.cells_per_side + self.coord(p.x)
    }

    pub fn rebuild(&mut self, positions: &[Vec2]) {
        self.heads.fill(-1);
        self.next.clear();
        self.next.resize(positions.len(), -1);
        self.count = positions.len();
        for (i, p) in positions.iter().enumerate() {
            let c = self.cell_index(*p);
            self.next[i] = self.heads[c];
            self.heads[c] = i as i32;
        }
    }

    fn for_each_in_cell(&self, cell: usize, mut f: impl FnMut(usize)) {
        let mut cur = self.heads[cell];
        while cur >= 0 {
            f(cur as usize);
            cur = self.next[cur as usize];
        }
    }

    /// Calls `f` for every unordered candidate pair `(i, j)`, `i != j`, that
    /// could be within `min_cell` of each other. May include farther pairs;
    /// never misses a close one.
    pub fn for_each_candidate_pair(&self, mut f: impl FnMut(usize, usize)) {
        if self.exhaustive() {
            for i in 0..self.count {
                for j in (i + 1)..self.count {
                    f(i, j);
                }
            }
            return;
        }
        let m = self.cells_per_side;
        // forward half-stencil: same cell plus E, NE, N, NW neighbors
        const FORWARD: [(isize, isize); 4] = [(1, 0), (1, 1), (0, 1), (-1, 1)];
        for cy in 0..m {
            for cx in 0..m {
                let here = cy * m + cx;
                // pairs within the cell
                let mut a = self.heads[here];
                while a >= 0 {
                    let mut b = self.next[a as usize];
                    while b >= 0 {
                        f(a as usize, b as usize);
                        b = self.next[b as usize];
                    }
                    a = self.next[a as usize];
                }
                // pairs with forward neighbor cells
                for (dx, dy) in FORWARD {
                    let (nx, ny) = if self.periodic {
                        (
                            (cx as isize + dx).rem_euclid(m as isize) as usize,
                            (cy as isize + dy).rem_euclid(m as isize) as usize,
                        )
                    } else {
                        let nx = cx as isize + dx;
                        let ny = cy as isize + dy;
                        if nx < 0 || ny < 0 || nx >= m as isize || ny >= m as isize {
                            continue;
                        }
                        (nx as usize, ny as usize)
                    };
                    let there = ny * m + nx;
                    self.for_each_in_cell(here, |a| {
                        self.for_each_in_cell(there, |b| f(a, b));
                    });
                }
            }
        }
    }

    /// Calls `f` for every candidate index near `p`, excluding `exclude`.
    pub fn for_each_candidate_near(&self, p: Vec2, exclude: usize, mut f: impl FnMut(usize)) {
        if self.exhaustive() {
            for i in 0..self.count {
                if i != exclude {
                    f(i);
                }
            }
            return;
        }
        let m = self.cells_per_side;
        let cx = self.coord(p.x) as isize;
        let cy = self.coord(p.y) as isize;
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = if self.periodic {
                    (
                        (cx + dx).rem_euclid(m as isize) as usize,
                        (cy + dy).rem_euclid(m as isize) as usize,
                    )
                } else {
                    let nx = cx + dx;
                    let ny = cy + dy;
                    if nx < 0 || ny < 0 || nx >= m as isize || ny >= m as isize {
                        continue;
                    }
                    (nx as usize, ny as usize)
                };
                self.for_each_in_cell(ny * m + nx, |i| {
                    if i != exclude {
                        f(i);
                    }
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_pairs_cover_all_close_pairs() {
        // hand-placed points on a torus, including a wrap-around pair
        let side = 1.0;
        let positions = vec![
            Vec2::new(0.02, 0.5),
            Vec2::new(0.98, 0.5), // 0.04 from the first across the seam
            Vec2::new(0.5, 0.5),
            Vec2::new(0.55, 0.52),
            Vec2::new(0.3, 0.9),
        ];
        let mut grid = CellGrid::new(side, 0.1, true);
        grid.rebuild(&positions);
        let mut pairs = Vec::new();
        grid.for_each_candidate_pair(|i, j| pairs.push((i.min(j), i.max(j))));
        assert!(pairs.contains(&(0, 1)), "wrap-around pair missed: {pairs:?}");
        assert!(pairs.contains(&(2, 3)));
    }

    #[test]
    fn degenerate_grid_enumerates_everything() {
        let positions = vec![Vec2::new(0.1, 0.1), Vec2::new(0.2, 0.2), Vec2::new(0.3, 0.1)];
        let mut grid = CellGrid::new(0.4, 0.3, false);
        grid.rebuild(&positions);
        let mut pairs = Vec::new();
        grid.for_each_candidate_pair(|i, j| pairs.push((i, j)));
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
    }
}
