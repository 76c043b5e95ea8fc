//! Static interaction network: who can hear whom at one instant.
//!
//! Agents are linked when their distance under the arena metric is at most
//! the interaction range. The graph is exact (no false positives or
//! negatives); a uniform cell grid keeps construction at O(N + edges)
//! expected time. Also provides the mean-degree formula and the group-size
//! thresholds it implies, plus connected-component analytics.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::arena::Arena;
use crate::grid::CellGrid;
use crate::vec2::Vec2;

/// Mean degree at which a random geometric graph develops a giant
/// component spanning the system.
pub const PERCOLATION_DEGREE: f64 = 4.51;

/// Symmetric range graph over agent indices; adjacency lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    adjacency: Vec<Vec<u32>>,
}

impl InteractionGraph {
    pub fn agent_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, agent: usize) -> &[u32] {
        &self.adjacency[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.adjacency[agent].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            0.0
        } else {
            2.0 * self.edge_count() as f64 / self.adjacency.len() as f64
        }
    }

    /// Connected components by traversal: sizes in descending order plus
    /// the fraction of agents in the largest one.
    pub fn components(&self) -> ComponentReport {
        let n = self.adjacency.len();
        let mut visited = vec![false; n];
        let mut stack = Vec::new();
        let mut sizes = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            stack.push(start);
            let mut size = 0usize;
            while let Some(i) = stack.pop() {
                size += 1;
                for &j in &self.adjacency[i] {
                    if !visited[j as usize] {
                        visited[j as usize] = true;
                        stack.push(j as usize);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let giant_fraction = if n == 0 { 0.0 } else { sizes[0] as f64 / n as f64 };
        ComponentReport { sizes, giant_fraction }
    }

    /// Writes the graph as one `i j` line per edge (i < j).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, neighbors) in self.adjacency.iter().enumerate() {
            for &j in neighbors {
                if (i as u32) < j {
                    writeln!(out, "{} {}", i, j)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentReport {
    /// Component sizes, largest first. Sums to the agent count.
    pub sizes: Vec<usize>,
    pub giant_fraction: f64,
}

/// Exact range graph over `positions`: an edge wherever the arena distance
/// is at most `range` (closed ball).
pub fn build_graph(positions: &[Vec2], range: f64, arena: &Arena) -> InteractionGraph {
    let mut grid = CellGrid::new(arena.side, range, arena.boundary == crate::arena::Boundary::Periodic);
    grid.rebuild(positions);
    build_graph_with(&mut grid, positions, range, arena)
}

/// Grid-reusing variant for per-step callers; `grid` must already be
/// rebuilt on `positions` with a cell no smaller than `range`.
pub(crate) fn build_graph_with(
    grid: &mut CellGrid,
    positions: &[Vec2],
    range: f64,
    arena: &Arena,
) -> InteractionGraph {
    let mut adjacency = vec![Vec::new(); positions.len()];
    let range_sq = range * range;
    grid.for_each_candidate_pair(|i, j| {
        if arena.distance_sq(positions[i], positions[j]) <= range_sq {
            adjacency[i].push(j as u32);
            adjacency[j].push(i as u32);
        }
    });
    for list in adjacency.iter_mut() {
        list.sort_unstable();
    }
    InteractionGraph { adjacency }
}

/// Expected mean degree of uniformly placed agents:
/// `pi * N * range^2 / side^2`.
pub fn expected_avg_degree(agents: u32, side: f64, range: f64) -> f64 {
    PI * agents as f64 * range * range / (side * side)
}

/// Group-size thresholds of the static network for a given geometry.
///
/// The first is the size whose mean degree is closest to one (below it,
/// contacts are sporadic and mobility-driven); the second is the largest
/// size whose mean degree stays below [`PERCOLATION_DEGREE`] (above it, a
/// giant component spans the group).
pub fn critical_sizes(side: f64, range: f64) -> (u32, u32) {
    let size_at_unit_degree = side * side / (PI * range * range);
    let n1 = size_at_unit_degree.round() as u32;
    let nc = (PERCOLATION_DEGREE * size_at_unit_degree).floor() as u32;
    (n1, nc)
}
