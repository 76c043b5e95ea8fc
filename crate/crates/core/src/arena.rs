//! World geometry: a periodic square (torus) for point agents, a walled
//! square with disk bodies for embodied robots. Owns boundary handling,
//! initial placement and the position-projection collision solver.

use rand::Rng;
use thiserror::Error;

use crate::grid::CellGrid;
use crate::mobility::{sample_heading, Pose};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Walled,
}

/// Square world of side `side`. Periodic arenas host point agents
/// (`body_radius = 0`); walled arenas host disks of radius `body_radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arena {
    pub side: f64,
    pub boundary: Boundary,
    pub body_radius: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArenaError {
    #[error("arena side must be positive and finite (got {0})")]
    BadSide(f64),
    #[error("walled arena requires 0 < 2*body_radius < side (radius {radius}, side {side})")]
    BadRadius { radius: f64, side: f64 },
}

impl Arena {
    /// Torus of side `side` for dimensionless point agents.
    pub fn periodic(side: f64) -> Result<Self, ArenaError> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(ArenaError::BadSide(side));
        }
        Ok(Arena { side, boundary: Boundary::Periodic, body_radius: 0.0 })
    }

    /// Walled square hosting disks of radius `body_radius`.
    pub fn walled(side: f64, body_radius: f64) -> Result<Self, ArenaError> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(ArenaError::BadSide(side));
        }
        if !(body_radius > 0.0 && 2.0 * body_radius < side) {
            return Err(ArenaError::BadRadius { radius: body_radius, side });
        }
        Ok(Arena { side, boundary: Boundary::Walled, body_radius })
    }

    /// Maps each coordinate into `[0, side)` by modular arithmetic.
    /// Identity on walled arenas.
    pub fn wrap(&self, p: Vec2) -> Vec2 {
        match self.boundary {
            Boundary::Periodic => Vec2::new(wrap_coord(p.x, self.side), wrap_coord(p.y, self.side)),
            Boundary::Walled => p,
        }
    }

    /// Shortest displacement from `a` to `b` under the arena metric
    /// (minimum-image on the torus, Euclidean otherwise).
    pub fn displacement(&self, a: Vec2, b: Vec2) -> Vec2 {
        let d = b - a;
        match self.boundary {
            Boundary::Periodic => {
                Vec2::new(min_image(d.x, self.side), min_image(d.y, self.side))
            }
            Boundary::Walled => d,
        }
    }

    pub fn distance_sq(&self, a: Vec2, b: Vec2) -> f64 {
        self.displacement(a, b).norm_sq()
    }

    pub fn distance(&self, a: Vec2, b: Vec2) -> f64 {
        self.distance_sq(a, b).sqrt()
    }
}

fn wrap_coord(x: f64, side: f64) -> f64 {
    let r = x.rem_euclid(side);
    // rem_euclid of a tiny negative can round to `side` itself
    if r >= side {
        0.0
    } else {
        r
    }
}

fn min_image(d: f64, side: f64) -> f64 {
    if d > 0.5 * side {
        d - side
    } else if d < -0.5 * side {
        d + side
    } else {
        d
    }
}

/// Margin of a placement cell over the robot diameter.
pub const GRID_MARGIN: f64 = 0.1;

/// Side of the square placement cells: a little wider than one robot.
pub fn grid_cell_side(body_radius: f64) -> f64 {
    2.0 * body_radius * (1.0 + GRID_MARGIN)
}

/// How many robots a walled arena can host at placement time.
pub fn grid_capacity(side: f64, body_radius: f64) -> usize {
    let m = (side / grid_cell_side(body_radius)).floor() as usize;
    m * m
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("{agents} agents exceed the {cells} placement cells of the arena")]
    TooManyAgents { agents: usize, cells: usize },
}

/// Overlap-free initial placement for robots: `count` distinct placement
/// cells are drawn uniformly without replacement and each robot starts at
/// its cell centre with a uniform heading.
pub fn grid_place<R: Rng + ?Sized>(
    count: usize,
    arena: &Arena,
    rng: &mut R,
) -> Result<Vec<Pose>, PlacementError> {
    let cell = grid_cell_side(arena.body_radius);
    let per_side = (arena.side / cell).floor() as usize;
    let cells = per_side * per_side;
    if count > cells {
        return Err(PlacementError::TooManyAgents { agents: count, cells });
    }
    // partial Fisher-Yates: the first `count` entries are a uniform draw
    // without replacement
    let mut ids: Vec<usize> = (0..cells).collect();
    for k in 0..count {
        let j = rng.random_range(k..cells);
        ids.swap(k, j);
    }
    let offset = (arena.side - per_side as f64 * cell) * 0.5;
    Ok(ids[..count]
        .iter()
        .map(|&id| {
            let (cx, cy) = (id % per_side, id / per_side);
            Pose {
                position: Vec2::new(
                    offset + (cx as f64 + 0.5) * cell,
                    offset + (cy as f64 + 0.5) * cell,
                ),
                heading: sample_heading(rng),
            }
        })
        .collect())
}

/// I.i.d. uniform positions in `[0, side)^2` with uniform headings.
pub fn uniform_place<R: Rng + ?Sized>(count: usize, side: f64, rng: &mut R) -> Vec<Pose> {
    (0..count)
        .map(|_| {
            let x = rng.random::<f64>() * side;
            let y = rng.random::<f64>() * side;
            Pose { position: Vec2::new(x, y), heading: sample_heading(rng) }
        })
        .collect()
}

/// Residual pair overlap below which a configuration counts as resolved.
pub const OVERLAP_TOLERANCE: f64 = 1e-6;

/// Projection passes per step before the solver gives up. Corrections
/// spread diffusively through wall-pinned piles, so deep clusters need a
/// few tens of over-relaxed sweeps; the common case resolves in zero to
/// three.
pub const MAX_SOLVER_ITERS: u32 = 500;

/// Over-relaxation factor for sweeps after the first. Plain projections
/// re-violate neighboring contacts and crawl through dense piles; pushing
/// past the contact point cuts the sweep count several-fold.
const SOLVER_OMEGA: f64 = 1.8;

/// Residual above `10 * OVERLAP_TOLERANCE` after the iteration budget is an
/// over-packed arena and reported as an error.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("collision solver stalled: residual overlap {residual:.3e} m after {iterations} iterations")]
pub struct SolverStall {
    pub residual: f64,
    pub iterations: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverReport {
    pub iterations: u32,
    pub residual: f64,
}

/// Iterative position projection for disk-disk and disk-wall collisions.
///
/// Overlapping pairs are pushed apart symmetrically along their centre
/// line to exactly touching distance; centres are then clamped into
/// `[r, side - r]`. Headings and velocities are untouched: at centimetre
/// per second speeds the dynamics are quasi-static and collisions only
/// need to block motion. The solver keeps its grid and buffers so the
/// engine can run it every step without reallocating.
pub struct CollisionSolver {
    arena: Arena,
    grid: CellGrid,
    pairs: Vec<(u32, u32)>,
}

impl CollisionSolver {
    pub fn new(arena: &Arena) -> Self {
        debug_assert_eq!(arena.boundary, Boundary::Walled);
        CollisionSolver {
            arena: *arena,
            grid: CellGrid::new(arena.side, 2.0 * arena.body_radius, false),
            pairs: Vec::new(),
        }
    }

    pub fn resolve(&mut self, positions: &mut [Vec2]) -> Result<SolverReport, SolverStall> {
        let r = self.arena.body_radius;
        let side = self.arena.side;
        let touch = 2.0 * r;
        let lo = r;
        let hi = side - r;

        let mut iterations = 0;
        loop {
            // measure: collect currently overlapping pairs
            self.grid.rebuild(positions);
            self.pairs.clear();
            let pairs = &mut self.pairs;
            let mut residual = 0.0f64;
            self.grid.for_each_candidate_pair(|i, j| {
                let d = (positions[j] - positions[i]).norm();
                let overlap = touch - d;
                if overlap > OVERLAP_TOLERANCE {
                    pairs.push((i.min(j) as u32, i.max(j) as u32));
                }
                if overlap > residual {
                    residual = overlap;
                }
            });
            for p in positions.iter() {
                let wall = (lo - p.x).max(p.x - hi).max(lo - p.y).max(p.y - hi);
                if wall > residual {
                    residual = wall;
                }
            }

            if residual <= OVERLAP_TOLERANCE {
                return Ok(SolverReport { iterations, residual: residual.max(0.0) });
            }
            if iterations >= MAX_SOLVER_ITERS {
                if residual > 10.0 * OVERLAP_TOLERANCE {
                    return Err(SolverStall { residual, iterations });
                }
                return Ok(SolverReport { iterations, residual });
            }

            // correct: symmetric push along the centre line, then wall
            // clamp. The first sweep projects to exact contact; later
            // sweeps over-relax. Pairs are processed in index order on
            // current positions.
            let omega = if iterations == 0 { 1.0 } else { SOLVER_OMEGA };
            self.pairs.sort_unstable();
            for &(a, b) in &self.pairs {
                let (i, j) = (a as usize, b as usize);
                let delta = positions[j] - positions[i];
                let d = delta.norm();
                if d >= touch {
                    continue; // separated by an earlier correction
                }
                let dir = if d > 0.0 {
                    delta * (1.0 / d)
                } else {
                    Vec2::new(1.0, 0.0) // coincident centres: pick a fixed axis
                };
                let shift = dir * (omega * 0.5 * (touch - d));
                positions[i] -= shift;
                positions[j] += shift;
            }
            for p in positions.iter_mut() {
                p.x = p.x.clamp(lo, hi);
                p.y = p.y.clamp(lo, hi);
            }
            iterations += 1;
        }
    }
}

/// One-shot wrapper around [`CollisionSolver`] for a single configuration.
pub fn resolve_collisions(
    positions: &mut [Vec2],
    arena: &Arena,
) -> Result<SolverReport, SolverStall> {
    CollisionSolver::new(arena).resolve(positions)
}
