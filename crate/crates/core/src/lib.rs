//! Deterministic discrete-time simulator of the broadcast naming game on
//! mobile agents.
//!
//! Two movement models share one game engine: dimensionless point agents
//! random-walking on a torus, and embodied disk robots with differential
//! drive, motion noise and collisions inside a walled arena. On top of the
//! engine sit interaction-network analytics (range graphs, percolation
//! thresholds, components) and consensus metrics (convergence time, memory
//! load, diffusion estimates, power-law fits).
//!
//! Every run is a pure function of its config and 64-bit seed.

pub mod arena;
pub mod engine;
pub mod graph;
mod grid;
pub mod metrics;
pub mod mobility;
pub mod ng;
pub mod seed;
pub mod vec2;

pub use arena::{
    grid_capacity, grid_cell_side, grid_place, resolve_collisions, uniform_place, Arena,
    ArenaError, Boundary, CollisionSolver, PlacementError, SolverReport, SolverStall,
    GRID_MARGIN, MAX_SOLVER_ITERS, OVERLAP_TOLERANCE,
};
pub use engine::{
    apply_loss, run, run_with, AgentState, ConfigError, ConfigViolation, EngineError, LossPolicy,
    Message, Model, RunOptions, Sim, SimConfig, SpeakPhase,
};
pub use graph::{
    build_graph, critical_sizes, expected_avg_degree, ComponentReport, InteractionGraph,
    PERCOLATION_DEGREE,
};
pub use metrics::{
    ensemble_msd, estimate_diffusion, fit_power_law, memory_metric, rescaled_broadcasts,
    summarize_values, MetricsError, PowerLawFit, RunResult, SeriesSample, StatSummary,
};
pub use mobility::{
    angle_diff, embodied_step, normalize_angle, point_step, sample_heading, walk_target,
    walker_ensemble, MotionParams, Pose, WalkState, WalkerModel,
};
pub use ng::{invent_word, AgentId, Inventory, Word};
pub use vec2::Vec2;
