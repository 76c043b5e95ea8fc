//! The per-step simulation loop running all agents concurrently.
//!
//! Step order, identical for every configuration:
//!
//! 1. every agent moves (random-walk point step, or pivot/advance for
//!    robots), then positions are wrapped (torus) or collision-resolved
//!    (walls);
//! 2. words broadcast on the previous step are delivered: the loss policy
//!    filters each (message, receiver) pair, every receiver shuffles its
//!    inbox with its own RNG stream and applies the hearer update word by
//!    word;
//! 3. every agent whose speaking phase is due selects a word (inventing on
//!    an empty inventory) and enqueues it for delivery next step to its
//!    current neighbors within the interaction range, evaluated on the
//!    post-motion positions;
//! 4. memory trackers update and the step counter advances.
//!
//! Broadcasts buffered for one step make concurrent games well defined:
//! the outcome does not depend on agent iteration order. A run is a pure
//! function of `(SimConfig, seed)`.
//!
//! An optional event sink receives one text record per line:
//! `<step> turn <agent>`, `<step> broadcast <agent> <word>`,
//! `<step> deliver <sender> <receiver> <word>`,
//! `<step> drop <sender> <receiver> <word>`, `<step> converge <word>`,
//! with words serialized as `creator:serial`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arena::{
    grid_capacity, grid_place, uniform_place, Arena, ArenaError, Boundary, CollisionSolver,
    PlacementError, SolverStall,
};
use crate::grid::CellGrid;
use crate::metrics::{memory_metric, RunResult, SeriesSample};
use crate::mobility::{embodied_step, point_step, walk_target, MotionParams, Pose, WalkState};
use crate::ng::{AgentId, Inventory, Word};
use crate::seed::{mix, STREAM_AGENT, STREAM_LOSS, STREAM_PHASE, STREAM_PLACEMENT};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Point,
    Embodied,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Point => "point",
            Model::Embodied => "embodied",
        })
    }
}

/// Message-loss channel model. `Iid(p)` drops each (message, receiver)
/// pair independently with probability `p` from a dedicated RNG stream, so
/// `Iid(0.0)` reproduces the `None` trajectory bit for bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossPolicy {
    None,
    Iid(f64),
}

impl LossPolicy {
    pub fn drop_probability(&self) -> f64 {
        match *self {
            LossPolicy::None => 0.0,
            LossPolicy::Iid(p) => p,
        }
    }

    /// One Bernoulli trial of the channel for a single (message, receiver)
    /// pair. `None` and `Iid(0.0)` consume no randomness, so a zero-loss
    /// channel reproduces the no-policy trajectory exactly.
    pub fn pair_survives<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let p = self.drop_probability();
        !(p > 0.0 && rng.random::<f64>() < p)
    }
}

/// Filters a batch of in-flight messages through the loss policy: each
/// (message, receiver) pair is dropped independently. Returns the
/// surviving pairs as (message index, receiver), in batch order — the
/// same order the engine consumes its own loss stream in.
pub fn apply_loss<R: Rng + ?Sized>(
    messages: &[Message],
    policy: LossPolicy,
    rng: &mut R,
) -> Vec<(usize, u32)> {
    let mut survivors = Vec::new();
    for (index, message) in messages.iter().enumerate() {
        for &receiver in &message.recipients {
            if policy.pair_survives(rng) {
                survivors.push((index, receiver));
            }
        }
    }
    survivors
}

/// How speaking phases are assigned: `Shared` has every agent speak on the
/// same steps (maximum game concurrency); `Staggered` draws each agent a
/// uniform phase offset in `[0, speak_steps)`, modeling unsynchronized
/// autonomous robots. Staggered is the default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeakPhase {
    Shared,
    Staggered,
}

pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_INTERACTION_RANGE: f64 = 0.1;
pub const DEFAULT_SPEED: f64 = 0.01;
pub const DEFAULT_ANGULAR_SPEED: f64 = PI / 5.0;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.4;
pub const DEFAULT_BODY_RADIUS: f64 = 0.0165;
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

/// Full parameterization of one run. Times are stored as step counts
/// (`tau_m = turn_steps * dt`, `tau_s = speak_steps * dt`), which makes
/// them integer multiples of `dt` by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub agents: u32,
    pub arena_side: f64,
    pub interaction_range: f64,
    pub model: Model,
    pub boundary: Boundary,
    pub speed: f64,
    pub angular_speed: f64,
    pub noise_sigma: f64,
    pub dt: f64,
    /// Steps between reorientations (n_m).
    pub turn_steps: u32,
    /// Steps between broadcasts (n_s).
    pub speak_steps: u32,
    pub body_radius: f64,
    pub loss: LossPolicy,
    pub seed: u64,
    pub max_steps: u64,
    pub speak_phase: SpeakPhase,
}

impl SimConfig {
    /// Point agents on a torus with the standard parameter set
    /// (dt 0.1 s, range 10 cm, speed 1 cm/s, tau_m = tau_s = 10 s).
    /// The point model is noiseless and body-less; `noise_sigma` and
    /// `body_radius` are carried so switching `model` is the only change
    /// needed to run the embodied variant.
    pub fn point(agents: u32, arena_side: f64) -> Self {
        SimConfig {
            agents,
            arena_side,
            interaction_range: DEFAULT_INTERACTION_RANGE,
            model: Model::Point,
            boundary: Boundary::Periodic,
            speed: DEFAULT_SPEED,
            angular_speed: DEFAULT_ANGULAR_SPEED,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            dt: DEFAULT_DT,
            turn_steps: 100,
            speak_steps: 100,
            body_radius: DEFAULT_BODY_RADIUS,
            loss: LossPolicy::None,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
            speak_phase: SpeakPhase::Staggered,
        }
    }

    /// Embodied robots in a walled arena with the standard parameter set
    /// (33 mm bodies, omega = pi/5 rad/s, sigma = 0.4).
    pub fn embodied(agents: u32, arena_side: f64) -> Self {
        SimConfig {
            model: Model::Embodied,
            boundary: Boundary::Walled,
            ..SimConfig::point(agents, arena_side)
        }
    }

    pub fn tau_m(&self) -> f64 {
        self.turn_steps as f64 * self.dt
    }

    pub fn tau_s(&self) -> f64 {
        self.speak_steps as f64 * self.dt
    }

    pub fn motion_params(&self) -> MotionParams {
        MotionParams {
            speed: self.speed,
            angular_speed: self.angular_speed,
            noise_sigma: self.noise_sigma,
            dt: self.dt,
            turn_steps: self.turn_steps,
        }
    }

    pub fn arena(&self) -> Result<Arena, ArenaError> {
        match self.boundary {
            Boundary::Periodic => Arena::periodic(self.arena_side),
            Boundary::Walled => Arena::walled(self.arena_side, self.body_radius),
        }
    }

    /// Checks every config invariant and reports all violations at once,
    /// each tagged with the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();
        let mut reject = |field: &'static str, message: String| {
            violations.push(ConfigViolation { field, message });
        };

        if self.agents == 0 {
            reject("agents", "at least one agent is required".into());
        }
        if !(self.arena_side > 0.0 && self.arena_side.is_finite()) {
            reject("arena_side", format!("must be positive and finite (got {})", self.arena_side));
        }
        if !(self.interaction_range > 0.0 && self.interaction_range.is_finite()) {
            reject(
                "interaction_range",
                format!("must be positive and finite (got {})", self.interaction_range),
            );
        } else if self.boundary == Boundary::Periodic
            && self.interaction_range > 0.5 * self.arena_side
        {
            reject(
                "interaction_range",
                format!(
                    "must be at most half the arena side under periodic boundaries \
                     (got {} with side {})",
                    self.interaction_range, self.arena_side
                ),
            );
        }
        match (self.model, self.boundary) {
            (Model::Point, Boundary::Periodic) | (Model::Embodied, Boundary::Walled) => {}
            (Model::Point, Boundary::Walled) => {
                reject("boundary", "the point model runs on periodic boundaries".into());
            }
            (Model::Embodied, Boundary::Periodic) => {
                reject("boundary", "the embodied model runs in a walled arena".into());
            }
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            reject("speed", format!("must be non-negative and finite (got {})", self.speed));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            reject("dt", format!("must be positive and finite (got {})", self.dt));
        }
        if self.turn_steps == 0 {
            reject("tau_m", "must be a positive integer multiple of dt".into());
        }
        if self.speak_steps == 0 {
            reject("tau_s", "must be a positive integer multiple of dt".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            reject(
                "noise_sigma",
                format!("must be non-negative and finite (got {})", self.noise_sigma),
            );
        }
        if self.model == Model::Embodied {
            if !(self.angular_speed > 0.0 && self.angular_speed.is_finite()) {
                reject(
                    "angular_speed",
                    format!("must be positive for embodied robots (got {})", self.angular_speed),
                );
            }
            if !(self.body_radius > 0.0 && 2.0 * self.body_radius < self.arena_side) {
                reject(
                    "body_radius",
                    format!(
                        "needs 0 < 2*body_radius < arena_side (got {} with side {})",
                        self.body_radius, self.arena_side
                    ),
                );
            } else {
                let cells = grid_capacity(self.arena_side, self.body_radius);
                if (self.agents as usize) > cells {
                    reject(
                        "agents",
                        format!("{} robots exceed the arena's {} placement cells", self.agents, cells),
                    );
                }
            }
        }
        if let LossPolicy::Iid(p) = self.loss {
            if !(0.0..=1.0).contains(&p) {
                reject("loss_p", format!("drop probability must be in [0, 1] (got {p})"));
            }
        }
        if self.max_steps == 0 {
            reject("max_steps", "must be at least 1".into());
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigViolation {
    pub field: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<ConfigViolation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid simulation config:")?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Solver(#[from] SolverStall),
    #[error("event log write failed: {0}")]
    Log(#[from] io::Error),
}

/// A broadcast in flight. Recipients are fixed at send time (the sender's
/// neighbors at the post-motion snapshot of the sending step); delivery
/// happens exactly one step later unless the loss policy drops a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub word: Word,
    pub sender: AgentId,
    pub sent_at: u64,
    pub recipients: Vec<u32>,
}

/// Per-agent state owned by the engine.
pub struct AgentState {
    pub pose: Pose,
    pub inventory: Inventory,
    /// Speaking phase offset in `[0, speak_steps)`.
    pub phase: u32,
    /// Largest inventory size this agent ever held.
    pub max_inventory: u32,
    /// Words this agent has invented so far.
    pub invented: u32,
    /// Accumulated position without periodic wrapping (trajectory metric).
    pub unwrapped: Vec2,
    walk: WalkState,
    rng: ChaCha8Rng,
}

pub struct Sim {
    config: SimConfig,
    arena: Arena,
    params: MotionParams,
    agents: Vec<AgentState>,
    pending: Vec<Message>,
    inboxes: Vec<Vec<(Word, AgentId)>>,
    loss_rng: ChaCha8Rng,
    comm_grid: CellGrid,
    solver: Option<CollisionSolver>,
    positions: Vec<Vec2>,
    recipients_scratch: Vec<u32>,
    step: u64,
    words_created: u32,
    peak_mean_inventory: f64,
    max_overlap: f64,
    max_wall_violation: f64,
    converged_at: Option<u64>,
    event_sink: Option<Box<dyn Write + Send>>,
}

impl Sim {
    pub fn new(config: &SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let arena = config.arena()?;
        let mut placement_rng =
            ChaCha8Rng::seed_from_u64(mix(config.seed, STREAM_PLACEMENT, 0));
        let poses = match config.model {
            Model::Point => {
                uniform_place(config.agents as usize, config.arena_side, &mut placement_rng)
            }
            Model::Embodied => grid_place(config.agents as usize, &arena, &mut placement_rng)?,
        };

        let mut phase_rng = ChaCha8Rng::seed_from_u64(mix(config.seed, STREAM_PHASE, 0));
        let agents: Vec<AgentState> = poses
            .into_iter()
            .enumerate()
            .map(|(i, pose)| AgentState {
                pose,
                inventory: Inventory::new(),
                phase: match config.speak_phase {
                    SpeakPhase::Shared => 0,
                    SpeakPhase::Staggered => phase_rng.random_range(0..config.speak_steps),
                },
                max_inventory: 0,
                invented: 0,
                unwrapped: pose.position,
                walk: WalkState { target: pose.heading },
                rng: ChaCha8Rng::seed_from_u64(mix(config.seed, STREAM_AGENT, i as u64)),
            })
            .collect();

        let n = agents.len();
        Ok(Sim {
            arena,
            params: config.motion_params(),
            agents,
            pending: Vec::new(),
            inboxes: vec![Vec::new(); n],
            loss_rng: ChaCha8Rng::seed_from_u64(mix(config.seed, STREAM_LOSS, 0)),
            comm_grid: CellGrid::new(
                config.arena_side,
                config.interaction_range,
                config.boundary == Boundary::Periodic,
            ),
            solver: match config.model {
                Model::Embodied => Some(CollisionSolver::new(&arena)),
                Model::Point => None,
            },
            positions: vec![Vec2::ZERO; n],
            recipients_scratch: Vec::new(),
            step: 0,
            words_created: 0,
            peak_mean_inventory: 0.0,
            max_overlap: 0.0,
            max_wall_violation: 0.0,
            converged_at: None,
            event_sink: None,
            config: config.clone(),
        })
    }

    /// Streams one text record per event to `sink`.
    pub fn set_event_sink(&mut self, sink: Box<dyn Write + Send>) {
        self.event_sink = Some(sink);
    }

    /// Overrides the initial poses (e.g. to pin agents for controlled
    /// experiments). Panics if the count differs from the config.
    pub fn set_poses(&mut self, poses: &[Pose]) {
        assert_eq!(poses.len(), self.agents.len(), "pose count must match agent count");
        for (agent, &pose) in self.agents.iter_mut().zip(poses) {
            agent.pose = pose;
            agent.unwrapped = pose.position;
            agent.walk = WalkState { target: pose.heading };
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Messages currently in flight (sent this step, delivered next step).
    pub fn pending(&self) -> &[Message] {
        &self.pending
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// First step at which consensus held, if any.
    pub fn converged_at(&self) -> Option<u64> {
        self.converged_at
    }

    pub fn words_created(&self) -> u32 {
        self.words_created
    }

    /// Largest post-step disk overlap seen so far (embodied runs).
    pub fn max_overlap(&self) -> f64 {
        self.max_overlap
    }

    /// Largest post-step wall violation seen so far (embodied runs).
    pub fn max_wall_violation(&self) -> f64 {
        self.max_wall_violation
    }

    /// Consensus test: every inventory is the same singleton and no message
    /// in flight carries a different word. Absorbing: a delivery of the
    /// consensus word is a success that changes nothing.
    pub fn is_converged(&self) -> bool {
        let Some(first) = self.agents[0].inventory.single() else {
            return false;
        };
        if !self.agents.iter().all(|a| a.inventory.single() == Some(first)) {
            return false;
        }
        self.pending.iter().all(|m| m.word == first)
    }

    /// Distinct words currently alive in inventories or in flight.
    pub fn distinct_words(&self) -> u32 {
        let mut seen: HashSet<Word> = HashSet::new();
        for agent in &self.agents {
            seen.extend(agent.inventory.words());
        }
        for message in &self.pending {
            seen.insert(message.word);
        }
        seen.len() as u32
    }

    /// Fraction of agents holding exactly one word.
    pub fn single_fraction(&self) -> f64 {
        let singles = self.agents.iter().filter(|a| a.inventory.len() == 1).count();
        singles as f64 / self.agents.len() as f64
    }

    pub fn total_words(&self) -> u64 {
        self.agents.iter().map(|a| a.inventory.len() as u64).sum()
    }

    /// Advances the simulation by one step.
    pub fn step(&mut self) -> Result<(), EngineError> {
        let t = self.step + 1;
        self.move_agents(t)?;
        self.deliver(t)?;
        self.broadcast(t)?;

        let mean = self.total_words() as f64 / self.agents.len() as f64;
        if mean > self.peak_mean_inventory {
            self.peak_mean_inventory = mean;
        }
        self.step = t;
        if self.converged_at.is_none() && self.is_converged() {
            self.converged_at = Some(t);
            if let Some(sink) = self.event_sink.as_mut() {
                let word = self.agents[0].inventory.single().expect("converged");
                writeln!(sink, "{t} converge {word}")?;
            }
        }
        Ok(())
    }

    fn move_agents(&mut self, t: u64) -> Result<(), EngineError> {
        let turn_due = t % self.params.turn_steps as u64 == 0;
        match self.config.model {
            Model::Point => {
                for agent in self.agents.iter_mut() {
                    let before = agent.pose.position;
                    let moved = point_step(agent.pose, &self.params, t, &mut agent.rng);
                    agent.unwrapped += moved.position - before;
                    agent.pose = Pose {
                        position: self.arena.wrap(moved.position),
                        heading: moved.heading,
                    };
                }
            }
            Model::Embodied => {
                for agent in self.agents.iter_mut() {
                    let target =
                        walk_target(&mut agent.walk, t, self.params.turn_steps, &mut agent.rng);
                    let (pose, _reached) =
                        embodied_step(agent.pose, target, &self.params, &mut agent.rng);
                    agent.pose = pose;
                }
                for (slot, agent) in self.positions.iter_mut().zip(&self.agents) {
                    *slot = agent.pose.position;
                }
                let solver = self.solver.as_mut().expect("embodied sim has a solver");
                let report = solver.resolve(&mut self.positions)?;
                if report.residual > self.max_overlap {
                    self.max_overlap = report.residual;
                }
                let lo = self.arena.body_radius;
                let hi = self.arena.side - self.arena.body_radius;
                for (agent, &p) in self.agents.iter_mut().zip(&self.positions) {
                    let wall = (lo - p.x).max(p.x - hi).max(lo - p.y).max(p.y - hi).max(0.0);
                    if wall > self.max_wall_violation {
                        self.max_wall_violation = wall;
                    }
                    agent.pose.position = p;
                    agent.unwrapped = p;
                }
            }
        }
        if turn_due {
            if let Some(sink) = self.event_sink.as_mut() {
                for i in 0..self.agents.len() {
                    writeln!(sink, "{t} turn {i}")?;
                }
            }
        }
        Ok(())
    }

    fn deliver(&mut self, t: u64) -> Result<(), EngineError> {
        for inbox in self.inboxes.iter_mut() {
            inbox.clear();
        }
        for message in self.pending.drain(..) {
            debug_assert_eq!(message.sent_at + 1, t, "messages live exactly one step");
            for &receiver in &message.recipients {
                let dropped = !self.config.loss.pair_survives(&mut self.loss_rng);
                if dropped {
                    if let Some(sink) = self.event_sink.as_mut() {
                        writeln!(sink, "{t} drop {} {} {}", message.sender, receiver, message.word)?;
                    }
                } else {
                    self.inboxes[receiver as usize].push((message.word, message.sender));
                }
            }
        }
        let sink = &mut self.event_sink;
        for (i, (agent, inbox)) in self.agents.iter_mut().zip(self.inboxes.iter_mut()).enumerate()
        {
            if inbox.is_empty() {
                continue;
            }
            inbox.shuffle(&mut agent.rng);
            // deliver events are logged in application order; an offline
            // replay of the log reproduces inventory dynamics exactly
            for &(word, sender) in inbox.iter() {
                if let Some(sink) = sink.as_mut() {
                    writeln!(sink, "{t} deliver {sender} {i} {word}")?;
                }
                agent.inventory.hear(word);
                let size = agent.inventory.len() as u32;
                if size > agent.max_inventory {
                    agent.max_inventory = size;
                }
            }
        }
        Ok(())
    }

    fn broadcast(&mut self, t: u64) -> Result<(), EngineError> {
        let n_s = self.config.speak_steps as u64;
        let any_speaker = self
            .agents
            .iter()
            .any(|a| t % n_s == a.phase as u64);
        if !any_speaker {
            return Ok(());
        }
        for (slot, agent) in self.positions.iter_mut().zip(&self.agents) {
            *slot = agent.pose.position;
        }
        self.comm_grid.rebuild(&self.positions);
        let range_sq = self.config.interaction_range * self.config.interaction_range;

        for i in 0..self.agents.len() {
            if t % n_s != self.agents[i].phase as u64 {
                continue;
            }
            let agent = &mut self.agents[i];
            let was_empty = agent.inventory.is_empty();
            let word = agent.inventory.speak(i as AgentId, &mut agent.invented, &mut agent.rng);
            if was_empty {
                self.words_created += 1;
                if agent.max_inventory == 0 {
                    agent.max_inventory = 1;
                }
            }

            self.recipients_scratch.clear();
            let positions = &self.positions;
            let arena = &self.arena;
            let recipients = &mut self.recipients_scratch;
            self.comm_grid.for_each_candidate_near(positions[i], i, |j| {
                if arena.distance_sq(positions[i], positions[j]) <= range_sq {
                    recipients.push(j as u32);
                }
            });
            self.recipients_scratch.sort_unstable();
            if let Some(sink) = self.event_sink.as_mut() {
                writeln!(sink, "{t} broadcast {i} {word}")?;
            }
            self.pending.push(Message {
                word,
                sender: i as AgentId,
                sent_at: t,
                recipients: self.recipients_scratch.clone(),
            });
        }
        debug_assert!(
            self.words_created <= self.config.agents,
            "no more inventions than agents"
        );
        Ok(())
    }
}

/// Optional outputs of [`run_with`].
#[derive(Default)]
pub struct RunOptions {
    /// Record the time series every this many steps (10 steps = one
    /// simulated second at the default dt).
    pub series_every: Option<u64>,
    /// Record per-agent positions every this many steps.
    pub trajectory_every: Option<u64>,
    pub event_sink: Option<Box<dyn Write + Send>>,
}

/// Runs a configuration to consensus or `max_steps`, whichever first.
/// Non-convergence is a reported outcome, not an error. Output is
/// bit-identical for identical `(config, seed)`.
pub fn run(config: &SimConfig) -> Result<RunResult, EngineError> {
    run_with(config, RunOptions::default())
}

pub fn run_with(config: &SimConfig, options: RunOptions) -> Result<RunResult, EngineError> {
    let mut sim = Sim::new(config)?;
    if let Some(sink) = options.event_sink {
        sim.event_sink = Some(sink);
    }

    let sample = |sim: &Sim| SeriesSample {
        time: sim.step_count() as f64 * config.dt,
        distinct_words: sim.distinct_words(),
        total_words: sim.total_words(),
        single_fraction: sim.single_fraction(),
    };
    let snapshot = |sim: &Sim| -> Vec<Vec2> { sim.agents.iter().map(|a| a.unwrapped).collect() };

    let mut series = options.series_every.map(|_| vec![sample(&sim)]);
    let mut trajectories = options.trajectory_every.map(|_| {
        let mut per_agent = vec![Vec::new(); sim.agents.len()];
        for (track, p) in per_agent.iter_mut().zip(snapshot(&sim)) {
            track.push(p);
        }
        per_agent
    });

    loop {
        sim.step()?;
        let t = sim.step_count();
        if let (Some(every), Some(series)) = (options.series_every, series.as_mut()) {
            if t % every == 0 {
                series.push(sample(&sim));
            }
        }
        if let (Some(every), Some(tracks)) = (options.trajectory_every, trajectories.as_mut()) {
            if t % every == 0 {
                for (track, p) in tracks.iter_mut().zip(snapshot(&sim)) {
                    track.push(p);
                }
            }
        }
        if sim.converged_at.is_some() || t >= config.max_steps {
            break;
        }
    }

    if let (Some(every), Some(series)) = (options.series_every, series.as_mut()) {
        if sim.step_count() % every != 0 {
            series.push(sample(&sim));
        }
    }

    let converged = sim.converged_at.is_some();
    let peaks: Vec<u32> = sim.agents.iter().map(|a| a.max_inventory).collect();
    Ok(RunResult {
        converged,
        t_c: sim.converged_at.map(|t| t as f64 * config.dt),
        memory: memory_metric(&peaks),
        memory_alt: sim.peak_mean_inventory,
        final_word: if converged { sim.agents[0].inventory.single() } else { None },
        distinct_final: sim.distinct_words(),
        words_created: sim.words_created,
        steps: sim.step_count(),
        max_overlap: sim.max_overlap,
        max_wall_violation: sim.max_wall_violation,
        series,
        trajectories,
    })
}
