//! Experiment specs: a TOML file describing one base configuration, an
//! optional set of sweep axes, and replication/seeding.
//!
//! ```toml
//! replicates = 200
//! seed_base = 42
//!
//! [base]
//! model = "point"        # point | embodied
//! agents = 50            # N
//! arena_side = 1.0       # L, meters
//! tau_s = 10.0           # broadcast period, seconds
//! tau_m = 10.0           # reorientation period, seconds
//!
//! [sweep]                # each key adds one cartesian axis
//! agents = [50, 150, 300]
//! tau_s = [10.0, 50.0]
//!
//! [output]
//! series = true          # emit per-run time series
//! series_every = 10      # sample interval, steps
//! ```
//!
//! Unset base keys take the standard defaults (dt 0.1 s, range 0.1 m,
//! speed 0.01 m/s, omega pi/5 rad/s, sigma 0.4, body radius 0.0165 m,
//! tau_s = tau_m = 10 s, no loss, staggered phases, 10^7 step budget).
//! `tau_a` sweeps `tau_s = tau_m` jointly. Every run's seed is derived
//! from `seed_base` and the (cell, replicate) pair by SplitMix64 mixing,
//! so no two runs share a seed and reruns are bit-identical.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use ngsim_core::engine::{
    DEFAULT_ANGULAR_SPEED, DEFAULT_BODY_RADIUS, DEFAULT_DT, DEFAULT_INTERACTION_RANGE,
    DEFAULT_MAX_STEPS, DEFAULT_NOISE_SIGMA, DEFAULT_SPEED,
};
use ngsim_core::{seed, Boundary, LossPolicy, Model, SimConfig, SpeakPhase};

/// Replicate count used when a spec does not state one.
pub const DEFAULT_REPLICATES: u32 = 200;
pub const DEFAULT_SEED_BASE: u64 = 42;
pub const DEFAULT_SERIES_EVERY: u64 = 10;

/// One sweep axis; cells are the cartesian product of the axes in the
/// order below (later axes vary fastest).
#[derive(Clone, Debug, PartialEq)]
pub enum Axis {
    Model(Vec<Model>),
    Agents(Vec<u32>),
    /// Broadcast period as step counts.
    TauS(Vec<u32>),
    /// Reorientation period as step counts.
    TauM(Vec<u32>),
    /// Joint latency: sets both periods to the same step count.
    TauA(Vec<u32>),
    LossP(Vec<f64>),
}

/// A validated experiment: base config, sweep axes, replication.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub axes: Vec<Axis>,
    pub replicates: u32,
    pub seed_base: u64,
    /// Emit per-run time series sampled every this many steps.
    pub series_every: Option<u64>,
}

impl ExperimentSpec {
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    /// Expands the cartesian product of the axes into per-cell configs,
    /// ordered so the last axis varies fastest. Cell ids index this order.
    pub fn cells(&self) -> Vec<SimConfig> {
        let mut cells = vec![self.base.clone()];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(cells.len() * axis.len());
            for cfg in &cells {
                match axis {
                    Axis::Model(values) => {
                        for &model in values {
                            let mut c = cfg.clone();
                            c.model = model;
                            c.boundary = match model {
                                Model::Point => Boundary::Periodic,
                                Model::Embodied => Boundary::Walled,
                            };
                            next.push(c);
                        }
                    }
                    Axis::Agents(values) => {
                        for &agents in values {
                            let mut c = cfg.clone();
                            c.agents = agents;
                            next.push(c);
                        }
                    }
                    Axis::TauS(values) => {
                        for &steps in values {
                            let mut c = cfg.clone();
                            c.speak_steps = steps;
                            next.push(c);
                        }
                    }
                    Axis::TauM(values) => {
                        for &steps in values {
                            let mut c = cfg.clone();
                            c.turn_steps = steps;
                            next.push(c);
                        }
                    }
                    Axis::TauA(values) => {
                        for &steps in values {
                            let mut c = cfg.clone();
                            c.speak_steps = steps;
                            c.turn_steps = steps;
                            next.push(c);
                        }
                    }
                    Axis::LossP(values) => {
                        for &p in values {
                            let mut c = cfg.clone();
                            c.loss = if p == 0.0 { LossPolicy::None } else { LossPolicy::Iid(p) };
                            next.push(c);
                        }
                    }
                }
            }
            cells = next;
        }
        cells
    }

    /// The seed of one run: `seed_base` mixed with the (cell, replicate)
    /// pair through SplitMix64. Distinct pairs never share a seed.
    pub fn run_seed(&self, cell: usize, replicate: u32) -> u64 {
        seed::mix(self.seed_base, cell as u64, replicate as u64)
    }
}

impl Axis {
    pub fn len(&self) -> usize {
        match self {
            Axis::Model(v) => v.len(),
            Axis::Agents(v) => v.len(),
            Axis::TauS(v) | Axis::TauM(v) | Axis::TauA(v) => v.len(),
            Axis::LossP(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// TOML syntax or schema problem; the inner error carries line/column
    /// diagnostics.
    #[error("cannot parse spec: {0}")]
    Parse(#[from] toml::de::Error),
    /// Semantic violations, all of them, each naming the offending field.
    #[error("{0}")]
    Invalid(Violations),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Violations(pub Vec<String>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid experiment spec:")?;
        for v in &self.0 {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    replicates: Option<u32>,
    seed_base: Option<u64>,
    #[serde(default)]
    base: RawBase,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBase {
    model: Option<String>,
    boundary: Option<String>,
    agents: Option<u32>,
    arena_side: Option<f64>,
    interaction_range: Option<f64>,
    speed: Option<f64>,
    angular_speed: Option<f64>,
    noise_sigma: Option<f64>,
    dt: Option<f64>,
    tau_m: Option<f64>,
    tau_s: Option<f64>,
    body_radius: Option<f64>,
    loss_p: Option<f64>,
    max_steps: Option<u64>,
    speak_phase: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    model: Option<Vec<String>>,
    agents: Option<Vec<u32>>,
    tau_s: Option<Vec<f64>>,
    tau_m: Option<Vec<f64>>,
    tau_a: Option<Vec<f64>>,
    loss_p: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    series: Option<bool>,
    series_every: Option<u64>,
}

/// Converts a period in seconds to a step count, requiring it to be a
/// positive integer multiple of `dt` (up to rounding noise).
pub fn period_to_steps(field: &str, tau: f64, dt: f64) -> Result<u32, String> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(format!("{field}: must be positive and finite (got {tau})"));
    }
    let steps = (tau / dt).round();
    if steps < 1.0 || (steps * dt - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(format!(
            "{field}: must be a positive integer multiple of dt (got {tau} with dt {dt})"
        ));
    }
    Ok(steps as u32)
}

fn parse_model(s: &str) -> Result<Model, String> {
    match s {
        "point" => Ok(Model::Point),
        "embodied" => Ok(Model::Embodied),
        other => Err(format!("model: expected \"point\" or \"embodied\" (got {other:?})")),
    }
}

pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec_str(&text)
}

pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec, SpecError> {
    let raw: RawSpec = toml::from_str(text)?;
    let mut violations = Vec::new();

    let model = match raw.base.model.as_deref().map(parse_model).transpose() {
        Ok(m) => m.unwrap_or(Model::Point),
        Err(e) => {
            violations.push(format!("base.{e}"));
            Model::Point
        }
    };
    let boundary = match raw.base.boundary.as_deref() {
        None => match model {
            Model::Point => Boundary::Periodic,
            Model::Embodied => Boundary::Walled,
        },
        Some("periodic") => Boundary::Periodic,
        Some("walled") => Boundary::Walled,
        Some(other) => {
            violations.push(format!(
                "base.boundary: expected \"periodic\" or \"walled\" (got {other:?})"
            ));
            Boundary::Periodic
        }
    };
    let speak_phase = match raw.base.speak_phase.as_deref() {
        None | Some("staggered") => SpeakPhase::Staggered,
        Some("shared") => SpeakPhase::Shared,
        Some(other) => {
            violations.push(format!(
                "base.speak_phase: expected \"staggered\" or \"shared\" (got {other:?})"
            ));
            SpeakPhase::Staggered
        }
    };

    let dt = raw.base.dt.unwrap_or(DEFAULT_DT);
    let period = |field: &str, tau: Option<f64>, violations: &mut Vec<String>| -> u32 {
        match tau {
            None => 100,
            Some(tau) => match period_to_steps(field, tau, dt) {
                Ok(steps) => steps,
                Err(e) => {
                    violations.push(format!("base.{e}"));
                    100
                }
            },
        }
    };
    let turn_steps = period("tau_m", raw.base.tau_m, &mut violations);
    let speak_steps = period("tau_s", raw.base.tau_s, &mut violations);

    let base = SimConfig {
        agents: raw.base.agents.unwrap_or(50),
        arena_side: raw.base.arena_side.unwrap_or(1.0),
        interaction_range: raw.base.interaction_range.unwrap_or(DEFAULT_INTERACTION_RANGE),
        model,
        boundary,
        speed: raw.base.speed.unwrap_or(DEFAULT_SPEED),
        angular_speed: raw.base.angular_speed.unwrap_or(DEFAULT_ANGULAR_SPEED),
        noise_sigma: raw.base.noise_sigma.unwrap_or(DEFAULT_NOISE_SIGMA),
        dt,
        turn_steps,
        speak_steps,
        body_radius: raw.base.body_radius.unwrap_or(DEFAULT_BODY_RADIUS),
        loss: match raw.base.loss_p {
            None => LossPolicy::None,
            Some(p) if p == 0.0 => LossPolicy::None,
            Some(p) => LossPolicy::Iid(p),
        },
        seed: 0,
        max_steps: raw.base.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
        speak_phase,
    };

    // axes in canonical cell order
    let mut axes = Vec::new();
    if let Some(models) = &raw.sweep.model {
        let mut parsed = Vec::new();
        for m in models {
            match parse_model(m) {
                Ok(m) => parsed.push(m),
                Err(e) => violations.push(format!("sweep.{e}")),
            }
        }
        axes.push(Axis::Model(parsed));
    }
    if let Some(agents) = &raw.sweep.agents {
        axes.push(Axis::Agents(agents.clone()));
    }
    if raw.sweep.tau_a.is_some() && (raw.sweep.tau_s.is_some() || raw.sweep.tau_m.is_some()) {
        violations.push("sweep.tau_a: cannot be combined with a tau_s or tau_m axis".into());
    }
    let tau_axis = |field: &str,
                        taus: &Option<Vec<f64>>,
                        make: fn(Vec<u32>) -> Axis,
                        violations: &mut Vec<String>,
                        axes: &mut Vec<Axis>| {
        if let Some(taus) = taus {
            let mut steps = Vec::new();
            for &tau in taus {
                match period_to_steps(field, tau, dt) {
                    Ok(s) => steps.push(s),
                    Err(e) => violations.push(format!("sweep.{e}")),
                }
            }
            axes.push(make(steps));
        }
    };
    tau_axis("tau_s", &raw.sweep.tau_s, Axis::TauS, &mut violations, &mut axes);
    tau_axis("tau_m", &raw.sweep.tau_m, Axis::TauM, &mut violations, &mut axes);
    tau_axis("tau_a", &raw.sweep.tau_a, Axis::TauA, &mut violations, &mut axes);
    if let Some(ps) = &raw.sweep.loss_p {
        axes.push(Axis::LossP(ps.clone()));
    }
    for axis in &axes {
        if axis.is_empty() {
            violations.push("sweep: axes must not be empty".into());
        }
    }

    let replicates = raw.replicates.unwrap_or(DEFAULT_REPLICATES);
    if replicates == 0 {
        violations.push("replicates: must be at least 1".into());
    }

    let spec = ExperimentSpec {
        base,
        axes,
        replicates,
        seed_base: raw.seed_base.unwrap_or(DEFAULT_SEED_BASE),
        series_every: match (raw.output.series, raw.output.series_every) {
            (Some(true), every) => Some(every.unwrap_or(DEFAULT_SERIES_EVERY)),
            (_, Some(every)) => Some(every),
            _ => None,
        },
    };

    // every cell must be a valid engine config; run this even when the
    // raw fields already failed so violations are reported exhaustively
    for (cell_id, cell) in spec.cells().iter().enumerate() {
        if let Err(e) = cell.validate() {
            for v in e.violations {
                violations.push(format!(
                    "cell {cell_id} (model={}, agents={}): {}: {}",
                    cell.model, cell.agents, v.field, v.message
                ));
            }
        }
    }

    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(SpecError::Invalid(Violations(violations)))
    }
}
