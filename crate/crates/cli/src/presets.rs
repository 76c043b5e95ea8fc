//! Named sweep presets covering the standard experiment panels.

use ngsim_core::{Model, SimConfig};

use crate::spec::{Axis, ExperimentSpec, DEFAULT_REPLICATES, DEFAULT_SEED_BASE};

pub const PRESET_NAMES: [&str; 4] =
    ["fig2-grid", "fig3-scaling", "fig4-embodied", "fig6-small-arena"];

/// Looks up a preset by name. Replicates default to 200; override with
/// `--replicates` for quick passes.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let spec = match name {
        // consensus time and memory versus group size on the unit torus,
        // for the four combinations of slow/fast reorientation and
        // broadcasting (tau in {10, 50} s); N spans both critical sizes
        // (32 and 143)
        "fig2-grid" => ExperimentSpec {
            base: SimConfig::point(50, 1.0),
            axes: vec![
                Axis::Agents(vec![10, 32, 50, 100, 143, 300, 500]),
                Axis::TauS(vec![100, 500]),
                Axis::TauM(vec![100, 500]),
            ],
            replicates: DEFAULT_REPLICATES,
            seed_base: DEFAULT_SEED_BASE,
            series_every: None,
        },
        // broadcast-period scaling at N = 300 (dense regime):
        // tau_s from 1 s to 500 s on a log-ish ladder
        "fig3-scaling" => ExperimentSpec {
            base: SimConfig::point(300, 1.0),
            axes: vec![
                Axis::TauS(vec![10, 20, 50, 100, 200, 500, 1000, 2000, 5000]),
                Axis::TauM(vec![100, 500]),
            ],
            replicates: DEFAULT_REPLICATES,
            seed_base: DEFAULT_SEED_BASE,
            series_every: None,
        },
        // point versus embodied on the unit arena across group sizes and
        // both latency grids
        "fig4-embodied" => ExperimentSpec {
            base: SimConfig::point(50, 1.0),
            axes: vec![
                Axis::Model(vec![Model::Point, Model::Embodied]),
                Axis::Agents(vec![10, 32, 50, 100, 143, 300]),
                Axis::TauS(vec![100, 500]),
                Axis::TauM(vec![100, 500]),
            ],
            replicates: DEFAULT_REPLICATES,
            seed_base: DEFAULT_SEED_BASE,
            series_every: None,
        },
        // small 45 cm arena with N in {5, 20, 35} and joint latency
        // tau_a = tau_s = tau_m in {2.5, 5, 7.5} s, both models
        "fig6-small-arena" => ExperimentSpec {
            base: SimConfig::point(20, 0.45),
            axes: vec![
                Axis::Model(vec![Model::Point, Model::Embodied]),
                Axis::Agents(vec![5, 20, 35]),
                Axis::TauA(vec![25, 50, 75]),
            ],
            replicates: DEFAULT_REPLICATES,
            seed_base: DEFAULT_SEED_BASE,
            series_every: None,
        },
        _ => return None,
    };
    Some(spec)
}
