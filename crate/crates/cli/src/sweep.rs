//! Sweep execution: replicates scheduled on a worker pool, one results row
//! per run, flushed cell by cell so interrupted sweeps resume without
//! recomputing finished cells.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use ngsim_core::{run_with, LossPolicy, RunOptions, RunResult, SimConfig};

use crate::spec::ExperimentSpec;

/// Exact header of the results CSV.
pub const RESULTS_HEADER: &str = "run_id,cell_id,seed,model,boundary,N,L,d_i,v,omega,sigma,dt,\
                                  tau_m,tau_s,loss_p,converged,t_c_s,M,M_alt,distinct_final,steps";

pub struct SweepOutput {
    pub results_path: PathBuf,
    pub cells: usize,
    pub rows: usize,
    pub non_converged: usize,
    /// Cells reused verbatim from an interrupted previous run.
    pub resumed_cells: usize,
}

fn boundary_name(cfg: &SimConfig) -> &'static str {
    match cfg.boundary {
        ngsim_core::Boundary::Periodic => "periodic",
        ngsim_core::Boundary::Walled => "walled",
    }
}

fn format_row(run_id: u64, cell_id: usize, seed: u64, cfg: &SimConfig, result: &RunResult) -> String {
    let t_c = result.t_c.map(|t| t.to_string()).unwrap_or_default();
    let loss_p = match cfg.loss {
        LossPolicy::None => 0.0,
        LossPolicy::Iid(p) => p,
    };
    format!(
        "{run_id},{cell_id},{seed},{model},{boundary},{n},{l},{d_i},{v},{omega},{sigma},{dt},{tau_m},{tau_s},{loss_p},{converged},{t_c},{m},{m_alt},{distinct},{steps}",
        model = cfg.model,
        boundary = boundary_name(cfg),
        n = cfg.agents,
        l = cfg.arena_side,
        d_i = cfg.interaction_range,
        v = cfg.speed,
        omega = cfg.angular_speed,
        sigma = cfg.noise_sigma,
        dt = cfg.dt,
        tau_m = cfg.tau_m(),
        tau_s = cfg.tau_s(),
        converged = result.converged,
        m = result.memory,
        m_alt = result.memory_alt,
        distinct = result.distinct_final,
        steps = result.steps,
    )
}

/// Rows of finished cells salvaged from a previous, possibly interrupted,
/// results file. A cell is reused only when it has exactly `replicates`
/// rows whose run ids and seeds match what this spec would produce.
fn salvage_cells(
    path: &Path,
    spec: &ExperimentSpec,
    cells: usize,
) -> HashMap<usize, Vec<String>> {
    let mut by_cell: HashMap<usize, Vec<String>> = HashMap::new();
    let Ok(text) = fs::read_to_string(path) else {
        return HashMap::new();
    };
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_HEADER) {
        return HashMap::new();
    }
    for line in lines {
        let mut fields = line.split(',');
        let (Some(run_id), Some(cell_id), Some(seed)) =
            (fields.next(), fields.next(), fields.next())
        else {
            continue;
        };
        let (Ok(run_id), Ok(cell_id), Ok(seed)) =
            (run_id.parse::<u64>(), cell_id.parse::<usize>(), seed.parse::<u64>())
        else {
            continue;
        };
        if cell_id >= cells {
            continue;
        }
        let rep = by_cell.get(&cell_id).map_or(0, Vec::len) as u32;
        if rep >= spec.replicates
            || run_id != cell_id as u64 * spec.replicates as u64 + rep as u64
            || seed != spec.run_seed(cell_id, rep)
        {
            continue;
        }
        by_cell.entry(cell_id).or_default().push(line.to_string());
    }
    by_cell.retain(|_, rows| rows.len() == spec.replicates as usize);
    by_cell
}

fn write_series(dir: &Path, run_id: u64, result: &RunResult) -> Result<()> {
    let Some(series) = &result.series else {
        return Ok(());
    };
    let path = dir.join(format!("run_{run_id}.csv"));
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "time_s,distinct_words,total_words,single_fraction")?;
    for s in series {
        writeln!(out, "{},{},{},{}", s.time, s.distinct_words, s.total_words, s.single_fraction)?;
    }
    Ok(())
}

/// Runs the full sweep into `out_dir/results.csv`. Replicates of a cell
/// execute in parallel; rows are written in (cell, replicate) order, so
/// the file is byte-identical for identical specs regardless of job count
/// or interruptions.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: &Path, jobs: Option<usize>) -> Result<SweepOutput> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building worker pool")?;
            pool.install(|| run_sweep_inner(spec, out_dir))
        }
        None => run_sweep_inner(spec, out_dir),
    }
}

fn run_sweep_inner(spec: &ExperimentSpec, out_dir: &Path) -> Result<SweepOutput> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let series_dir = out_dir.join("series");
    if spec.series_every.is_some() {
        fs::create_dir_all(&series_dir)?;
    }

    let cells = spec.cells();
    let results_path = out_dir.join("results.csv");
    let salvaged = salvage_cells(&results_path, spec, cells.len());

    let mut out = BufWriter::new(
        File::create(&results_path)
            .with_context(|| format!("creating {}", results_path.display()))?,
    );
    writeln!(out, "{RESULTS_HEADER}")?;

    let mut rows = 0usize;
    let mut non_converged = 0usize;
    let resumed_cells = salvaged.len();
    for (cell_id, cell) in cells.iter().enumerate() {
        if let Some(cached) = salvaged.get(&cell_id) {
            for line in cached {
                // header tail: ...,converged,t_c_s,M,M_alt,distinct_final,steps
                if line.rsplit(',').nth(5) == Some("false") {
                    non_converged += 1;
                }
                writeln!(out, "{line}")?;
                rows += 1;
            }
            out.flush()?;
            continue;
        }
        let cell_rows: Vec<(String, RunResult)> = (0..spec.replicates)
            .into_par_iter()
            .map(|rep| -> Result<(String, RunResult)> {
                let run_id = cell_id as u64 * spec.replicates as u64 + rep as u64;
                let config = SimConfig { seed: spec.run_seed(cell_id, rep), ..cell.clone() };
                let result = run_with(
                    &config,
                    RunOptions { series_every: spec.series_every, ..RunOptions::default() },
                )
                .with_context(|| format!("run {run_id} (cell {cell_id}, replicate {rep})"))?;
                Ok((format_row(run_id, cell_id, config.seed, &config, &result), result))
            })
            .collect::<Result<_>>()?;
        for (rep, (line, result)) in cell_rows.iter().enumerate() {
            if !result.converged {
                non_converged += 1;
            }
            if spec.series_every.is_some() {
                let run_id = cell_id as u64 * spec.replicates as u64 + rep as u64;
                write_series(&series_dir, run_id, result)?;
            }
            writeln!(out, "{line}")?;
            rows += 1;
        }
        // a finished cell survives interruption
        out.flush()?;
    }
    out.flush()?;
    Ok(SweepOutput { results_path, cells: cells.len(), rows, non_converged, resumed_cells })
}
