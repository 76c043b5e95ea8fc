use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use ngsim_cli::{parse_spec, preset, run_sweep, summarize_file, ExperimentSpec, PRESET_NAMES};
use ngsim_core::{run_with, RunOptions, SimConfig};

/// Naming-game swarm simulator.
#[derive(Parser)]
#[command(name = "ngsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SweepArgs {
    /// Output directory for results.csv (and series/ when requested).
    #[arg(long, default_value = "ngsim-out")]
    out: PathBuf,
    /// Override the spec's replicate count.
    #[arg(long)]
    replicates: Option<u32>,
    /// Override the seed base (also settable via NG_SEED_BASE).
    #[arg(long)]
    seed: Option<u64>,
    /// Emit per-run time series CSVs.
    #[arg(long)]
    series: bool,
    /// Worker threads for replicate execution (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the spec's base configuration once and print the outcome.
    Run {
        /// Experiment spec (TOML).
        spec: PathBuf,
        #[arg(long, default_value = "ngsim-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the run's time series to <out>/series.csv.
        #[arg(long)]
        series: bool,
    },
    /// Run the full sweep described by a spec file.
    Sweep {
        /// Experiment spec (TOML).
        spec: PathBuf,
        #[command(flatten)]
        args: SweepArgs,
    },
    /// Summarize a results CSV into per-cell statistics.
    Summarize {
        /// results.csv produced by `sweep` or `preset`.
        results: PathBuf,
        /// Write summary.csv into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the built-in sweep presets.
    Preset {
        /// One of: fig2-grid, fig3-scaling, fig4-embodied, fig6-small-arena.
        name: String,
        #[command(flatten)]
        args: SweepArgs,
    },
}

fn seed_base_override(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("NG_SEED_BASE") {
        Ok(text) => Ok(Some(
            text.parse::<u64>()
                .with_context(|| format!("NG_SEED_BASE must be a u64 (got {text:?})"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn apply_overrides(
    mut spec: ExperimentSpec,
    replicates: Option<u32>,
    seed: Option<u64>,
    series: bool,
) -> Result<ExperimentSpec> {
    if let Some(replicates) = replicates {
        anyhow::ensure!(replicates > 0, "--replicates must be at least 1");
        spec.replicates = replicates;
    }
    if let Some(seed_base) = seed_base_override(seed)? {
        spec.seed_base = seed_base;
    }
    if series && spec.series_every.is_none() {
        spec.series_every = Some(ngsim_cli::spec::DEFAULT_SERIES_EVERY);
    }
    Ok(spec)
}

fn execute_sweep(spec: ExperimentSpec, args: SweepArgs) -> Result<()> {
    let spec = apply_overrides(spec, args.replicates, args.seed, args.series)?;
    let output = run_sweep(&spec, &args.out, args.jobs)?;
    println!(
        "wrote {} ({} cells x {} replicates = {} rows, {} non-converged{})",
        output.results_path.display(),
        output.cells,
        spec.replicates,
        output.rows,
        output.non_converged,
        if output.resumed_cells > 0 {
            format!(", {} cells resumed", output.resumed_cells)
        } else {
            String::new()
        }
    );
    Ok(())
}

fn execute_run(spec_path: PathBuf, out: PathBuf, seed: Option<u64>, series: bool) -> Result<()> {
    let spec = apply_overrides(parse_spec(&spec_path)?, None, seed, series)?;
    let config = SimConfig { seed: spec.run_seed(0, 0), ..spec.base };
    let result = run_with(
        &config,
        RunOptions { series_every: spec.series_every, ..RunOptions::default() },
    )?;
    println!(
        "converged={} t_c_s={} M={} M_alt={} steps={} distinct_final={} words_created={} word={}",
        result.converged,
        result.t_c.map(|t| t.to_string()).unwrap_or_default(),
        result.memory,
        result.memory_alt,
        result.steps,
        result.distinct_final,
        result.words_created,
        result.final_word.map(|w| w.to_string()).unwrap_or_default(),
    );
    if let Some(series) = &result.series {
        fs::create_dir_all(&out)?;
        let path = out.join("series.csv");
        let mut file = BufWriter::new(File::create(&path)?);
        writeln!(file, "time_s,distinct_words,total_words,single_fraction")?;
        for s in series {
            writeln!(
                file,
                "{},{},{},{}",
                s.time, s.distinct_words, s.total_words, s.single_fraction
            )?;
        }
        println!("series written to {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { spec, out, seed, series } => execute_run(spec, out, seed, series),
        Command::Sweep { spec, args } => {
            parse_spec(&spec).map_err(Into::into).and_then(|s| execute_sweep(s, args))
        }
        Command::Summarize { results, out } => (|| -> Result<()> {
            let summary = summarize_file(&results)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    let path = dir.join("summary.csv");
                    fs::write(&path, summary)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{summary}"),
            }
            Ok(())
        })(),
        Command::Preset { name, args } => preset(&name)
            .ok_or_else(|| {
                anyhow!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", "))
            })
            .and_then(|s| execute_sweep(s, args)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
