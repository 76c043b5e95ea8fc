//! Per-cell summary statistics over a results CSV: median, quartiles and
//! mean of the convergence time and memory metric across replicates,
//! counted over converged runs only, with non-converged runs tallied
//! separately.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use ngsim_core::{summarize_values, StatSummary};

pub const SUMMARY_HEADER: &str = "cell_id,model,boundary,N,L,d_i,tau_m,tau_s,loss_p,replicates,\
                                  converged,non_converged,t_c_mean,t_c_median,t_c_q1,t_c_q3,\
                                  m_mean,m_median,m_q1,m_q3,m_alt_mean";

#[derive(Default)]
struct CellAccumulator {
    /// model,boundary,N,L,d_i,tau_m,tau_s,loss_p echoed from the first row.
    params: Vec<String>,
    replicates: usize,
    t_c: Vec<f64>,
    memory: Vec<f64>,
    memory_alt: Vec<f64>,
}

fn stats_fields(stats: &Option<StatSummary>) -> String {
    match stats {
        Some(s) => format!("{},{},{},{}", s.mean, s.median, s.q1, s.q3),
        None => ",,,".to_string(),
    }
}

/// Reads a results CSV and renders the per-cell summary CSV.
pub fn summarize_file(results: &Path) -> Result<String> {
    let mut reader = csv::Reader::from_path(results)
        .with_context(|| format!("reading {}", results.display()))?;
    let headers = reader.headers()?.clone();
    let field = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("results file lacks a {name} column"))
    };
    let cell_col = field("cell_id")?;
    let converged_col = field("converged")?;
    let t_c_col = field("t_c_s")?;
    let m_col = field("M")?;
    let m_alt_col = field("M_alt")?;
    let param_cols: Vec<usize> = ["model", "boundary", "N", "L", "d_i", "tau_m", "tau_s", "loss_p"]
        .iter()
        .map(|n| field(n))
        .collect::<Result<_>>()?;

    let mut cells: BTreeMap<u64, CellAccumulator> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let cell_id: u64 = record[cell_col].parse().context("bad cell_id")?;
        let acc = cells.entry(cell_id).or_default();
        if acc.params.is_empty() {
            acc.params = param_cols.iter().map(|&c| record[c].to_string()).collect();
        }
        acc.replicates += 1;
        match &record[converged_col] {
            "true" => {
                acc.t_c.push(record[t_c_col].parse().context("bad t_c_s")?);
                acc.memory.push(record[m_col].parse().context("bad M")?);
                acc.memory_alt.push(record[m_alt_col].parse().context("bad M_alt")?);
            }
            "false" => {}
            other => bail!("bad converged flag {other:?} in cell {cell_id}"),
        }
    }

    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (cell_id, acc) in &cells {
        let t_c = summarize_values(&acc.t_c);
        let memory = summarize_values(&acc.memory);
        let m_alt_mean = summarize_values(&acc.memory_alt).map(|s| s.mean.to_string());
        out.push_str(&format!(
            "{cell_id},{params},{replicates},{converged},{non_converged},{t_c},{m},{m_alt}\n",
            params = acc.params.join(","),
            replicates = acc.replicates,
            converged = acc.t_c.len(),
            non_converged = acc.replicates - acc.t_c.len(),
            t_c = stats_fields(&t_c),
            m = stats_fields(&memory),
            m_alt = m_alt_mean.unwrap_or_default(),
        ));
    }
    Ok(out)
}
