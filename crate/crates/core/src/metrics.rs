//! Consensus observables and post-processing: run results, the memory
//! metric, ensemble diffusion estimates, the broadcast-period power-law
//! fit and summary statistics for sweeps.

use thiserror::Error;

use crate::ng::Word;
use crate::vec2::Vec2;

/// One sample of the per-run time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSample {
    /// Simulated time in seconds.
    pub time: f64,
    /// Distinct words currently alive in inventories or in flight.
    pub distinct_words: u32,
    /// Total word count across all inventories.
    pub total_words: u64,
    /// Fraction of agents holding exactly one word.
    pub single_fraction: f64,
}

/// Outcome of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub converged: bool,
    /// Time to consensus in seconds; present iff `converged`.
    pub t_c: Option<f64>,
    /// Memory metric M: mean over agents of each agent's peak inventory size.
    pub memory: f64,
    /// Alternative reading M_alt: peak over time of the per-step mean
    /// inventory size.
    pub memory_alt: f64,
    /// The consensus word, iff `converged`.
    pub final_word: Option<Word>,
    /// Distinct words alive (inventories or in flight) when the run ended.
    pub distinct_final: u32,
    /// Distinct words ever invented during the run; at most N.
    pub words_created: u32,
    /// Steps actually executed.
    pub steps: u64,
    /// Largest post-step disk overlap seen (embodied runs; 0 otherwise).
    pub max_overlap: f64,
    /// Largest post-step wall violation seen (embodied runs; 0 otherwise).
    pub max_wall_violation: f64,
    pub series: Option<Vec<SeriesSample>>,
    /// Per-agent sampled trajectories (unwrapped in periodic arenas).
    pub trajectories: Option<Vec<Vec<Vec2>>>,
}

/// Memory metric M: mean over agents of the per-agent peak inventory size.
pub fn memory_metric(peak_sizes: &[u32]) -> f64 {
    if peak_sizes.is_empty() {
        return 0.0;
    }
    peak_sizes.iter().map(|&s| s as f64).sum::<f64>() / peak_sizes.len() as f64
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("diffusion estimate needs at least one trajectory")]
    NoTrajectories,
    #[error("trajectories must all have the same number of samples")]
    RaggedTrajectories,
    #[error("run too short for a diffusion fit: need more than {needed} s past the burn-in, have {have} s")]
    RunTooShort { needed: f64, have: f64 },
    #[error("power-law fit needs at least 4 points (got {0})")]
    TooFewPoints(usize),
    #[error("power-law fit needs strictly positive coordinates")]
    NonPositivePoint,
}

/// Ensemble mean squared displacement from the first sample of each
/// trajectory; one value per sample index.
pub fn ensemble_msd(trajectories: &[Vec<Vec2>]) -> Result<Vec<f64>, MetricsError> {
    let first = trajectories.first().ok_or(MetricsError::NoTrajectories)?;
    let len = first.len();
    if trajectories.iter().any(|t| t.len() != len) {
        return Err(MetricsError::RaggedTrajectories);
    }
    let mut msd = vec![0.0; len];
    for trajectory in trajectories {
        let origin = trajectory[0];
        for (k, p) in trajectory.iter().enumerate() {
            msd[k] += (*p - origin).norm_sq();
        }
    }
    for v in msd.iter_mut() {
        *v /= trajectories.len() as f64;
    }
    Ok(msd)
}

/// Fits the diffusion coefficient `D = slope / 4` to the ensemble MSD by
/// least squares on the linear regime `t >= 10 * tau_m`.
///
/// `sample_dt` is the time between consecutive trajectory samples;
/// trajectories must be unwrapped (no periodic jumps).
pub fn estimate_diffusion(
    trajectories: &[Vec<Vec2>],
    sample_dt: f64,
    tau_m: f64,
) -> Result<f64, MetricsError> {
    let msd = ensemble_msd(trajectories)?;
    let burn_in = 10.0 * tau_m;
    let points: Vec<(f64, f64)> = msd
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 * sample_dt, v))
        .filter(|&(t, _)| t >= burn_in)
        .collect();
    if points.len() < 2 {
        return Err(MetricsError::RunTooShort {
            needed: burn_in,
            have: (msd.len().saturating_sub(1)) as f64 * sample_dt,
        });
    }
    let (slope, _intercept) = linear_fit(&points);
    Ok(slope / 4.0)
}

/// Least-squares straight line through `points`; returns (slope, intercept).
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    let slope = if var > 0.0 { cov / var } else { 0.0 };
    (slope, mean_y - slope * mean_x)
}

/// Power-law fit `y ~ x^exponent` in log-log coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Intercept of the log-log line (natural log of the amplitude).
    pub log_amplitude: f64,
    /// Per-point residuals of `ln y` against the fitted line; oscillatory
    /// structure here is reported, not treated as a fit failure.
    pub residuals: Vec<f64>,
}

/// Least-squares slope of `ln y` versus `ln x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, MetricsError> {
    if points.len() < 4 {
        return Err(MetricsError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(MetricsError::NonPositivePoint);
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let (exponent, log_amplitude) = linear_fit(&logs);
    let residuals = logs
        .iter()
        .map(|&(lx, ly)| ly - (log_amplitude + exponent * lx))
        .collect();
    Ok(PowerLawFit { exponent, log_amplitude, residuals })
}

/// Convergence time rescaled by the broadcast period: the mean number of
/// broadcasts each agent transmitted before consensus.
pub fn rescaled_broadcasts(t_c: f64, tau_s: f64) -> f64 {
    t_c / tau_s
}

/// Five-number-style summary of one cell's replicate values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Mean, median and quartiles of `values`. `None` when empty.
pub fn summarize_values(values: &[f64]) -> Option<StatSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in summary input"));
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Some(StatSummary {
        count: sorted.len(),
        mean,
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
    })
}

/// Linear-interpolation quantile (the R-7 convention) of a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}
