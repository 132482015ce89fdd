//! Per-episode (and optional per-slot) metrics records, their CSV schema,
//! and the learning-curve statistics derived from them.

use std::path::Path;

use crate::error::{Error, Result};

/// One logged row: either an episode aggregate or a single slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub episode: usize,
    pub global_step: u64,
    /// Exploration rate; only meaningful for DQN runs.
    pub epsilon: Option<f64>,
    pub network_secrecy_sum: f64,
    pub cell_secrecy: Vec<f64>,
    pub agent_reward: Vec<f64>,
    pub agent_loss: Vec<Option<f64>>,
}

/// Column used by the trend comparisons and the default plots.
pub const SECRECY_COLUMN: &str = "network_secrecy_sum";
pub const SECRECY_SMOOTHED_COLUMN: &str = "network_secrecy_sum_smoothed";

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn header(cells: usize) -> Vec<String> {
    let mut cols = vec![
        "record".to_string(),
        "episode".to_string(),
        "global_step".to_string(),
        "epsilon".to_string(),
        SECRECY_COLUMN.to_string(),
        SECRECY_SMOOTHED_COLUMN.to_string(),
    ];
    for b in 0..cells {
        cols.push(format!("cell_secrecy_{b}"));
    }
    for b in 0..cells {
        cols.push(format!("agent_reward_{b}"));
    }
    for b in 0..cells {
        cols.push(format!("agent_loss_{b}"));
    }
    cols
}

fn record_row(kind: &str, record: &MetricsRecord, smoothed: Option<f64>) -> Vec<String> {
    let mut row = vec![
        kind.to_string(),
        record.episode.to_string(),
        record.global_step.to_string(),
        record.epsilon.map(fmt_f64).unwrap_or_default(),
        fmt_f64(record.network_secrecy_sum),
        smoothed.map(fmt_f64).unwrap_or_default(),
    ];
    row.extend(record.cell_secrecy.iter().map(|&v| fmt_f64(v)));
    row.extend(record.agent_reward.iter().map(|&v| fmt_f64(v)));
    row.extend(
        record
            .agent_loss
            .iter()
            .map(|l| l.map(fmt_f64).unwrap_or_default()),
    );
    row
}

/// Write the metrics CSV: one row per episode carrying the smoothed secrecy
/// column, interleaved with per-slot rows when `steps` is provided.
pub fn write_metrics_csv(
    path: &Path,
    cells: usize,
    episodes: &[MetricsRecord],
    steps: Option<&[MetricsRecord]>,
    smoothing_window: usize,
) -> Result<()> {
    let series: Vec<f64> = episodes.iter().map(|r| r.network_secrecy_sum).collect();
    let smoothed = moving_average(&series, smoothing_window)?;
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header(cells))?;
    let mut step_iter = steps.unwrap_or(&[]).iter().peekable();
    for (record, &smooth) in episodes.iter().zip(&smoothed) {
        while let Some(step) = step_iter.peek() {
            if step.episode > record.episode {
                break;
            }
            writer.write_record(record_row("step", step, None))?;
            step_iter.next();
        }
        writer.write_record(record_row("episode", record, Some(smooth)))?;
    }
    for step in step_iter {
        writer.write_record(record_row("step", step, None))?;
    }
    writer.flush()?;
    Ok(())
}

/// A parsed metrics CSV.
#[derive(Debug, Clone)]
pub struct MetricsTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl MetricsTable {
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for row in reader.records() {
            rows.push(row?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    /// Episode-row values of a named column; empty cells parse as NaN.
    pub fn episode_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("metric column '{name}' not found")))?;
        let mut out = Vec::new();
        for row in &self.rows {
            if row.first().map(String::as_str) != Some("episode") {
                continue;
            }
            let cell = &row[idx];
            if cell.is_empty() {
                out.push(f64::NAN);
            } else {
                out.push(cell.parse::<f64>().map_err(|e| {
                    Error::Config(format!("bad value '{cell}' in column '{name}': {e}"))
                })?);
            }
        }
        Ok(out)
    }
}

/// Trailing moving average: element `i` is the mean of the last
/// `min(window, i + 1)` values. Output length equals input length.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for i in 0..series.len() {
        sum += series[i];
        if i >= window {
            sum -= series[i - window];
        }
        out.push(sum / window.min(i + 1) as f64);
    }
    Ok(out)
}

/// Mean of the final `window` values (the whole series when shorter).
pub fn final_window_mean(series: &[f64], window: usize) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let tail = &series[series.len().saturating_sub(window.max(1))..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// First index where the smoothed series reaches `fraction` times the mean of
/// its final tenth and never falls below 90% of that threshold afterwards.
/// Returns the series length when the level is never held.
pub fn convergence_episode(series: &[f64], fraction: f64) -> Result<usize> {
    if series.is_empty() {
        return Err(Error::Empty("series"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(
            "fraction must lie in (0, 1]".into(),
        ));
    }
    let tail_len = (series.len() as f64 / 10.0).ceil() as usize;
    let tail = &series[series.len() - tail_len.max(1)..];
    let threshold = fraction * (tail.iter().sum::<f64>() / tail.len() as f64);
    let hold = 0.9 * threshold;
    // Suffix minima let us check the "never drops below" clause in one pass.
    let mut suffix_min = vec![0.0; series.len()];
    let mut running = f64::INFINITY;
    for (i, &v) in series.iter().enumerate().rev() {
        running = running.min(v);
        suffix_min[i] = running;
    }
    for (i, &v) in series.iter().enumerate() {
        if v >= threshold && suffix_min[i] >= hold {
            return Ok(i);
        }
    }
    Ok(series.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendDirection {
    AGreater,
    BGreater,
    Indistinguishable,
}

impl std::fmt::Display for TrendDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrendDirection::AGreater => write!(f, "A > B"),
            TrendDirection::BGreater => write!(f, "B > A"),
            TrendDirection::Indistinguishable => write!(f, "indistinguishable"),
        }
    }
}

/// Cross-seed comparison of two run sets on one metric.
#[derive(Debug, Clone)]
pub struct TrendReport {
    pub metric: String,
    pub per_seed_a: Vec<f64>,
    pub per_seed_b: Vec<f64>,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    pub pooled_sd: f64,
    pub direction: TrendDirection,
}

impl TrendReport {
    /// `mean_a - mean_b`.
    pub fn gap(&self) -> f64 {
        self.mean_a - self.mean_b
    }
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Compare the final-window means of two sets of per-seed series. Each set
/// needs at least three seeds. Direction is decided by more than one pooled
/// standard deviation of separation.
pub fn compare_trends(
    set_a: &[Vec<f64>],
    set_b: &[Vec<f64>],
    metric: &str,
    window: usize,
) -> Result<TrendReport> {
    if set_a.len() < 3 || set_b.len() < 3 {
        return Err(Error::InvalidParameter(
            "trend comparison needs at least 3 seeds per set".into(),
        ));
    }
    let per_seed_a: Vec<f64> = set_a.iter().map(|s| final_window_mean(s, window)).collect();
    let per_seed_b: Vec<f64> = set_b.iter().map(|s| final_window_mean(s, window)).collect();
    let (mean_a, sd_a) = mean_and_sd(&per_seed_a);
    let (mean_b, sd_b) = mean_and_sd(&per_seed_b);
    let pooled_sd = ((sd_a * sd_a + sd_b * sd_b) / 2.0).sqrt();
    let direction = if mean_a - mean_b > pooled_sd {
        TrendDirection::AGreater
    } else if mean_b - mean_a > pooled_sd {
        TrendDirection::BGreater
    } else {
        TrendDirection::Indistinguishable
    };
    Ok(TrendReport {
        metric: metric.to_string(),
        per_seed_a,
        per_seed_b,
        mean_a,
        mean_b,
        sd_a,
        sd_b,
        pooled_sd,
        direction,
    })
}
