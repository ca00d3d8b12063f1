//! Learning-curve CSV.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::trainer::{CurvePoint, EvalMetrics};

pub const METRICS_HEADER: &str = "episode,success_rate,avg_reward,avg_turns,seed,agent";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    /// Percent.
    pub success_rate: f64,
    pub avg_reward: f64,
    pub avg_turns: f64,
    pub seed: u64,
    pub agent: String,
}

impl MetricsRow {
    pub fn new(episode: usize, m: EvalMetrics, seed: u64, agent: &str) -> Self {
        MetricsRow {
            episode,
            success_rate: m.success_rate,
            avg_reward: m.avg_reward,
            avg_turns: m.avg_turns,
            seed,
            agent: agent.to_string(),
        }
    }

    pub fn metrics(&self) -> EvalMetrics {
        EvalMetrics {
            success_rate: self.success_rate,
            avg_reward: self.avg_reward,
            avg_turns: self.avg_turns,
        }
    }

    /// Floats use the shortest representation that parses back exactly.
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.episode, self.success_rate, self.avg_reward, self.avg_turns, self.seed, self.agent
        )
    }
}

pub fn curve_rows(curve: &[CurvePoint], seed: u64, agent: &str) -> Vec<MetricsRow> {
    curve
        .iter()
        .map(|p| MetricsRow::new(p.episode, p.metrics, seed, agent))
        .collect()
}

pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_line());
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        _ => {
            return Err(Error::parse(
                "metrics csv",
                1,
                format!("expected header `{METRICS_HEADER}`"),
            ))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::parse(
                "metrics csv",
                n,
                format!("expected 6 fields, got {}", f.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse("metrics csv", n, format!("`{s}`: {e}")))
        };
        rows.push(MetricsRow {
            episode: f[0]
                .parse()
                .map_err(|e| Error::parse("metrics csv", n, format!("episode: {e}")))?,
            success_rate: num(f[1])?,
            avg_reward: num(f[2])?,
            avg_turns: num(f[3])?,
            seed: f[4]
                .parse()
                .map_err(|e| Error::parse("metrics csv", n, format!("seed: {e}")))?,
            agent: f[5].to_string(),
        });
    }
    Ok(rows)
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
