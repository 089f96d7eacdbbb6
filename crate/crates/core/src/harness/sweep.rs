//! Parameter sweeps over the CHAIR benchmark.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{Benchmark, RunConfig};
use super::report::{render_table, Table};
use super::run::{run_benchmark, BenchmarkReport};
use super::HarnessError;
use crate::editing::CoefficientStrategy;
use crate::metrics::har_at_1;
use crate::seeds::derive_seed;

/// Range of the sampled strategies in a strategy sweep.
pub const STRATEGY_RANGE: (f64, f64) = (0.08, 0.12);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    AlphaBetaGrid,
    Layer,
    Strategy,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").as_str() {
            "alpha_beta_grid" | "alpha_beta" | "grid" => Ok(SweepAxis::AlphaBetaGrid),
            "layer" => Ok(SweepAxis::Layer),
            "strategy" => Ok(SweepAxis::Strategy),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::AlphaBetaGrid => "alpha_beta_grid",
            SweepAxis::Layer => "layer",
            SweepAxis::Strategy => "strategy",
        })
    }
}

/// Grid values are strings interpreted per axis:
///
/// * `alpha_beta_grid`: `0.1` (α = β) or `0.1:0.05` (α:β)
/// * `layer`: a 1-based layer index
/// * `strategy`: `fixed`, `uniform` or `gaussian`, optionally suffixed with
///   `-best-of-N` and/or `-avg-of-N`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub repetitions: usize,
    pub seed_base: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Point {
    Coefficients(f64, f64),
    Layer(usize),
    Strategy(CoefficientStrategy),
}

fn parse_coefficient(s: &str) -> Result<f64, HarnessError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v >= 0.0)
        .ok_or_else(|| HarnessError::Config(format!("bad coefficient {s:?}")))
}

fn parse_strategy(label: &str, base: &RunConfig) -> Result<CoefficientStrategy, HarnessError> {
    let bad = || HarnessError::Config(format!("bad strategy {label:?}"));
    let mut rest = label.trim();
    let mut best_of = 1;
    let mut avg_of = 1;
    loop {
        if let Some((head, n)) = rest.rsplit_once("-best-of-") {
            best_of = n.parse().map_err(|_| bad())?;
            rest = head;
        } else if let Some((head, n)) = rest.rsplit_once("-avg-of-") {
            avg_of = n.parse().map_err(|_| bad())?;
            rest = head;
        } else {
            break;
        }
    }
    let (lo, hi) = STRATEGY_RANGE;
    let strategy = match rest {
        "fixed" => CoefficientStrategy::fixed_pair(base.edit.alpha, base.edit.beta),
        "uniform" => CoefficientStrategy::uniform(lo, hi),
        "gaussian" => CoefficientStrategy::gaussian_over(lo, hi),
        _ => return Err(bad()),
    };
    let strategy = strategy.with_best_of(best_of).with_avg_of(avg_of);
    strategy.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(strategy)
}

impl SweepSpec {
    fn points(&self, base: &RunConfig) -> Result<Vec<(String, Point)>, HarnessError> {
        if self.values.is_empty() {
            return Err(HarnessError::Config("sweep grid is empty".into()));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be >= 1".into()));
        }
        let mut points = Vec::with_capacity(self.values.len());
        for v in &self.values {
            let label = v.trim().to_string();
            let point = match self.axis {
                SweepAxis::AlphaBetaGrid => {
                    let (a, b) = match label.split_once(':') {
                        Some((a, b)) => (parse_coefficient(a)?, parse_coefficient(b)?),
                        None => {
                            let a = parse_coefficient(&label)?;
                            (a, a)
                        }
                    };
                    Point::Coefficients(a, b)
                }
                SweepAxis::Layer => {
                    let layer: usize = label
                        .parse()
                        .map_err(|_| HarnessError::Config(format!("bad layer {label:?}")))?;
                    if layer < 1 || layer > base.edit.num_layers {
                        return Err(HarnessError::Config(format!(
                            "layer {layer} outside [1, {}]",
                            base.edit.num_layers
                        )));
                    }
                    Point::Layer(layer)
                }
                SweepAxis::Strategy => Point::Strategy(parse_strategy(&label, base)?),
            };
            points.push((label, point));
        }
        if self.axis == SweepAxis::Layer {
            points.sort_by_key(|(_, p)| match p {
                Point::Layer(l) => *l,
                _ => 0,
            });
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    /// Error message of the first failed repetition.
    pub error: Option<String>,
    pub runs: usize,
    /// Means over repetitions, of the mitigated captions.
    pub hallucinated_mentions: f64,
    pub chair_s: f64,
    pub chair_i: f64,
    pub average: f64,
    pub recall: f64,
    pub har: f64,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            self.axis.to_string().as_str(),
            "status",
            "hallucinated",
            "CHAIR_S",
            "CHAIR_I",
            "Average",
            "Recall",
            "HAR@1",
        ]);
        for r in &self.rows {
            match &r.error {
                Some(e) => t.push([
                    r.label.clone(),
                    format!("failed: {e}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]),
                None => t.push([
                    r.label.clone(),
                    "ok".into(),
                    format!("{:.2}", r.hallucinated_mentions),
                    format!("{:.2}", r.chair_s * 100.0),
                    format!("{:.2}", r.chair_i * 100.0),
                    format!("{:.2}", r.average * 100.0),
                    format!("{:.2}", r.recall * 100.0),
                    format!("{:.4}", r.har),
                ]),
            }
        }
        t
    }
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One CHAIR run per grid point and repetition, each writing its own record
/// file under `out_dir`. Failed points are marked and the sweep continues.
/// Writes `sweep.json` and `sweep.txt` next to the record files.
pub fn sweep(spec: &SweepSpec, base: &RunConfig, out_dir: &Path) -> Result<SweepTable, HarnessError> {
    if base.benchmark != Benchmark::Chair {
        return Err(HarnessError::Config("sweeps run the chair benchmark".into()));
    }
    let points = spec.points(base)?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let mut rows = Vec::with_capacity(points.len());
    for (label, point) in points {
        let mut row = SweepRow {
            label: label.clone(),
            error: None,
            runs: 0,
            hallucinated_mentions: 0.0,
            chair_s: 0.0,
            chair_i: 0.0,
            average: 0.0,
            recall: 0.0,
            har: 0.0,
            outputs: Vec::new(),
        };
        for rep in 0..spec.repetitions {
            let mut cfg = base.clone();
            cfg.mock.world_seed = Some(base.world_seed());
            cfg.seed = derive_seed(spec.seed_base, &format!("{}:{label}#{rep}", spec.axis));
            match &point {
                Point::Coefficients(a, b) => {
                    cfg.edit = cfg.edit.with_strategy(CoefficientStrategy::fixed_pair(*a, *b), a == b);
                }
                Point::Layer(l) => cfg.edit.layer = *l,
                Point::Strategy(s) => cfg.edit = cfg.edit.with_strategy(*s, base.edit.tied),
            }
            cfg.output = out_dir.join(format!("{}-{}-r{rep}.jsonl", spec.axis, file_label(&label)));
            row.outputs.push(cfg.output.clone());
            match run_benchmark(&cfg) {
                Ok(outcome) => {
                    if let BenchmarkReport::Chair { mitigated, .. } = outcome.report {
                        row.runs += 1;
                        row.hallucinated_mentions += mitigated.hallucinated_mentions() as f64;
                        row.chair_s += mitigated.chair_s;
                        row.chair_i += mitigated.chair_i;
                        row.average += mitigated.average;
                        row.recall += mitigated.recall;
                    }
                }
                Err(e) => {
                    row.error.get_or_insert(e.to_string());
                }
            }
        }
        if row.runs > 0 {
            let n = row.runs as f64;
            row.hallucinated_mentions /= n;
            row.chair_s /= n;
            row.chair_i /= n;
            row.average /= n;
            row.recall /= n;
            row.har = har_at_1(row.average, row.recall).unwrap_or(0.0);
        }
        rows.push(row);
    }

    let table = SweepTable { axis: spec.axis, rows };
    let json = serde_json::to_string_pretty(&table).expect("sweep table serializes") + "\n";
    let json_path = out_dir.join("sweep.json");
    std::fs::write(&json_path, json).map_err(|e| HarnessError::io(&json_path, e))?;
    let txt_path = out_dir.join("sweep.txt");
    std::fs::write(&txt_path, render_table(&table.table(), false)).map_err(|e| HarnessError::io(&txt_path, e))?;
    Ok(table)
}
