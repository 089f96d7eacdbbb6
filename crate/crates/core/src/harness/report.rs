//! Tables and figures rendered from persisted records.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use plotters::prelude::*;

use super::config::{Benchmark, RunConfig};
use super::records::{read_records, ResultRecord, SampleMetrics};
use super::run::{aggregate, BenchmarkReport};
use super::HarnessError;
use crate::metrics::{har_at_1, ChairReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Delimited,
    FigureBundle,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text-table" | "text" => Ok(ReportFormat::TextTable),
            "delimited" | "csv" => Ok(ReportFormat::Delimited),
            "figure-bundle" | "figures" => Ok(ReportFormat::FigureBundle),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Aligned plain text, or comma-separated values when `delimited`.
pub fn render_table(table: &Table, delimited: bool) -> String {
    if delimited {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&table.header).expect("in-memory csv");
        for row in &table.rows {
            w.write_record(row).expect("in-memory csv");
        }
        return String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 cells");
    }
    let widths: Vec<usize> = (0..table.header.len())
        .map(|i| {
            table
                .rows
                .iter()
                .map(|r| r[i].chars().count())
                .chain([table.header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&table.header);
    out.push_str(&(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ") + "\n"));
    for row in &table.rows {
        out.push_str(&line(row));
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

const CHAIR_HEADER: [&str; 8] = ["run", "n", "CHAIR_S", "CHAIR_I", "Average", "Recall", "HAR@1", "Length"];

/// CHAIR row; HAR@1 is computed from the displayed Average and Recall.
fn chair_row(label: &str, r: &ChairReport) -> Vec<String> {
    let average = pct(r.average);
    let recall = pct(r.recall);
    let h: f64 = average.parse::<f64>().expect("formatted number") / 100.0;
    let rec: f64 = recall.parse::<f64>().expect("formatted number") / 100.0;
    let har = har_at_1(h.clamp(0.0, 1.0), rec.clamp(0.0, 1.0)).unwrap_or(0.0);
    vec![
        label.to_string(),
        r.per_image.len().to_string(),
        pct(r.chair_s),
        pct(r.chair_i),
        average,
        recall,
        format!("{har:.4}"),
        format!("{:.2}", r.mean_length),
    ]
}

fn empty_row(n: usize) -> Vec<String> {
    vec![String::new(); n]
}

fn header_for(benchmark: Benchmark) -> Vec<&'static str> {
    match benchmark {
        Benchmark::Chair | Benchmark::Robustness => CHAIR_HEADER.to_vec(),
        Benchmark::Pope => vec!["setting", "run", "Accuracy", "Precision", "Recall", "F1", "Other"],
        Benchmark::Mme => vec!["subtask", "run", "Accuracy", "Accuracy+", "Score"],
        Benchmark::Probe => vec![
            "cases",
            "sim_text",
            "sim_roundtrip",
            "gap",
            "positive",
            "negative",
            "ties",
            "sign_test_p",
        ],
    }
}

/// Summary table for one benchmark report.
pub fn summary_table(benchmark: Benchmark, report: Option<&BenchmarkReport>) -> Table {
    let mut t = Table::new(header_for(benchmark));
    let Some(report) = report else {
        return t;
    };
    match report {
        BenchmarkReport::Chair {
            baseline, mitigated, ..
        } => {
            t.push(chair_row("baseline", baseline));
            t.push(chair_row("mitigated", mitigated));
        }
        BenchmarkReport::Robustness(s) => {
            if let (Some(before), Some(after), Some(delta)) = (&s.before, &s.after, &s.delta) {
                t.push(chair_row("before", before));
                t.push(chair_row("after", after));
                let mut row = empty_row(CHAIR_HEADER.len());
                row[0] = "delta (pp)".into();
                row[1] = s.subset.to_string();
                row[4] = format!("{:+.2}", delta.delta_chair);
                row[5] = format!("{:+.2}", delta.delta_recall);
                t.push(row);
            }
        }
        BenchmarkReport::Pope { baseline, mitigated } => {
            for (b, m) in baseline.settings.iter().zip(&mitigated.settings) {
                for (label, s) in [("baseline", b), ("mitigated", m)] {
                    t.push([
                        s.setting.to_string(),
                        label.into(),
                        pct(s.accuracy),
                        pct(s.precision),
                        pct(s.recall),
                        pct(s.f1),
                        s.other.to_string(),
                    ]);
                }
            }
            for (label, r) in [("baseline", baseline), ("mitigated", mitigated)] {
                t.push([
                    "average".to_string(),
                    label.into(),
                    pct(r.average.accuracy),
                    pct(r.average.precision),
                    pct(r.average.recall),
                    pct(r.average.f1),
                    String::new(),
                ]);
            }
        }
        BenchmarkReport::Mme { baseline, mitigated } => {
            for (b, m) in baseline.subtasks.iter().zip(&mitigated.subtasks) {
                for (label, s) in [("baseline", b), ("mitigated", m)] {
                    t.push([
                        s.subtask.to_string(),
                        label.into(),
                        pct(s.accuracy),
                        pct(s.accuracy_plus),
                        format!("{:.2}", s.score),
                    ]);
                }
            }
            for (label, r) in [("baseline", baseline), ("mitigated", mitigated)] {
                t.push([
                    "total".to_string(),
                    label.into(),
                    String::new(),
                    String::new(),
                    format!("{:.2}", r.hall_total),
                ]);
            }
        }
        BenchmarkReport::Probe(p) => {
            t.push([
                p.cases.to_string(),
                format!("{:.4}", p.mean_sim_text),
                format!("{:.4}", p.mean_sim_roundtrip),
                format!("{:.4}", p.mean_gap),
                p.positive.to_string(),
                p.negative.to_string(),
                p.ties.to_string(),
                format!("{:.3e}", p.sign_test_p),
            ]);
        }
    }
    t
}

/// Config shared by every record, and the report recomputed from them.
fn load(records: &[ResultRecord]) -> Result<Option<(RunConfig, BenchmarkReport)>, HarnessError> {
    let Some(first) = records.first() else {
        return Ok(None);
    };
    let config = first.config.clone();
    if records.iter().any(|r| r.config != config) {
        return Err(HarnessError::Config(
            "records come from different configurations".into(),
        ));
    }
    let map = config.synonym_map()?;
    let report = aggregate(&config, records, &map)?;
    Ok(Some((config, report)))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf, HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Summary table of the records at `records_path`.
pub fn report_table(records_path: &Path) -> Result<Table, HarnessError> {
    let records = read_records(records_path)?;
    let loaded = load(&records)?;
    let benchmark = loaded.as_ref().map(|(c, _)| c.benchmark).unwrap_or(Benchmark::Chair);
    Ok(summary_table(benchmark, loaded.as_ref().map(|(_, r)| r)))
}

/// Renders the records at `records_path` into `out`: a file for the table
/// formats, a directory for the figure bundle. Returns the files written.
pub fn emit_report(records_path: &Path, format: ReportFormat, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let records = read_records(records_path)?;
    let table = report_table(records_path)?;
    match format {
        ReportFormat::TextTable => Ok(vec![write(out, render_table(&table, false))?]),
        ReportFormat::Delimited => Ok(vec![write(out, render_table(&table, true))?]),
        ReportFormat::FigureBundle => {
            std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
            let mut files = vec![
                write(&out.join("summary.txt"), render_table(&table, false))?,
                write(&out.join("summary.csv"), render_table(&table, true))?,
            ];
            let scatter = out.join("alpha_beta.svg");
            alpha_beta_scatter(&records, &scatter)?;
            files.push(scatter);
            let gap = out.join("probe_gap.svg");
            probe_gap_chart(&records, &gap)?;
            files.push(gap);
            Ok(files)
        }
    }
}

fn plot_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Sampled `(alpha, beta)` candidates in grey, applied pairs in blue.
fn alpha_beta_scatter(records: &[ResultRecord], path: &Path) -> Result<(), HarnessError> {
    let candidates: Vec<(f64, f64)> = records
        .iter()
        .flat_map(|r| r.candidates.iter().map(|c| (c.alpha, c.beta)))
        .collect();
    let applied: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| !r.candidates.is_empty())
        .map(|r| r.applied)
        .collect();
    let (mut lo, mut hi) = candidates
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 0.2);
    }
    let pad = ((hi - lo) * 0.1).max(0.01);
    let range = (lo - pad)..(hi + pad);

    let root = SVGBackend::new(path, (480, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .build_cartesian_2d(range.clone(), range)
        .map_err(|e| plot_err(path, e))?;
    chart
        .draw_series(
            candidates
                .iter()
                .map(|&(a, b)| Circle::new((a, b), 3, RGBColor(160, 160, 160).filled())),
        )
        .map_err(|e| plot_err(path, e))?;
    chart
        .draw_series(applied.iter().map(|&(a, b)| Circle::new((a, b), 4, BLUE.filled())))
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))?;
    Ok(())
}

/// Mean text similarity next to mean round-trip similarity, plus one bar
/// per probe case for the gap.
fn probe_gap_chart(records: &[ResultRecord], path: &Path) -> Result<(), HarnessError> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| match r.metrics {
            SampleMetrics::Probe {
                sim_text,
                sim_roundtrip,
                ..
            } => Some((sim_text, sim_roundtrip)),
            _ => None,
        })
        .collect();
    let n = pairs.len().max(1) as f64;
    let mean_text = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_round = pairs.iter().map(|p| p.1).sum::<f64>() / n;

    let root = SVGBackend::new(path, (640, 360)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let (left, right) = root.split_horizontally(200);
    let mut means = ChartBuilder::on(&left)
        .margin(20)
        .build_cartesian_2d(0.0..2.0, 0.0..1.0)
        .map_err(|e| plot_err(path, e))?;
    means
        .draw_series([
            Rectangle::new([(0.2, 0.0), (0.8, mean_text)], BLUE.filled()),
            Rectangle::new([(1.2, 0.0), (1.8, mean_round)], RED.filled()),
        ])
        .map_err(|e| plot_err(path, e))?;

    let cases = pairs.len().max(1) as f64;
    let mut gaps = ChartBuilder::on(&right)
        .margin(20)
        .build_cartesian_2d(0.0..cases, -1.0..1.0)
        .map_err(|e| plot_err(path, e))?;
    gaps.draw_series(pairs.iter().enumerate().map(|(i, (t, r))| {
        let x = i as f64;
        let gap = t - r;
        let color = if gap >= 0.0 { BLUE } else { RED };
        Rectangle::new([(x, 0.0), (x + 0.8, gap)], color.filled())
    }))
    .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))?;
    Ok(())
}
