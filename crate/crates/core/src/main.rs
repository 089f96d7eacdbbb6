use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use anchoredit::editing::{CoefficientStrategy, EditConfig};
use anchoredit::harness::{
    caption_corpus, emit_report, mitigate_corpus, render_table, report_table, run_benchmark_opts, summary_table, sweep,
    Benchmark, HarnessError, ReconSource, ReportFormat, RunConfig, RunOptions, SweepAxis, SweepSpec,
};
use anchoredit::pipeline::Ablation;

#[derive(Parser)]
#[command(
    name = "anchoredit",
    version,
    about = "Dual-anchor latent editing and caption hallucination benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Baseline captions for every image of the corpus (JSONL).
    Caption(RunArgs),
    /// Two-pass mitigation for every image of the corpus (JSONL).
    Mitigate(RunArgs),
    /// CHAIR with two-pass mitigation on captions.
    EvalChair(RunArgs),
    /// POPE yes/no object probing with mitigation active.
    EvalPope(RunArgs),
    /// MME hallucination subset with mitigation active.
    EvalMme(RunArgs),
    /// Hallucination amplification probe.
    Probe(RunArgs),
    /// Before/after deltas on captions without hallucinations.
    Robustness(RunArgs),
    /// CHAIR runs over an alpha/beta grid, layers or coefficient strategies.
    Sweep(SweepArgs),
    /// Render persisted records.
    Report(ReportArgs),
}

// Flags that can also come from the `--config` TOML file (same names,
// dashes or underscores). Flags override the file.
#[derive(Args, Deserialize, Default, Clone)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct Overrides {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// 1-based decoder layer whose output is edited.
    #[arg(long)]
    layer: Option<usize>,
    /// fixed, uniform or gaussian.
    #[arg(long)]
    strategy: Option<String>,
    /// Lower bound of sampled coefficients.
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    std: Option<f64>,
    #[arg(long)]
    best_of: Option<usize>,
    #[arg(long)]
    avg_of: Option<usize>,
    /// Force beta = alpha.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", overrides_with = "untied")]
    tied: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    untied: bool,
    /// both, pos, neg or off.
    #[arg(long)]
    ablation: Option<String>,
    /// mock or adapter:<name>.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    prompt: Option<String>,
    /// caption or answer.
    #[arg(long)]
    recon_source: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    per_sentence: Option<bool>,
    /// MME subtask for lines without one.
    #[arg(long)]
    subtask: Option<String>,
    /// POPE setting for lines without one.
    #[arg(long)]
    setting: Option<String>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    pope: Option<PathBuf>,
    #[arg(long)]
    mme: Option<PathBuf>,
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long)]
    images_dir: Option<PathBuf>,
    /// Synthetic mock corpus size.
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    hallucination_rate: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    world_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Stop after this many new records (the run stays resumable).
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    timestamps: Option<bool>,
}

macro_rules! prefer {
    ($cli:expr, $file:expr, $($field:ident),*) => {
        Overrides { $($field: $cli.$field.or($file.$field),)* untied: $cli.untied }
    };
}

impl Overrides {
    fn over(self, file: Overrides) -> Overrides {
        let cli = self;
        prefer!(
            cli,
            file,
            alpha,
            beta,
            layer,
            strategy,
            lo,
            hi,
            mean,
            std,
            best_of,
            avg_of,
            tied,
            ablation,
            backend,
            seed,
            out,
            prompt,
            recon_source,
            per_sentence,
            subtask,
            setting,
            annotations,
            pope,
            mme,
            synonyms,
            images_dir,
            images,
            hallucination_rate,
            noise_std,
            world_seed,
            workers,
            limit,
            timestamps
        )
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// alpha_beta_grid, layer or strategy.
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Defaults to --seed.
    #[arg(long)]
    seed_base: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    /// text-table, delimited or figure-bundle.
    #[arg(long, default_value = "text-table")]
    format: ReportFormat,
    /// Output file (directory for figure-bundle); tables go to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse<T: std::str::FromStr>(what: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| config_err(format!("bad --{what} {value:?}: {e}")))
}

fn parse_ablation(value: &str) -> Result<Ablation, HarnessError> {
    match value {
        "both" => Ok(Ablation::Both),
        "pos" | "positive-only" => Ok(Ablation::PositiveOnly),
        "neg" | "negative-only" => Ok(Ablation::NegativeOnly),
        "off" => Ok(Ablation::Off),
        other => Err(config_err(format!(
            "--ablation must be both, pos, neg or off, got {other:?}"
        ))),
    }
}

impl RunArgs {
    fn overrides(&self) -> Result<Overrides, HarnessError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                let normalized = normalize_keys(&text);
                toml::from_str(&normalized).map_err(|e| config_err(format!("{}: {e}", path.display())))?
            }
            None => Overrides::default(),
        };
        Ok(self.flags.clone().over(file))
    }

    fn build(&self, benchmark: Benchmark) -> Result<(RunConfig, RunOptions), HarnessError> {
        let o = self.overrides()?;
        let mut c = RunConfig::new(benchmark);
        if let Some(b) = &o.backend {
            c.backend = parse("backend", b)?;
        }
        if let Some(s) = o.seed {
            c.seed = s;
        }
        c.output = o
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("results/{benchmark}.jsonl")));
        if let Some(p) = &o.prompt {
            c.prompt = p.clone();
        }
        if let Some(r) = &o.recon_source {
            c.recon_source = match r.as_str() {
                "caption" => ReconSource::Caption,
                "answer" => ReconSource::Answer,
                other => {
                    return Err(config_err(format!(
                        "--recon-source must be caption or answer, got {other:?}"
                    )))
                }
            };
        }
        if let Some(a) = &o.ablation {
            c.ablation = parse_ablation(a)?;
        }
        c.per_sentence = o.per_sentence.unwrap_or(false);
        if let Some(s) = &o.subtask {
            c.mme_subtask = parse("subtask", s)?;
        }
        if let Some(s) = &o.setting {
            c.pope_setting = parse("setting", s)?;
        }
        c.datasets.annotations = o.annotations.clone();
        c.datasets.pope = o.pope.clone();
        c.datasets.mme = o.mme.clone();
        c.datasets.synonyms = o.synonyms.clone();
        c.datasets.images_dir = o.images_dir.clone();
        if let Some(n) = o.images {
            c.mock.images = n;
        }
        if let Some(r) = o.hallucination_rate {
            c.mock.params.hallucination_rate = r;
        }
        if let Some(s) = o.noise_std {
            c.mock.params.noise_std = s;
        }
        c.mock.world_seed = o.world_seed;
        c.workers = o.workers.unwrap_or(0);
        c.record_timestamps = o.timestamps.unwrap_or(false);

        let alpha = o.alpha.unwrap_or(c.edit.alpha);
        let beta = o.beta.unwrap_or(c.edit.beta);
        let tied = if o.untied { false } else { o.tied.unwrap_or(false) };
        let lo = o.lo.unwrap_or(0.08);
        let hi = o.hi.unwrap_or(0.12);
        let strategy = match o.strategy.as_deref().unwrap_or("fixed") {
            "fixed" => CoefficientStrategy::fixed_pair(alpha, beta),
            "uniform" => CoefficientStrategy::uniform(lo, hi),
            "gaussian" => {
                let default = CoefficientStrategy::gaussian_over(lo, hi);
                match default.kind {
                    anchoredit::editing::StrategyKind::Gaussian { mean, std, .. } => {
                        CoefficientStrategy::gaussian(o.mean.unwrap_or(mean), o.std.unwrap_or(std), lo, hi)
                    }
                    _ => default,
                }
            }
            other => {
                return Err(config_err(format!(
                    "--strategy must be fixed, uniform or gaussian, got {other:?}"
                )))
            }
        }
        .with_best_of(o.best_of.unwrap_or(1))
        .with_avg_of(o.avg_of.unwrap_or(1));
        let layers = c.mock.params.num_layers;
        c.edit = EditConfig::new(alpha, beta, layers)
            .with_layer(o.layer.unwrap_or(c.edit.layer))
            .with_strategy(strategy, tied);
        c.validate()?;
        Ok((c, RunOptions { limit: o.limit }))
    }
}

/// TOML keys may use underscores; the flag names use dashes.
fn normalize_keys(text: &str) -> String {
    text.lines()
        .map(|line| match line.split_once('=') {
            Some((key, rest)) if !key.trim_start().starts_with('#') => {
                format!("{}={rest}", key.replace('_', "-"))
            }
            _ => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::Io {
            path: parent.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("rows serialize"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let benchmark = |cmd: &Command| match cmd {
        Command::EvalPope(_) => Benchmark::Pope,
        Command::EvalMme(_) => Benchmark::Mme,
        Command::Probe(_) => Benchmark::Probe,
        Command::Robustness(_) => Benchmark::Robustness,
        _ => Benchmark::Chair,
    };
    let b = benchmark(&cli.command);
    match cli.command {
        Command::Caption(args) => {
            let (mut config, _) = args.build(Benchmark::Chair)?;
            if args.flags.out.is_none() {
                config.output = PathBuf::from("results/captions.jsonl");
            }
            let rows: Vec<serde_json::Value> = caption_corpus(&config)?
                .into_iter()
                .map(|(id, c)| serde_json::json!({ "image_id": id, "caption": c.text }))
                .collect();
            write_jsonl(&config.output, &rows)?;
            println!("{} captions -> {}", rows.len(), config.output.display());
        }
        Command::Mitigate(args) => {
            let (mut config, _) = args.build(Benchmark::Chair)?;
            if args.flags.out.is_none() {
                config.output = PathBuf::from("results/mitigated.jsonl");
            }
            let rows: Vec<serde_json::Value> = mitigate_corpus(&config)?
                .into_iter()
                .map(|(id, r)| serde_json::json!({ "image_id": id, "result": r }))
                .collect();
            write_jsonl(&config.output, &rows)?;
            println!("{} mitigation results -> {}", rows.len(), config.output.display());
        }
        Command::EvalChair(args)
        | Command::EvalPope(args)
        | Command::EvalMme(args)
        | Command::Probe(args)
        | Command::Robustness(args) => {
            let (config, opts) = args.build(b)?;
            let outcome = run_benchmark_opts(&config, opts)?;
            print!("{}", render_table(&summary_table(b, Some(&outcome.report)), false));
            println!("{} records -> {}", outcome.records.len(), config.output.display());
        }
        Command::Sweep(args) => {
            let (config, _) = args.run.build(Benchmark::Chair)?;
            let out_dir = args
                .run
                .flags
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("results/sweep"));
            let spec = SweepSpec {
                axis: args.axis,
                values: args.values,
                repetitions: args.repetitions,
                seed_base: args.seed_base.unwrap_or(config.seed),
            };
            let table = sweep(&spec, &config, &out_dir)?;
            print!("{}", render_table(&table.table(), false));
            println!("sweep table -> {}", out_dir.join("sweep.json").display());
        }
        Command::Report(args) => match (&args.out, args.format) {
            (Some(out), format) => {
                for f in emit_report(&args.records, format, out)? {
                    println!("{}", f.display());
                }
            }
            (None, ReportFormat::FigureBundle) => {
                return Err(config_err("figure-bundle needs --out DIR"));
            }
            (None, format) => {
                let table = report_table(&args.records)?;
                let text = render_table(&table, format == ReportFormat::Delimited);
                std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| HarnessError::Io {
                        path: PathBuf::from("<stdout>"),
                        message: e.to_string(),
                    })?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
