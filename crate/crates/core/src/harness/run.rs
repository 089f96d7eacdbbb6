//! Benchmark execution and aggregation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BackendSpec, Benchmark, ReconSource, RunConfig};
use super::dataset::{
    load_annotations, load_mme, load_pope, synth_annotations, synth_mme, synth_pope, MmeQuestion, PopeQuestion,
};
use super::records::{read_records, RecordWriter, ResultRecord, SampleMetrics, SCHEMA_VERSION};
use super::stats::sign_test_p;
use super::HarnessError;
use crate::metrics::{
    chair_report_with, extract_objects, har_at_1, mme_report, parse_yes_no, pope_report, robustness_delta,
    AnnotationSet, CaptionRecord, ChairOptions, ChairReport, MmeAnswer, MmeReport, PopeReport, RobustnessDelta,
    SynonymMap,
};
use crate::mock::{mock_image, mock_suite, render_caption, MockScene, MockWorld};
use crate::pipeline::{
    amplification_probe, generate_baseline_caption, generate_with_mitigation_opts, mitigate_with_anchor_prompt,
    BackendSuite, CandidateRanker, CandidateScore, Caption, CaptionSource, ImageRef, MitigationOptions,
    MitigationResult, ObjectCosine,
};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop after persisting this many new records (simulates an
    /// interrupted run; the remainder is reported as resumable).
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub cases: usize,
    pub mean_sim_text: f64,
    pub mean_sim_roundtrip: f64,
    pub mean_gap: f64,
    /// Cases with `sim_roundtrip < sim_text`.
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    /// One-sided sign test of `sim_roundtrip < sim_text`.
    pub sign_test_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub images: usize,
    pub subset: usize,
    pub before: Option<ChairReport>,
    pub after: Option<ChairReport>,
    pub delta: Option<RobustnessDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "benchmark", rename_all = "kebab-case")]
pub enum BenchmarkReport {
    Chair {
        baseline: ChairReport,
        mitigated: ChairReport,
        har_baseline: f64,
        har_mitigated: f64,
    },
    Pope {
        baseline: PopeReport,
        mitigated: PopeReport,
    },
    Mme {
        baseline: MmeReport,
        mitigated: MmeReport,
    },
    Probe(ProbeSummary),
    Robustness(RobustnessSummary),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<ResultRecord>,
    pub report: BenchmarkReport,
}

/// Ranks candidates by hallucinated mentions against ground truth, then
/// recall.
struct GroundTruthRanker<'a> {
    map: &'a SynonymMap,
    gt: &'a BTreeSet<String>,
}

impl CandidateRanker for GroundTruthRanker<'_> {
    fn rank(&self, _image: &ImageRef, caption: &Caption) -> CandidateScore {
        let mentioned = extract_objects(&caption.text, self.map);
        let covered = mentioned.intersection(self.gt).count();
        CandidateScore {
            hallucinated: mentioned.len() - covered,
            recall: if self.gt.is_empty() {
                0.0
            } else {
                covered as f64 / self.gt.len() as f64
            },
        }
    }
}

enum Task {
    Caption,
    Pope(PopeQuestion),
    Mme(MmeQuestion),
    Probe,
}

struct Sample {
    id: String,
    image: ImageRef,
    gt: Option<BTreeSet<String>>,
    task: Task,
}

/// Mock world described by the config.
pub fn mock_world(config: &RunConfig) -> Result<MockWorld, HarnessError> {
    MockWorld::new(config.world_seed(), &config.mock.vocabulary, config.mock.params)
        .map_err(|e| HarnessError::Config(e.to_string()))
}

/// Backends for `config.backend`. Hosted adapters have to be wired by the
/// caller through [`run_benchmark_with`].
pub fn build_backends(config: &RunConfig) -> Result<(BackendSuite, Option<Arc<MockWorld>>), HarnessError> {
    match &config.backend {
        BackendSpec::Mock => {
            let world = Arc::new(mock_world(config)?);
            Ok((mock_suite(world.clone()), Some(world)))
        }
        BackendSpec::Adapter(name) => Err(HarnessError::Backend(format!(
            "no adapter named {name:?} is registered in this build"
        ))),
    }
}

struct Corpus {
    annotations: Option<AnnotationSet>,
    world: Option<Arc<MockWorld>>,
}

impl Corpus {
    fn load(config: &RunConfig, map: &SynonymMap, world: Option<Arc<MockWorld>>) -> Result<Self, HarnessError> {
        let annotations = match (&config.datasets.annotations, &world) {
            (Some(path), _) => Some(load_annotations(path, map)?),
            (None, Some(w)) => Some(synth_annotations(w, config.mock.images, map)),
            (None, None) => None,
        };
        Ok(Self { annotations, world })
    }

    fn annotations(&self) -> Result<&AnnotationSet, HarnessError> {
        self.annotations
            .as_ref()
            .ok_or_else(|| HarnessError::Config("this benchmark needs an annotations file".into()))
    }

    fn gt(&self, image: &str) -> Option<&BTreeSet<String>> {
        let ann = self.annotations.as_ref()?;
        ann.get(image).or_else(|| {
            let stem = Path::new(image).file_stem()?.to_str()?;
            ann.get(stem)
        })
    }

    fn image(&self, config: &RunConfig, id: &str) -> Result<ImageRef, HarnessError> {
        match &self.world {
            Some(_) => {
                let gt = self.gt(id).ok_or_else(|| HarnessError::Dataset {
                    path: config.datasets.annotations.clone().unwrap_or_default(),
                    line: 0,
                    message: format!("mock image {id:?} has no annotated scene"),
                })?;
                Ok(mock_image(id, MockScene::new(gt.iter().cloned())))
            }
            None => {
                let uri = match &config.datasets.images_dir {
                    Some(dir) => dir.join(id).display().to_string(),
                    None => id.to_string(),
                };
                Ok(ImageRef::new(id, uri))
            }
        }
    }
}

fn build_samples(config: &RunConfig, corpus: &Corpus) -> Result<Vec<Sample>, HarnessError> {
    let mut samples = Vec::new();
    match config.benchmark {
        Benchmark::Chair | Benchmark::Robustness | Benchmark::Probe => {
            for (id, gt) in corpus.annotations()?.iter() {
                samples.push(Sample {
                    id: id.clone(),
                    image: corpus.image(config, id)?,
                    gt: Some(gt.clone()),
                    task: if config.benchmark == Benchmark::Probe {
                        Task::Probe
                    } else {
                        Task::Caption
                    },
                });
            }
        }
        Benchmark::Pope => {
            let questions = match (&config.datasets.pope, &corpus.world) {
                (Some(path), _) => load_pope(path)?,
                (None, Some(w)) => synth_pope(w, corpus.annotations()?),
                (None, None) => return Err(HarnessError::Config("POPE needs a question file".into())),
            };
            for q in questions {
                samples.push(Sample {
                    id: q.id.clone(),
                    image: corpus.image(config, &q.image)?,
                    gt: corpus.gt(&q.image).cloned(),
                    task: Task::Pope(q),
                });
            }
        }
        Benchmark::Mme => {
            let questions = match (&config.datasets.mme, &corpus.world) {
                (Some(path), _) => load_mme(path)?,
                (None, Some(w)) => synth_mme(w, corpus.annotations()?),
                (None, None) => return Err(HarnessError::Config("MME needs a question file".into())),
            };
            for q in questions {
                samples.push(Sample {
                    id: q.id.clone(),
                    image: corpus.image(config, &q.image)?,
                    gt: corpus.gt(&q.image).cloned(),
                    task: Task::Mme(q),
                });
            }
        }
    }
    let mut seen = HashSet::new();
    if let Some(dup) = samples.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(HarnessError::Config(format!("duplicate sample id {:?}", dup.id)));
    }
    Ok(samples)
}

struct Runner<'a> {
    config: &'a RunConfig,
    backends: &'a BackendSuite,
    map: &'a SynonymMap,
    similarity: ObjectCosine,
}

fn backend_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Backend(e.to_string())
}

impl Runner<'_> {
    fn process(&self, sample: &Sample) -> Result<ResultRecord, HarnessError> {
        let config = self.config;
        let sample_seed = derive_seed(config.seed, &sample.image.id);
        let cfg = config.edit.with_seed(sample_seed);
        let ranker = sample.gt.as_ref().map(|gt| GroundTruthRanker { map: self.map, gt });
        let caption_opts = MitigationOptions {
            ablation: config.ablation,
            ranker: ranker.as_ref().map(|r| r as &dyn CandidateRanker),
        };
        let qa_opts = MitigationOptions {
            ablation: config.ablation,
            ranker: None,
        };

        let (prompt, baseline, result, metrics) = match &sample.task {
            Task::Caption => {
                let r = generate_with_mitigation_opts(&sample.image, &config.prompt, &cfg, self.backends, caption_opts)
                    .map_err(backend_err)?;
                let gt = sample.gt.clone().unwrap_or_default();
                let baseline_objects = extract_objects(&r.baseline.text, self.map);
                let mitigated_objects = extract_objects(&r.mitigated.text, self.map);
                let metrics = if config.benchmark == Benchmark::Robustness {
                    SampleMetrics::Robustness {
                        in_subset: baseline_objects.is_subset(&gt),
                        gt,
                        baseline_objects,
                        mitigated_objects,
                    }
                } else {
                    SampleMetrics::Chair {
                        gt,
                        baseline_objects,
                        mitigated_objects,
                    }
                };
                (config.prompt.clone(), r.baseline.text.clone(), Some(r), metrics)
            }
            Task::Pope(q) => {
                let (baseline, r) = self.answer(&sample.image, &q.text, &cfg, qa_opts)?;
                let metrics = SampleMetrics::Pope {
                    setting: q.setting.unwrap_or(config.pope_setting),
                    label: q.label,
                    baseline_answer: parse_yes_no(&baseline),
                    mitigated_answer: parse_yes_no(&r.mitigated.text),
                };
                (q.text.clone(), baseline, Some(r), metrics)
            }
            Task::Mme(q) => {
                let (baseline, r) = self.answer(&sample.image, &q.question, &cfg, qa_opts)?;
                let metrics = SampleMetrics::Mme {
                    subtask: q.subtask.unwrap_or(config.mme_subtask),
                    label: q.label,
                    baseline_answer: parse_yes_no(&baseline),
                    mitigated_answer: parse_yes_no(&r.mitigated.text),
                };
                (q.question.clone(), baseline, Some(r), metrics)
            }
            Task::Probe => {
                let gt = sample.gt.clone().unwrap_or_default();
                let absent: Vec<&String> = self.map.canonical().iter().filter(|o| !gt.contains(*o)).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sample_seed, "probe-injection"));
                let injected = absent
                    .choose(&mut rng)
                    .map(|s| s.to_string())
                    .ok_or_else(|| HarnessError::Config("no absent object left to inject".into()))?;
                let names = |set: &BTreeSet<String>| -> String {
                    render_caption(&set.iter().map(String::as_str).collect::<Vec<_>>())
                };
                let clean = names(&gt);
                let mut with = gt.clone();
                with.insert(injected.clone());
                let hallucinated = names(&with);
                let report = amplification_probe(
                    &sample.image,
                    &Caption::new(clean.clone(), CaptionSource::External),
                    &Caption::new(hallucinated.clone(), CaptionSource::External),
                    &config.prompt,
                    self.backends,
                    &self.similarity,
                )
                .map_err(backend_err)?;
                let metrics = SampleMetrics::Probe {
                    injected,
                    clean_caption: clean,
                    hallucinated_caption: hallucinated,
                    sim_text: report.sim_text,
                    sim_roundtrip: report.sim_roundtrip,
                    gap: report.gap,
                };
                return Ok(self.record(
                    sample,
                    config.prompt.clone(),
                    report.original_caption,
                    report.reconstructed_caption,
                    sample_seed,
                    None,
                    metrics,
                ));
            }
        };
        let r = result.expect("non-probe tasks mitigate");
        let mitigated = r.mitigated.text.clone();
        Ok(self.record(sample, prompt, baseline, mitigated, sample_seed, Some(r), metrics))
    }

    /// Unedited and edited answers to one question.
    fn answer(
        &self,
        image: &ImageRef,
        question: &str,
        cfg: &crate::editing::EditConfig,
        opts: MitigationOptions<'_>,
    ) -> Result<(String, MitigationResult), HarnessError> {
        let anchor_prompt = match self.config.recon_source {
            ReconSource::Caption => self.config.prompt.as_str(),
            ReconSource::Answer => question,
        };
        let r = mitigate_with_anchor_prompt(image, anchor_prompt, question, cfg, self.backends, opts)
            .map_err(backend_err)?;
        let baseline = match self.config.recon_source {
            ReconSource::Answer => r.baseline.text.clone(),
            ReconSource::Caption => {
                generate_baseline_caption(image, question, self.backends)
                    .map_err(backend_err)?
                    .text
            }
        };
        Ok((baseline, r))
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        sample: &Sample,
        prompt: String,
        baseline: String,
        mitigated: String,
        sample_seed: u64,
        result: Option<MitigationResult>,
        metrics: SampleMetrics,
    ) -> ResultRecord {
        let (applied, candidates) = match result {
            Some(r) => (r.applied, r.candidates),
            None => ((0.0, 0.0), Vec::new()),
        };
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            sequence: 0,
            sample_id: sample.id.clone(),
            image_id: sample.image.id.clone(),
            prompt,
            baseline,
            mitigated,
            sample_seed,
            applied,
            candidates,
            metrics,
            config: self.config.clone(),
            timestamp: self.config.record_timestamps.then(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        }
    }
}

pub fn run_benchmark(config: &RunConfig) -> Result<RunOutcome, HarnessError> {
    run_benchmark_opts(config, RunOptions::default())
}

pub fn run_benchmark_opts(config: &RunConfig, opts: RunOptions) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let (backends, world) = build_backends(config)?;
    execute(config, &backends, world, opts)
}

/// Runs against caller-provided backends (e.g. a hosted-model adapter).
/// Without a mock world every dataset file must be given.
pub fn run_benchmark_with(
    config: &RunConfig,
    backends: &BackendSuite,
    opts: RunOptions,
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    execute(config, backends, None, opts)
}

fn execute(
    config: &RunConfig,
    backends: &BackendSuite,
    world: Option<Arc<MockWorld>>,
    opts: RunOptions,
) -> Result<RunOutcome, HarnessError> {
    let map = config.synonym_map()?;
    let corpus = Corpus::load(config, &map, world)?;
    let samples = build_samples(config, &corpus)?;

    let (mut writer, existing) = RecordWriter::open(&config.output, config)?;
    let done: HashSet<&str> = existing.iter().map(|r| r.sample_id.as_str()).collect();
    let pending: Vec<&Sample> = samples.iter().filter(|s| !done.contains(s.id.as_str())).collect();
    let budget = opts.limit.unwrap_or(usize::MAX).min(pending.len());

    let runner = Runner {
        config,
        backends,
        map: &map,
        similarity: ObjectCosine::new(map.clone()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let chunk = pool.current_num_threads().max(1) * 8;
    for batch in pending[..budget].chunks(chunk) {
        let results: Vec<Result<ResultRecord, HarnessError>> =
            pool.install(|| batch.par_iter().map(|s| runner.process(s)).collect());
        for r in results {
            writer.append(r?)?;
        }
    }
    if budget < pending.len() {
        return Err(HarnessError::PartialRun {
            path: config.output.clone(),
            persisted: existing.len() + budget,
            total: samples.len(),
        });
    }
    drop(writer);

    let records = read_records(&config.output)?;
    let report = aggregate(config, &records, &map)?;
    Ok(RunOutcome { records, report })
}

fn chair_of(
    records: &[&ResultRecord],
    config: &RunConfig,
    map: &SynonymMap,
    mitigated: bool,
) -> Result<ChairReport, HarnessError> {
    let mut annotations = AnnotationSet::new();
    let mut captions = Vec::with_capacity(records.len());
    for r in records {
        let gt = match &r.metrics {
            SampleMetrics::Chair { gt, .. } | SampleMetrics::Robustness { gt, .. } => gt,
            _ => return Err(HarnessError::Config("mixed benchmark records".into())),
        };
        annotations
            .insert(r.sample_id.clone(), gt, map)
            .map_err(|e| HarnessError::from_metric(&config.output, e))?;
        let text = if mitigated { &r.mitigated } else { &r.baseline };
        let source = if mitigated {
            CaptionSource::Mitigated
        } else {
            CaptionSource::Baseline
        };
        captions.push(CaptionRecord::new(
            r.sample_id.clone(),
            r.prompt.clone(),
            Caption::new(text.clone(), source),
            map,
        ));
    }
    chair_report_with(
        &captions,
        &annotations,
        map,
        ChairOptions {
            per_sentence: config.per_sentence,
        },
    )
    .map_err(|e| HarnessError::from_metric(&config.output, e))
}

/// Aggregate report recomputed from persisted records.
pub fn aggregate(
    config: &RunConfig,
    records: &[ResultRecord],
    map: &SynonymMap,
) -> Result<BenchmarkReport, HarnessError> {
    let metric = |e| HarnessError::from_metric(&config.output, e);
    let all: Vec<&ResultRecord> = records.iter().collect();
    Ok(match config.benchmark {
        Benchmark::Chair => {
            let baseline = chair_of(&all, config, map, false)?;
            let mitigated = chair_of(&all, config, map, true)?;
            BenchmarkReport::Chair {
                har_baseline: har_at_1(baseline.average, baseline.recall).map_err(metric)?,
                har_mitigated: har_at_1(mitigated.average, mitigated.recall).map_err(metric)?,
                baseline,
                mitigated,
            }
        }
        Benchmark::Robustness => {
            let subset: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| matches!(r.metrics, SampleMetrics::Robustness { in_subset: true, .. }))
                .collect();
            let (before, after, delta) = if subset.is_empty() {
                (None, None, None)
            } else {
                let before = chair_of(&subset, config, map, false)?;
                let after = chair_of(&subset, config, map, true)?;
                let delta = robustness_delta(&before, &after).map_err(metric)?;
                (Some(before), Some(after), Some(delta))
            };
            BenchmarkReport::Robustness(RobustnessSummary {
                images: records.len(),
                subset: subset.len(),
                before,
                after,
                delta,
            })
        }
        Benchmark::Pope => {
            let mut by_setting: BTreeMap<_, (Vec<_>, Vec<_>)> = BTreeMap::new();
            for r in records {
                let SampleMetrics::Pope {
                    setting,
                    label,
                    baseline_answer,
                    mitigated_answer,
                } = r.metrics
                else {
                    return Err(HarnessError::Config("mixed benchmark records".into()));
                };
                let e = by_setting.entry(setting).or_default();
                e.0.push((baseline_answer, label));
                e.1.push((mitigated_answer, label));
            }
            let mut base = Vec::new();
            let mut mit = Vec::new();
            for (setting, (b, m)) in by_setting {
                base.push(pope_report(&b, setting).map_err(metric)?);
                mit.push(pope_report(&m, setting).map_err(metric)?);
            }
            BenchmarkReport::Pope {
                baseline: PopeReport::from_settings(base).map_err(metric)?,
                mitigated: PopeReport::from_settings(mit).map_err(metric)?,
            }
        }
        Benchmark::Mme => {
            let mut by_subtask: BTreeMap<_, (Vec<_>, Vec<_>)> = BTreeMap::new();
            for r in records {
                let SampleMetrics::Mme {
                    subtask,
                    label,
                    baseline_answer,
                    mitigated_answer,
                } = r.metrics
                else {
                    return Err(HarnessError::Config("mixed benchmark records".into()));
                };
                let answer = |prediction| MmeAnswer {
                    image_id: r.image_id.clone(),
                    question_id: r.sample_id.clone(),
                    prediction,
                    label,
                };
                let e = by_subtask.entry(subtask).or_default();
                e.0.push(answer(baseline_answer));
                e.1.push(answer(mitigated_answer));
            }
            let mut base = Vec::new();
            let mut mit = Vec::new();
            for (subtask, (b, m)) in by_subtask {
                base.push(mme_report(&b, subtask).map_err(metric)?);
                mit.push(mme_report(&m, subtask).map_err(metric)?);
            }
            BenchmarkReport::Mme {
                baseline: MmeReport::from_subtasks(base),
                mitigated: MmeReport::from_subtasks(mit),
            }
        }
        Benchmark::Probe => {
            let mut pairs = Vec::with_capacity(records.len());
            for r in records {
                let SampleMetrics::Probe {
                    sim_text,
                    sim_roundtrip,
                    ..
                } = r.metrics
                else {
                    return Err(HarnessError::Config("mixed benchmark records".into()));
                };
                pairs.push((sim_text, sim_roundtrip));
            }
            BenchmarkReport::Probe(probe_summary(&pairs))
        }
    })
}

/// Summary of `(sim_text, sim_roundtrip)` pairs.
pub fn probe_summary(pairs: &[(f64, f64)]) -> ProbeSummary {
    let n = pairs.len();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| {
        if n == 0 {
            0.0
        } else {
            pairs.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let positive = pairs.iter().filter(|(t, r)| r < t).count();
    let negative = pairs.iter().filter(|(t, r)| r > t).count();
    ProbeSummary {
        cases: n,
        mean_sim_text: mean(&|p| p.0),
        mean_sim_roundtrip: mean(&|p| p.1),
        mean_gap: mean(&|p| p.0 - p.1),
        positive,
        negative,
        ties: n - positive - negative,
        sign_test_p: sign_test_p(positive, negative),
    }
}

/// Baseline captions for every annotated image of the config's corpus.
pub fn caption_corpus(config: &RunConfig) -> Result<Vec<(String, Caption)>, HarnessError> {
    config.validate()?;
    let (backends, world) = build_backends(config)?;
    let map = config.synonym_map()?;
    let corpus = Corpus::load(config, &map, world)?;
    let ids: Vec<String> = corpus.annotations()?.iter().map(|(id, _)| id.clone()).collect();
    ids.par_iter()
        .map(|id| {
            let image = corpus.image(config, id)?;
            let caption = generate_baseline_caption(&image, &config.prompt, &backends).map_err(backend_err)?;
            Ok((id.clone(), caption))
        })
        .collect()
}

/// Full two-pass mitigation for every annotated image.
pub fn mitigate_corpus(config: &RunConfig) -> Result<Vec<(String, MitigationResult)>, HarnessError> {
    config.validate()?;
    let (backends, world) = build_backends(config)?;
    let map = config.synonym_map()?;
    let corpus = Corpus::load(config, &map, world)?;
    let ids: Vec<(String, BTreeSet<String>)> = corpus
        .annotations()?
        .iter()
        .map(|(id, gt)| (id.clone(), gt.clone()))
        .collect();
    ids.par_iter()
        .map(|(id, gt)| {
            let image = corpus.image(config, id)?;
            let ranker = GroundTruthRanker { map: &map, gt };
            let cfg = config.edit.with_seed(derive_seed(config.seed, id));
            let opts = MitigationOptions {
                ablation: config.ablation,
                ranker: Some(&ranker),
            };
            let r =
                generate_with_mitigation_opts(&image, &config.prompt, &cfg, &backends, opts).map_err(backend_err)?;
            Ok((id.clone(), r))
        })
        .collect()
}
