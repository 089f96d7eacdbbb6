//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! measured runtime against the pinned limit, then exits non-zero if any
//! criterion failed.

// Fixture values, not approximations of constants.
#![allow(clippy::approx_constant)]

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use anchoredit::editing::{apply_dual_anchor_edit, AnchorPair, EmbeddingMatrix, TokenSpan};
use anchoredit::harness::{
    run_benchmark, run_benchmark_opts, Benchmark, BenchmarkReport, HarnessError, RunConfig, RunOptions,
};
use anchoredit::metrics::{
    chair_report, har, mme_report, pope_report, AnnotationSet, CaptionRecord, ChairReport, HarParams, MmeAnswer,
    MmeSubtask, PopeSetting, SynonymMap, YesNo,
};
use anchoredit::pipeline::{Ablation, Caption, CaptionSource};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);
type ImageSets = (String, BTreeSet<String>, BTreeSet<String>, BTreeSet<String>);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// --- 1: HAR regression ---------------------------------------------------

fn har_regression() -> Outcome {
    let cases = [
        (0.335, 0.810, 0.7304),
        (0.312, 0.768, 0.7258),
        (0.318, 0.7732, 0.7247),
        (0.3625, 0.1631, 0.2596),
    ];
    let mut got = Vec::new();
    for (h, r, want) in cases {
        let v = har(HarParams::new(h, r, 1.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        check(
            (v - want).abs() <= 1e-3,
            format!("har({h}, {r}, 1) = {v:.5}, want {want} ± 1e-3"),
        )?;
        got.push(format!("{v:.4}"));
    }
    Ok(format!("values {}", got.join(", ")))
}

// --- 2: CHAIR oracle -----------------------------------------------------

const OBJECTS: [&str; 10] = [
    "dog", "cat", "car", "tree", "horse", "chair", "cup", "bird", "boat", "clock",
];
const FILLER: [&str; 6] = ["the", "picture", "shows", "near", "with", "and"];

struct Oracle {
    chair_s: f64,
    chair_i: f64,
    average: f64,
    recall: f64,
    mean_length: f64,
    per_image: Vec<ImageSets>,
}

/// Naive per-image set arithmetic over the known mention sets.
fn chair_oracle(corpus: &[(String, BTreeSet<String>, BTreeSet<String>, usize)]) -> Oracle {
    let (mut halluc_caps, mut mentioned, mut halluc, mut covered, mut gt_total, mut words) = (0, 0, 0, 0, 0, 0);
    let mut per_image = Vec::new();
    for (id, gt, said, n_words) in corpus {
        let mut bad = BTreeSet::new();
        for o in said {
            mentioned += 1;
            if gt.contains(o) {
                covered += 1;
            } else {
                halluc += 1;
                bad.insert(o.clone());
            }
        }
        if !bad.is_empty() {
            halluc_caps += 1;
        }
        gt_total += gt.len();
        words += n_words;
        per_image.push((id.clone(), said.clone(), bad, gt.clone()));
    }
    per_image.sort();
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let chair_s = div(halluc_caps, corpus.len());
    let chair_i = div(halluc, mentioned);
    Oracle {
        chair_s,
        chair_i,
        average: (chair_s + chair_i) / 2.0,
        recall: div(covered, gt_total),
        mean_length: div(words, corpus.len()),
        per_image,
    }
}

fn chair_oracle_equivalence() -> Outcome {
    let map = SynonymMap::new(
        OBJECTS,
        [
            ("puppy", "dog"),
            ("kitten", "cat"),
            ("automobile", "car"),
            ("mug", "cup"),
        ]
        .map(|(s, c)| (s.to_string(), c.to_string())),
    )
    .map_err(|e| e.to_string())?;
    let surface = |o: &str, rng: &mut ChaCha8Rng| -> String {
        let alt = match o {
            "dog" => "puppy",
            "cat" => "kitten",
            "car" => "automobile",
            "cup" => "mug",
            _ => o,
        };
        let pick = if rng.random_bool(0.5) { alt } else { o };
        if rng.random_bool(0.3) {
            format!("{pick}s")
        } else {
            pick.to_string()
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut images_total = 0;
    for corpus_no in 0..100 {
        let n_images = rng.random_range(1..=50);
        let n_objects = rng.random_range(1..=10);
        let inventory = &OBJECTS[..n_objects];
        let mut annotations = AnnotationSet::new();
        let mut corpus = Vec::new();
        let mut records = Vec::new();
        for i in 0..n_images {
            let id = format!("c{corpus_no}-{i:02}");
            let gt: BTreeSet<String> = inventory
                .iter()
                .filter(|_| rng.random_bool(0.4))
                .map(|s| s.to_string())
                .collect();
            let said: BTreeSet<String> = inventory
                .iter()
                .filter(|_| rng.random_bool(0.35))
                .map(|s| s.to_string())
                .collect();
            let mut words: Vec<String> = Vec::new();
            for o in &said {
                for _ in 0..rng.random_range(1..=2) {
                    words.push(surface(o, &mut rng));
                }
            }
            for _ in 0..rng.random_range(0..8) {
                words.push(FILLER.choose(&mut rng).unwrap().to_string());
            }
            words.shuffle(&mut rng);
            if words.is_empty() {
                words.push("nothing".into());
            }
            let text = words.join(" ");
            annotations
                .insert(id.clone(), gt.iter(), &map)
                .map_err(|e| e.to_string())?;
            records.push(CaptionRecord::new(
                &id,
                "p",
                Caption::new(text, CaptionSource::External),
                &map,
            ));
            corpus.push((id, gt, said, words.len()));
        }
        images_total += n_images;
        let got: ChairReport = chair_report(&records, &annotations, &map).map_err(|e| e.to_string())?;
        let want = chair_oracle(&corpus);
        let fields = [
            ("chair_s", got.chair_s, want.chair_s),
            ("chair_i", got.chair_i, want.chair_i),
            ("average", got.average, want.average),
            ("recall", got.recall, want.recall),
            ("mean_length", got.mean_length, want.mean_length),
        ];
        for (name, g, w) in fields {
            check(g == w, format!("corpus {corpus_no}: {name} {g} != oracle {w}"))?;
        }
        let per_image: Vec<_> = got
            .per_image
            .iter()
            .map(|p| (p.id.clone(), p.mentioned.clone(), p.hallucinated.clone(), p.gt.clone()))
            .collect();
        check(
            per_image == want.per_image,
            format!("corpus {corpus_no}: per-image sets differ"),
        )?;
    }
    Ok(format!("100 corpora, {images_total} images, all fields exact"))
}

// --- 3: edit invariants --------------------------------------------------

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> EmbeddingMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-5.0..5.0)).collect();
    EmbeddingMatrix::from_vec(rows, cols, data).unwrap()
}

fn diff(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Vec<f64> {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn edit_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = 2000;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let rows = rng.random_range(1..=24);
        let cols = rng.random_range(1..=32);
        let start = rng.random_range(0..rows);
        let length = rng.random_range(1..=rows - start);
        let span = TokenSpan::new(start, length).unwrap();
        let hidden = random_matrix(&mut rng, rows, cols);
        // Half the cases use per-token anchors, half pooled broadcast.
        let n_anchor = if case % 2 == 0 {
            length
        } else {
            rng.random_range(1..=12)
        };
        let anchors = AnchorPair::new(
            random_matrix(&mut rng, n_anchor, cols),
            random_matrix(&mut rng, n_anchor, cols),
        )
        .map_err(|e| e.to_string())?;
        let edit = |a: f64, b: f64| apply_dual_anchor_edit(&hidden, span, &anchors, a, b).unwrap();

        check(
            edit(0.0, 0.0) == hidden,
            format!("case {case}: alpha = beta = 0 is not the identity"),
        )?;

        let (a1, b1, a2, b2) = (
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
        );
        let e1 = edit(a1, b1);
        for r in (0..rows).filter(|r| !span.contains(*r)) {
            check(
                e1.row(r) == hidden.row(r),
                format!("case {case}: row {r} outside the span changed"),
            )?;
        }

        let d1 = diff(&e1, &hidden);
        let d2 = diff(&edit(a2, b2), &hidden);
        let d12 = diff(&edit(a1 + a2, b1 + b2), &hidden);
        let sum: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| x + y).collect();
        let lin = max_gap(&d12, &sum);
        check(lin <= 1e-9, format!("case {case}: linearity gap {lin:e}"))?;

        let c = rng.random_range(0.0..4.0);
        let dc = diff(&edit(c * a1, c * b1), &hidden);
        let scaled: Vec<f64> = d1.iter().map(|x| c * x).collect();
        let sc = max_gap(&dc, &scaled);
        check(sc <= 1e-9, format!("case {case}: scaling gap {sc:e}"))?;
        worst = worst.max(lin).max(sc);

        let same = AnchorPair::new(anchors.positive.clone(), anchors.positive.clone()).unwrap();
        let cancelled = apply_dual_anchor_edit(&hidden, span, &same, a1, a1).unwrap();
        let gap = max_gap(cancelled.as_slice(), hidden.as_slice());
        check(
            gap <= 1e-9,
            format!("case {case}: equal anchors did not cancel ({gap:e})"),
        )?;
    }
    Ok(format!("{cases} matrices, worst linear/scaling gap {worst:.1e}"))
}

// --- shared mock runs ----------------------------------------------------

fn mock_config(benchmark: Benchmark, dir: &Path, name: &str) -> RunConfig {
    let mut cfg = RunConfig::new(benchmark);
    cfg.output = dir.join(format!("{name}.jsonl"));
    cfg.mock.images = 200;
    cfg.mock.params.hallucination_rate = 0.5;
    cfg
}

fn chair_run(dir: &Path, name: &str, ablation: Ablation) -> Result<(ChairReport, ChairReport), String> {
    let mut cfg = mock_config(Benchmark::Chair, dir, name);
    cfg.ablation = ablation;
    match run_benchmark(&cfg).map_err(|e| e.to_string())?.report {
        BenchmarkReport::Chair {
            baseline, mitigated, ..
        } => Ok((baseline, mitigated)),
        other => Err(format!("unexpected report {other:?}")),
    }
}

// --- 4: closed-loop mitigation -------------------------------------------

fn closed_loop(dir: &Path) -> Outcome {
    let (base, mit) = chair_run(dir, "closed-loop", Ablation::Both)?;
    let (hb, hm) = (base.hallucinated_mentions(), mit.hallucinated_mentions());
    check(
        base.per_image.len() == 200,
        format!("{} samples, want 200", base.per_image.len()),
    )?;
    check(hb > 0, "baseline has no hallucinations to reduce")?;
    let reduction = 1.0 - hm as f64 / hb as f64;
    let recall_drop = base.recall - mit.recall;
    check(
        reduction >= 0.30,
        format!(
            "hallucinated mentions {hb} -> {hm} is a {:.1}% reduction, want >= 30%",
            100.0 * reduction
        ),
    )?;
    check(
        recall_drop <= 0.05,
        format!("recall dropped {recall_drop:.4}, want <= 0.05"),
    )?;
    Ok(format!(
        "hallucinated mentions {hb} -> {hm} (-{:.1}%), recall {:.3} -> {:.3}",
        100.0 * reduction,
        base.recall,
        mit.recall
    ))
}

// --- 5: ablation ordering ------------------------------------------------

fn ablation_ordering(dir: &Path) -> Outcome {
    let (base, both) = chair_run(dir, "ablation-both", Ablation::Both)?;
    let (_, neg) = chair_run(dir, "ablation-neg", Ablation::NegativeOnly)?;
    let (_, pos) = chair_run(dir, "ablation-pos", Ablation::PositiveOnly)?;
    let hb = base.hallucinated_mentions() as f64;
    let hn = neg.hallucinated_mentions() as f64;
    let hp = pos.hallucinated_mentions() as f64;
    check(
        hn < hb,
        format!("negative-only did not reduce hallucinations ({hb} -> {hn})"),
    )?;
    check(
        neg.recall < both.recall,
        format!(
            "negative-only recall {:.4} is not below dual recall {:.4}",
            neg.recall, both.recall
        ),
    )?;
    let pos_change = (hp - hb).abs() / hb;
    check(
        pos_change < 0.05,
        format!("positive-only changed hallucinations by {:.1}%", 100.0 * pos_change),
    )?;
    Ok(format!(
        "baseline {hb}, dual {} (recall {:.3}), neg-only {hn} (recall {:.3}), pos-only {hp} ({:+.1}%)",
        both.hallucinated_mentions(),
        both.recall,
        neg.recall,
        100.0 * (hp - hb) / hb
    ))
}

// --- 6: amplification probe ----------------------------------------------

/// Exact one-sided sign-test p-value by direct summation.
fn sign_p(positive: usize, negative: usize) -> f64 {
    let n = positive + negative;
    let mut p = 0.0;
    let mut c = 1.0_f64;
    for k in 0..=n {
        if k >= positive {
            p += c;
        }
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    p * 0.5_f64.powi(n as i32)
}

fn amplification(dir: &Path) -> Outcome {
    let mut cfg = mock_config(Benchmark::Probe, dir, "probe");
    cfg.mock.images = 120;
    let outcome = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let BenchmarkReport::Probe(s) = outcome.report else {
        return Err("unexpected report".into());
    };
    check(s.cases >= 100, format!("{} cases, want >= 100", s.cases))?;
    check(
        s.mean_sim_roundtrip < s.mean_sim_text,
        format!(
            "mean sim(t,t') {:.4} is not below mean sim(tau,tau') {:.4}",
            s.mean_sim_roundtrip, s.mean_sim_text
        ),
    )?;
    let p = sign_p(s.positive, s.negative);
    check(
        (p - s.sign_test_p).abs() <= 1e-12 * p.max(1e-300),
        format!("reported p {:e} != exact {p:e}", s.sign_test_p),
    )?;
    check(p < 0.01, format!("sign test p = {p:e}, want < 0.01"))?;
    Ok(format!(
        "{} cases, mean sim {:.3} -> {:.3}, {}+/{}-/{} ties, p = {p:.2e}",
        s.cases, s.mean_sim_text, s.mean_sim_roundtrip, s.positive, s.negative, s.ties
    ))
}

// --- 7: POPE/MME oracles -------------------------------------------------

fn pope_mme_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50 {
        let pairs: Vec<(YesNo, YesNo)> = (0..1000)
            .map(|_| {
                let pred = *[YesNo::Yes, YesNo::No, YesNo::Other].choose(&mut rng).unwrap();
                let label = if rng.random_bool(0.5) { YesNo::Yes } else { YesNo::No };
                (pred, label)
            })
            .collect();
        let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (p, l) in &pairs {
            let said_yes = *p == YesNo::Yes;
            let is_yes = *l == YesNo::Yes;
            match (said_yes, is_yes, *p == YesNo::No) {
                (true, true, _) => tp += 1,
                (true, false, _) => fp += 1,
                (false, false, true) => tn += 1,
                (false, false, false) => fp += 1,
                (false, true, _) => fn_ += 1,
            }
        }
        let r = pope_report(&pairs, PopeSetting::Random).map_err(|e| e.to_string())?;
        check(
            (r.tp, r.fp, r.tn, r.fn_) == (tp, fp, tn, fn_),
            format!(
                "trial {trial}: confusion {:?} != oracle {:?}",
                (r.tp, r.fp, r.tn, r.fn_),
                (tp, fp, tn, fn_)
            ),
        )?;
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / (tp + fn_) as f64;
        let f1 = 2.0 * precision * recall / (precision + recall);
        let accuracy = (tp + tn) as f64 / 1000.0;
        check(
            (r.accuracy, r.precision, r.recall, r.f1) == (accuracy, precision, recall, f1),
            format!("trial {trial}: derived rates differ from the oracle"),
        )?;
    }

    let answer = |image: &str, q: &str, pred: YesNo, label: YesNo| MmeAnswer {
        image_id: image.into(),
        question_id: q.into(),
        prediction: pred,
        label,
    };
    let hand = [
        answer("a", "a1", YesNo::Yes, YesNo::Yes),
        answer("a", "a2", YesNo::No, YesNo::No),
        answer("b", "b1", YesNo::Yes, YesNo::Yes),
        answer("b", "b2", YesNo::Yes, YesNo::No),
    ];
    let m = mme_report(&hand, MmeSubtask::Existence).map_err(|e| e.to_string())?;
    check(
        m.accuracy == 0.75 && m.accuracy_plus == 0.5 && m.score == 125.0,
        format!(
            "MME hand example gave acc {}, acc+ {}, score {}",
            m.accuracy, m.accuracy_plus, m.score
        ),
    )?;
    Ok("50 POPE vectors of length 1000 exact; MME acc 0.75, acc+ 0.5, score 125".into())
}

// --- 8: robustness no-op -------------------------------------------------

fn robustness_noop(dir: &Path) -> Outcome {
    let mut cfg = mock_config(Benchmark::Robustness, dir, "robustness");
    cfg.mock.params.hallucination_rate = 0.0;
    let BenchmarkReport::Robustness(s) = run_benchmark(&cfg).map_err(|e| e.to_string())?.report else {
        return Err("unexpected report".into());
    };
    let delta = s.delta.ok_or("empty hallucination-free subset")?;
    check(
        delta.delta_chair == 0.0,
        format!("delta_chair = {} pp, want exactly 0", delta.delta_chair),
    )?;
    check(
        delta.delta_recall.abs() <= 2.0,
        format!("|delta_recall| = {:.3} pp, want <= 2", delta.delta_recall.abs()),
    )?;
    Ok(format!(
        "subset {}/{}, delta_chair {:+.2} pp, delta_recall {:+.2} pp",
        s.subset, s.images, delta.delta_chair, delta.delta_recall
    ))
}

// --- 9: determinism and resumability -------------------------------------

fn determinism(dir: &Path) -> Outcome {
    let mut checked = Vec::new();
    for (benchmark, images) in [(Benchmark::Chair, 200), (Benchmark::Pope, 40)] {
        let config = |name: &str| {
            let mut cfg = mock_config(benchmark, dir, &format!("{benchmark}-{name}"));
            cfg.mock.images = images;
            cfg.seed = 11;
            cfg.edit = cfg.edit.with_strategy(
                anchoredit::editing::CoefficientStrategy::uniform(0.08, 0.12).with_best_of(3),
                false,
            );
            cfg
        };
        // Every run writes the same path; the config snapshot in each
        // record includes it.
        let cfg = config("run");
        let rerun = || -> Result<(anchoredit::harness::RunOutcome, Vec<u8>), String> {
            let outcome = run_benchmark(&cfg).map_err(|e| e.to_string())?;
            let bytes = std::fs::read(&cfg.output).map_err(|e| e.to_string())?;
            std::fs::remove_file(&cfg.output).map_err(|e| e.to_string())?;
            Ok((outcome, bytes))
        };
        let (full, bytes_a) = rerun()?;
        let (_, bytes_b) = rerun()?;
        check(bytes_a == bytes_b, format!("{benchmark}: reruns differ byte-wise"))?;

        // Interrupt twice, then resume to completion.
        let total = full.records.len();
        let mut persisted = 0;
        for stop in [total / 3, total / 4] {
            match run_benchmark_opts(&cfg, RunOptions { limit: Some(stop) }) {
                Err(HarnessError::PartialRun { persisted: p, .. }) => persisted = p,
                other => {
                    return Err(format!(
                        "{benchmark}: interrupted run returned {:?}",
                        other.map(|o| o.report)
                    ))
                }
            }
        }
        check(persisted < total, format!("{benchmark}: nothing left to resume"))?;
        let resumed = run_benchmark(&cfg).map_err(|e| e.to_string())?;
        check(
            resumed.report == full.report,
            format!("{benchmark}: resumed aggregates differ"),
        )?;
        let bytes_r = std::fs::read(&cfg.output).map_err(|e| e.to_string())?;
        check(
            bytes_r == bytes_a,
            format!("{benchmark}: resumed file differs byte-wise"),
        )?;
        checked.push(format!("{benchmark} ({total} records, resumed from {persisted})"));
    }
    Ok(format!("byte-identical reruns and resumes: {}", checked.join(", ")))
}

// --- driver --------------------------------------------------------------

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let criteria: Vec<Criterion> = vec![
        ("HAR regression", Duration::from_secs(1), Box::new(har_regression)),
        (
            "CHAIR oracle equivalence",
            Duration::from_secs(10),
            Box::new(chair_oracle_equivalence),
        ),
        (
            "edit-operator invariants",
            Duration::from_secs(10),
            Box::new(edit_invariants),
        ),
        (
            "closed-loop mitigation",
            Duration::from_secs(60),
            Box::new(|| closed_loop(d)),
        ),
        (
            "ablation ordering",
            Duration::from_secs(120),
            Box::new(|| ablation_ordering(d)),
        ),
        (
            "amplification probe",
            Duration::from_secs(30),
            Box::new(|| amplification(d)),
        ),
        (
            "POPE/MME scoring oracles",
            Duration::from_secs(5),
            Box::new(pope_mme_oracles),
        ),
        (
            "robustness no-op",
            Duration::from_secs(30),
            Box::new(|| robustness_noop(d)),
        ),
        (
            "determinism and resumability",
            Duration::from_secs(60),
            Box::new(|| determinism(d)),
        ),
    ];

    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > *limit => Err(format!("{detail}; over the time limit")),
            other => other,
        };
        let (status, detail) = match &result {
            Ok(detail) => ("PASS", detail.as_str()),
            Err(why) => ("FAIL", why.as_str()),
        };
        if result.is_err() {
            failed += 1;
        }
        println!(
            "{status} {}. {name} [{:.2}s / limit {}s]: {detail}",
            i + 1,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
