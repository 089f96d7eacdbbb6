use std::collections::BTreeSet;
use std::sync::Arc;

use anchoredit::editing::{CoefficientStrategy, EditConfig, EmbeddingMatrix, TokenKind};
use anchoredit::metrics::{extract_objects, SynonymMap};
use anchoredit::mock::{
    mock_image, mock_project, mock_suite, MockModel, MockParams, MockReconstructor, MockScene, MockWorld,
    MOCK_VOCABULARY,
};
use anchoredit::pipeline::{
    amplification_probe, build_anchor_pair, generate_baseline_caption, generate_with_mitigation,
    generate_with_mitigation_opts, AdapterCapabilities, BackendError, BackendSuite, CandidateRanker, CandidateScore,
    Caption, CaptionSource, Captioner, ImageRef, LayerHook, MitigationOptions, MitigationResult, ModelAdapter,
    ModelMeta, ObjectCosine, PipelineError, VisionProjector, DEFAULT_PROMPT,
};

fn world(vocabulary: &[&str], noise_std: f64, hallucination_rate: f64) -> Arc<MockWorld> {
    let params = MockParams {
        noise_std,
        hallucination_rate,
        ..MockParams::default()
    };
    Arc::new(MockWorld::new(5, vocabulary, params).unwrap())
}

fn objects(text: &str, w: &MockWorld) -> BTreeSet<String> {
    extract_objects(text, w.parser())
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn cfg(num_layers: usize) -> EditConfig {
    EditConfig::new(0.1, 0.1, num_layers)
}

#[test]
fn faithful_baseline_without_hallucination() {
    let w = world(&["dog", "frisbee", "cat", "sofa"], 0.02, 0.0);
    let suite = mock_suite(w.clone());
    let image = mock_image("img", MockScene::new(["dog", "frisbee"]));
    let first = generate_baseline_caption(&image, DEFAULT_PROMPT, &suite).unwrap();
    assert_eq!(objects(&first.text, &w), set(&["dog", "frisbee"]));
    let again = generate_baseline_caption(&image, DEFAULT_PROMPT, &suite).unwrap();
    assert_eq!(first, again);
}

struct Silent;

impl Captioner for Silent {
    fn generate(&self, _: &ImageRef, _: &str, _: Option<&dyn LayerHook>) -> Result<String, BackendError> {
        Ok("   ".into())
    }
}

#[test]
fn empty_caption_is_an_error() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.0);
    let mut suite = mock_suite(w);
    suite.captioner = Arc::new(Silent);
    let image = mock_image("img", MockScene::new(["dog"]));
    assert_eq!(
        generate_baseline_caption(&image, DEFAULT_PROMPT, &suite),
        Err(PipelineError::EmptyCaption)
    );
    assert_eq!(
        generate_baseline_caption(&image, " ", &mock_suite(world(&MOCK_VOCABULARY, 0.02, 0.0))),
        Err(PipelineError::EmptyPrompt)
    );
}

#[test]
fn negative_anchor_encodes_the_caption() {
    let w = world(&["dog", "cat", "sofa"], 0.02, 0.0);
    let suite = mock_suite(w.clone());
    let image = mock_image("img", MockScene::new(["dog"]));
    let caption = Caption::new("a dog and a cat", CaptionSource::External);
    let anchors = build_anchor_pair(&image, &caption, &suite).unwrap();
    assert_eq!(
        anchors.negative,
        mock_project(&w, &MockScene::new(["dog", "cat"])).unwrap()
    );
    assert_eq!(anchors.positive, mock_project(&w, &MockScene::new(["dog"])).unwrap());

    // A faithful caption reconstructs the same scene, so the anchors agree.
    let faithful = Caption::new("a dog", CaptionSource::External);
    let same = build_anchor_pair(&image, &faithful, &suite).unwrap();
    assert_eq!(same.positive, same.negative);
}

struct Narrow(MockModel);

impl Captioner for Narrow {
    fn generate(&self, image: &ImageRef, prompt: &str, hook: Option<&dyn LayerHook>) -> Result<String, BackendError> {
        self.0.generate(image, prompt, hook)
    }
}

impl VisionProjector for Narrow {
    fn project(&self, image: &ImageRef) -> Result<EmbeddingMatrix, BackendError> {
        let m = self.0.project(image)?;
        let rows: Vec<Vec<f64>> = m.iter_rows().map(|r| r[..r.len() - 1].to_vec()).collect();
        Ok(EmbeddingMatrix::from_rows(&rows).unwrap())
    }
}

#[test]
fn projector_with_wrong_width_is_rejected() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.0);
    let mut suite = mock_suite(w.clone());
    suite.vision_projector = Arc::new(Narrow(MockModel::new(w)));
    let image = mock_image("img", MockScene::new(["dog"]));
    let caption = Caption::new("a dog", CaptionSource::External);
    let err = build_anchor_pair(&image, &caption, &suite).unwrap_err();
    assert!(
        matches!(
            err,
            PipelineError::ShapeMismatch {
                expected: (8, 1024),
                found: (8, 1023)
            }
        ),
        "{err:?}"
    );
}

#[test]
fn zero_coefficients_reproduce_the_baseline() {
    let w = world(&MOCK_VOCABULARY, 0.02, 1.0);
    let suite = mock_suite(w.clone());
    let zero = EditConfig::new(0.0, 0.0, 32);
    for i in 0..20 {
        let image = mock_image(&format!("img-{i}"), MockScene::new(["dog", "car"]));
        let r = generate_with_mitigation(&image, DEFAULT_PROMPT, &zero, &suite).unwrap();
        assert_eq!(r.mitigated.text, r.baseline.text);
        assert_eq!(r.applied, (0.0, 0.0));
    }
}

/// First seeded image whose baseline carries exactly one hallucinated object.
fn injected_case(w: &Arc<MockWorld>, suite: &BackendSuite, scene: &[&str]) -> (ImageRef, String) {
    let gt = set(scene);
    for i in 0.. {
        let image = mock_image(&format!("inj-{i}"), MockScene::new(scene.iter().copied()));
        let baseline = generate_baseline_caption(&image, DEFAULT_PROMPT, suite).unwrap();
        let said = objects(&baseline.text, w);
        let extra: Vec<&String> = said.difference(&gt).collect();
        if said.is_superset(&gt) && extra.len() == 1 {
            return (image, extra[0].clone());
        }
    }
    unreachable!()
}

#[test]
fn edit_drops_the_injected_object() {
    let w = world(&MOCK_VOCABULARY, 0.02, 1.0);
    let suite = mock_suite(w.clone());
    let scene = ["dog", "bicycle"];
    let (image, injected) = injected_case(&w, &suite, &scene);
    let r = generate_with_mitigation(&image, DEFAULT_PROMPT, &cfg(32).with_layer(1), &suite).unwrap();
    let mitigated = objects(&r.mitigated.text, &w);
    assert!(
        !mitigated.contains(&injected),
        "{injected} survived: {}",
        r.mitigated.text
    );
    assert_eq!(mitigated, set(&scene));
    assert!(r.reconstructed_image_id.starts_with("recon-"));
}

struct Truth<'a> {
    map: &'a SynonymMap,
    gt: BTreeSet<String>,
}

impl CandidateRanker for Truth<'_> {
    fn rank(&self, _: &ImageRef, caption: &Caption) -> CandidateScore {
        let said = extract_objects(&caption.text, self.map);
        let covered = said.intersection(&self.gt).count();
        CandidateScore {
            hallucinated: said.len() - covered,
            recall: covered as f64 / self.gt.len() as f64,
        }
    }
}

#[test]
fn best_of_five_keeps_the_best_ranked_candidate() {
    let w = world(&MOCK_VOCABULARY, 0.02, 1.0);
    let suite = mock_suite(w.clone());
    let scene = ["cat", "bench", "umbrella"];
    let ranker = Truth {
        map: w.parser(),
        gt: set(&scene),
    };
    let config = cfg(32)
        .with_strategy(CoefficientStrategy::uniform(0.0, 0.12).with_best_of(5), false)
        .with_seed(9);
    for i in 0..10 {
        let image = mock_image(&format!("bo-{i}"), MockScene::new(scene));
        let opts = MitigationOptions {
            ranker: Some(&ranker),
            ..Default::default()
        };
        let r = generate_with_mitigation_opts(&image, DEFAULT_PROMPT, &config, &suite, opts).unwrap();
        assert_eq!(r.candidates.len(), 5);
        let scores: Vec<CandidateScore> = r
            .candidates
            .iter()
            .map(|c| ranker.rank(&image, &Caption::new(c.text.clone(), CaptionSource::Mitigated)))
            .collect();
        // Winner: fewest hallucinations, then recall, then seed order.
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            let b = &scores[best];
            if s.hallucinated < b.hallucinated || (s.hallucinated == b.hallucinated && s.recall > b.recall) {
                best = k;
            }
        }
        assert_eq!(r.applied, (r.candidates[best].alpha, r.candidates[best].beta));
        assert_eq!(r.mitigated.text, r.candidates[best].text);
    }
}

#[test]
fn probe_identity_and_injection() {
    let w = world(&MOCK_VOCABULARY, 0.0, 0.0);
    let suite = mock_suite(w.clone());
    let sim = ObjectCosine::new(w.parser().clone());
    let image = mock_image("probe", MockScene::new(["horse", "person"]));
    let tau = Caption::new("The image shows a horse, a person.", CaptionSource::External);
    let same = amplification_probe(&image, &tau, &tau, DEFAULT_PROMPT, &suite, &sim).unwrap();
    assert_eq!(same.gap, 0.0);
    assert_eq!(same.sim_text, 1.0);

    let tau_prime = Caption::new("The image shows a horse, a person, a kite.", CaptionSource::External);
    let injected = amplification_probe(&image, &tau, &tau_prime, DEFAULT_PROMPT, &suite, &sim).unwrap();
    // Without a language prior the round trip is exact: the injected object
    // comes back at full salience and the gap vanishes.
    assert!(objects(&injected.reconstructed_caption, &w).contains("kite"));
    assert_eq!(injected.gap, 0.0);
}

#[test]
fn probe_gap_is_positive_with_a_language_prior() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.5);
    let suite = mock_suite(w.clone());
    let sim = ObjectCosine::new(w.parser().clone());
    let scene = ["car", "person", "bus"];
    let tau = Caption::new("The image shows a person, a car, a bus.", CaptionSource::External);
    let tau_prime = Caption::new(
        "The image shows a person, a car, a bus, a giraffe.",
        CaptionSource::External,
    );
    let gaps: Vec<f64> = (0..40)
        .map(|i| {
            let image = mock_image(&format!("gap-{i}"), MockScene::new(scene));
            amplification_probe(&image, &tau, &tau_prime, DEFAULT_PROMPT, &suite, &sim)
                .unwrap()
                .gap
        })
        .collect();
    let positive = gaps.iter().filter(|g| **g > 0.0).count();
    let negative = gaps.iter().filter(|g| **g < 0.0).count();
    assert!(positive > negative, "{positive} positive vs {negative} negative gaps");
    assert!(gaps.iter().sum::<f64>() > 0.0);
}

#[test]
fn probe_gap_is_small_under_noise() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.0);
    let suite = mock_suite(w.clone());
    let sim = ObjectCosine::new(w.parser().clone());
    let image = mock_image("probe", MockScene::new(["bus", "truck", "person"]));
    let tau = Caption::new("The image shows a bus, a person, a truck.", CaptionSource::External);
    let r = amplification_probe(&image, &tau, &tau, DEFAULT_PROMPT, &suite, &sim).unwrap();
    assert!(r.gap.abs() <= 0.05, "{r:?}");
}

struct Wordy(Arc<MockModel>);

impl Captioner for Wordy {
    fn generate(&self, image: &ImageRef, _prompt: &str, hook: Option<&dyn LayerHook>) -> Result<String, BackendError> {
        self.0.generate(image, DEFAULT_PROMPT, hook)
    }
}

#[test]
fn anchor_provenance() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.5);
    let model = Arc::new(MockModel::new(w.clone()));
    // Prompt-insensitive captioner: different prompts give the same caption.
    let mut suite = mock_suite(w.clone());
    suite.captioner = Arc::new(Wordy(model));
    let image = mock_image("prov", MockScene::new(["cow", "sheep"]));
    let a = generate_with_mitigation(&image, DEFAULT_PROMPT, &cfg(32), &suite).unwrap();
    let b = generate_with_mitigation(&image, "Describe the scene briefly.", &cfg(32), &suite).unwrap();
    assert_eq!(a.baseline.text, b.baseline.text);
    assert_eq!(a.anchors.negative, b.anchors.negative);

    // The positive anchor follows the image only.
    let caption = Caption::new("a zebra", CaptionSource::External);
    let other = build_anchor_pair(&image, &caption, &mock_suite(w.clone())).unwrap();
    assert_eq!(other.positive, a.anchors.positive);
    assert_ne!(other.negative, a.anchors.negative);
}

#[test]
fn mitigation_result_round_trips() {
    let w = world(&MOCK_VOCABULARY, 0.02, 1.0);
    let suite = mock_suite(w);
    let image = mock_image("rt", MockScene::new(["bird", "boat"]));
    let config = cfg(32).with_strategy(CoefficientStrategy::gaussian_over(0.08, 0.12).with_best_of(3), false);
    let ranker = Truth {
        map: &SynonymMap::from_vocabulary(MOCK_VOCABULARY),
        gt: set(&["bird", "boat"]),
    };
    let opts = MitigationOptions {
        ranker: Some(&ranker),
        ..Default::default()
    };
    let r = generate_with_mitigation_opts(&image, DEFAULT_PROMPT, &config, &suite, opts).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: MitigationResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

struct Blind(MockModel, AdapterCapabilities);

impl Captioner for Blind {
    fn generate(&self, image: &ImageRef, prompt: &str, hook: Option<&dyn LayerHook>) -> Result<String, BackendError> {
        self.0.generate(image, prompt, hook)
    }
}

impl VisionProjector for Blind {
    fn project(&self, image: &ImageRef) -> Result<EmbeddingMatrix, BackendError> {
        self.0.project(image)
    }
}

impl ModelAdapter for Blind {
    fn name(&self) -> &str {
        "blind"
    }
    fn meta(&self) -> ModelMeta {
        self.0.meta()
    }
    fn capabilities(&self) -> AdapterCapabilities {
        self.1
    }
    fn token_kinds(&self, image: &ImageRef, prompt: &str) -> Result<Vec<TokenKind>, BackendError> {
        self.0.token_kinds(image, prompt)
    }
}

#[test]
fn adapters_without_hooks_are_refused() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.0);
    for (caps, missing) in [
        (
            AdapterCapabilities {
                token_metadata: true,
                layer_intercept: false,
            },
            "per-layer intercept",
        ),
        (
            AdapterCapabilities {
                token_metadata: false,
                layer_intercept: true,
            },
            "token metadata",
        ),
    ] {
        let adapter = Arc::new(Blind(MockModel::new(w.clone()), caps));
        let err = BackendSuite::from_adapter(adapter, Arc::new(MockReconstructor::new(w.clone()))).unwrap_err();
        assert_eq!(err.missing, missing);
        assert_eq!(err.adapter, "blind");
    }
}

#[test]
fn layer_count_must_match_the_model() {
    let w = world(&MOCK_VOCABULARY, 0.02, 0.0);
    let suite = mock_suite(w);
    let image = mock_image("img", MockScene::new(["dog"]));
    let err = generate_with_mitigation(&image, DEFAULT_PROMPT, &cfg(16), &suite).unwrap_err();
    assert!(matches!(err, PipelineError::Edit(_)), "{err:?}");
}
