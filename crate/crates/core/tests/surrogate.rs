mod common;

use std::sync::Arc;

use pixveil::font::GLYPH_CHARS;
use pixveil::metrics::match_score;
use pixveil::privscreen_synth::{normal_questions, privacy_question, render_screenshot, sample_pii, APP_TEMPLATES};
use pixveil::qa::QaPair;
use pixveil::screen::PiiKind;
use pixveil::surrogate::reference::{FixedLogprobModel, PerfectModel, UniformModel};
use pixveil::surrogate::{
    answer_logprob, decode_answer, input_gradient, nll_qaset, SurrogateModel, SurrogateRegistry, TokenId,
    ToyGlyphSurrogate, Vocab, COLOR_WORDS, COUNT_WORDS, MAX_ANSWER_TOKENS,
};
use pixveil::{Error, Image, ImageShape, Result};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_shape() -> ImageShape {
    ImageShape::new(8, 8)
}

fn abc_vocab() -> Vocab {
    Vocab::new(vec!["a".into(), "b".into(), "c".into(), " ".into()]).unwrap()
}

#[test]
fn perfect_model_scores_zero() {
    let m = PerfectModel::new(abc_vocab(), tiny_shape(), "abc").unwrap();
    let x = Image::zeros(tiny_shape());
    assert_eq!(answer_logprob(&m, &x, "q", "abc").unwrap(), 0.0);
}

#[test]
fn uniform_model_nll_is_length_times_log_vocab() {
    let m = UniformModel::new(16, tiny_shape());
    let x = Image::zeros(tiny_shape());
    let lp = answer_logprob(&m, &x, "q", "t3 t9").unwrap();
    assert!((lp + 2.0 * 16f64.ln()).abs() < 1e-12);
    assert!((-lp - 5.5452).abs() < 1e-4);
}

fn fixed_model() -> FixedLogprobModel {
    FixedLogprobModel::new(abc_vocab(), tiny_shape(), vec![-2.0, -1.0, -3.0, -0.5]).unwrap()
}

#[test]
fn nll_of_single_pair_is_negated_logprob() {
    let x = Image::zeros(tiny_shape());
    let v = nll_qaset(&fixed_model(), &x, &[QaPair::new("q", "a")]).unwrap();
    assert_eq!(v, 2.0);
}

#[test]
fn nll_adds_over_pairs() {
    let x = Image::zeros(tiny_shape());
    let v = nll_qaset(&fixed_model(), &x, &[QaPair::new("q", "b"), QaPair::new("q", "c")]).unwrap();
    assert_eq!(v, 4.0);
}

#[test]
fn duplicated_pair_doubles_nll() {
    let (x, _) = common::fixture(3);
    let model = common::toy();
    let p = QaPair::new(normal_questions()[0], COLOR_WORDS[0].0);
    let one = nll_qaset(model.as_ref(), &x, &[p.clone()]).unwrap();
    let two = nll_qaset(model.as_ref(), &x, &[p.clone(), p]).unwrap();
    assert_eq!(two, 2.0 * one);
}

#[test]
fn empty_qa_set_is_rejected() {
    let x = Image::zeros(tiny_shape());
    assert!(matches!(nll_qaset(&fixed_model(), &x, &[]), Err(Error::EmptyQaSet)));
    assert!(matches!(input_gradient(&fixed_model(), &x, &[]), Err(Error::EmptyQaSet)));
}

#[test]
fn out_of_vocabulary_token_is_named() {
    let x = Image::zeros(tiny_shape());
    match answer_logprob(&fixed_model(), &x, "q", "az") {
        Err(Error::OutOfVocabulary { token }) => assert_eq!(token, "z"),
        other => panic!("expected out-of-vocabulary error, got {other:?}"),
    }
}

#[test]
fn wrong_image_shape_is_rejected() {
    let x = Image::zeros(ImageShape::new(9, 8));
    assert!(matches!(answer_logprob(&fixed_model(), &x, "q", "a"), Err(Error::Shape(_))));
}

#[test]
fn constant_model_has_zero_input_gradient() {
    let m = UniformModel::new(16, tiny_shape());
    let x = common::random_image(tiny_shape(), 1, 0.0, 1.0);
    let g = input_gradient(&m, &x, &[QaPair::new("q", "t1 t2")]).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
}

struct Opaque(UniformModel);

impl SurrogateModel for Opaque {
    fn id(&self) -> &str {
        "opaque"
    }
    fn vocab(&self) -> &Vocab {
        self.0.vocab()
    }
    fn image_shape(&self) -> ImageShape {
        self.0.image_shape()
    }
    fn parameter_hash(&self) -> String {
        self.0.parameter_hash()
    }
    fn is_differentiable(&self) -> bool {
        false
    }
    fn step_logprobs(&self, x: &Image, q: &str, prefix: &[TokenId]) -> Result<Vec<f64>> {
        self.0.step_logprobs(x, q, prefix)
    }
    fn sequence_logprob(&self, x: &Image, q: &str, a: &[TokenId], g: Option<(f64, &mut [f64])>) -> Result<f64> {
        self.0.sequence_logprob(x, q, a, g)
    }
}

#[test]
fn non_differentiable_model_is_refused_at_registration() {
    let mut reg = SurrogateRegistry::new();
    let err = reg.register(Arc::new(Opaque(UniformModel::new(4, tiny_shape())))).unwrap_err();
    assert!(matches!(err, Error::NotDifferentiable(_)));
    assert!(reg.ids().is_empty());
}

#[test]
fn true_answer_beats_shuffled_answer() {
    let model = common::toy();
    let (x, rec) = common::fixture(11);
    for pair in &rec.privacy_qa.pairs {
        let mut chars: Vec<char> = pair.answer.chars().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shuffled = loop {
            chars.shuffle(&mut rng);
            let s: String = chars.iter().collect();
            if s != pair.answer && s.trim() == s && !s.contains("  ") {
                break s;
            }
        };
        let t = answer_logprob(model.as_ref(), &x, &pair.question, &pair.answer).unwrap();
        let s = answer_logprob(model.as_ref(), &x, &pair.question, &shuffled).unwrap();
        assert!(t > s, "{:?}: true {t} vs shuffled {shuffled:?} {s}", pair.answer);
    }
}

#[test]
fn decode_reads_rendered_pii_and_is_deterministic() {
    let model = common::toy();
    let (x, rec) = common::fixture(21);
    for pair in &rec.privacy_qa.pairs {
        let a = decode_answer(model.as_ref(), &x, &pair.question, MAX_ANSWER_TOKENS).unwrap();
        let b = decode_answer(model.as_ref(), &x, &pair.question, MAX_ANSWER_TOKENS).unwrap();
        assert_eq!(a, pair.answer);
        assert_eq!(a, b);
    }
}

#[test]
fn decode_rejects_zero_budget() {
    let model = common::toy();
    let (x, _) = common::fixture(1);
    assert!(decode_answer(model.as_ref(), &x, privacy_question(PiiKind::Name), 0).is_err());
}

#[test]
fn blank_image_leaks_little() {
    let model = common::toy();
    let x = Image::zeros(common::shape());
    let (_, rec) = common::fixture(4);
    for pair in &rec.privacy_qa.pairs {
        let out = decode_answer(model.as_ref(), &x, &pair.question, MAX_ANSWER_TOKENS).unwrap();
        let ms = match_score(&out, &pair.answer).unwrap();
        assert!(ms < 0.3, "{out:?} vs {:?}: {ms}", pair.answer);
    }
}

#[test]
fn privacy_answers_decode_on_at_least_95_percent_of_clean_screenshots() {
    let model = common::toy();
    let mut correct = 0;
    let n = 100;
    for seed in 0..n {
        let (x, rec) = common::fixture(1000 + seed);
        let ok = rec.privacy_qa.pairs.iter().all(|p| {
            decode_answer(model.as_ref(), &x, &p.question, MAX_ANSWER_TOKENS).unwrap() == p.answer
        });
        correct += ok as usize;
    }
    assert!(correct as f64 >= 0.95 * n as f64, "{correct}/{n}");
}

#[test]
fn nll_is_bit_identical_across_calls() {
    let model = common::toy();
    let (x, rec) = common::fixture(8);
    let a = nll_qaset(model.as_ref(), &x, &rec.privacy_qa.pairs).unwrap();
    let _ = input_gradient(model.as_ref(), &x, &rec.normal_qa.pairs).unwrap();
    let b = nll_qaset(model.as_ref(), &x, &rec.privacy_qa.pairs).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn gradient_is_additive_over_disjoint_pairs() {
    let model = common::toy();
    let (x, rec) = common::fixture(9);
    let q1 = rec.privacy_qa.pairs.clone();
    let q2 = rec.normal_qa.pairs.clone();
    let both: Vec<QaPair> = q1.iter().chain(&q2).cloned().collect();
    let g1 = input_gradient(model.as_ref(), &x, &q1).unwrap();
    let g2 = input_gradient(model.as_ref(), &x, &q2).unwrap();
    let g = input_gradient(model.as_ref(), &x, &both).unwrap();
    for i in 0..g.len() {
        assert!((g[i] - g1[i] - g2[i]).abs() <= 1e-6, "pixel {i}");
    }
}

/// A random QA set the 8×8 reader understands.
fn random_tiny_qa(rng: &mut ChaCha8Rng) -> Vec<QaPair> {
    let glyphs: Vec<char> = GLYPH_CHARS.chars().filter(|c| *c != ' ').collect();
    let mut qa = Vec::new();
    let n = rng.gen_range(1..=3);
    for _ in 0..n {
        match rng.gen_range(0..4) {
            0 => qa.push(QaPair::new(
                normal_questions()[0],
                COLOR_WORDS[rng.gen_range(0..COLOR_WORDS.len())].0,
            )),
            1 => qa.push(QaPair::new(
                normal_questions()[rng.gen_range(1..3)],
                COUNT_WORDS[rng.gen_range(0..COUNT_WORDS.len())],
            )),
            _ => {
                let kind = PiiKind::ALL[rng.gen_range(0..PiiKind::ALL.len())];
                let c = glyphs[rng.gen_range(0..glyphs.len())];
                qa.push(QaPair::new(privacy_question(kind), c.to_string()));
            }
        }
    }
    qa
}

fn finite_difference_check(seed: u64) {
    let model = ToyGlyphSurrogate::new(tiny_shape()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = common::random_image(tiny_shape(), seed, 0.05, 0.95);
    let qa = random_tiny_qa(&mut rng);
    let g = input_gradient(&model, &x, &qa).unwrap();
    assert_eq!(g.len(), 192);
    let h = 1e-3f32;
    for i in 0..192 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.data_mut()[i] += h;
        xm.data_mut()[i] -= h;
        let step = (xp.data()[i] - xm.data()[i]) as f64;
        let fd = (nll_qaset(&model, &xp, &qa).unwrap() - nll_qaset(&model, &xm, &qa).unwrap()) / step;
        let rel = (g[i] - fd).abs() / fd.abs().max(1e-8);
        assert!(
            rel <= 1e-2 || (g[i] - fd).abs() <= 1e-8,
            "seed {seed} pixel {i}: analytic {} vs numeric {fd}",
            g[i]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn input_gradient_matches_central_differences(seed in 0u64..1_000_000) {
        finite_difference_check(seed);
    }

    #[test]
    fn step_distributions_sum_to_one(seed in 0u64..1000, app in 0usize..10, prefix_len in 0usize..4) {
        let model = common::toy();
        let t = &APP_TEMPLATES[app];
        let (x, rec) = render_screenshot(t, &sample_pii(t, seed), seed, common::shape()).unwrap();
        for pair in rec.privacy_qa.pairs.iter().chain(&rec.normal_qa.pairs) {
            let ids = model.vocab().tokenize(&pair.answer).unwrap();
            let prefix = &ids[..prefix_len.min(ids.len())];
            let lp = model.step_logprobs(&x, &pair.question, prefix).unwrap();
            let total: f64 = lp.iter().map(|v| v.exp()).sum();
            prop_assert!((total - 1.0).abs() <= 1e-6);
            prop_assert!(lp.iter().all(|v| *v <= 1e-12));
        }
    }
}
