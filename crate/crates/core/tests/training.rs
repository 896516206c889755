mod common;

use pixveil::generator::{apply_perturbation, Generator};
use pixveil::qa::QaPair;
use pixveil::saliency::attention_for;
use pixveil::surrogate::reference::{PerfectModel, UniformModel};
use pixveil::surrogate::{nll_qaset, Vocab};
use pixveil::training::{
    composite_objective, privacy_interference_loss, task_preservation_loss, train, LabeledSample, TrainConfig,
    TrainLog, Trainer,
};
use pixveil::{Error, Image, ImageShape, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn samples(n: usize, offset: u64) -> Vec<LabeledSample> {
    (0..n as u64)
        .map(|i| {
            let (image, rec) = common::fixture(offset + i);
            LabeledSample {
                id: format!("s{i}"),
                image,
                privacy: rec.privacy_qa.pairs,
                normal: rec.normal_qa.pairs,
            }
        })
        .collect()
}

fn small_config() -> TrainConfig {
    TrainConfig {
        epochs: 2,
        batch_size: 2,
        snapshot_samples: 2,
        ..TrainConfig::default()
    }
}

#[test]
fn perfect_model_gives_zero_losses() {
    let vocab = Vocab::new(vec!["yes".into(), "no".into()]).unwrap();
    let m = PerfectModel::new(vocab, ImageShape::new(4, 4), "yes").unwrap();
    let x = Image::zeros(ImageShape::new(4, 4));
    let qa = [QaPair::new("q", "yes")];
    assert_eq!(task_preservation_loss(&m, &x, &qa).unwrap(), 0.0);
    assert_eq!(privacy_interference_loss(&m, &x, &qa).unwrap(), 0.0);
}

#[test]
fn uniform_model_loss_is_analytic() {
    let m = UniformModel::new(16, ImageShape::new(4, 4));
    let x = Image::zeros(ImageShape::new(4, 4));
    let v = task_preservation_loss(&m, &x, &[QaPair::new("q", "t0 t5")]).unwrap();
    assert!((v - 2.0 * 16f64.ln()).abs() <= 1e-9);
    assert!((v - 5.5452).abs() <= 1e-4);
}

#[test]
fn losses_equal_qa_set_nll_bit_exactly() {
    let model = common::toy();
    let (x, rec) = common::fixture(2);
    let n = task_preservation_loss(model.as_ref(), &x, &rec.normal_qa.pairs).unwrap();
    let p = privacy_interference_loss(model.as_ref(), &x, &rec.privacy_qa.pairs).unwrap();
    assert_eq!(n.to_bits(), nll_qaset(model.as_ref(), &x, &rec.normal_qa.pairs).unwrap().to_bits());
    assert_eq!(p.to_bits(), nll_qaset(model.as_ref(), &x, &rec.privacy_qa.pairs).unwrap().to_bits());
}

#[test]
fn empty_qa_sets_are_rejected() {
    let model = common::toy();
    let (x, _) = common::fixture(2);
    assert!(matches!(task_preservation_loss(model.as_ref(), &x, &[]), Err(Error::EmptyQaSet)));
    assert!(matches!(privacy_interference_loss(model.as_ref(), &x, &[]), Err(Error::EmptyQaSet)));
}

#[test]
fn privacy_loss_is_additive() {
    let model = common::toy();
    let (x, rec) = common::fixture(6);
    let pairs = &rec.privacy_qa.pairs;
    assert!(pairs.len() >= 2);
    let whole = privacy_interference_loss(model.as_ref(), &x, pairs).unwrap();
    let parts: f64 = pairs
        .iter()
        .map(|p| privacy_interference_loss(model.as_ref(), &x, std::slice::from_ref(p)).unwrap())
        .sum();
    assert!((whole - parts).abs() <= 1e-9 * whole.abs().max(1.0));
}

#[test]
fn strong_perturbation_raises_privacy_loss() {
    let model = common::toy();
    let (x, rec) = common::fixture(13);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let eps = 128.0 / 255.0;
    let noise: Vec<f32> = (0..x.data().len())
        .map(|_| if rng.gen::<bool>() { eps } else { -eps })
        .collect();
    let adv = apply_perturbation(&x, &Tensor::from_vec(3, x.height(), x.width(), noise).unwrap()).unwrap();
    let clean = privacy_interference_loss(model.as_ref(), &x, &rec.privacy_qa.pairs).unwrap();
    let noisy = privacy_interference_loss(model.as_ref(), &adv, &rec.privacy_qa.pairs).unwrap();
    assert!(clean < noisy, "clean {clean} noisy {noisy}");
}

#[test]
fn composite_objective_examples() {
    assert_eq!(composite_objective(2.0, 3.0, 1.0, 1.0).unwrap(), -1.0);
    assert_eq!(composite_objective(2.5, 0.0, 0.7, 1.3).unwrap(), 0.7 * 2.5);
    assert!(matches!(composite_objective(1.0, 1.0, 0.0, 1.0), Err(Error::Config(_))));
    assert!(matches!(composite_objective(1.0, 1.0, 1.0, -1.0), Err(Error::Config(_))));
}

#[test]
fn zero_epochs_returns_the_initialization() {
    let model = common::toy();
    let data = samples(2, 40);
    let cfg = TrainConfig {
        epochs: 0,
        ..small_config()
    };
    let (ck, log) = train(&cfg, &data, &[], model.as_ref()).unwrap();
    assert_eq!(ck.weights, Generator::new(cfg.generator_config()).unwrap().params());
    assert!(log.steps.is_empty() && log.snapshots.is_empty());
}

#[test]
fn empty_training_split_is_rejected() {
    let model = common::toy();
    assert!(train(&small_config(), &[], &[], model.as_ref()).is_err());
}

#[test]
fn training_is_reproducible_and_leaves_the_surrogate_untouched() {
    let model = common::toy();
    let data = samples(4, 50);
    let before = model.parameter_hash();
    let (ck_a, log_a) = train(&small_config(), &data, &data, model.as_ref()).unwrap();
    let (ck_b, log_b) = train(&small_config(), &data, &data, model.as_ref()).unwrap();
    assert_eq!(model.parameter_hash(), before);
    assert_eq!(log_a.steps.len(), 2 * 2);
    assert!(log_a.steps.iter().enumerate().all(|(i, s)| s.step == i));
    for (a, b) in ck_a.weights.iter().zip(&ck_b.weights) {
        assert!((a - b).abs() <= 1e-6);
    }
    for (a, b) in log_a.steps.iter().zip(&log_b.steps) {
        assert!((a.objective - b.objective).abs() <= 1e-4 * a.objective.abs().max(1e-12));
    }
    assert_eq!(log_a.snapshots.len(), 2);
}

#[test]
fn log_round_trips_through_jsonl() {
    let model = common::toy();
    let data = samples(2, 60);
    let (_, log) = train(&small_config(), &data, &data, model.as_ref()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    log.write_jsonl(&path).unwrap();
    assert_eq!(TrainLog::read_jsonl(&path).unwrap(), log);
}

#[test]
fn ceiling_caps_each_privacy_pair_inside_the_objective_only() {
    let model = common::toy();
    let data = samples(2, 70);
    let batch: Vec<&LabeledSample> = data.iter().collect();
    let tiny = TrainConfig {
        lp_ceiling: Some(1e-3),
        ..small_config()
    };
    let rec = Trainer::new(tiny, model.as_ref()).unwrap().step(&batch, 0).unwrap();
    let pairs: usize = data.iter().map(|s| s.privacy.len()).sum();
    assert!((rec.l_p_clamped - 1e-3 * pairs as f64 / 2.0).abs() <= 1e-12);
    assert!(rec.l_p > rec.l_p_clamped);
    let open = TrainConfig {
        lp_ceiling: None,
        ..small_config()
    };
    let rec = Trainer::new(open, model.as_ref()).unwrap().step(&batch, 0).unwrap();
    assert_eq!(rec.l_p, rec.l_p_clamped);
    assert_eq!(rec.objective, rec.l_n - rec.l_p);
}

#[test]
fn single_step_does_not_increase_the_batch_objective() {
    let model = common::toy();
    let data = samples(8, 80);
    let mut violations = 0;
    for trial in 0..20u64 {
        let cfg = TrainConfig {
            learning_rate: 1e-5,
            seed: trial,
            ..small_config()
        };
        let mut trainer = Trainer::new(cfg, model.as_ref()).unwrap();
        let i = (trial as usize * 3) % data.len();
        let batch = vec![&data[i], &data[(i + 1) % data.len()]];
        // Warm-up steps give the output layer non-zero weights.
        trainer.step(&batch, 0).unwrap();
        trainer.step(&batch, 0).unwrap();
        let before = trainer.batch_objective(&batch).unwrap();
        trainer.step(&batch, 0).unwrap();
        let after = trainer.batch_objective(&batch).unwrap();
        if after > before {
            violations += 1;
        }
    }
    assert!(violations <= 2, "{violations} of 20 steps increased the objective");
}

#[test]
fn adversarial_images_respect_bound_and_range_during_training() {
    let model = common::toy();
    let data = samples(4, 90);
    let mut trainer = Trainer::new(
        TrainConfig {
            learning_rate: 1e-2,
            ..small_config()
        },
        model.as_ref(),
    )
    .unwrap();
    for _ in 0..3 {
        trainer.train_epoch(&data, 0).unwrap();
        let g = trainer.generator();
        for s in &data {
            let a = attention_for(model.as_ref(), &s.image, &s.privacy, &s.normal)
                .unwrap()
                .build_pyramid(&g.level_shapes(s.image.shape()).unwrap())
                .unwrap();
            let d = g.generate(&s.image, &a).unwrap();
            assert!(d.max_abs() as f64 <= g.config().epsilon + 1e-9);
            let adv = apply_perturbation(&s.image, &d).unwrap();
            assert!(adv.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn attention_is_computed_once_per_sample() {
    let model = common::toy();
    let data = samples(3, 100);
    let mut trainer = Trainer::new(small_config(), model.as_ref()).unwrap();
    trainer.train_epoch(&data, 0).unwrap();
    trainer.train_epoch(&data, 1).unwrap();
    assert_eq!(trainer.cache().len(), 3);
    assert_eq!(trainer.cache().misses(), 3);
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        TrainConfig { alpha: 0.0, ..TrainConfig::default() },
        TrainConfig { beta: -1.0, ..TrainConfig::default() },
        TrainConfig { batch_size: 0, ..TrainConfig::default() },
        TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
        TrainConfig { epsilon: 1.5, ..TrainConfig::default() },
    ] {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    let d = TrainConfig::default();
    assert_eq!((d.alpha, d.beta, d.learning_rate, d.batch_size, d.epochs), (1.0, 1.0, 1e-4, 4, 20));
}

proptest! {
    #[test]
    fn objective_scales_linearly_with_both_weights(
        l_n in 0.0f64..50.0,
        l_p in 0.0f64..50.0,
        a in 0.01f64..5.0,
        b in 0.01f64..5.0,
        c in 0.01f64..10.0,
    ) {
        let base = composite_objective(l_n, l_p, a, b).unwrap();
        let scaled = composite_objective(l_n, l_p, c * a, c * b).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
    }
}
