mod common;

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use pixveil::baselines::{Method, OcclusionParams};
use pixveil::generator::{Generator, GeneratorCheckpoint, GeneratorConfig};
use pixveil::imageio::{load_png, save_png};
use pixveil::privscreen_synth::{build_dataset, DatasetConfig};
use pixveil::protector::{
    collect_inputs, protect_batch, read_index, GeneratorProtector, OcclusionProtector, ProbeConfig, Protector,
    QaLabels, Unprotected, INDEX_FILE,
};
use pixveil::training::{train, LabeledSample, TrainConfig};
use pixveil::{Error, Image};
use sha2::{Digest, Sha256};

const EPS: f64 = 128.0 / 255.0;

/// A generator briefly trained at ε = 128/255 so its perturbation is not zero.
fn trained_checkpoint() -> &'static GeneratorCheckpoint {
    static CK: OnceLock<GeneratorCheckpoint> = OnceLock::new();
    CK.get_or_init(|| {
        let data: Vec<LabeledSample> = (0..8u64)
            .map(|i| {
                let (image, rec) = common::fixture(500 + i);
                LabeledSample {
                    id: format!("t{i}"),
                    image,
                    privacy: rec.privacy_qa.pairs,
                    normal: rec.normal_qa.pairs,
                }
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 2,
            learning_rate: 1e-3,
            epsilon: EPS,
            snapshot_samples: 0,
            ..TrainConfig::default()
        };
        train(&cfg, &data, &[], common::toy().as_ref()).unwrap().0
    })
}

fn dualtap() -> GeneratorProtector {
    GeneratorProtector::new(trained_checkpoint(), common::toy(), ProbeConfig::default()).unwrap()
}

fn psnr(a: &Image, b: &Image) -> f64 {
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| ((x - y) as f64).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    10.0 * (1.0 / mse).log10()
}

fn sha(path: &Path) -> String {
    Sha256::digest(std::fs::read(path).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_fixtures(dir: &Path, n: u64) -> Vec<PathBuf> {
    (0..n)
        .map(|i| {
            let p = dir.join(format!("shot{i}.png"));
            save_png(&common::fixture(600 + i).0, &p).unwrap();
            p
        })
        .collect()
}

fn on_8bit_grid(x: &Image) -> bool {
    x.data().iter().all(|v| {
        let q = v * 255.0;
        (q - q.round()).abs() < 1e-3
    })
}

#[test]
fn protected_images_stay_in_range_and_within_the_bound() {
    let p = dualtap();
    let mut moved = false;
    for seed in 0..6u64 {
        let (x, rec) = common::fixture(700 + seed);
        for labels in [
            None,
            Some(QaLabels {
                privacy: &rec.privacy_qa.pairs,
                normal: &rec.normal_qa.pairs,
            }),
        ] {
            let out = p.protect(&x, labels).unwrap();
            assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(on_8bit_grid(&out));
            for (a, b) in out.data().iter().zip(x.data()) {
                assert!(((a - b).abs() as f64) <= EPS + 1e-6);
                moved |= a != b;
            }
        }
    }
    assert!(moved, "trained generator left every pixel unchanged");
}

#[test]
fn trained_generator_keeps_psnr_above_10_db() {
    let p = dualtap();
    for seed in 0..20u64 {
        let (x, _) = common::fixture(800 + seed);
        let out = p.protect(&x, None).unwrap();
        let v = psnr(&x, &out);
        assert!(v >= 10.0, "fixture {seed}: {v:.2} dB");
    }
}

#[test]
fn empty_input_list_writes_an_empty_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = protect_batch(&Unprotected, &[], &out).unwrap();
    assert!(r.entries.is_empty() && r.skipped.is_empty());
    assert_eq!(r.mean_latency(), None);
    assert_eq!(r.index_path, out.join(INDEX_FILE));
    assert!(read_index(&r.index_path).unwrap().is_empty());
}

#[test]
fn batch_writes_one_output_per_input_with_matching_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_fixtures(dir.path(), 4);
    let before: Vec<String> = inputs.iter().map(|p| sha(p)).collect();
    let p = dualtap();
    let out = dir.path().join("out");
    let r = protect_batch(&p, &inputs, &out).unwrap();
    assert_eq!(r.entries.len(), 4);
    assert_eq!(read_index(&r.index_path).unwrap(), r.entries);
    for (e, input) in r.entries.iter().zip(&inputs) {
        assert_eq!(&e.input, input);
        assert_eq!(e.method, "dualtap");
        assert_eq!(e.input_hash, load_png(input).unwrap().content_hash());
        assert_eq!(e.output_hash, sha(&e.output));
        assert!(e.max_abs_delta <= EPS + 1e-6);
        assert!(e.wall_seconds >= 0.0);
    }
    let after: Vec<String> = inputs.iter().map(|p| sha(p)).collect();
    assert_eq!(before, after, "inputs were modified");
}

#[test]
fn batch_output_bytes_are_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_fixtures(dir.path(), 3);
    let p = dualtap();
    let a = protect_batch(&p, &inputs, &dir.path().join("a")).unwrap();
    let b = protect_batch(&p, &inputs, &dir.path().join("b")).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert_eq!(std::fs::read(&x.output).unwrap(), std::fs::read(&y.output).unwrap());
    }
}

#[test]
fn unreadable_inputs_are_skipped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = write_fixtures(dir.path(), 2);
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not a png").unwrap();
    inputs.insert(1, junk.clone());
    inputs.push(dir.path().join("missing.png"));
    let r = protect_batch(&Unprotected, &inputs, &dir.path().join("out")).unwrap();
    assert_eq!(r.entries.len(), 2);
    assert_eq!(r.skipped.len(), 2);
    assert_eq!(r.skipped[0].0, junk);
}

#[test]
fn repeated_stems_get_distinct_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("x")).unwrap();
    std::fs::create_dir_all(dir.path().join("y")).unwrap();
    let a = dir.path().join("x/shot.png");
    let b = dir.path().join("y/shot.png");
    save_png(&common::fixture(1).0, &a).unwrap();
    save_png(&common::fixture(2).0, &b).unwrap();
    let r = protect_batch(&Unprotected, &[a, b], &dir.path().join("out")).unwrap();
    assert_ne!(r.entries[0].output, r.entries[1].output);
    assert!(r.entries.iter().all(|e| e.output.exists()));
}

#[test]
fn batch_refuses_to_overwrite_its_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_fixtures(dir.path(), 1);
    let before = sha(&inputs[0]);
    assert!(protect_batch(&Unprotected, &inputs, dir.path()).is_err());
    assert_eq!(sha(&inputs[0]), before);
}

#[test]
fn unprotected_output_equals_the_8bit_input() {
    let (x, _) = common::fixture(3);
    assert_eq!(Unprotected.protect(&x, None).unwrap(), x);
}

#[test]
fn occlusion_protectors_emit_8bit_images() {
    let (x, _) = common::fixture(4);
    for m in [Method::Blur, Method::MosaicAtten, Method::MaskAtten] {
        let p = OcclusionProtector::new(m, OcclusionParams::default(), Some(common::toy()), ProbeConfig::default())
            .unwrap();
        assert_eq!(p.name(), m.to_string());
        assert!(on_8bit_grid(&p.protect(&x, None).unwrap()));
    }
    assert!(OcclusionProtector::new(Method::DualTap, OcclusionParams::default(), None, ProbeConfig::default()).is_err());
    assert!(OcclusionProtector::new(Method::BlurAtten, OcclusionParams::default(), None, ProbeConfig::default()).is_err());
}

#[test]
fn checkpoint_version_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    Generator::new(GeneratorConfig::default())
        .unwrap()
        .to_checkpoint(None)
        .save(&path)
        .unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["format_version"] = serde_json::json!(999);
    std::fs::write(&path, v.to_string()).unwrap();
    assert!(matches!(GeneratorCheckpoint::load(&path), Err(Error::VersionMismatch { .. })));
}

#[test]
fn collect_inputs_accepts_files_directories_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_fixtures(dir.path(), 3);
    std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
    assert_eq!(collect_inputs(dir.path()).unwrap(), inputs);
    assert_eq!(collect_inputs(&inputs[1]).unwrap(), vec![inputs[1].clone()]);

    let ds = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig {
        n_images: 20,
        ..DatasetConfig::default()
    };
    let manifest = build_dataset(&cfg, ds.path()).unwrap();
    let listed = collect_inputs(&manifest).unwrap();
    assert_eq!(listed.len(), 20);
    assert!(listed.iter().all(|p| p.exists()));
}
