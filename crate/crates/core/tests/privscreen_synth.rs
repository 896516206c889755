mod common;

use std::collections::{BTreeMap, HashSet};

use pixveil::imageio::{encode_png, load_png, save_png};
use pixveil::privscreen_synth::{
    assign_splits, build_dataset, draw_screen, generate_pii, generate_pii_named, luhn_valid, pii_format_valid,
    render_screenshot, sample_pii, DatasetConfig, Manifest, ScreenDesign, Split, APP_TEMPLATES, MAX_PII_CHARS,
};
use pixveil::screen::{PiiKind, ScreenLayout};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn card_number_is_deterministic_per_seed() {
    assert_eq!(generate_pii(PiiKind::CardNumber, 7), generate_pii(PiiKind::CardNumber, 7));
    assert_ne!(generate_pii(PiiKind::CardNumber, 7), generate_pii(PiiKind::CardNumber, 8));
}

#[test]
fn unknown_kind_is_rejected() {
    assert!(generate_pii_named("passport", 1).is_err());
    assert!(generate_pii_named("card_number", 1).is_ok());
}

#[test]
fn every_card_number_passes_luhn() {
    for seed in 0..2000 {
        let v = generate_pii(PiiKind::CardNumber, seed);
        assert!(luhn_valid(&v), "{v}");
        let groups: Vec<&str> = v.split(' ').collect();
        assert_eq!(groups.len(), 4);
        assert!(groups.iter().all(|g| g.len() == 4 && g.chars().all(|c| c.is_ascii_digit())));
    }
}

#[test]
fn thousand_draws_are_nearly_all_distinct() {
    let mut seen = HashSet::new();
    for i in 0..1000u64 {
        let kind = PiiKind::ALL[(i % 6) as usize];
        seen.insert(generate_pii(kind, i / 6 * 7919 + i));
    }
    assert!(seen.len() >= 999, "{} distinct", seen.len());
}

#[test]
fn rendering_is_byte_identical_per_seed() {
    let t = &APP_TEMPLATES[3];
    let pii = sample_pii(t, 77);
    let (a, ra) = render_screenshot(t, &pii, 77, common::shape()).unwrap();
    let (b, rb) = render_screenshot(t, &pii, 77, common::shape()).unwrap();
    assert_eq!(encode_png(&a).unwrap(), encode_png(&b).unwrap());
    assert_eq!(ra, rb);
}

#[test]
fn rendering_rejects_bad_pii_lists() {
    let t = &APP_TEMPLATES[0];
    assert!(render_screenshot(t, &[], 1, common::shape()).is_err());
    let long = "a".repeat(MAX_PII_CHARS + 1);
    assert!(render_screenshot(t, &[(PiiKind::Name, long)], 1, common::shape()).is_err());
}

#[test]
fn glyph_regions_hold_at_least_90_percent_of_glyph_energy() {
    let layout = ScreenLayout::standard(common::shape()).unwrap();
    for seed in 0..20u64 {
        let t = &APP_TEMPLATES[(seed % 10) as usize];
        let pii = sample_pii(t, seed);
        let design = ScreenDesign::sample(t, seed);
        let (with, records) = draw_screen(&layout, t, &design, &pii, true).unwrap();
        let (without, _) = draw_screen(&layout, t, &design, &pii, false).unwrap();
        let (mut inside, mut total) = (0.0f64, 0.0f64);
        for c in 0..3 {
            for y in 0..with.height() {
                for x in 0..with.width() {
                    let d = (with.get(c, y, x) - without.get(c, y, x)) as f64;
                    total += d * d;
                    if records.iter().any(|r| r.glyph_region.contains(y, x)) {
                        inside += d * d;
                    }
                }
            }
        }
        assert!(total > 0.0);
        assert!(inside >= 0.9 * total, "seed {seed}: {inside} of {total}");
        for r in &records {
            assert!(r.glyph_region.fits(common::shape()));
        }
    }
}

#[test]
fn default_build_has_the_expected_split_and_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let path = build_dataset(&DatasetConfig::default(), dir.path()).unwrap();
    let m = Manifest::load(&path).unwrap();
    assert_eq!(m.records.len(), 500);
    let mut per_app: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &m.records {
        let e = per_app.entry(r.app_id.as_str()).or_default();
        match r.split {
            Split::Train => e.0 += 1,
            Split::Eval => e.1 += 1,
        }
    }
    assert_eq!(per_app.len(), 10);
    assert!(per_app.values().all(|c| *c == (40, 10)), "{per_app:?}");
    let pii_total: usize = m.records.iter().map(|r| r.pii.len()).sum();
    assert!(pii_total >= 1000, "{pii_total}");

    let train: HashSet<&str> = m.split(Split::Train).iter().map(|r| r.id.as_str()).collect();
    let eval: HashSet<&str> = m.split(Split::Eval).iter().map(|r| r.id.as_str()).collect();
    assert!(train.is_disjoint(&eval));
    assert_eq!(train.len() + eval.len(), m.records.len());

    for r in &m.records {
        assert_eq!(r.privacy_qa.len(), r.pii.len());
        for p in &r.pii {
            assert!(pii_format_valid(p.kind, &p.value), "{p:?}");
            assert!(r.privacy_qa.pairs.iter().any(|q| q.answer == p.value));
        }
        for secret in &r.pii {
            for qa in &r.normal_qa.pairs {
                assert!(!qa.question.contains(&secret.value) && !qa.answer.contains(&secret.value));
            }
        }
    }
    // Every normal QA pair in the manifest is free of every privacy answer.
    let secrets: HashSet<&str> = m.records.iter().flat_map(|r| r.pii.iter().map(|p| p.value.as_str())).collect();
    for r in &m.records {
        for qa in &r.normal_qa.pairs {
            assert!(secrets.iter().all(|s| !qa.question.contains(s) && !qa.answer.contains(s)));
        }
    }

    // Paths resolve and images survive a lossless round trip.
    let scratch = tempfile::tempdir().unwrap();
    for r in m.records.iter().step_by(25) {
        let p = m.image_path(r);
        let img = load_png(&p).unwrap();
        let again = scratch.path().join("again.png");
        save_png(&img, &again).unwrap();
        assert_eq!(load_png(&again).unwrap(), img);
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&again).unwrap());
    }
}

#[test]
fn split_does_not_depend_on_manifest_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig {
        n_images: 40,
        ..DatasetConfig::default()
    };
    let m = Manifest::load(&build_dataset(&cfg, dir.path()).unwrap()).unwrap();
    let mut shuffled = m.records.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    assign_splits(&mut shuffled);
    for r in &shuffled {
        let orig = m.records.iter().find(|o| o.id == r.id).unwrap();
        assert_eq!(orig.split, r.split, "{}", r.id);
    }
}

#[test]
fn too_few_images_for_the_apps_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig {
        n_images: 5,
        ..DatasetConfig::default()
    };
    assert!(build_dataset(&cfg, dir.path()).is_err());
}

proptest! {
    #[test]
    fn generated_values_match_their_format(seed in any::<u64>(), k in 0usize..6) {
        let kind = PiiKind::ALL[k];
        let v = generate_pii(kind, seed);
        prop_assert!(pii_format_valid(kind, &v), "{:?}", v);
        prop_assert_eq!(v.clone(), generate_pii(kind, seed));
    }
}
