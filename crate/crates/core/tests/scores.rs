//! Score-file contract and aggregation.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use voxgauge::scores::{aggregate, similarity_01, ScoreError, ScoreRecord, ScoreSet};

/// Direct formula, written independently of the library.
fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    (dot / (na.sqrt() * nb.sqrt()) + 1.0) / 2.0
}

#[test]
fn similarity_matches_direct_formula() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let dim = rng.gen_range(1..300);
        let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!((similarity_01(&a, &b).unwrap() - cosine_oracle(&a, &b)).abs() <= 1e-9);
    }
}

#[test]
fn similarity_fixed_points() {
    let a = [0.3, -1.2, 2.0];
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    assert!((similarity_01(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    assert!(similarity_01(&a, &neg).unwrap().abs() < 1e-12);
    assert!((similarity_01(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(similarity_01(&[0.0, 0.0], &[1.0, 0.0]), Err(ScoreError::ZeroVector));
    assert!(matches!(similarity_01(&[1.0], &[1.0, 0.0]), Err(ScoreError::DimensionMismatch { .. })));
}

#[test]
fn load_contract() {
    let five: Vec<String> = (0..5).map(|i| format!(r#"{{"clip_id": "c{i}", "dnsmos_ovrl": 3.{i}}}"#)).collect();
    let set = ScoreSet::parse(&format!("[{}]", five.join(","))).unwrap();
    assert_eq!(set.len(), 5);

    let mismatch = format!(
        r#"[{{"clip_id": "a", "embedding": [{}]}}, {{"clip_id": "b", "embedding": [{}]}}]"#,
        vec!["0.1"; 256].join(","),
        vec!["0.1"; 192].join(",")
    );
    assert_eq!(ScoreSet::parse(&mismatch), Err(ScoreError::DimensionMismatch { expected: 256, found: 192 }));

    let empty = ScoreSet::parse("[]").unwrap();
    assert!(empty.is_empty());
    assert_eq!(aggregate(&empty, None), Err(ScoreError::EmptySet));

    let dup = r#"[{"clip_id": "a", "dnsmos_ovrl": 3.0}, {"clip_id": "a", "dnsmos_ovrl": 3.1}]"#;
    assert_eq!(ScoreSet::parse(dup), Err(ScoreError::DuplicateClipId("a".into())));
    assert!(matches!(ScoreSet::parse(r#"[{"clip_id": "a", "dnsmos_ovrl": 7.0}]"#), Err(ScoreError::SchemaError { index: 0, .. })));
    assert!(matches!(ScoreSet::parse(r#"[{"clip_id": "a", "mos": 3.0}]"#), Err(ScoreError::SchemaError { .. })));
}

#[test]
fn sidecar_header_and_failed_clips() {
    let text = r#"{"model": "dnsmos-ovrl", "records": [
        {"clip_id": "a", "dnsmos_ovrl": 4.0},
        {"clip_id": "b", "error": "decode failed"},
        {"clip_id": "c", "dnsmos_ovrl": 3.0}]}"#;
    let set = ScoreSet::parse(text).unwrap();
    assert_eq!(set.metadata()["model"], "dnsmos-ovrl");
    let agg = aggregate(&set, None).unwrap();
    assert_eq!(agg.n, 2);
    assert_eq!(agg.mos_mean, Some(3.5));
}

#[test]
fn aggregate_examples() {
    let set = ScoreSet::from_records(
        [3.9, 4.0, 4.1, 4.2, 4.3].iter().enumerate().map(|(i, m)| ScoreRecord::new(format!("c{i}")).with_mos(*m)).collect(),
    )
    .unwrap();
    let agg = aggregate(&set, None).unwrap();
    assert!((agg.mos_mean.unwrap() - 4.1).abs() < 1e-12);
    assert!((agg.mos_std.unwrap() - 0.158).abs() <= 0.001);

    let single = ScoreSet::from_records(vec![ScoreRecord::new("x").with_mos(3.3)]).unwrap();
    assert_eq!(aggregate(&single, None).unwrap().mos_std, Some(0.0));

    let e = vec![0.2, -0.4, 0.9];
    let with_emb = ScoreSet::from_records(vec![ScoreRecord::new("x").with_embedding(e.clone())]).unwrap();
    assert!((aggregate(&with_emb, Some(&e)).unwrap().similarity_mean.unwrap() - 1.0).abs() < 1e-12);
    let mos_only = ScoreSet::from_records(vec![ScoreRecord::new("x").with_mos(3.0)]).unwrap();
    assert!(matches!(aggregate(&mos_only, Some(&e)), Err(ScoreError::MissingField(_))));
}

#[test]
fn json_round_trip() {
    let set = ScoreSet::from_records(vec![
        ScoreRecord::new("a").with_mos(3.123456789).with_snr(21.5).with_embedding(vec![0.1, 0.2]),
        ScoreRecord::new("b").with_mos(4.0),
    ])
    .unwrap();
    assert_eq!(ScoreSet::parse(&set.to_json()).unwrap(), set);
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn similarity_symmetric_bounded_scale_free((a, b) in (1usize..64).prop_flat_map(|d| (vector(d), vector(d))), s in 1e-3f64..1e3, t in 1e-3f64..1e3) {
        let ab = similarity_01(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - similarity_01(&b, &a).unwrap()).abs() <= 1e-9);
        let sa: Vec<f64> = a.iter().map(|v| v * s).collect();
        let tb: Vec<f64> = b.iter().map(|v| v * t).collect();
        prop_assert!((ab - similarity_01(&sa, &tb).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn aggregate_is_permutation_invariant(mos in prop::collection::vec(1.0f64..5.0, 1..40), seed in any::<u64>()) {
        let records: Vec<ScoreRecord> = mos.iter().enumerate().map(|(i, m)| ScoreRecord::new(format!("c{i}")).with_mos(*m).with_snr(*m * 10.0)).collect();
        let mut shuffled = records.clone();
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = aggregate(&ScoreSet::from_records(records).unwrap(), None).unwrap();
        let b = aggregate(&ScoreSet::from_records(shuffled).unwrap(), None).unwrap();
        prop_assert!((a.mos_mean.unwrap() - b.mos_mean.unwrap()).abs() <= 1e-12);
        prop_assert!((a.mos_std.unwrap() - b.mos_std.unwrap()).abs() <= 1e-12);
        prop_assert!((a.snr_mean_db.unwrap() - b.snr_mean_db.unwrap()).abs() <= 1e-10);
        let lo = mos.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a.mos_mean.unwrap() >= lo - 1e-12 && a.mos_mean.unwrap() <= hi + 1e-12);
    }
}
