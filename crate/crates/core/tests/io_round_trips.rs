use std::collections::BTreeMap;

use flame_core::embedding_io::{
    load_labels, load_labels_for, load_pool, load_query, save_labels, save_pool, save_query,
    EmbeddingRecord, GroundTruth, LabelEntry, LabelSet, PoolFormat, SessionState, SessionStore,
};
use flame_core::sampler::FlameConfig;
use flame_core::FlameError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pool(seed: u64, n: usize, dim: usize) -> Vec<EmbeddingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let vector = (0..dim)
                .map(|_| f32::from_bits(rng.random::<u32>() & 0xbfff_ffff))
                .collect();
            let gt = match rng.random_range(0..3) {
                0 => None,
                1 => Some(false),
                _ => Some(true),
            };
            EmbeddingRecord::new(format!("rec-{i}-ü"), vector).with_ground_truth(gt)
        })
        .collect()
}

fn bits(pool: &[EmbeddingRecord]) -> Vec<(String, Vec<u32>)> {
    pool.iter()
        .map(|r| (r.id.clone(), r.vector.iter().map(|v| v.to_bits()).collect()))
        .collect()
}

#[test]
fn binary_round_trip_is_bit_identical() {
    let pool = random_pool(1, 1000, 17);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.bin");
    save_pool(&path, &pool, PoolFormat::Binary).unwrap();
    let back = load_pool(&path).unwrap();
    assert_eq!(bits(&back), bits(&pool));
    let (a, b) = (GroundTruth::from_pool(&pool), GroundTruth::from_pool(&back));
    for r in &pool {
        assert_eq!(a.get(&r.id), b.get(&r.id));
    }
    let again = dir.path().join("again.bin");
    save_pool(&again, &back, PoolFormat::Binary).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn jsonl_round_trip_keeps_everything() {
    let mut pool = random_pool(2, 200, 5);
    let mut meta = BTreeMap::new();
    meta.insert("bbox".to_string(), "1 2 3 4".to_string());
    pool[0].image_ref = Some("crops/a.png".into());
    pool[0].meta = Some(meta);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.jsonl");
    save_pool(&path, &pool, PoolFormat::Json).unwrap();
    let back = load_pool(&path).unwrap();
    assert_eq!(back, pool);
}

#[test]
fn pool_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    assert!(matches!(
        load_pool(&write("empty.jsonl", "")),
        Err(FlameError::EmptyPool)
    ));
    let dup = "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"a\",\"vector\":[3,4]}\n";
    assert!(matches!(
        load_pool(&write("dup.jsonl", dup)),
        Err(FlameError::DuplicateId(_))
    ));
    let mismatch = "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[3]}\n";
    let err = load_pool(&write("dim.jsonl", mismatch)).unwrap_err();
    assert!(err.to_string().contains('b'), "{err}");
    let broken = "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\n";
    match load_pool(&write("broken.jsonl", broken)) {
        Err(FlameError::Format { line, .. }) => assert_eq!(line, Some(2)),
        other => panic!("unexpected {other:?}"),
    }

    let pool = vec![
        EmbeddingRecord::new("a", vec![1.0, 2.0]),
        EmbeddingRecord::new("b", vec![f32::NAN, 2.0]),
    ];
    assert!(matches!(
        save_pool(&dir.path().join("nan.bin"), &pool, PoolFormat::Binary),
        Err(FlameError::NonFinite(_))
    ));
}

#[test]
fn query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let q = vec![0.1, -2.5, 1e-300, 3.0];
    save_query(&path, &q).unwrap();
    assert_eq!(load_query(&path).unwrap(), q);
}

#[test]
fn thirty_labels_round_trip() {
    let ids: Vec<String> = (0..30).map(|i| format!("p{i:05}")).collect();
    let mut labels = LabelSet::new();
    for (i, id) in ids.iter().enumerate() {
        labels.insert(
            id.clone(),
            LabelEntry::now(i % 3 == 0, "annotator, with comma"),
        );
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    save_labels(&path, &labels, &ids).unwrap();
    let (back, warnings) = load_labels(&path).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(back, labels);
    assert_eq!(load_labels_for(&path, &ids).unwrap().0, labels);
    assert!(matches!(
        load_labels_for(&path, &ids[1..]),
        Err(FlameError::UnknownShot(_))
    ));
    assert!(matches!(
        save_labels(&path, &labels, &ids[..5]),
        Err(FlameError::UnknownShot(_))
    ));
}

#[test]
fn persisted_session_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let mut state = SessionState::new("s-1", FlameConfig::default(), "pool.bin", vec![1.0, 0.5]);
    state.labels.insert("x", LabelEntry::now(true, "a"));
    {
        let lock = store.lock("s-1").unwrap();
        assert!(matches!(store.lock("s-1"), Err(FlameError::Locked(_))));
        store.save(&state, &lock).unwrap();
    }
    assert!(store.lock("s-1").is_ok());
    assert_eq!(store.load("s-1").unwrap(), Some(state));
    assert_eq!(store.load("missing").unwrap(), None);
    assert!(store.load("../escape").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn both_pool_formats_round_trip(
        seed in any::<u64>(),
        n in 1usize..40,
        dim in 1usize..12,
    ) {
        let pool = random_pool(seed, n, dim);
        let dir = tempfile::tempdir().unwrap();
        for (name, format) in [("p.bin", PoolFormat::Binary), ("p.jsonl", PoolFormat::Json)] {
            let path = dir.path().join(name);
            save_pool(&path, &pool, format).unwrap();
            let back = load_pool(&path).unwrap();
            prop_assert_eq!(bits(&back), bits(&pool));
        }
    }
}
