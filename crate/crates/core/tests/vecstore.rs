use std::fs;

use proptest::prelude::*;
use thinkflow::corpus::Chunk;
use thinkflow::embed::{normalize, EmbeddingVector, TestProvider};
use thinkflow::vecstore::{similarity, VecStoreError, VectorIndex, META_FILE, VEC_FILE};

fn chunk(id: u64) -> Chunk {
    Chunk {
        chunk_id: id,
        doc_id: format!("doc{}.md", id % 3),
        start: 0,
        end: 5,
        text: format!("text {id}"),
    }
}

fn build(vectors: &[(u64, Vec<f64>)]) -> VectorIndex {
    let mut idx = VectorIndex::new();
    for (id, v) in vectors {
        idx.add(&chunk(*id), &EmbeddingVector::new(v.clone()))
            .unwrap();
    }
    idx
}

/// Full scan over f32-rounded copies, sorted by (distance, id).
fn naive_top_k(vectors: &[(u64, Vec<f64>)], q: &[f64], k: usize) -> Vec<(u64, f64)> {
    let q32: Vec<f64> = q.iter().map(|&x| x as f32 as f64).collect();
    let mut all: Vec<(u64, f64)> = vectors
        .iter()
        .map(|(id, v)| {
            let mut d2 = 0.0f64;
            for (a, b) in v.iter().zip(&q32) {
                let d = (*a as f32 as f64) - b;
                d2 += d * d;
            }
            (*id, -d2.sqrt())
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn entries(dim: usize) -> impl Strategy<Value = Vec<(u64, Vec<f64>)>> {
    // a small pool of vectors so that exact ties show up
    let pool = prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), 1..6);
    (
        pool,
        prop::collection::vec(any::<prop::sample::Index>(), 1..40),
    )
        .prop_map(|(pool, picks)| {
            let mut ids: Vec<u64> = (0..picks.len() as u64).map(|i| i * 7 + 3).collect();
            ids.reverse();
            ids.into_iter()
                .zip(picks)
                .map(|(id, p)| (id, p.get(&pool).clone()))
                .collect()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_matches_naive_scan(
        data in entries(6),
        q in prop::collection::vec(-1.0f64..1.0, 6),
        k in 1usize..50,
    ) {
        let idx = build(&data);
        let hits = idx.search(&EmbeddingVector::new(q.clone()), k).unwrap();
        let want = naive_top_k(&data, &q, k);
        prop_assert_eq!(hits.len(), want.len());
        for (i, (h, (id, sim))) in hits.iter().zip(&want).enumerate() {
            prop_assert_eq!(h.rank, i + 1);
            prop_assert_eq!(h.chunk_id, *id);
            prop_assert!((h.similarity - sim).abs() <= 1e-12);
            prop_assert!(h.similarity <= 0.0);
        }
    }

    #[test]
    fn unit_vector_similarity_is_bounded(
        a in prop::collection::vec(-1.0f64..1.0, 3..32),
        b in prop::collection::vec(-1.0f64..1.0, 3..32),
    ) {
        let n = a.len().min(b.len());
        prop_assume!(a[..n].iter().any(|x| *x != 0.0) && b[..n].iter().any(|x| *x != 0.0));
        let a = normalize(&EmbeddingVector::new(a[..n].to_vec())).unwrap();
        let b = normalize(&EmbeddingVector::new(b[..n].to_vec())).unwrap();
        let s = similarity(&a, &b).unwrap();
        prop_assert!((-2.0 - 1e-9..=0.0).contains(&s));
        prop_assert_eq!(s, similarity(&b, &a).unwrap());
    }

    #[test]
    fn persistence_round_trip(data in entries(4)) {
        let idx = build(&data);
        let (vec, meta) = idx.to_bytes();
        let back = VectorIndex::from_bytes(&vec, &meta).unwrap();
        prop_assert_eq!(back.to_bytes(), (vec, meta));
        prop_assert_eq!(back.chunk_ids(), idx.chunk_ids());
    }
}

#[test]
fn self_query_on_thousand_entries_is_exact() {
    let p = TestProvider::new(32, 9).unwrap();
    let data: Vec<(u64, Vec<f64>)> = (0..1000u64)
        .map(|i| (i, p.embed(&format!("entry {i}")).into_values()))
        .collect();
    let idx = build(&data);
    for probe in [0u64, 1, 499, 998, 999] {
        let q = EmbeddingVector::new(data[probe as usize].1.clone());
        let hits = idx.search(&q, 5).unwrap();
        assert_eq!(hits[0].chunk_id, probe);
        assert_eq!(hits[0].similarity, 0.0);
        assert_eq!(
            hits,
            naive_top_k(&data, q.values(), 5)
                .into_iter()
                .enumerate()
                .map(|(i, (id, s))| thinkflow::vecstore::SearchHit {
                    chunk_id: id,
                    similarity: s,
                    rank: i + 1
                })
                .collect::<Vec<_>>()
        );
    }
}

#[test]
fn metric_sanity() {
    let idx = build(&[
        (1, vec![1.0, 0.0]),
        (2, vec![0.0, 1.0]),
        (3, vec![-1.0, 0.0]),
    ]);
    let hits = idx
        .search(&EmbeddingVector::new(vec![1.0, 0.0]), 3)
        .unwrap();
    let ids: Vec<u64> = hits.iter().map(|h| h.chunk_id).collect();
    assert_eq!(ids, vec![1, 2, 3]);
    assert_eq!(hits[0].similarity, 0.0);
    assert!((hits[1].similarity + 2f64.sqrt()).abs() < 1e-7);
    assert_eq!(hits[2].similarity, -2.0);
}

#[test]
fn ties_break_by_ascending_id() {
    let idx = build(&[
        (9, vec![0.0, 1.0]),
        (4, vec![0.0, 1.0]),
        (6, vec![0.0, 1.0]),
    ]);
    let hits = idx
        .search(&EmbeddingVector::new(vec![1.0, 0.0]), 2)
        .unwrap();
    assert_eq!(
        hits.iter().map(|h| h.chunk_id).collect::<Vec<_>>(),
        vec![4, 6]
    );
}

#[test]
fn k_larger_than_index_returns_everything() {
    let idx = build(&[(0, vec![1.0, 0.0]), (1, vec![0.0, 1.0])]);
    assert_eq!(
        idx.search(&EmbeddingVector::new(vec![1.0, 0.0]), 3)
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn search_errors() {
    let empty = VectorIndex::new();
    let q = EmbeddingVector::new(vec![1.0, 0.0]);
    assert!(matches!(
        empty.search(&q, 1),
        Err(VecStoreError::EmptyIndex)
    ));
    let idx = build(&[(0, vec![1.0, 0.0])]);
    assert!(matches!(idx.search(&q, 0), Err(VecStoreError::Contract(_))));
    let err = idx
        .search(&EmbeddingVector::new(vec![1.0, 0.0, 0.0]), 1)
        .unwrap_err();
    assert!(err.to_string().contains("dimension"));
}

#[test]
fn save_load_and_resave_are_bit_stable() {
    let dir = tempfile::tempdir().unwrap();
    let p = TestProvider::new(8, 42).unwrap();
    let data: Vec<(u64, Vec<f64>)> = (0..20u64)
        .map(|i| (i, p.embed(&format!("c{i}")).into_values()))
        .collect();
    let idx = build(&data);
    idx.save(dir.path()).unwrap();
    let first = (
        fs::read(dir.path().join(VEC_FILE)).unwrap(),
        fs::read(dir.path().join(META_FILE)).unwrap(),
    );
    let loaded = VectorIndex::load(dir.path()).unwrap();
    assert_eq!(loaded, idx);
    assert_eq!(loaded.metadata(7).unwrap().text, "text 7");

    let again = tempfile::tempdir().unwrap();
    loaded.save(again.path()).unwrap();
    assert_eq!(fs::read(again.path().join(VEC_FILE)).unwrap(), first.0);
    assert_eq!(fs::read(again.path().join(META_FILE)).unwrap(), first.1);

    let q = EmbeddingVector::new(data[3].1.clone());
    assert_eq!(idx.search(&q, 4).unwrap(), loaded.search(&q, 4).unwrap());
}

#[test]
fn loading_an_empty_directory_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        VectorIndex::load(dir.path()),
        Err(VecStoreError::Format(_))
    ));
}

#[test]
fn every_single_byte_flip_in_the_vector_file_is_detected() {
    let idx = build(&[
        (0, vec![0.6, 0.8]),
        (1, vec![0.8, 0.6]),
        (5, vec![1.0, 0.0]),
    ]);
    let (vec, meta) = idx.to_bytes();
    for i in 0..vec.len() {
        let mut bad = vec.clone();
        bad[i] ^= 0x01;
        assert!(
            VectorIndex::from_bytes(&bad, &meta).is_err(),
            "flip at byte {i} went unnoticed"
        );
    }
    assert!(VectorIndex::from_bytes(&vec[..vec.len() - 1], &meta).is_err());

    let mut extra = vec.clone();
    extra.push(0);
    assert!(matches!(
        VectorIndex::from_bytes(&extra, &meta),
        Err(VecStoreError::Corruption(_))
    ));
}

#[test]
fn mismatched_meta_is_a_consistency_error() {
    let a = build(&[(0, vec![0.6, 0.8]), (1, vec![0.8, 0.6])]);
    let b = build(&[(0, vec![0.6, 0.8])]);
    let (vec_a, _) = a.to_bytes();
    let (_, meta_b) = b.to_bytes();
    assert!(matches!(
        VectorIndex::from_bytes(&vec_a, &meta_b),
        Err(VecStoreError::Consistency(_))
    ));
}
