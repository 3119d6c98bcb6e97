mod common;

use isoguard_core::isolation_forest::{
    expected_path_length, normalized_score, ForestParams, ITreeNode, IsolationForest, ThresholdSpec,
};
use isoguard_core::Matrix;
use proptest::prelude::*;

/// `c(m)` with the exact harmonic sum `Σ 1/k`.
fn exact_c(m: usize) -> f64 {
    match m {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let h: f64 = (1..m).map(|k| 1.0 / k as f64).sum();
            2.0 * h - 2.0 * (m - 1) as f64 / m as f64
        }
    }
}

#[test]
fn approximate_normalizer_tracks_exact_harmonic_sum() {
    let mut prev_gap = f64::INFINITY;
    for m in 3..=10_000 {
        let gap = exact_c(m) - expected_path_length(m);
        // ln(i) + γ underestimates H(i) by about 1/(2i)
        assert!(gap > 0.0, "m={m}");
        assert!(gap < prev_gap, "m={m}");
        assert!(gap <= 1.0 / (m - 1) as f64, "m={m} gap={gap}");
        if m >= 12 {
            assert!(gap < 0.09, "m={m} gap={gap}");
        }
        prev_gap = gap;
    }
}

/// Standard 2-D Gaussian plus one point 10σ out along the diagonal.
fn outlier_data(seed: u64) -> Matrix {
    let mut r = common::rng(seed);
    let mut rows = common::gaussian(&mut r, 1000, 2);
    let offset = 10.0 / 2f64.sqrt();
    rows.push(vec![offset, offset]);
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn far_point_isolates_first() {
    let mut wins = 0;
    for seed in 0..20 {
        let x = outlier_data(seed);
        let forest = IsolationForest::fit(
            &x,
            &ForestParams {
                n_trees: 100,
                subsample_size: Some(256),
                seed,
            },
        )
        .unwrap();
        let scores = forest.score_all(&x).unwrap();
        // brute-force arg max
        let best = (0..scores.len())
            .max_by(|&a, &b| scores[a].score.total_cmp(&scores[b].score))
            .unwrap();
        wins += usize::from(best == 1000);
    }
    assert!(wins >= 19, "{wins}/20");
}

#[test]
fn contamination_on_hundred_rows_flags_ten() {
    let mut r = common::rng(4);
    let x = Matrix::from_rows(&common::gaussian(&mut r, 100, 3)).unwrap();
    let forest = IsolationForest::fit(&x, &ForestParams::default()).unwrap();
    let v = forest.predict(&x, ThresholdSpec::Contamination(0.1)).unwrap();
    assert_eq!(v.iter().filter(|o| o.verdict.is_outlier()).count(), 10);
}

#[test]
fn ten_thousand_rows_bound_leaf_sizes() {
    let mut r = common::rng(8);
    let x = Matrix::from_rows(&common::gaussian(&mut r, 10_000, 4)).unwrap();
    let f = IsolationForest::fit(
        &x,
        &ForestParams {
            n_trees: 100,
            subsample_size: Some(256),
            seed: 8,
        },
    )
    .unwrap();
    assert_eq!(f.trees.len(), 100);
    for t in &f.trees {
        assert_eq!(t.total_size(), 256);
        assert!(t.n_external() <= 256);
        assert!(t.depth() <= 8);
    }
}

#[test]
fn json_round_trip_preserves_scores_bitwise() {
    let x = outlier_data(3);
    let f = IsolationForest::fit(&x, &ForestParams { seed: 3, ..Default::default() }).unwrap();
    let json = serde_json::to_string(&f).unwrap();
    let back: IsolationForest = serde_json::from_str(&json).unwrap();
    assert_eq!(back, f);
    let (a, b) = (f.score_all(&x).unwrap(), back.score_all(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(p, q)| p.score.to_bits() == q.score.to_bits()));
    assert_eq!(serde_json::to_string(&back).unwrap(), json);

    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["t", "m", "height_limit", "seed", "n_features", "trees"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let leaf: ITreeNode = serde_json::from_str(r#"{"size": 3}"#).unwrap();
    assert_eq!(leaf, ITreeNode::External { size: 3 });
}

proptest! {
    #[test]
    fn scores_stay_in_unit_interval(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..60),
                                    query in prop::collection::vec(-1e4f64..1e4, 3),
                                    seed in any::<u64>()) {
        let x = Matrix::from_rows(&rows).unwrap();
        let f = IsolationForest::fit(&x, &ForestParams { n_trees: 10, subsample_size: None, seed }).unwrap();
        let s = f.score(&query).unwrap();
        prop_assert!(s.score > 0.0 && s.score <= 1.0);
        for t in &f.trees {
            prop_assert!(t.depth() <= f.height_limit);
            prop_assert_eq!(t.total_size(), f.m);
        }
    }

    #[test]
    fn score_strictly_decreases_in_path_length(a in 0.0f64..40.0, b in 0.0f64..40.0, m in 2usize..5000) {
        prop_assume!(a != b);
        let c = expected_path_length(m);
        let (sa, sb) = (normalized_score(a, c), normalized_score(b, c));
        prop_assert_eq!(a < b, sa > sb);
    }
}
