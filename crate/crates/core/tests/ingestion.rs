//! CSV ingestion, normalization and duplicate handling on random inputs.

use std::io::Write;
use std::path::Path;

use proptest::prelude::*;

use vlorenz::ingestion::{jitter_duplicates, load_csv, normalize_unit_mean, read_csv, Sample};

fn raw_sample() -> impl Strategy<Value = Sample> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec([0.5f64..5.0, 0.5f64..5.0], n),
            prop::collection::vec(0.01f64..10.0, n),
        )
            .prop_map(|(points, weights)| Sample {
                points,
                weights,
                implicate: None,
            })
    })
}

fn weighted_means(points: &[[f64; 2]], weights: &[f64]) -> [f64; 2] {
    let total: f64 = weights.iter().sum();
    let mut m = [0.0; 2];
    for (p, w) in points.iter().zip(weights) {
        m[0] += w * p[0] / total;
        m[1] += w * p[1] / total;
    }
    m
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in raw_sample()) {
        let once = normalize_unit_mean(&s).unwrap();
        let m = weighted_means(once.points(), once.weights());
        prop_assert!((m[0] - 1.0).abs() <= 1e-12 && (m[1] - 1.0).abs() <= 1e-12);
        let twice = normalize_unit_mean(&Sample {
            points: once.points().to_vec(),
            weights: once.weights().to_vec(),
            implicate: None,
        })
        .unwrap();
        for (a, b) in once.points().iter().zip(twice.points()) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-12 * a[0].max(1.0));
            prop_assert!((a[1] - b[1]).abs() <= 1e-12 * a[1].max(1.0));
        }
        for (a, b) in once.weights().iter().zip(twice.weights()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn jitter_keeps_weights_and_means(s in raw_sample(), copies in 1usize..20, scale in 1e-8f64..1e-2, seed in any::<u64>()) {
        let mut s = s;
        // Force duplicates by repeating the first point.
        for _ in 0..copies {
            s.points.push(s.points[0]);
            s.weights.push(s.weights[0]);
        }
        let alloc = normalize_unit_mean(&s).unwrap();
        let j = jitter_duplicates(&alloc, scale, seed).unwrap();
        prop_assert!(!j.has_duplicates());
        prop_assert_eq!(j.weights(), alloc.weights());
        let before = weighted_means(alloc.points(), alloc.weights());
        let after = weighted_means(j.points(), j.weights());
        prop_assert!((before[0] - after[0]).abs() <= 10.0 * scale);
        prop_assert!((before[1] - after[1]).abs() <= 10.0 * scale);
        let again = jitter_duplicates(&alloc, scale, seed).unwrap();
        prop_assert_eq!(j.points(), again.points());
    }

    #[test]
    fn csv_round_trip(s in raw_sample(), implicates in 1u32..4) {
        let mut text = String::from("x1,x2,weight,implicate\n");
        for (k, (p, w)) in s.points.iter().zip(&s.weights).enumerate() {
            text.push_str(&format!("{},{},{},{}\n", p[0], p[1], w, 1 + k as u32 % implicates));
        }
        let groups = read_csv(text.as_bytes(), Path::new("memory.csv")).unwrap();
        prop_assert_eq!(groups.len(), (implicates as usize).min(s.points.len()));
        let mut seen = 0;
        for g in &groups {
            let imp = g.implicate.unwrap();
            let idx: Vec<usize> = (0..s.points.len()).filter(|k| 1 + *k as u32 % implicates == imp).collect();
            let total: f64 = idx.iter().map(|&k| s.weights[k]).sum();
            prop_assert_eq!(g.points.len(), idx.len());
            for (r, &k) in idx.iter().enumerate() {
                prop_assert_eq!(g.points[r], s.points[k]);
                prop_assert!((g.weights[r] - s.weights[k] / total).abs() <= 1e-15);
            }
            seen += idx.len();
        }
        prop_assert_eq!(seen, s.points.len());
    }
}

#[test]
fn file_errors_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "x1,x2,weight\n1,2,0.5\n1,abc,0.5").unwrap();
    let err = load_csv(&path).unwrap_err().to_string();
    assert!(err.contains('3'), "{err}");
    let missing = dir.path().join("nope.csv");
    assert!(load_csv(&missing).is_err());
    std::fs::write(&path, "x1,weight\n1,1\n").unwrap();
    let err = load_csv(&path).unwrap_err().to_string();
    assert!(err.contains("x2"), "{err}");
}
