use graphcd::detect::*;
use graphcd::graph::{build_graph, AffinityMode};
use graphcd::imaging::{FeatureMatrix, PixelGrid, SuperpixelMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn di_from_pixels(h: usize, w: usize, values: Vec<f64>) -> DifferenceImage {
    let map = SuperpixelMap::from_labels(h, w, (0..h * w).collect()).unwrap();
    DifferenceImage::from_vertex_values(values, &map).unwrap()
}

/// Exact between-class comparison in integers:
/// sigma_B(t) proportional to (w1 S0 - w0 S1)^2 / (w0 w1).
fn otsu_oracle(hist: &[u64; 256]) -> usize {
    let mut best: Option<(u128, u128, usize)> = None;
    for t in 1..256 {
        let w0: u128 = hist[..t].iter().map(|&h| h as u128).sum();
        let w1: u128 = hist[t..].iter().map(|&h| h as u128).sum();
        let s0: i128 = hist[..t]
            .iter()
            .enumerate()
            .map(|(b, &h)| (b as u64 * h) as i128)
            .sum();
        let s1: i128 = hist[t..]
            .iter()
            .enumerate()
            .map(|(b, &h)| ((b + t) as u64 * h) as i128)
            .sum();
        let (num, den) = if w0 == 0 || w1 == 0 {
            (0u128, 1u128)
        } else {
            let d = w1 as i128 * s0 - w0 as i128 * s1;
            ((d * d) as u128, w0 * w1)
        };
        let better = match best {
            None => true,
            Some((bn, bd, _)) => num * bd > bn * den,
        };
        if better {
            best = Some((num, den, t));
        }
    }
    best.unwrap().2
}

#[test]
fn otsu_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let mut hist = [0u64; 256];
        let modes = rng.random_range(1..4);
        for _ in 0..modes {
            let c = rng.random_range(0..256i64);
            let spread = rng.random_range(1..40i64);
            for _ in 0..rng.random_range(10..400) {
                let b = (c + rng.random_range(-spread..=spread)).clamp(0, 255);
                hist[b as usize] += 1;
            }
        }
        assert_eq!(otsu_cut(&hist), otsu_oracle(&hist), "{hist:?}");
    }
}

#[test]
fn otsu_splits_two_levels() {
    let mut values = vec![0.1; 12];
    values.extend(vec![0.9; 4]);
    let seg = segment_threshold(&di_from_pixels(4, 4, values), ThresholdMethod::Otsu).unwrap();
    assert!(!seg.degenerate);
    assert_eq!(seg.map.labels, [vec![0u8; 12], vec![1u8; 4]].concat());
    assert!(seg.threshold > 0.1 && seg.threshold <= 0.9);
}

#[test]
fn constant_di_is_degenerate() {
    for method in [ThresholdMethod::Otsu, ThresholdMethod::KMeans2] {
        let seg = segment_threshold(&di_from_pixels(2, 2, vec![0.3; 4]), method).unwrap();
        assert!(seg.degenerate);
        assert_eq!(seg.map.changed_count(), 0);
    }
}

#[test]
fn kmeans2_hand_example() {
    // Centers start at 0 and 10; {0, 1, 2} vs {9, 10} is stable after one
    // update with means 1 and 9.5, boundary 5.25.
    let di = di_from_pixels(1, 5, vec![0.0, 1.0, 2.0, 9.0, 10.0]);
    let seg = segment_threshold(&di, ThresholdMethod::KMeans2).unwrap();
    assert_eq!(seg.map.labels, vec![0, 0, 0, 1, 1]);
    assert!((seg.threshold - 5.25).abs() < 1e-12);
}

#[test]
fn confusion_hand_example() {
    let cm = ChangeMap::new(2, 4, vec![1, 1, 0, 0, 1, 0, 0, 0]).unwrap();
    let truth = ChangeMap::new(2, 4, vec![1, 0, 0, 0, 1, 1, 0, 0]).unwrap();
    let r = confusion_report(&cm, &truth).unwrap();
    assert_eq!((r.tp, r.fp, r.tn, r.fn_), (2, 1, 4, 1));
    assert!((r.oa - 0.75).abs() < 1e-15);
    // p_e = (3*3 + 5*5) / 64, kappa = (0.75 - p_e) / (1 - p_e) = 7/15.
    assert!((r.kappa - 7.0 / 15.0).abs() < 1e-14);
    assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn perfect_agreement_on_single_class_has_unit_kappa() {
    let cm = ChangeMap::new(1, 3, vec![0, 0, 0]).unwrap();
    let r = evaluate(&cm, &cm, &[0.1, 0.2, 0.3]).unwrap();
    assert_eq!(r.kappa, 1.0);
    assert_eq!(r.aur, None);
    assert_eq!(r.aup, None);
    let json = r.to_json();
    assert!(!json.contains("aur") && json.contains("\"fn\": 0"));
}

#[test]
fn curve_areas_hand_example() {
    let truth = ChangeMap::new(1, 4, vec![1, 0, 1, 0]).unwrap();
    let scores = [0.9, 0.8, 0.7, 0.6];
    let cm = ChangeMap::new(1, 4, vec![1, 1, 0, 0]).unwrap();
    let r = evaluate(&cm, &truth, &scores).unwrap();
    assert!((r.aur.unwrap() - 0.75).abs() < 1e-15);
    // Precision-recall points (0.5, 1), (0.5, 1/2), (1, 2/3), (1, 1/2).
    assert!((r.aup.unwrap() - (0.5 + 0.25 * (0.5 + 2.0 / 3.0))).abs() < 1e-15);
    let csv = curves_csv(&threshold_sweep(&scores, &truth.labels).unwrap());
    assert_eq!(
        csv.lines().next().unwrap(),
        "threshold,fpr,tpr,precision,recall"
    );
    assert_eq!(csv.lines().count(), 5);
}

/// Probability that a random positive outscores a random negative, ties 1/2.
fn mann_whitney(scores: &[f64], truth: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if truth[i] == 1 && truth[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

proptest! {
    #[test]
    fn aur_equals_rank_statistic(
        data in prop::collection::vec((0u8..20, any::<bool>()), 2..60)
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64).collect();
        let truth: Vec<u8> = data.iter().map(|(_, t)| u8::from(*t)).collect();
        prop_assume!(truth.contains(&0) && truth.contains(&1));
        let pts = threshold_sweep(&scores, &truth).unwrap();
        prop_assert!((area_under_roc(&pts) - mann_whitney(&scores, &truth)).abs() < 1e-12);
    }

    #[test]
    fn aur_invariant_under_monotone_maps(
        data in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..60)
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| *s).collect();
        let truth: Vec<u8> = data.iter().map(|(_, t)| u8::from(*t)).collect();
        prop_assume!(truth.contains(&0) && truth.contains(&1));
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 2.0).collect();
        let a = area_under_roc(&threshold_sweep(&scores, &truth).unwrap());
        let b = area_under_roc(&threshold_sweep(&mapped, &truth).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn difference_image_paints_row_norms() {
    let map = SuperpixelMap::from_labels(2, 2, vec![0, 0, 1, 1]).unwrap();
    let delta = FeatureMatrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
    let di = difference_image(&delta, &map).unwrap();
    assert_eq!(di.per_vertex, vec![5.0, 0.0]);
    assert_eq!(di.per_pixel.data, vec![5.0, 5.0, 0.0, 0.0]);
    let bad = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
    assert!(difference_image(&bad, &map).is_err());
}

#[test]
fn vdf_shifts_agree_and_vanish_on_identical_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = FeatureMatrix::from_fn(40, 3, |_, _| rng.random::<f64>()).unwrap();
    let b = FeatureMatrix::from_fn(40, 2, |_, _| rng.random::<f64>()).unwrap();
    let g1 = build_graph(&a, 6, AffinityMode::L2).unwrap();
    let g2 = build_graph(&b, 6, AffinityMode::L2).unwrap();
    let y = FeatureMatrix::from_fn(40, 5, |i, j| ((i * 7 + j * 3) % 11) as f64).unwrap();
    let lap = vdf_difference(&y, &g1, &g2, VdfShift::Laplacian).unwrap();
    let avg = vdf_difference(&y, &g1, &g2, VdfShift::Average).unwrap();
    for (l, a) in lap.iter().zip(&avg) {
        assert!((l - a).abs() <= 1e-12 * (1.0 + a.abs()));
    }
    assert!(lap.iter().any(|&v| v > 1e-3));
    let same = vdf_difference(&y, &g1, &g1, VdfShift::Laplacian).unwrap();
    assert!(same.iter().all(|&v| v == 0.0));
}

#[test]
fn pixel_grid_shape_is_checked() {
    assert!(PixelGrid::new(2, 2, vec![0.0; 3]).is_err());
    assert!(ChangeMap::new(1, 2, vec![0, 2]).is_err());
}

#[test]
fn all_negative_prediction_with_ten_percent_positives() {
    let truth: Vec<u8> = (0..100).map(|i| u8::from(i < 10)).collect();
    let truth = ChangeMap::new(10, 10, truth).unwrap();
    let cm = ChangeMap::new(10, 10, vec![0; 100]).unwrap();
    let scores: Vec<f64> = truth.labels.iter().map(|&t| t as f64).collect();
    let r = evaluate(&cm, &truth, &scores).unwrap();
    assert!((r.oa - 0.9).abs() < 1e-15);
    assert_eq!(r.f1, 0.0);
    assert!(r.kappa.abs() < 1e-15);
    assert_eq!(r.aur, Some(1.0));
    assert_eq!(r.aup, Some(1.0));
    let perfect = evaluate(&truth, &truth, &scores).unwrap();
    assert_eq!((perfect.oa, perfect.kappa, perfect.f1), (1.0, 1.0, 1.0));
}

#[test]
fn otsu_recovers_high_cluster_under_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..100)
        .map(|i| if i % 10 == 0 { 1.0 } else { 0.0 } + rng.random_range(0.0..0.01))
        .collect();
    let expected: Vec<u8> = (0..100).map(|i| u8::from(i % 10 == 0)).collect();
    let seg = segment_threshold(&di_from_pixels(10, 10, values), ThresholdMethod::Otsu).unwrap();
    assert_eq!(seg.map.labels, expected);
}

#[test]
fn reprojected_mass_matches_region_sizes() {
    let map = SuperpixelMap::from_labels(2, 3, vec![0, 0, 1, 2, 2, 2]).unwrap();
    let di = DifferenceImage::from_vertex_values(vec![0.5, 2.0, 1.0], &map).unwrap();
    let mass: f64 = di.per_pixel.data.iter().sum();
    assert_eq!(mass, 2.0 * 0.5 + 2.0 + 3.0 * 1.0);
}
