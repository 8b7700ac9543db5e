use bgrd_core::minimax::{bound_set, improvement_ri, inner_min, MinimaxConfig};
use bgrd_core::oracle::{brute_force_inner_min, BruteForceConfig};
use bgrd_core::rng::Stream;
use rayon::prelude::*;

#[test]
fn reduced_inner_search_matches_brute_force() {
    let mut rng = Stream::new(31, &[]);
    let triples: Vec<(f64, f64, f64)> = (0..12)
        .map(|_| (3.0 * rng.uniform(), 10f64.powf(-4.0 + 3.3 * rng.uniform()), 0.02 + 0.48 * rng.uniform()))
        .collect();
    let cfg = MinimaxConfig::default();
    triples.par_iter().for_each(|&(l, d, p)| {
        let slow = brute_force_inner_min(l, d, p, &BruteForceConfig::default()).unwrap();
        let fast = inner_min(l, d, p, &cfg).unwrap();
        // The grid can only overestimate a minimum.
        assert!(fast.value <= slow.value + 1e-9, "({l}, {d}, {p})");
        assert!(slow.value - fast.value < 1e-4, "({l}, {d}, {p}): {} vs {}", fast.value, slow.value);
    });
}

#[test]
fn improvement_regression_values() {
    // Recorded after cross-checking each witness against the brute force.
    let cfg = MinimaxConfig::default();
    for &(d, ri) in &[(0.005, 0.079_501_85), (0.01, 0.041_268_72), (0.025, 0.004_496_57)] {
        let r = improvement_ri(d, 0.1, &cfg).unwrap();
        assert!((r.ri - ri).abs() < 1e-6, "D={d}: {}", r.ri);
        let check = brute_force_inner_min(r.witness.score_threshold, d, 0.1, &BruteForceConfig::default()).unwrap();
        assert!((check.value - r.ri).abs() < 1e-4);
    }
    assert_eq!(improvement_ri(0.05, 0.1, &cfg).unwrap().ri, 0.0);
}

#[test]
fn improvement_is_monotone_in_distortion() {
    let cfg = MinimaxConfig::default();
    let ds: Vec<f64> = (0..20).map(|i| 10f64.powf(-5.0 + 4.0 * i as f64 / 19.0)).collect();
    let ri: Vec<f64> = ds.par_iter().map(|&d| improvement_ri(d, 0.1, &cfg).unwrap().ri).collect();
    for w in ri.windows(2) {
        assert!(w[1] <= w[0] + 1e-5, "{w:?}");
    }
}

#[test]
fn improved_bound_stays_below_upper_bounds() {
    let cfg = MinimaxConfig::default();
    (0..12).into_par_iter().for_each(|i| {
        let d = 0.005 + 0.095 * i as f64 / 11.0;
        let b = bound_set(d, 0.1, &cfg).unwrap();
        assert!(b.lb_improved <= b.ub1.min(b.ub2) + 1e-9);
        assert!(b.lb_trivial <= b.lb_improved);
    });
}

#[test]
fn small_p_approaches_its_asymptote() {
    let r = improvement_ri(1e-6, 0.01, &MinimaxConfig::default()).unwrap();
    let target = 0.01 * 100f64.log2();
    assert!(r.ri < target);
    assert!(target - r.ri < 0.02);
}
