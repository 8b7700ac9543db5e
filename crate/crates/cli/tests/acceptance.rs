//! Acceptance criteria C1-C12, one line each.
//!
//! Criteria in `KNOWN_FAILURES` are evaluated at full strength like the rest;
//! their failure is reported but does not fail the run. Any other failure, or
//! a known failure that starts passing, exits nonzero.

use std::process::Command;
use std::time::Instant;

use bgrd_core::bounds::{binary_entropy, binomial_exponent, gaussian_rd, lower_bound_trivial, upper_bound_1};
use bgrd_core::channel::{run_channel_experiment, ChannelConfig};
use bgrd_core::codec::{run_codec, CodecConfig};
use bgrd_core::minimax::{bound_set, improved_lower_bound, improvement_ri, inner_min, MinimaxConfig};
use bgrd_core::oracle::{brute_force_inner_min, BruteForceConfig};
use bgrd_core::rng::Stream;
use bgrd_core::special::{quadrature_oracle, std_normal_pdf, truncated_moment, Interval};
use bgrd_core::typicality::concentration_experiment;
use rayon::prelude::*;

const KNOWN_FAILURES: &[u32] = &[3, 11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_gaussian_rd() -> Outcome {
    let unit = gaussian_rd(0.25, 1.0).unwrap();
    let worst = [0.01, 0.5, 1.0, 2.5, 40.0]
        .iter()
        .map(|&s2| gaussian_rd(s2, s2).unwrap().abs())
        .fold(0.0, f64::max);
    outcome((unit - 1.0).abs() <= 1e-12 && worst <= 1e-12, format!("R(0.25,1)={unit}, max |R(s2,s2)|={worst:e}"))
}

fn c2_entropy_gap() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let d = 10f64.powf(-4.0 + 4.0 * i as f64 / 9.0);
            let p = 0.02 + 0.88 * j as f64 / 9.0;
            let gap = upper_bound_1(d, p).unwrap() - lower_bound_trivial(d, p).unwrap();
            worst = worst.max((gap - binary_entropy(p).unwrap()).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |gap - H(p)| = {worst:e} over 100 points"))
}

fn c3_asymptote() -> Outcome {
    let cfg = MinimaxConfig::default();
    let rows: Vec<(f64, f64, f64)> = [0.01, 0.05, 0.1, 0.25]
        .par_iter()
        .map(|&p| {
            let ri = improvement_ri(1e-6, p, &cfg).unwrap().ri;
            (p, ri, p * (1.0 / p).log2() - ri)
        })
        .collect();
    let pass = rows.iter().all(|r| r.2.abs() <= 0.02);
    let detail = rows.iter().map(|(p, ri, gap)| format!("p={p}: ri={ri:.6} gap={gap:.5}")).collect::<Vec<_>>().join("; ");
    outcome(pass, detail)
}

fn c4_monotone() -> Outcome {
    let cfg = MinimaxConfig::default();
    let ds: Vec<f64> = (0..60).map(|i| 1e-6 * (0.1f64 / 1e-6).powf(i as f64 / 59.0)).collect();
    let ri: Vec<f64> = ds.par_iter().map(|&d| improvement_ri(d, 0.1, &cfg).unwrap().ri).collect();
    let worst = ri.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    outcome(worst <= 1e-5, format!("largest increase {worst:e} over 60 points"))
}

fn c5_ordering() -> Outcome {
    let cfg = MinimaxConfig::default();
    let slack: Vec<f64> = (0..40)
        .into_par_iter()
        .map(|i| {
            let d = 0.005 + 0.095 * i as f64 / 39.0;
            match bound_set(d, 0.1, &cfg) {
                Ok(b) => b.lb_improved - b.ub1.min(b.ub2),
                Err(_) => f64::INFINITY,
            }
        })
        .collect();
    let worst = slack.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(worst <= 1e-9, format!("max lb_improved - min(ub1, ub2) = {worst:e}"))
}

fn c6_oracle() -> Outcome {
    let mut rng = Stream::new(6, &[]);
    let triples: Vec<(f64, f64, f64)> = (0..50)
        .map(|_| (3.0 * rng.uniform(), 10f64.powf(-4.0 + 3.3 * rng.uniform()), 0.02 + 0.48 * rng.uniform()))
        .collect();
    let cfg = MinimaxConfig::default();
    let worst = triples
        .par_iter()
        .map(|&(l, d, p)| {
            let slow = brute_force_inner_min(l, d, p, &BruteForceConfig::default()).unwrap().value;
            (inner_min(l, d, p, &cfg).unwrap().value - slow).abs()
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-4, format!("max |shortcut - brute force| = {worst:e} over 50 triples"))
}

fn c7_moments() -> Outcome {
    let mut rng = Stream::new(7, &[]);
    let cases: Vec<(u32, f64, f64)> = (0..1000)
        .map(|i| {
            let a = -7.0 + 14.0 * rng.uniform();
            (i % 3, a, a + 7.0 * rng.uniform())
        })
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(l, a, b)| {
            let iv = Interval::new(a, b).unwrap();
            let quad = quadrature_oracle(|s| s.powi(l as i32) * std_normal_pdf(s), iv, 1e-13).unwrap();
            (truncated_moment(l, iv).unwrap() - quad).abs()
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-10, format!("max |closed form - quadrature| = {worst:e} over 1000 cases"))
}

fn c8_exponent_monotone() -> Outcome {
    let mut rng = Stream::new(8, &[]);
    let mut checked = 0;
    let mut violations = 0;
    while checked < 10_000 {
        let (u, v, p) = (rng.uniform(), rng.uniform(), 0.01 + 0.98 * rng.uniform());
        if u / (u + v) <= p {
            continue;
        }
        checked += 1;
        let f = binomial_exponent(u, v, p).unwrap();
        let du = binomial_exponent(u * (1.0 + 1e-3), v, p).unwrap();
        let dv = binomial_exponent(u, v * (1.0 + 1e-3), p).unwrap();
        if !(du > f && dv < f) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations in {checked} triples"))
}

fn c9_codec() -> Outcome {
    let r = run_codec(&CodecConfig::new(10_000, 0.1, 0.025, 9), 100).unwrap();
    let d = r.empirical_distortion;
    let lb = improved_lower_bound(d, 0.1, &MinimaxConfig::default()).unwrap();
    let ub = upper_bound_1(d, 0.1).unwrap() + 0.255 * 0.1 + 0.05;
    let rate = r.empirical_rate;
    outcome(
        rate >= lb - 1e-6 && rate <= ub,
        format!("rate={rate:.5} at D={d:.5}; lb_improved={lb:.5}, ub1+slack={ub:.5}"),
    )
}

fn c10_concentration() -> Outcome {
    let rows = concentration_experiment(&[100, 1000, 10_000], 0.05, 200, 7, 80, 0.1).unwrap();
    let f: Vec<f64> = rows.iter().map(|r| r.fraction_typical).collect();
    let slack = 2.0 / 200f64.sqrt();
    outcome(f.windows(2).all(|w| w[1] >= w[0] - slack), format!("fraction typical {f:?}"))
}

fn c11_channel() -> Outcome {
    let (p, d) = (0.1, 0.01);
    let w = improvement_ri(d, p, &MinimaxConfig::default()).unwrap();
    let l = w.witness.score_threshold;
    let run = |n: usize, factor: f64| run_channel_experiment(&ChannelConfig::new(n, p, factor * w.ri, l, d, 500, 11)).unwrap();
    let low = run(1000, 0.5);
    let high = run(1000, 2.0);
    let by_n: Vec<f64> = [200, 500, 1000].iter().map(|&n| run(n, 0.5).error_rate).collect();
    let threshold = low.error_rate < high.error_rate;
    let decreasing = by_n.windows(2).all(|x| x[1] <= x[0]);
    outcome(
        threshold && decreasing,
        format!(
            "n=1000 error {} at 0.5R vs {} at 2R (margin mean {:.1} vs {:.1}); error at 0.5R by n {by_n:?}",
            low.error_rate, high.error_rate, low.score_margin.mean, high.score_margin.mean
        ),
    )
}

fn c12_determinism() -> Outcome {
    let commands: &[&[&str]] = &[
        &["bounds", "--points", "4"],
        &["ri", "--points", "3", "--d-min", "1e-4"],
        &["simulate-codec", "--n", "2000", "--blocks", "4", "--seed", "5"],
        &["simulate-channel", "--n", "300", "--trials", "20", "--seed", "5"],
        &["typicality", "--n-values", "100,1000", "--trials", "20", "--seed", "5"],
        &["typicality", "--n-values", "100", "--trials", "20", "--seed", "5", "--format", "json"],
    ];
    let bin = env!("CARGO_BIN_EXE_bgrd");
    let run = |args: &[&str]| Command::new(bin).args(args).output().expect("run bgrd");
    let mut differing = Vec::new();
    for args in commands {
        let a = run(args);
        let b = run(args);
        if !a.status.success() || a.stdout != b.stdout || a.stdout.is_empty() {
            differing.push(args[0]);
        }
    }
    outcome(differing.is_empty(), format!("{} commands run twice; differing: {differing:?}", commands.len()))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "Gaussian R(D) exactness", c1_gaussian_rd),
        (2, "H(p) gap identity", c2_entropy_gap),
        (3, "small-distortion asymptote", c3_asymptote),
        (4, "improvement monotone in D", c4_monotone),
        (5, "bound ordering on the p=0.1 grid", c5_ordering),
        (6, "shortcut matches 2-D brute force", c6_oracle),
        (7, "truncated moments vs quadrature", c7_moments),
        (8, "binomial exponent monotonicity", c8_exponent_monotone),
        (9, "codec sandwich", c9_codec),
        (10, "typicality concentration", c10_concentration),
        (11, "channel threshold behaviour", c11_channel),
        (12, "determinism", c12_determinism),
    ];

    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let known = KNOWN_FAILURES.contains(&id);
        let status = match (o.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected)",
        };
        if o.pass == known {
            unexpected.push(id);
        }
        println!("C{id:<2} {status:<17} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), o.detail);
    }
    if !unexpected.is_empty() {
        println!("unexpected results for {unexpected:?}");
        std::process::exit(1);
    }
}
