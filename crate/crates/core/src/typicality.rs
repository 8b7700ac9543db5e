//! Typical-set checkers for Gaussian and Bernoulli sequences.
//!
//! A Gaussian sequence is typical when, for every interval `[S, T]` and each
//! `l` in `{0, 1, 2}`, the empirical truncated moment is within `epsilon` of
//! the `N(0, 1)` truncated moment. The supremum over intervals is taken over
//! endpoints on the grid `j * omega`, `|j| <= K`, plus `+-inf`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_open_probability, check_positive, invalid, Error, Result};
use crate::rng::{domain, Stream};
use crate::special::{truncated_moment, Interval};

pub const DEFAULT_GRID_HALF_WIDTH: u32 = 80;
pub const DEFAULT_GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalityReport {
    pub n: usize,
    pub epsilon: f64,
    /// Sup over grid intervals `[S, T]`, indexed by moment order.
    pub sup_deviation: [f64; 3],
    /// Sup over upper tails `[T, inf)`, indexed by moment order.
    pub one_sided_deviation: [f64; 3],
    pub is_typical: bool,
    pub endpoints_checked: usize,
    /// Largest theoretical moment mass carried by one grid cell; bounds what
    /// the grid can miss relative to continuous endpoints.
    pub cell_mass_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub fraction_typical: f64,
    pub seed: u64,
}

fn pow_l(x: f64, l: u32) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => x * x,
    }
}

/// `(1/n) * sum of s_i^l over s_i in iv`.
pub fn empirical_moment(s: &[f64], l: u32, iv: Interval) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    if l > 2 {
        return Err(invalid("l", l as f64, "moment order must be 0, 1 or 2"));
    }
    let sum: f64 = s.iter().filter(|&&x| iv.contains(x)).map(|&x| pow_l(x, l)).sum();
    Ok(sum / s.len() as f64)
}

fn grid_endpoints(k: u32, omega: f64) -> Vec<f64> {
    let k = k as i64;
    let mut e = Vec::with_capacity(2 * k as usize + 3);
    e.push(f64::NEG_INFINITY);
    e.extend((-k..=k).map(|j| j as f64 * omega));
    e.push(f64::INFINITY);
    e
}

fn validate_grid(omega: f64) -> Result<()> {
    check_positive("omega", omega)?;
    if !omega.is_finite() {
        return Err(invalid("omega", omega, "must be finite"));
    }
    Ok(())
}

/// Largest `|truncated_moment(l, cell)|` over grid cells, including the two
/// unbounded outer cells.
fn cell_mass_bound(endpoints: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for w in endpoints.windows(2) {
        let iv = Interval::new(w[0], w[1])?;
        for l in 0..3 {
            worst = worst.max(truncated_moment(l, iv)?.abs());
        }
    }
    Ok(worst)
}

pub fn gaussian_typicality(s: &[f64], epsilon: f64, k: u32, omega: f64) -> Result<TypicalityReport> {
    check_positive("epsilon", epsilon)?;
    validate_grid(omega)?;
    if s.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    if s.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("sequence contains NaN".into()));
    }

    let n = s.len();
    let inv_n = 1.0 / n as f64;
    let mut sorted = s.to_vec();
    sorted.sort_by(f64::total_cmp);

    // prefix[l][i] = sum of the i smallest samples raised to l.
    let mut prefix = [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]];
    for (i, &x) in sorted.iter().enumerate() {
        for l in 0..3 {
            prefix[l][i + 1] = prefix[l][i] + pow_l(x, l as u32);
        }
    }

    let endpoints = grid_endpoints(k, omega);
    let g = endpoints.len();
    // Sample counts strictly below and at-or-below each endpoint.
    let below: Vec<usize> = endpoints.iter().map(|&e| sorted.partition_point(|&x| x < e)).collect();
    let upto: Vec<usize> = endpoints.iter().map(|&e| sorted.partition_point(|&x| x <= e)).collect();
    // Theoretical moment of (-inf, e].
    let mut cum = [vec![0.0; g], vec![0.0; g], vec![0.0; g]];
    for (j, &e) in endpoints.iter().enumerate() {
        let iv = Interval::new(f64::NEG_INFINITY, e)?;
        for l in 0..3 {
            cum[l][j] = truncated_moment(l as u32, iv)?;
        }
    }

    let mut sup = [0.0f64; 3];
    let mut checked = 0usize;
    for a in 0..g {
        for b in a..g {
            checked += 1;
            for l in 0..3 {
                let emp = (prefix[l][upto[b]] - prefix[l][below[a]]) * inv_n;
                let theo = cum[l][b] - cum[l][a];
                sup[l] = sup[l].max((emp - theo).abs());
            }
        }
    }

    let mut one_sided = [0.0f64; 3];
    for a in 0..g {
        for l in 0..3 {
            let emp = (prefix[l][n] - prefix[l][below[a]]) * inv_n;
            let theo = cum[l][g - 1] - cum[l][a];
            one_sided[l] = one_sided[l].max((emp - theo).abs());
        }
    }

    let worst = sup.iter().copied().fold(0.0, f64::max);
    Ok(TypicalityReport {
        n,
        epsilon,
        sup_deviation: sup,
        one_sided_deviation: one_sided,
        is_typical: worst < epsilon,
        endpoints_checked: checked,
        cell_mass_bound: cell_mass_bound(&endpoints)?,
    })
}

/// `|ones / n - p| <= epsilon`.
pub fn bernoulli_typicality(b: &[bool], p: f64, epsilon: f64) -> Result<bool> {
    if b.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    check_open_probability("p", p)?;
    check_positive("epsilon", epsilon)?;
    let ones = b.iter().filter(|&&x| x).count();
    Ok((ones as f64 / b.len() as f64 - p).abs() <= epsilon)
}

/// Fraction of i.i.d. `N(0, 1)` draws of each length that are typical.
pub fn concentration_experiment(
    n_values: &[usize],
    epsilon: f64,
    trials: usize,
    seed: u64,
    k: u32,
    omega: f64,
) -> Result<Vec<ConcentrationRow>> {
    check_positive("epsilon", epsilon)?;
    validate_grid(omega)?;
    if trials == 0 {
        return Err(invalid("trials", 0.0, "must be at least 1"));
    }
    if n_values.contains(&0) {
        return Err(invalid("n", 0.0, "must be at least 1"));
    }

    n_values
        .iter()
        .map(|&n| {
            let typical = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = Stream::new(seed, &[domain::TYPICALITY, n as u64, t as u64]);
                    let s: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
                    gaussian_typicality(&s, epsilon, k, omega).map(|r| r.is_typical as usize)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum::<usize>();
            Ok(ConcentrationRow {
                n,
                epsilon,
                trials,
                fraction_typical: typical as f64 / trials as f64,
                seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: u32 = DEFAULT_GRID_HALF_WIDTH;
    const W: f64 = DEFAULT_GRID_STEP;

    #[test]
    fn moment_examples() {
        let s = [1.0, -1.0, 2.0];
        assert_eq!(empirical_moment(&s, 0, Interval::REAL_LINE).unwrap(), 1.0);
        assert_eq!(empirical_moment(&s, 1, Interval::upper_tail(0.0).unwrap()).unwrap(), 1.0);
        let neg = Interval::new(f64::NEG_INFINITY, 0.0).unwrap();
        assert!((empirical_moment(&s, 2, neg).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(empirical_moment(&[], 0, Interval::REAL_LINE).is_err());
        assert!(empirical_moment(&s, 3, Interval::REAL_LINE).is_err());
    }

    #[test]
    fn constant_sequence_is_atypical() {
        let r = gaussian_typicality(&[0.0; 500], 0.02, K, W).unwrap();
        assert!(!r.is_typical);
        assert!(r.sup_deviation[0] > 0.45);
    }

    #[test]
    fn empty_tail_deviation_is_theoretical_mass() {
        let s = [0.1, -0.3, 0.7, 1.2];
        let r = gaussian_typicality(&s, 1.0, 20, 0.5).unwrap();
        let tail = truncated_moment(0, Interval::upper_tail(2.0).unwrap()).unwrap();
        assert!(r.one_sided_deviation[0] >= tail);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gaussian_typicality(&[0.0], 0.0, K, W).is_err());
        assert!(gaussian_typicality(&[0.0], 0.1, K, 0.0).is_err());
        assert!(gaussian_typicality(&[], 0.1, K, W).is_err());
        assert!(concentration_experiment(&[10], 0.1, 0, 1, K, W).is_err());
    }

    #[test]
    fn grid_size_and_cell_bound() {
        let r = gaussian_typicality(&[0.3, -0.2], 0.5, K, W).unwrap();
        let g = 2 * K as usize + 3;
        assert_eq!(r.endpoints_checked, g * (g + 1) / 2);
        // The widest-mass cell is [0, omega] for the zeroth moment.
        let centre = truncated_moment(0, Interval::new(0.0, W).unwrap()).unwrap();
        assert_eq!(r.cell_mass_bound, centre);
    }

    #[test]
    fn bernoulli_examples() {
        assert!(!bernoulli_typicality(&[true; 50], 0.1, 0.05).unwrap());
        let mut b = vec![false; 100];
        b[..10].iter_mut().for_each(|x| *x = true);
        assert!(bernoulli_typicality(&b, 0.1, 1e-9).unwrap());
        assert!(bernoulli_typicality(&[], 0.1, 0.05).is_err());
    }

    #[test]
    fn concentration_limits() {
        let rows = concentration_experiment(&[50], 10.0, 20, 3, K, W).unwrap();
        assert_eq!(rows[0].fraction_typical, 1.0);
        let rows = concentration_experiment(&[1], 0.01, 50, 3, K, W).unwrap();
        assert_eq!(rows[0].fraction_typical, 0.0);
    }
}
