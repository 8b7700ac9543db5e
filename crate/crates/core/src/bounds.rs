//! Closed-form rate-distortion quantities. Everything is in bits.
//!
//! Bounds are stated for the unit-variance source; [`scale_reduce`] maps a
//! general `(p, sigma2)` source and distortion onto that normalized point.

use serde::Serialize;

use crate::error::{check_open_probability, check_positive, check_probability, invalid, Result};

/// Bernoulli-Gaussian source: nonzero with probability `p`, nonzero values
/// drawn from `N(0, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceModel {
    p: f64,
    sigma2: f64,
}

impl SourceModel {
    pub fn new(p: f64, sigma2: f64) -> Result<Self> {
        check_open_probability("p", p)?;
        check_positive("sigma2", sigma2)?;
        if !sigma2.is_finite() {
            return Err(invalid("sigma2", sigma2, "must be finite"));
        }
        Ok(Self { p, sigma2 })
    }

    pub fn unit(p: f64) -> Result<Self> {
        Self::new(p, 1.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// Rate-distortion function of `N(0, sigma2)` under squared error.
pub fn gaussian_rd(distortion: f64, sigma2: f64) -> Result<f64> {
    check_positive("D", distortion)?;
    check_positive("sigma2", sigma2)?;
    if distortion >= sigma2 {
        Ok(0.0)
    } else {
        Ok(0.5 * (sigma2 / distortion).log2())
    }
}

/// `q * log2(q / r)` with the `0 log 0 = 0` convention.
#[inline]
fn xlog2_ratio(q: f64, r: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        q * (q / r).log2()
    }
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(-xlog2_ratio(p, 1.0) - xlog2_ratio(1.0 - p, 1.0))
}

/// `D(q || p)` between Bernoulli distributions.
pub fn binary_kl(q: f64, p: f64) -> Result<f64> {
    check_probability("q", q)?;
    check_open_probability("p", p)?;
    let d = xlog2_ratio(q, p) + xlog2_ratio(1.0 - q, 1.0 - p);
    // Rounding can leave a tiny negative value when q is within an ulp of p.
    Ok(d.max(0.0))
}

/// Maps `(source, D)` onto the unit-variance problem: returns `(p, D / sigma2)`.
pub fn scale_reduce(model: SourceModel, distortion: f64) -> Result<(f64, f64)> {
    check_positive("D", distortion)?;
    Ok((model.p, distortion / model.sigma2))
}

/// Lossless support plus Gaussian coding of the nonzero values:
/// `H(p) + p R(D/p, N(0,1))`.
pub fn upper_bound_1(distortion: f64, p: f64) -> Result<f64> {
    check_open_probability("p", p)?;
    Ok(binary_entropy(p)? + p * gaussian_rd(distortion / p, 1.0)?)
}

/// Treat the source as Gaussian with the same variance: `R(D, N(0, p))`.
pub fn upper_bound_2(distortion: f64, p: f64) -> Result<f64> {
    check_open_probability("p", p)?;
    gaussian_rd(distortion, p)
}

/// Genie-aided support: `p R(D, N(0, p))`.
pub fn lower_bound_trivial(distortion: f64, p: f64) -> Result<f64> {
    check_open_probability("p", p)?;
    Ok(p * gaussian_rd(distortion, p)?)
}

/// Binomial large-deviation exponent `(u + v) D(u / (u + v) || p)`.
///
/// Zero when `u / (u + v) <= p`, where confusing a random codeword costs
/// nothing exponentially. `u` and `v` are real so the optimizer can use the
/// continuum relaxation.
pub fn binomial_exponent(u: f64, v: f64, p: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(invalid("u", u, "must be nonnegative"));
    }
    if v.is_nan() || v < 0.0 {
        return Err(invalid("v", v, "must be nonnegative"));
    }
    check_open_probability("p", p)?;
    if u + v <= 0.0 {
        return Err(invalid("u + v", u + v, "must be strictly positive"));
    }
    Ok(exponent_unchecked(u, v, p))
}

/// [`binomial_exponent`] without argument checks; zero when `u + v == 0`.
#[inline]
pub(crate) fn exponent_unchecked(u: f64, v: f64, p: f64) -> f64 {
    let weight = u + v;
    if weight <= 0.0 {
        return 0.0;
    }
    let ratio = u / weight;
    if ratio <= p {
        return 0.0;
    }
    let d = xlog2_ratio(ratio, p) + xlog2_ratio(1.0 - ratio, 1.0 - p);
    weight * d.max(0.0)
}
