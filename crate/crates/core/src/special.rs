//! Standard normal machinery: density, tails, truncated moments, and an
//! adaptive quadrature that serves as an independent check on the closed
//! forms.
//!
//! Tail probabilities are always formed from `erfc` directly, never as
//! `1 - cdf`, so they keep full relative accuracy far out in the tail.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid, Error, Result};

/// 1 / sqrt(2 pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Infinite quadrature limits are replaced by this magnitude. The normal
/// tail beyond it is below 1e-300.
pub const QUADRATURE_TRUNCATION: f64 = 40.0;

/// A closed interval on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInput("interval endpoint is NaN".into()));
        }
        if lo > hi {
            return Err(Error::InvalidInput(format!(
                "interval lower end {lo} exceeds upper end {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, +inf]`
    pub fn upper_tail(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[inline]
pub fn std_normal_pdf(s: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * s * s).exp()
}

/// `Pr(N(0,1) <= x)`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `Pr(N(0,1) > x)`.
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Pr(|N(0,1)| > threshold)` for a nonnegative threshold.
pub fn tail_prob(threshold: f64) -> Result<f64> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(invalid(
            "threshold",
            threshold,
            "two-sided tail needs a nonnegative threshold",
        ));
    }
    Ok(libm::erfc(threshold * FRAC_1_SQRT_2))
}

/// Normal mass of `[a, b]`, choosing the complement that avoids cancellation.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else if b <= 0.0 {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        1.0 - std_normal_cdf(a) - std_normal_sf(b)
    }
}

/// `s * phi(s)`, taken as zero at the infinities.
#[inline]
fn s_pdf(s: f64) -> f64 {
    if s.is_infinite() {
        0.0
    } else {
        s * std_normal_pdf(s)
    }
}

/// Integral of `s^order * phi(s)` over `iv`, for orders 0, 1 and 2.
pub fn truncated_moment(order: u32, iv: Interval) -> Result<f64> {
    let (a, b) = (iv.lo, iv.hi);
    match order {
        0 => Ok(normal_mass(a, b)),
        1 => Ok(std_normal_pdf(a) - std_normal_pdf(b)),
        2 => Ok(normal_mass(a, b) + s_pdf(a) - s_pdf(b)),
        _ => Err(Error::InvalidInput(format!(
            "truncated moment order {order} unsupported; expected 0, 1 or 2"
        ))),
    }
}

/// `int_lower^upper (s - lower)^2 phi(s) ds` for `0 <= lower <= upper`.
///
/// Expanded through the truncated moments of orders 0..=2. Clamped at zero
/// to absorb rounding when `upper` is very close to `lower`.
pub fn shifted_square_integral(lower: f64, upper: f64) -> Result<f64> {
    if lower.is_nan() || lower < 0.0 {
        return Err(invalid("lower", lower, "must be nonnegative"));
    }
    if upper.is_nan() || upper < lower {
        return Err(invalid("upper", upper, "must be at least the lower limit"));
    }
    if upper == lower {
        return Ok(0.0);
    }
    let m0 = normal_mass(lower, upper);
    let m1 = std_normal_pdf(lower) - std_normal_pdf(upper);
    let m2 = m0 + s_pdf(lower) - s_pdf(upper);
    Ok((m2 - 2.0 * lower * m1 + lower * lower * m0).max(0.0))
}

/// Subdivision cap for [`quadrature_oracle`].
pub const QUADRATURE_MAX_INTERVALS: usize = 1 << 20;
const QUADRATURE_MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `iv`.
///
/// Infinite endpoints are truncated at `QUADRATURE_TRUNCATION`. Each panel is
/// accepted once its Richardson error estimate falls under its share of
/// `tol`; exceeding the subdivision cap is reported as an error rather than
/// returning a partially converged value.
pub fn quadrature_oracle<F>(f: F, iv: Interval, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(invalid("tol", tol, "must be strictly positive"));
    }
    let lo = iv.lo.max(-QUADRATURE_TRUNCATION);
    let hi = iv.hi.min(QUADRATURE_TRUNCATION);
    if lo >= hi {
        return Ok(0.0);
    }

    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }

    let simpson = |a: f64, b: f64, fa: f64, fm: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);

    // Seed with a uniform split so narrow features (a pdf peak inside a wide
    // truncated range) are not missed by the first coarse estimate.
    const SEED_PANELS: usize = 64;
    let width = (hi - lo) / SEED_PANELS as f64;
    let mut stack = Vec::with_capacity(256);
    for i in (0..SEED_PANELS).rev() {
        let a = lo + width * i as f64;
        let b = if i + 1 == SEED_PANELS { hi } else { a + width };
        let (fa, fb) = (f(a), f(b));
        let fm = f(0.5 * (a + b));
        stack.push(Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole: simpson(a, b, fa, fm, fb),
            tol: tol / SEED_PANELS as f64,
            depth: 0,
        });
    }

    let mut total = 0.0;
    let mut compensation = 0.0;
    let mut processed = 0usize;
    while let Some(p) = stack.pop() {
        processed += 1;
        if processed > QUADRATURE_MAX_INTERVALS {
            return Err(Error::QuadratureDiverged {
                lo,
                hi,
                max_intervals: QUADRATURE_MAX_INTERVALS,
            });
        }
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol {
            // Kahan summation keeps the accumulated panels honest at 1e-12.
            let term = left + right + delta / 15.0;
            let y = term - compensation;
            let t = total + y;
            compensation = (t - total) - y;
            total = t;
        } else if p.depth >= QUADRATURE_MAX_DEPTH {
            return Err(Error::QuadratureDiverged {
                lo,
                hi,
                max_intervals: QUADRATURE_MAX_INTERVALS,
            });
        } else {
            let half = 0.5 * p.tol;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol: half,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol: half,
                depth: p.depth + 1,
            });
        }
    }
    Ok(total)
}

/// Inverse of the standard normal CDF (Wichura's AS241, ~1e-16 relative).
///
/// `u` must lie strictly inside (0, 1).
pub fn std_normal_quantile(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0, "quantile argument {u} outside (0,1)");
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_3)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_597)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_911)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { u } else { 1.0 - u };
    let mut r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_888)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn pdf_values() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(std_normal_pdf(1.7), std_normal_pdf(-1.7));
        assert!(std_normal_pdf(8.0) < 1e-14);
        assert!(std_normal_pdf(8.0) > 0.0);
    }

    #[test]
    fn tail_prob_edges() {
        assert_eq!(tail_prob(0.0).unwrap(), 1.0);
        assert_eq!(tail_prob(f64::INFINITY).unwrap(), 0.0);
        // 2 * (1 - Phi(1)), reference from scipy.stats.norm.sf
        assert!((tail_prob(1.0).unwrap() - 0.317_310_507_862_914_1).abs() < 1e-15);
        assert!(tail_prob(-0.1).is_err());
        assert!(tail_prob(f64::NAN).is_err());
    }

    #[test]
    fn tail_prob_is_relative_accurate_far_out() {
        // 2 * Q(10) = 1.523970604832105e-23
        let t = tail_prob(10.0).unwrap();
        assert!((t / 1.523_970_604_832_105e-23 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn truncated_moment_examples() {
        assert!((truncated_moment(0, Interval::REAL_LINE).unwrap() - 1.0).abs() < 1e-15);
        let half = iv(0.0, f64::INFINITY);
        assert!((truncated_moment(2, half).unwrap() - 0.5).abs() < 1e-15);
        assert!((truncated_moment(1, half).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        assert!(truncated_moment(3, half).is_err());
    }

    #[test]
    fn tail_prob_matches_doubled_zeroth_moment() {
        for i in 0..200 {
            let u = i as f64 * 0.05;
            let m0 = truncated_moment(0, Interval::upper_tail(u).unwrap()).unwrap();
            assert_eq!(tail_prob(u).unwrap(), 2.0 * m0, "u = {u}");
        }
    }

    #[test]
    fn shifted_square_integral_examples() {
        assert_eq!(shifted_square_integral(0.7, 0.7).unwrap(), 0.0);
        assert!((shifted_square_integral(0.0, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        assert!(shifted_square_integral(1.0, 0.5).is_err());
        assert!(shifted_square_integral(-0.1, 0.5).is_err());

        let oracle = quadrature_oracle(
            |s| (s - 0.5) * (s - 0.5) * std_normal_pdf(s),
            iv(0.5, 2.0),
            1e-13,
        )
        .unwrap();
        assert!((shifted_square_integral(0.5, 2.0).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn quadrature_oracle_examples() {
        let one = quadrature_oracle(std_normal_pdf, Interval::REAL_LINE, 1e-12).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        let odd = quadrature_oracle(|s| s * std_normal_pdf(s), Interval::REAL_LINE, 1e-12).unwrap();
        assert!(odd.abs() < 1e-12);
        let m2 = quadrature_oracle(|s| s * s * std_normal_pdf(s), iv(-1.0, 1.0), 1e-12).unwrap();
        assert!((m2 - truncated_moment(2, iv(-1.0, 1.0)).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn quadrature_reports_divergence() {
        // 1/sqrt(|s|) has an integrable spike Simpson cannot resolve to 1e-15.
        let r = quadrature_oracle(|s: f64| 1.0 / s.abs().max(1e-300).sqrt(), iv(-1.0, 1.0), 1e-15);
        assert!(matches!(r, Err(Error::QuadratureDiverged { .. })), "{r:?}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &u in &[1e-300, 1e-12, 1e-5, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-12] {
            let z = std_normal_quantile(u);
            let back = if z > 0.0 { 1.0 - std_normal_sf(z) } else { std_normal_cdf(z) };
            assert!((back - u).abs() <= 1e-14 * u.max(1e-2), "u = {u}, z = {z}");
        }
        assert_eq!(std_normal_quantile(0.5), 0.0);
    }

    #[test]
    fn interval_rejects_reversed() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(iv(0.0, 1.0).contains(1.0));
    }
}
