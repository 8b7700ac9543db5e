//! Slow reference solvers used to cross-check the fast paths.

use crate::bounds::binomial_exponent;
use crate::error::{check_open_probability, check_positive, invalid, Result};
use crate::minimax::InnerMin;
use crate::special::{shifted_square_integral, tail_prob};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceConfig {
    pub u_points: usize,
    pub r_points: usize,
    pub u_max: f64,
    /// Successive grids centred on the incumbent, each spanning two cells of
    /// the previous grid on either side.
    pub zoom_rounds: usize,
    pub zoom_points: usize,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self {
            u_points: 2000,
            r_points: 2000,
            u_max: 8.0,
            zoom_rounds: 4,
            zoom_points: 200,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

struct Grid {
    l: f64,
    d: f64,
    p: f64,
}

impl Grid {
    /// Lowers `best` to the smallest feasible payoff on a `(U, r)` grid,
    /// each axis given as `(lo, hi, points)`.
    fn scan(&self, best: &mut InnerMin, u_axis: (f64, f64, usize), r_axis: (f64, f64, usize)) -> Result<()> {
        let Grid { l, d, p } = *self;
        for u in linspace(u_axis.0, u_axis.1, u_axis.2) {
            let spent = 2.0 * p * shifted_square_integral(l, u)?;
            let tail = p * tail_prob(u)?;
            for r in linspace(r_axis.0, r_axis.1, r_axis.2) {
                if r * l * l + spent > d || tail + r <= 0.0 {
                    continue;
                }
                let v = binomial_exponent(tail, r, p)?;
                if v < best.value {
                    *best = InnerMin { value: v, tail_threshold: u, false_support: r };
                }
            }
        }
        Ok(())
    }
}

/// Minimum of the payoff over a `(U, r)` grid on `[L, u_max] x [0, 1 - p]`,
/// keeping only points that satisfy the distortion budget. No structure of
/// the payoff is assumed.
pub fn brute_force_inner_min(l: f64, d: f64, p: f64, cfg: &BruteForceConfig) -> Result<InnerMin> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(invalid("L", l, "must be finite and nonnegative"));
    }
    check_positive("D", d)?;
    check_open_probability("p", p)?;
    if cfg.u_points < 2 || cfg.r_points < 2 || cfg.zoom_points < 2 {
        return Err(invalid("grid points", 1.0, "need at least 2 per axis"));
    }
    let u_hi = cfg.u_max.max(l);
    let r_hi = 1.0 - p;

    let mut best = InnerMin { value: f64::INFINITY, tail_threshold: l, false_support: 0.0 };
    let grid = Grid { l, d, p };
    grid.scan(&mut best, (l, u_hi, cfg.u_points), (0.0, r_hi, cfg.r_points))?;
    let mut du = (u_hi - l) / (cfg.u_points - 1) as f64;
    let mut dr = r_hi / (cfg.r_points - 1) as f64;
    for _ in 0..cfg.zoom_rounds {
        let (u0, r0) = (best.tail_threshold, best.false_support);
        let (ua, ub) = ((u0 - 2.0 * du).max(l), (u0 + 2.0 * du).min(u_hi));
        let (ra, rb) = ((r0 - 2.0 * dr).max(0.0), (r0 + 2.0 * dr).min(r_hi));
        grid.scan(&mut best, (ua, ub, cfg.zoom_points), (ra, rb, cfg.zoom_points))?;
        du = (ub - ua) / (cfg.zoom_points - 1) as f64;
        dr = (rb - ra) / (cfg.zoom_points - 1) as f64;
    }
    Ok(best)
}
