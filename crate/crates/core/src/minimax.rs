//! The max-min improvement term and the improved lower bound.
//!
//! The improvement is a two-player game. The coding side picks a score
//! threshold `L`; the adversary answers with a tail threshold `U >= L` and a
//! false-support fraction `r in [0, 1 - p]`, subject to the distortion budget
//!
//! ```text
//! T(L, U, r) = r L^2 + 2p * int_L^U (s - L)^2 phi(s) ds <= D.
//! ```
//!
//! The payoff is the binomial exponent `(u + r) D(u / (u + r) || p)` with
//! `u = p Pr(|s| > U)`, zero once the ratio drops below `p`.
//!
//! For fixed `(L, U)` the payoff is non-increasing in `r`, so the adversary
//! always spends the whole residual budget on false support. The inner
//! minimization is therefore a one-dimensional search over `U`. That
//! reduction is checked against an unreduced two-dimensional brute force in
//! the test suite.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    binary_entropy, exponent_unchecked, lower_bound_trivial, scale_reduce, upper_bound_1,
    upper_bound_2, SourceModel,
};
use crate::error::{check_open_probability, check_positive, invalid, Error, Result};
use crate::special::{shifted_square_integral, tail_prob};

/// One `(L, U, r)` position in the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GamePoint {
    /// Decoder score threshold `L`.
    pub score_threshold: f64,
    /// Adversary tail threshold `U`.
    pub tail_threshold: f64,
    /// Adversary false-support fraction `r`.
    pub false_support: f64,
}

impl GamePoint {
    pub fn new(score_threshold: f64, tail_threshold: f64, false_support: f64, p: f64) -> Result<Self> {
        check_open_probability("p", p)?;
        let gp = Self {
            score_threshold,
            tail_threshold,
            false_support,
        };
        gp.validate(p)?;
        Ok(gp)
    }

    fn validate(&self, p: f64) -> Result<()> {
        if !(self.score_threshold >= 0.0) {
            return Err(invalid("L", self.score_threshold, "must be nonnegative"));
        }
        if !(self.tail_threshold >= self.score_threshold) {
            return Err(invalid("U", self.tail_threshold, "must be at least L"));
        }
        // Allow an ulp of slack so 1 - p computed elsewhere is accepted.
        if !(self.false_support >= 0.0 && self.false_support <= (1.0 - p) * (1.0 + 1e-15)) {
            return Err(invalid("r", self.false_support, "must lie in [0, 1 - p]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxConfig {
    pub l_grid_points: usize,
    pub u_grid_points: usize,
    /// Upper end of the `L` search. `None` uses `max(4, 4 sqrt(D))`.
    pub l_max: Option<f64>,
    /// `U` beyond this is treated as infinite.
    pub u_max: f64,
    pub refine_iters: usize,
    /// Bits.
    pub tol: f64,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        Self {
            l_grid_points: 400,
            u_grid_points: 400,
            l_max: None,
            // tail_prob(8) < 1.3e-15
            u_max: 8.0,
            refine_iters: 60,
            tol: 1e-5,
        }
    }
}

impl MinimaxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_grid_points < 2 {
            return Err(invalid("l_grid_points", self.l_grid_points as f64, "must be at least 2"));
        }
        if self.u_grid_points < 2 {
            return Err(invalid("u_grid_points", self.u_grid_points as f64, "must be at least 2"));
        }
        if self.refine_iters < 2 {
            return Err(invalid("refine_iters", self.refine_iters as f64, "must be at least 2"));
        }
        check_positive("tol", self.tol)?;
        check_positive("u_max", self.u_max)?;
        if let Some(l_max) = self.l_max {
            check_positive("l_max", l_max)?;
            if l_max > self.u_max {
                return Err(invalid("l_max", l_max, "must not exceed u_max"));
            }
        }
        Ok(())
    }

    /// Effective upper end of the `L` search at distortion `d`.
    pub fn l_max_at(&self, d: f64) -> f64 {
        self.l_max
            .unwrap_or_else(|| 4f64.max(4.0 * d.sqrt()))
            .min(self.u_max)
    }

    fn doubled(&self) -> Self {
        Self {
            l_grid_points: self.l_grid_points * 2,
            u_grid_points: self.u_grid_points * 2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxResult {
    /// The improvement term, bits per symbol.
    pub ri: f64,
    pub witness: GamePoint,
    pub inner_value_at_witness: f64,
    pub converged: bool,
}

/// The adversary's best reply to one score threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerMin {
    pub value: f64,
    pub tail_threshold: f64,
    pub false_support: f64,
}

/// Distortion spent by the adversary at `gp`.
pub fn distortion_budget(gp: GamePoint, p: f64) -> Result<f64> {
    check_open_probability("p", p)?;
    gp.validate(p)?;
    let l = gp.score_threshold;
    Ok(gp.false_support * l * l + 2.0 * p * shifted_square_integral(l, gp.tail_threshold)?)
}

/// The game payoff in bits.
pub fn payoff(gp: GamePoint, p: f64) -> Result<f64> {
    check_open_probability("p", p)?;
    gp.validate(p)?;
    Ok(exponent_unchecked(p * tail_prob(gp.tail_threshold)?, gp.false_support, p))
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns the best point evaluated, which keeps the result no worse than
/// the bracket's interior probes even when `f` is not unimodal there.
pub(crate) fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best_f) = if fd < fc { (d, fd) } else { (c, fc) };
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best_f {
                best_x = d;
                best_f = fd;
            }
        }
    }
    (best_x, best_f)
}

/// Smallest `U` in `[lo, hi]` with `budget(U) >= target`, assuming `budget`
/// is non-decreasing and `budget(hi) >= target`.
fn bisect_budget<F>(budget: F, target: f64, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if budget(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `lo` keeps the constraint satisfied.
    lo
}

/// Evaluates the adversary's reply at one `U` once `L` is fixed.
struct InnerProblem {
    l: f64,
    d: f64,
    p: f64,
}

impl InnerProblem {
    fn budget(&self, u: f64) -> f64 {
        2.0 * self.p * shifted_square_integral(self.l, u).unwrap_or(f64::INFINITY)
    }

    fn false_support(&self, u: f64) -> f64 {
        let residual = (self.d - self.budget(u)).max(0.0);
        (residual / (self.l * self.l)).min(1.0 - self.p)
    }

    fn value(&self, u: f64) -> f64 {
        let tail = tail_prob(u).unwrap_or(0.0);
        exponent_unchecked(self.p * tail, self.false_support(u), self.p)
    }

    fn reply(&self, u: f64) -> InnerMin {
        InnerMin {
            value: self.value(u),
            tail_threshold: u,
            false_support: self.false_support(u),
        }
    }
}

/// Minimizes the payoff over the adversary's feasible `(U, r)` for a fixed
/// score threshold.
pub fn inner_min(l: f64, d: f64, p: f64, cfg: &MinimaxConfig) -> Result<InnerMin> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(invalid("L", l, "must be finite and nonnegative"));
    }
    check_positive("D", d)?;
    check_open_probability("p", p)?;
    cfg.validate()?;

    if l == 0.0 {
        // r L^2 = 0: the adversary buys full false support for free and pins
        // the ratio to p.
        return Ok(InnerMin {
            value: 0.0,
            tail_threshold: 0.0,
            false_support: 1.0 - p,
        });
    }

    let prob = InnerProblem { l, d, p };
    let u_cap = cfg.u_max.max(l);
    let u_hi = if prob.budget(u_cap) <= d {
        u_cap
    } else {
        bisect_budget(|u| prob.budget(u), d, l, u_cap)
    };
    if prob.budget(u_hi) > d {
        return Err(Error::Infeasible {
            threshold: l,
            distortion: d,
        });
    }

    let n = cfg.u_grid_points;
    let step = (u_hi - l) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| l + step * i as f64).collect();
    grid[n - 1] = u_hi;

    // Where r leaves its 1 - p cap the payoff has a kink; probe it directly.
    let cap_budget = d - (1.0 - p) * l * l;
    if cap_budget > 0.0 && prob.budget(u_hi) > cap_budget {
        let kink = bisect_budget(|u| prob.budget(u), cap_budget, l, u_hi);
        let pos = grid.partition_point(|&u| u < kink);
        grid.insert(pos, kink);
    }

    let values: Vec<f64> = grid.iter().map(|&u| prob.value(u)).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let mut reply = prob.reply(grid[best]);
    if reply.value == 0.0 {
        return Ok(reply);
    }

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    if b > a {
        let (u, v) = golden_section_min(|u| prob.value(u), a, b, cfg.refine_iters);
        if v < reply.value {
            reply = prob.reply(u);
        }
    }
    Ok(reply)
}

struct OuterPass {
    best_l: f64,
    best: InnerMin,
    refine_gain: f64,
}

fn outer_pass(d: f64, p: f64, cfg: &MinimaxConfig) -> Result<OuterPass> {
    let l_max = cfg.l_max_at(d);
    let n = cfg.l_grid_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { l_max } else { l_max * i as f64 / (n - 1) as f64 })
        .collect();

    // Evaluated in parallel, reduced by index.
    let replies = grid
        .par_iter()
        .map(|&l| inner_min(l, d, p, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, r) in replies.iter().enumerate() {
        if r.value > replies[best].value {
            best = i;
        }
    }
    let grid_value = replies[best].value;
    let mut pass = OuterPass {
        best_l: grid[best],
        best: replies[best],
        refine_gain: 0.0,
    };

    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(n - 1)];
    if b > a {
        let (l, neg) = golden_section_min(
            |l| inner_min(l, d, p, cfg).map(|r| -r.value).unwrap_or(f64::INFINITY),
            a,
            b,
            cfg.refine_iters,
        );
        if -neg > grid_value {
            pass.best_l = l;
            pass.best = inner_min(l, d, p, cfg)?;
            pass.refine_gain = pass.best.value - grid_value;
        }
    }
    Ok(pass)
}

/// Computes the improvement term: the max over `L` of the adversary's
/// minimum payoff.
pub fn improvement_ri(d: f64, p: f64, cfg: &MinimaxConfig) -> Result<MinimaxResult> {
    check_positive("D", d)?;
    check_open_probability("p", p)?;
    cfg.validate()?;

    let mut pass = outer_pass(d, p, cfg)?;
    let mut converged = true;
    if pass.refine_gain > cfg.tol {
        let fine = outer_pass(d, p, &cfg.doubled())?;
        // Converged when the doubled grid lands on the same optimum.
        converged = (fine.best.value - pass.best.value).abs() <= cfg.tol;
        if fine.best.value > pass.best.value {
            pass = fine;
        }
    }

    let witness = GamePoint {
        score_threshold: pass.best_l,
        tail_threshold: pass.best.tail_threshold,
        false_support: pass.best.false_support,
    };
    Ok(MinimaxResult {
        ri: pass.best.value,
        witness,
        inner_value_at_witness: pass.best.value,
        converged,
    })
}

pub fn improved_lower_bound(d: f64, p: f64, cfg: &MinimaxConfig) -> Result<f64> {
    Ok(lower_bound_trivial(d, p)? + improvement_ri(d, p, cfg)?.ri)
}

/// All four bounds at one normalized `(D, p)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSet {
    pub distortion: f64,
    pub ub1: f64,
    pub ub2: f64,
    pub lb_trivial: f64,
    pub lb_improved: f64,
    pub ri: f64,
    pub game_point: GamePoint,
    pub converged: bool,
}

/// Slack allowed when checking that bounds are consistently ordered.
pub const ORDERING_SLACK: f64 = 1e-9;

pub fn bound_set(d: f64, p: f64, cfg: &MinimaxConfig) -> Result<BoundSet> {
    let ub1 = upper_bound_1(d, p)?;
    let ub2 = upper_bound_2(d, p)?;
    let lb_trivial = lower_bound_trivial(d, p)?;
    let result = improvement_ri(d, p, cfg)?;
    let lb_improved = lb_trivial + result.ri;

    let ordering = |detail: String| Error::BoundOrdering { distortion: d, detail };
    if result.ri < 0.0 {
        return Err(ordering(format!("negative improvement {}", result.ri)));
    }
    let h = binary_entropy(p)?;
    if result.ri > h + ORDERING_SLACK {
        return Err(ordering(format!("improvement {} exceeds H(p) = {h}", result.ri)));
    }
    let upper = ub1.min(ub2);
    if lb_improved > upper + ORDERING_SLACK {
        return Err(ordering(format!(
            "improved lower bound {lb_improved} exceeds upper bound {upper}"
        )));
    }

    Ok(BoundSet {
        distortion: d,
        ub1,
        ub2,
        lb_trivial,
        lb_improved,
        ri: result.ri,
        game_point: result.witness,
        converged: result.converged,
    })
}

/// [`bound_set`] for a general-variance source. The bounds are computed at
/// the normalized distortion; `distortion` in the result is the caller's.
pub fn bound_set_for_source(model: SourceModel, d: f64, cfg: &MinimaxConfig) -> Result<BoundSet> {
    let (p, normalized) = scale_reduce(model, d)?;
    let mut set = bound_set(normalized, p, cfg)?;
    set.distortion = d;
    Ok(set)
}
