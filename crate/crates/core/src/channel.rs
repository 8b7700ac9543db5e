//! Randomized-codebook channel through the lossy codec.
//!
//! Each trial draws a codebook of `M = ceil(2^(n * rate_tilde))` i.i.d.
//! Bernoulli(`p`) codewords, sends one of them as the support of a
//! Bernoulli-Gaussian block, runs the block through the codec, and decodes by
//! picking the codeword with the most ones where `|xhat| >= L`.
//!
//! A trial is an error when some other codeword scores at least as high as
//! the transmitted one. Small codebooks are materialized and decoded
//! explicitly with the transmitted codeword placed last, so the
//! smallest-index tie rule counts ties against it. For larger codebooks the
//! best competing score is drawn from its exact distribution: competitors are
//! independent of `xhat`, so each scores `Binomial(|A|, p)` where `A` is the
//! set of positions passing the threshold.

use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{mean_squared_error, Codec, CodecConfig};
use crate::error::{check_open_probability, check_positive, invalid, Error, Result};
use crate::rng::{domain, Stream};
use crate::typicality::{bernoulli_typicality, gaussian_typicality, DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_STEP};

/// Largest `log2 M` for which codebooks are materialized.
pub const EXPLICIT_LOG2_LIMIT: f64 = 16.0;
const MAX_LOG2_CODEBOOK: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelConfig {
    pub n: usize,
    pub p: f64,
    pub rate_tilde: f64,
    pub score_threshold: f64,
    pub distortion: f64,
    pub trials: usize,
    pub seed: u64,
    /// Typicality slack used only for failure diagnostics.
    pub epsilon: f64,
    /// Distortion excess counted as a failure mode: `d >= distortion + delta`.
    pub delta: f64,
}

impl ChannelConfig {
    pub fn new(n: usize, p: f64, rate_tilde: f64, score_threshold: f64, distortion: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            rate_tilde,
            score_threshold,
            distortion,
            trials,
            seed,
            epsilon: 0.1,
            delta: 0.5 * distortion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", 0.0, "must be at least 1"));
        }
        check_open_probability("p", self.p)?;
        if !(self.rate_tilde >= 0.0) || !self.rate_tilde.is_finite() {
            return Err(invalid("rate_tilde", self.rate_tilde, "must be finite and nonnegative"));
        }
        if self.log2_codebook_size() > MAX_LOG2_CODEBOOK {
            return Err(invalid("n * rate_tilde", self.log2_codebook_size(), "codebook exponent too large"));
        }
        if !(self.score_threshold >= 0.0) || !self.score_threshold.is_finite() {
            return Err(invalid("L", self.score_threshold, "must be finite and nonnegative"));
        }
        check_positive("D", self.distortion)?;
        if self.trials == 0 {
            return Err(invalid("trials", 0.0, "must be at least 1"));
        }
        check_positive("epsilon", self.epsilon)?;
        if !(self.delta >= 0.0) {
            return Err(invalid("delta", self.delta, "must be nonnegative"));
        }
        Ok(())
    }

    pub fn log2_codebook_size(&self) -> f64 {
        self.n as f64 * self.rate_tilde
    }

    pub fn is_explicit(&self) -> bool {
        self.log2_codebook_size() <= EXPLICIT_LOG2_LIMIT
    }

    /// `M - 1` as a float; exact whenever codebooks are materialized.
    fn competitors(&self) -> f64 {
        self.log2_codebook_size().exp2().ceil() - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    CodewordAtypical,
    GaussianAtypical,
    DistortionExcess,
    ScoreConfusion,
}

impl FailureMode {
    pub const ALL: [FailureMode; 4] = [
        FailureMode::CodewordAtypical,
        FailureMode::GaussianAtypical,
        FailureMode::DistortionExcess,
        FailureMode::ScoreConfusion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureMode::CodewordAtypical => "codeword_atypical",
            FailureMode::GaussianAtypical => "gaussian_atypical",
            FailureMode::DistortionExcess => "distortion_excess",
            FailureMode::ScoreConfusion => "score_confusion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginStats {
    pub mean: f64,
    pub std: f64,
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub n: usize,
    pub p: f64,
    pub rate_tilde: f64,
    pub log2_codebook_size: f64,
    pub score_threshold: f64,
    pub distortion: f64,
    pub explicit_codebooks: bool,
    pub errors: usize,
    pub error_rate: f64,
    /// Transmitted score minus best competing score.
    pub score_margin: MarginStats,
    pub mean_distortion: f64,
    /// Trials showing each failure mode, in [`FailureMode::ALL`] order. Modes
    /// can co-occur; `score_confusion` equals `errors`.
    pub failure_counts: [usize; 4],
    pub trials: usize,
    pub seed: u64,
}

impl ChannelReport {
    pub fn failure_count(&self, mode: FailureMode) -> usize {
        self.failure_counts[mode as usize]
    }
}

/// Bit-packed codewords of a common length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    stride: usize,
    words: Vec<u64>,
}

impl Codebook {
    fn with_capacity(n: usize, m: usize) -> Self {
        let stride = n.div_ceil(64);
        Self { n, stride, words: Vec::with_capacity(stride * m) }
    }

    fn push_random(&mut self, rng: &mut Stream, p: f64) {
        for w in 0..self.stride {
            let bits = (self.n - 64 * w).min(64);
            let mut word = 0u64;
            for j in 0..bits {
                if rng.bernoulli(p) {
                    word |= 1 << j;
                }
            }
            self.words.push(word);
        }
    }

    fn push_bits(&mut self, c: &[bool]) {
        self.words.extend(pack(c));
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.stride.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn codeword(&self, i: usize) -> Vec<bool> {
        let w = &self.words[i * self.stride..(i + 1) * self.stride];
        (0..self.n).map(|k| w[k / 64] >> (k % 64) & 1 == 1).collect()
    }

    fn packed(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn weight(&self, i: usize) -> usize {
        self.packed(i).iter().map(|w| w.count_ones() as usize).sum()
    }
}

fn pack(c: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; c.len().div_ceil(64)];
    for (k, _) in c.iter().enumerate().filter(|(_, &b)| b) {
        words[k / 64] |= 1 << (k % 64);
    }
    words
}

fn threshold_mask(xhat: &[f64], l: f64) -> Vec<u64> {
    let pass: Vec<bool> = xhat.iter().map(|v| v.abs() >= l).collect();
    pack(&pass)
}

fn masked_score(c: &[u64], mask: &[u64]) -> usize {
    c.iter().zip(mask).map(|(a, b)| (a & b).count_ones() as usize).sum()
}

/// `m` i.i.d. Bernoulli(`p`) codewords of length `n`.
pub fn sample_codebook(m: usize, n: usize, p: f64, seed: u64) -> Result<Codebook> {
    if m == 0 || n == 0 {
        return Err(invalid("codebook size", 0.0, "M and n must be at least 1"));
    }
    check_open_probability("p", p)?;
    let mut rng = Stream::new(seed, &[domain::CODEBOOK]);
    let mut book = Codebook::with_capacity(n, m);
    for _ in 0..m {
        book.push_random(&mut rng, p);
    }
    Ok(book)
}

/// Positions where `c` is one and `|xhat| >= l`.
pub fn score(c: &[bool], xhat: &[f64], l: f64) -> Result<usize> {
    if c.len() != xhat.len() {
        return Err(Error::InvalidInput(format!(
            "codeword length {} does not match reconstruction length {}",
            c.len(),
            xhat.len()
        )));
    }
    Ok(c.iter().zip(xhat).filter(|(&ci, x)| ci && x.abs() >= l).count())
}

/// Highest-scoring codeword, ties to the smallest index.
pub fn decode(codebook: &Codebook, xhat: &[f64], l: f64) -> Result<usize> {
    if codebook.is_empty() {
        return Err(Error::InvalidInput("empty codebook".into()));
    }
    if codebook.block_length() != xhat.len() {
        return Err(Error::InvalidInput("codebook and reconstruction lengths differ".into()));
    }
    let mask = threshold_mask(xhat, l);
    let mut best = (0, masked_score(codebook.packed(0), &mask));
    for i in 1..codebook.len() {
        let s = masked_score(codebook.packed(i), &mask);
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(best.0)
}

/// Draws the largest of `competitors` i.i.d. `Binomial(trials, p)` values
/// by inverting `F(x)^competitors`.
fn sample_max_binomial(rng: &mut Stream, trials: usize, p: f64, competitors: f64) -> usize {
    let ln_u = rng.uniform().ln();
    let lg = |k: usize| libm::lgamma(k as f64 + 1.0);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let pmf: Vec<f64> = (0..=trials)
        .map(|j| (lg(trials) - lg(j) - lg(trials - j) + j as f64 * lp + (trials - j) as f64 * lq).exp())
        .collect();
    // sf[x] = P(X > x), summed from the top for relative accuracy.
    let mut sf = vec![0.0; trials + 1];
    for x in (0..trials).rev() {
        sf[x] = sf[x + 1] + pmf[x + 1];
    }
    (0..=trials)
        .find(|&x| competitors * (-sf[x]).ln_1p() >= ln_u)
        .unwrap_or(trials)
}

struct TrialOutcome {
    error: bool,
    margin: i64,
    distortion: f64,
    modes: [bool; 4],
}

fn run_trial(cfg: &ChannelConfig, codec: &Codec, trial: u64) -> Result<TrialOutcome> {
    let mut cb_rng = Stream::new(cfg.seed, &[domain::CODEBOOK, trial]);
    let mut src_rng = Stream::new(cfg.seed, &[domain::CHANNEL, trial]);

    let c1: Vec<bool> = (0..cfg.n).map(|_| cb_rng.bernoulli(cfg.p)).collect();
    let s: Vec<f64> = (0..cfg.n).map(|_| src_rng.standard_normal()).collect();
    let x: Vec<f64> = c1.iter().zip(&s).map(|(&c, &v)| if c { v } else { 0.0 }).collect();
    let (_, xhat) = codec.round_trip(&x)?;
    let distortion = mean_squared_error(&x, &xhat);

    let mask = threshold_mask(&xhat, cfg.score_threshold);
    let own_packed = pack(&c1);
    let own = masked_score(&own_packed, &mask);
    let competitors = cfg.competitors();

    let (error, best_other) = if competitors < 1.0 {
        (false, 0)
    } else if cfg.is_explicit() {
        let m = competitors as usize + 1;
        let mut book = Codebook::with_capacity(cfg.n, m);
        for _ in 1..m {
            book.push_random(&mut cb_rng, cfg.p);
        }
        book.push_bits(&c1);
        let best_other = (0..m - 1).map(|i| masked_score(book.packed(i), &mask)).max().unwrap_or(0);
        (decode(&book, &xhat, cfg.score_threshold)? != m - 1, best_other)
    } else {
        let passing = mask.iter().map(|w| w.count_ones() as usize).sum();
        let best_other = sample_max_binomial(&mut cb_rng, passing, cfg.p, competitors);
        (best_other >= own, best_other)
    };

    let support_values: Vec<f64> = c1.iter().zip(&s).filter(|(&c, _)| c).map(|(_, &v)| v).collect();
    let gaussian_atypical = support_values.is_empty()
        || !gaussian_typicality(&support_values, cfg.epsilon, DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_STEP)?.is_typical;
    let modes = [
        !bernoulli_typicality(&c1, cfg.p, cfg.epsilon)?,
        gaussian_atypical,
        distortion >= cfg.distortion + cfg.delta,
        error,
    ];
    Ok(TrialOutcome {
        error,
        margin: own as i64 - best_other as i64,
        distortion,
        modes,
    })
}

pub fn run_channel_experiment(cfg: &ChannelConfig) -> Result<ChannelReport> {
    cfg.validate()?;
    let codec = Codec::new(&CodecConfig::new(cfg.n, cfg.p, cfg.distortion, cfg.seed))?;
    let outcomes = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &codec, t))
        .collect::<Result<Vec<_>>>()?;

    let trials = outcomes.len() as f64;
    let errors = outcomes.iter().filter(|o| o.error).count();
    let mut failure_counts = [0usize; 4];
    for o in &outcomes {
        for (count, &hit) in failure_counts.iter_mut().zip(&o.modes) {
            *count += hit as usize;
        }
    }
    let mean = outcomes.iter().map(|o| o.margin as f64).sum::<f64>() / trials;
    let var = outcomes.iter().map(|o| (o.margin as f64 - mean).powi(2)).sum::<f64>() / trials;
    Ok(ChannelReport {
        n: cfg.n,
        p: cfg.p,
        rate_tilde: cfg.rate_tilde,
        log2_codebook_size: cfg.log2_codebook_size(),
        score_threshold: cfg.score_threshold,
        distortion: cfg.distortion,
        explicit_codebooks: cfg.is_explicit(),
        errors,
        error_rate: errors as f64 / trials,
        score_margin: MarginStats {
            mean,
            std: var.sqrt(),
            min: outcomes.iter().map(|o| o.margin).min().unwrap_or(0),
            max: outcomes.iter().map(|o| o.margin).max().unwrap_or(0),
        },
        mean_distortion: outcomes.iter().map(|o| o.distortion).sum::<f64>() / trials,
        failure_counts,
        trials: cfg.trials,
        seed: cfg.seed,
    })
}
