//! Uniform midtread scalar quantizer for `N(0, 1)` values, with range-coded
//! cell indices.
//!
//! Cells have width `step` and cover `[-COVERAGE, COVERAGE]`; values beyond
//! the outermost cells are clamped into them. Reconstruction points are the
//! `N(0, 1)` centroids of each cell.

use constriction::stream::model::DefaultContiguousCategoricalEntropyModel;
use constriction::stream::queue::{DefaultRangeDecoder, DefaultRangeEncoder};
use constriction::stream::{Decode, Encode};

use crate::error::{check_positive, Error, Result};
use crate::special::{truncated_moment, Interval};

pub const COVERAGE: f64 = 8.0;
pub const MAX_CELLS: usize = 1 << 20;
const CALIBRATION_ITERS: usize = 100;

#[derive(Debug)]
pub struct ScalarQuantizer {
    step: f64,
    half_cells: usize,
    centroids: Vec<f64>,
    design_mse: f64,
    model: Option<DefaultContiguousCategoricalEntropyModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub words: Vec<u32>,
    pub reconstruction: Vec<f64>,
    pub clamped: usize,
}

/// Cell layout for one step size: centroids, probabilities, and exact MSE.
struct Design {
    half_cells: usize,
    centroids: Vec<f64>,
    probs: Vec<f64>,
    mse: f64,
}

/// `E[(s - c)^2 ; s in iv]` under `N(0, 1)`.
fn spread(iv: Interval, c: f64) -> Result<f64> {
    let m0 = truncated_moment(0, iv)?;
    let m1 = truncated_moment(1, iv)?;
    let m2 = truncated_moment(2, iv)?;
    Ok((m2 - 2.0 * c * m1 + c * c * m0).max(0.0))
}

fn design(step: f64) -> Result<Design> {
    let half_cells = (COVERAGE / step - 0.5).ceil().max(0.0) as usize;
    let cells = 2 * half_cells + 1;
    if cells > MAX_CELLS {
        return Err(Error::InvalidInput(format!(
            "quantizer step {step} needs {cells} cells (limit {MAX_CELLS})"
        )));
    }
    let edge = |i: usize| (i as f64 - half_cells as f64 - 0.5) * step;
    let mut centroids = Vec::with_capacity(cells);
    let mut probs = Vec::with_capacity(cells);
    let mut mse = 0.0;
    for i in 0..cells {
        let iv = Interval::new(edge(i), edge(i + 1))?;
        let m0 = truncated_moment(0, iv)?;
        let c = if m0 > 0.0 {
            truncated_moment(1, iv)? / m0
        } else {
            (i as f64 - half_cells as f64) * step
        };
        mse += spread(iv, c)?;
        centroids.push(c);
        probs.push(m0);
    }
    let outer = edge(cells);
    let tail = Interval::upper_tail(outer)?;
    let tail_mass = truncated_moment(0, tail)?;
    // Symmetric tails land in the outer cells.
    mse += 2.0 * spread(tail, centroids[cells - 1])?;
    probs[0] += tail_mass;
    probs[cells - 1] += tail_mass;
    Ok(Design { half_cells, centroids, probs, mse })
}

impl ScalarQuantizer {
    /// Largest step whose `N(0, 1)` mean squared error does not exceed
    /// `target_mse`. Targets of 1 or more give the zero-rate quantizer.
    pub fn calibrate(target_mse: f64) -> Result<Self> {
        check_positive("target distortion", target_mse)?;
        if target_mse >= 1.0 {
            return Ok(Self::degenerate());
        }
        let mut lo = (12.0 * target_mse).sqrt();
        while design(lo)?.mse > target_mse {
            lo *= 0.5;
        }
        let mut hi = 2.0 * COVERAGE;
        for _ in 0..CALIBRATION_ITERS {
            let mid = 0.5 * (lo + hi);
            if design(mid)?.mse <= target_mse {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::with_step(lo)
    }

    pub fn with_step(step: f64) -> Result<Self> {
        check_positive("step", step)?;
        let d = design(step)?;
        if d.half_cells == 0 {
            return Ok(Self::degenerate());
        }
        let model = DefaultContiguousCategoricalEntropyModel::from_floating_point_probabilities_fast(&d.probs, None)
            .map_err(|()| Error::EntropyCoder("cannot build categorical model".into()))?;
        Ok(Self {
            step,
            half_cells: d.half_cells,
            centroids: d.centroids,
            design_mse: d.mse,
            model: Some(model),
        })
    }

    fn degenerate() -> Self {
        Self {
            step: f64::INFINITY,
            half_cells: 0,
            centroids: vec![0.0],
            design_mse: 1.0,
            model: None,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn cells(&self) -> usize {
        self.centroids.len()
    }

    /// Exact mean squared error on `N(0, 1)` inputs.
    pub fn design_mse(&self) -> f64 {
        self.design_mse
    }

    /// Whether the quantizer spends no bits and reconstructs zero.
    pub fn is_degenerate(&self) -> bool {
        self.model.is_none()
    }

    /// Cell index of `v`, and whether it was clamped.
    pub fn index_of(&self, v: f64) -> (usize, bool) {
        if self.half_cells == 0 {
            return (0, v.is_finite() && v.abs() > COVERAGE);
        }
        let j = self.half_cells as f64;
        let raw = (v / self.step).round();
        let clamped = v.abs() > (j + 0.5) * self.step;
        ((raw.clamp(-j, j) + j) as usize, clamped)
    }

    pub fn reconstruct(&self, index: usize) -> f64 {
        self.centroids[index]
    }

    pub fn encode(&self, values: &[f64]) -> Result<Quantized> {
        let mut symbols = Vec::with_capacity(values.len());
        let mut clamped = 0;
        for &v in values {
            if v.is_nan() {
                return Err(Error::InvalidInput("NaN value".into()));
            }
            let (i, c) = self.index_of(v);
            symbols.push(i);
            clamped += c as usize;
        }
        let reconstruction = symbols.iter().map(|&i| self.centroids[i]).collect();
        let words = match &self.model {
            None => Vec::new(),
            Some(model) => {
                let mut enc = DefaultRangeEncoder::new();
                enc.encode_iid_symbols(symbols.iter().copied(), model)
                    .map_err(|e| Error::EntropyCoder(e.to_string()))?;
                enc.into_compressed().map_err(|e| Error::EntropyCoder(format!("{e:?}")))?
            }
        };
        Ok(Quantized { words, reconstruction, clamped })
    }

    pub fn decode(&self, words: &[u32], count: usize) -> Result<Vec<f64>> {
        let Some(model) = &self.model else {
            if !words.is_empty() {
                return Err(Error::Frame("payload present for zero-rate quantizer".into()));
            }
            return Ok(vec![0.0; count]);
        };
        let mut dec = DefaultRangeDecoder::from_compressed(words.to_vec())
            .map_err(|e| Error::EntropyCoder(format!("{e:?}")))?;
        dec.decode_iid_symbols(count, model)
            .map(|s| s.map(|i| self.centroids[i]).map_err(|e| Error::EntropyCoder(format!("{e:?}"))))
            .collect()
    }
}
