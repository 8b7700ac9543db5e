//! Two-stage lossy coder: the support is sent losslessly with a fixed-length
//! enumerative code, then the nonzero values are scalar quantized.
//!
//! Frame layout, MSB first:
//!
//! ```text
//! [escape: 1][weight k: 16][support codeword: W][value payload: 32-bit words]
//! ```
//!
//! An escaped frame carries a zero weight and an all-zero codeword and
//! decodes to the all-zero block.

mod bitstream;
mod enumerative;
mod quantizer;

use rayon::prelude::*;
use serde::Serialize;

pub use bitstream::{BitReader, BitWriter};
pub use enumerative::SupportCoder;
pub use quantizer::{Quantized, ScalarQuantizer};

use crate::error::{check_open_probability, check_positive, invalid, Error, Result};
use crate::rng::{domain, Stream};

const WEIGHT_BITS: u32 = 16;
const HEADER_BITS: u64 = 1 + WEIGHT_BITS as u64;

/// Support slack in standard deviations of the empirical frequency.
pub const DEFAULT_EPSILON1_SIGMAS: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodecConfig {
    pub n: usize,
    pub p: f64,
    pub target_distortion: f64,
    pub epsilon1: f64,
    /// Fixed quantizer step; `None` calibrates it to `target_distortion / p`.
    pub quantizer_step: Option<f64>,
    pub seed: u64,
}

impl CodecConfig {
    pub fn new(n: usize, p: f64, target_distortion: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            target_distortion,
            epsilon1: default_epsilon1(n, p),
            quantizer_step: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", 0.0, "must be at least 1"));
        }
        check_open_probability("p", self.p)?;
        check_positive("target distortion", self.target_distortion)?;
        check_positive("epsilon1", self.epsilon1)?;
        if let Some(step) = self.quantizer_step {
            check_positive("quantizer step", step)?;
        }
        Ok(())
    }
}

pub fn default_epsilon1(n: usize, p: f64) -> f64 {
    DEFAULT_EPSILON1_SIGMAS * (p * (1.0 - p) / n.max(1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodecReport {
    pub n: usize,
    pub blocks: usize,
    pub p: f64,
    pub target_distortion: f64,
    pub epsilon1: f64,
    pub quantizer_step: f64,
    /// Bits per source symbol, averaged over blocks.
    pub empirical_rate: f64,
    pub empirical_distortion: f64,
    /// Part of `empirical_distortion` contributed by escaped blocks.
    pub escape_distortion: f64,
    pub support_bits: u64,
    pub value_bits: u64,
    pub atypical_flag_count: usize,
    pub clamped_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSample {
    pub b: Vec<bool>,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
}

/// Block 0 of the source addressed by `seed`.
pub fn sample_source(n: usize, p: f64, seed: u64) -> Result<SourceSample> {
    sample_block(n, p, seed, 0)
}

pub fn sample_block(n: usize, p: f64, seed: u64, block: u64) -> Result<SourceSample> {
    if n == 0 {
        return Err(invalid("n", 0.0, "must be at least 1"));
    }
    check_open_probability("p", p)?;
    let mut support = Stream::new(seed, &[domain::SOURCE_SUPPORT, block]);
    let mut values = Stream::new(seed, &[domain::SOURCE_VALUES, block]);
    let b: Vec<bool> = (0..n).map(|_| support.bernoulli(p)).collect();
    let s: Vec<f64> = (0..n).map(|_| values.standard_normal()).collect();
    let x = b.iter().zip(&s).map(|(&bi, &si)| if bi { si } else { 0.0 }).collect();
    Ok(SourceSample { b, s, x })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub bytes: Vec<u8>,
    pub bit_len: usize,
    pub support_bits: u64,
    pub value_bits: u64,
    pub escaped: bool,
}

/// Encoder-side result for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub frame: Frame,
    pub reconstruction: Vec<f64>,
    pub clamped: usize,
}

/// A codec prepared for one configuration; shared read-only across blocks.
#[derive(Debug)]
pub struct Codec {
    n: usize,
    support: SupportCoder,
    quantizer: ScalarQuantizer,
}

impl Codec {
    pub fn new(cfg: &CodecConfig) -> Result<Self> {
        cfg.validate()?;
        let support = SupportCoder::new(cfg.n, cfg.p, cfg.epsilon1)?;
        if let Some((_, k_hi)) = support.weight_range() {
            if k_hi >= 1 << WEIGHT_BITS {
                return Err(invalid("n * (p + epsilon1)", k_hi as f64, "weight exceeds the 16-bit field"));
            }
        }
        let quantizer = match cfg.quantizer_step {
            Some(step) => ScalarQuantizer::with_step(step)?,
            None => ScalarQuantizer::calibrate(cfg.target_distortion / cfg.p)?,
        };
        Ok(Self { n: cfg.n, support, quantizer })
    }

    pub fn support_coder(&self) -> &SupportCoder {
        &self.support
    }

    pub fn quantizer(&self) -> &ScalarQuantizer {
        &self.quantizer
    }

    /// Header plus support codeword, paid by every frame.
    pub fn support_bits(&self) -> u64 {
        HEADER_BITS + self.support.width()
    }

    pub fn encode(&self, x: &[f64]) -> Result<Encoded> {
        if x.len() != self.n {
            return Err(invalid("length", x.len() as f64, "does not match the codec block length"));
        }
        let b: Vec<bool> = x.iter().map(|&v| v != 0.0).collect();
        let mut w = BitWriter::new();
        let Some(codeword) = self.support.encode(&b)? else {
            w.push_bit(true);
            w.push_bits(0, WEIGHT_BITS);
            for _ in 0..self.support.width() {
                w.push_bit(false);
            }
            return Ok(Encoded {
                frame: finish(w, self.support_bits(), true),
                reconstruction: vec![0.0; self.n],
                clamped: 0,
            });
        };

        let values: Vec<f64> = x.iter().copied().filter(|&v| v != 0.0).collect();
        w.push_bit(false);
        w.push_bits(values.len() as u64, WEIGHT_BITS);
        w.push_biguint(&codeword, self.support.width())?;
        let q = self.quantizer.encode(&values)?;
        for &word in &q.words {
            w.push_bits(word as u64, 32);
        }

        let mut reconstruction = vec![0.0; self.n];
        let positions = b.iter().enumerate().filter(|(_, &bi)| bi).map(|(i, _)| i);
        for (i, r) in positions.zip(&q.reconstruction) {
            reconstruction[i] = *r;
        }
        Ok(Encoded {
            frame: finish(w, self.support_bits(), false),
            reconstruction,
            clamped: q.clamped,
        })
    }

    /// Support and reconstruction recovered from a frame alone.
    pub fn decode(&self, frame: &Frame) -> Result<(Vec<bool>, Vec<f64>)> {
        let mut r = BitReader::new(&frame.bytes, frame.bit_len)?;
        let escaped = r.read_bit()?;
        let k = r.read_bits(WEIGHT_BITS)? as usize;
        let codeword = r.read_biguint(self.support.width())?;
        if escaped {
            return Ok((vec![false; self.n], vec![0.0; self.n]));
        }
        let b = self.support.decode(&codeword)?;
        if b.iter().filter(|&&x| x).count() != k {
            return Err(Error::Frame("weight field disagrees with support codeword".into()));
        }
        if r.remaining() % 32 != 0 {
            return Err(Error::Frame("payload is not a whole number of words".into()));
        }
        let words: Vec<u32> = (0..r.remaining() / 32)
            .map(|_| r.read_bits(32).map(|w| w as u32))
            .collect::<Result<_>>()?;
        let values = self.quantizer.decode(&words, k)?;
        let mut xhat = vec![0.0; self.n];
        let positions = b.iter().enumerate().filter(|(_, &bi)| bi).map(|(i, _)| i);
        for (i, v) in positions.zip(values) {
            xhat[i] = v;
        }
        Ok((b, xhat))
    }

    /// Encodes, decodes from the frame, and checks the decoder agrees with
    /// the encoder.
    pub fn round_trip(&self, x: &[f64]) -> Result<(Encoded, Vec<f64>)> {
        let enc = self.encode(x)?;
        let (b, xhat) = self.decode(&enc.frame)?;
        if !enc.frame.escaped && b.iter().zip(x).any(|(&bi, &xi)| bi != (xi != 0.0)) {
            return Err(Error::Frame("support not recovered exactly".into()));
        }
        if xhat != enc.reconstruction {
            return Err(Error::Frame("decoder reconstruction differs from encoder".into()));
        }
        Ok((enc, xhat))
    }
}

fn finish(w: BitWriter, support_bits: u64, escaped: bool) -> Frame {
    let (bytes, bit_len) = w.finish();
    Frame {
        value_bits: bit_len as u64 - support_bits,
        bytes,
        bit_len,
        support_bits,
        escaped,
    }
}

pub fn mean_squared_error(x: &[f64], xhat: &[f64]) -> f64 {
    x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

struct BlockStats {
    support_bits: u64,
    value_bits: u64,
    distortion: f64,
    escaped: bool,
    clamped: usize,
}

pub fn run_codec(cfg: &CodecConfig, blocks: usize) -> Result<CodecReport> {
    if blocks == 0 {
        return Err(invalid("blocks", 0.0, "must be at least 1"));
    }
    let codec = Codec::new(cfg)?;
    let stats = (0..blocks as u64)
        .into_par_iter()
        .map(|block| {
            let src = sample_block(cfg.n, cfg.p, cfg.seed, block)?;
            let (enc, xhat) = codec.round_trip(&src.x)?;
            Ok(BlockStats {
                support_bits: enc.frame.support_bits,
                value_bits: enc.frame.value_bits,
                distortion: mean_squared_error(&src.x, &xhat),
                escaped: enc.frame.escaped,
                clamped: enc.clamped,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = CodecReport {
        n: cfg.n,
        blocks,
        p: cfg.p,
        target_distortion: cfg.target_distortion,
        epsilon1: cfg.epsilon1,
        quantizer_step: codec.quantizer.step(),
        empirical_rate: 0.0,
        empirical_distortion: 0.0,
        escape_distortion: 0.0,
        support_bits: 0,
        value_bits: 0,
        atypical_flag_count: 0,
        clamped_count: 0,
        seed: cfg.seed,
    };
    let mut distortion = 0.0;
    let mut escape = 0.0;
    for s in &stats {
        report.support_bits += s.support_bits;
        report.value_bits += s.value_bits;
        report.clamped_count += s.clamped;
        distortion += s.distortion;
        if s.escaped {
            report.atypical_flag_count += 1;
            escape += s.distortion;
        }
    }
    let total_symbols = (cfg.n * blocks) as f64;
    report.empirical_rate = (report.support_bits + report.value_bits) as f64 / total_symbols;
    report.empirical_distortion = distortion / blocks as f64;
    report.escape_distortion = escape / blocks as f64;
    Ok(report)
}
