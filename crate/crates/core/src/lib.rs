//! Bounds on the rate-distortion function of Bernoulli-Gaussian (sparse
//! Gaussian) sources, together with Monte Carlo simulations of the coding
//! schemes that sit behind those bounds.
//!
//! A Bernoulli-Gaussian symbol is `x = b * s` with `b ~ Bernoulli(p)` and
//! `s ~ N(0, sigma2)`. All rates are in bits per source symbol and all
//! distortions are mean squared error.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: standard normal density, tails, truncated moments, and an
//!   adaptive quadrature used as an independent oracle.
//! - [`bounds`]: closed-form quantities (Gaussian `R(D)`, entropy, binary
//!   divergence, the simple upper and lower bounds).
//! - [`minimax`]: the max-min improvement term and the improved lower bound.
//! - [`typicality`]: typical-set checkers and concentration experiments.
//! - [`codec`]: the two-stage support + value coder.
//! - [`channel`]: the randomized-codebook channel experiment.
//! - [`oracle`]: slow reference solvers for cross-checking.

pub mod bounds;
pub mod channel;
pub mod codec;
mod error;
pub mod minimax;
pub mod oracle;
pub mod rng;
pub mod special;
pub mod typicality;

pub use bounds::SourceModel;
pub use channel::{ChannelConfig, ChannelReport, FailureMode};
pub use codec::{CodecConfig, CodecReport};
pub use error::{Error, Result};
pub use minimax::{BoundSet, GamePoint, MinimaxConfig, MinimaxResult};
pub use special::Interval;
pub use typicality::{ConcentrationRow, TypicalityReport};
