use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error("quadrature did not converge on [{lo}, {hi}] within {max_intervals} subintervals")]
    QuadratureDiverged { lo: f64, hi: f64, max_intervals: usize },

    #[error("no feasible adversary point for threshold {threshold} at distortion {distortion}")]
    Infeasible { threshold: f64, distortion: f64 },

    #[error("bound ordering violated at D = {distortion}: {detail}")]
    BoundOrdering { distortion: f64, detail: String },

    #[error("entropy coder failure: {0}")]
    EntropyCoder(String),

    #[error("malformed frame: {0}")]
    Frame(String),
}

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}

/// `0 < p < 1`.
pub(crate) fn check_open_probability(name: &'static str, p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(invalid(name, p, "must lie in the open interval (0, 1)"))
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(invalid(name, p, "must lie in [0, 1]"))
    }
}

pub(crate) fn check_positive(name: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && !x.is_nan() {
        Ok(x)
    } else {
        Err(invalid(name, x, "must be strictly positive"))
    }
}
