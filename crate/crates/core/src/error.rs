use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {achieved:.3e} exceeds tolerance {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("multiplexer not operational at VDD = {vdd} V (turn-on at {v_on} V)")]
    NotOperational { vdd: f64, v_on: f64 },

    #[error("RF switch not conducting at VDD = {vdd} V (threshold {v_t} V)")]
    NotConducting { vdd: f64, v_t: f64 },

    #[error("frequency {freq:.4e} Hz outside table span [{min:.4e}, {max:.4e}] Hz")]
    OutOfSpan { freq: f64, min: f64, max: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("noise parameters are not identifiable: {0}")]
    Unidentifiable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("per-multiplexer power is zero; multiplexer count is unbounded")]
    Unbounded,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
