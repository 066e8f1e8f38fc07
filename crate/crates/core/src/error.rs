use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("coincident points: distance must be positive")]
    DegenerateGeometry,

    #[error("hop {index} out of range for a {hops}-hop chain")]
    HopOutOfRange { index: usize, hops: usize },

    #[error("estimator too weak on {link} link: error variance {sigma} >= channel variance {eta}")]
    EstimatorTooWeak {
        link: &'static str,
        sigma: f64,
        eta: f64,
    },

    #[error("bit vector length {len} is not a multiple of {bits_per_symbol}")]
    Length { len: usize, bits_per_symbol: u32 },

    #[error("zero channel estimate or amplitude, cannot equalize")]
    DegenerateChannel,

    #[error(
        "quadrature failed to converge: estimated error {error:e} after {intervals} intervals"
    )]
    NoConvergence { error: f64, intervals: usize },
}
