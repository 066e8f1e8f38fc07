//! Bit error rate of underlay decode-and-forward multi-hop cognitive radio
//! links over Rayleigh fading with imperfect channel estimates.
//!
//! Two independent routes to the same number live side by side:
//!
//! * [`analytic`] evaluates the exact closed-form per-hop and end-to-end BER,
//!   with a numerical-integration path kept alongside as an oracle.
//! * [`sim`] is the per-block Monte-Carlo kernel: fading draws, estimation
//!   error injection, interference-constrained power control and hard-decision
//!   relaying over Gray-mapped QAM.
//!
//! The crate is `no_std` and needs only `alloc`. Parallel drivers, file
//! formats and the command line live in the `cogrelay` crate.
#![no_std]
#![forbid(unsafe_code)]
// Quadrature nodes and reference values are kept exactly as tabulated.
#![allow(clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod channel;
mod error;
pub mod qam;
pub mod quad;
pub mod sim;
pub mod special;
mod sum;

pub use analytic::{
    chain_ber, end_to_end_ber, hop_ber, hop_ber_quadrature, psi_awgn, theta, ChainBer, HopBer,
    ModParams,
};
pub use channel::{
    build_hop_params, lmmse_error_variance, path_loss_variance, CsiMode, EstimatorConfig,
    HopParams, PilotPower, Point, Topology,
};
pub use error::{Error, Result};
pub use qam::Constellation;
pub use sim::{BlockChannels, ChainModel, HopChannels, SimConfig, TrialCounts};
pub use special::{erfcx, q_function, zeta_closed, zeta_quadrature, ZetaArgs};
