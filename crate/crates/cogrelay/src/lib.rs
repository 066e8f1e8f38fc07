//! Parallel Monte-Carlo estimation, experiment sweeps and result files on top
//! of [`cogrelay_core`].

pub mod config;
mod error;
pub mod estimate;
pub mod output;
pub mod sweep;

pub use config::{load_config, parse_config, PilotSetting, SweepConfig};
pub use error::{Error, Result};
pub use estimate::{estimate_ber, estimate_interference_probability, BerEstimate, Proportion};
pub use output::{read_csv, write_csv, write_gnuplot, CSV_HEADER};
pub use sweep::{grid_points, run_sweep, GridPoint, RunMode, SweepRow};
