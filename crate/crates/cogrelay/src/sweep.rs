//! Parameter sweeps: every grid point gets an analytic value, a Monte-Carlo
//! estimate, or both.

use cogrelay_core::analytic::{analyze_chain, ModParams};
use rayon::prelude::*;

use crate::config::{db_to_linear, PilotSetting, SweepConfig};
use crate::error::Result;
use crate::estimate::estimate_ber;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Both,
    AnalyticOnly,
    SimOnly,
}

impl RunMode {
    fn analytic(self) -> bool {
        self != RunMode::SimOnly
    }

    fn sim(self) -> bool {
        self != RunMode::AnalyticOnly
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub mu_db: f64,
    pub order: u32,
    pub n_hops: usize,
    pub pilots: PilotSetting,
}

/// Grid points ordered by modulation, then hop count, then pilot setting,
/// then μ, each in the order given in the config.
pub fn grid_points(cfg: &SweepConfig) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &order in &cfg.modulations {
        for &n_hops in &cfg.hop_counts {
            for &pilots in &cfg.pilots {
                for &mu_db in &cfg.mu_db {
                    points.push(GridPoint {
                        mu_db,
                        order,
                        n_hops,
                        pilots,
                    });
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: GridPoint,
    pub ber_analytic: Option<f64>,
    pub ber_sim: Option<f64>,
    pub sim_stderr: Option<f64>,
    pub bits: Option<u64>,
    pub errors: Option<u64>,
    pub intf_exceedance: Option<f64>,
    /// `ok`, or `;`-separated notes such as `budget-exhausted`,
    /// `clamped-hop:2` (1-based) or `error: ...`.
    pub status: String,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.status.split(';').any(|s| s.starts_with("error"))
    }
}

fn evaluate(cfg: &SweepConfig, point: GridPoint, mode: RunMode) -> SweepRow {
    let mut row = SweepRow {
        point,
        ber_analytic: None,
        ber_sim: None,
        sim_stderr: None,
        bits: None,
        errors: None,
        intf_exceedance: None,
        status: String::new(),
    };
    let mut notes = Vec::new();

    if mode.analytic() {
        let result = (|| -> Result<_> {
            let topology = cfg.route(point.n_hops)?;
            let mod_params = ModParams::from_order(point.order)?;
            let csi = point.pilots.csi(cfg.pilot_power);
            Ok(analyze_chain(
                &topology,
                cfg.alpha,
                db_to_linear(point.mu_db),
                &csi,
                &mod_params,
            )?)
        })();
        match result {
            Ok(analysis) => {
                row.ber_analytic = Some(analysis.end_to_end.value);
                notes.extend(
                    analysis
                        .end_to_end
                        .clamped
                        .iter()
                        .map(|i| format!("clamped-hop:{}", i + 1)),
                );
            }
            Err(e) => notes.push(format!("error: analytic: {e}")),
        }
    }

    if mode.sim() {
        let result = cfg
            .sim_config(point.n_hops, point.mu_db, point.order, point.pilots)
            .and_then(|sim| estimate_ber(&sim));
        match result {
            Ok(est) => {
                row.ber_sim = Some(est.ber);
                row.sim_stderr = Some(est.stderr);
                row.bits = Some(est.bits);
                row.errors = Some(est.errors);
                row.intf_exceedance = Some(est.interference_exceedance);
                if est.budget_exhausted {
                    notes.push("budget-exhausted".into());
                }
            }
            Err(e) => notes.push(format!("error: simulation: {e}")),
        }
    }

    row.status = if notes.is_empty() {
        "ok".into()
    } else {
        notes.join(";")
    };
    row
}

/// Evaluates every grid point. Failures at one point are recorded in its
/// status and do not stop the sweep. Every point uses the configured seed.
pub fn run_sweep(cfg: &SweepConfig, mode: RunMode) -> Vec<SweepRow> {
    grid_points(cfg)
        .into_par_iter()
        .map(|p| evaluate(cfg, p, mode))
        .collect()
}
