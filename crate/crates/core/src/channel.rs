//! Geometry and estimator settings turned into per-hop channel statistics.
//!
//! Noise power is normalized to `N₀ = 1` throughout, so the interference cap
//! equals `μ = I_T / N₀` and pilot energies are expressed in units of `N₀`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Primary receiver plus the secondary chain: source, relays, destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    primary: Point,
    chain: Vec<Point>,
}

impl Topology {
    pub fn new(primary: Point, chain: Vec<Point>) -> Result<Self> {
        if chain.len() < 2 {
            return Err(Error::InvalidParameter(
                "chain needs a source and a destination",
            ));
        }
        if !primary.is_finite() || chain.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("coordinates must be finite"));
        }
        if chain.windows(2).any(|w| w[0] == w[1]) || chain.contains(&primary) {
            return Err(Error::DegenerateGeometry);
        }
        Ok(Self { primary, chain })
    }

    /// Reference layout on the unit square: P (0.7, 0.5), source (0, 0),
    /// relays (0.6, 0.2) and (0.8, 0.3), destination (1, 0).
    pub fn reference() -> Self {
        Self {
            primary: Point::new(0.7, 0.5),
            chain: alloc::vec![
                Point::new(0.0, 0.0),
                Point::new(0.6, 0.2),
                Point::new(0.8, 0.3),
                Point::new(1.0, 0.0),
            ],
        }
    }

    /// Keeps the source and destination and only the listed relays, in order.
    pub fn with_relays(&self, relays: &[usize]) -> Result<Self> {
        let available = self.chain.len() - 2;
        let mut chain = Vec::with_capacity(relays.len() + 2);
        chain.push(self.chain[0]);
        for &r in relays {
            if r >= available {
                return Err(Error::HopOutOfRange {
                    index: r,
                    hops: available,
                });
            }
            chain.push(self.chain[r + 1]);
        }
        chain.push(self.chain[self.chain.len() - 1]);
        Self::new(self.primary, chain)
    }

    pub fn primary(&self) -> Point {
        self.primary
    }

    pub fn chain(&self) -> &[Point] {
        &self.chain
    }

    pub fn hops(&self) -> usize {
        self.chain.len() - 1
    }
}

/// Pilot energy used for channel estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotPower {
    /// `B_training = I_T / η_tP`: the mean pilot power seen at the primary
    /// receiver sits exactly at the interference cap.
    InterferenceMatched,
    /// Fixed pilot energy in units of `N₀`.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub pilots: u32,
    pub pilot_power: PilotPower,
}

impl EstimatorConfig {
    pub fn interference_matched(pilots: u32) -> Self {
        Self {
            pilots,
            pilot_power: PilotPower::InterferenceMatched,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsiMode {
    /// Error variance forced to zero on every link.
    Perfect,
    /// LMMSE estimates with the same pilot count on data and primary links.
    Estimated(EstimatorConfig),
}

/// Channel statistics of one hop `t -> r` and of the interfering link `t -> P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopParams {
    eta_tr: f64,
    eta_tp: f64,
    sigma_tr: f64,
    sigma_tp: f64,
    lambda_tr: f64,
    lambda_tp: f64,
    kappa_tr: f64,
    mu: f64,
}

impl HopParams {
    /// Assembles the parameter set from true channel variances, estimation
    /// error variances and the linear interference-to-noise ratio `μ`.
    pub fn from_variances(
        eta_tr: f64,
        eta_tp: f64,
        sigma_tr: f64,
        sigma_tp: f64,
        mu: f64,
    ) -> Result<Self> {
        for (what, value) in [("eta_tr", eta_tr), ("eta_tp", eta_tp), ("mu", mu)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Domain { what, value });
            }
        }
        for (what, value) in [("sigma_tr", sigma_tr), ("sigma_tp", sigma_tp)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Domain { what, value });
            }
        }
        if sigma_tr >= eta_tr {
            return Err(Error::EstimatorTooWeak {
                link: "data",
                sigma: sigma_tr,
                eta: eta_tr,
            });
        }
        if sigma_tp >= eta_tp {
            return Err(Error::EstimatorTooWeak {
                link: "primary",
                sigma: sigma_tp,
                eta: eta_tp,
            });
        }
        let lambda_tr = 1.0 / (eta_tr - sigma_tr);
        let lambda_tp = 1.0 / (eta_tp - sigma_tp);
        Ok(Self {
            eta_tr,
            eta_tp,
            sigma_tr,
            sigma_tp,
            lambda_tr,
            lambda_tp,
            kappa_tr: lambda_tp / lambda_tr,
            mu,
        })
    }

    pub fn eta_tr(&self) -> f64 {
        self.eta_tr
    }
    pub fn eta_tp(&self) -> f64 {
        self.eta_tp
    }
    pub fn sigma_tr(&self) -> f64 {
        self.sigma_tr
    }
    pub fn sigma_tp(&self) -> f64 {
        self.sigma_tp
    }
    pub fn lambda_tr(&self) -> f64 {
        self.lambda_tr
    }
    pub fn lambda_tp(&self) -> f64 {
        self.lambda_tp
    }
    pub fn kappa_tr(&self) -> f64 {
        self.kappa_tr
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Variance of the estimate `ĥ_tr`.
    pub fn estimate_variance_tr(&self) -> f64 {
        1.0 / self.lambda_tr
    }

    /// Variance of the estimate `ĥ_tP`.
    pub fn estimate_variance_tp(&self) -> f64 {
        1.0 / self.lambda_tp
    }
}

/// Mean channel power `d^{-α}` between two points.
pub fn path_loss_variance(a: Point, b: Point, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain {
            what: "path-loss exponent",
            value: alpha,
        });
    }
    let d = a.distance(&b);
    if d == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(libm::pow(d, -alpha))
}

/// LMMSE residual error variance `1 / (L_p · B · η / N₀ + 1)`.
pub fn lmmse_error_variance(pilots: u32, pilot_power: f64, eta: f64, n0: f64) -> f64 {
    1.0 / (f64::from(pilots) * pilot_power * eta / n0 + 1.0)
}

/// Statistics of hop `hop_index` (1-based: hop 1 is source -> first node).
pub fn build_hop_params(
    topology: &Topology,
    hop_index: usize,
    alpha: f64,
    mu: f64,
    csi: &CsiMode,
) -> Result<HopParams> {
    if hop_index == 0 || hop_index > topology.hops() {
        return Err(Error::HopOutOfRange {
            index: hop_index,
            hops: topology.hops(),
        });
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain {
            what: "mu",
            value: mu,
        });
    }
    let tx = topology.chain[hop_index - 1];
    let rx = topology.chain[hop_index];
    let eta_tr = path_loss_variance(tx, rx, alpha)?;
    let eta_tp = path_loss_variance(tx, topology.primary, alpha)?;

    let (sigma_tr, sigma_tp) = match *csi {
        CsiMode::Perfect => (0.0, 0.0),
        CsiMode::Estimated(est) => {
            if est.pilots == 0 {
                return Err(Error::InvalidParameter("pilot count must be at least 1"));
            }
            let energy = match est.pilot_power {
                PilotPower::InterferenceMatched => mu / eta_tp,
                PilotPower::Explicit(b) if b > 0.0 && b.is_finite() => b,
                PilotPower::Explicit(b) => {
                    return Err(Error::Domain {
                        what: "pilot power",
                        value: b,
                    })
                }
            };
            (
                lmmse_error_variance(est.pilots, energy, eta_tr, 1.0),
                lmmse_error_variance(est.pilots, energy, eta_tp, 1.0),
            )
        }
    };
    HopParams::from_variances(eta_tr, eta_tp, sigma_tr, sigma_tp, mu)
}
