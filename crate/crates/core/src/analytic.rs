//! Closed-form per-hop and end-to-end BER.
//!
//! For Gray-mapped QAM over a fixed SNR `γ`, the BER is a finite signed sum
//! of `Q(√((2i+1)² v γ))` terms (the ψ series). Averaging over the effective
//! SNR density `f(γ) = κμ e^{λ_tP μ σ_tr} / (γ + κμ)²` turns every Q term
//! into a `ζ((2i+1)² v, κμ)` integral, which has a closed form. The
//! quadrature path integrates `ψ(γ) f(γ)` directly and exists to check it.

use alloc::vec::Vec;

use crate::channel::{build_hop_params, CsiMode, HopParams, Topology};
use crate::error::{Error, Result};
use crate::quad::{self, Envelope};
use crate::special::{q_function, zeta_closed, ZetaArgs};
use crate::sum::Compensated;

/// Modulation constants for `M = 2^q` QAM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModParams {
    pub m: u32,
    pub q: u32,
    /// `3 / (M − 1)`, used by square constellations.
    pub g: f64,
    /// `6 / (I² + J² − 2)`, used by rectangular constellations.
    pub u: f64,
    /// `2^{(q−1)/2}` for odd `q`, `√M` for even `q`.
    pub i_dim: u32,
    /// `2^{(q+1)/2}` for odd `q`, `√M` for even `q`.
    pub j_dim: u32,
}

impl ModParams {
    pub fn new(bits_per_symbol: u32) -> Result<Self> {
        if !(1..=30).contains(&bits_per_symbol) {
            return Err(Error::InvalidParameter("bits per symbol must be in 1..=30"));
        }
        let q = bits_per_symbol;
        let m = 1u32 << q;
        let (i_dim, j_dim) = if q % 2 == 1 {
            (1u32 << (q / 2), 1u32 << q.div_ceil(2))
        } else {
            (1u32 << (q / 2), 1u32 << (q / 2))
        };
        let (fi, fj) = (f64::from(i_dim), f64::from(j_dim));
        Ok(Self {
            m,
            q,
            g: 3.0 / (f64::from(m) - 1.0),
            u: 6.0 / (fi * fi + fj * fj - 2.0),
            i_dim,
            j_dim,
        })
    }

    pub fn from_order(m: u32) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "QAM order must be a power of two >= 2",
            ));
        }
        Self::new(m.trailing_zeros())
    }

    pub fn is_square(&self) -> bool {
        self.q % 2 == 0
    }

    /// `(s, v, multiplicity)` of each ψ series making up the BER:
    /// `ψ(I,u) + ψ(J,u)` for odd `q`, `2ψ(√M, g)` for even `q`.
    pub fn components(&self) -> Vec<(u32, f64, f64)> {
        if self.is_square() {
            alloc::vec![(self.i_dim, self.g, 2.0)]
        } else {
            alloc::vec![(self.i_dim, self.u, 1.0), (self.j_dim, self.u, 1.0)]
        }
    }
}

/// One term `coef · Q(√(scale · γ))` of a ψ series.
#[derive(Debug, Clone, Copy)]
struct PsiTerm {
    coef: f64,
    scale: f64,
}

/// Expanded ψ(s, v, M; ·) double sum, terms in order of increasing `i`
/// within increasing `k`.
#[derive(Debug, Clone)]
struct PsiSeries {
    terms: Vec<PsiTerm>,
}

impl PsiSeries {
    fn new(s: u32, v: f64, m: u32) -> Result<Self> {
        if s == 0 || !s.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "ψ dimension s must be a power of two",
            ));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "QAM order must be a power of two >= 2",
            ));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain {
                what: "ψ distance coefficient v",
                value: v,
            });
        }
        let prefactor = 2.0 / (f64::from(s) * f64::from(m.trailing_zeros()));
        let s64 = u64::from(s);
        let mut terms = Vec::new();
        for k in 1..=s.trailing_zeros() {
            let half_k = 1u64 << (k - 1);
            let count = s64 - (s64 >> k);
            for i in 0..count {
                let sign = if (i * half_k / s64) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                // ⌊i·2^{k−1}/s + ½⌋ in integers
                let rounded = (2 * i * half_k + s64) / (2 * s64);
                let weight = (half_k - rounded) as f64;
                if weight == 0.0 {
                    continue;
                }
                let odd = (2 * i + 1) as f64;
                terms.push(PsiTerm {
                    coef: prefactor * sign * weight,
                    scale: odd * odd * v,
                });
            }
        }
        Ok(Self { terms })
    }

    fn eval(&self, gamma: f64) -> f64 {
        let mut acc = Compensated::default();
        for t in &self.terms {
            acc.add(t.coef * q_function(libm::sqrt(t.scale * gamma)));
        }
        acc.value()
    }

    fn abs_coef_sum(&self) -> f64 {
        self.terms.iter().map(|t| libm::fabs(t.coef)).sum()
    }

    fn min_scale(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.scale).reduce(f64::min)
    }
}

/// Fixed-SNR series `ψ(s, v, M; γ)`.
pub fn psi_awgn(s: u32, v: f64, m: u32, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Domain {
            what: "SNR gamma",
            value: gamma,
        });
    }
    Ok(PsiSeries::new(s, v, m)?.eval(gamma))
}

/// BER of `mod_params` QAM at a fixed SNR `γ` (no fading).
pub fn awgn_ber(mod_params: &ModParams, gamma: f64) -> Result<f64> {
    let mut total = 0.0;
    for (s, v, mult) in mod_params.components() {
        total += mult * psi_awgn(s, v, mod_params.m, gamma)?;
    }
    Ok(total)
}

/// Scale `κμ e^{λ_tP μ σ_tr}` and shift `κμ` of the effective-SNR density.
fn density_constants(hop: &HopParams) -> (f64, f64) {
    let shift = hop.kappa_tr() * hop.mu();
    let scale = shift * libm::exp(hop.lambda_tp() * hop.mu() * hop.sigma_tr());
    (scale, shift)
}

/// Fading average of `ψ(s, v, M; γ)`: every `Q(√(βγ))` term replaced by
/// `κμ e^{λ_tP μ σ_tr} ζ(β, κμ)`.
pub fn theta(s: u32, v: f64, hop: &HopParams, m: u32) -> Result<f64> {
    let series = PsiSeries::new(s, v, m)?;
    let (scale, shift) = density_constants(hop);
    let mut acc = Compensated::default();
    for t in &series.terms {
        acc.add(t.coef * zeta_closed(ZetaArgs::new(t.scale, shift)?));
    }
    Ok(scale * acc.value())
}

/// Average BER of one hop, `R_e(r)`.
///
/// The density is normalized to `e^{λ_tP μ σ_tr}` rather than one, so with
/// imperfect estimates a value may exceed ½ at very low `μ`. It is reported
/// as computed; see [`HopBer::is_model_consistent`] and [`chain_ber`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HopBer(f64);

impl HopBer {
    pub fn new(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Domain {
                what: "hop BER",
                value,
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_model_consistent(self) -> bool {
        self.0 <= 0.5
    }
}

pub fn hop_ber(hop: &HopParams, mod_params: &ModParams) -> Result<HopBer> {
    let mut total = 0.0;
    for (s, v, mult) in mod_params.components() {
        total += mult * theta(s, v, hop, mod_params.m)?;
    }
    // Alternating partial sums can leave −1e-17 residue for vanishing BER.
    HopBer::new(total.max(0.0))
}

/// Relative tolerance of [`hop_ber_quadrature`].
pub const HOP_QUADRATURE_REL_TOL: f64 = 1e-11;

/// Oracle for [`hop_ber`]: numerical integral of `BER_awgn(γ) f(γ)` over
/// `[0, ∞)` with the same density.
pub fn hop_ber_quadrature(hop: &HopParams, mod_params: &ModParams) -> Result<HopBer> {
    let parts: Vec<(PsiSeries, f64)> = mod_params
        .components()
        .into_iter()
        .map(|(s, v, mult)| Ok((PsiSeries::new(s, v, mod_params.m)?, mult)))
        .collect::<Result<_>>()?;

    let (scale, shift) = density_constants(hop);
    let envelope_scale: f64 = parts
        .iter()
        .map(|(p, mult)| mult * 0.5 * p.abs_coef_sum())
        .sum::<f64>()
        * scale;
    let rate = parts
        .iter()
        .filter_map(|(p, _)| p.min_scale())
        .reduce(f64::min)
        .map_or(0.0, |v| 0.5 * v);

    let integral = quad::integrate_shifted_inverse_square(
        |gamma| {
            let ber: f64 = parts.iter().map(|(p, mult)| mult * p.eval(gamma)).sum();
            scale * ber
        },
        shift,
        Envelope {
            scale: envelope_scale,
            rate,
        },
        HOP_QUADRATURE_REL_TOL,
    )?;
    HopBer::new(integral.value.max(0.0))
}

/// Decode-and-forward combination
/// `Σ_n R_n Π_{j>n} (1 − 2 R_j)` of per-hop BERs in `[0, ½]`.
pub fn end_to_end_ber(hops: &[f64]) -> Result<f64> {
    if hops.is_empty() {
        return Err(Error::InvalidParameter("at least one hop is required"));
    }
    if let Some(&bad) = hops.iter().find(|p| !(0.0..=0.5).contains(*p)) {
        return Err(Error::Domain {
            what: "hop BER",
            value: bad,
        });
    }
    let mut total = 0.0;
    let mut downstream = 1.0;
    for &p in hops.iter().rev() {
        total += p * downstream;
        downstream *= 1.0 - 2.0 * p;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainBer {
    pub value: f64,
    /// Zero-based indices of hops whose BER exceeded ½ and was clamped.
    pub clamped: Vec<usize>,
}

/// [`end_to_end_ber`] over computed hop BERs, clamping any value above ½
/// and recording which hops were clamped.
pub fn chain_ber(hops: &[HopBer]) -> Result<ChainBer> {
    let mut clamped = Vec::new();
    let values: Vec<f64> = hops
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if h.is_model_consistent() {
                h.value()
            } else {
                clamped.push(i);
                0.5
            }
        })
        .collect();
    Ok(ChainBer {
        value: end_to_end_ber(&values)?,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnalysis {
    pub hops: Vec<HopBer>,
    pub end_to_end: ChainBer,
}

/// Closed-form BER of every hop of `topology` and of the whole chain.
pub fn analyze_chain(
    topology: &Topology,
    alpha: f64,
    mu: f64,
    csi: &CsiMode,
    mod_params: &ModParams,
) -> Result<ChainAnalysis> {
    let hops = (1..=topology.hops())
        .map(|h| hop_ber(&build_hop_params(topology, h, alpha, mu, csi)?, mod_params))
        .collect::<Result<Vec<_>>>()?;
    let end_to_end = chain_ber(&hops)?;
    Ok(ChainAnalysis { hops, end_to_end })
}
