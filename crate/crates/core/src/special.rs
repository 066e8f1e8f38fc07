//! Gaussian tail, scaled complementary error function, and the
//! `ζ(β, a) = ∫_0^∞ Q(√(βx)) / (x + a)² dx` integral that every per-hop BER
//! term reduces to.

use core::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::quad::{self, Envelope, Integral};

const SQRT_PI: f64 = 1.772_453_850_905_516_027_298_167_483_341_145_2;

/// Below this argument erfcx uses the power series, above it the
/// continued fraction.
const SERIES_LIMIT: f64 = 1.5;

/// Gaussian tail probability `Q(x) = ½ erfc(x / √2)`.
pub fn q_function(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_function(-x);
    }
    let t = x * FRAC_1_SQRT_2;
    0.5 * erfcx_nonneg(t) * libm::exp(-t * t)
}

/// Scaled complementary error function `e^{x²} erfc(x)` for `x >= 0`.
pub fn erfcx(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain {
            what: "erfcx argument",
            value: x,
        });
    }
    Ok(erfcx_nonneg(x))
}

fn erfcx_nonneg(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        erfcx_series(x)
    } else {
        1.0 / (SQRT_PI * laplace_fraction(x))
    }
}

/// `e^{x²} - (2x/√π) Σ (2x²)^n / (2n+1)!!`, all series terms positive.
fn erfcx_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    while term > 1e-17 * sum {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    libm::exp(x2) - 2.0 * x / SQRT_PI * sum
}

fn fraction_depth(x: f64) -> u32 {
    // ~1e-16 relative at x = 1.5, shrinking quickly with x
    12 + libm::ceil(120.0 / x) as u32
}

/// Tail `x + ½/(x + 1/(x + (3/2)/(x + …)))` of the Laplace continued fraction,
/// with `erfcx(x) = 1 / (√π · tail)`. Returns the pair (`tail`, `tail - x`).
fn laplace_fraction_parts(x: f64) -> (f64, f64) {
    let mut t = x;
    for n in (2..=fraction_depth(x)).rev() {
        t = x + 0.5 * f64::from(n) / t;
    }
    let k = 0.5 / t;
    (x + k, k)
}

fn laplace_fraction(x: f64) -> f64 {
    laplace_fraction_parts(x).0
}

/// `1 - √π z erfcx(z)` without cancellation for large `z`.
fn one_minus_scaled_tail(z: f64) -> f64 {
    if z < SERIES_LIMIT {
        1.0 - SQRT_PI * z * erfcx_series(z)
    } else {
        let (t, k) = laplace_fraction_parts(z);
        k / t
    }
}

/// Arguments of `ζ(β, a)`: SNR-scaled Q-function coefficient `β >= 0` and
/// density shift `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaArgs {
    beta: f64,
    a: f64,
}

impl ZetaArgs {
    pub fn new(beta: f64, a: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain {
                what: "zeta beta",
                value: beta,
            });
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain {
                what: "zeta shift a",
                value: a,
            });
        }
        Ok(Self { beta, a })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// Closed form of `ζ(β, a)`.
///
/// With `z = √(βa/2)`,
/// `ζ = 1/(2a) − √(βπ/(2a)) · ½ · e^{z²} erfc(z) = (1 − √π z erfcx(z)) / (2a)`.
/// The bracket is evaluated through the continued fraction for large `z`, so
/// neither the `e^{βa/2}` factor nor the near-cancellation of the two terms
/// ever appears.
pub fn zeta_closed(args: ZetaArgs) -> f64 {
    let z = libm::sqrt(0.5 * args.beta * args.a);
    one_minus_scaled_tail(z) / (2.0 * args.a)
}

/// Numerical value of `ζ(β, a)` by adaptive quadrature, relative tolerance 1e-12.
pub fn zeta_quadrature(args: ZetaArgs) -> Result<Integral> {
    zeta_quadrature_tol(args, 1e-12)
}

pub fn zeta_quadrature_tol(args: ZetaArgs, rel_tol: f64) -> Result<Integral> {
    let beta = args.beta;
    // Chernoff: Q(√(βx)) <= ½ e^{-βx/2}
    quad::integrate_shifted_inverse_square(
        |x| q_function(libm::sqrt(beta * x)),
        args.a,
        Envelope {
            scale: 0.5,
            rate: 0.5 * beta,
        },
        rel_tol,
    )
}
