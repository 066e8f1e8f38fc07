//! Adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Used only as the numerical oracle for the closed forms in
//! [`special`](crate::special) and [`analytic`](crate::analytic); nothing on
//! the production BER path integrates numerically.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_INTERVALS: usize = 4000;

/// Relative size of the discarded tail in [`integrate_shifted_inverse_square`].
pub const TAIL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error, including any truncated tail.
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_centre = f(centre);

    let mut gauss = f_centre * WG[3];
    let mut kronrod = f_centre * WGK[7];
    let mut abs_sum = libm::fabs(kronrod);
    let mut f_lo = [0.0; 7];
    let mut f_hi = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let a = f(centre - dx);
        let b = f(centre + dx);
        f_lo[j] = a;
        f_hi[j] = b;
        kronrod += WGK[j] * (a + b);
        abs_sum += WGK[j] * (libm::fabs(a) + libm::fabs(b));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (a + b);
        }
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * libm::fabs(f_centre - mean);
    for j in 0..7 {
        asc += WGK[j] * (libm::fabs(f_lo[j] - mean) + libm::fabs(f_hi[j] - mean));
    }

    let value = kronrod * half;
    let abs_sum = abs_sum * libm::fabs(half);
    let asc = asc * libm::fabs(half);
    let mut error = libm::fabs((kronrod - gauss) * half);

    // QUADPACK error rescaling
    if asc != 0.0 && error != 0.0 {
        let scale = libm::pow(200.0 * error / asc, 1.5);
        error = if scale < 1.0 { asc * scale } else { asc };
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }

    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over the finite interval `[lo, hi]`, bisecting the segment
/// with the largest error estimate until the total error drops below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Integral> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter("integration bounds must be finite"));
    }
    if lo == hi {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }

    let mut segments: Vec<Segment> = Vec::with_capacity(64);
    segments.push(kronrod15(&f, lo, hi));

    loop {
        let (value, error) = segments
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !(value.is_finite() && error.is_finite()) {
            return Err(Error::NoConvergence {
                error,
                intervals: segments.len(),
            });
        }
        if error <= abs_tol.max(rel_tol * libm::fabs(value)) {
            return Ok(Integral {
                value,
                abs_error: error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= max_intervals {
            return Err(Error::NoConvergence {
                error,
                intervals: segments.len(),
            });
        }

        let worst = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            // Segment cannot be split further in floating point.
            return Err(Error::NoConvergence {
                error,
                intervals: segments.len() + 1,
            });
        }
        segments.push(kronrod15(&f, s.lo, mid));
        segments.push(kronrod15(&f, mid, s.hi));
    }
}

/// Exponential envelope `|g(x)| <= scale * exp(-rate * x)` for `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub scale: f64,
    pub rate: f64,
}

/// Computes `∫_0^∞ g(x) / (x + a)^2 dx` for an integrand bounded by `envelope`.
///
/// The range is mapped through `x = a s² / (1 - s²)`, which turns the kernel
/// `dx / (x + a)²` into `2 s ds / a` and removes the `√x` behaviour of
/// Q-function integrands at the origin. The upper limit `T` starts at the
/// envelope's decay length and doubles until the tail bound
/// `scale · e^{-rate·T} / (T + a)` is below [`TAIL_REL_TOL`] of the running
/// value; the bound is added to the reported error.
pub fn integrate_shifted_inverse_square<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    envelope: Envelope,
    rel_tol: f64,
) -> Result<Integral> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain {
            what: "shift a",
            value: a,
        });
    }
    if !(envelope.scale >= 0.0 && envelope.rate >= 0.0) {
        return Err(Error::InvalidParameter("envelope must be nonnegative"));
    }
    if envelope.scale == 0.0 {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }

    let integrand = |s: f64| {
        let s2 = s * s;
        let x = a * s2 / (1.0 - s2);
        2.0 * s / a * g(x)
    };
    let upper = |t: f64| libm::sqrt(t / (t + a));
    let tail = |t: f64| envelope.scale * libm::exp(-envelope.rate * t) / (t + a);

    let mut t = if envelope.rate > 0.0 {
        1.0 / envelope.rate
    } else {
        a
    };
    let mut s_hi = upper(t);
    let first = integrate(integrand, 0.0, s_hi, 0.0, rel_tol, DEFAULT_MAX_INTERVALS)?;
    let mut value = first.value;
    let mut error = first.abs_error;
    let mut intervals = first.intervals;

    for _ in 0..256 {
        let bound = tail(t);
        if bound <= TAIL_REL_TOL * libm::fabs(value) {
            return Ok(Integral {
                value,
                abs_error: error + bound,
                intervals,
            });
        }
        let t_next = 2.0 * t;
        let s_next = upper(t_next);
        if s_next <= s_hi {
            // s has saturated at 1 in floating point; nothing left to add.
            return Ok(Integral {
                value,
                abs_error: error + bound,
                intervals,
            });
        }
        let piece = integrate(
            integrand,
            s_hi,
            s_next,
            rel_tol * libm::fabs(value),
            rel_tol,
            DEFAULT_MAX_INTERVALS,
        )?;
        value += piece.value;
        error += piece.abs_error;
        intervals += piece.intervals;
        t = t_next;
        s_hi = s_next;
    }
    Err(Error::NoConvergence {
        error: error + tail(t),
        intervals,
    })
}
