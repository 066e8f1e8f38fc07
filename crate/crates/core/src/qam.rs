//! Gray-mapped square (`q` even) and rectangular (`q` odd) QAM with unit
//! average symbol energy.
//!
//! Labels are `q`-bit integers, most significant bit first. The in-phase axis
//! carries the upper `⌈q/2⌉` bits and, for odd `q`, the larger `J`-level
//! dimension; the quadrature axis carries the remaining `⌊q/2⌋` bits. Each
//! axis uses reflected binary Gray code over its levels, left to right.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_BITS_PER_SYMBOL: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    levels: u32,
    bits: u32,
}

impl Axis {
    fn new(bits: u32) -> Self {
        Self {
            levels: 1 << bits,
            bits,
        }
    }

    /// Unscaled odd-integer coordinate of level `k`.
    fn coordinate(&self, k: u32) -> f64 {
        f64::from(2 * k) - f64::from(self.levels - 1)
    }

    /// Nearest level to unscaled coordinate `v`, returned as its Gray code.
    /// Exact ties go to the smaller code.
    fn slice(&self, v: f64) -> u32 {
        if self.levels == 1 {
            return 0;
        }
        let top = self.levels - 2;
        let r = 0.5 * (v + f64::from(self.levels - 1));
        let k0 = if r <= 0.0 {
            0
        } else if r >= f64::from(top) {
            top
        } else {
            libm::floor(r) as u32
        };
        let d0 = libm::fabs(v - self.coordinate(k0));
        let d1 = libm::fabs(v - self.coordinate(k0 + 1));
        let (g0, g1) = (gray(k0), gray(k0 + 1));
        if d0 < d1 || (d0 == d1 && g0 < g1) {
            g0
        } else {
            g1
        }
    }
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut k = g;
    while g > 1 {
        g >>= 1;
        k ^= g;
    }
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    q: u32,
    in_phase: Axis,
    quadrature: Axis,
    scale: f64,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(bits_per_symbol: u32) -> Result<Self> {
        if !(1..=MAX_BITS_PER_SYMBOL).contains(&bits_per_symbol) {
            return Err(Error::InvalidParameter(
                "bits per symbol must be between 1 and 10",
            ));
        }
        let in_phase = Axis::new(bits_per_symbol.div_ceil(2));
        let quadrature = Axis::new(bits_per_symbol / 2);
        let (li, lq) = (f64::from(in_phase.levels), f64::from(quadrature.levels));
        let energy = (li * li - 1.0) / 3.0 + (lq * lq - 1.0) / 3.0;
        let scale = 1.0 / libm::sqrt(energy);

        let m = 1u32 << bits_per_symbol;
        let points = (0..m)
            .map(|label| {
                let gi = label >> quadrature.bits;
                let gq = label & (quadrature.levels - 1);
                Complex64::new(
                    scale * in_phase.coordinate(gray_inverse(gi)),
                    scale * quadrature.coordinate(gray_inverse(gq)),
                )
            })
            .collect();

        Ok(Self {
            q: bits_per_symbol,
            in_phase,
            quadrature,
            scale,
            points,
        })
    }

    pub fn order(&self) -> u32 {
        1 << self.q
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.q
    }

    /// Grid dimensions `(I, J)`: quadrature levels and in-phase levels.
    pub fn dims(&self) -> (u32, u32) {
        (self.quadrature.levels, self.in_phase.levels)
    }

    /// Constellation points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    /// Grid position `(in-phase level, quadrature level)` of a label.
    pub fn grid_position(&self, label: u32) -> (u32, u32) {
        (
            gray_inverse(label >> self.quadrature.bits),
            gray_inverse(label & (self.quadrature.levels - 1)),
        )
    }

    /// Minimum-distance decision on an equalized sample.
    pub fn detect(&self, z: Complex64) -> u32 {
        let gi = self.in_phase.slice(z.re / self.scale);
        let gq = self.quadrature.slice(z.im / self.scale);
        (gi << self.quadrature.bits) | gq
    }

    pub fn labels_from_bits(&self, bits: &[u8]) -> Result<Vec<u32>> {
        let q = self.q as usize;
        if bits.len() % q != 0 {
            return Err(Error::Length {
                len: bits.len(),
                bits_per_symbol: self.q,
            });
        }
        Ok(bits
            .chunks_exact(q)
            .map(|c| {
                c.iter()
                    .fold(0u32, |acc, &b| (acc << 1) | u32::from(b != 0))
            })
            .collect())
    }

    pub fn bits_from_labels(&self, labels: &[u32]) -> Vec<u8> {
        let mut out = Vec::with_capacity(labels.len() * self.q as usize);
        for &label in labels {
            for shift in (0..self.q).rev() {
                out.push(((label >> shift) & 1) as u8);
            }
        }
        out
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .labels_from_bits(bits)?
            .into_iter()
            .map(|l| self.point(l))
            .collect())
    }

    /// Coherent detection of `received = h · amplitude · x + noise` against the
    /// estimate `channel_estimate`.
    pub fn demodulate(
        &self,
        received: &[Complex64],
        channel_estimate: Complex64,
        amplitude: f64,
    ) -> Result<Vec<u8>> {
        let labels = self.demodulate_labels(received, channel_estimate, amplitude)?;
        Ok(self.bits_from_labels(&labels))
    }

    pub fn demodulate_labels(
        &self,
        received: &[Complex64],
        channel_estimate: Complex64,
        amplitude: f64,
    ) -> Result<Vec<u32>> {
        let gain = channel_estimate * amplitude;
        if gain.norm_sqr() == 0.0 || !gain.re.is_finite() || !gain.im.is_finite() {
            return Err(Error::DegenerateChannel);
        }
        let inv = gain.inv();
        Ok(received.iter().map(|&y| self.detect(y * inv)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bpsk_layout() {
        let c = Constellation::new(1).unwrap();
        assert_eq!(
            c.points(),
            &[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]
        );
        assert_eq!(c.dims(), (1, 2));
    }

    #[test]
    fn qpsk_layout() {
        let c = Constellation::new(2).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        for p in c.points() {
            assert!((p.re.abs() - h).abs() < 1e-15 && (p.im.abs() - h).abs() < 1e-15);
        }
        assert_eq!(c.dims(), (2, 2));
    }

    #[test]
    fn rectangular_eight_qam() {
        let c = Constellation::new(3).unwrap();
        assert_eq!(c.dims(), (2, 4));
        // odd grid energy (I²+J²−2)/3 = 6 before scaling
        assert!((c.scale - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_average_energy() {
        for q in 1..=MAX_BITS_PER_SYMBOL {
            let c = Constellation::new(q).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "q={q}: {e}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for q in 1..=MAX_BITS_PER_SYMBOL {
            let c = Constellation::new(q).unwrap();
            let m = c.order();
            let pos: Vec<_> = (0..m).map(|l| c.grid_position(l)).collect();
            for a in 0..m {
                for b in 0..m {
                    let (pa, pb) = (pos[a as usize], pos[b as usize]);
                    let adjacent = (pa.0.abs_diff(pb.0) + pa.1.abs_diff(pb.1)) == 1;
                    if adjacent {
                        assert_eq!((a ^ b).count_ones(), 1, "q={q} labels {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn labels_are_a_bijection_on_grid() {
        for q in 1..=MAX_BITS_PER_SYMBOL {
            let c = Constellation::new(q).unwrap();
            let mut seen = alloc::collections::BTreeSet::new();
            for l in 0..c.order() {
                assert!(seen.insert(c.grid_position(l)));
            }
        }
    }

    #[test]
    fn modulate_edge_cases() {
        let c = Constellation::new(2).unwrap();
        assert!(c.modulate(&[]).unwrap().is_empty());
        assert!(matches!(c.modulate(&[1, 0, 1]), Err(Error::Length { .. })));
        assert_eq!(c.modulate(&[1, 0]).unwrap(), alloc::vec![c.point(0b10)]);
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in 1..=MAX_BITS_PER_SYMBOL {
            let c = Constellation::new(q).unwrap();
            let trials = if q <= 4 { 10_000 } else { 200 };
            for _ in 0..trials {
                let n = rng.random_range(1..20usize) * q as usize;
                let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
                let h = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let amp = rng.random_range(0.1..10.0);
                let rx: Vec<_> = c
                    .modulate(&bits)
                    .unwrap()
                    .into_iter()
                    .map(|x| h * amp * x)
                    .collect();
                assert_eq!(c.demodulate(&rx, h, amp).unwrap(), bits);
            }
        }
    }

    #[test]
    fn equidistant_sample_goes_to_lower_label() {
        let c = Constellation::new(1).unwrap();
        assert_eq!(c.detect(Complex64::new(0.0, 0.0)), 0);
        let c = Constellation::new(2).unwrap();
        assert_eq!(c.detect(Complex64::new(0.0, 0.0)), 0);
        let c = Constellation::new(4).unwrap();
        // midway between the two right-most in-phase levels (codes 2 and 3)
        let z = Complex64::new(2.0 * c.scale, c.scale);
        assert_eq!(c.detect(z) >> 2, 2);
    }

    #[test]
    fn zero_estimate_rejected() {
        let c = Constellation::new(2).unwrap();
        let err = c.demodulate(&[Complex64::new(1.0, 0.0)], Complex64::new(0.0, 0.0), 1.0);
        assert_eq!(err, Err(Error::DegenerateChannel));
    }

    #[test]
    fn out_of_range_order() {
        assert!(Constellation::new(0).is_err());
        assert!(Constellation::new(11).is_err());
    }
}
