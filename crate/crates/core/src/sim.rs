//! Per-block Monte-Carlo kernel for the decode-and-forward chain.
//!
//! One block is one fading realization of every link: `K` symbols from the
//! source pass through each hop in turn, and every relay makes hard decisions
//! against its channel estimate before re-modulating. Noise power is `N₀ = 1`,
//! so the interference cap is `I_T = μ`.
//!
//! Randomness for block `b` comes from ChaCha8 seeded with the run seed on
//! stream `b`, so every block is reproducible on its own and any partition of
//! blocks across workers gives the same counts.

use alloc::vec::Vec;
use core::ops::AddAssign;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{build_hop_params, CsiMode, HopParams, Topology};
use crate::error::{Error, Result};
use crate::qam::Constellation;

pub const DEFAULT_BLOCK_LENGTH: usize = 100;
pub const DEFAULT_MIN_BIT_ERRORS: u64 = 100;
pub const DEFAULT_MAX_BLOCKS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub alpha: f64,
    /// Linear `I_T / N₀`.
    pub mu: f64,
    pub bits_per_symbol: u32,
    pub csi: CsiMode,
    /// Symbols per fading block (`K`).
    pub block_length: usize,
    /// Stop once the destination has seen this many bit errors...
    pub min_bit_errors: u64,
    /// ...or after this many blocks.
    pub max_blocks: u64,
    pub seed: u64,
    /// Worker partitions; blocks are dealt round-robin.
    pub streams: usize,
}

impl SimConfig {
    pub fn new(topology: Topology, mu: f64, bits_per_symbol: u32, csi: CsiMode) -> Self {
        Self {
            topology,
            alpha: 3.0,
            mu,
            bits_per_symbol,
            csi,
            block_length: DEFAULT_BLOCK_LENGTH,
            min_bit_errors: DEFAULT_MIN_BIT_ERRORS,
            max_blocks: DEFAULT_MAX_BLOCKS,
            seed: 0,
            streams: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_length == 0 {
            return Err(Error::InvalidParameter("block length must be at least 1"));
        }
        if self.min_bit_errors == 0 {
            return Err(Error::InvalidParameter("min_bit_errors must be at least 1"));
        }
        if self.max_blocks == 0 {
            return Err(Error::InvalidParameter("max_blocks must be at least 1"));
        }
        if self.streams == 0 {
            return Err(Error::InvalidParameter("streams must be at least 1"));
        }
        Ok(())
    }
}

/// One fading realization of a hop's data link and of its transmitter's link
/// to the primary receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopChannels {
    pub h_hat: Complex64,
    pub eps: Complex64,
    pub h: Complex64,
    pub h_hat_tp: Complex64,
    pub eps_tp: Complex64,
    pub h_tp: Complex64,
    /// Transmit energy `I_T / |ĥ_tP|²`.
    pub power: f64,
}

impl HopChannels {
    pub fn new(
        h_hat: Complex64,
        eps: Complex64,
        h_hat_tp: Complex64,
        eps_tp: Complex64,
        interference_cap: f64,
    ) -> Self {
        Self {
            h_hat,
            eps,
            h: h_hat + eps,
            h_hat_tp,
            eps_tp,
            h_tp: h_hat_tp + eps_tp,
            power: interference_cap / h_hat_tp.norm_sqr(),
        }
    }

    /// Whether the power set from the estimate overshoots the cap at the
    /// primary receiver: `B′|h_tP|² > I_T`, i.e. `|h_tP|² > |ĥ_tP|²`.
    pub fn exceeds_cap(&self) -> bool {
        self.h_tp.norm_sqr() > self.h_hat_tp.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockChannels {
    pub hops: Vec<HopChannels>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialCounts {
    pub blocks: u64,
    pub errors: u64,
    pub bits: u64,
    pub exceedances: u64,
    pub tx_events: u64,
}

impl AddAssign for TrialCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.blocks += rhs.blocks;
        self.errors += rhs.errors;
        self.bits += rhs.bits;
        self.exceedances += rhs.exceedances;
        self.tx_events += rhs.tx_events;
    }
}

/// Random stream for block `block_index` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block_index);
    rng
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = libm::sqrt(0.5 * variance);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Everything about a [`SimConfig`] that is fixed across blocks.
#[derive(Debug, Clone)]
pub struct ChainModel {
    hops: Vec<HopParams>,
    constellation: Constellation,
    block_length: usize,
    mu: f64,
}

impl ChainModel {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let hops = (1..=cfg.topology.hops())
            .map(|h| build_hop_params(&cfg.topology, h, cfg.alpha, cfg.mu, &cfg.csi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            hops,
            constellation: Constellation::new(cfg.bits_per_symbol)?,
            block_length: cfg.block_length,
            mu: cfg.mu,
        })
    }

    pub fn hops(&self) -> &[HopParams] {
        &self.hops
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    /// Draws `ĥ ~ CN(0, η − σ)` and `ε ~ CN(0, σ)` for every data and primary
    /// link, in hop order.
    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockChannels {
        let hops = self
            .hops
            .iter()
            .map(|p| {
                let h_hat = complex_normal(rng, p.estimate_variance_tr());
                let eps = complex_normal(rng, p.sigma_tr());
                let h_hat_tp = complex_normal(rng, p.estimate_variance_tp());
                let eps_tp = complex_normal(rng, p.sigma_tp());
                HopChannels::new(h_hat, eps, h_hat_tp, eps_tp, self.mu)
            })
            .collect();
        BlockChannels { hops }
    }

    fn forward_symbols<R: Rng + ?Sized>(
        &self,
        link: &HopChannels,
        tx: &[u32],
        n0: f64,
        rng: &mut R,
        rx: &mut Vec<u32>,
    ) -> Result<()> {
        let amplitude = libm::sqrt(link.power);
        let gain = link.h_hat * amplitude;
        if gain.norm_sqr() == 0.0 || !gain.norm_sqr().is_finite() {
            return Err(Error::DegenerateChannel);
        }
        let equalizer = gain.inv();
        let through = link.h * amplitude;
        rx.clear();
        rx.extend(tx.iter().map(|&label| {
            let y = through * self.constellation.point(label) + complex_normal(rng, n0);
            self.constellation.detect(y * equalizer)
        }));
        Ok(())
    }

    /// Sends `tx_bits` over hop `hop_index` (1-based) of `block`: scaled by
    /// `√B′`, through the true channel `h`, plus `CN(0, n0)` noise, detected
    /// against `ĥ`.
    pub fn run_hop<R: Rng + ?Sized>(
        &self,
        block: &BlockChannels,
        hop_index: usize,
        tx_bits: &[u8],
        n0: f64,
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        let link = hop_index
            .checked_sub(1)
            .and_then(|i| block.hops.get(i))
            .ok_or(Error::HopOutOfRange {
                index: hop_index,
                hops: block.hops.len(),
            })?;
        let tx = self.constellation.labels_from_bits(tx_bits)?;
        let mut rx = Vec::with_capacity(tx.len());
        self.forward_symbols(link, &tx, n0, rng, &mut rx)?;
        Ok(self.constellation.bits_from_labels(&rx))
    }

    /// Source-to-destination pass over a given block.
    pub fn run_chain_on<R: Rng + ?Sized>(
        &self,
        block: &BlockChannels,
        rng: &mut R,
    ) -> Result<TrialCounts> {
        let m = self.constellation.order();
        let source: Vec<u32> = (0..self.block_length)
            .map(|_| rng.random_range(0..m))
            .collect();
        let mut current = source.clone();
        let mut next = Vec::with_capacity(self.block_length);
        for link in &block.hops {
            self.forward_symbols(link, &current, 1.0, rng, &mut next)?;
            core::mem::swap(&mut current, &mut next);
        }
        let errors = source
            .iter()
            .zip(&current)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum();
        Ok(TrialCounts {
            blocks: 1,
            errors,
            bits: (self.block_length as u64) * u64::from(self.constellation.bits_per_symbol()),
            exceedances: block.hops.iter().filter(|h| h.exceeds_cap()).count() as u64,
            tx_events: block.hops.len() as u64,
        })
    }

    /// Draws one block and runs the chain over it.
    pub fn run_chain_trial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialCounts> {
        let block = self.sample_block(rng);
        self.run_chain_on(&block, rng)
    }

    /// Block `block_index` of the run seeded with `seed`.
    pub fn run_block(&self, seed: u64, block_index: u64) -> Result<TrialCounts> {
        self.run_chain_trial(&mut block_rng(seed, block_index))
    }

    /// Interference exceedances of block `block_index`, channels only.
    /// Draws the same channels as [`run_block`](Self::run_block).
    pub fn exceedance_block(&self, seed: u64, block_index: u64) -> TrialCounts {
        let block = self.sample_block(&mut block_rng(seed, block_index));
        TrialCounts {
            blocks: 1,
            exceedances: block.hops.iter().filter(|h| h.exceeds_cap()).count() as u64,
            tx_events: block.hops.len() as u64,
            ..TrialCounts::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{end_to_end_ber, hop_ber, ModParams};
    use crate::channel::{EstimatorConfig, Point};

    fn estimated(lp: u32) -> CsiMode {
        CsiMode::Estimated(EstimatorConfig::interference_matched(lp))
    }

    fn model(topology: Topology, mu: f64, q: u32, csi: CsiMode, k: usize) -> ChainModel {
        let mut cfg = SimConfig::new(topology, mu, q, csi);
        cfg.block_length = k;
        ChainModel::new(&cfg).unwrap()
    }

    fn pooled(model: &ChainModel, seed: u64, blocks: u64) -> TrialCounts {
        let mut total = TrialCounts::default();
        for b in 0..blocks {
            total += model.run_block(seed, b).unwrap();
        }
        total
    }

    #[test]
    fn perfect_csi_has_no_estimation_error() {
        let m = model(Topology::reference(), 10.0, 2, CsiMode::Perfect, 10);
        let mut rng = block_rng(1, 0);
        for _ in 0..100 {
            for h in m.sample_block(&mut rng).hops {
                assert_eq!(h.eps, Complex64::new(0.0, 0.0));
                assert_eq!(h.h, h.h_hat);
                assert_eq!(h.h_tp, h.h_hat_tp);
                assert!(!h.exceeds_cap());
            }
        }
    }

    #[test]
    fn construction_invariants() {
        let m = model(Topology::reference(), 10.0, 2, estimated(1), 10);
        let mut rng = block_rng(2, 0);
        for _ in 0..1000 {
            for h in m.sample_block(&mut rng).hops {
                assert_eq!(h.h, h.h_hat + h.eps);
                assert!((h.power * h.h_hat_tp.norm_sqr() / 10.0 - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn channel_power_matches_path_loss() {
        let m = model(Topology::reference(), 10.0, 2, estimated(1), 1);
        let mut rng = block_rng(3, 0);
        let n = 1_000_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            for (s, h) in sums.iter_mut().zip(m.sample_block(&mut rng).hops) {
                *s += h.h.norm_sqr();
            }
        }
        for (s, p) in sums.iter().zip(m.hops()) {
            let mean = s / n as f64;
            assert!(
                (mean / p.eta_tr() - 1.0).abs() < 0.01,
                "{mean} vs {}",
                p.eta_tr()
            );
        }
    }

    #[test]
    fn blocks_are_reproducible() {
        let m = model(Topology::reference(), 10.0, 2, estimated(1), 10);
        let a = m.sample_block(&mut block_rng(9, 42));
        let b = m.sample_block(&mut block_rng(9, 42));
        assert_eq!(a, b);
        assert_ne!(a, m.sample_block(&mut block_rng(9, 43)));
        assert_eq!(m.run_block(9, 42), m.run_block(9, 42));
    }

    #[test]
    fn noiseless_perfect_csi_hop_is_transparent() {
        let m = model(Topology::reference(), 10.0, 4, CsiMode::Perfect, 50);
        let mut rng = block_rng(5, 0);
        let bits: Vec<u8> = (0..200).map(|_| rng.random_range(0..2u8)).collect();
        for _ in 0..100 {
            let block = m.sample_block(&mut rng);
            for hop in 1..=3 {
                assert_eq!(m.run_hop(&block, hop, &bits, 0.0, &mut rng).unwrap(), bits);
            }
        }
    }

    #[test]
    fn estimation_error_alone_causes_errors() {
        let m = model(Topology::reference(), 1.0, 4, estimated(1), 50);
        let mut rng = block_rng(6, 0);
        let bits: Vec<u8> = (0..200).map(|_| rng.random_range(0..2u8)).collect();
        let mut wrong = 0;
        for _ in 0..200 {
            let block = m.sample_block(&mut rng);
            if m.run_hop(&block, 1, &bits, 0.0, &mut rng).unwrap() != bits {
                wrong += 1;
            }
        }
        assert!(wrong > 0);
    }

    #[test]
    fn run_hop_errors() {
        let m = model(Topology::reference(), 10.0, 2, CsiMode::Perfect, 4);
        let mut rng = block_rng(0, 0);
        let block = m.sample_block(&mut rng);
        assert!(m.run_hop(&block, 0, &[0, 1], 1.0, &mut rng).is_err());
        assert!(m.run_hop(&block, 4, &[0, 1], 1.0, &mut rng).is_err());
        assert!(m.run_hop(&block, 1, &[0, 1, 1], 1.0, &mut rng).is_err());
    }

    fn strong_link(gain: f64) -> HopChannels {
        HopChannels::new(
            Complex64::new(gain, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            1e6,
        )
    }

    #[test]
    fn strong_channels_give_no_errors() {
        let m = model(Topology::reference(), 1e6, 4, CsiMode::Perfect, 100);
        let block = BlockChannels {
            hops: alloc::vec![strong_link(1e3); 3],
        };
        let mut rng = block_rng(0, 0);
        for _ in 0..50 {
            let c = m.run_chain_on(&block, &mut rng).unwrap();
            assert_eq!(c.errors, 0);
            assert_eq!(c.bits, 400);
        }
    }

    #[test]
    fn error_free_second_hop_passes_first_hop_errors_through() {
        let two_hop = Topology::reference().with_relays(&[0]).unwrap();
        let m = model(two_hop, 3.0, 2, CsiMode::Perfect, 64);
        let mut rng = block_rng(11, 0);
        for _ in 0..200 {
            let mut block = m.sample_block(&mut rng);
            block.hops[1] = strong_link(1e4);
            // replay the same randomness through hop 1 alone
            let mut replay = rng.clone();
            let chain = m.run_chain_on(&block, &mut rng).unwrap();

            let src: Vec<u32> = (0..64).map(|_| replay.random_range(0..4)).collect();
            let bits = m.constellation().bits_from_labels(&src);
            let out = m.run_hop(&block, 1, &bits, 1.0, &mut replay).unwrap();
            let direct = bits.iter().zip(&out).filter(|(a, b)| a != b).count() as u64;
            assert_eq!(chain.errors, direct);
        }
    }

    fn assert_within_3_stderr(counts: TrialCounts, expected: f64) {
        let p = counts.errors as f64 / counts.bits as f64;
        let se = (expected * (1.0 - expected) / counts.bits as f64).sqrt();
        assert!(
            (p - expected).abs() <= 3.0 * se,
            "simulated {p} vs analytic {expected} (stderr {se})"
        );
    }

    #[test]
    fn single_hop_bpsk_matches_closed_form() {
        // K = 1: every bit sees an independent channel, so the binomial
        // standard error is the right yardstick.
        let one_hop = Topology::new(
            Point::new(0.7, 0.5),
            alloc::vec![Point::new(0.0, 0.0), Point::new(0.6, 0.2)],
        )
        .unwrap();
        let m = model(one_hop, 10.0, 1, CsiMode::Perfect, 1);
        let analytic = hop_ber(&m.hops()[0], &ModParams::new(1).unwrap())
            .unwrap()
            .value();
        assert_within_3_stderr(pooled(&m, 21, 2_000_000), analytic);
    }

    #[test]
    fn two_hop_bpsk_matches_combined_closed_form() {
        let two_hop = Topology::reference().with_relays(&[0]).unwrap();
        let m = model(two_hop, 10.0, 1, CsiMode::Perfect, 1);
        let bpsk = ModParams::new(1).unwrap();
        let per_hop: Vec<f64> = m
            .hops()
            .iter()
            .map(|h| hop_ber(h, &bpsk).unwrap().value())
            .collect();
        assert_within_3_stderr(pooled(&m, 22, 2_000_000), end_to_end_ber(&per_hop).unwrap());
    }

    #[test]
    fn single_hop_chain_counts() {
        let one_hop = Topology::reference().with_relays(&[]).unwrap();
        let m = model(one_hop, 10.0, 3, estimated(2), 33);
        let c = m.run_block(1, 1).unwrap();
        assert_eq!((c.blocks, c.bits, c.tx_events), (1, 99, 1));
    }

    #[test]
    fn exceedance_block_matches_chain_block() {
        let m = model(Topology::reference(), 10.0, 2, estimated(1), 10);
        for b in 0..100 {
            assert_eq!(
                m.run_block(4, b).unwrap().exceedances,
                m.exceedance_block(4, b).exceedances
            );
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(Topology::reference(), 1.0, 2, CsiMode::Perfect);
        assert!(cfg.validate().is_ok());
        cfg.block_length = 0;
        assert!(ChainModel::new(&cfg).is_err());
        cfg.block_length = 1;
        cfg.max_blocks = 0;
        assert!(cfg.validate().is_err());
    }
}
