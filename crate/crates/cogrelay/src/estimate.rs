//! Monte-Carlo BER and interference-exceedance estimates.
//!
//! Blocks are processed in batches; within a batch block `b` goes to stream
//! `b mod streams`. Each block draws from its own deterministic random stream
//! and results are merged back in block order, stopping at the first block
//! where the error target is met. The counts are therefore identical for any
//! number of streams.

use cogrelay_core::sim::{ChainModel, SimConfig, TrialCounts};
use rayon::prelude::*;

use crate::error::Result;

const BLOCKS_PER_STREAM: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub errors: u64,
    pub bits: u64,
    pub blocks: u64,
    pub ber: f64,
    /// Binomial standard error `√(p(1−p)/bits)`. Treats bits as independent,
    /// which understates the spread when fading is constant over a block.
    pub stderr: f64,
    /// Standard error from the spread of per-block error rates, which
    /// accounts for errors clustering within a fading block.
    pub block_stderr: f64,
    /// Fraction of (block, transmitter) pairs whose interference at the
    /// primary receiver exceeded the cap.
    pub interference_exceedance: f64,
    /// The block budget ran out before `min_bit_errors` was reached.
    pub budget_exhausted: bool,
}

impl BerEstimate {
    fn from_counts(c: TrialCounts, sum_sq_rate: f64, target: u64) -> Self {
        let ber = c.errors as f64 / c.bits as f64;
        let b = c.blocks as f64;
        let block_var = if c.blocks > 1 {
            ((sum_sq_rate - b * ber * ber) / (b - 1.0)).max(0.0)
        } else {
            f64::NAN
        };
        Self {
            errors: c.errors,
            bits: c.bits,
            blocks: c.blocks,
            ber,
            stderr: (ber * (1.0 - ber) / c.bits as f64).sqrt(),
            block_stderr: (block_var / b).sqrt(),
            interference_exceedance: c.exceedances as f64 / c.tx_events as f64,
            budget_exhausted: c.errors < target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

fn run_batch<F>(start: u64, end: u64, streams: usize, f: F) -> Result<Vec<Vec<TrialCounts>>>
where
    F: Fn(u64) -> Result<TrialCounts> + Sync,
{
    (0..streams as u64)
        .into_par_iter()
        .map(|s| {
            (start + s..end)
                .step_by(streams)
                .map(&f)
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

pub fn estimate_ber(cfg: &SimConfig) -> Result<BerEstimate> {
    let model = ChainModel::new(cfg)?;
    let streams = cfg.streams;
    let batch = streams as u64 * BLOCKS_PER_STREAM;
    let mut total = TrialCounts::default();
    let mut sum_sq_rate = 0.0;
    let mut next = 0;

    'outer: while next < cfg.max_blocks {
        let end = (next + batch).min(cfg.max_blocks);
        let per_stream = run_batch(next, end, streams, |b| Ok(model.run_block(cfg.seed, b)?))?;
        for offset in 0..(end - next) as usize {
            let block = per_stream[offset % streams][offset / streams];
            let rate = block.errors as f64 / block.bits as f64;
            sum_sq_rate += rate * rate;
            total += block;
            if total.errors >= cfg.min_bit_errors {
                break 'outer;
            }
        }
        next = end;
    }
    Ok(BerEstimate::from_counts(
        total,
        sum_sq_rate,
        cfg.min_bit_errors,
    ))
}

/// Fraction of (block, transmitter) pairs with `B′|h_tP|² > I_T`, over all
/// `max_blocks` blocks. Only channels are drawn.
pub fn estimate_interference_probability(cfg: &SimConfig) -> Result<Proportion> {
    let model = ChainModel::new(cfg)?;
    let batch = cfg.streams as u64 * BLOCKS_PER_STREAM * 16;
    let mut total = TrialCounts::default();
    let mut next = 0;
    while next < cfg.max_blocks {
        let end = (next + batch).min(cfg.max_blocks);
        for stream in run_batch(next, end, cfg.streams, |b| {
            Ok(model.exceedance_block(cfg.seed, b))
        })? {
            for c in stream {
                total += c;
            }
        }
        next = end;
    }
    let p = total.exceedances as f64 / total.tx_events as f64;
    Ok(Proportion {
        value: p,
        stderr: (p * (1.0 - p) / total.tx_events as f64).sqrt(),
        trials: total.tx_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogrelay_core::channel::{CsiMode, EstimatorConfig, Topology};

    fn config(mu: f64, csi: CsiMode) -> SimConfig {
        let mut cfg = SimConfig::new(Topology::reference(), mu, 2, csi);
        cfg.seed = 17;
        cfg
    }

    #[test]
    fn stream_count_does_not_change_counts() {
        let mut cfg = config(
            10.0,
            CsiMode::Estimated(EstimatorConfig::interference_matched(1)),
        );
        cfg.min_bit_errors = 5_000;
        cfg.streams = 1;
        let one = estimate_ber(&cfg).unwrap();
        cfg.streams = 8;
        let eight = estimate_ber(&cfg).unwrap();
        cfg.streams = 3;
        let three = estimate_ber(&cfg).unwrap();
        assert_eq!(one, eight);
        assert_eq!(one, three);
        assert!(one.errors >= 5_000 && !one.budget_exhausted);
        // fading blocks cluster errors
        assert!(one.block_stderr > 2.0 * one.stderr, "{one:?}");
    }

    #[test]
    fn budget_cap_is_reported() {
        let mut cfg = config(1e4, CsiMode::Perfect);
        cfg.min_bit_errors = 100;
        cfg.max_blocks = 3;
        let est = estimate_ber(&cfg).unwrap();
        assert!(est.budget_exhausted);
        assert_eq!(est.blocks, 3);
        assert_eq!(est.bits, 3 * 100 * 2);
    }

    #[test]
    fn perfect_csi_never_exceeds_cap() {
        let mut cfg = config(10.0, CsiMode::Perfect);
        cfg.max_blocks = 50_000;
        cfg.streams = 4;
        assert_eq!(estimate_interference_probability(&cfg).unwrap().value, 0.0);
        cfg.min_bit_errors = 1_000;
        assert_eq!(estimate_ber(&cfg).unwrap().interference_exceedance, 0.0);
    }

    #[test]
    fn exceedance_with_single_pilot() {
        let mut cfg = config(
            10.0,
            CsiMode::Estimated(EstimatorConfig::interference_matched(1)),
        );
        cfg.max_blocks = 1_000_000;
        cfg.streams = 8;
        let p = estimate_interference_probability(&cfg).unwrap();
        assert_eq!(p.trials, 3_000_000);
        assert!(p.value > 0.0 && p.value < 1.0);
        assert!(p.stderr < 1e-3);
        // Given ε, |ĥ+ε|² > |ĥ|² iff 2Re(ĥ*ε) > −|ε|², a Gaussian event;
        // averaging over Rayleigh |ε| gives ½(1 + √(g/(1+g))), g = σ/(4(η−σ)).
        let model = ChainModel::new(&cfg).unwrap();
        let expected = model
            .hops()
            .iter()
            .map(|h| {
                let g = h.sigma_tp() / (4.0 * (h.eta_tp() - h.sigma_tp()));
                0.5 * (1.0 + (g / (1.0 + g)).sqrt())
            })
            .sum::<f64>()
            / 3.0;
        assert!(
            (p.value - expected).abs() < 4.0 * p.stderr,
            "{} vs {expected}",
            p.value
        );
    }

    #[test]
    fn nearly_useless_primary_estimate_almost_always_exceeds() {
        use cogrelay_core::channel::PilotPower;
        use cogrelay_core::Point;
        // η_tP = 0.5; pilot energy 2 would give σ_tP = η_tP exactly
        let mut cfg = config(
            10.0,
            CsiMode::Estimated(EstimatorConfig {
                pilots: 1,
                pilot_power: PilotPower::Explicit(2.0001),
            }),
        );
        cfg.topology = Topology::new(
            Point::new(2f64.cbrt(), 0.0),
            vec![Point::new(0.0, 0.0), Point::new(0.0, 0.01)],
        )
        .unwrap();
        cfg.max_blocks = 100_000;
        let p = estimate_interference_probability(&cfg).unwrap();
        assert!(p.value > 0.99, "{}", p.value);
    }
}
