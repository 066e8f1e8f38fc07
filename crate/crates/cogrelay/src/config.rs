//! Sweep configuration, read from TOML.
//!
//! ```toml
//! alpha = 3.0                # path-loss exponent, default 3
//! seed = 7                   # default 0
//! output = "results.csv"     # optional, overridden by --output
//!
//! [topology]                 # optional, default is the reference layout
//! primary = [0.7, 0.5]
//! source = [0.0, 0.0]
//! relays = [[0.6, 0.2], [0.8, 0.3]]
//! destination = [1.0, 0.0]
//!
//! [grid]
//! mu_db = [0.0, 5.0, 10.0]   # I_T/N0 in dB
//! modulations = [2, 4]       # QAM orders
//! hops = [2, 3]
//! pilots = ["perfect", 1, 4] # "perfect" or a pilot count L_p
//! pilot_power = "interference-matched"   # or a number, pilot energy / N0
//!
//! [routes]                   # optional: relays used for each hop count
//! 2 = [0]                    # default for N hops: the first N-1 relays
//! 3 = [0, 1]
//!
//! [sim]
//! block_length = 100
//! min_bit_errors = 100
//! max_blocks = 1000000
//! streams = 8                # default: available parallelism
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use cogrelay_core::channel::{CsiMode, EstimatorConfig, PilotPower, Point, Topology};
use cogrelay_core::sim::{
    SimConfig, DEFAULT_BLOCK_LENGTH, DEFAULT_MAX_BLOCKS, DEFAULT_MIN_BIT_ERRORS,
};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PilotSetting {
    Perfect,
    Pilots(u32),
}

impl PilotSetting {
    pub fn csi(self, pilot_power: PilotPower) -> CsiMode {
        match self {
            PilotSetting::Perfect => CsiMode::Perfect,
            PilotSetting::Pilots(pilots) => CsiMode::Estimated(EstimatorConfig {
                pilots,
                pilot_power,
            }),
        }
    }
}

impl fmt::Display for PilotSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PilotSetting::Perfect => f.write_str("perfect"),
            PilotSetting::Pilots(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for PilotSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "perfect" {
            return Ok(PilotSetting::Perfect);
        }
        s.parse()
            .map(PilotSetting::Pilots)
            .map_err(|_| format!("pilot setting must be \"perfect\" or a count, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Full topology; each hop count uses a relay subset of it.
    pub topology: Topology,
    pub alpha: f64,
    pub mu_db: Vec<f64>,
    pub modulations: Vec<u32>,
    pub hop_counts: Vec<usize>,
    pub routes: BTreeMap<usize, Vec<usize>>,
    pub pilots: Vec<PilotSetting>,
    pub pilot_power: PilotPower,
    pub block_length: usize,
    pub min_bit_errors: u64,
    pub max_blocks: u64,
    pub streams: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    /// Topology used for an `n_hops` chain.
    pub fn route(&self, n_hops: usize) -> Result<Topology> {
        let relays: Vec<usize> = match self.routes.get(&n_hops) {
            Some(r) => r.clone(),
            None => (0..n_hops.saturating_sub(1)).collect(),
        };
        Ok(self.topology.with_relays(&relays)?)
    }

    pub fn sim_config(
        &self,
        n_hops: usize,
        mu_db: f64,
        order: u32,
        pilots: PilotSetting,
    ) -> Result<SimConfig> {
        Ok(SimConfig {
            topology: self.route(n_hops)?,
            alpha: self.alpha,
            mu: db_to_linear(mu_db),
            bits_per_symbol: order.trailing_zeros(),
            csi: pilots.csi(self.pilot_power),
            block_length: self.block_length,
            min_bit_errors: self.min_bit_errors,
            max_blocks: self.max_blocks,
            seed: self.seed,
            streams: self.streams,
        })
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    alpha: Option<f64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    topology: Option<RawTopology>,
    grid: RawGrid,
    #[serde(default)]
    routes: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    sim: RawSim,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    primary: [f64; 2],
    source: [f64; 2],
    #[serde(default)]
    relays: Vec<[f64; 2]>,
    destination: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    mu_db: Vec<f64>,
    modulations: Vec<u32>,
    hops: Vec<usize>,
    pilots: Vec<RawPilot>,
    pilot_power: Option<RawPilotPower>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPilot {
    Count(i64),
    Label(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPilotPower {
    Energy(f64),
    Rule(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    block_length: Option<usize>,
    min_bit_errors: Option<u64>,
    max_blocks: Option<u64>,
    streams: Option<usize>,
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a config, reporting every violated constraint at once.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let raw: RawConfig = toml::from_str(text)?;
    let mut problems = Vec::new();

    let topology = match raw.topology {
        None => Some(Topology::reference()),
        Some(t) => {
            let mut chain = vec![point(t.source)];
            chain.extend(t.relays.into_iter().map(point));
            chain.push(point(t.destination));
            match Topology::new(point(t.primary), chain) {
                Ok(t) => Some(t),
                Err(e) => {
                    problems.push(format!("topology: {e}"));
                    None
                }
            }
        }
    };

    let alpha = raw.alpha.unwrap_or(3.0);
    if !(alpha > 0.0 && alpha.is_finite()) {
        problems.push(format!("alpha must be positive, got {alpha}"));
    }

    let grid = raw.grid;
    if grid.mu_db.is_empty() {
        problems.push("grid.mu_db is empty".into());
    }
    if let Some(bad) = grid.mu_db.iter().find(|m| !m.is_finite()) {
        problems.push(format!("grid.mu_db contains non-finite value {bad}"));
    }
    if grid.modulations.is_empty() {
        problems.push("grid.modulations is empty".into());
    }
    for &m in &grid.modulations {
        if !(2..=1024).contains(&m) || !m.is_power_of_two() {
            problems.push(format!(
                "grid.modulations: {m} is not a power of two in 2..=1024"
            ));
        }
    }
    if grid.hops.is_empty() {
        problems.push("grid.hops is empty".into());
    }

    let mut routes = BTreeMap::new();
    for (key, relays) in raw.routes {
        match key.parse::<usize>() {
            Ok(n) => {
                routes.insert(n, relays);
            }
            Err(_) => problems.push(format!("routes: key {key:?} is not a hop count")),
        }
    }
    if let Some(topo) = &topology {
        let available = topo.hops() - 1;
        for &n in &grid.hops {
            if n == 0 {
                problems.push("grid.hops: hop count must be at least 1".into());
                continue;
            }
            match routes.get(&n) {
                Some(r) if r.len() != n - 1 => problems.push(format!(
                    "routes.{n}: a {n}-hop route needs {} relays, got {}",
                    n - 1,
                    r.len()
                )),
                Some(r) => {
                    if let Some(bad) = r.iter().find(|&&i| i >= available) {
                        problems.push(format!(
                            "routes.{n}: relay index {bad} out of range ({available} relays)"
                        ));
                    }
                }
                None if n - 1 > available => problems.push(format!(
                    "grid.hops: {n} hops needs {} relays, topology has {available}",
                    n - 1
                )),
                None => {}
            }
        }
    }

    let mut pilots = Vec::new();
    if grid.pilots.is_empty() {
        problems.push("grid.pilots is empty".into());
    }
    for p in grid.pilots {
        match p {
            RawPilot::Count(n) if n >= 1 && n <= i64::from(u32::MAX) => {
                pilots.push(PilotSetting::Pilots(n as u32))
            }
            RawPilot::Count(n) => problems.push(format!("grid.pilots: count {n} must be >= 1")),
            RawPilot::Label(s) if s == "perfect" => pilots.push(PilotSetting::Perfect),
            RawPilot::Label(s) => problems.push(format!(
                "grid.pilots: {s:?} is neither \"perfect\" nor a count"
            )),
        }
    }

    let pilot_power = match grid.pilot_power {
        None => PilotPower::InterferenceMatched,
        Some(RawPilotPower::Rule(s)) if s == "interference-matched" => {
            PilotPower::InterferenceMatched
        }
        Some(RawPilotPower::Rule(s)) => {
            problems.push(format!(
                "grid.pilot_power: {s:?} is neither \"interference-matched\" nor a number"
            ));
            PilotPower::InterferenceMatched
        }
        Some(RawPilotPower::Energy(e)) => {
            if !(e > 0.0 && e.is_finite()) {
                problems.push(format!("grid.pilot_power must be positive, got {e}"));
            }
            PilotPower::Explicit(e)
        }
    };

    let sim = raw.sim;
    let block_length = sim.block_length.unwrap_or(DEFAULT_BLOCK_LENGTH);
    let min_bit_errors = sim.min_bit_errors.unwrap_or(DEFAULT_MIN_BIT_ERRORS);
    let max_blocks = sim.max_blocks.unwrap_or(DEFAULT_MAX_BLOCKS);
    let streams = sim
        .streams
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    for (name, value) in [
        ("sim.block_length", block_length as u64),
        ("sim.min_bit_errors", min_bit_errors),
        ("sim.max_blocks", max_blocks),
        ("sim.streams", streams as u64),
    ] {
        if value == 0 {
            problems.push(format!("{name} must be at least 1"));
        }
    }

    match topology {
        Some(topology) if problems.is_empty() => Ok(SweepConfig {
            topology,
            alpha,
            mu_db: grid.mu_db,
            modulations: grid.modulations,
            hop_counts: grid.hops,
            routes,
            pilots,
            pilot_power,
            block_length,
            min_bit_errors,
            max_blocks,
            streams,
            seed: raw.seed.unwrap_or(0),
            output: raw.output,
        }),
        _ => Err(Error::ConfigInvalid(problems)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
mu_db = [10.0]
modulations = [2]
hops = [2]
pilots = ["perfect", 1]
"#;

    #[test]
    fn defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.alpha, 3.0);
        assert_eq!(cfg.topology, Topology::reference());
        assert_eq!(cfg.block_length, 100);
        assert_eq!(cfg.pilot_power, PilotPower::InterferenceMatched);
        assert_eq!(
            cfg.pilots,
            vec![PilotSetting::Perfect, PilotSetting::Pilots(1)]
        );
        assert_eq!(cfg.seed, 0);
        let two = cfg.route(2).unwrap();
        assert_eq!(two.chain()[1], Point::new(0.6, 0.2));
        assert_eq!(cfg.route(3).unwrap().hops(), 3);
    }

    #[test]
    fn reference_layout_coordinates() {
        let t = Topology::reference();
        assert_eq!(t.primary(), Point::new(0.7, 0.5));
        assert_eq!(
            t.chain(),
            &[
                Point::new(0.0, 0.0),
                Point::new(0.6, 0.2),
                Point::new(0.8, 0.3),
                Point::new(1.0, 0.0)
            ]
        );
    }

    #[test]
    fn full_config() {
        let cfg = parse_config(
            r#"
alpha = 4.0
seed = 99
output = "out.csv"

[topology]
primary = [0.0, 1.0]
source = [0.0, 0.0]
relays = [[0.5, 0.0], [0.7, 0.0]]
destination = [1.0, 0.0]

[grid]
mu_db = [0, 10]
modulations = [4, 8]
hops = [1, 2]
pilots = [2]
pilot_power = 5.0

[routes]
2 = [1]

[sim]
block_length = 10
min_bit_errors = 50
max_blocks = 1000
streams = 2
"#,
        )
        .unwrap();
        assert_eq!(cfg.alpha, 4.0);
        assert_eq!(cfg.pilot_power, PilotPower::Explicit(5.0));
        assert_eq!(cfg.route(2).unwrap().chain()[1], Point::new(0.7, 0.0));
        assert_eq!(cfg.route(1).unwrap().hops(), 1);
        assert_eq!(cfg.output.as_deref(), Some(Path::new("out.csv")));
        let sim = cfg.sim_config(2, 10.0, 8, PilotSetting::Pilots(2)).unwrap();
        assert_eq!(sim.bits_per_symbol, 3);
        assert!((sim.mu - 10.0).abs() < 1e-12);
        assert_eq!((sim.block_length, sim.streams, sim.seed), (10, 2, 99));
    }

    #[test]
    fn every_violation_is_listed() {
        let err = parse_config(
            r#"
alpha = -1
[grid]
mu_db = []
modulations = [3]
hops = [4]
pilots = [0, "fuzzy"]
[sim]
streams = 0
"#,
        )
        .unwrap_err();
        let Error::ConfigInvalid(problems) = err else {
            panic!("expected validation error, got {err}");
        };
        assert_eq!(problems.len(), 7, "{problems:#?}");
        assert!(problems.iter().any(|p| p.contains("mu_db is empty")));
        assert!(problems.iter().any(|p| p.contains("4 hops needs 3 relays")));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_config("[grid]\nmu_db = [1,\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse(_)));
        assert!(err.to_string().contains("line"), "{err}");
        assert_eq!(err.exit_code(), 1);

        let err =
            parse_config("[grid]\nmu_db = [1]\nmodulations=[2]\nhops=[1]\npilots=[1]\ntypo = 3\n")
                .unwrap_err();
        assert!(err.to_string().contains("typo"), "{err}");
    }

    #[test]
    fn bad_routes() {
        let err = parse_config(&format!("{MINIMAL}\n[routes]\n2 = [0, 1]\n")).unwrap_err();
        assert!(err.to_string().contains("needs 1 relays"), "{err}");
        let err = parse_config(&format!("{MINIMAL}\n[routes]\n2 = [5]\n")).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn pilot_setting_text_round_trip() {
        for p in [PilotSetting::Perfect, PilotSetting::Pilots(7)] {
            assert_eq!(p.to_string().parse::<PilotSetting>().unwrap(), p);
        }
        assert!("x".parse::<PilotSetting>().is_err());
    }
}
