use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cogrelay::{load_config, run_sweep, write_csv, write_gnuplot, Error, RunMode};

/// BER of underlay decode-and-forward relay chains: closed form and
/// Monte-Carlo.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config and write a CSV.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// CSV destination; overrides `output` in the config. Default stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, conflicts_with = "sim_only")]
        analytic_only: bool,
        #[arg(long)]
        sim_only: bool,
        /// Also write a gnuplot script plotting the CSV (needs a CSV file).
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool, Error> {
    let Command::Run {
        config,
        output,
        seed,
        analytic_only,
        sim_only,
        gnuplot,
    } = cli.command;

    let mut cfg = load_config(&config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let mode = match (analytic_only, sim_only) {
        (true, _) => RunMode::AnalyticOnly,
        (_, true) => RunMode::SimOnly,
        _ => RunMode::Both,
    };
    let output = output.or(cfg.output.clone());
    if gnuplot.is_some() && output.is_none() {
        return Err(Error::ConfigInvalid(vec![
            "--gnuplot needs the CSV written to a file (--output or `output`)".into(),
        ]));
    }

    let rows = run_sweep(&cfg, mode);
    for r in rows.iter().filter(|r| r.status != "ok") {
        eprintln!(
            "mu_db={} M={} N={} L_p={}: {}",
            r.point.mu_db, r.point.order, r.point.n_hops, r.point.pilots, r.status
        );
    }

    match &output {
        Some(path) => write_csv(&rows, BufWriter::new(File::create(path)?))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&rows, &mut lock)?;
            lock.flush()?;
        }
    }
    if let (Some(script), Some(csv_path)) = (gnuplot, &output) {
        write_gnuplot(&rows, csv_path, BufWriter::new(File::create(script)?))?;
    }
    Ok(rows.iter().all(|r| !r.is_error()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
