//! CSV result files and an optional gnuplot script.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces the values bit for bit. Missing values are empty fields.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::config::PilotSetting;
use crate::error::{Error, Result};
use crate::sweep::{GridPoint, SweepRow};

pub const CSV_HEADER: [&str; 11] = [
    "mu_db",
    "M",
    "n_hops",
    "L_p",
    "ber_analytic",
    "ber_sim",
    "sim_stderr",
    "bits",
    "errors",
    "intf_exceedance",
    "status",
];

fn opt<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:?}", r.point.mu_db),
            r.point.order.to_string(),
            r.point.n_hops.to_string(),
            r.point.pilots.to_string(),
            opt(r.ber_analytic),
            opt(r.ber_sim),
            opt(r.sim_stderr),
            opt(r.bits),
            opt(r.errors),
            opt(r.intf_exceedance),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = &rec[i];
    raw.parse().map_err(|_| {
        Error::Malformed(format!(
            "line {}: bad {} value {raw:?}",
            rec.position().map_or(0, |p| p.line()),
            CSV_HEADER[i]
        ))
    })
}

fn opt_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    if rec[i].is_empty() {
        Ok(None)
    } else {
        field(rec, i).map(Some)
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Malformed(format!(
            "unexpected header, want {}",
            CSV_HEADER.join(",")
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let pilots: PilotSetting = rec[3].parse().map_err(|e: String| Error::Malformed(e))?;
            Ok(SweepRow {
                point: GridPoint {
                    mu_db: field(&rec, 0)?,
                    order: field(&rec, 1)?,
                    n_hops: field(&rec, 2)?,
                    pilots,
                },
                ber_analytic: opt_field(&rec, 4)?,
                ber_sim: opt_field(&rec, 5)?,
                sim_stderr: opt_field(&rec, 6)?,
                bits: opt_field(&rec, 7)?,
                errors: opt_field(&rec, 8)?,
                intf_exceedance: opt_field(&rec, 9)?,
                status: rec[10].to_owned(),
            })
        })
        .collect()
}

/// Writes a gnuplot script that plots BER against μ from `csv_path`, one
/// analytic line and one set of simulated points per (M, N, L_p) series.
pub fn write_gnuplot<W: Write>(rows: &[SweepRow], csv_path: &Path, mut out: W) -> Result<()> {
    let mut series: Vec<(u32, usize, PilotSetting)> = Vec::new();
    for r in rows {
        let key = (r.point.order, r.point.n_hops, r.point.pilots);
        if !series.contains(&key) {
            series.push(key);
        }
    }
    let has_analytic = rows.iter().any(|r| r.ber_analytic.is_some());
    let has_sim = rows.iter().any(|r| r.ber_sim.is_some());
    let file = csv_path.display().to_string().replace('\'', "''");

    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale y\nset format y '10^{%L}'\n");
    s.push_str("set xlabel 'I_T/N_0 (dB)'\nset ylabel 'BER'\nset key outside right\n");
    s.push_str("set grid\nplot \\\n");
    let mut clauses = Vec::new();
    for (k, (m, n, lp)) in series.iter().enumerate() {
        let filter = format!("$2=={m} && $3=={n} && strcol(4) eq '{lp}'");
        let title = format!("M={m}, N={n}, L_p={lp}");
        let colour = k + 1;
        if has_analytic {
            clauses.push(format!(
                "  '{file}' skip 1 using 1:(({filter}) ? $5 : 1/0) with lines lc {colour} title '{title}'"
            ));
        }
        if has_sim {
            clauses.push(format!(
                "  '{file}' skip 1 using 1:(({filter}) ? $6 : 1/0) with points lc {colour} pt 7 {}",
                if has_analytic {
                    "notitle".to_owned()
                } else {
                    format!("title '{title}'")
                }
            ));
        }
    }
    let _ = writeln!(s, "{}", clauses.join(", \\\n"));
    out.write_all(s.as_bytes())?;
    Ok(())
}
