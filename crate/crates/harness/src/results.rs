//! Sweep results as CSV, plus the matching plot script.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::AttackKind;
use crate::error::{self, HarnessError, Result};

pub const HEADER: [&str; 7] = [
    "snr_db",
    "attack",
    "ser",
    "trials",
    "ci_halfwidth",
    "scatterers",
    "attack_channel",
];

/// Attack-channel label of rows that carry no adversary signal.
pub const NO_CHANNEL: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub attack: AttackKind,
    pub ser: f64,
    pub trials: u64,
    pub ci_halfwidth: f64,
    pub scatterers: usize,
    /// `ideal`, `double_scattering`, or `none` for the secured system.
    pub attack_channel: String,
}

impl ResultRow {
    fn sort_key(&self) -> (usize, &str, AttackKind, f64) {
        (
            self.scatterers,
            &self.attack_channel,
            self.attack,
            self.snr_db,
        )
    }
}

/// Canonical row order, so the file does not depend on evaluation order.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(&kb.0)
            .then_with(|| ka.1.cmp(kb.1))
            .then_with(|| ka.2.cmp(&kb.2))
            .then_with(|| ka.3.total_cmp(&kb.3))
    });
}

/// Shortest scientific form carrying 17 significant digits, which
/// round-trips every finite double exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            format_f64(r.snr_db),
            r.attack.name().to_string(),
            format_f64(r.ser),
            r.trials.to_string(),
            format_f64(r.ci_halfwidth),
            r.scatterers.to_string(),
            r.attack_channel.clone(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    error::write(path, to_csv(rows))
}

pub fn parse_csv(bytes: &[u8], path: &Path) -> Result<Vec<ResultRow>> {
    let bad = |reason: String| HarnessError::format("results", path, reason);
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad {}", line + 1, HEADER[i])))
        };
        let int = |i: usize| {
            field(i)
                .parse::<u64>()
                .map_err(|_| bad(format!("row {}: bad {}", line + 1, HEADER[i])))
        };
        rows.push(ResultRow {
            snr_db: num(0)?,
            attack: AttackKind::parse(field(1))
                .ok_or_else(|| bad(format!("row {}: unknown attack", line + 1)))?,
            ser: num(2)?,
            trials: int(3)?,
            ci_halfwidth: num(4)?,
            scatterers: int(5)? as usize,
            attack_channel: field(6).to_string(),
        });
    }
    Ok(rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    parse_csv(&error::read(path)?, path)
}

/// Distinct series labels in row order: the attack name, qualified by
/// scatterer count and attack channel when those vary.
pub fn series_labels(rows: &[ResultRow]) -> Vec<String> {
    let mut scs: Vec<usize> = rows.iter().map(|r| r.scatterers).collect();
    scs.dedup();
    scs.sort_unstable();
    scs.dedup();
    let mut chans: Vec<&str> = rows
        .iter()
        .map(|r| r.attack_channel.as_str())
        .filter(|c| *c != NO_CHANNEL)
        .collect();
    chans.sort_unstable();
    chans.dedup();
    let mut labels: Vec<String> = Vec::new();
    for r in rows {
        let mut l = r.attack.name().to_string();
        if chans.len() > 1 && r.attack_channel != NO_CHANNEL {
            l = format!("{l} ({})", r.attack_channel);
        }
        if scs.len() > 1 {
            l = format!("{l}, SC={}", r.scatterers);
        }
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    labels
}

/// Python script drawing SER against SNR on a log axis, one line per
/// series, from the CSV next to it.
pub fn plot_script(csv_name: &str, rows: &[ResultRow]) -> String {
    let labels = series_labels(rows);
    let series: String = labels.iter().map(|l| format!("    {l:?},\n")).collect();
    format!(
        r#"#!/usr/bin/env python3
"""SER versus SNR for every benchmark in {csv_name}."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, "{csv_name}")
SERIES = [
{series}]


def label(row, qualify_channel, qualify_sc):
    name = row["attack"]
    if qualify_channel and row["attack_channel"] != "none":
        name += " (" + row["attack_channel"] + ")"
    if qualify_sc:
        name += ", SC=" + row["scatterers"]
    return name


def main():
    with open(CSV, newline="") as f:
        rows = list(csv.DictReader(f))
    channels = {{r["attack_channel"] for r in rows if r["attack_channel"] != "none"}}
    scatterers = {{r["scatterers"] for r in rows}}
    curves = {{name: ([], []) for name in SERIES}}
    for r in rows:
        xs, ys = curves[label(r, len(channels) > 1, len(scatterers) > 1)]
        xs.append(float(r["snr_db"]))
        ys.append(float(r["ser"]))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name in SERIES:
        xs, ys = curves[name]
        pts = sorted(zip(xs, ys))
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-6) for p in pts], marker="o", label=name)
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("SER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "ser_vs_snr.png")
    fig.savefig(out, dpi=150)
    print(f"{{len(SERIES)}} series -> {{out}}")


if __name__ == "__main__":
    main()
"#
    )
}

pub fn write_plot_script(csv_name: &str, rows: &[ResultRow], path: &Path) -> Result<()> {
    error::write(path, plot_script(csv_name, rows))
}
