//! Perturbation export: one CSV row holding the budget metadata followed by
//! the interleaved real and imaginary parts `re0,im0,re1,im1,...`.

use std::path::Path;

use risae_core::attack::PerturbationVector;
use risae_core::linalg::C64;

use crate::config::AttackKind;
use crate::error::{self, HarnessError, Result};
use crate::results::format_f64;

const META: [&str; 6] = [
    "attack",
    "psr_db",
    "budget",
    "snr_db",
    "attack_channel",
    "dim",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFile {
    pub attack: AttackKind,
    pub psr_db: f64,
    pub snr_db: f64,
    pub attack_channel: String,
    pub perturbation: PerturbationVector,
}

pub fn to_csv(p: &PerturbationFile) -> Vec<u8> {
    let dim = p.perturbation.values.len();
    let mut header: Vec<String> = META.iter().map(|s| s.to_string()).collect();
    for k in 0..dim {
        header.push(format!("re{k}"));
        header.push(format!("im{k}"));
    }
    let mut row = vec![
        p.attack.name().to_string(),
        format_f64(p.psr_db),
        format_f64(p.perturbation.budget),
        format_f64(p.snr_db),
        p.attack_channel.clone(),
        dim.to_string(),
    ];
    for z in &p.perturbation.values {
        row.push(format_f64(z.re));
        row.push(format_f64(z.im));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    w.write_record(&row).expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

pub fn write(p: &PerturbationFile, path: &Path) -> Result<()> {
    error::write(path, to_csv(p))
}

pub fn parse(bytes: &[u8], path: &Path) -> Result<PerturbationFile> {
    let bad = |reason: &str| HarnessError::format("perturbation", path, reason);
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers().map_err(|e| bad(&e.to_string()))?.clone();
    if header.iter().take(META.len()).ne(META) {
        return Err(bad("unexpected header"));
    }
    let rec = rdr
        .records()
        .next()
        .ok_or_else(|| bad("no data row"))?
        .map_err(|e| bad(&e.to_string()))?;
    let num = |i: usize| {
        rec.get(i)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| bad("bad number"))
    };
    let dim: usize = rec
        .get(5)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad dim"))?;
    if rec.len() != META.len() + 2 * dim || header.len() != rec.len() {
        return Err(bad("component count does not match dim"));
    }
    let values: Vec<C64> = (0..dim)
        .map(|k| Ok(C64::new(num(6 + 2 * k)?, num(7 + 2 * k)?)))
        .collect::<Result<_>>()?;
    let budget = num(2)?;
    let energy: f64 = values.iter().map(|z| z.norm_sqr()).sum();
    if !(budget >= 0.0) || energy > budget + risae_core::attack::BUDGET_TOLERANCE {
        return Err(bad("perturbation exceeds its recorded budget"));
    }
    Ok(PerturbationFile {
        attack: AttackKind::parse(rec.get(0).unwrap_or("")).ok_or_else(|| bad("unknown attack"))?,
        psr_db: num(1)?,
        snr_db: num(3)?,
        attack_channel: rec.get(4).unwrap_or("").to_string(),
        perturbation: PerturbationVector::emit(values, budget),
    })
}

pub fn read(path: &Path) -> Result<PerturbationFile> {
    parse(&error::read(path)?, path)
}
