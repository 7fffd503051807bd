//! Channel realization dumps for debugging.
//!
//! Links are written in the order U₁, U₂, Y₁, Y₂, E of the legitimate
//! party followed by the same five adversary links. Each matrix is stored
//! row-major as complex pairs. The binary form is bare little-endian
//! doubles `re, im, re, im, ...`; shapes follow from the system config.
//! The CSV form has one line per entry.

use std::path::Path;

use risae_core::channel::ChannelRealization;
use risae_core::linalg::ComplexMatrix;

use crate::error::{self, Result};
use crate::results::format_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Binary,
    Csv,
}

fn links(r: &ChannelRealization) -> Vec<(&'static str, &'static str, &ComplexMatrix)> {
    let mut v = Vec::with_capacity(10);
    for (party, l) in [("legit", &r.legit), ("adversary", &r.attack)] {
        v.push((party, "u1", &l.u1));
        v.push((party, "u2", &l.u2));
        v.push((party, "y1", &l.y1));
        v.push((party, "y2", &l.y2));
        v.push((party, "e", &l.e));
    }
    v
}

pub fn to_binary(r: &ChannelRealization) -> Vec<u8> {
    let mut out = Vec::new();
    for (_, _, m) in links(r) {
        for z in m.to_row_major() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn to_csv(r: &ChannelRealization) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["party", "link", "row", "col", "re", "im"])
        .expect("in-memory write");
    for (party, link, m) in links(r) {
        for row in 0..m.rows() {
            for col in 0..m.cols() {
                let z = m.get(row, col);
                w.write_record([
                    party.to_string(),
                    link.to_string(),
                    row.to_string(),
                    col.to_string(),
                    format_f64(z.re),
                    format_f64(z.im),
                ])
                .expect("in-memory write");
            }
        }
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write(r: &ChannelRealization, format: DumpFormat, path: &Path) -> Result<()> {
    match format {
        DumpFormat::Binary => error::write(path, to_binary(r)),
        DumpFormat::Csv => error::write(path, to_csv(r)),
    }
}
