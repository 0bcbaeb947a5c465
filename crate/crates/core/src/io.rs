//! File formats: plain-text and binary value vectors, CSV tables and the
//! versioned JSON result document.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::Activation;
use crate::model::FitOutcome;
use crate::responsibilities::Responsibilities;

/// Version of the JSON documents written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Crate version recorded in every document.
pub const VERSION_TAG: &str = concat!("gammamix ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One decimal value per line; `#` starts a comment.
    Txt,
    /// Little-endian `u64` count followed by that many little-endian `f64`.
    F64le,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "txt" => Ok(Format::Txt),
            "f64le" => Ok(Format::F64le),
            other => Err(Error::InvalidInput(format!("unknown format '{other}'"))),
        }
    }
}

pub fn parse_txt(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::InvalidInput(format!("line {}: cannot parse '{line}'", i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub fn format_txt(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn decode_f64le(bytes: &[u8]) -> Result<Vec<f64>> {
    let header: [u8; 8] = bytes
        .get(..8)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| Error::InvalidInput("f64le input shorter than its 8-byte header".into()))?;
    let n = u64::from_le_bytes(header);
    let body = &bytes[8..];
    if (body.len() as u64) != n.saturating_mul(8) {
        return Err(Error::InvalidInput(format!(
            "f64le header announces {n} values but the body holds {} bytes",
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn encode_f64le(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * values.len());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_values(path: &Path, format: Format) -> Result<Vec<f64>> {
    match format {
        Format::Txt => parse_txt(&fs::read_to_string(path)?),
        Format::F64le => decode_f64le(&fs::read(path)?),
    }
}

pub fn write_values(path: &Path, values: &[f64], format: Format) -> Result<()> {
    match format {
        Format::Txt => fs::write(path, format_txt(values))?,
        Format::F64le => fs::write(path, encode_f64le(values))?,
    }
    Ok(())
}

/// Reads component labels 1, 2, 3, one per line.
pub fn read_truth(path: &Path) -> Result<Vec<Activation>> {
    parse_txt(&fs::read_to_string(path)?)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || !(1.0..=3.0).contains(&v) {
                Err(Error::InvalidInput(format!("truth label {v} not in 1..=3")))
            } else {
                Activation::from_component(v as u8)
            }
        })
        .collect()
}

/// Per-sample responsibilities as CSV with columns `gamma1,gamma2,gamma3`.
pub fn responsibilities_csv(gamma: &Responsibilities) -> String {
    let mut s = String::from("gamma1,gamma2,gamma3\n");
    for r in gamma.rows() {
        let _ = writeln!(s, "{},{},{}", r[0], r[1], r[2]);
    }
    s
}

/// Fit result document. Wall time is left out so the document depends only on
/// the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct FitDocument {
    pub schema_version: u32,
    pub version: String,
    pub seed: u64,
    pub n: usize,
    pub standardized: bool,
    pub mixing_proportions: [f64; 3],
    pub result: Value,
}

impl FitDocument {
    pub fn new(outcome: &FitOutcome, seed: u64, n: usize, standardized: bool) -> Result<Self> {
        let mut result = serde_json::to_value(outcome)?;
        if let Some(detail) = result.get_mut("detail").and_then(Value::as_object_mut) {
            detail.remove("wall_time_seconds");
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            version: VERSION_TAG.to_string(),
            seed,
            n,
            standardized,
            mixing_proportions: outcome.mixing_proportions(),
            result,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
