use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use qamp_core::pipeline::SweepRow;
use serde::Serialize;

use crate::args::Format;

/// Sweep output row. Field order fixes the CSV header:
/// `device,alpha,noise,M,g,nominal_amplitude,fidelity,phase_variance,success_weight,dim,tail_mass`.
/// Failed points leave the computed fields empty (CSV) or null (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRecord {
    pub device: String,
    pub alpha: f64,
    pub noise: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub g: Option<f64>,
    pub nominal_amplitude: Option<f64>,
    pub fidelity: Option<f64>,
    pub phase_variance: Option<f64>,
    pub success_weight: Option<f64>,
    pub dim: usize,
    pub tail_mass: Option<f64>,
}

#[cfg_attr(not(test), allow(dead_code))]
pub const SWEEP_HEADER: &str =
    "device,alpha,noise,M,g,nominal_amplitude,fidelity,phase_variance,success_weight,dim,tail_mass";

impl From<&SweepRow> for SweepRecord {
    fn from(row: &SweepRow) -> Self {
        let m = row.metrics.as_ref().ok();
        Self {
            device: row.kind.to_string(),
            alpha: row.alpha,
            noise: row.noise,
            m: row.subtractions,
            g: m.map(|m| m.g),
            nominal_amplitude: m.map(|m| m.nominal_amplitude),
            fidelity: m.map(|m| m.fidelity),
            phase_variance: m.map(|m| m.phase_variance),
            success_weight: m.map(|m| m.success_weight),
            dim: row.dim,
            tail_mass: m.map(|m| m.tail_mass),
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_records<T: Serialize>(records: &[T], format: Format, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            for r in records {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, records)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_field_order() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(SweepRecord {
            device: "apa".into(),
            alpha: 0.5,
            noise: 1.0,
            m: 1,
            g: None,
            nominal_amplitude: None,
            fidelity: None,
            phase_variance: None,
            success_weight: None,
            dim: 64,
            tail_mass: None,
        })
        .unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next(), Some(SWEEP_HEADER));
        assert_eq!(text.lines().nth(1), Some("apa,0.5,1.0,1,,,,,,64,"));
    }
}
