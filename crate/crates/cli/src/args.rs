use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qamp_core::pipeline::DeviceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Device {
    Apa,
    Npa,
}

impl From<Device> for DeviceKind {
    fn from(d: Device) -> Self {
        match d {
            Device::Apa => DeviceKind::Apa,
            Device::Npa => DeviceKind::Npa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `start:stop:count`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        qamp_core::optimize::linspace(self.start, self.stop, self.count)
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(format!("expected start:stop:count, got '{s}'"));
    };
    let start: f64 = start.trim().parse().map_err(|e| format!("bad start '{start}': {e}"))?;
    let stop: f64 = stop.trim().parse().map_err(|e| format!("bad stop '{stop}': {e}"))?;
    let count: usize = count.trim().parse().map_err(|e| format!("bad count '{count}': {e}"))?;
    if !(start.is_finite() && stop.is_finite()) {
        return Err("grid endpoints must be finite".into());
    }
    if count == 0 {
        return Err("grid count must be at least 1".into());
    }
    if count > 1 && stop <= start {
        return Err(format!("grid stop {stop} must exceed start {start}"));
    }
    Ok(Grid { start, stop, count })
}

/// `a..b` (inclusive) or a single count `n`.
pub fn parse_subtractions(s: &str) -> Result<RangeInclusive<usize>, String> {
    let s = s.trim();
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|e| format!("bad subtraction count '{lo}': {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("bad subtraction count '{hi}': {e}"))?;
    if hi < lo {
        return Err(format!("empty subtraction range {lo}..{hi}"));
    }
    if hi > qamp_core::SubtractionParams::MAX {
        return Err(format!(
            "at most {} subtractions supported",
            qamp_core::SubtractionParams::MAX
        ));
    }
    Ok(lo..=hi)
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(format!("alpha must be a positive real, got {s}"))
    }
}

fn parse_dim(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|e| format!("{e}"))?;
    if d >= qamp_core::NumericsPolicy::MIN_DIM {
        Ok(d)
    } else {
        Err(format!("dim must be at least {}", qamp_core::NumericsPolicy::MIN_DIM))
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "apa")]
    pub device: Device,

    /// Real input amplitude.
    #[arg(long, default_value = "0.5", value_parser = parse_alpha, allow_negative_numbers = true)]
    pub alpha: f64,

    /// Subtraction count `n` or inclusive range `a..b`.
    #[arg(long, default_value = "1", value_parser = parse_subtractions)]
    pub subtractions: RangeInclusive<usize>,

    /// Noise grid `start:stop:count`; G for the APA, n̄ for the NPA.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,

    /// Truncation dimension. Sweeps pick one adequate for the grid when unset.
    #[arg(long, env = "QAMP_DIM", value_parser = parse_dim)]
    pub dim: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,

    /// Also run fast-path versus oracle cross-checks.
    #[arg(long)]
    pub verify: bool,
}

impl CommonArgs {
    pub fn kind(&self) -> DeviceKind {
        self.device.into()
    }

    pub fn grid_points(&self) -> Vec<f64> {
        match self.grid {
            Some(g) => g.points(),
            None => self.kind().default_grid(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g = parse_grid("1:6:101").unwrap();
        assert_eq!(g, Grid { start: 1.0, stop: 6.0, count: 101 });
        assert_eq!(g.points().len(), 101);
        assert!(parse_grid("1:6").is_err());
        assert!(parse_grid("6:1:5").is_err());
        assert!(parse_grid("1:6:0").is_err());
        assert_eq!(parse_grid("2:2:1").unwrap().points(), vec![2.0]);
    }

    #[test]
    fn subtraction_syntax() {
        assert_eq!(parse_subtractions("1..4").unwrap(), 1..=4);
        assert_eq!(parse_subtractions("2").unwrap(), 2..=2);
        assert_eq!(parse_subtractions("0..=2").unwrap(), 0..=2);
        assert!(parse_subtractions("3..1").is_err());
        assert!(parse_subtractions("1..9").is_err());
        assert!(parse_subtractions("x").is_err());
    }
}
