//! `qamp`: sweeps, minimizers and a reproduction report for amplifier- and
//! noise-powered conditional amplification.

mod args;
mod output;

use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use qamp_core::fock::{coherent_overlap, coherent_state};
use qamp_core::metrics::phase_variance;
use qamp_core::oracle::cross_check;
use qamp_core::pipeline::{
    adequate_policy, minimize_discrimination_on, sweep, DeviceConfig, SweepRow, SweepSpec,
};
use qamp_core::reproduce::{reproduce_claims, ClaimCheck};
use qamp_core::NumericsPolicy;
use serde::Serialize;

use crate::args::{CommonArgs, Format};
use crate::output::{write_records, SweepRecord};

#[derive(Debug, Parser)]
#[command(name = "qamp", version, about = "Conditional quantum optical amplification in a truncated Fock basis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Amplitude gain g against the noise parameter, one row per (point, M).
    GainSweep(CommonArgs),
    /// Fidelity to the nominal coherent state against the noise parameter.
    FidelitySweep(CommonArgs),
    /// Phase variance against the noise parameter, with pure-coherent and
    /// initial-state reference rows.
    PhaseVarianceSweep(CommonArgs),
    /// Minimum ±alpha discrimination fidelity over the noise parameter, per M.
    Discriminate(CommonArgs),
    /// Recompute the published reference values and compare.
    ReproducePaper(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` signals a numeric or acceptance failure after output was written.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::GainSweep(a) | Command::FidelitySweep(a) => {
            let (records, ok) = device_sweep(&a)?;
            write_records(&records, a.format, a.out.as_deref())?;
            Ok(ok && verify(&a)?)
        }
        Command::PhaseVarianceSweep(a) => {
            let (mut records, ok) = device_sweep(&a)?;
            records.extend(reference_rows(&a, &records)?);
            write_records(&records, a.format, a.out.as_deref())?;
            Ok(ok && verify(&a)?)
        }
        Command::Discriminate(a) => discriminate(&a),
        Command::ReproducePaper(a) => reproduce(&a),
    }
}

fn base_policy(a: &CommonArgs) -> NumericsPolicy {
    NumericsPolicy::with_dim(a.dim.unwrap_or(NumericsPolicy::default().dim))
}

/// Policy for a sweep: the requested dim, or the smallest one that holds the
/// whole grid within the tail tolerance.
fn sweep_policy(a: &CommonArgs, grid: &[f64]) -> Result<NumericsPolicy> {
    let base = base_policy(a);
    if a.dim.is_some() {
        return Ok(base);
    }
    let top = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = *a.subtractions.end();
    Ok(adequate_policy(a.kind(), a.alpha, top, m, &base)?)
}

fn device_sweep(a: &CommonArgs) -> Result<(Vec<SweepRecord>, bool)> {
    let grid = a.grid_points();
    let policy = sweep_policy(a, &grid)?;
    let mut records = Vec::new();
    let mut ok = true;
    for m in a.subtractions.clone() {
        let base = DeviceConfig::new(a.kind(), a.alpha, a.kind().noise_floor(), m, policy)?;
        let rows = sweep(&SweepSpec::new(base, grid.clone())?)?;
        for row in &rows {
            report_row_error(row);
            ok &= row.metrics.is_ok();
        }
        records.extend(rows.iter().map(SweepRecord::from));
    }
    Ok((records, ok))
}

fn report_row_error(row: &SweepRow) {
    if let Err(e) = &row.metrics {
        eprintln!(
            "warning: {} alpha={} noise={} M={}: {e}",
            row.kind, row.alpha, row.noise, row.subtractions
        );
    }
}

/// Pure coherent state at each row's nominal amplitude (`device = coherent`)
/// and the unamplified input (`device = initial`).
fn reference_rows(a: &CommonArgs, device_rows: &[SweepRecord]) -> Result<Vec<SweepRecord>> {
    let policy = NumericsPolicy::with_dim(device_rows.first().map_or(base_policy(a).dim, |r| r.dim));
    let input = coherent_state(a.alpha, &policy)?;
    let initial_variance = phase_variance(&input, &policy)?;
    let mut coherent = Vec::new();
    let mut initial = Vec::new();
    for r in device_rows {
        let (Some(g), Some(beta)) = (r.g, r.nominal_amplitude) else {
            continue;
        };
        let nominal = coherent_state(beta, &policy)?;
        coherent.push(SweepRecord {
            device: "coherent".into(),
            fidelity: Some(1.0),
            phase_variance: Some(phase_variance(&nominal, &policy)?),
            success_weight: Some(1.0),
            tail_mass: Some(0.0),
            ..r.clone()
        });
        initial.push(SweepRecord {
            device: "initial".into(),
            g: Some(g),
            fidelity: Some(coherent_overlap(&input, beta)),
            phase_variance: Some(initial_variance),
            success_weight: Some(1.0),
            tail_mass: Some(0.0),
            ..r.clone()
        });
    }
    coherent.extend(initial);
    Ok(coherent)
}

fn verify(a: &CommonArgs) -> Result<bool> {
    verify_at(&base_policy(a), a.alpha, a.subtractions.clone(), a.verify)
}

/// Fast path versus oracle cross-checks at `G = 2`, reported on stderr.
fn verify_at(
    policy: &NumericsPolicy,
    alpha: f64,
    subtractions: std::ops::RangeInclusive<usize>,
    enabled: bool,
) -> Result<bool> {
    if !enabled {
        return Ok(true);
    }
    let mut ok = true;
    for m in subtractions {
        for c in cross_check(alpha, 2.0, m, policy)? {
            eprintln!(
                "verify [{}] {}: deviation {:.3e} (tol {:.1e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.deviation,
                c.tolerance
            );
            ok &= c.passed;
        }
    }
    Ok(ok)
}

#[derive(Debug, Serialize)]
struct DiscriminationRecord {
    device: String,
    alpha: f64,
    #[serde(rename = "M")]
    m: usize,
    noise_star: f64,
    f_star: f64,
    dim: usize,
}

fn discriminate(a: &CommonArgs) -> Result<bool> {
    let policy = base_policy(a);
    let grid = a.grid_points();
    let mut records = Vec::new();
    for m in a.subtractions.clone() {
        let opt = minimize_discrimination_on(a.kind(), a.alpha, m, &policy, &grid)?;
        records.push(DiscriminationRecord {
            device: a.kind().to_string(),
            alpha: a.alpha,
            m,
            noise_star: opt.noise,
            f_star: opt.value,
            dim: policy.dim,
        });
    }
    write_records(&records, a.format, a.out.as_deref())?;
    verify(a)
}

fn reproduce(a: &CommonArgs) -> Result<bool> {
    let policy = base_policy(a);
    let claims = reproduce_claims(&policy)?;
    match a.format {
        Format::Json => write_records(&claims, Format::Json, a.out.as_deref())?,
        Format::Csv if a.out.is_some() => write_records(&claims, Format::Csv, a.out.as_deref())?,
        Format::Csv => print_table(&claims, policy.dim),
    }
    let failed: Vec<&ClaimCheck> = claims.iter().filter(|c| !c.passed).collect();
    if !failed.is_empty() {
        eprintln!("{} of {} checks failed:", failed.len(), claims.len());
        for c in &failed {
            eprintln!("  {}: reference {} computed {:.4}", c.claim, c.reference, c.computed);
        }
    }
    let verified = verify_at(&policy, 0.5, 1..=2, a.verify)?;
    if claims.is_empty() {
        bail!("no checks were produced");
    }
    Ok(failed.is_empty() && verified)
}

fn print_table(claims: &[ClaimCheck], dim: usize) {
    println!("reproduction at dim={dim}");
    println!(
        "{:<48} {:>9} {:>10} {:>9} {:>7}  verdict",
        "claim", "reference", "computed", "|delta|", "tol"
    );
    for c in claims {
        println!(
            "{:<48} {:>9.3} {:>10.5} {:>9.5} {:>7.3}  {}",
            c.claim,
            c.reference,
            c.computed,
            c.deviation,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
}
