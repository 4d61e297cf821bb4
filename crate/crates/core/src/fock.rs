//! Truncated photon-number basis states.
//!
//! Every state is a complex Hermitian matrix `rho[(n, m)]` over the basis
//! `|0>, ..., |dim-1>`. Constructors compute the exact (untruncated) matrix
//! elements inside the basis, measure the probability mass that falls beyond
//! the cutoff, reject the state if that mass exceeds `tail_tol`, and
//! renormalize what remains.

use std::fmt;
use std::ops::Neg;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncation dimension and the tolerances every stage is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericsPolicy {
    pub dim: usize,
    pub herm_tol: f64,
    pub trace_tol: f64,
    pub psd_tol: f64,
    pub tail_tol: f64,
    /// Upper end of the nominal-amplitude search, as a multiple of the input amplitude.
    pub gain_bracket_max: f64,
    pub optimizer_tol: f64,
}

impl Default for NumericsPolicy {
    fn default() -> Self {
        Self {
            dim: 64,
            herm_tol: 1e-10,
            trace_tol: 1e-10,
            psd_tol: 1e-8,
            tail_tol: 1e-10,
            gain_bracket_max: 12.0,
            optimizer_tol: 1e-6,
        }
    }
}

impl NumericsPolicy {
    pub const MIN_DIM: usize = 8;

    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.dim < Self::MIN_DIM {
            return Err(Error::Domain(format!(
                "dim {} is below the minimum {}",
                self.dim,
                Self::MIN_DIM
            )));
        }
        let tols = [
            ("herm_tol", self.herm_tol),
            ("trace_tol", self.trace_tol),
            ("psd_tol", self.psd_tol),
            ("tail_tol", self.tail_tol),
            ("optimizer_tol", self.optimizer_tol),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gain_bracket_max > 1.0 && self.gain_bracket_max.is_finite()) {
            return Err(Error::Domain(format!(
                "gain_bracket_max must exceed 1, got {}",
                self.gain_bracket_max
            )));
        }
        Ok(())
    }

    pub(crate) fn check_tail(&self, tail: f64) -> Result<()> {
        if tail > self.tail_tol || tail.is_nan() {
            Err(Error::Truncation {
                tail,
                dim: self.dim,
                tol: self.tail_tol,
            })
        } else {
            Ok(())
        }
    }
}

/// Complex coherent amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAmplitude(pub Complex64);

impl CoherentAmplitude {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn scale(self, factor: f64) -> Self {
        Self(self.0 * factor)
    }

    fn check(self) -> Result<()> {
        if self.0.re.is_finite() && self.0.im.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("non-finite coherent amplitude {}", self.0)))
        }
    }

    /// Unit phase factor `alpha/|alpha|`; exact for real amplitudes.
    fn unit(self) -> Complex64 {
        let r = self.0.norm();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else if self.0.im == 0.0 {
            Complex64::new(self.0.re.signum(), 0.0)
        } else {
            self.0 / r
        }
    }
}

impl From<f64> for CoherentAmplitude {
    fn from(x: f64) -> Self {
        Self(Complex64::new(x, 0.0))
    }
}

impl From<Complex64> for CoherentAmplitude {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

impl Neg for CoherentAmplitude {
    type Output = Self;

    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// `ln n!` accumulated term by term.
#[derive(Debug, Clone)]
pub(crate) struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub(crate) fn up_to(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self(table)
    }

    #[inline]
    pub(crate) fn get(&self, n: usize) -> f64 {
        self.0[n]
    }

    #[inline]
    pub(crate) fn binomial(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// `k ln x` with the convention `0^0 = 1`.
#[inline]
pub(crate) fn ln_pow(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// Entries smaller than this fraction of the largest one are dropped before
/// eigendecomposition; the Hermitian eigensolver loses all accuracy when the
/// dynamic range reaches the underflow limit.
pub(crate) const EIGEN_FLUSH: f64 = 1e-50;

/// `(m + m^dagger)/2` with negligible entries set to zero.
pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let cutoff = EIGEN_FLUSH * h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in h.iter_mut() {
        if z.norm() < cutoff {
            *z = ZERO;
        }
    }
    h
}

/// Density matrix on a truncated number basis.
#[derive(Clone, PartialEq)]
pub struct FockDensityMatrix {
    elems: DMatrix<Complex64>,
}

impl fmt::Debug for FockDensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockDensityMatrix")
            .field("dim", &self.dim())
            .field("trace", &self.trace())
            .finish()
    }
}

impl FockDensityMatrix {
    pub fn from_matrix(elems: DMatrix<Complex64>) -> Result<Self> {
        if elems.nrows() != elems.ncols() {
            return Err(Error::DimensionMismatch {
                left: elems.nrows(),
                right: elems.ncols(),
            });
        }
        if elems.nrows() == 0 {
            return Err(Error::Domain("empty density matrix".into()));
        }
        Ok(Self { elems })
    }

    pub(crate) fn from_matrix_unchecked(elems: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(elems.nrows(), elems.ncols());
        Self { elems }
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(populations: &[f64]) -> Result<Self> {
        let dim = populations.len();
        let mut elems = DMatrix::from_element(dim, dim, ZERO);
        for (n, &p) in populations.iter().enumerate() {
            elems[(n, n)] = Complex64::new(p, 0.0);
        }
        Self::from_matrix(elems)
    }

    /// Number state `|n><n|`.
    pub fn number_state(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Domain(format!("|{n}> is outside dim {dim}")));
        }
        let mut elems = DMatrix::from_element(dim, dim, ZERO);
        elems[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self { elems })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::number_state(0, dim)
    }

    pub fn dim(&self) -> usize {
        self.elems.nrows()
    }

    pub fn elems(&self) -> &DMatrix<Complex64> {
        &self.elems
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.elems
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.elems[(n, m)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.elems[(n, n)].re).sum()
    }

    /// Largest imaginary part over all elements.
    pub fn max_imag(&self) -> f64 {
        self.elems.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .elems
            .iter()
            .zip(other.elems.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `rho[(n, m)] -> (-1)^(n+m) rho[(n, m)]`, i.e. the state conjugated by
    /// the parity operator. Maps the state built from `alpha` onto the one
    /// built from `-alpha` for every phase-covariant pipeline.
    pub fn parity_flip(&self) -> Self {
        let dim = self.dim();
        let elems = DMatrix::from_fn(dim, dim, |n, m| {
            let z = self.elems[(n, m)];
            if (n + m) % 2 == 1 {
                -z
            } else {
                z
            }
        });
        Self { elems }
    }

    pub(crate) fn hermitized(mut self) -> Self {
        let adj = self.elems.adjoint();
        self.elems = (&self.elems + adj) * Complex64::new(0.5, 0.0);
        self
    }

    pub(crate) fn scaled(mut self, factor: f64) -> Self {
        self.elems *= Complex64::new(factor, 0.0);
        self
    }

    /// Copy into a larger or smaller basis, zero padding or cropping.
    pub fn resized(&self, dim: usize) -> Self {
        let mut elems = DMatrix::from_element(dim, dim, ZERO);
        let keep = dim.min(self.dim());
        elems
            .view_mut((0, 0), (keep, keep))
            .copy_from(&self.elems.view((0, 0), (keep, keep)));
        Self { elems }
    }
}

/// Unnormalized coherent-state amplitudes `<n|beta>` for `n < dim`.
pub(crate) fn coherent_amplitudes(beta: CoherentAmplitude, dim: usize) -> Vec<Complex64> {
    let lnf = LnFactorials::up_to(dim);
    let r = beta.0.norm();
    let unit = beta.unit();
    let half_mean = -0.5 * r * r;
    (0..dim)
        .map(|n| {
            let ln_mag = half_mean + ln_pow(r, n) - 0.5 * lnf.get(n);
            unit.powi(n as i32) * ln_mag.exp()
        })
        .collect()
}

pub(crate) fn coherent_state_with_tail(
    alpha: CoherentAmplitude,
    policy: &NumericsPolicy,
) -> Result<(FockDensityMatrix, f64)> {
    policy.check()?;
    alpha.check()?;
    let c = coherent_amplitudes(alpha, policy.dim);
    let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    policy.check_tail(tail)?;
    let dim = policy.dim;
    let elems = DMatrix::from_fn(dim, dim, |n, m| c[n] * c[m].conj() / kept);
    Ok((FockDensityMatrix { elems }, tail))
}

/// Pure coherent projector `|alpha><alpha|`.
pub fn coherent_state(
    alpha: impl Into<CoherentAmplitude>,
    policy: &NumericsPolicy,
) -> Result<FockDensityMatrix> {
    coherent_state_with_tail(alpha.into(), policy).map(|(rho, _)| rho)
}

/// Geometric photon-number distribution with mean `mean_photons`.
pub fn thermal_state(mean_photons: f64, policy: &NumericsPolicy) -> Result<FockDensityMatrix> {
    policy.check()?;
    check_mean(mean_photons)?;
    let ratio = mean_photons / (mean_photons + 1.0);
    let tail = ratio.powi(policy.dim as i32);
    policy.check_tail(tail)?;
    let pops: Vec<f64> = (0..policy.dim)
        .map(|n| ratio.powi(n as i32) / (mean_photons + 1.0) / (1.0 - tail))
        .collect();
    FockDensityMatrix::from_populations(&pops)
}

fn check_mean(mean_photons: f64) -> Result<()> {
    if mean_photons >= 0.0 && mean_photons.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "mean photon number must be finite and >= 0, got {mean_photons}"
        )))
    }
}

pub(crate) fn displaced_thermal_with_tail(
    alpha: CoherentAmplitude,
    mean_photons: f64,
    policy: &NumericsPolicy,
) -> Result<(FockDensityMatrix, f64)> {
    policy.check()?;
    alpha.check()?;
    check_mean(mean_photons)?;
    let dim = policy.dim;
    let lnf = LnFactorials::up_to(dim);

    // Displaced thermal state written as a thermal mixture of width n̄ around
    // a coherent amplitude a = alpha/sqrt(1+n̄): for n <= m
    //   rho[n,m] = e^{-|a|^2} sqrt(n! m!) / (1+n̄)^{(n+m)/2+1}
    //              * sum_j n̄^j |a|^{n+m-2j} / (j! (n-j)! (m-j)!) * e^{i(n-m)arg a},
    // the associated-Laguerre series L_n^{(m-n)}(-|a|^2/n̄) expanded with all
    // terms positive.
    let g = 1.0 + mean_photons;
    let ln_g = g.ln();
    let amp = alpha.0.norm() / g.sqrt();
    let unit = alpha.unit();

    let mut elems = DMatrix::from_element(dim, dim, ZERO);
    let mut logs = Vec::with_capacity(dim);
    for n in 0..dim {
        for m in n..dim {
            logs.clear();
            for j in 0..=n {
                let powers = ln_pow(mean_photons, j) + ln_pow(amp, n + m - 2 * j);
                if powers == f64::NEG_INFINITY {
                    continue;
                }
                logs.push(powers - lnf.get(j) - lnf.get(n - j) - lnf.get(m - j));
            }
            if logs.is_empty() {
                continue;
            }
            let prefactor =
                -amp * amp - ((n + m) as f64 / 2.0 + 1.0) * ln_g + 0.5 * (lnf.get(n) + lnf.get(m));
            let magnitude = (prefactor + log_sum_exp(&logs)).exp();
            let z = unit.powi(n as i32 - m as i32) * magnitude;
            elems[(n, m)] = z;
            elems[(m, n)] = z.conj();
        }
    }
    let rho = FockDensityMatrix { elems };
    let kept = rho.trace();
    let tail = (1.0 - kept).max(0.0);
    policy.check_tail(tail)?;
    Ok((rho.scaled(1.0 / kept), tail))
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Thermal state with mean `mean_photons` displaced by `alpha`.
pub fn displaced_thermal(
    alpha: impl Into<CoherentAmplitude>,
    mean_photons: f64,
    policy: &NumericsPolicy,
) -> Result<FockDensityMatrix> {
    displaced_thermal_with_tail(alpha.into(), mean_photons, policy).map(|(rho, _)| rho)
}

pub fn mean_photon_number(rho: &FockDensityMatrix) -> f64 {
    (0..rho.dim())
        .map(|n| n as f64 * rho.elems[(n, n)].re)
        .sum()
}

/// `<beta| rho |beta>` against the exact (untruncated) coherent amplitudes.
pub fn coherent_overlap(rho: &FockDensityMatrix, beta: impl Into<CoherentAmplitude>) -> f64 {
    let c = coherent_amplitudes(beta.into(), rho.dim());
    let mut acc = ZERO;
    for (m, cm) in c.iter().enumerate() {
        let column = rho.elems.column(m);
        let row: Complex64 = c.iter().zip(column.iter()).map(|(cn, z)| cn.conj() * z).sum();
        acc += row * cm;
    }
    acc.re
}

/// Per-invariant check results for a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub trace_deviation: f64,
    pub max_hermiticity_violation: f64,
    pub min_eigenvalue: f64,
    /// Population of the highest retained level.
    pub tail_mass: f64,
    pub trace_ok: bool,
    pub hermitian_ok: bool,
    pub psd_ok: bool,
    pub tail_ok: bool,
}

impl Diagnostics {
    pub fn passed(&self) -> bool {
        self.trace_ok && self.hermitian_ok && self.psd_ok && self.tail_ok
    }
}

pub fn validate(rho: &FockDensityMatrix, policy: &NumericsPolicy) -> Diagnostics {
    let dim = rho.dim();
    let trace_deviation = (rho.trace() - 1.0).abs();
    let mut herm = 0.0f64;
    for n in 0..dim {
        for m in n..dim {
            herm = herm.max((rho.elems[(n, m)] - rho.elems[(m, n)].conj()).norm());
        }
    }
    let min_eigenvalue = hermitian_part(&rho.elems)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let tail_mass = rho.elems[(dim - 1, dim - 1)].re;
    Diagnostics {
        trace_deviation,
        max_hermiticity_violation: herm,
        min_eigenvalue,
        tail_mass,
        trace_ok: trace_deviation <= policy.trace_tol,
        hermitian_ok: herm <= policy.herm_tol,
        psd_ok: min_eigenvalue >= -policy.psd_tol,
        tail_ok: tail_mass <= policy.tail_tol,
    }
}
