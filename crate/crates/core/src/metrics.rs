//! Figures of merit for device output states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{coherent_overlap, hermitian_part, FockDensityMatrix, NumericsPolicy};
use crate::optimize::golden_section_minimize;

/// Nominal output coherent state of a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainResult {
    /// Amplitude gain `beta_star / alpha_in`.
    pub g: f64,
    pub beta_star: f64,
    pub overlap_at_max: f64,
}

/// Points in the coarse scan that precedes golden-section refinement.
pub const GAIN_SCAN_POINTS: usize = 64;
/// Lower end of the real-amplitude search.
pub const GAIN_SEARCH_FLOOR: f64 = 1e-6;

fn require_real(rho: &FockDensityMatrix, policy: &NumericsPolicy, what: &str) -> Result<()> {
    let imag = rho.max_imag();
    if imag > policy.herm_tol {
        Err(Error::Domain(format!(
            "{what} needs a zero-mean-phase state with real elements; max imaginary part {imag:.3e}"
        )))
    } else {
        Ok(())
    }
}

/// Amplitude gain of a device: the real `beta` whose coherent state has the
/// largest overlap with `rho_out`, divided by the input amplitude.
pub fn device_gain(
    rho_out: &FockDensityMatrix,
    alpha_in: f64,
    policy: &NumericsPolicy,
) -> Result<GainResult> {
    if !(alpha_in > 0.0 && alpha_in.is_finite()) {
        return Err(Error::Domain(format!("input amplitude must be > 0, got {alpha_in}")));
    }
    require_real(rho_out, policy, "device_gain")?;
    let lo = GAIN_SEARCH_FLOOR;
    let hi = policy.gain_bracket_max * alpha_in;
    let step = (hi - lo) / (GAIN_SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..GAIN_SCAN_POINTS)
        .map(|i| coherent_overlap(rho_out, lo + step * i as f64))
        .collect();
    let best = scan
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > scan[b] { i } else { b });
    if best == 0 || best == GAIN_SCAN_POINTS - 1 {
        let edge = if best == 0 { "lower" } else { "upper" };
        return Err(Error::Optimization(format!(
            "overlap maximum sits at the {edge} edge of (0, {hi}]"
        )));
    }
    let a = lo + step * (best - 1) as f64;
    let b = lo + step * (best + 1) as f64;
    let (beta_star, neg) =
        golden_section_minimize(|beta| -coherent_overlap(rho_out, beta), a, b, policy.optimizer_tol);
    let overlap_at_max = -neg;
    Ok(GainResult {
        g: beta_star / alpha_in,
        beta_star,
        overlap_at_max,
    })
}

/// `Tr(rho |g alpha><g alpha|)`.
pub fn fidelity_to_coherent(rho: &FockDensityMatrix, g: f64, alpha: f64) -> f64 {
    coherent_overlap(rho, g * alpha)
}

/// Phase variance in the window (-pi, pi] of a zero-mean-phase state:
///
/// `sum_{n,m} [pi^2/3 delta_nm + (1 - delta_nm) (-1)^(m-n) / (m-n)^2] rho[n,m]`.
pub fn phase_variance(rho: &FockDensityMatrix, policy: &NumericsPolicy) -> Result<f64> {
    require_real(rho, policy, "phase_variance")?;
    let dim = rho.dim();
    let mut total = PI * PI / 3.0 * rho.trace();
    // Real symmetric in n <-> m, so sum the upper triangle twice.
    for k in 1..dim {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign / (k * k) as f64;
        let band: f64 = (0..dim - k)
            .map(|n| rho.get(n, n + k).re + rho.get(n + k, n).re)
            .sum();
        total += weight * band;
    }
    Ok(total)
}

/// Negative eigenvalue mass beyond this multiple of `psd_tol` is rejected.
pub const CLAMP_MASS_FACTOR: f64 = 10.0;

/// Hermitian square root with eigenvalues clamped at zero. Returns the root
/// and the total clamped negative mass.
fn clamped_sqrt(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut clamped = 0.0;
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| {
            if l < 0.0 {
                clamped -= l;
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(l.sqrt(), 0.0)
            }
        }),
    );
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&roots) * v.adjoint(), clamped)
}

/// Uhlmann fidelity `[Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2`.
pub fn uhlmann_fidelity(
    rho: &FockDensityMatrix,
    sigma: &FockDensityMatrix,
    policy: &NumericsPolicy,
) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let limit = CLAMP_MASS_FACTOR * policy.psd_tol;
    let (root, clamped) = clamped_sqrt(rho.elems());
    if clamped > limit {
        return Err(Error::Numerics(format!(
            "first state has negative eigenvalue mass {clamped:.3e}"
        )));
    }
    let sandwich = &root * sigma.elems() * &root;
    let mut clamped = 0.0;
    let trace_root: f64 = hermitian_part(&sandwich)
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| {
            if l < 0.0 {
                clamped -= l;
                0.0
            } else {
                l.sqrt()
            }
        })
        .sum();
    if clamped > limit {
        return Err(Error::Numerics(format!(
            "second state has negative eigenvalue mass {clamped:.3e}"
        )));
    }
    Ok((trace_root * trace_root).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, displaced_thermal, thermal_state};
    use approx::assert_abs_diff_eq;

    fn policy() -> NumericsPolicy {
        NumericsPolicy::default()
    }

    #[test]
    fn gain_of_unamplified_state_is_one() {
        let p = policy();
        let rho = coherent_state(0.5, &p).unwrap();
        let r = device_gain(&rho, 0.5, &p).unwrap();
        assert_abs_diff_eq!(r.g, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.overlap_at_max, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn gain_rejects_bad_inputs() {
        let p = policy();
        let rho = coherent_state(0.5, &p).unwrap();
        assert!(matches!(device_gain(&rho, 0.0, &p), Err(Error::Domain(_))));
        let complex = coherent_state(crate::fock::CoherentAmplitude::new(0.3, 0.3), &p).unwrap();
        assert!(matches!(device_gain(&complex, 0.5, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn gain_flags_bracket_edges() {
        let p = policy();
        // overlap with a thermal state decreases monotonically in beta
        let th = thermal_state(1.0, &p).unwrap();
        assert!(matches!(device_gain(&th, 0.5, &p), Err(Error::Optimization(_))));
        // maximum beyond 12 * alpha_in
        let far = coherent_state(2.0, &p).unwrap();
        assert!(matches!(device_gain(&far, 0.1, &p), Err(Error::Optimization(_))));
    }

    #[test]
    fn fidelity_examples() {
        let p = policy();
        let rho = coherent_state(1.2, &p).unwrap();
        assert_abs_diff_eq!(fidelity_to_coherent(&rho, 2.4, 0.5), 1.0, epsilon = 1e-8);
        let th = thermal_state(1.0, &p).unwrap();
        assert_abs_diff_eq!(fidelity_to_coherent(&th, 3.0, 0.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn phase_variance_of_diagonal_states() {
        let p = policy();
        let vac = FockDensityMatrix::vacuum(64).unwrap();
        assert_abs_diff_eq!(phase_variance(&vac, &p).unwrap(), PI * PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(phase_variance(&vac, &p).unwrap(), 3.28987, epsilon = 1e-5);
        for nbar in [0.3, 1.0, 2.0] {
            let th = thermal_state(nbar, &p).unwrap();
            assert_abs_diff_eq!(phase_variance(&th, &p).unwrap(), PI * PI / 3.0, epsilon = 1e-12);
        }
    }

    /// Direct double sum over every (n, m), written independently of the
    /// banded evaluation.
    fn phase_variance_double_sum(rho: &FockDensityMatrix) -> f64 {
        let dim = rho.dim();
        let mut s = 0.0;
        for n in 0..dim {
            for m in 0..dim {
                let w = if n == m {
                    PI * PI / 3.0
                } else {
                    let d = m as i64 - n as i64;
                    (-1f64).powi(d as i32) / (d * d) as f64
                };
                s += w * rho.get(n, m).re;
            }
        }
        s
    }

    // Frozen from the double sum at dim 64 and dim 128 (agreeing to 1e-15).
    const COHERENT_HALF_PHASE_VARIANCE: f64 = 2.429_169_583_686_81;

    #[test]
    fn phase_variance_of_coherent_half() {
        let v64 = phase_variance_double_sum(&coherent_state(0.5, &NumericsPolicy::with_dim(64)).unwrap());
        let v128 = phase_variance_double_sum(&coherent_state(0.5, &NumericsPolicy::with_dim(128)).unwrap());
        assert!((v64 - v128).abs() < 1e-8);
        assert_abs_diff_eq!(v64, COHERENT_HALF_PHASE_VARIANCE, epsilon = 1e-12);
        let fast = phase_variance(&coherent_state(0.5, &policy()).unwrap(), &policy()).unwrap();
        assert_abs_diff_eq!(fast, COHERENT_HALF_PHASE_VARIANCE, epsilon = 1e-12);
    }

    #[test]
    fn phase_variance_matches_double_sum_on_mixed_states() {
        let p = policy();
        for &(a, nbar) in &[(0.25, 0.4), (0.8, 1.5), (1.2, 0.1)] {
            let rho = displaced_thermal(a, nbar, &p).unwrap();
            assert_abs_diff_eq!(
                phase_variance(&rho, &p).unwrap(),
                phase_variance_double_sum(&rho),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn phase_variance_requires_real_elements() {
        let p = policy();
        let rho = coherent_state(crate::fock::CoherentAmplitude::new(0.0, 0.5), &p).unwrap();
        assert!(matches!(phase_variance(&rho, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn phase_variance_drops_along_coherent_states() {
        let p = policy();
        let values: Vec<f64> = (1..=15)
            .map(|k| phase_variance(&coherent_state(0.1 * k as f64, &p).unwrap(), &p).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn uhlmann_examples() {
        let p = policy();
        let th = thermal_state(1.0, &p).unwrap();
        assert_abs_diff_eq!(uhlmann_fidelity(&th, &th, &p).unwrap(), 1.0, epsilon = 1e-7);
        let plus = coherent_state(0.5, &p).unwrap();
        let minus = coherent_state(-0.5, &p).unwrap();
        let f = uhlmann_fidelity(&plus, &minus, &p).unwrap();
        assert_abs_diff_eq!(f, (-1.0f64).exp(), epsilon = 1e-7);
        assert_abs_diff_eq!(f, 0.368, epsilon = 1e-3);
    }

    #[test]
    fn uhlmann_symmetric_and_pure_reduces_to_overlap() {
        let p = policy();
        let rho = displaced_thermal(0.6, 0.5, &p).unwrap();
        let sigma = displaced_thermal(-0.2, 1.1, &p).unwrap();
        let ab = uhlmann_fidelity(&rho, &sigma, &p).unwrap();
        let ba = uhlmann_fidelity(&sigma, &rho, &p).unwrap();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-7);

        let pure = coherent_state(0.4, &p).unwrap();
        let f = uhlmann_fidelity(&pure, &rho, &p).unwrap();
        assert_abs_diff_eq!(f, coherent_overlap(&rho, 0.4), epsilon = 1e-7);
        let f = uhlmann_fidelity(&rho, &pure, &p).unwrap();
        assert_abs_diff_eq!(f, coherent_overlap(&rho, 0.4), epsilon = 1e-7);
    }

    #[test]
    fn uhlmann_coherent_pairs_match_gaussian() {
        let p = policy();
        for &(a, b) in &[(0.0, 0.5), (0.3, -0.7), (1.0, 0.2)] {
            let f = uhlmann_fidelity(&coherent_state(a, &p).unwrap(), &coherent_state(b, &p).unwrap(), &p)
                .unwrap();
            assert_abs_diff_eq!(f, (-(a - b) * (a - b)).exp(), epsilon = 1e-6);
        }
    }

    #[test]
    fn uhlmann_rejects_unphysical() {
        let p = policy();
        let bad = FockDensityMatrix::from_populations(&[1.2, -0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let ok = FockDensityMatrix::vacuum(8).unwrap();
        assert!(matches!(uhlmann_fidelity(&bad, &ok, &p), Err(Error::Numerics(_))));
        let big = FockDensityMatrix::vacuum(16).unwrap();
        assert!(matches!(uhlmann_fidelity(&ok, &big, &p), Err(Error::DimensionMismatch { .. })));
    }
}
