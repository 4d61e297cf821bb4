//! Slow reference constructions that certify the fast paths.
//!
//! Nothing here shares code with the routines it checks: displaced states come
//! from exponentiating the displacement generator, subtraction from explicit
//! lowering-matrix products, and the gain from a dense scan.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channels::{amplify, npa_front_end, subtract_photons, AmplifierParams, SubtractionParams, MIN_SUBTRACTION_TRACE};
use crate::error::{Error, Result};
use crate::fock::{coherent_overlap, coherent_state, displaced_thermal, CoherentAmplitude, FockDensityMatrix, NumericsPolicy};
use crate::metrics::{device_gain, GainResult, GAIN_SEARCH_FLOOR};
use crate::pipeline::{prepare_state, DeviceKind};

/// Lowering operator `a` on `dim` levels: `a[(n, n+1)] = sqrt(n+1)`.
pub fn lowering_matrix(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            Complex64::new((c as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `D(alpha) rho_th D(alpha)^dagger` with `D = exp(alpha a^dagger - alpha^* a)`
/// exponentiated numerically on twice the basis size, then cropped.
pub fn displacement_exponential_state(
    alpha: impl Into<CoherentAmplitude>,
    mean_photons: f64,
    policy: &NumericsPolicy,
) -> Result<FockDensityMatrix> {
    policy.check()?;
    if !(mean_photons >= 0.0 && mean_photons.is_finite()) {
        return Err(Error::Domain(format!("mean photon number must be >= 0, got {mean_photons}")));
    }
    let alpha = alpha.into().value();
    let work = 2 * policy.dim;
    let a = lowering_matrix(work);
    let generator = a.adjoint() * alpha - &a * alpha.conj();
    let displacement = generator.exp();

    let ratio = mean_photons / (mean_photons + 1.0);
    let thermal = DMatrix::from_fn(work, work, |r, c| {
        if r == c {
            Complex64::new(ratio.powi(r as i32) / (mean_photons + 1.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let full = &displacement * thermal * displacement.adjoint();
    let cropped = full.view((0, 0), (policy.dim, policy.dim)).into_owned();
    let kept: f64 = (0..policy.dim).map(|n| cropped[(n, n)].re).sum();
    let tail = (1.0 - kept).max(0.0);
    if tail > policy.tail_tol {
        return Err(Error::Truncation {
            tail,
            dim: policy.dim,
            tol: policy.tail_tol,
        });
    }
    FockDensityMatrix::from_matrix(cropped / Complex64::new(kept, 0.0))
}

/// `a^M rho (a^dagger)^M / Tr(.)` by explicit matrix products; also returns
/// the unnormalized trace.
pub fn lowering_sandwich(rho: &FockDensityMatrix, count: usize) -> Result<(FockDensityMatrix, f64)> {
    let a = lowering_matrix(rho.dim());
    let mut power = DMatrix::identity(rho.dim(), rho.dim());
    for _ in 0..count {
        power = &power * &a;
    }
    let out = &power * rho.elems() * power.adjoint();
    let trace: f64 = (0..rho.dim()).map(|n| out[(n, n)].re).sum();
    if trace.is_nan() || trace < MIN_SUBTRACTION_TRACE {
        return Err(Error::ZeroNorm {
            trace,
            min: MIN_SUBTRACTION_TRACE,
        });
    }
    Ok((FockDensityMatrix::from_matrix(out / Complex64::new(trace, 0.0))?, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteForceGain {
    pub result: GainResult,
    /// The scan maximum landed on the first or last grid point.
    pub at_edge: bool,
}

/// Dense uniform scan of the coherent overlap over real `beta` in
/// `(0, gain_bracket_max * alpha_in]`, refined by a three-point parabola.
pub fn brute_force_overlap_max(
    rho: &FockDensityMatrix,
    alpha_in: f64,
    grid_points: usize,
    policy: &NumericsPolicy,
) -> BruteForceGain {
    let grid_points = grid_points.max(1000);
    let lo = GAIN_SEARCH_FLOOR;
    let hi = policy.gain_bracket_max * alpha_in;
    let h = (hi - lo) / (grid_points - 1) as f64;
    let values: Vec<f64> = (0..grid_points)
        .map(|i| coherent_overlap(rho, lo + h * i as f64))
        .collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let at_edge = best == 0 || best == grid_points - 1;
    let mut beta_star = lo + h * best as f64;
    let mut overlap = values[best];
    if !at_edge {
        let (fm, f0, fp) = (values[best - 1], values[best], values[best + 1]);
        let curvature = fm - 2.0 * f0 + fp;
        if curvature < 0.0 {
            let shift = 0.5 * h * (fm - fp) / curvature;
            beta_star += shift;
            overlap = f0 - 0.25 * (fm - fp) * shift / h;
        }
    }
    BruteForceGain {
        result: GainResult {
            g: beta_star / alpha_in,
            beta_star,
            overlap_at_max: overlap,
        },
        at_edge,
    }
}

/// One fast-path versus oracle comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CrossCheck {
    fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        }
    }
}

/// Runs every fast path next to its oracle at input amplitude `alpha`,
/// intensity gain `gain` (noise `gain - 1` for the NPA) and `subtractions`.
pub fn cross_check(
    alpha: f64,
    gain: f64,
    subtractions: usize,
    policy: &NumericsPolicy,
) -> Result<Vec<CrossCheck>> {
    let mut checks = Vec::new();
    let nbar = gain - 1.0;
    let amp = AmplifierParams::new(gain)?;
    let input = coherent_state(alpha, policy)?;

    let amplified = amplify(&input, amp, policy)?;
    let reference = displacement_exponential_state(alpha * gain.sqrt(), nbar, policy)?;
    checks.push(CrossCheck::new(
        format!("amplify(coherent {alpha}, G={gain}) vs displacement exponential"),
        amplified.max_abs_diff(&reference)?,
        1e-7,
    ));

    let laguerre = displaced_thermal(alpha, nbar, policy)?;
    let reference = displacement_exponential_state(alpha, nbar, policy)?;
    checks.push(CrossCheck::new(
        format!("displaced_thermal({alpha}, {nbar}) vs displacement exponential"),
        laguerre.max_abs_diff(&reference)?,
        1e-7,
    ));

    let front = npa_front_end(alpha, nbar, policy)?;
    let scaled = amplify(&coherent_state(alpha / gain.sqrt(), policy)?, amp, policy)?;
    checks.push(CrossCheck::new(
        format!("npa_front_end({alpha}, {nbar}) vs amplifier on scaled input"),
        front.max_abs_diff(&scaled)?,
        1e-7,
    ));

    let params = SubtractionParams::new(subtractions)?;
    for (label, state) in [("apa", &amplified), ("npa", &front)] {
        let (fast, w_fast) = subtract_photons(state, params)?;
        let (slow, w_slow) = lowering_sandwich(state, subtractions)?;
        let weight_dev = (w_fast - w_slow).abs() / w_slow.max(1.0);
        checks.push(CrossCheck::new(
            format!("subtract_photons({label}, M={subtractions}) vs lowering sandwich"),
            fast.max_abs_diff(&slow)?.max(weight_dev),
            1e-12,
        ));
    }

    for kind in DeviceKind::ALL {
        let noise = kind.noise_for_added_photons(nbar);
        let plus = prepare_state(kind, alpha.into(), noise, subtractions, policy)?;
        let minus = prepare_state(kind, (-alpha).into(), noise, subtractions, policy)?;
        checks.push(CrossCheck::new(
            format!("{kind} parity shortcut vs explicit -alpha run"),
            plus.state.parity_flip().max_abs_diff(&minus.state)?,
            1e-9,
        ));
        if subtractions > 0 || noise > kind.noise_floor() {
            let fast = device_gain(&plus.state, alpha, policy);
            let slow = brute_force_overlap_max(&plus.state, alpha, 20_001, policy);
            let deviation = match fast {
                Ok(fast) if !slow.at_edge => (fast.beta_star - slow.result.beta_star).abs(),
                Err(Error::Optimization(_)) if slow.at_edge => 0.0,
                _ => f64::INFINITY,
            };
            checks.push(CrossCheck::new(
                format!("{kind} device_gain vs dense scan"),
                deviation,
                2.0 * policy.optimizer_tol,
            ));
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{mean_photon_number, thermal_state};
    use approx::assert_abs_diff_eq;

    fn policy() -> NumericsPolicy {
        NumericsPolicy::default()
    }

    #[test]
    fn displacement_oracle_limits() {
        let p = policy();
        let a = displacement_exponential_state(0.0, 1.0, &p).unwrap();
        assert!(a.max_abs_diff(&thermal_state(1.0, &p).unwrap()).unwrap() <= 1e-12);
        let a = displacement_exponential_state(0.5, 0.0, &p).unwrap();
        assert!(a.max_abs_diff(&coherent_state(0.5, &p).unwrap()).unwrap() <= 1e-7);
        let a = displacement_exponential_state(0.5 * 2f64.sqrt(), 1.0, &p).unwrap();
        let b = amplify(&coherent_state(0.5, &p).unwrap(), AmplifierParams::new(2.0).unwrap(), &p).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-7);
        let a = displacement_exponential_state(0.5, 1.0, &p).unwrap();
        assert_abs_diff_eq!(mean_photon_number(&a), 1.25, epsilon = 1e-6);
    }

    #[test]
    fn sandwich_examples() {
        let p = policy();
        let rho = coherent_state(0.5, &p).unwrap();
        let (out, _) = lowering_sandwich(&rho, 1).unwrap();
        assert!(out.max_abs_diff(&rho).unwrap() <= 1e-8);
        let two = FockDensityMatrix::number_state(2, 16).unwrap();
        let (out, w) = lowering_sandwich(&two, 2).unwrap();
        assert!(out.max_abs_diff(&FockDensityMatrix::vacuum(16).unwrap()).unwrap() <= 1e-15);
        assert_abs_diff_eq!(w, 2.0, epsilon = 1e-12);
        let (out, _) = lowering_sandwich(&thermal_state(1.0, &p).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(mean_photon_number(&out), 2.0, epsilon = 1e-6);
        assert!(matches!(
            lowering_sandwich(&FockDensityMatrix::vacuum(16).unwrap(), 1),
            Err(Error::ZeroNorm { .. })
        ));
    }

    #[test]
    fn brute_force_gain_examples() {
        let p = policy();
        let r = brute_force_overlap_max(&coherent_state(0.5, &p).unwrap(), 0.5, 2000, &p);
        assert!(!r.at_edge);
        assert_abs_diff_eq!(r.result.g, 1.0, epsilon = 1e-3);

        let th = thermal_state(1.0, &p).unwrap();
        let r = brute_force_overlap_max(&th, 0.5, 2000, &p);
        assert!(r.at_edge);
        assert!(r.result.beta_star < 0.01);
        assert!(matches!(device_gain(&th, 0.5, &p), Err(Error::Optimization(_))));
    }

    #[test]
    fn cross_check_passes_at_reference_point() {
        let checks = cross_check(0.5, 2.0, 1, &policy()).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(checks.len() >= 8);
    }
}
