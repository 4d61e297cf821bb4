//! State transformations: the optimal phase-insensitive amplifier, conditional
//! photon subtraction, and the displaced-noise front end of the noise-powered
//! device.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, CoherentAmplitude, FockDensityMatrix, LnFactorials, NumericsPolicy};

/// Intensity gain of a perfectly inverted amplifier. Adds `G - 1` thermal
/// noise photons on average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierParams {
    gain: f64,
}

impl AmplifierParams {
    pub fn new(gain: f64) -> Result<Self> {
        if gain >= 1.0 && gain.is_finite() {
            Ok(Self { gain })
        } else {
            Err(Error::Domain(format!("amplifier gain must be >= 1, got {gain}")))
        }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn added_noise(&self) -> f64 {
        self.gain - 1.0
    }
}

/// Number of photons removed by successive ideal subtractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubtractionParams {
    count: usize,
}

impl SubtractionParams {
    pub const MAX: usize = 8;

    pub fn new(count: usize) -> Result<Self> {
        if count <= Self::MAX {
            Ok(Self { count })
        } else {
            Err(Error::Domain(format!(
                "at most {} subtractions supported, got {count}",
                Self::MAX
            )))
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

pub(crate) fn amplify_with_tail(
    rho: &FockDensityMatrix,
    params: AmplifierParams,
    policy: &NumericsPolicy,
) -> Result<(FockDensityMatrix, f64)> {
    let dim = rho.dim();
    if dim != policy.dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: policy.dim,
        });
    }
    let g = params.gain;
    let ln_noise = (g - 1.0).ln();
    let ln_g = g.ln();
    let lnf = LnFactorials::up_to(dim);
    let input = rho.elems();

    // out[n,m] = sum_p (G-1)^{n-p} / G^{(n+m)/2+1}
    //            * sqrt(C(n,p) C(m,q)) * in[p,q],   q = p + m - n.
    // The (G-1) powers of the global prefactor and the per-term denominator
    // combine to the nonnegative n-p, so G = 1 keeps only p = n.
    let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for m in 0..dim {
        for n in 0..dim {
            let ln_denominator = ((n + m) as f64 / 2.0 + 1.0) * ln_g;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in n.saturating_sub(m)..=n {
                let q = p + m - n;
                let z = input[(p, q)];
                if z.re == 0.0 && z.im == 0.0 {
                    continue;
                }
                let noise_power = if n == p { 0.0 } else { (n - p) as f64 * ln_noise };
                let ln_w = noise_power + 0.5 * (lnf.binomial(n, p) + lnf.binomial(m, q))
                    - ln_denominator;
                acc += z * ln_w.exp();
            }
            out[(n, m)] = acc;
        }
    }

    let out = FockDensityMatrix::from_matrix_unchecked(out);
    let trace_in = rho.trace();
    let trace_out = out.trace();
    let tail = ((trace_in - trace_out) / trace_in).max(0.0);
    policy.check_tail(tail)?;
    Ok((out.scaled(trace_in / trace_out).hermitized(), tail))
}

/// Output of the optimal amplifier with intensity gain `G` acting on `rho`.
///
/// Fails with [`Error::Truncation`] when more than `tail_tol` of the output
/// probability would land beyond the basis cutoff.
pub fn amplify(
    rho: &FockDensityMatrix,
    params: AmplifierParams,
    policy: &NumericsPolicy,
) -> Result<FockDensityMatrix> {
    amplify_with_tail(rho, params, policy).map(|(out, _)| out)
}

/// Intermediate traces below this mark the subtraction as impossible.
pub const MIN_SUBTRACTION_TRACE: f64 = 1e-14;

/// Applies `rho[n,m] <- sqrt((n+1)(m+1)) rho[n+1,m+1]` `count` times,
/// renormalizing after each step.
///
/// Returns the conditioned state and the product of the pre-normalization
/// traces, the relative heralding weight.
pub fn subtract_photons(
    rho: &FockDensityMatrix,
    params: SubtractionParams,
) -> Result<(FockDensityMatrix, f64)> {
    let dim = rho.dim();
    let mut current = rho.elems().clone();
    let mut weight = 1.0;
    let zero = Complex64::new(0.0, 0.0);
    for _ in 0..params.count {
        let mut next = DMatrix::from_element(dim, dim, zero);
        for m in 0..dim - 1 {
            for n in 0..dim - 1 {
                let factor = (((n + 1) * (m + 1)) as f64).sqrt();
                next[(n, m)] = current[(n + 1, m + 1)] * factor;
            }
        }
        let trace: f64 = (0..dim).map(|n| next[(n, n)].re).sum();
        if trace.is_nan() || trace < MIN_SUBTRACTION_TRACE {
            return Err(Error::ZeroNorm {
                trace,
                min: MIN_SUBTRACTION_TRACE,
            });
        }
        next /= Complex64::new(trace, 0.0);
        weight *= trace;
        current = next;
    }
    Ok((FockDensityMatrix::from_matrix_unchecked(current), weight))
}

/// Input of the noise-powered device before subtraction: thermal noise of
/// mean `mean_noise` displaced by the input amplitude.
pub fn npa_front_end(
    alpha: impl Into<CoherentAmplitude>,
    mean_noise: f64,
    policy: &NumericsPolicy,
) -> Result<FockDensityMatrix> {
    fock::displaced_thermal(alpha, mean_noise, policy)
}
