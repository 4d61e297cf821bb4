//! Amplifier-powered (APA) and noise-powered (NPA) devices, parameter sweeps
//! over the noise parameter, and the minimizers behind the headline numbers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{amplify_with_tail, subtract_photons, AmplifierParams, SubtractionParams};
use crate::error::{Error, Result};
use crate::fock::{coherent_state_with_tail, displaced_thermal_with_tail, CoherentAmplitude, FockDensityMatrix, NumericsPolicy};
use crate::metrics::{device_gain, fidelity_to_coherent, phase_variance, uhlmann_fidelity, GainResult};
use crate::optimize::{argmin, golden_section_minimize, linspace};

/// Number of points in the default noise grids.
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    /// Optimal amplifier followed by photon subtraction.
    Apa,
    /// Displaced thermal noise followed by photon subtraction.
    Npa,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 2] = [DeviceKind::Apa, DeviceKind::Npa];

    /// Smallest admissible noise parameter: `G = 1` or `n̄ = 0`.
    pub fn noise_floor(self) -> f64 {
        match self {
            DeviceKind::Apa => 1.0,
            DeviceKind::Npa => 0.0,
        }
    }

    /// Mean number of added noise photons for a noise parameter.
    pub fn added_photons(self, noise: f64) -> f64 {
        match self {
            DeviceKind::Apa => noise - 1.0,
            DeviceKind::Npa => noise,
        }
    }

    /// Noise parameter adding `photons` noise photons on average.
    pub fn noise_for_added_photons(self, photons: f64) -> f64 {
        match self {
            DeviceKind::Apa => photons + 1.0,
            DeviceKind::Npa => photons,
        }
    }

    /// `G` in [1, 6] for the APA, `n̄` in [0, 5] for the NPA.
    pub fn default_grid(self) -> Vec<f64> {
        let lo = self.noise_floor();
        linspace(lo, lo + 5.0, DEFAULT_GRID_POINTS)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Apa => "apa",
            DeviceKind::Npa => "npa",
        }
    }

    fn check_noise(self, noise: f64) -> Result<()> {
        if noise.is_finite() && noise >= self.noise_floor() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{self} noise parameter must be >= {}, got {noise}",
                self.noise_floor()
            )))
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "apa" => Ok(DeviceKind::Apa),
            "npa" => Ok(DeviceKind::Npa),
            other => Err(Error::Domain(format!("unknown device '{other}' (expected apa or npa)"))),
        }
    }
}

/// One device operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    pub kind: DeviceKind,
    /// Real input amplitude.
    pub alpha: f64,
    /// `G` for the APA, `n̄` for the NPA.
    pub noise: f64,
    pub subtractions: usize,
    pub policy: NumericsPolicy,
}

impl DeviceConfig {
    pub fn new(
        kind: DeviceKind,
        alpha: f64,
        noise: f64,
        subtractions: usize,
        policy: NumericsPolicy,
    ) -> Result<Self> {
        let cfg = Self {
            kind,
            alpha,
            noise,
            subtractions,
            policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("input amplitude must be > 0, got {}", self.alpha)));
        }
        self.kind.check_noise(self.noise)?;
        SubtractionParams::new(self.subtractions)?;
        self.policy.check()
    }

    pub fn with_noise(self, noise: f64) -> Self {
        Self { noise, ..self }
    }
}

/// Device output before any figure of merit is computed.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: FockDensityMatrix,
    pub success_weight: f64,
    /// Probability mass discarded by truncation while building the
    /// pre-subtraction state.
    pub tail_mass: f64,
}

/// Runs the device on an arbitrary complex input amplitude.
pub fn prepare_state(
    kind: DeviceKind,
    alpha: CoherentAmplitude,
    noise: f64,
    subtractions: usize,
    policy: &NumericsPolicy,
) -> Result<PreparedState> {
    kind.check_noise(noise)?;
    let params = SubtractionParams::new(subtractions)?;
    let (front, tail_mass) = match kind {
        DeviceKind::Apa => {
            let (input, input_tail) = coherent_state_with_tail(alpha, policy)?;
            let (out, amp_tail) = amplify_with_tail(&input, AmplifierParams::new(noise)?, policy)?;
            (out, input_tail + amp_tail)
        }
        DeviceKind::Npa => displaced_thermal_with_tail(alpha, noise, policy)?,
    };
    let (state, success_weight) = subtract_photons(&front, params)?;
    Ok(PreparedState {
        state,
        success_weight,
        tail_mass,
    })
}

/// Output state and scalar figures of merit at one operating point.
#[derive(Debug, Clone)]
pub struct DeviceOutcome {
    pub state: FockDensityMatrix,
    pub gain: GainResult,
    pub fidelity_at_g: f64,
    pub phase_var: f64,
    pub success_weight: f64,
    pub tail_mass: f64,
}

impl DeviceOutcome {
    pub fn nominal_amplitude(&self) -> f64 {
        self.gain.beta_star
    }
}

pub fn run_device(cfg: &DeviceConfig) -> Result<DeviceOutcome> {
    cfg.validate()?;
    let prepared = prepare_state(cfg.kind, cfg.alpha.into(), cfg.noise, cfg.subtractions, &cfg.policy)?;
    let gain = device_gain(&prepared.state, cfg.alpha, &cfg.policy)?;
    let fidelity_at_g = fidelity_to_coherent(&prepared.state, gain.g, cfg.alpha);
    let phase_var = phase_variance(&prepared.state, &cfg.policy)?;
    Ok(DeviceOutcome {
        state: prepared.state,
        gain,
        fidelity_at_g,
        phase_var,
        success_weight: prepared.success_weight,
        tail_mass: prepared.tail_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptParameter {
    Noise,
}

/// A grid over one parameter of a base device configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: DeviceConfig,
    pub swept: SweptParameter,
    pub grid: Vec<f64>,
}

impl SweepSpec {
    pub fn new(base: DeviceConfig, grid: Vec<f64>) -> Result<Self> {
        let spec = Self {
            base,
            swept: SweptParameter::Noise,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.grid.is_empty() {
            return Err(Error::Domain("empty sweep grid".into()));
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("sweep grid must be strictly increasing".into()));
        }
        for &x in &self.grid {
            self.base.kind.check_noise(x)?;
        }
        Ok(())
    }
}

/// Scalars computed at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMetrics {
    pub g: f64,
    pub nominal_amplitude: f64,
    pub fidelity: f64,
    pub phase_variance: f64,
    pub success_weight: f64,
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: DeviceKind,
    pub alpha: f64,
    pub noise: f64,
    pub subtractions: usize,
    pub dim: usize,
    /// Per-point failures are recorded here; the sweep carries on.
    pub metrics: std::result::Result<PointMetrics, Error>,
}

/// Evaluates every grid point, in parallel, returning rows in grid order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let base = spec.base;
    Ok(spec
        .grid
        .par_iter()
        .map(|&noise| {
            let cfg = base.with_noise(noise);
            let metrics = run_device(&cfg).map(|o| PointMetrics {
                g: o.gain.g,
                nominal_amplitude: o.gain.beta_star,
                fidelity: o.fidelity_at_g,
                phase_variance: o.phase_var,
                success_weight: o.success_weight,
                tail_mass: o.tail_mass,
            });
            SweepRow {
                kind: base.kind,
                alpha: base.alpha,
                noise,
                subtractions: base.subtractions,
                dim: base.policy.dim,
                metrics,
            }
        })
        .collect())
}

/// Largest supported basis dimension when searching for an adequate one.
pub const MAX_AUTO_DIM: usize = 1024;

/// The smallest `dim >= base.dim`, stepping by 16, at which the device at
/// `max_noise` stays within `tail_tol`.
pub fn adequate_policy(
    kind: DeviceKind,
    alpha: f64,
    max_noise: f64,
    subtractions: usize,
    base: &NumericsPolicy,
) -> Result<NumericsPolicy> {
    let mut dim = base.dim;
    loop {
        let policy = NumericsPolicy { dim, ..*base };
        match prepare_state(kind, alpha.into(), max_noise, subtractions, &policy) {
            Ok(_) => return Ok(policy),
            Err(Error::Truncation { .. }) if dim < MAX_AUTO_DIM => dim += 16,
            Err(e) => return Err(e),
        }
    }
}

/// Location and value of a minimum over the noise parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseOptimum {
    pub noise: f64,
    pub value: f64,
}

/// Grid pass followed by golden-section refinement between the neighbours
/// of the grid minimum.
///
/// Grid points beyond what the truncation supports are cut off. A minimum
/// on the last usable point is reported as a bracket-edge failure; one on
/// the first point is kept, since the first point is the physical floor of
/// the noise parameter.
fn minimize_over_grid<F>(grid: &[f64], tol: f64, objective: F) -> Result<NoiseOptimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let evaluated: Vec<Result<f64>> = grid.par_iter().map(|&x| objective(x)).collect();
    let mut values = Vec::with_capacity(grid.len());
    for v in evaluated {
        match v {
            Ok(v) => values.push(v),
            Err(Error::Truncation { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if values.len() < 2 {
        return Err(Error::Optimization(format!(
            "only {} of {} grid points are representable at this truncation",
            values.len(),
            grid.len()
        )));
    }
    let usable = &grid[..values.len()];
    let best = argmin(&values).ok_or_else(|| Error::Optimization("objective is not finite".into()))?;
    if best == values.len() - 1 {
        return Err(Error::Optimization(format!(
            "minimum sits at the upper edge {} of the usable grid",
            usable[best]
        )));
    }
    let lo = usable[best.saturating_sub(1)];
    let hi = usable[best + 1];
    let (x, fx) = golden_section_minimize(|x| objective(x).unwrap_or(f64::INFINITY), lo, hi, tol);
    if fx <= values[best] {
        Ok(NoiseOptimum { noise: x, value: fx })
    } else {
        Ok(NoiseOptimum {
            noise: usable[best],
            value: values[best],
        })
    }
}

pub fn minimize_phase_variance(
    kind: DeviceKind,
    alpha: f64,
    subtractions: usize,
    policy: &NumericsPolicy,
) -> Result<NoiseOptimum> {
    minimize_phase_variance_on(kind, alpha, subtractions, policy, &kind.default_grid())
}

pub fn minimize_phase_variance_on(
    kind: DeviceKind,
    alpha: f64,
    subtractions: usize,
    policy: &NumericsPolicy,
    grid: &[f64],
) -> Result<NoiseOptimum> {
    if subtractions == 0 {
        return Err(Error::Domain("phase variance minimization needs at least one subtraction".into()));
    }
    let base = DeviceConfig::new(kind, alpha, kind.noise_floor(), subtractions, *policy)?;
    minimize_over_grid(grid, policy.optimizer_tol, |noise| {
        let prepared = prepare_state(kind, alpha.into(), noise, subtractions, &base.policy)?;
        phase_variance(&prepared.state, policy)
    })
}

/// Uhlmann fidelity between the device outputs for `+alpha` and `-alpha`.
///
/// The `-alpha` output is the parity image of the `+alpha` output.
pub fn discrimination_fidelity(cfg: &DeviceConfig) -> Result<f64> {
    cfg.validate()?;
    let plus = prepare_state(cfg.kind, cfg.alpha.into(), cfg.noise, cfg.subtractions, &cfg.policy)?;
    let minus = plus.state.parity_flip();
    uhlmann_fidelity(&plus.state, &minus, &cfg.policy)
}

pub fn minimize_discrimination(
    kind: DeviceKind,
    alpha: f64,
    subtractions: usize,
    policy: &NumericsPolicy,
) -> Result<NoiseOptimum> {
    minimize_discrimination_on(kind, alpha, subtractions, policy, &kind.default_grid())
}

pub fn minimize_discrimination_on(
    kind: DeviceKind,
    alpha: f64,
    subtractions: usize,
    policy: &NumericsPolicy,
    grid: &[f64],
) -> Result<NoiseOptimum> {
    let base = DeviceConfig::new(kind, alpha, kind.noise_floor(), subtractions, *policy)?;
    minimize_over_grid(grid, policy.optimizer_tol, |noise| {
        discrimination_fidelity(&base.with_noise(noise))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, mean_photon_number};
    use approx::assert_abs_diff_eq;

    fn policy() -> NumericsPolicy {
        NumericsPolicy::default()
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("APA".parse::<DeviceKind>().unwrap(), DeviceKind::Apa);
        assert_eq!("npa".parse::<DeviceKind>().unwrap(), DeviceKind::Npa);
        assert!("xpa".parse::<DeviceKind>().is_err());
        assert_eq!(DeviceKind::Npa.to_string(), "npa");
    }

    #[test]
    fn config_validation() {
        let p = policy();
        assert!(DeviceConfig::new(DeviceKind::Apa, 0.5, 0.9, 1, p).is_err());
        assert!(DeviceConfig::new(DeviceKind::Npa, 0.5, -0.1, 1, p).is_err());
        assert!(DeviceConfig::new(DeviceKind::Npa, 0.0, 0.1, 1, p).is_err());
        assert!(DeviceConfig::new(DeviceKind::Npa, 0.5, 0.1, 9, p).is_err());
        assert!(DeviceConfig::new(DeviceKind::Npa, 0.5, 0.0, 0, p).is_ok());
    }

    #[test]
    fn identity_device() {
        let p = policy();
        let cfg = DeviceConfig::new(DeviceKind::Apa, 0.5, 1.0, 0, p).unwrap();
        let out = run_device(&cfg).unwrap();
        let input = coherent_state(0.5, &p).unwrap();
        assert!(out.state.max_abs_diff(&input).unwrap() <= 1e-12);
        assert_abs_diff_eq!(out.gain.g, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(out.phase_var, phase_variance(&input, &p).unwrap(), epsilon = 1e-12);
        assert_eq!(out.success_weight, 1.0);
    }

    #[test]
    fn subtraction_raises_amplified_mean() {
        let p = policy();
        let cfg = DeviceConfig::new(DeviceKind::Apa, 0.5, 2.0, 1, p).unwrap();
        let out = run_device(&cfg).unwrap();
        assert!(mean_photon_number(&out.state) > 1.5);
    }

    #[test]
    fn npa_gain_example() {
        let cfg = DeviceConfig::new(DeviceKind::Npa, 0.5, 1.0, 1, policy()).unwrap();
        let out = run_device(&cfg).unwrap();
        assert_abs_diff_eq!(out.gain.g, 2.39, epsilon = 0.02);
    }

    #[test]
    fn sweep_rows_in_grid_order() {
        let base = DeviceConfig::new(DeviceKind::Apa, 0.5, 1.0, 1, policy()).unwrap();
        let spec = SweepSpec::new(base, vec![1.0, 1.5, 2.0]).unwrap();
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.iter().map(|r| r.noise).collect::<Vec<_>>(), vec![1.0, 1.5, 2.0]);
        let first = rows[0].metrics.as_ref().unwrap();
        assert_abs_diff_eq!(first.g, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(first.fidelity, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn sweep_records_point_errors() {
        let base = DeviceConfig::new(DeviceKind::Npa, 0.5, 0.0, 1, NumericsPolicy::with_dim(32)).unwrap();
        let spec = SweepSpec::new(base, vec![0.5, 4.0]).unwrap();
        let rows = sweep(&spec).unwrap();
        assert!(rows[0].metrics.is_ok());
        assert!(matches!(rows[1].metrics, Err(Error::Truncation { .. })));
    }

    #[test]
    fn sweep_spec_validation() {
        let base = DeviceConfig::new(DeviceKind::Apa, 0.5, 1.0, 1, policy()).unwrap();
        assert!(SweepSpec::new(base, vec![]).is_err());
        assert!(SweepSpec::new(base, vec![1.0, 1.0]).is_err());
        assert!(SweepSpec::new(base, vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn adequate_policy_grows_dim() {
        let p = policy();
        let q = adequate_policy(DeviceKind::Apa, 0.5, 6.0, 1, &p).unwrap();
        assert!(q.dim > 64);
        assert!(prepare_state(DeviceKind::Apa, 0.5.into(), 6.0, 1, &q).is_ok());
        let q = adequate_policy(DeviceKind::Apa, 0.5, 2.0, 1, &p).unwrap();
        assert_eq!(q.dim, 64);
    }

    #[test]
    fn discrimination_baseline() {
        let cfg = DeviceConfig::new(DeviceKind::Apa, 0.5, 1.0, 0, policy()).unwrap();
        let f = discrimination_fidelity(&cfg).unwrap();
        assert_abs_diff_eq!(f, (-1.0f64).exp(), epsilon = 1e-7);
    }

    #[test]
    fn unconditioned_minimum_is_at_the_floor() {
        let p = policy();
        for kind in DeviceKind::ALL {
            let grid = linspace(kind.noise_floor(), kind.noise_floor() + 1.0, 11);
            let opt = minimize_discrimination_on(kind, 0.5, 0, &p, &grid).unwrap();
            assert_abs_diff_eq!(opt.noise, kind.noise_floor(), epsilon = 1e-5);
            assert_abs_diff_eq!(opt.value, 0.368, epsilon = 1e-3);
        }
    }

    #[test]
    fn minimizer_reports_upper_edge() {
        let p = policy();
        // variance keeps falling over this short grid
        let grid = linspace(1.0, 1.2, 5);
        assert!(matches!(
            minimize_phase_variance_on(DeviceKind::Apa, 0.5, 1, &p, &grid),
            Err(Error::Optimization(_))
        ));
        assert!(matches!(
            minimize_phase_variance(DeviceKind::Apa, 0.5, 0, &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn minimizer_clips_unrepresentable_points() {
        // at dim 64 the APA grid stops being representable near G = 3.3
        let p = policy();
        let opt = minimize_phase_variance(DeviceKind::Apa, 0.5, 1, &p).unwrap();
        assert!(opt.noise > 1.2 && opt.noise < 2.5, "{opt:?}");
    }
}
