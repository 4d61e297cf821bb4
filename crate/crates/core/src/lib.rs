//! Conditional quantum optical amplification in a truncated photon-number
//! basis.
//!
//! Two devices are modelled. The amplifier-powered device (APA) sends a
//! coherent state through an optimal phase-insensitive amplifier and then
//! subtracts photons. The noise-powered device (NPA) replaces the amplifier
//! with displaced thermal noise. The crate computes their nominal amplitude
//! gain, fidelity to the nominal coherent state, phase variance and the
//! Uhlmann fidelity between the outputs for `+alpha` and `-alpha`.
//!
//! ```
//! use qamp_core::{run_device, DeviceConfig, DeviceKind, NumericsPolicy};
//!
//! let cfg = DeviceConfig::new(DeviceKind::Apa, 0.5, 2.0, 1, NumericsPolicy::default()).unwrap();
//! let out = run_device(&cfg).unwrap();
//! assert!((out.gain.g - 2.73).abs() < 0.01);
//! ```

pub mod channels;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod optimize;
pub mod oracle;
pub mod pipeline;
pub mod reproduce;

pub use channels::{amplify, npa_front_end, subtract_photons, AmplifierParams, SubtractionParams};
pub use error::{Error, Result};
pub use fock::{
    coherent_overlap, coherent_state, displaced_thermal, mean_photon_number, thermal_state, validate,
    CoherentAmplitude, Diagnostics, FockDensityMatrix, NumericsPolicy,
};
pub use metrics::{device_gain, fidelity_to_coherent, phase_variance, uhlmann_fidelity, GainResult};
pub use pipeline::{
    discrimination_fidelity, minimize_discrimination, minimize_phase_variance, run_device, sweep, DeviceConfig,
    DeviceKind, DeviceOutcome, NoiseOptimum, PointMetrics, SweepRow, SweepSpec,
};
