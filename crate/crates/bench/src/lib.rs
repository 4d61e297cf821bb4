//! Shared inputs for the criterion benchmarks.

use qamp_core::{amplify, coherent_state, AmplifierParams, FockDensityMatrix, NumericsPolicy};

/// Input amplitude used across the benchmarks.
pub const ALPHA: f64 = 0.5;

/// Basis sizes the benchmarks sweep over.
pub const DIMS: [usize; 3] = [48, 64, 128];

/// Coherent input at [`ALPHA`] and its amplified image at intensity gain 2.
pub fn fixture(dim: usize) -> (NumericsPolicy, FockDensityMatrix, FockDensityMatrix) {
    let policy = NumericsPolicy::with_dim(dim);
    let input = coherent_state(ALPHA, &policy).expect("coherent input fits");
    let amp = AmplifierParams::new(2.0).expect("valid gain");
    let output = amplify(&input, amp, &policy).expect("amplified state fits");
    (policy, input, output)
}
