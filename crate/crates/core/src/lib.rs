//! Finite-truncation spectral analysis of the Pauli master equations for a
//! quantum harmonic oscillator coupled to a heat bath at inverse temperature
//! `beta`.
//!
//! The occupation probabilities `p_m(t)` obey a birth-death system with
//! downward rate `rho * m` and upward rate `sigma * (m + 1)`, where
//! `sigma = rho * exp(-beta)` enforces detailed balance with respect to the
//! Gibbs law `p_m ∝ exp(-beta * m)`. This crate builds the truncated
//! generator, symmetrizes it in the weighted space `w_m = exp(beta * m)`,
//! diagonalizes it with an in-repo implicit QL solver, and evolves
//! distributions through the resulting spectral resolution. Independent
//! cross-checks are provided by an RK4 integrator, a linear-pencil
//! representation, the diagonal sector of the Lindblad equation, and an
//! exact-jump Monte Carlo sampler.
//!
//! The crate is `no_std` and only needs `alloc`. The default `std` feature
//! switches elementary functions to the platform math library.
#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod error;
pub mod evolution;
pub mod generator;
pub mod lindblad;
mod math;
pub mod model;
pub mod pencil;
pub mod spectral;
pub mod stochastic;
pub mod sum;
pub mod tridiag;
pub mod weighted;

pub use error::{Error, Result};
pub use evolution::{EvolutionResult, StepDiagnostics};
pub use generator::{GeneratorMatrix, SymmetrizedGenerator};
pub use lindblad::{CMatrix, DensityMatrix, LadderPair};
pub use model::{ModelParams, TruncatedDistribution};
pub use pencil::PencilPair;
pub use spectral::SpectralDecomposition;
pub use stochastic::{SampleResult, TrajectoryConfig};
pub use weighted::WeightVector;

pub use num_complex::Complex64;
