//! Generalized correntropy and the GMCC family of adaptive filters.
//!
//! * [`kernel`]: the generalized Gaussian kernel, sample correntropy, the
//!   GC-loss and the GCIM distance.
//! * [`filters`]: GMCC and LMP stochastic-gradient updates and the batch
//!   fixed-point solver.
//! * [`noise`]: seeded noise models (Gaussian, uniform, Laplace, binary,
//!   contaminated mixtures).
//! * [`theory`]: steady-state EMSE prediction by numerical expectation.
//! * [`harness`]: reproducible Monte Carlo system-identification experiments.
//!
//! Independent runs are scheduled on rayon when the `parallel` feature is on
//! (the default); aggregates are identical either way.

pub mod error;
pub mod filters;
pub mod harness;
pub mod kernel;
pub mod noise;
pub mod quadrature;
pub mod special;
pub mod theory;

pub use error::{Error, Result};
pub use filters::{
    gmcc_fixed_point, AlgorithmSpec, FirFilterState, FixedPointOptions, FixedPointSolution, Regressand, UpdateRule,
};
pub use harness::{Execution, RunConfig, SystemIdSetup};
pub use kernel::{correntropy_estimate, gc_loss, gcim, GgdKernel, SampleVector};
pub use noise::{NoiseModel, SeededStream};
pub use theory::{steady_state_emse, EmseResult, TheoryInputs, Validity};
