//! Nonequilibrium qubit thermometry with a tunable mix of dephasing and
//! dissipative coupling to an Ohmic bath.
//!
//! The crate computes the memory kernels of the bath, integrates the
//! generalized Bloch equations, and evaluates coherence witnesses and
//! temperature-estimation figures of merit on the resulting trajectories.

// `!(x > 0.0)` is how NaN gets rejected; quadrature constants are quoted in full.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod csv;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod metrology;
pub mod plot;
pub mod quadrature;
pub mod spectral;
pub mod witness;

pub use dynamics::{integrate, BlochState, ProbeConfig, Trajectory};
pub use error::{Error, Result};
pub use kernels::{precompute, KernelParams, KernelSet, KernelValues, QuadratureConfig};
pub use metrology::{MetrologyResult, StencilConfig};
pub use spectral::SpectralDensity;
pub use witness::WitnessReport;
