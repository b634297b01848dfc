//! Fast Gaussian-process regression with equispaced Fourier features (EFGP).
//!
//! A translation-invariant kernel is approximated by complex exponentials on
//! an equispaced frequency lattice, turning the weight-space normal equations
//! into a diagonally-scaled Toeplitz system that conjugate gradients can solve
//! with FFT-speed matrix-vector products. Setup touches the data once through
//! nonuniform FFTs, so the per-iteration cost is independent of the number of
//! observations.
//!
//! The crate is organised around that pipeline:
//!
//! * [`kernel`] — squared-exponential and Matérn kernels with their exact
//!   spectral densities;
//! * [`grid`] — frequency-grid selection rules, aliasing/truncation error
//!   bounds, and empirical kernel-error measurement;
//! * [`nufft`] — type-1/type-2 nonuniform FFTs with a relative-error
//!   tolerance contract, plus direct-summation references;
//! * [`toeplitz`] — the padded-FFT Gram operator `F*F`;
//! * [`model`] — fitting, posterior-mean prediction, posterior variance;
//! * [`oracle`] — dense reference solvers and conditioning/stability
//!   diagnostics used to verify the fast path;
//! * [`experiments`] — synthetic-data generation, error metrics, and the
//!   benchmark runner.
//!
//! All arithmetic is double precision throughout: at the condition numbers
//! the weight-space system can reach (up to `N/sigma^2 + 1`), single
//! precision can lose every correct digit.

pub mod error;
pub mod experiments;
mod fft;
pub mod grid;
pub mod kernel;
pub mod model;
pub mod model_io;
pub mod nufft;
pub mod oracle;
pub mod special;
pub mod toeplitz;

mod cg;
mod data;

pub use data::Dataset;
pub use error::{EfgpError, Result};
pub use grid::FourierGrid;
pub use kernel::Kernel;
pub use model::{EfgpModel, GridSpec, SolveOptions};
