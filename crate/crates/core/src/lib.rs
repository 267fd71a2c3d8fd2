//! Stationary loops of the planar three-body action, their symmetry, and the
//! bifurcations of the figure-eight family.
//!
//! A loop is a truncated Fourier series in an orthonormal basis
//! ([`loop_space`]). The action, its gradient, Hessian and higher brackets are
//! evaluated by collocation ([`action`]). [`symmetry`] implements the order-12
//! group of the figure-eight, its projectors and the representation labels of
//! Hessian eigenvectors. [`solver`] finds stationary loops by Newton's method,
//! [`spectrum`] classifies Hessian spectra and [`continuation`] follows a
//! solution family in a potential parameter. [`bifurcation`] locates
//! eigenvalue crossings along a family, [`reduction`] computes the coefficients
//! of the reduced action at a crossing, and [`trace`] follows the bifurcated
//! branches it predicts. [`io`] holds the file formats.

pub mod action;
pub mod bifurcation;
pub mod continuation;
pub mod error;
pub mod io;
pub mod loop_space;
pub mod reduction;
pub mod solver;
pub mod spectrum;
pub mod symmetry;
pub mod trace;

pub use action::{action, angular_momentum, bracket, gradient, hessian, HessianMatrix, Potential};
pub use bifurcation::{detect_crossings, event_at, BifurcationEvent};
pub use continuation::{continue_branch, Branch, BranchPoint, ContinuationConfig, Family};
pub use error::{Error, Result};
pub use loop_space::{Axis, LoopPath, Series, TangentField};
pub use reduction::{ls_coefficients, predict_bifurcation, verify_identities, LSReduction, ReductionConfig, Side};
pub use solver::{solve, SolveConfig};
pub use spectrum::{morse_index, spectrum, ClassifiedSpectrum};
pub use symmetry::{bifurcation_pattern, classify, IrrepLabel, Projector, SymmetryGroup};
pub use trace::{trace_bifurcated_branch, TraceConfig, TracedBranch};
