//! Sufficient dimension folding for matrix-valued predictors.
//!
//! Given samples `(X_i, Y_i)` with `X_i` a `pL × pR` matrix, the library
//! estimates a pair of bases `a` (`pL × mL`) and `b` (`pR × mR`) such that the
//! reduced predictor `aᵀ X b` carries the regression information about `Y`.
//! The estimate is the Kronecker envelope of an inverse-regression moment
//! target (SIR, SAVE or DR), fitted by alternating least squares.
//!
//! Modules:
//!
//! - [`tensor_ops`]: vec/mat/arr reshaping, Kronecker and commutation
//!   operators, projections, regularized inverses, subspace distances.
//! - [`moments`]: slicing and the per-slice moment targets.
//! - [`envelope`]: the alternating least-squares envelope solver.
//! - [`pipeline`]: spectral pre-screening, QDA and leave-one-out CV.
//! - [`simbench`]: the mixture generators, unfolded baselines and the
//!   Monte-Carlo harness.

pub mod envelope;
pub mod error;
pub mod moments;
pub mod pipeline;
pub mod rng;
pub mod simbench;
pub mod tensor_ops;

pub use error::{Error, Result};

pub use envelope::{fit_folded, fold, FoldingConfig, FoldingFit};
pub use moments::{Method, MomentTargets, ResponseKind, SampleSet, SliceAssignment};
pub use tensor_ops::{InversionMode, SubspaceBasis};
