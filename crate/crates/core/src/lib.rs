//! Frame functions on qubit and qutrit projection lattices.
//!
//! The crate checks, numerically, which probability assignments on
//! projectors are generated by a density operator. On a qubit, additivity
//! over orthogonal projectors only forces `p(P) + p(¬P) = 1`, and the
//! odd-shape frames `½[1 + f(m·n)]` satisfy it (together with continuity and
//! an eigenstate) without being linear. The modules here realize those
//! frames, decide linearity by least squares, exercise effect-level
//! additivity, show why vector orthogonal additivity says nothing about a
//! function known only on the unit sphere, and show that the same
//! construction breaks additivity over orthonormal bases of a qutrit.
//!
//! ```
//! use framelab_core::{fit_density_operator, linearity_verdict, odd_frame, BlochVector, OddShapeFunction};
//!
//! let frame = odd_frame(BlochVector::Z, OddShapeFunction::cubic())?;
//! let fit = fit_density_operator(&frame, 100_000, 42)?;
//! assert!((fit.rms_residual - 1.0 / 175f64.sqrt()).abs() < 2e-3);
//! assert!(!linearity_verdict(&fit, 1e-3)?.is_linear());
//! # Ok::<(), framelab_core::LabError>(())
//! ```

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod additivity;
pub mod effects;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod linearity;
pub mod qubit;
pub mod qutrit;
pub mod report;
pub mod sampling;
pub mod suite;

pub use error::{LabError, Result};
pub use frames::{born_frame, builtin_shapes, odd_frame, shape_by_name, FrameFunction, OddShapeFunction};
pub use linearity::{fit_density_operator, linearity_verdict, FitResult, Verdict};
pub use qubit::{BlochVector, DensityOperator, Effect, QubitProjector};
pub use report::{PropertyReport, WitnessData};
pub use suite::{claims_table, verify, ClaimsTable, SuiteConfig, VerificationReport};
