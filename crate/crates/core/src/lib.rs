//! Numerical toolkit for radial and warped-product model manifolds:
//! weight functions for weighted Poincaré inequalities, ρ-metrics,
//! principal eigenvalues, Green's-function decay, end classification and
//! warped-product rigidity checks.

// NaN must fail every check, so `!(a < b)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod ends;
pub mod error;
pub mod fit;
pub mod ode;
pub mod profiles;
pub mod reproduce;
pub mod rho_metric;
pub mod rigidity;
pub mod specs;
pub mod spectral;
pub mod warped;
pub mod weights;

pub use error::{Error, Result};
