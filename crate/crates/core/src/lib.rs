//! Volume and shape factors of the controllability ellipsoid of linear
//! discrete-time systems.
//!
//! For a stable single-input system `x_{k+1} = A x_k + B u_k` with distinct
//! eigenvalues, the infinite-horizon controllability Grammian has a closed
//! determinant built from pseudo-hyperbolic eigenvalue gaps, so the ellipsoid
//! volume and its shape deconstruction (evenness factor, pairwise section
//! factors, circumscribed-box half-lengths) are available analytically.
//! Everything analytic is cross-checked against independent numerical
//! referees (truncated series, Stein fixed point, dense determinants).
//!
//! Module map:
//! - [`model`]: domain records (system, spectrum, diagonal form, Grammians)
//! - [`eigensolve`]: eigendecomposition and the diagonal canonical form
//! - [`grammian`]: finite/infinite Grammians, series and closed form
//! - [`analytic`]: closed-form determinant and volume
//! - [`factors`]: evenness/shape factor deconstruction
//! - [`geometry`]: boundary sampling, radii, circumscribed box
//! - [`oracle`]: independent numerical referees and verification reports
//! - [`polesearch`]: evenness-maximizing pole placement search

pub mod analytic;
pub mod eigensolve;
pub mod error;
pub mod factors;
pub mod geometry;
pub mod grammian;
pub mod model;
pub mod oracle;
pub mod polesearch;

pub use error::{Error, Result};
pub use model::{Basis, DiagonalForm, GrammianResult, Horizon, LdtSystem, Spectrum};
