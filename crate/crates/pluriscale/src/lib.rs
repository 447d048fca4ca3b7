//! Numerical toolkit for the geometry of domains in complex Euclidean space.
//!
//! The crate is organized around the scaling method: defining functions and
//! Levi-form classification ([`geometry`]), scaling sequences and limit-domain
//! verification ([`scaling`]), invariant metrics and their boundary asymptotics
//! ([`invmetrics`]), Bergman kernels on Reinhardt domains ([`bergman`]), the Wu
//! ellipsoid metric ([`wu`]), and Poisson-kernel estimates ([`harmonic`]).
//!
//! Everything is plain `f64` numerics. Reports carry the data they were
//! computed from; operations that compare against an analytic target return
//! a verdict instead of asserting.

pub mod bergman;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod invmetrics;
pub mod linalg;
pub mod maps;
pub mod report;
pub mod roots;
pub mod scaling;
pub mod wu;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
