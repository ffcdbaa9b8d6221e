//! Numerical laboratory for backward parabolic equations with Log-Lipschitz
//! coefficients: weight-function calculus, Littlewood–Paley analysis on the
//! torus, coefficient mollification and constant recipes, an exact
//! non-Hölder counterexample family, and verification harnesses.

pub mod coefficients;
pub mod counterexample;
pub mod dyadic;
pub mod error;
pub mod harness;
pub mod logscalar;
pub mod quadrature;
pub mod smooth;
pub mod special;
pub mod summation;
pub mod weights;

pub use error::{Error, Result};
pub use logscalar::LogScalar;
pub use quadrature::{QuadResult, QuadratureConfig};
pub use summation::Precision;
pub use weights::WeightParams;
