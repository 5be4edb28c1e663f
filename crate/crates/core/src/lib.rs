//! Finite-dimensional functional calculus and functional-model checks for
//! sectorial operators.
//!
//! Operators are dense complex matrices. The crate computes ψ(A) and f(A) by
//! contour quadrature on sector boundaries, McIntosh square-function norms via
//! a Gram matrix, and the control/observation maps and Cauchy/Hankel-type
//! operators of the functional model, together with checks of the identities
//! that tie them together.

pub mod contour;
pub mod error;
pub mod families;
pub mod io;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod square;
pub mod symbols;

pub use contour::{dunford_riesz, extended_calculus, fractional_power, Contour};
pub use error::{Error, Result};
pub use families::{make_family, FamilyName, FamilySpec};
pub use linalg::{CMatrix, CVector, C64};
pub use operator::{Sector, SectorialOperator};
pub use quadrature::{QuadConfig, RadialGrid};
pub use report::Report;
pub use symbols::ScalarSymbol;
