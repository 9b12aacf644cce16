//! Exact computer algebra for super Poisson pencils on polynomial charts.
//!
//! The crate covers graded polynomial arithmetic, Poisson pencils, triplectic
//! charts and their bi-Darboux normal form, the bi-Poincaré homotopy operator,
//! para-hypercomplex structures with the Obata connection, and the
//! `SL(2) -> SO+(2,1)` double cover.

pub mod chartfile;
pub mod error;
pub mod homotopy;
pub mod liegroup;
pub mod parahyper;
pub mod poisson;
pub mod report;
pub mod superalgebra;
pub mod triplectic;

pub use error::{Error, Result};
pub use report::{CheckReport, Violation};
pub use superalgebra::{GradedVariable, Monomial, RationalFn, Role, SuperPoly, VarId, VarTable, Q};
