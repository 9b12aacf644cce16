//! Graded polynomial and rational-function arithmetic.
//!
//! Generators carry a Grassmann parity and a form degree. Two generators
//! `a`, `b` commute up to the sign `(-1)^(eps_a eps_b + p_a p_b)`; a generator
//! whose self-sign is odd squares to zero. Monomials store generators in the
//! table order, so every polynomial has a unique normal form.

mod matrix;
mod monomial;
mod parse;
mod poly;
mod rational;
mod variable;

pub use matrix::{
    adjugate, det_poly, det_q, invert_matrix, mat_mul, mat_mul_poly, nullspace_q, rank_q, solve_q,
    Matrix,
};
pub use monomial::Monomial;
pub use parse::parse_expression;
pub use poly::SuperPoly;
pub use rational::RationalFn;
pub use variable::{GradedVariable, Role, VarId, VarTable};

/// Exact rational scalar.
pub type Q = num::BigRational;

/// Rational from a pair of small integers.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Rational from an integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Canonical text of a rational: `3`, `-3/2`.
pub fn fmt_q(x: &Q) -> String {
    if x.denom() == &num::BigInt::from(1) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}
