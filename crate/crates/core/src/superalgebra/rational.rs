use std::fmt;
use std::sync::Arc;

use num::{One, Zero};

use super::poly::SuperPoly;
use super::variable::{VarId, VarTable};
use super::Q;
use crate::error::{Error, Result};

/// Unreduced quotient of a polynomial by a nonzero body polynomial.
///
/// The denominator only involves even, form-degree-0 generators, so it is
/// central. Equality is decided by cross-multiplication.
#[derive(Clone, Debug)]
pub struct RationalFn {
    num: SuperPoly,
    den: SuperPoly,
}

impl PartialEq for RationalFn {
    fn eq(&self, other: &Self) -> bool {
        (&self.num * &other.den) == (&other.num * &self.den)
    }
}

impl From<SuperPoly> for RationalFn {
    fn from(p: SuperPoly) -> Self {
        let den = SuperPoly::one(p.table());
        RationalFn { num: p, den }
    }
}

impl RationalFn {
    pub fn new(num: SuperPoly, den: SuperPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if !den.is_body_only() {
            return Err(Error::BadDenominator);
        }
        if !VarTable::same(num.table(), den.table()) {
            return Err(Error::TableMismatch);
        }
        Ok(RationalFn { num, den }.normalized())
    }

    pub fn zero(t: &Arc<VarTable>) -> Self {
        SuperPoly::zero(t).into()
    }

    pub fn one(t: &Arc<VarTable>) -> Self {
        SuperPoly::one(t).into()
    }

    pub fn constant(t: &Arc<VarTable>, c: Q) -> Self {
        SuperPoly::constant(t, c).into()
    }

    pub fn numer(&self) -> &SuperPoly {
        &self.num
    }

    pub fn denom(&self) -> &SuperPoly {
        &self.den
    }

    pub fn table(&self) -> &Arc<VarTable> {
        self.num.table()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn parity(&self) -> Option<u8> {
        self.num.parity()
    }

    pub fn eps(&self) -> u8 {
        self.num.eps()
    }

    /// Constant denominators are folded into the numerator.
    fn normalized(self) -> Self {
        if self.num.is_zero() {
            return RationalFn {
                den: SuperPoly::one(self.num.table()),
                num: self.num,
            };
        }
        if let Some(c) = self.den.as_constant() {
            if !c.is_one() {
                let inv = Q::one() / c;
                return RationalFn {
                    num: self.num.scale(&inv),
                    den: SuperPoly::one(self.num.table()),
                };
            }
        }
        self
    }

    /// Cancels the denominator when it divides the numerator exactly.
    pub fn simplified(&self) -> Self {
        if self.den.is_constant() {
            return self.clone();
        }
        match self.num.div_exact(&self.den) {
            Some(p) => p.into(),
            None => self.clone(),
        }
    }

    /// Polynomial value, if the denominator divides the numerator.
    pub fn to_poly(&self) -> Option<SuperPoly> {
        if self.num.is_zero() {
            return Some(self.num.clone());
        }
        self.num.div_exact(&self.den)
    }

    pub fn add(&self, other: &RationalFn) -> RationalFn {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            return RationalFn {
                num: &self.num + &other.num,
                den: self.den.clone(),
            }
            .normalized();
        }
        if self.den.degree() < other.den.degree() {
            if let Some(k) = other.den.div_exact(&self.den) {
                return RationalFn {
                    num: &(&self.num * &k) + &other.num,
                    den: other.den.clone(),
                }
                .normalized();
            }
        } else if other.den.degree() < self.den.degree() {
            if let Some(k) = self.den.div_exact(&other.den) {
                return RationalFn {
                    num: &self.num + &(&other.num * &k),
                    den: self.den.clone(),
                }
                .normalized();
            }
        }
        RationalFn {
            num: &(&self.num * &other.den) + &(&other.num * &self.den),
            den: &self.den * &other.den,
        }
        .normalized()
    }

    pub fn neg(&self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RationalFn) -> RationalFn {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalFn) -> RationalFn {
        if self.is_zero() || other.is_zero() {
            return RationalFn::zero(self.table());
        }
        let den = if self.den.is_constant() {
            other.den.clone()
        } else if other.den.is_constant() {
            self.den.clone()
        } else {
            &self.den * &other.den
        };
        RationalFn {
            num: &self.num * &other.num,
            den,
        }
        .normalized()
    }

    pub fn mul_poly(&self, p: &SuperPoly) -> RationalFn {
        self.mul(&p.clone().into())
    }

    pub fn scale(&self, c: &Q) -> RationalFn {
        RationalFn {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
        .normalized()
    }

    /// Multiplicative inverse. The numerator splits into an invertible body
    /// and a nilpotent remainder, and the geometric series terminates.
    pub fn inv(&self) -> Result<RationalFn> {
        match self.num.parity() {
            Some(0) => {}
            _ => return Err(Error::OddPivot(0)),
        }
        if self.num.form_degree() != Some(0) {
            return Err(Error::OddPivot(0));
        }
        let body = self.num.body();
        if body.is_zero() {
            return Err(Error::NotInvertible);
        }
        let soul = &self.num - &body;
        if soul.is_zero() {
            return RationalFn::new(self.den.clone(), body);
        }
        let mut powers = vec![SuperPoly::one(self.table())];
        loop {
            let next = powers.last().unwrap() * &soul;
            if next.is_zero() {
                break;
            }
            powers.push(next);
        }
        let k = powers.len() - 1;
        let mut acc = SuperPoly::zero(self.table());
        for (i, s) in powers.iter().enumerate() {
            let term = s * &body.pow((k - i) as u32);
            if i % 2 == 0 {
                acc = &acc + &term;
            } else {
                acc = &acc - &term;
            }
        }
        RationalFn::new(&self.den * &acc, body.pow(k as u32 + 1))
    }

    pub fn div(&self, other: &RationalFn) -> Result<RationalFn> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn d_left(&self, v: VarId) -> RationalFn {
        let dn = self.num.d_left(v);
        let dd = self.den.d_left(v);
        if dd.is_zero() {
            return RationalFn {
                num: dn,
                den: self.den.clone(),
            }
            .normalized();
        }
        RationalFn {
            num: &(&dn * &self.den) - &(&dd * &self.num),
            den: &self.den * &self.den,
        }
        .normalized()
    }

    pub fn d_right(&self, v: VarId) -> RationalFn {
        let dn = self.num.d_right(v);
        let dd = self.den.d_right(v);
        if dd.is_zero() {
            return RationalFn {
                num: dn,
                den: self.den.clone(),
            }
            .normalized();
        }
        RationalFn {
            num: &(&dn * &self.den) - &(&self.num * &dd),
            den: &self.den * &self.den,
        }
        .normalized()
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        !self.d_left(v).is_zero()
    }

    /// Applies a graded homomorphism to numerator and denominator.
    pub fn compose(&self, target: &Arc<VarTable>, images: &[SuperPoly]) -> Result<RationalFn> {
        RationalFn::new(
            self.num.compose(target, images)?,
            self.den.compose(target, images)?,
        )
    }

    pub fn substitute(&self, assignment: &[(VarId, SuperPoly)]) -> Result<RationalFn> {
        RationalFn::new(
            self.num.substitute(assignment)?,
            self.den.substitute(assignment)?,
        )
    }

    /// Even-body value at a point.
    pub fn eval_body(&self, values: &[(VarId, Q)]) -> Result<Q> {
        let n = self.num.eval_body(values).ok_or(Error::DivisionByZero)?;
        let d = self.den.eval_body(values).ok_or(Error::DivisionByZero)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(n / d)
    }

    /// Even body with some generators fixed; stays a rational function.
    pub fn body_partial(&self, values: &[(VarId, Q)]) -> Result<RationalFn> {
        RationalFn::new(self.num.body_partial(values), self.den.body_partial(values))
    }

    /// Power series of the quotient around the origin up to degree `d`.
    /// Requires a denominator with nonzero constant term.
    pub fn series(&self, d: u32) -> Result<SuperPoly> {
        let c0 = self.den.constant_term();
        if c0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let t = self.table();
        let one = SuperPoly::one(t).with_truncation(Some(d));
        let unit = self.den.scale(&(Q::one() / &c0)).with_truncation(Some(d));
        let x = &one - &unit;
        let mut inv = one.clone();
        let mut pw = one;
        for _ in 0..d {
            pw = &pw * &x;
            if pw.is_zero() {
                break;
            }
            inv = &inv + &pw;
        }
        let num = self.num.clone().with_truncation(Some(d));
        Ok((&num * &inv).scale(&(Q::one() / c0)).with_truncation(None))
    }

    pub fn render(&self) -> String {
        if self.den.is_constant() {
            return self.num.render();
        }
        format!("({})/({})", self.num.render(), self.den.render())
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
