use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};

use super::monomial::Monomial;
use super::variable::{VarId, VarTable};
use super::{fmt_q, Q};
use crate::error::{Error, Result};

/// Sparse supercommutative polynomial with exact rational coefficients.
#[derive(Clone, Debug)]
pub struct SuperPoly {
    table: Arc<VarTable>,
    terms: BTreeMap<Monomial, Q>,
    trunc: Option<u32>,
}

impl PartialEq for SuperPoly {
    fn eq(&self, other: &Self) -> bool {
        VarTable::same(&self.table, &other.table) && self.terms == other.terms
    }
}

impl Eq for SuperPoly {}

impl SuperPoly {
    pub fn zero(table: &Arc<VarTable>) -> Self {
        SuperPoly {
            table: table.clone(),
            terms: BTreeMap::new(),
            trunc: None,
        }
    }

    pub fn constant(table: &Arc<VarTable>, c: Q) -> Self {
        Self::term(table, Monomial::one(), c)
    }

    pub fn one(table: &Arc<VarTable>) -> Self {
        Self::constant(table, Q::one())
    }

    pub fn var(table: &Arc<VarTable>, v: VarId) -> Self {
        Self::term(table, Monomial::var(v), Q::one())
    }

    pub fn var_named(table: &Arc<VarTable>, name: &str) -> Self {
        Self::var(table, table.id(name))
    }

    pub fn term(table: &Arc<VarTable>, m: Monomial, c: Q) -> Self {
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(
        table: &Arc<VarTable>,
        terms: impl IntoIterator<Item = (Monomial, Q)>,
    ) -> Self {
        let mut p = Self::zero(table);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn truncation(&self) -> Option<u32> {
        self.trunc
    }

    /// Sets the truncation degree and drops terms above it.
    pub fn with_truncation(mut self, d: Option<u32>) -> Self {
        self.trunc = d;
        if let Some(d) = d {
            self.terms.retain(|m, _| m.degree() <= d);
        }
        self
    }

    pub fn truncate(&self, d: u32) -> Self {
        let mut p = self.clone();
        p.terms.retain(|m, _| m.degree() <= d);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn constant_term(&self) -> Q {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn as_constant(&self) -> Option<Q> {
        self.is_constant().then(|| self.constant_term())
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        if let Some(d) = self.trunc {
            if m.degree() > d {
                return;
            }
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Parity when all terms agree; `Some(0)` for zero, `None` for mixed sums.
    pub fn parity(&self) -> Option<u8> {
        let mut it = self.terms.keys().map(|m| m.parity(&self.table));
        let first = it.next().unwrap_or(0);
        it.all(|p| p == first).then_some(first)
    }

    pub fn form_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|m| m.form_degree(&self.table));
        let first = it.next().unwrap_or(0);
        it.all(|p| p == first).then_some(first)
    }

    /// Parity, treating mixed sums as even for sign bookkeeping.
    pub fn eps(&self) -> u8 {
        self.parity().unwrap_or(0)
    }

    fn check(&self, other: &SuperPoly) -> Result<()> {
        if VarTable::same(&self.table, &other.table) {
            Ok(())
        } else {
            Err(Error::TableMismatch)
        }
    }

    fn joint_trunc(&self, other: &SuperPoly) -> Option<u32> {
        match (self.trunc, other.trunc) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn try_add(&self, other: &SuperPoly) -> Result<SuperPoly> {
        self.check(other)?;
        let mut out = self.clone();
        out.trunc = self.joint_trunc(other);
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out.with_truncation(self.joint_trunc(other)))
    }

    pub fn try_mul(&self, other: &SuperPoly) -> Result<SuperPoly> {
        self.check(other)?;
        let trunc = self.joint_trunc(other);
        let mut acc: BTreeMap<Monomial, Q> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(d) = trunc {
                    if ma.degree() + mb.degree() > d {
                        continue;
                    }
                }
                if let Some((m, neg)) = ma.mul(mb, &self.table) {
                    let c = ca * cb;
                    let e = acc.entry(m).or_insert_with(Q::zero);
                    if neg {
                        *e -= c;
                    } else {
                        *e += c;
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(SuperPoly {
            table: self.table.clone(),
            terms: acc,
            trunc,
        })
    }

    pub fn scale(&self, c: &Q) -> SuperPoly {
        if c.is_zero() {
            return SuperPoly {
                terms: BTreeMap::new(),
                ..self.clone()
            };
        }
        SuperPoly {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn pow(&self, e: u32) -> SuperPoly {
        let mut out = SuperPoly::one(&self.table).with_truncation(self.trunc);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Left derivative: the generator is moved to the far left, then removed.
    pub fn d_left(&self, v: VarId) -> SuperPoly {
        self.derive(v, true)
    }

    /// Right derivative: the generator is moved to the far right, then removed.
    pub fn d_right(&self, v: VarId) -> SuperPoly {
        self.derive(v, false)
    }

    fn derive(&self, v: VarId, left: bool) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.table).with_truncation(self.trunc);
        for (m, c) in &self.terms {
            if let Some((rest, e, neg)) = m.extract(v, left, &self.table) {
                let mut k = c * Q::from_integer(e.into());
                if neg {
                    k = -k;
                }
                out.add_term(rest, k);
            }
        }
        out
    }

    /// Variables occurring in some term.
    pub fn support(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .terms
            .keys()
            .flat_map(|m| m.vars().collect::<Vec<_>>())
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    /// Graded algebra homomorphism into `target`, sending generator `v` to
    /// `images[v]`. Each image must match the generator's parity and form degree.
    pub fn compose(&self, target: &Arc<VarTable>, images: &[SuperPoly]) -> Result<SuperPoly> {
        for (v, img) in images.iter().enumerate() {
            if img.is_zero() {
                continue;
            }
            let var = self.table.var(v);
            if img.parity() != Some(var.parity) || img.form_degree() != Some(var.form_degree) {
                return Err(Error::GradingMismatch(var.name.clone()));
            }
        }
        let trunc = images.iter().filter_map(|p| p.trunc).min().or(self.trunc);
        let mut out = SuperPoly::zero(target).with_truncation(trunc);
        let mut cache: BTreeMap<(VarId, u32), SuperPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut prod = SuperPoly::constant(target, c.clone()).with_truncation(trunc);
            for &(v, e) in m.factors() {
                let pw = cache
                    .entry((v, e))
                    .or_insert_with(|| images[v].pow(e))
                    .clone();
                prod = prod.try_mul(&pw)?;
                if prod.is_zero() {
                    break;
                }
            }
            for (mm, cc) in prod.terms {
                out.add_term(mm, cc);
            }
        }
        Ok(out)
    }

    /// Replaces the listed generators, leaving all others fixed.
    pub fn substitute(&self, assignment: &[(VarId, SuperPoly)]) -> Result<SuperPoly> {
        let mut images: Vec<SuperPoly> = (0..self.table.len())
            .map(|v| SuperPoly::var(&self.table, v))
            .collect();
        for (v, p) in assignment {
            self.check(p)?;
            images[*v] = p.clone();
        }
        self.compose(&self.table.clone(), &images)
    }

    /// Sets every non-body generator to zero and assigns the given rational
    /// values to body generators (missing values leave the generator symbolic).
    pub fn body_partial(&self, values: &[(VarId, Q)]) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.table).with_truncation(self.trunc);
        'terms: for (m, c) in &self.terms {
            let mut k = c.clone();
            let mut keep = Vec::new();
            for &(v, e) in m.factors() {
                if !self.table.var(v).is_body() {
                    continue 'terms;
                }
                match values.iter().find(|(w, _)| *w == v) {
                    Some((_, x)) => k *= num::pow(x.clone(), e as usize),
                    None => keep.push((v, e)),
                }
            }
            out.add_term(Monomial::from_sorted(keep), k);
        }
        out
    }

    /// Even-body value at a point; every body generator in the support must
    /// be assigned.
    pub fn eval_body(&self, values: &[(VarId, Q)]) -> Option<Q> {
        self.body_partial(values).as_constant()
    }

    /// Body part: terms built only from even, form-degree-0 generators.
    pub fn body(&self) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.table).with_truncation(self.trunc);
        for (m, c) in &self.terms {
            if m.vars().all(|v| self.table.var(v).is_body()) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Only body generators appear.
    pub fn is_body_only(&self) -> bool {
        self.support().iter().all(|&v| self.table.var(v).is_body())
    }

    /// Keeps terms of the given degree in the listed variables.
    pub fn homogeneous_part(&self, vars: &[VarId], deg: u32) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.table).with_truncation(self.trunc);
        for (m, c) in &self.terms {
            if m.degree_in(vars) == deg {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Exact quotient by a polynomial in body generators, if it divides.
    pub fn div_exact(&self, d: &SuperPoly) -> Option<SuperPoly> {
        if d.is_zero() || !d.is_body_only() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&(Q::one() / c)));
        }
        let (lm, lc) = d.leading()?;
        let mut rem = self.clone();
        let mut quo = SuperPoly::zero(&self.table);
        while let Some((m, c)) = rem.leading() {
            let t = m.div_commuting(&lm)?;
            let k = c / &lc;
            let step = SuperPoly::term(&self.table, t, k);
            rem = &rem - &(&step * d);
            quo = &quo + &step;
        }
        Some(quo)
    }

    /// Largest term in lexicographic monomial order.
    fn leading(&self) -> Option<(Monomial, Q)> {
        self.terms
            .iter()
            .max_by(|a, b| a.0.lex_cmp(b.0))
            .map(|(m, c)| (m.clone(), c.clone()))
    }

    /// Deterministic text form; terms in increasing degree.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut ordered: Vec<(&Monomial, &Q)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.cmp(b.0)));
        let mut s = String::new();
        for (i, (m, c)) in ordered.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            let body = if m.is_one() {
                fmt_q(&a)
            } else if a.is_one() {
                m.render(&self.table)
            } else {
                format!("{}*{}", fmt_q(&a), m.render(&self.table))
            };
            match (i, neg) {
                (0, false) => s.push_str(&body),
                (0, true) => {
                    s.push('-');
                    s.push_str(&body)
                }
                (_, false) => {
                    s.push_str(" + ");
                    s.push_str(&body)
                }
                (_, true) => {
                    s.push_str(" - ");
                    s.push_str(&body)
                }
            }
        }
        s
    }
}

impl fmt::Display for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// Operator forms panic on a table mismatch; use the `try_` methods when
// operands may come from different tables.
impl std::ops::Add for &SuperPoly {
    type Output = SuperPoly;
    fn add(self, rhs: &SuperPoly) -> SuperPoly {
        self.try_add(rhs).expect("SuperPoly table mismatch")
    }
}

impl std::ops::Sub for &SuperPoly {
    type Output = SuperPoly;
    fn sub(self, rhs: &SuperPoly) -> SuperPoly {
        self.try_add(&-rhs).expect("SuperPoly table mismatch")
    }
}

impl std::ops::Mul for &SuperPoly {
    type Output = SuperPoly;
    fn mul(self, rhs: &SuperPoly) -> SuperPoly {
        self.try_mul(rhs).expect("SuperPoly table mismatch")
    }
}

impl std::ops::Neg for &SuperPoly {
    type Output = SuperPoly;
    fn neg(self) -> SuperPoly {
        self.scale(&-Q::one())
    }
}

impl std::ops::Add for SuperPoly {
    type Output = SuperPoly;
    fn add(self, rhs: SuperPoly) -> SuperPoly {
        &self + &rhs
    }
}

impl std::ops::Sub for SuperPoly {
    type Output = SuperPoly;
    fn sub(self, rhs: SuperPoly) -> SuperPoly {
        &self - &rhs
    }
}

impl std::ops::Mul for SuperPoly {
    type Output = SuperPoly;
    fn mul(self, rhs: SuperPoly) -> SuperPoly {
        &self * &rhs
    }
}

impl std::ops::Neg for SuperPoly {
    type Output = SuperPoly;
    fn neg(self) -> SuperPoly {
        -&self
    }
}
