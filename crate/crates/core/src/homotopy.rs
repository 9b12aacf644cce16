//! The tri-graded algebra of forms in `x^i_1, x^i_2, x^i_3` with the
//! differentials `d^a`, contractions `i_a`, the `gl(2)` generators and the
//! constructive bi-Poincaré homotopy `eta = i(Lambda^-1 omega)`.
//!
//! Forms are [`SuperPoly`] values over the algebra's variable table. The
//! index `a` of `d^a`, `i_a`, `L^a_b` runs over `1, 2`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::superalgebra::{
    det_q, fmt_q, nullspace_q, q, qi, solve_q, GradedVariable, Matrix, Monomial, Role,
};
use crate::superalgebra::{SuperPoly, VarId, VarTable, Q};

/// Default truncation degree of the algebra.
pub const DEFAULT_DEGREE: u32 = 8;

/// Variables `x^i_alpha` with `eps(x^i_alpha) = eps_i + [alpha = 3]`.
#[derive(Clone, Debug)]
pub struct TriGradedAlgebra {
    table: Arc<VarTable>,
    x: [Vec<VarId>; 3],
    degree: u32,
}

/// Matrix of `Lambda` on the monomial basis of a `(n12, n3)` block.
#[derive(Clone, Debug)]
pub struct GradedBlockOperator {
    pub n12: u32,
    pub n3: u32,
    pub basis: Vec<Monomial>,
    pub matrix: Matrix<Q>,
    pub determinant: Q,
}

/// Highest-weight vector `v` of `sl(2)` inside a block, with `L^2_1 v = 0`.
#[derive(Clone, Debug)]
pub struct HighestWeight {
    pub vector: SuperPoly,
    pub n12: u32,
    pub n3: u32,
    pub spin: Q,
    pub eigenvalue: Q,
    pub bound: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockCertificate {
    pub n12: u32,
    pub n3: u32,
    pub dimension: usize,
    pub determinant: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Homotopy {
    pub eta: SuperPoly,
    pub blocks: Vec<BlockCertificate>,
}

fn eps_up(a: usize, b: usize) -> i64 {
    match (a, b) {
        (1, 2) => 1,
        (2, 1) => -1,
        _ => 0,
    }
}

fn eps_down(a: usize, b: usize) -> i64 {
    -eps_up(a, b)
}

impl TriGradedAlgebra {
    /// Fresh table with generators named `x{alpha}_{i}`.
    pub fn new(parities: &[u8]) -> Result<Self> {
        let n = parities.len();
        let mut vars = Vec::new();
        for alpha in 1..=3u32 {
            for (i, &e) in parities.iter().enumerate() {
                let parity = (e + u8::from(alpha == 3)) % 2;
                let role = if alpha == 3 {
                    Role::FormGenerator
                } else {
                    Role::Auxiliary
                };
                vars.push(GradedVariable::new(
                    &format!("x{alpha}_{}", i + 1),
                    parity,
                    0,
                    role,
                    i as u32 + 1,
                ));
            }
        }
        let table = VarTable::new(vars)?;
        let x = [
            (0..n).collect(),
            (n..2 * n).collect(),
            (2 * n..3 * n).collect(),
        ];
        Ok(TriGradedAlgebra {
            table,
            x,
            degree: DEFAULT_DEGREE,
        })
    }

    /// Algebra on existing variables of a table.
    pub fn from_vars(
        table: &Arc<VarTable>,
        x1: Vec<VarId>,
        x2: Vec<VarId>,
        x3: Vec<VarId>,
    ) -> Result<Self> {
        let n = x1.len();
        if x2.len() != n || x3.len() != n {
            return Err(Error::GradingMismatch("unequal variable counts".into()));
        }
        for i in 0..n {
            let e = table.parity(x1[i]);
            if table.parity(x2[i]) != e || table.parity(x3[i]) != (e + 1) % 2 {
                return Err(Error::GradingMismatch(table.var(x3[i]).name.clone()));
            }
        }
        Ok(TriGradedAlgebra {
            table: table.clone(),
            x: [x1, x2, x3],
            degree: DEFAULT_DEGREE,
        })
    }

    pub fn with_degree(mut self, degree: u32) -> Self {
        self.degree = degree;
        self
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn n(&self) -> usize {
        self.x[0].len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Generator `x^i_alpha` with 1-based `alpha` and 0-based `i`.
    pub fn var(&self, alpha: usize, i: usize) -> SuperPoly {
        SuperPoly::var(&self.table, self.x[alpha - 1][i])
    }

    pub fn vars(&self, alpha: usize) -> &[VarId] {
        &self.x[alpha - 1]
    }

    /// `(deg_1, deg_2, deg_3)` of a monomial.
    pub fn degrees(&self, m: &Monomial) -> [u32; 3] {
        [
            m.degree_in(&self.x[0]),
            m.degree_in(&self.x[1]),
            m.degree_in(&self.x[2]),
        ]
    }

    /// Tri-degree of a homogeneous nonzero form.
    pub fn gradings(&self, w: &SuperPoly) -> Option<[u32; 3]> {
        let mut it = w.terms().map(|(m, _)| self.degrees(m));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    fn sum_x_times_derivative(&self, w: &SuperPoly, mult: usize, diff: usize) -> SuperPoly {
        let mut acc = SuperPoly::zero(&self.table);
        for i in 0..self.n() {
            let dw = w.d_left(self.x[diff][i]);
            if !dw.is_zero() {
                acc = &acc + &(&SuperPoly::var(&self.table, self.x[mult][i]) * &dw);
            }
        }
        acc
    }

    /// `d^a = x^i_3 d_l/dx^i_a`.
    pub fn d(&self, a: usize, w: &SuperPoly) -> SuperPoly {
        self.sum_x_times_derivative(w, 2, a - 1)
    }

    /// `i_a = x^i_a d_l/dx^i_3`.
    pub fn i(&self, a: usize, w: &SuperPoly) -> SuperPoly {
        self.sum_x_times_derivative(w, a - 1, 2)
    }

    /// Number operator `N_alpha`.
    pub fn number(&self, alpha: usize, w: &SuperPoly) -> SuperPoly {
        SuperPoly::from_terms(
            &self.table,
            w.terms()
                .map(|(m, c)| (m.clone(), c * qi(m.degree_in(&self.x[alpha - 1]) as i64))),
        )
    }

    /// `L^a_b = [i_b, d^a] = x^i_b d_l/dx^i_a + delta^a_b N_3`.
    pub fn script_l(&self, a: usize, b: usize, w: &SuperPoly) -> SuperPoly {
        let base = self.sum_x_times_derivative(w, b - 1, a - 1);
        if a == b {
            &base + &self.number(3, w)
        } else {
            base
        }
    }

    /// Trace `L = N_1 + N_2 + 2 N_3`.
    pub fn trace_l(&self, w: &SuperPoly) -> SuperPoly {
        SuperPoly::from_terms(
            &self.table,
            w.terms().map(|(m, c)| {
                let [d1, d2, d3] = self.degrees(m);
                (m.clone(), c * qi((d1 + d2 + 2 * d3) as i64))
            }),
        )
    }

    /// `d = d^1 d^2`.
    pub fn d_op(&self, w: &SuperPoly) -> SuperPoly {
        self.d(1, &self.d(2, w))
    }

    /// `i = i_2 i_1`.
    pub fn i_op(&self, w: &SuperPoly) -> SuperPoly {
        self.i(2, &self.i(1, w))
    }

    /// `L = [d, i]`.
    pub fn l_op(&self, w: &SuperPoly) -> SuperPoly {
        &self.d_op(&self.i_op(w)) - &self.i_op(&self.d_op(w))
    }

    /// `R_b = eps_ba L^a_c i_d eps^dc`.
    pub fn r_op(&self, b: usize, w: &SuperPoly) -> SuperPoly {
        let mut acc = SuperPoly::zero(&self.table);
        for a in 1..=2 {
            for c in 1..=2 {
                for d in 1..=2 {
                    let s = eps_down(b, a) * eps_up(d, c);
                    if s != 0 {
                        acc = &acc + &self.script_l(a, c, &self.i(d, w)).scale(&qi(s));
                    }
                }
            }
        }
        acc
    }

    /// `Lambda = 1/2 {L^1_1, L^2_2} - 1/2 {L^2_1, L^1_2} - L/2`.
    pub fn lambda(&self, w: &SuperPoly) -> SuperPoly {
        let l = |a, b, v: &SuperPoly| self.script_l(a, b, v);
        let diag = &l(1, 1, &l(2, 2, w)) + &l(2, 2, &l(1, 1, w));
        let off = &l(2, 1, &l(1, 2, w)) + &l(1, 2, &l(2, 1, w));
        let half = q(1, 2);
        &(&diag - &off).scale(&half) - &self.trace_l(w).scale(&half)
    }

    /// `Lambda' = Lambda` with `L -> L - 2`, i.e. `Lambda - L + 2`.
    pub fn lambda_prime(&self, w: &SuperPoly) -> SuperPoly {
        &(&self.lambda(w) - &self.trace_l(w)) + &w.scale(&qi(2))
    }

    fn monomials(&self, vars: &[VarId], deg: u32) -> Vec<Vec<(VarId, u32)>> {
        fn go(
            t: &VarTable,
            vars: &[VarId],
            deg: u32,
            cur: &mut Vec<(VarId, u32)>,
            out: &mut Vec<Vec<(VarId, u32)>>,
        ) {
            let Some((&v, rest)) = vars.split_first() else {
                if deg == 0 {
                    out.push(cur.clone());
                }
                return;
            };
            let max = if t.is_nilpotent(v) { deg.min(1) } else { deg };
            for e in 0..=max {
                if e > 0 {
                    cur.push((v, e));
                }
                go(t, rest, deg - e, cur, out);
                if e > 0 {
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(&self.table, vars, deg, &mut Vec::new(), &mut out);
        out
    }

    /// Monomial basis of `A_{n1,n2,n3}`.
    pub fn basis3(&self, n1: u32, n2: u32, n3: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        for a in self.monomials(&self.x[0], n1) {
            for b in self.monomials(&self.x[1], n2) {
                for c in self.monomials(&self.x[2], n3) {
                    let mut f: Vec<(VarId, u32)> = a.iter().chain(&b).chain(&c).cloned().collect();
                    f.sort();
                    out.push(Monomial::from_sorted(f));
                }
            }
        }
        out.sort();
        out
    }

    /// Monomial basis of `A_{n12,n3} = sum_{n1+n2=n12} A_{n1,n2,n3}`.
    pub fn basis(&self, n12: u32, n3: u32) -> Vec<Monomial> {
        let mut out: Vec<Monomial> = (0..=n12)
            .flat_map(|n1| self.basis3(n1, n12 - n1, n3))
            .collect();
        out.sort();
        out
    }

    /// Matrix of a linear operator from `source` into the span of `target`.
    pub fn operator_matrix(
        &self,
        source: &[Monomial],
        target: &[Monomial],
        op: impl Fn(&SuperPoly) -> SuperPoly,
    ) -> Matrix<Q> {
        let index: BTreeMap<&Monomial, usize> =
            target.iter().enumerate().map(|(k, m)| (m, k)).collect();
        let mut mat = vec![vec![Q::zero(); source.len()]; target.len()];
        for (j, m) in source.iter().enumerate() {
            let image = op(&SuperPoly::term(&self.table, m.clone(), Q::one()));
            for (mm, c) in image.terms() {
                let row = *index.get(mm).expect("operator leaves the target span");
                mat[row][j] = c.clone();
            }
        }
        mat
    }

    /// `Lambda` on the full `(n12, n3)` block with its determinant.
    pub fn lambda_block(&self, n12: u32, n3: u32) -> Result<GradedBlockOperator> {
        if n3 < 2 {
            return Err(Error::BlockNotCovered { n12, n3 });
        }
        Ok(self.lambda_block_unchecked(n12, n3))
    }

    /// `Lambda` on any block; determinants may vanish when `n3 < 2`.
    pub fn lambda_block_unchecked(&self, n12: u32, n3: u32) -> GradedBlockOperator {
        let basis = self.basis(n12, n3);
        let matrix = self.operator_matrix(&basis, &basis, |w| self.lambda(w));
        let determinant = det_q(&matrix);
        GradedBlockOperator {
            n12,
            n3,
            basis,
            matrix,
            determinant,
        }
    }

    /// Highest-weight vectors in `A_{n1,n2,n3}` and their `Lambda` data.
    pub fn highest_weights(&self, n1: u32, n2: u32, n3: u32) -> Vec<HighestWeight> {
        let src = self.basis3(n1, n2, n3);
        if src.is_empty() {
            return Vec::new();
        }
        let raised = if n2 == 0 {
            Vec::new()
        } else {
            self.basis3(n1 + 1, n2 - 1, n3)
        };
        let mat = self.operator_matrix(&src, &raised, |w| self.script_l(2, 1, w));
        let kernel = if raised.is_empty() {
            (0..src.len())
                .map(|k| {
                    (0..src.len())
                        .map(|j| if j == k { Q::one() } else { Q::zero() })
                        .collect()
                })
                .collect()
        } else {
            nullspace_q(&mat, src.len())
        };
        let (n12, ell) = (n1 + n2, n1 + n2 + 2 * n3);
        let spin = q(n1 as i64 - n2 as i64, 2);
        let half_ell = q(ell as i64, 2);
        let eigenvalue = &half_ell * (&half_ell - Q::one()) - &spin * (&spin + Q::one());
        let bound = qi(((n12 + n3) as i64) * (n3 as i64 - 1));
        kernel
            .into_iter()
            .map(|coeffs| {
                let vector = SuperPoly::from_terms(&self.table, src.iter().cloned().zip(coeffs));
                HighestWeight {
                    vector,
                    n12,
                    n3,
                    spin: spin.clone(),
                    eigenvalue: eigenvalue.clone(),
                    bound: bound.clone(),
                }
            })
            .collect()
    }

    /// Residuals of the operator identities of the algebra on `w`; each
    /// entry is zero when the identity holds.
    pub fn relation_residuals(&self, w: &SuperPoly) -> Vec<(String, SuperPoly)> {
        let mut out = Vec::new();
        let f = |lam: &dyn Fn(&SuperPoly) -> SuperPoly, v: &SuperPoly| {
            let l1 = lam(v);
            &(&lam(&l1) - &l1.scale(&qi(3))) + &v.scale(&qi(2))
        };
        for a in 1..=2 {
            out.push((format!("d{a} d{a}"), self.d(a, &self.d(a, w))));
            out.push((format!("i{a} i{a}"), self.i(a, &self.i(a, w))));
        }
        out.push((
            "[d1,d2]".into(),
            &self.d(1, &self.d(2, w)) + &self.d(2, &self.d(1, w)),
        ));
        out.push((
            "[i1,i2]".into(),
            &self.i(1, &self.i(2, w)) + &self.i(2, &self.i(1, w)),
        ));
        for a in 1..=2 {
            for b in 1..=2 {
                let anti = &self.i(b, &self.d(a, w)) + &self.d(a, &self.i(b, w));
                out.push((
                    format!("L{a}{b} = [i{b},d{a}]"),
                    &self.script_l(a, b, w) - &anti,
                ));
                for c in 1..=2 {
                    for d in 1..=2 {
                        let lhs = &self.script_l(a, b, &self.script_l(c, d, w))
                            - &self.script_l(c, d, &self.script_l(a, b, w));
                        let mut rhs = SuperPoly::zero(&self.table);
                        if a == d {
                            rhs = &rhs + &self.script_l(c, b, w);
                        }
                        if c == b {
                            rhs = &rhs - &self.script_l(a, d, w);
                        }
                        out.push((format!("[L{a}{b},L{c}{d}]"), &lhs - &rhs));
                    }
                }
                let lam =
                    &self.script_l(a, b, &self.lambda(w)) - &self.lambda(&self.script_l(a, b, w));
                out.push((format!("[L{a}{b},Lambda]"), lam));
            }
        }
        let dl = &self.trace_l(&self.d_op(w)) - &self.d_op(&self.trace_l(w));
        out.push(("[L,d] = 2d".into(), &dl - &self.d_op(w).scale(&qi(2))));
        let il = &self.i_op(&self.trace_l(w)) - &self.trace_l(&self.i_op(w));
        out.push(("[i,L] = 2i".into(), &il - &self.i_op(w).scale(&qi(2))));
        let rd = &self.r_op(1, &self.d(1, w)) + &self.r_op(2, &self.d(2, w));
        out.push((
            "L = Lambda + R_b d^b".into(),
            &self.l_op(w) - &(&self.lambda(w) + &rd),
        ));
        let ll = &self.l_op(&self.lambda(w)) - &self.lambda(&self.l_op(w));
        out.push(("[L,Lambda]".into(), ll));
        let lam = |v: &SuperPoly| self.lambda(v);
        let lamp = |v: &SuperPoly| self.lambda_prime(v);
        out.push((
            "d f(Lambda) = f(Lambda') d".into(),
            &self.d_op(&f(&lam, w)) - &f(&lamp, &self.d_op(w)),
        ));
        out.push((
            "f(Lambda) i = i f(Lambda')".into(),
            &f(&lam, &self.i_op(w)) - &self.i_op(&f(&lamp, w)),
        ));
        out
    }

    /// `eta = i(Lambda^-1 omega)` with `d^1 d^2 eta = omega`.
    ///
    /// `Lambda` is inverted on the smallest `Lambda`-invariant span of
    /// monomials containing each block of `omega`; the certificate records
    /// that span's dimension and determinant.
    pub fn homotopy(&self, omega: &SuperPoly) -> Result<Homotopy> {
        if !VarTable::same(omega.table(), &self.table) {
            return Err(Error::TableMismatch);
        }
        for a in 1..=2 {
            let r = self.d(a, omega);
            if !r.is_zero() {
                return Err(Error::NotClosed(format!("d{a} omega = {r}")));
            }
        }
        let mut blocks: BTreeMap<(u32, u32), Vec<(Monomial, Q)>> = BTreeMap::new();
        for (m, c) in omega.terms() {
            let [d1, d2, d3] = self.degrees(m);
            if d3 < 2 {
                return Err(Error::DegreeTooLow(d3));
            }
            if m.degree() > self.degree {
                return Err(Error::BeyondTruncation(m.degree(), self.degree));
            }
            blocks
                .entry((d1 + d2, d3))
                .or_default()
                .push((m.clone(), c.clone()));
        }
        let mut pre = SuperPoly::zero(&self.table);
        let mut certs = Vec::new();
        for ((n12, n3), terms) in blocks {
            let mut span: BTreeSet<Monomial> = terms.iter().map(|(m, _)| m.clone()).collect();
            let mut queue: Vec<Monomial> = span.iter().cloned().collect();
            while let Some(m) = queue.pop() {
                for (mm, _) in self
                    .lambda(&SuperPoly::term(&self.table, m, Q::one()))
                    .terms()
                {
                    if span.insert(mm.clone()) {
                        queue.push(mm.clone());
                    }
                }
            }
            let basis: Vec<Monomial> = span.into_iter().collect();
            let mat = self.operator_matrix(&basis, &basis, |w| self.lambda(w));
            let determinant = det_q(&mat);
            let rhs_map: BTreeMap<Monomial, Q> = terms.into_iter().collect();
            let rhs: Vec<Q> = basis
                .iter()
                .map(|m| rhs_map.get(m).cloned().unwrap_or_else(Q::zero))
                .collect();
            let sol = solve_q(&mat, &rhs).ok_or(Error::BlockNotCovered { n12, n3 })?;
            pre = &pre + &SuperPoly::from_terms(&self.table, basis.into_iter().zip(sol));
            certs.push(BlockCertificate {
                n12,
                n3,
                dimension: rhs.len(),
                determinant: fmt_q(&determinant),
            });
        }
        let eta = self.i_op(&pre);
        let residual = &self.d_op(&eta) - omega;
        if !residual.is_zero() {
            return Err(Error::NotClosed(format!("d eta - omega = {residual}")));
        }
        Ok(Homotopy { eta, blocks: certs })
    }
}

#[cfg(test)]
mod tests;
