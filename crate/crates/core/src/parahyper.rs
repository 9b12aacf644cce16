//! Parity structures on the base `(p, c)`, Nijenhuis tensors, the Obata
//! connection and its curvature.
//!
//! Tangent vectors are written with components on the left,
//! `X = X^A d/dxi^A`, and an endomorphism `S` is stored through
//! `S(d/dxi^J) = S_J^K d/dxi^K`; composition is then the matrix product in
//! reverse order. `components()` gives the transpose, which acts on
//! component columns. The connection is `nabla_I d/dxi^J = G_IJ^K d/dxi^K`.

use std::sync::Arc;

use num::Zero;

use crate::error::{Error, Result};
use crate::liegroup::{self, Mat2, Mat3};
use crate::report::{CheckReport, Violation};
use crate::superalgebra::{invert_matrix, rank_q, Matrix, RationalFn, Role, VarId, VarTable, Q};

/// Base coordinates `xi^I = (p_1..p_n, c_1..c_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Base {
    pub table: Arc<VarTable>,
    pub p: Vec<VarId>,
    pub c: Vec<VarId>,
}

impl Base {
    pub fn new(table: Arc<VarTable>, p: Vec<VarId>, c: Vec<VarId>) -> Self {
        Base { table, p, c }
    }

    /// Momenta and Casimirs of a table, in index order.
    pub fn from_roles(table: &Arc<VarTable>) -> Self {
        Base::new(
            table.clone(),
            table.ids_with_role(Role::Momentum),
            table.ids_with_role(Role::Casimir),
        )
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn coord(&self, i: usize) -> VarId {
        if i < self.n() {
            self.p[i]
        } else {
            self.c[i - self.n()]
        }
    }

    pub fn parity(&self, i: usize) -> u8 {
        self.table.parity(self.coord(i))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.table.var(self.coord(i)).name
    }

    fn sign(&self, e: u32) -> bool {
        e % 2 == 1
    }

    fn zero(&self) -> RationalFn {
        RationalFn::zero(&self.table)
    }

    fn constant(&self, c: i64) -> RationalFn {
        RationalFn::constant(&self.table, Q::from_integer(c.into()))
    }
}

fn signed(x: RationalFn, neg: bool) -> RationalFn {
    if neg {
        x.neg()
    } else {
        x
    }
}

/// Even endomorphism of the tangent bundle of the base.
#[derive(Clone, Debug, PartialEq)]
pub struct Endomorphism {
    pub base: Base,
    pub matrix: Matrix<RationalFn>,
}

pub type ParityStructure = Endomorphism;

impl Endomorphism {
    pub fn identity(base: &Base) -> Self {
        let d = base.dim();
        let matrix = (0..d)
            .map(|j| (0..d).map(|k| base.constant(i64::from(j == k))).collect())
            .collect();
        Endomorphism {
            base: base.clone(),
            matrix,
        }
    }

    /// Matrix acting on component columns.
    pub fn components(&self) -> Matrix<RationalFn> {
        let d = self.base.dim();
        (0..d)
            .map(|k| (0..d).map(|j| self.matrix[j][k].clone()).collect())
            .collect()
    }

    /// `self` after `first`: `X -> self(first(X))`.
    pub fn after(&self, first: &Endomorphism) -> Endomorphism {
        let d = self.base.dim();
        let matrix = (0..d)
            .map(|j| {
                (0..d)
                    .map(|m| {
                        let mut s = self.base.zero();
                        for k in 0..d {
                            if !first.matrix[j][k].is_zero() && !self.matrix[k][m].is_zero() {
                                s = s.add(&first.matrix[j][k].mul(&self.matrix[k][m]));
                            }
                        }
                        s.simplified()
                    })
                    .collect()
            })
            .collect();
        Endomorphism {
            base: self.base.clone(),
            matrix,
        }
    }

    pub fn scaled(&self, s: i64) -> Endomorphism {
        let q = Q::from_integer(s.into());
        let matrix = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|x| x.scale(&q)).collect())
            .collect();
        Endomorphism {
            base: self.base.clone(),
            matrix,
        }
    }

    pub fn plus(&self, other: &Endomorphism) -> Endomorphism {
        let matrix = self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.add(y).simplified())
                    .collect()
            })
            .collect();
        Endomorphism {
            base: self.base.clone(),
            matrix,
        }
    }

    /// `(Id + s P) / 2` for `s = +-1`.
    pub fn projector(&self, s: i64) -> Endomorphism {
        let half = Q::new(1.into(), 2.into());
        let m = Endomorphism::identity(&self.base).plus(&self.scaled(s));
        let matrix = m
            .matrix
            .iter()
            .map(|r| r.iter().map(|x| x.scale(&half)).collect())
            .collect();
        Endomorphism {
            base: self.base.clone(),
            matrix,
        }
    }

    pub fn is_identity_times(&self, s: i64) -> bool {
        *self == Endomorphism::identity(&self.base).scaled(s)
    }

    pub fn apply(&self, x: &VectorField) -> VectorField {
        let d = self.base.dim();
        let comps = (0..d)
            .map(|m| {
                let mut s = self.base.zero();
                for a in 0..d {
                    if !x.comps[a].is_zero() && !self.matrix[a][m].is_zero() {
                        s = s.add(&x.comps[a].mul(&self.matrix[a][m]));
                    }
                }
                s.simplified()
            })
            .collect();
        VectorField {
            comps,
            parity: x.parity,
        }
    }

    /// `(dim ker(S - 1), dim ker(S + 1))` of the body at a point.
    pub fn eigenspace_dims(&self, point: &[(VarId, Q)]) -> Result<(usize, usize)> {
        let d = self.base.dim();
        let m: Matrix<Q> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|x| x.eval_body(point)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let shifted = |s: i64| -> Matrix<Q> {
            (0..d)
                .map(|j| {
                    (0..d)
                        .map(|k| {
                            if j == k {
                                &m[j][k] - Q::from_integer(s.into())
                            } else {
                                m[j][k].clone()
                            }
                        })
                        .collect()
                })
                .collect()
        };
        Ok((d - rank_q(&shifted(1)), d - rank_q(&shifted(-1))))
    }
}

/// Vector field with left components and a definite parity.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub comps: Vec<RationalFn>,
    pub parity: u8,
}

impl VectorField {
    pub fn coordinate(base: &Base, i: usize) -> Self {
        let comps = (0..base.dim())
            .map(|k| base.constant(i64::from(k == i)))
            .collect();
        VectorField {
            comps,
            parity: base.parity(i),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    fn combine(&self, other: &VectorField, s: i64) -> VectorField {
        let q = Q::from_integer(s.into());
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.add(&b.scale(&q)).simplified())
            .collect();
        VectorField {
            comps,
            parity: self.parity,
        }
    }
}

/// Graded Lie bracket `[X, Y] = XY - (-1)^(eps_X eps_Y) YX`.
pub fn lie_bracket(base: &Base, x: &VectorField, y: &VectorField) -> VectorField {
    let d = base.dim();
    let neg = base.sign(u32::from(x.parity * y.parity));
    let comps = (0..d)
        .map(|b| {
            let mut s = base.zero();
            for a in 0..d {
                let v = base.coord(a);
                if !x.comps[a].is_zero() {
                    let t = y.comps[b].d_left(v);
                    if !t.is_zero() {
                        s = s.add(&x.comps[a].mul(&t));
                    }
                }
                if !y.comps[a].is_zero() {
                    let t = x.comps[b].d_left(v);
                    if !t.is_zero() {
                        s = s.add(&signed(y.comps[a].mul(&t), !neg));
                    }
                }
            }
            s.simplified()
        })
        .collect();
    VectorField {
        comps,
        parity: (x.parity + y.parity) % 2,
    }
}

/// `Sigma = diag(1, -1)` on `(p, c)`.
pub fn build_sigma(base: &Base) -> ParityStructure {
    let d = base.dim();
    let n = base.n();
    let matrix = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    if j != k {
                        base.zero()
                    } else {
                        base.constant(if j < n { 1 } else { -1 })
                    }
                })
                .collect()
        })
        .collect();
    Endomorphism {
        base: base.clone(),
        matrix,
    }
}

/// `P(d/dp_i) = E^i_j d/dc_j`, `P(d/dc_j) = Et^j_i d/dp_i` with `Et = E^-1`.
pub fn build_p(base: &Base, e: &Matrix<RationalFn>) -> Result<ParityStructure> {
    let n = base.n();
    let et = invert_matrix(e).map_err(|_| Error::ESingular)?;
    let mut m = vec![vec![base.zero(); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            m[i][n + j] = e[i][j].clone();
            m[n + j][i] = et[j][i].clone();
        }
    }
    Ok(Endomorphism {
        base: base.clone(),
        matrix: m,
    })
}

/// `J = P Sigma`.
pub fn build_j(sigma: &ParityStructure, p: &ParityStructure) -> Endomorphism {
    p.after(sigma)
}

/// Nijenhuis tensor components `N(d_I, d_J)^K` and the chiral parts.
#[derive(Clone, Debug, PartialEq)]
pub struct NijenhuisTensor {
    pub full: Vec<Vec<VectorField>>,
    pub plus: Vec<Vec<VectorField>>,
    pub minus: Vec<Vec<VectorField>>,
}

impl NijenhuisTensor {
    pub fn is_zero(&self) -> bool {
        [&self.full, &self.plus, &self.minus]
            .iter()
            .all(|t| t.iter().flatten().all(|v| v.is_zero()))
    }

    /// Every nonzero component of the full tensor.
    pub fn report(&self, base: &Base) -> CheckReport {
        let mut v = Vec::new();
        for (i, row) in self.full.iter().enumerate() {
            for (j, f) in row.iter().enumerate() {
                for (k, c) in f.comps.iter().enumerate() {
                    if !c.is_zero() {
                        v.push(Violation {
                            location: format!(
                                "N({},{})^{}",
                                base.name(i),
                                base.name(j),
                                base.name(k)
                            ),
                            residual: c.render(),
                        });
                    }
                }
            }
        }
        CheckReport::new("nijenhuis", v)
    }
}

/// `N(X,Y) = [X,Y] + [PX,PY] - P[X,PY] - P[PX,Y]`.
pub fn nijenhuis_on(p: &Endomorphism, x: &VectorField, y: &VectorField) -> VectorField {
    let b = &p.base;
    let (px, py) = (p.apply(x), p.apply(y));
    let t1 = lie_bracket(b, x, y);
    let t2 = lie_bracket(b, &px, &py);
    let t3 = p.apply(&lie_bracket(b, x, &py));
    let t4 = p.apply(&lie_bracket(b, &px, y));
    t1.combine(&t2, 1).combine(&t3, -1).combine(&t4, -1)
}

/// `N_+-(X,Y) = P_-+ [P_+- X, P_+- Y]`.
pub fn chiral_nijenhuis_on(
    p: &Endomorphism,
    s: i64,
    x: &VectorField,
    y: &VectorField,
) -> VectorField {
    let (pr, co) = (p.projector(s), p.projector(-s));
    co.apply(&lie_bracket(&p.base, &pr.apply(x), &pr.apply(y)))
}

pub fn nijenhuis(p: &ParityStructure) -> NijenhuisTensor {
    let d = p.base.dim();
    let basis: Vec<VectorField> = (0..d)
        .map(|i| VectorField::coordinate(&p.base, i))
        .collect();
    let table = |f: &dyn Fn(&VectorField, &VectorField) -> VectorField| -> Vec<Vec<VectorField>> {
        basis
            .iter()
            .map(|x| basis.iter().map(|y| f(x, y)).collect())
            .collect()
    };
    NijenhuisTensor {
        full: table(&|x, y| nijenhuis_on(p, x, y)),
        plus: table(&|x, y| chiral_nijenhuis_on(p, 1, x, y)),
        minus: table(&|x, y| chiral_nijenhuis_on(p, -1, x, y)),
    }
}

/// Torsion-free connection preserving `Sigma` and the `P` built from `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObataConnection {
    pub base: Base,
    /// `christoffel[I][J][K] = G_IJ^K`.
    pub christoffel: Vec<Vec<Vec<RationalFn>>>,
    pub sigma: ParityStructure,
    pub p: ParityStructure,
}

/// Christoffels from `nabla P = 0` with vanishing mixed components:
/// `G_{p_i p_j}^{p_k} = (d E^j_m / dp_i) Et^m_k` and
/// `G_{c_i c_j}^{c_k} = (d Et^j_m / dc_i) E^m_k`.
pub fn obata_connection(base: &Base, e: &Matrix<RationalFn>) -> Result<ObataConnection> {
    let n = base.n();
    let d = base.dim();
    let et = invert_matrix(e).map_err(|_| Error::ESingular)?;
    let mut g = vec![vec![vec![base.zero(); d]; d]; d];
    for i in 0..n {
        for j in 0..n {
            let de: Vec<RationalFn> = (0..n).map(|m| e[j][m].d_left(base.p[i])).collect();
            let dt: Vec<RationalFn> = (0..n).map(|m| et[j][m].d_left(base.c[i])).collect();
            for k in 0..n {
                let mut sp = base.zero();
                let mut sc = base.zero();
                for m in 0..n {
                    if !de[m].is_zero() && !et[m][k].is_zero() {
                        sp = sp.add(&de[m].mul(&et[m][k]));
                    }
                    if !dt[m].is_zero() && !e[m][k].is_zero() {
                        sc = sc.add(&dt[m].mul(&e[m][k]));
                    }
                }
                g[i][j][k] = sp.simplified();
                g[n + i][n + j][n + k] = sc.simplified();
            }
        }
    }
    Ok(ObataConnection {
        base: base.clone(),
        christoffel: g,
        sigma: build_sigma(base),
        p: build_p(base, e)?,
    })
}

/// Curvature components `R(d_I, d_J) d_L = R_IJL^M d_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature {
    pub components: Vec<(usize, usize, usize, usize, RationalFn)>,
}

impl Curvature {
    pub fn is_flat(&self) -> bool {
        self.components.is_empty()
    }

    pub fn report(&self, base: &Base) -> CheckReport {
        let v = self
            .components
            .iter()
            .map(|(i, j, l, m, r)| Violation {
                location: format!(
                    "R({},{}) d/d{} -> d/d{}",
                    base.name(*i),
                    base.name(*j),
                    base.name(*l),
                    base.name(*m)
                ),
                residual: r.render(),
            })
            .collect();
        CheckReport::new("obata-curvature", v)
    }
}

impl ObataConnection {
    fn parity_of(&self, i: usize, j: usize, k: usize) -> u32 {
        u32::from(self.base.parity(i) + self.base.parity(j) + self.base.parity(k))
    }

    /// `nabla_I` applied to the field with left components `v`.
    fn covariant(&self, i: usize, v: &[RationalFn], v_parities: &[u32]) -> Vec<RationalFn> {
        let d = self.base.dim();
        let ei = u32::from(self.base.parity(i));
        (0..d)
            .map(|m| {
                let mut s = v[m].d_left(self.base.coord(i));
                for k in 0..d {
                    if v[k].is_zero() || self.christoffel[i][k][m].is_zero() {
                        continue;
                    }
                    let t = v[k].mul(&self.christoffel[i][k][m]);
                    s = s.add(&signed(t, self.base.sign(ei * v_parities[k])));
                }
                s.simplified()
            })
            .collect()
    }

    /// `R(d_I, d_J) = nabla_I nabla_J - (-1)^(eps_I eps_J) nabla_J nabla_I`.
    pub fn curvature(&self) -> Curvature {
        let d = self.base.dim();
        let mut out = Vec::new();
        for l in 0..d {
            let first: Vec<Vec<RationalFn>> =
                (0..d).map(|j| self.christoffel[j][l].clone()).collect();
            let par: Vec<Vec<u32>> = (0..d)
                .map(|j| (0..d).map(|k| self.parity_of(j, l, k)).collect())
                .collect();
            for i in 0..d {
                for j in 0..d {
                    let a = self.covariant(i, &first[j], &par[j]);
                    let b = self.covariant(j, &first[i], &par[i]);
                    let neg = self
                        .base
                        .sign(u32::from(self.base.parity(i) * self.base.parity(j)));
                    for m in 0..d {
                        let r = a[m].add(&signed(b[m].clone(), !neg)).simplified();
                        if !r.is_zero() {
                            out.push((i, j, l, m, r));
                        }
                    }
                }
            }
        }
        Curvature { components: out }
    }

    /// Residuals of `nabla Sigma = 0`, `nabla P = 0` and torsion freedom.
    pub fn verify(&self) -> CheckReport {
        let b = &self.base;
        let d = b.dim();
        let g = &self.christoffel;
        let mut v = Vec::new();
        for i in 0..d {
            let ei = u32::from(b.parity(i));
            for j in 0..d {
                let ej = u32::from(b.parity(j));
                for m in 0..d {
                    let sig = |k: usize| if k < b.n() { 1 } else { -1 };
                    if sig(j) != sig(m) && !g[i][j][m].is_zero() {
                        v.push(Violation {
                            location: format!(
                                "nabla Sigma ({},{},{})",
                                b.name(i),
                                b.name(j),
                                b.name(m)
                            ),
                            residual: g[i][j][m].render(),
                        });
                    }
                    let pm = &self.p.matrix;
                    let mut s = pm[j][m].d_left(b.coord(i));
                    for k in 0..d {
                        let ek = u32::from(b.parity(k));
                        if !pm[j][k].is_zero() && !g[i][k][m].is_zero() {
                            s = s.add(&signed(pm[j][k].mul(&g[i][k][m]), b.sign(ei * (ej + ek))));
                        }
                        if !g[i][j][k].is_zero() && !pm[k][m].is_zero() {
                            s = s.sub(&g[i][j][k].mul(&pm[k][m]));
                        }
                    }
                    let s = s.simplified();
                    if !s.is_zero() {
                        v.push(Violation {
                            location: format!(
                                "nabla P ({},{},{})",
                                b.name(i),
                                b.name(j),
                                b.name(m)
                            ),
                            residual: s.render(),
                        });
                    }
                    let t = g[i][j][m]
                        .sub(&signed(g[j][i][m].clone(), b.sign(ei * ej)))
                        .simplified();
                    if !t.is_zero() {
                        v.push(Violation {
                            location: format!(
                                "torsion ({},{},{})",
                                b.name(i),
                                b.name(j),
                                b.name(m)
                            ),
                            residual: t.render(),
                        });
                    }
                }
            }
        }
        CheckReport::new("obata-connection", v)
    }
}

/// The four constant structures `Id, P, J, Sigma` in momentum coordinates
/// `(p_1j, p_2j) = (p_j, c_j)`, as component matrices `t_alpha (x) Id_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiDarbouxStructures {
    pub n: usize,
    pub identity: Matrix<Q>,
    pub p: Matrix<Q>,
    pub j: Matrix<Q>,
    pub sigma: Matrix<Q>,
}

fn kron_identity(t: &Mat2, n: usize) -> Matrix<Q> {
    let mut m = vec![vec![Q::zero(); 2 * n]; 2 * n];
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..n {
                m[a * n + k][b * n + k] = t[a][b].clone();
            }
        }
    }
    m
}

pub fn bidarboux_structures(n: usize) -> BiDarbouxStructures {
    BiDarbouxStructures {
        n,
        identity: kron_identity(&liegroup::t(0), n),
        p: kron_identity(&liegroup::t(1), n),
        j: kron_identity(&liegroup::t(2), n),
        sigma: kron_identity(&liegroup::t(3), n),
    }
}

fn mat_mul_q(a: &Matrix<Q>, b: &Matrix<Q>) -> Matrix<Q> {
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..b.len()).map(|k| &a[i][k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

impl BiDarbouxStructures {
    /// Components after the momentum rotation `p'_a = g_a^b p_b`.
    pub fn rotate(&self, g: &Mat2) -> Result<BiDarbouxStructures> {
        let (gm, gi) = (
            kron_identity(g, self.n),
            kron_identity(&liegroup::inv2(g)?, self.n),
        );
        let conj = |m: &Matrix<Q>| mat_mul_q(&mat_mul_q(&gm, m), &gi);
        Ok(BiDarbouxStructures {
            n: self.n,
            identity: conj(&self.identity),
            p: conj(&self.p),
            j: conj(&self.j),
            sigma: conj(&self.sigma),
        })
    }

    /// `Lambda` with `(P, J, Sigma)_beta = (t_alpha (x) Id) Lambda^alpha_beta`,
    /// if every structure lies in that span.
    pub fn lorentz_frame(&self) -> Option<Mat3> {
        let n = self.n;
        let mut out: Mat3 = std::array::from_fn(|_| std::array::from_fn(|_| Q::zero()));
        for (b, m) in [&self.p, &self.j, &self.sigma].into_iter().enumerate() {
            let block: Mat2 =
                std::array::from_fn(|r| std::array::from_fn(|s| m[r * n][s * n].clone()));
            if kron_identity(&block, n) != *m {
                return None;
            }
            let x = liegroup::sl2_coords(&block)?;
            for a in 0..3 {
                out[a][b] = x[a].clone();
            }
        }
        Some(out)
    }
}

/// Constant component matrix of an endomorphism, if every entry is constant.
pub fn constant_components(s: &Endomorphism) -> Option<Matrix<Q>> {
    s.components()
        .iter()
        .map(|r| r.iter().map(|x| x.to_poly()?.as_constant()).collect())
        .collect()
}

/// `dim ker(P -+ 1)` both equal `n` at a point.
pub fn check_eigenspaces(p: &ParityStructure, point: &[(VarId, Q)]) -> Result<bool> {
    let (plus, minus) = p.eigenspace_dims(point)?;
    Ok(plus == p.base.n() && minus == p.base.n())
}

#[cfg(test)]
mod tests;
