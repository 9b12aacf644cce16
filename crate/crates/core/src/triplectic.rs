//! Triplectic charts in semi-canonical form and the bi-Darboux pipeline.
//!
//! A chart has positions `q^i`, Casimirs `p_i` of the second bracket and
//! Casimirs `c_i` of the first bracket, with `{q^i, p_j}^1 = delta`,
//! `{q^i, c_j}^2 = E^i_j(p, c)` and `{q^i, q^j}^2 = F^ij(p, c)`. Chart
//! coordinates are always ordered `q, p, c`.
//!
//! Coordinate changes recompute every fundamental bracket from the forward
//! map and re-express it through the inverse map, reusing the variable
//! table. Inverses that are not polynomial are power series around the
//! origin; such charts record the degree up to which they are exact.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homotopy::{TriGradedAlgebra, DEFAULT_DEGREE};
use crate::parahyper::{self, Base};
use crate::poisson::{Chart, PoissonPencil, PoissonStructure};
use crate::report::{CheckReport, Violation};
use crate::superalgebra::{
    fmt_q, invert_matrix, mat_mul, mat_mul_poly, solve_q, GradedVariable, Matrix, Monomial,
    RationalFn, Role, SuperPoly, VarId, VarTable, Q,
};

pub mod corpus;

/// Extra degrees carried through the pipeline to absorb derivative losses.
pub const WORKING_MARGIN: u32 = 4;

/// Table `q1..qn, p1..pn, c1..cn` with `eps(q_i) = parities[i]` and
/// `eps(p_i) = eps(c_i) = parities[i] + epsilon`.
pub fn triplectic_table(parities: &[u8], epsilon: u8) -> Arc<VarTable> {
    let mut v = Vec::new();
    for (role, prefix) in [
        (Role::Position, "q"),
        (Role::Momentum, "p"),
        (Role::Casimir, "c"),
    ] {
        for (i, &e) in parities.iter().enumerate() {
            let parity = if role == Role::Position {
                e % 2
            } else {
                (e + epsilon) % 2
            };
            v.push(GradedVariable::new(
                &format!("{prefix}{}", i + 1),
                parity,
                0,
                role,
                i as u32 + 1,
            ));
        }
    }
    VarTable::new(v).expect("generated names are distinct")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriplecticChart {
    pub pencil: PoissonPencil,
    pub q: Vec<VarId>,
    pub p: Vec<VarId>,
    pub c: Vec<VarId>,
    /// Degree up to which the bracket entries are exact, if truncated.
    pub truncation: Option<u32>,
}

/// `E^i_j = {q^i, c_j}^2` and `F^ij = {q^i, q^j}^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct EfMatrices {
    pub e: Matrix<SuperPoly>,
    pub f: Matrix<SuperPoly>,
}

impl TriplecticChart {
    /// Chart over a pencil whose coordinates carry position, momentum and
    /// Casimir roles, in that order.
    pub fn from_pencil(pencil: PoissonPencil, truncation: Option<u32>) -> Result<Self> {
        let table = pencil.first.chart.table.clone();
        let q = table.ids_with_role(Role::Position);
        let p = table.ids_with_role(Role::Momentum);
        let c = table.ids_with_role(Role::Casimir);
        if q.len() != p.len() || q.len() != c.len() {
            return Err(Error::NotSemiCanonical(
                "unequal numbers of positions, momenta and Casimirs".into(),
            ));
        }
        let order: Vec<VarId> = q.iter().chain(&p).chain(&c).copied().collect();
        if pencil.first.chart.coords != order {
            return Err(Error::NotSemiCanonical(
                "chart coordinates must be ordered q, p, c".into(),
            ));
        }
        Ok(TriplecticChart {
            pencil,
            q,
            p,
            c,
            truncation,
        })
    }

    /// Chart with `{q,p}^1 = 1`, `{q,c}^2 = E`, `{q,q}^2 = F` and all other
    /// fundamental brackets zero. `F` is read on and above the diagonal.
    pub fn semi_canonical(
        table: &Arc<VarTable>,
        epsilon: u8,
        e: &Matrix<SuperPoly>,
        f: &Matrix<SuperPoly>,
    ) -> Result<Self> {
        let q = table.ids_with_role(Role::Position);
        let p = table.ids_with_role(Role::Momentum);
        let c = table.ids_with_role(Role::Casimir);
        let n = q.len();
        let coords: Vec<VarId> = q.iter().chain(&p).chain(&c).copied().collect();
        let chart = Chart::new(table.clone(), coords, epsilon);
        let mut first = PoissonStructure::zero(&chart);
        let mut second = PoissonStructure::zero(&chart);
        for i in 0..n {
            first.set(i, n + i, SuperPoly::one(table));
            for j in 0..n {
                second.set(i, 2 * n + j, e[i][j].clone());
            }
            for j in i..n {
                second.set(i, j, f[i][j].clone());
            }
        }
        TriplecticChart::from_pencil(PoissonPencil::new(first, second)?, None)
    }

    /// Bi-Darboux chart with `E = Id`, `F = 0`.
    pub fn canonical(parities: &[u8], epsilon: u8) -> Self {
        canonical_on(&triplectic_table(parities, epsilon), epsilon)
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.pencil.first.chart.table
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn epsilon(&self) -> u8 {
        self.pencil.first.epsilon()
    }

    /// Position parities `eps_i`.
    pub fn parities(&self) -> Vec<u8> {
        self.q.iter().map(|&v| self.table().parity(v)).collect()
    }

    pub fn base(&self) -> Base {
        Base::new(self.table().clone(), self.p.clone(), self.c.clone())
    }

    pub fn coords(&self) -> &[VarId] {
        &self.pencil.first.chart.coords
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.table().var(v).name
    }

    fn slot(&self, v: VarId) -> usize {
        self.coords()
            .iter()
            .position(|&w| w == v)
            .expect("chart coordinate")
    }

    /// `{u, v}^k` for chart coordinates `u, v`.
    pub fn bracket(&self, k: usize, u: VarId, v: VarId) -> &SuperPoly {
        &self.pencil.get(k).pi[self.slot(u)][self.slot(v)]
    }

    pub fn var(&self, v: VarId) -> SuperPoly {
        SuperPoly::var(self.table(), v)
    }

    fn identity_images(&self) -> Vec<SuperPoly> {
        (0..self.table().len()).map(|v| self.var(v)).collect()
    }
}

/// Canonical chart over an existing triplectic table.
pub fn canonical_on(table: &Arc<VarTable>, epsilon: u8) -> TriplecticChart {
    let n = table.ids_with_role(Role::Position).len();
    let zero = vec![vec![SuperPoly::zero(table); n]; n];
    TriplecticChart::semi_canonical(table, epsilon, &identity_poly(table, n), &zero)
        .expect("canonical chart")
}

pub fn identity_poly(table: &Arc<VarTable>, n: usize) -> Matrix<SuperPoly> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        SuperPoly::one(table)
                    } else {
                        SuperPoly::zero(table)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn to_rational(m: &Matrix<SuperPoly>) -> Matrix<RationalFn> {
    m.iter()
        .map(|r| r.iter().map(|x| x.clone().into()).collect())
        .collect()
}

fn bracket_label(chart: &TriplecticChart, u: VarId, v: VarId, k: usize) -> String {
    format!("{{{},{}}}^{k}", chart.name(u), chart.name(v))
}

fn agree(a: &SuperPoly, b: &SuperPoly, upto: Option<u32>) -> bool {
    match upto {
        Some(t) => a.truncate(t) == b.truncate(t),
        None => a == b,
    }
}

/// Entries where two charts on the same coordinates differ, up to `upto`.
fn bracket_differences(
    actual: &TriplecticChart,
    expected: &TriplecticChart,
    upto: Option<u32>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let coords = actual.coords();
    for k in 1..=2 {
        for (a, &u) in coords.iter().enumerate() {
            for &v in &coords[a..] {
                let x = actual.bracket(k, u, v);
                let y = expected.bracket(k, u, v);
                if !agree(x, y, upto) {
                    out.push(Violation {
                        location: bracket_label(actual, u, v, k),
                        residual: format!("{}, expected {}", x.render(), y.render()),
                    });
                }
            }
        }
    }
    out
}

fn raw_ef(chart: &TriplecticChart) -> EfMatrices {
    let n = chart.n();
    let e = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| chart.bracket(2, chart.q[i], chart.c[j]).clone())
                .collect()
        })
        .collect();
    let f = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| chart.bracket(2, chart.q[i], chart.q[j]).clone())
                .collect()
        })
        .collect();
    EfMatrices { e, f }
}

/// Fundamental brackets that differ from the semi-canonical form.
pub fn semi_canonical_report(chart: &TriplecticChart) -> CheckReport {
    let ef = raw_ef(chart);
    let expected = TriplecticChart::semi_canonical(chart.table(), chart.epsilon(), &ef.e, &ef.f)
        .expect("same table");
    CheckReport::new(
        "semi-canonical",
        bracket_differences(chart, &expected, None),
    )
}

/// Fundamental brackets that differ from the bi-Darboux form, compared up
/// to `upto` when given.
pub fn canonical_report(chart: &TriplecticChart, upto: Option<u32>) -> CheckReport {
    let expected = canonical_on(chart.table(), chart.epsilon());
    CheckReport::new(
        "bi-darboux-form",
        bracket_differences(chart, &expected, upto),
    )
}

/// Extracts `E` and `F` after checking q-independence, the semi-canonical
/// axioms and invertibility of `E`.
pub fn extract_ef(chart: &TriplecticChart) -> Result<EfMatrices> {
    let coords = chart.coords();
    for k in 1..=2 {
        for (a, &u) in coords.iter().enumerate() {
            for &v in &coords[a..] {
                if chart
                    .q
                    .iter()
                    .any(|&x| chart.bracket(k, u, v).depends_on(x))
                {
                    return Err(Error::QDependent(bracket_label(chart, u, v, k)));
                }
            }
        }
    }
    if let Some(v) = semi_canonical_report(chart).violations.into_iter().next() {
        return Err(Error::NotSemiCanonical(format!(
            "{} = {}",
            v.location, v.residual
        )));
    }
    let ef = raw_ef(chart);
    invert_matrix(&to_rational(&ef.e)).map_err(|_| Error::ESingular)?;
    Ok(ef)
}

/// `Phi` with `d_l Phi / d x_i = gradient[i]`, vanishing where all `x` do,
/// by Euler's formula; verified by differentiation.
pub fn integrate_gradient(gradient: &[SuperPoly], vars: &[VarId]) -> Result<SuperPoly> {
    let table = gradient[0].table().clone();
    let trunc = gradient.iter().filter_map(|g| g.truncation()).min();
    let mut terms: BTreeMap<Monomial, Q> = BTreeMap::new();
    for (g, &x) in gradient.iter().zip(vars) {
        let prod = &SuperPoly::var(&table, x) * &g.clone().with_truncation(None);
        for (m, c) in prod.terms() {
            let k = Q::from_integer(m.degree_in(vars).into());
            *terms.entry(m.clone()).or_insert_with(Q::zero) += c / k;
        }
    }
    let phi = SuperPoly::from_terms(&table, terms.into_iter().filter(|(_, c)| !c.is_zero()));
    for (i, (g, &x)) in gradient.iter().zip(vars).enumerate() {
        if !agree(&phi.d_left(x), g, trunc) {
            return Err(Error::NotIntegrable(format!(
                "component {} is not a gradient",
                i + 1
            )));
        }
    }
    Ok(match trunc {
        Some(t) => phi.with_truncation(Some(t + 1)),
        None => phi,
    })
}

/// Potentials from the closedness conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Closedness {
    /// `A_j` with `E^i_j = d_l A_j / dp_i`.
    pub e_potentials: Vec<SuperPoly>,
    /// `At_i` with `Et^j_i = d_l At_i / dc_j`, when `E^-1` is polynomial.
    pub inverse_potentials: Option<Vec<SuperPoly>>,
}

/// Graded symmetry of `dE^k_j/dp_i` in `(i, k)` and of `dEt^j_k/dc_i` in
/// `(i, j)`.
pub fn closedness_report(base: &Base, e: &Matrix<SuperPoly>) -> Result<CheckReport> {
    let n = base.n();
    let t = &base.table;
    let et = invert_matrix(&to_rational(e)).map_err(|_| Error::ESingular)?;
    let mut v = Vec::new();
    for i in 0..n {
        for k in i..n {
            let odd = t.parity(base.p[i]) * t.parity(base.p[k]) % 2 == 1;
            for j in (0..n).filter(|_| k > i || odd) {
                let a = e[k][j].d_left(base.p[i]);
                let b = e[i][j].d_left(base.p[k]);
                let r = if odd { &a + &b } else { &a - &b };
                if !r.is_zero() {
                    v.push(Violation {
                        location: format!(
                            "dE/dp ({},{}) column {}",
                            base.name(i),
                            base.name(k),
                            base.name(n + j)
                        ),
                        residual: r.render(),
                    });
                }
            }
            let odd = t.parity(base.c[i]) * t.parity(base.c[k]) % 2 == 1;
            for j in (0..n).filter(|_| k > i || odd) {
                let a = et[k][j].d_left(base.c[i]);
                let b = et[i][j].d_left(base.c[k]);
                let r = if odd { a.add(&b) } else { a.sub(&b) }.simplified();
                if !r.is_zero() {
                    v.push(Violation {
                        location: format!(
                            "dEt/dc ({},{}) column {}",
                            base.name(n + i),
                            base.name(n + k),
                            base.name(j)
                        ),
                        residual: r.render(),
                    });
                }
            }
        }
    }
    Ok(CheckReport::new("closedness", v))
}

pub fn check_closedness(base: &Base, e: &Matrix<SuperPoly>) -> Result<Closedness> {
    let report = closedness_report(base, e)?;
    if let Some(v) = report.violations.first() {
        return Err(Error::NotClosed(format!("{} = {}", v.location, v.residual)));
    }
    let n = base.n();
    let e_potentials = integrate_jacobian(e, &base.p)?;
    let et = invert_matrix(&to_rational(e)).map_err(|_| Error::ESingular)?;
    let et_poly: Option<Matrix<SuperPoly>> = et
        .iter()
        .map(|r| r.iter().map(|x| x.to_poly()).collect())
        .collect();
    let inverse_potentials = match et_poly {
        Some(m) => Some(
            (0..n)
                .map(|i| {
                    integrate_gradient(
                        &(0..n).map(|j| m[j][i].clone()).collect::<Vec<_>>(),
                        &base.c,
                    )
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(Closedness {
        e_potentials,
        inverse_potentials,
    })
}

/// Even-body value of a matrix at a point.
pub fn body_at(m: &Matrix<SuperPoly>, point: &[(VarId, Q)]) -> Result<Matrix<Q>> {
    m.iter()
        .map(|r| {
            r.iter()
                .map(|x| x.eval_body(point).ok_or(Error::BasePointSingular))
                .collect()
        })
        .collect()
}

pub fn inverse_q(m: &Matrix<Q>) -> Option<Matrix<Q>> {
    let n = m.len();
    let cols: Vec<Vec<Q>> = (0..n)
        .map(|j| {
            solve_q(
                m,
                &(0..n)
                    .map(|i| if i == j { Q::one() } else { Q::zero() })
                    .collect::<Vec<_>>(),
            )
        })
        .collect::<Option<_>>()?;
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
            .collect(),
    )
}

fn invertible_at(e: &Matrix<SuperPoly>, point: &[(VarId, Q)]) -> bool {
    body_at(e, point).ok().and_then(|m| inverse_q(&m)).is_some()
}

/// Integer points of max-norm `radius` in `k` dimensions, lexicographic.
fn shell(k: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-radius..=radius).map(move |d| {
                    let mut v = prefix.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out.retain(|v| radius == 0 || v.iter().any(|d| d.abs() == radius));
    out
}

/// Search radius of the default base point.
pub const BASE_POINT_RADIUS: i64 = 3;

/// First small integer point, by max-norm and then lexicographically, at
/// which the even body of `E` is invertible. Odd coordinates are zero.
pub fn default_base_point(base: &Base, e: &Matrix<SuperPoly>) -> Result<Vec<(VarId, Q)>> {
    let body: Vec<VarId> = (0..base.dim())
        .map(|i| base.coord(i))
        .filter(|&v| base.table.parity(v) == 0)
        .collect();
    for radius in 0..=BASE_POINT_RADIUS {
        for digits in shell(body.len(), radius) {
            let point: Vec<(VarId, Q)> = body
                .iter()
                .zip(digits)
                .map(|(&v, d)| (v, Q::from_integer(d.into())))
                .collect();
            if invertible_at(e, &point) {
                return Ok(point);
            }
        }
    }
    Err(Error::BasePointSingular)
}

fn value_at(point: &[(VarId, Q)], v: VarId) -> Q {
    point
        .iter()
        .find(|(w, _)| *w == v)
        .map(|(_, x)| x.clone())
        .unwrap_or_else(Q::zero)
}

/// Substitutes point values for the listed variables; odd ones become zero.
fn restrict(x: &SuperPoly, vars: &[VarId], point: &[(VarId, Q)]) -> Result<SuperPoly> {
    let t = x.table();
    let assignment: Vec<(VarId, SuperPoly)> = vars
        .iter()
        .map(|&v| (v, SuperPoly::constant(t, value_at(point, v))))
        .collect();
    x.substitute(&assignment)
}

/// `E = P(p) C(c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub p_factor: Matrix<SuperPoly>,
    pub c_factor: Matrix<SuperPoly>,
}

/// Candidate `P = E(p, c0)`, `C = E(p0, c0)^-1 E(p0, c)` and the entries of
/// `E - P C`.
pub fn factorization_candidate(
    base: &Base,
    e: &Matrix<SuperPoly>,
    point: &[(VarId, Q)],
) -> Result<(Factorization, CheckReport)> {
    let e0inv = inverse_q(&body_at(e, point)?).ok_or(Error::BasePointSingular)?;
    let n = base.n();
    let t = &base.table;
    let p_factor: Matrix<SuperPoly> = e
        .iter()
        .map(|r| r.iter().map(|x| restrict(x, &base.c, point)).collect())
        .collect::<Result<_>>()?;
    let e_c: Matrix<SuperPoly> = e
        .iter()
        .map(|r| r.iter().map(|x| restrict(x, &base.p, point)).collect())
        .collect::<Result<_>>()?;
    let c_factor: Matrix<SuperPoly> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(SuperPoly::zero(t), |acc, k| {
                        &acc + &e_c[k][j].scale(&e0inv[i][k])
                    })
                })
                .collect()
        })
        .collect();
    let prod = mat_mul_poly(&p_factor, &c_factor);
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let r = &e[i][j] - &prod[i][j];
            if !r.is_zero() {
                v.push(Violation {
                    location: format!("E - PC ({},{})", i + 1, j + 1),
                    residual: r.render(),
                });
            }
        }
    }
    Ok((
        Factorization { p_factor, c_factor },
        CheckReport::new("factorization", v),
    ))
}

/// The factorization through the base point, if `E` separates.
pub fn factorize(
    base: &Base,
    e: &Matrix<SuperPoly>,
    point: &[(VarId, Q)],
) -> Result<Option<Factorization>> {
    let (f, report) = factorization_candidate(base, e, point)?;
    Ok(report.passed.then_some(f))
}

/// Entries of `d/dp_i [ (dEt/dc_j) E ]`.
pub fn differential_factorization_report(
    base: &Base,
    e: &Matrix<SuperPoly>,
) -> Result<CheckReport> {
    let n = base.n();
    let er = to_rational(e);
    let et = invert_matrix(&er).map_err(|_| Error::ESingular)?;
    let mut v = Vec::new();
    for j in 0..n {
        let det: Matrix<RationalFn> = et
            .iter()
            .map(|r| r.iter().map(|x| x.d_left(base.c[j])).collect())
            .collect();
        let prod = mat_mul(&det, &er);
        for i in 0..n {
            for (r, row) in prod.iter().enumerate() {
                for (s, x) in row.iter().enumerate() {
                    let d = x.d_left(base.p[i]).simplified();
                    if !d.is_zero() {
                        v.push(Violation {
                            location: format!(
                                "d/d{} [dEt/d{} E] ({},{})",
                                base.name(i),
                                base.name(n + j),
                                r + 1,
                                s + 1
                            ),
                            residual: d.render(),
                        });
                    }
                }
            }
        }
    }
    Ok(CheckReport::new("differential-factorization", v))
}

pub fn check_differential_factorization(base: &Base, e: &Matrix<SuperPoly>) -> Result<bool> {
    Ok(differential_factorization_report(base, e)?.passed)
}

/// Coordinates `y_j` with `d_l y_j / d x_i = jacobian[i][j]`, vanishing at
/// the origin.
pub fn integrate_jacobian(jacobian: &Matrix<SuperPoly>, vars: &[VarId]) -> Result<Vec<SuperPoly>> {
    let n = vars.len();
    (0..n)
        .map(|j| {
            let col: Vec<SuperPoly> = (0..n).map(|i| jacobian[i][j].clone()).collect();
            integrate_gradient(&col, vars)
                .map_err(|_| Error::NotIntegrable(format!("column {}", j + 1)))
        })
        .collect()
}

/// `integrate_jacobian` for a rational Jacobian: exact when it is
/// polynomial, otherwise a power series exact to `degree`.
pub fn integrate_rational_jacobian(
    jacobian: &Matrix<RationalFn>,
    vars: &[VarId],
    degree: u32,
) -> Result<Vec<SuperPoly>> {
    let exact: Option<Matrix<SuperPoly>> = jacobian
        .iter()
        .map(|r| r.iter().map(|x| x.to_poly()).collect())
        .collect();
    let poly = match exact {
        Some(m) => m,
        None => {
            let d = degree.saturating_sub(1);
            jacobian
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|x| Ok(x.series(d)?.with_truncation(Some(d))))
                        .collect()
                })
                .collect::<Result<_>>()?
        }
    };
    integrate_jacobian(&poly, vars)
}

fn images_with(table: &Arc<VarTable>, vars: &[VarId], values: &[SuperPoly]) -> Vec<SuperPoly> {
    let mut imgs: Vec<SuperPoly> = (0..table.len()).map(|v| SuperPoly::var(table, v)).collect();
    for (&v, x) in vars.iter().zip(values) {
        imgs[v] = x.clone();
    }
    imgs
}

/// Inverse of `x -> f(x)` on the listed variables.
///
/// A polynomial inverse is returned exactly. Otherwise the inverse is the
/// power series around the origin, exact to `degree`, which needs
/// `f(0) = 0`.
pub fn invert_map(images: &[SuperPoly], vars: &[VarId], degree: u32) -> Result<Vec<SuperPoly>> {
    let n = vars.len();
    let table = images[0].table().clone();
    let var = |i: usize| SuperPoly::var(&table, vars[i]);
    let offsets: Vec<SuperPoly> = images
        .iter()
        .map(|f| SuperPoly::constant(&table, f.constant_term()))
        .collect();
    let lin: Matrix<Q> = (0..n)
        .map(|i| {
            images
                .iter()
                .map(|f| f.d_left(vars[i]).constant_term())
                .collect()
        })
        .collect();
    let lin_inv = inverse_q(&lin).ok_or(Error::MapNotInvertible)?;
    let nonlinear: Vec<SuperPoly> = (0..n)
        .map(|j| {
            let linear = (0..n).fold(SuperPoly::zero(&table), |acc, i| {
                &acc + &var(i).scale(&lin[i][j])
            });
            &(&images[j] - &linear) - &offsets[j]
        })
        .collect();
    let identity: Vec<SuperPoly> = (0..n).map(var).collect();
    let apply = |f: &[SuperPoly], x: &[SuperPoly]| -> Result<Vec<SuperPoly>> {
        let imgs = images_with(&table, vars, x);
        f.iter().map(|g| g.compose(&table, &imgs)).collect()
    };
    // x = L^-1 (u - N(x)) gains one correct degree per step.
    let mut x: Vec<SuperPoly> = vec![SuperPoly::zero(&table).with_truncation(Some(degree)); n];
    for _ in 0..=degree {
        let rest = apply(&nonlinear, &x)?;
        x = (0..n)
            .map(|i| {
                (0..n)
                    .fold(SuperPoly::zero(&table), |acc, j| {
                        &acc + &(&identity[j] - &rest[j]).scale(&lin_inv[j][i])
                    })
                    .with_truncation(Some(degree))
            })
            .collect();
    }
    let exact: Vec<SuperPoly> = x.iter().map(|p| p.clone().with_truncation(None)).collect();
    let shifted: Vec<SuperPoly> = images.iter().zip(&offsets).map(|(f, o)| f - o).collect();
    if apply(&shifted, &exact)? == identity {
        let back: Vec<SuperPoly> = identity.iter().zip(&offsets).map(|(y, o)| y - o).collect();
        return apply(&exact, &back);
    }
    if offsets.iter().any(|o| !o.is_zero()) {
        return Err(Error::MapNotInvertible);
    }
    for (b, y) in apply(images, &x)?.iter().zip(&identity) {
        let r = &b.truncate(degree) - y;
        if let Some(low) = r.terms().map(|(m, _)| m.degree()).min() {
            return Err(Error::TruncationResidual(low));
        }
    }
    Ok(x)
}

/// `num / den`, exactly when it is a polynomial and otherwise as a series
/// to `series_degree`. The flag reports exactness.
pub fn quotient(
    num: &SuperPoly,
    den: &SuperPoly,
    series_degree: Option<u32>,
) -> Result<(SuperPoly, bool)> {
    if let Some(c) = den.as_constant() {
        if c.is_zero() {
            return Err(Error::DivisionByZero);
        }
        return Ok((num.scale(&(Q::one() / c)), true));
    }
    // 1/(b + m) = sum_k (-m)^k / b^(k+1) with m nilpotent.
    let body = den.body();
    let minus_nil = &body - den;
    let mut powers = vec![SuperPoly::one(den.table())];
    loop {
        let next = powers.last().expect("nonempty") * &minus_nil;
        if next.is_zero() {
            break;
        }
        powers.push(next);
    }
    let top = powers.len() as u32;
    let mut numer = SuperPoly::zero(num.table());
    for (k, pw) in powers.iter().enumerate() {
        numer = &numer + &(&(num * pw) * &body.pow(top - 1 - k as u32));
    }
    let denom = body.pow(top);
    if let Some(q) = numer.div_exact(&denom) {
        return Ok((q, true));
    }
    match series_degree {
        Some(d) => Ok((
            RationalFn::new(numer, denom)?
                .series(d)?
                .with_truncation(Some(d)),
            false,
        )),
        None => Err(Error::NotPolynomial),
    }
}

fn min_trunc(values: impl IntoIterator<Item = Option<u32>>) -> Option<u32> {
    values.into_iter().flatten().min()
}

/// Chart in new coordinates `z' = forward(z)`, with `backward[v]` the old
/// table variable `v` as a function of the new coordinates.
///
/// `forward` lists the new coordinates in chart order. Entries are kept to
/// degree `accuracy` when given; series quotients use it as well, or
/// `series_degree` otherwise.
pub fn change_coordinates(
    chart: &TriplecticChart,
    forward: &[RationalFn],
    backward: &[SuperPoly],
    accuracy: Option<u32>,
    series_degree: u32,
) -> Result<TriplecticChart> {
    let table = chart.table();
    let dim = chart.coords().len();
    let series = accuracy.unwrap_or(series_degree);
    let mut exact = true;
    let mut pis = Vec::new();
    for k in 1..=2 {
        let mut pi = vec![vec![SuperPoly::zero(table); dim]; dim];
        for a in 0..dim {
            for b in a..dim {
                let old = chart.pencil.get(k).bracket_rat(&forward[a], &forward[b])?;
                let num = old.numer().compose(table, backward)?;
                let den = old.denom().compose(table, backward)?;
                let (val, ok) = quotient(&num, &den, Some(series))?;
                exact &= ok;
                pi[a][b] = val;
            }
        }
        pis.push(pi);
    }
    let truncation = if exact { accuracy } else { Some(series) };
    let c = Chart::new(table.clone(), chart.coords().to_vec(), chart.epsilon());
    let mut structures = Vec::new();
    for pi in pis {
        let mut s = PoissonStructure::zero(&c);
        for (a, row) in pi.iter().enumerate() {
            for (b, x) in row.iter().enumerate().skip(a) {
                let v = match truncation {
                    Some(t) => x.truncate(t).with_truncation(Some(t)),
                    None => x.clone().with_truncation(None),
                };
                s.set(a, b, v);
            }
        }
        structures.push(s);
    }
    let second = structures.pop().expect("two brackets");
    let first = structures.pop().expect("two brackets");
    TriplecticChart::from_pencil(PoissonPencil::new(first, second)?, truncation)
}

/// Generator `-F3 = A_j(p) q'^j + B(p, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct F3Generator {
    pub a: Vec<SuperPoly>,
    pub b: SuperPoly,
}

impl F3Generator {
    pub fn identity(chart: &TriplecticChart) -> Self {
        F3Generator {
            a: chart.p.iter().map(|&v| chart.var(v)).collect(),
            b: SuperPoly::zero(chart.table()),
        }
    }

    pub fn gauge(chart: &TriplecticChart, b: SuperPoly) -> Self {
        F3Generator {
            b,
            ..F3Generator::identity(chart)
        }
    }
}

/// `M^i_j = d_l A_j / dp_i`.
pub fn f3_jacobian(chart: &TriplecticChart, a: &[SuperPoly]) -> Matrix<SuperPoly> {
    chart
        .p
        .iter()
        .map(|&pi| a.iter().map(|aj| aj.d_left(pi)).collect())
        .collect()
}

/// Result of an F3 transformation with its consistency reports.
#[derive(Clone, Debug, PartialEq)]
pub struct F3Outcome {
    pub chart: TriplecticChart,
    /// Old momenta as functions of the new ones.
    pub inverse: Vec<SuperPoly>,
    pub tensor_law: CheckReport,
    pub affinity: CheckReport,
    pub gauge_law: CheckReport,
}

/// `q^i = M^i_j q'^j + d_l B / dp_i`, `p'_j = A_j(p)`, `c' = c`.
pub fn apply_f3(chart: &TriplecticChart, gen: &F3Generator, degree: u32) -> Result<F3Outcome> {
    let n = chart.n();
    let table = chart.table();
    let ef = extract_ef(chart)?;
    let m = f3_jacobian(chart, &gen.a);
    let mt = invert_matrix(&to_rational(&m)).map_err(|_| Error::MapNotInvertible)?;
    let db: Vec<SuperPoly> = chart.p.iter().map(|&v| gen.b.d_left(v)).collect();
    let shifted: Vec<RationalFn> = (0..n)
        .map(|i| (&chart.var(chart.q[i]) - &db[i]).into())
        .collect();
    let mut forward: Vec<RationalFn> = (0..n)
        .map(|j| {
            (0..n).fold(RationalFn::zero(table), |acc, i| {
                acc.add(&mt[j][i].mul(&shifted[i]))
            })
        })
        .collect();
    forward.extend(gen.a.iter().map(|x| RationalFn::from(x.clone())));
    forward.extend(chart.c.iter().map(|&v| RationalFn::from(chart.var(v))));

    let psi = invert_map(&gen.a, &chart.p, degree)?;
    let psi_images = images_with(table, &chart.p, &psi);
    let m_new: Matrix<SuperPoly> = m
        .iter()
        .map(|r| r.iter().map(|x| x.compose(table, &psi_images)).collect())
        .collect::<Result<_>>()?;
    let q_images: Vec<SuperPoly> = (0..n)
        .map(|i| {
            let lin = (0..n).fold(SuperPoly::zero(table), |acc, j| {
                &acc + &(&m_new[i][j] * &chart.var(chart.q[j]))
            });
            Ok(&lin + &db[i].compose(table, &psi_images)?)
        })
        .collect::<Result<_>>()?;
    let mut backward = psi_images;
    for (i, img) in q_images.iter().enumerate() {
        backward[chart.q[i]] = img.clone();
    }
    let psi_trunc = min_trunc(psi.iter().map(|x| x.truncation()));
    let accuracy = min_trunc([
        chart.truncation,
        psi_trunc,
        min_trunc(gen.a.iter().map(|x| x.truncation())),
    ]);
    let new = change_coordinates(chart, &forward, &backward, accuracy, degree)?;

    let upto = new.truncation;
    let new_ef = raw_ef(&new);
    let a_images = images_with(table, &chart.p, &gen.a);
    let pulled = |x: &SuperPoly| x.compose(table, &a_images);
    let e_pulled: Matrix<SuperPoly> = new_ef
        .e
        .iter()
        .map(|r| r.iter().map(pulled).collect())
        .collect::<Result<_>>()?;
    let f_pulled: Matrix<SuperPoly> = new_ef
        .f
        .iter()
        .map(|r| r.iter().map(pulled).collect())
        .collect::<Result<_>>()?;

    let mut v = Vec::new();
    let me = mat_mul_poly(&m, &e_pulled);
    for i in 0..n {
        for j in 0..n {
            if !agree(&me[i][j], &ef.e[i][j], upto) {
                v.push(Violation {
                    location: format!("E - M E' ({},{})", i + 1, j + 1),
                    residual: (&ef.e[i][j] - &me[i][j]).render(),
                });
            }
        }
    }
    let tensor_law = CheckReport::new("tensor-law", v);

    let mut v = Vec::new();
    for (i, img) in q_images.iter().enumerate() {
        if img.terms().any(|(mono, _)| mono.degree_in(&chart.q) > 1) {
            v.push(Violation {
                location: format!("q{} in new positions", i + 1),
                residual: img.render(),
            });
        }
        for j in 0..n {
            let coeff = img.d_right(chart.q[j]);
            let coeff_upto = upto.map(|t| t.saturating_sub(1));
            if chart.q.iter().any(|&x| coeff.depends_on(x))
                || !agree(&coeff, &m_new[i][j], coeff_upto)
            {
                v.push(Violation {
                    location: format!("dq{}/dq'{}", i + 1, j + 1),
                    residual: coeff.render(),
                });
            }
        }
    }
    let affinity = CheckReport::new("affinity", v);

    let gauge_law = gauge_law_report(chart, &ef, &m, &f_pulled, &gen.a, &gen.b, upto);
    Ok(F3Outcome {
        chart: new,
        inverse: psi,
        tensor_law,
        affinity,
        gauge_law,
    })
}

/// `F^im - M^i_j F'^jk (A_k d_r/dp_m) (-1)^((eps_k + eps_m)(1 - eps))
///  = E^i_k d_l/dc_k {q^m, B}^1 - (-1)^(eps(p_i) eps(p_m)) (i <-> m)`,
/// with `F'` pulled back along `A`.
fn gauge_law_report(
    chart: &TriplecticChart,
    ef: &EfMatrices,
    m: &Matrix<SuperPoly>,
    f_pulled: &Matrix<SuperPoly>,
    a: &[SuperPoly],
    b: &SuperPoly,
    upto: Option<u32>,
) -> CheckReport {
    let n = chart.n();
    let table = chart.table();
    let eps = chart.epsilon();
    let par = chart.parities();
    let right: Matrix<SuperPoly> = (0..n)
        .map(|k| {
            (0..n)
                .map(|mm| {
                    let d = a[k].d_right(chart.p[mm]);
                    if (par[k] + par[mm]) * (1 - eps) % 2 == 1 {
                        -&d
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect();
    let transported = mat_mul_poly(&mat_mul_poly(m, f_pulled), &right);
    let g: Matrix<SuperPoly> = (0..n)
        .map(|i| {
            (0..n)
                .map(|mm| {
                    let qb = b.d_left(chart.p[mm]);
                    (0..n).fold(SuperPoly::zero(table), |acc, k| {
                        &acc + &(&ef.e[i][k] * &qb.d_left(chart.c[k]))
                    })
                })
                .collect()
        })
        .collect();
    let mut v = Vec::new();
    for i in 0..n {
        for mm in 0..n {
            let lhs = &ef.f[i][mm] - &transported[i][mm];
            let swap = table.parity(chart.p[i]) * table.parity(chart.p[mm]) % 2 == 1;
            let rhs = if swap {
                &g[i][mm] + &g[mm][i]
            } else {
                &g[i][mm] - &g[mm][i]
            };
            if !agree(&lhs, &rhs, upto) {
                v.push(Violation {
                    location: format!("F gauge law ({},{})", i + 1, mm + 1),
                    residual: (&lhs - &rhs).render(),
                });
            }
        }
    }
    CheckReport::new("gauge-law", v)
}

/// Result of a Casimir reparametrization.
#[derive(Clone, Debug, PartialEq)]
pub struct Reparametrization {
    pub chart: TriplecticChart,
    pub inverse: Vec<SuperPoly>,
    pub tensor_law: CheckReport,
}

/// `c' = gamma(c)` with positions and momenta fixed.
pub fn reparametrize_casimirs(
    chart: &TriplecticChart,
    gamma: &[SuperPoly],
    degree: u32,
) -> Result<Reparametrization> {
    let n = chart.n();
    let table = chart.table();
    let ef = extract_ef(chart)?;
    let inverse = invert_map(gamma, &chart.c, degree)?;
    let mut forward: Vec<RationalFn> = chart
        .q
        .iter()
        .chain(&chart.p)
        .map(|&v| chart.var(v).into())
        .collect();
    forward.extend(gamma.iter().map(|x| RationalFn::from(x.clone())));
    let backward = images_with(table, &chart.c, &inverse);
    let gamma_trunc = min_trunc(gamma.iter().map(|x| x.truncation())).map(|t| t.saturating_sub(1));
    let accuracy = min_trunc([
        chart.truncation,
        min_trunc(inverse.iter().map(|x| x.truncation())),
        gamma_trunc,
    ]);
    let new = change_coordinates(chart, &forward, &backward, accuracy, degree)?;

    let upto = new.truncation;
    let jac: Matrix<SuperPoly> = chart
        .c
        .iter()
        .map(|&cj| gamma.iter().map(|g| g.d_left(cj)).collect())
        .collect();
    let expected = mat_mul_poly(&ef.e, &jac);
    let gamma_images = images_with(table, &chart.c, gamma);
    let new_ef = raw_ef(&new);
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let pulled = new_ef.e[i][j].compose(table, &gamma_images)?;
            if !agree(&pulled, &expected[i][j], upto) {
                v.push(Violation {
                    location: format!("E' - E dgamma ({},{})", i + 1, j + 1),
                    residual: (&pulled - &expected[i][j]).render(),
                });
            }
        }
    }
    Ok(Reparametrization {
        chart: new,
        inverse,
        tensor_law: CheckReport::new("tensor-law", v),
    })
}

/// Forms on a chart: the chart table extended by `dq, dp, dc` generators
/// of form degree 1 and the parity of their coordinate.
#[derive(Clone, Debug)]
pub struct FormAlgebra {
    pub table: Arc<VarTable>,
    pub q: Vec<VarId>,
    pub p: Vec<VarId>,
    pub c: Vec<VarId>,
    pub dq: Vec<VarId>,
    pub dp: Vec<VarId>,
    pub dc: Vec<VarId>,
    e: Matrix<SuperPoly>,
    e_inv: Matrix<RationalFn>,
    f: Matrix<SuperPoly>,
}

impl FormAlgebra {
    pub fn new(chart: &TriplecticChart) -> Result<Self> {
        let ef = extract_ef(chart)?;
        let base = chart.table();
        let mut vars = base.vars().to_vec();
        let mut ids = Vec::new();
        for group in [&chart.q, &chart.p, &chart.c] {
            let mut g = Vec::new();
            for &v in group.iter() {
                let var = base.var(v);
                g.push(vars.len());
                vars.push(GradedVariable::new(
                    &format!("d{}", var.name),
                    var.parity,
                    1,
                    Role::FormGenerator,
                    var.index,
                ));
            }
            ids.push(g);
        }
        let table = VarTable::new(vars)?;
        let lift_all = |m: &Matrix<SuperPoly>| -> Matrix<SuperPoly> {
            m.iter()
                .map(|r| r.iter().map(|x| lift_into(&table, x)).collect())
                .collect()
        };
        let e = lift_all(&ef.e);
        let f = lift_all(&ef.f);
        let e_inv = invert_matrix(&to_rational(&e)).map_err(|_| Error::ESingular)?;
        let dc = ids.pop().expect("three groups");
        let dp = ids.pop().expect("three groups");
        let dq = ids.pop().expect("three groups");
        Ok(FormAlgebra {
            table,
            q: chart.q.clone(),
            p: chart.p.clone(),
            c: chart.c.clone(),
            dq,
            dp,
            dc,
            e,
            e_inv,
            f,
        })
    }

    /// Chart function as a zero-form.
    pub fn lift(&self, x: &SuperPoly) -> SuperPoly {
        lift_into(&self.table, x)
    }

    pub fn var(&self, v: VarId) -> SuperPoly {
        SuperPoly::var(&self.table, v)
    }

    fn rat(&self, v: VarId) -> RationalFn {
        self.var(v).into()
    }

    /// Exterior derivative over all chart coordinates.
    pub fn d(&self, w: &RationalFn) -> RationalFn {
        let coords = self.q.iter().chain(&self.p).chain(&self.c);
        let diffs = self.dq.iter().chain(&self.dp).chain(&self.dc);
        coords
            .zip(diffs)
            .fold(RationalFn::zero(&self.table), |acc, (&x, &dx)| {
                acc.add(&self.rat(dx).mul(&w.d_left(x)))
            })
            .simplified()
    }

    /// `del^1 = dp_i d/dp_i`, `del^2 = dp_i E^i_j d/dc_j`, and with `tilde`
    /// `del~^1 = dc_j d/dc_j`, `del~^2 = dc_i Et^i_j d/dp_j`.
    pub fn para_dolbeault(&self, a: usize, tilde: bool, w: &RationalFn) -> RationalFn {
        let n = self.p.len();
        let mut acc = RationalFn::zero(&self.table);
        match (a, tilde) {
            (1, false) => {
                for i in 0..n {
                    acc = acc.add(&self.rat(self.dp[i]).mul(&w.d_left(self.p[i])));
                }
            }
            (1, true) => {
                for j in 0..n {
                    acc = acc.add(&self.rat(self.dc[j]).mul(&w.d_left(self.c[j])));
                }
            }
            (_, false) => {
                for i in 0..n {
                    for j in 0..n {
                        let coeff = RationalFn::from(&self.var(self.dp[i]) * &self.e[i][j]);
                        acc = acc.add(&coeff.mul(&w.d_left(self.c[j])));
                    }
                }
            }
            (_, true) => {
                for i in 0..n {
                    for j in 0..n {
                        acc = acc.add(
                            &self
                                .rat(self.dc[i])
                                .mul(&self.e_inv[i][j])
                                .mul(&w.d_left(self.p[j])),
                        );
                    }
                }
            }
        }
        acc.simplified()
    }

    /// Nonzero anticommutators among `[del^a, del^b]`, `[del~^a, del~^b]`
    /// and `[del^a, del~^a]` applied to `w`.
    pub fn relation_residuals(&self, w: &RationalFn) -> Vec<(String, RationalFn)> {
        let name = |a: usize, t: bool| {
            if t {
                format!("del~{a}")
            } else {
                format!("del{a}")
            }
        };
        let mut pairs = Vec::new();
        for t in [false, true] {
            pairs.extend([((1, t), (1, t)), ((2, t), (2, t)), ((1, t), (2, t))]);
        }
        pairs.extend([((1, false), (1, true)), ((2, false), (2, true))]);
        pairs
            .into_iter()
            .map(|((a, s), (b, t))| {
                let x = self.para_dolbeault(a, s, &self.para_dolbeault(b, t, w));
                let y = self.para_dolbeault(b, t, &self.para_dolbeault(a, s, w));
                (
                    format!("[{},{}]", name(a, s), name(b, t)),
                    x.add(&y).simplified(),
                )
            })
            .filter(|(_, r)| !r.is_zero())
            .collect()
    }

    /// `F = -1/2 dp_j dp_i F^ij`.
    pub fn f_two_form(&self) -> SuperPoly {
        let n = self.p.len();
        let mut acc = SuperPoly::zero(&self.table);
        for i in 0..n {
            for j in 0..n {
                acc = &acc + &(&(&self.var(self.dp[j]) * &self.var(self.dp[i])) * &self.f[i][j]);
            }
        }
        acc.scale(&Q::new((-1).into(), 2.into()))
    }

    /// `del^a F` for `a = 1, 2`.
    pub fn f_closedness(&self) -> CheckReport {
        let f = RationalFn::from(self.f_two_form());
        let v = (1..=2)
            .filter_map(|a| {
                let r = self.para_dolbeault(a, false, &f);
                (!r.is_zero()).then(|| Violation {
                    location: format!("del{a} F"),
                    residual: r.render(),
                })
            })
            .collect();
        CheckReport::new("f-closedness", v)
    }

    /// `theta = -dp_j q^j`.
    pub fn potential(&self) -> SuperPoly {
        (0..self.p.len()).fold(SuperPoly::zero(&self.table), |acc, j| {
            &acc - &(&self.var(self.dp[j]) * &self.var(self.q[j]))
        })
    }

    /// `omega = dp_j dq^j`.
    pub fn symplectic_form(&self) -> SuperPoly {
        (0..self.p.len()).fold(SuperPoly::zero(&self.table), |acc, j| {
            &acc + &(&self.var(self.dp[j]) * &self.var(self.dq[j]))
        })
    }

    /// `omega = d theta`.
    pub fn potential_report(&self) -> CheckReport {
        let r = self
            .d(&self.potential().into())
            .sub(&self.symplectic_form().into());
        let v = if r.is_zero() {
            vec![]
        } else {
            vec![Violation {
                location: "d theta - omega".into(),
                residual: r.render(),
            }]
        };
        CheckReport::new("presymplectic-potential", v)
    }

    /// `theta' = theta + del^1 B` for the shift `q' = q - d_l B / dp`.
    pub fn gauge_shift_report(&self, b: &SuperPoly) -> CheckReport {
        let b = self.lift(b);
        let shifted = (0..self.p.len()).fold(SuperPoly::zero(&self.table), |acc, j| {
            &acc - &(&self.var(self.dp[j]) * &(&self.var(self.q[j]) - &b.d_left(self.p[j])))
        });
        let expected =
            RationalFn::from(self.potential()).add(&self.para_dolbeault(1, false, &b.into()));
        let r = RationalFn::from(shifted).sub(&expected).simplified();
        let v = if r.is_zero() {
            vec![]
        } else {
            vec![Violation {
                location: "theta' - theta - del1 B".into(),
                residual: r.render(),
            }]
        };
        CheckReport::new("potential-gauge", v)
    }
}

fn lift_into(table: &Arc<VarTable>, x: &SuperPoly) -> SuperPoly {
    let images: Vec<SuperPoly> = (0..x.table().len())
        .map(|v| SuperPoly::var(table, v))
        .collect();
    x.compose(table, &images).expect("ids are preserved")
}

/// Gauge potential removing `F` from a chart with `E = Id`.
#[derive(Clone, Debug, PartialEq)]
pub struct KilledF {
    pub b: SuperPoly,
    pub chart: TriplecticChart,
}

/// `B` from the bi-Poincare homotopy of `beta = 1/2 eta_i F^ij eta_j`, and
/// the chart with positions shifted by `-d_l B / dp`.
pub fn kill_f(chart: &TriplecticChart, degree: u32) -> Result<KilledF> {
    let n = chart.n();
    let table = chart.table();
    let ef = extract_ef(chart)?;
    let id = identity_poly(table, n);
    if !ef
        .e
        .iter()
        .flatten()
        .zip(id.iter().flatten())
        .all(|(x, y)| agree(x, y, chart.truncation))
    {
        return Err(Error::EnotIdentity);
    }
    if ef.f.iter().flatten().all(|x| x.is_zero()) {
        return Ok(KilledF {
            b: SuperPoly::zero(table),
            chart: chart.clone(),
        });
    }
    let mut vars = table.vars().to_vec();
    let mut eta = Vec::new();
    for (i, &p) in chart.p.iter().enumerate() {
        eta.push(vars.len());
        vars.push(GradedVariable::new(
            &format!("eta{}", i + 1),
            (table.parity(p) + 1) % 2,
            0,
            Role::Auxiliary,
            i as u32 + 1,
        ));
    }
    let ext = VarTable::new(vars)?;
    let up: Vec<SuperPoly> = (0..table.len()).map(|v| SuperPoly::var(&ext, v)).collect();
    let eps = chart.epsilon();
    let mut beta = SuperPoly::zero(&ext);
    for i in 0..n {
        for j in 0..n {
            let fij = ef.f[i][j]
                .clone()
                .with_truncation(None)
                .compose(&ext, &up)?;
            let term = &(&SuperPoly::var(&ext, eta[i]) * &fij) * &SuperPoly::var(&ext, eta[j]);
            let odd = ext.parity(eta[j]) * eps % 2 == 1;
            beta = if odd { &beta - &term } else { &beta + &term };
        }
    }
    let beta = beta.scale(&Q::new(1.into(), 2.into()));
    let top = beta.degree().unwrap_or(0);
    let algebra = TriGradedAlgebra::from_vars(&ext, chart.p.clone(), chart.c.clone(), eta.clone())?
        .with_degree(DEFAULT_DEGREE.max(top + 2));
    let h = algebra.homotopy(&beta)?;
    let mut down: Vec<SuperPoly> = (0..table.len()).map(|v| SuperPoly::var(table, v)).collect();
    down.extend(eta.iter().map(|_| SuperPoly::zero(table)));
    let b = -&h.eta.compose(table, &down)?;
    let out = apply_f3(chart, &F3Generator::gauge(chart, b.clone()), degree)?;
    let residual = raw_ef(&out.chart).f;
    let zero = SuperPoly::zero(table);
    if let Some(x) = residual
        .iter()
        .flatten()
        .find(|x| !agree(x, &zero, out.chart.truncation))
    {
        return Err(Error::NotClosed(format!("F' = {x}")));
    }
    Ok(KilledF {
        b,
        chart: out.chart,
    })
}

/// One pipeline stage with its generator data as expression strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub data: BTreeMap<String, String>,
}

fn record(stage: &str, data: &[(&str, String)]) -> StageRecord {
    StageRecord {
        stage: stage.into(),
        data: data
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect(),
    }
}

pub fn render_list(xs: &[SuperPoly]) -> String {
    format!(
        "[{}]",
        xs.iter().map(|x| x.render()).collect::<Vec<_>>().join(", ")
    )
}

pub fn render_matrix(m: &Matrix<SuperPoly>) -> String {
    format!(
        "[{}]",
        m.iter()
            .map(|r| render_list(r))
            .collect::<Vec<_>>()
            .join(", ")
    )
}

pub fn render_point(table: &VarTable, point: &[(VarId, Q)]) -> String {
    point
        .iter()
        .map(|(v, x)| format!("{}={}", table.var(*v).name, fmt_q(x)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Successful pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct BiDarbouxResult {
    pub chart: TriplecticChart,
    pub base_point: Vec<(VarId, Q)>,
    pub factorization: Factorization,
    /// New momenta `p' = A(p)` in translated coordinates.
    pub momenta: Vec<SuperPoly>,
    /// New Casimirs `c' = gamma(c)` in translated coordinates.
    pub casimirs: Vec<SuperPoly>,
    pub gauge: SuperPoly,
    pub stages: Vec<StageRecord>,
    /// Degree up to which the final chart is verified, when truncated.
    pub verified_to: Option<u32>,
    pub report: CheckReport,
}

/// Non-factorizable chart: the failed factorization and its witnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstruction {
    pub base_point: Vec<(VarId, Q)>,
    pub factorization: CheckReport,
    pub differential: CheckReport,
    pub curvature: CheckReport,
    pub stages: Vec<StageRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PipelineOutcome {
    BiDarboux(Box<BiDarbouxResult>),
    Obstructed(Box<Obstruction>),
}

impl PipelineOutcome {
    pub fn is_bi_darboux(&self) -> bool {
        matches!(self, PipelineOutcome::BiDarboux(_))
    }
}

fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(stage))
}

/// Translation moving `point` to the origin.
pub fn translate(chart: &TriplecticChart, point: &[(VarId, Q)]) -> Result<TriplecticChart> {
    let table = chart.table();
    let mut forward: Vec<RationalFn> = Vec::new();
    let mut backward = chart.identity_images();
    for &v in chart.coords() {
        let shift = SuperPoly::constant(table, value_at(point, v));
        forward.push((&chart.var(v) - &shift).into());
        backward[v] = &chart.var(v) + &shift;
    }
    change_coordinates(chart, &forward, &backward, chart.truncation, DEFAULT_DEGREE)
}

/// Factorize, integrate both Jacobians, make `E = Id` by an F3 map and a
/// Casimir reparametrization, then remove `F` by a gauge shift.
///
/// Series stages run to degree `degree + WORKING_MARGIN`; a truncated
/// result is verified up to `degree`.
pub fn bidarboux_pipeline(
    chart: &TriplecticChart,
    base_point: Option<&[(VarId, Q)]>,
    degree: u32,
) -> Result<PipelineOutcome> {
    let work = degree + WORKING_MARGIN;
    let base = chart.base();
    let table = chart.table().clone();
    let mut stages = Vec::new();
    let ef = staged("extract", extract_ef(chart))?;
    stages.push(record(
        "extract",
        &[("E", render_matrix(&ef.e)), ("F", render_matrix(&ef.f))],
    ));
    let closed = staged("closedness", check_closedness(&base, &ef.e))?;
    stages.push(record(
        "closedness",
        &[("A", render_list(&closed.e_potentials))],
    ));
    let point = match base_point {
        Some(p) if invertible_at(&ef.e, p) => p.to_vec(),
        Some(_) => return Err(Error::BasePointSingular.at_stage("base-point")),
        None => staged("base-point", default_base_point(&base, &ef.e))?,
    };
    stages.push(record(
        "base-point",
        &[("point", render_point(&table, &point))],
    ));

    let (candidate, residual) = staged("factorize", factorization_candidate(&base, &ef.e, &point))?;
    if !residual.passed {
        let differential = staged("factorize", differential_factorization_report(&base, &ef.e))?;
        let obata = staged(
            "factorize",
            parahyper::obata_connection(&base, &to_rational(&ef.e)),
        )?;
        let curvature = obata.curvature().report(&base);
        stages.push(record("factorize", &[("status", "obstructed".into())]));
        return Ok(PipelineOutcome::Obstructed(Box::new(Obstruction {
            base_point: point,
            factorization: residual,
            differential,
            curvature,
            stages,
        })));
    }
    stages.push(record(
        "factorize",
        &[
            ("P", render_matrix(&candidate.p_factor)),
            ("C", render_matrix(&candidate.c_factor)),
        ],
    ));

    let mut current = chart.clone();
    if point.iter().any(|(_, x)| !x.is_zero()) {
        current = staged("translate", translate(&current, &point))?;
        stages.push(record(
            "translate",
            &[("point", render_point(&table, &point))],
        ));
    }
    let at_origin: Vec<(VarId, Q)> = point.iter().map(|(v, _)| (*v, Q::zero())).collect();
    let moved = staged("factorize", extract_ef(&current))?;
    let local = staged("factorize", factorize(&base, &moved.e, &at_origin))?.ok_or_else(|| {
        Error::NotIntegrable("factorization lost after translation".into()).at_stage("factorize")
    })?;

    let momenta = staged(
        "integrate-p",
        integrate_jacobian(&local.p_factor, &current.p),
    )?;
    stages.push(record("integrate-p", &[("A", render_list(&momenta))]));
    let gen = F3Generator {
        a: momenta.clone(),
        b: SuperPoly::zero(&table),
    };
    current = staged("f3", apply_f3(&current, &gen, work))?.chart;
    stages.push(record(
        "f3",
        &[("A", render_list(&momenta)), ("B", "0".into())],
    ));

    let c_inv = staged(
        "integrate-c",
        invert_matrix(&to_rational(&local.c_factor)).map_err(|_| Error::ESingular),
    )?;
    let casimirs = staged(
        "integrate-c",
        integrate_rational_jacobian(&c_inv, &current.c, work),
    )?;
    stages.push(record("integrate-c", &[("gamma", render_list(&casimirs))]));
    current = staged(
        "reparametrize-c",
        reparametrize_casimirs(&current, &casimirs, work),
    )?
    .chart;
    stages.push(record(
        "reparametrize-c",
        &[("gamma", render_list(&casimirs))],
    ));

    let killed = staged("kill-f", kill_f(&current, work))?;
    current = killed.chart;
    stages.push(record("kill-f", &[("B", killed.b.render())]));

    let verified_to = current.truncation.map(|_| degree);
    let report = canonical_report(&current, verified_to);
    let mut data = vec![(
        "status",
        if report.passed {
            "canonical"
        } else {
            "not canonical"
        }
        .to_string(),
    )];
    if let Some(d) = verified_to {
        data.push(("verified-to", d.to_string()));
    }
    stages.push(record("verify", &data));
    Ok(PipelineOutcome::BiDarboux(Box::new(BiDarbouxResult {
        chart: current,
        base_point: point,
        factorization: candidate,
        momenta,
        casimirs,
        gauge: killed.b,
        stages,
        verified_to,
        report,
    })))
}

/// Replays the recorded generators of a pipeline run on its input.
pub fn replay(
    chart: &TriplecticChart,
    result: &BiDarbouxResult,
    degree: u32,
) -> Result<TriplecticChart> {
    let work = degree + WORKING_MARGIN;
    let mut current = chart.clone();
    if result.base_point.iter().any(|(_, x)| !x.is_zero()) {
        current = translate(&current, &result.base_point)?;
    }
    let zero = SuperPoly::zero(current.table());
    current = apply_f3(
        &current,
        &F3Generator {
            a: result.momenta.clone(),
            b: zero,
        },
        work,
    )?
    .chart;
    current = reparametrize_casimirs(&current, &result.casimirs, work)?.chart;
    Ok(apply_f3(
        &current,
        &F3Generator::gauge(&current, result.gauge.clone()),
        work,
    )?
    .chart)
}

/// Bi-canonical map data between two bi-Darboux charts.
#[derive(Clone, Debug, PartialEq)]
pub struct BiCanonical {
    pub report: CheckReport,
    /// Common constant Jacobian `J^i_j = d p'_j / d p_i = d c'_j / d c_i`.
    pub jacobian: Option<Matrix<Q>>,
    /// `b^i = q^i - J^i_j q'^j`.
    pub shift: Vec<SuperPoly>,
    /// Potentials `B^1`, `B^2` with `b^i = d B^1/dp_i = d B^2/dc_i` for a
    /// pure gauge map.
    pub potentials: Option<(SuperPoly, SuperPoly)>,
}

/// Checks a map `z' = images(z)` out of a bi-Darboux chart; `images` lists
/// the new coordinates in chart order.
pub fn check_bi_canonical(source: &TriplecticChart, images: &[SuperPoly]) -> Result<BiCanonical> {
    let n = source.n();
    let table = source.table();
    let mut v = canonical_report(source, None).violations;
    for x in &mut v {
        x.location = format!("source {}", x.location);
    }
    let canonical = canonical_on(table, source.epsilon());
    let dim = 3 * n;
    for k in 1..=2 {
        for a in 0..dim {
            for b in a..dim {
                let r = source.pencil.get(k).bracket(&images[a], &images[b])?;
                let expected = &canonical.pencil.get(k).pi[a][b];
                if r != *expected {
                    let (u, w) = (source.coords()[a], source.coords()[b]);
                    v.push(Violation {
                        location: format!("{{{}',{}'}}^{k}", source.name(u), source.name(w)),
                        residual: format!("{}, expected {}", r.render(), expected.render()),
                    });
                }
            }
        }
    }
    let jac = |new: &[SuperPoly], old: &[VarId]| -> Option<Matrix<Q>> {
        old.iter()
            .map(|&x| new.iter().map(|y| y.d_left(x).as_constant()).collect())
            .collect()
    };
    let j1 = jac(&images[n..2 * n], &source.p);
    let j2 = jac(&images[2 * n..], &source.c);
    let render_q = |m: &Matrix<Q>| {
        format!(
            "{:?}",
            m.iter()
                .map(|r| r.iter().map(fmt_q).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        )
    };
    let jacobian = match (j1, j2) {
        (Some(a), Some(b)) if a == b => Some(a),
        (Some(a), Some(b)) => {
            v.push(Violation {
                location: "J1 - J2".into(),
                residual: format!("{} vs {}", render_q(&a), render_q(&b)),
            });
            None
        }
        _ => {
            v.push(Violation {
                location: "J".into(),
                residual: "Jacobians are not constant".into(),
            });
            None
        }
    };
    let mut shift = Vec::new();
    let mut potentials = None;
    if let Some(j) = &jacobian {
        for i in 0..n {
            let lin = (0..n).fold(SuperPoly::zero(table), |acc, k| {
                &acc + &images[k].scale(&j[i][k])
            });
            let b = &source.var(source.q[i]) - &lin;
            if source.q.iter().any(|&x| b.depends_on(x)) {
                v.push(Violation {
                    location: format!("b{} depends on positions", i + 1),
                    residual: b.render(),
                });
            }
            shift.push(b);
        }
        let unit =
            (0..n).all(|i| (0..n).all(|k| j[i][k] == if i == k { Q::one() } else { Q::zero() }));
        let pure_gauge = unit && (n..dim).all(|a| images[a] == source.var(source.coords()[a]));
        if pure_gauge && v.is_empty() {
            match (
                integrate_gradient(&shift, &source.p),
                integrate_gradient(&shift, &source.c),
            ) {
                (Ok(b1), Ok(b2)) => potentials = Some((b1, b2)),
                _ => v.push(Violation {
                    location: "gauge shift".into(),
                    residual: render_list(&shift),
                }),
            }
        }
    }
    Ok(BiCanonical {
        report: CheckReport::new("bi-canonical", v),
        jacobian,
        shift,
        potentials,
    })
}
