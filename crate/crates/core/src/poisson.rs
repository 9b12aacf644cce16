//! Poisson structures given by their fundamental bracket matrices, pencil
//! axioms, Casimirs and global `GL(2)` rotations.

use std::sync::Arc;

use crate::error::{Error, Result};
pub use crate::report::{CheckReport, Violation};
use crate::superalgebra::{rank_q, Matrix, RationalFn, SuperPoly, VarId, VarTable, Q};
use num::{One, Zero};

/// Ordered coordinates `z^A` of a chart together with the intrinsic parity
/// shared by the brackets living on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub table: Arc<VarTable>,
    pub coords: Vec<VarId>,
    pub epsilon: u8,
}

impl Chart {
    pub fn new(table: Arc<VarTable>, coords: Vec<VarId>, epsilon: u8) -> Self {
        Chart {
            table,
            coords,
            epsilon: epsilon & 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_parity(&self, a: usize) -> u8 {
        self.table.parity(self.coords[a])
    }

    pub fn name(&self, a: usize) -> &str {
        &self.table.var(self.coords[a]).name
    }

    pub fn coord(&self, a: usize) -> SuperPoly {
        SuperPoly::var(&self.table, self.coords[a])
    }
}

/// Sign exponent of graded antisymmetry for brackets of parity `eps`.
pub fn antisym_sign(ef: u8, eg: u8, eps: u8) -> bool {
    ((ef + eps) * (eg + eps)) % 2 == 1
}

/// `{f,g} = (f d_r/dz^A) Pi^{AB} (d_l/dz^B g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonStructure {
    pub chart: Chart,
    pub pi: Matrix<SuperPoly>,
}

impl PoissonStructure {
    pub fn new(chart: Chart, pi: Matrix<SuperPoly>) -> Self {
        PoissonStructure { chart, pi }
    }

    pub fn zero(chart: &Chart) -> Self {
        let n = chart.dim();
        let z = SuperPoly::zero(&chart.table);
        PoissonStructure {
            chart: chart.clone(),
            pi: vec![vec![z; n]; n],
        }
    }

    pub fn epsilon(&self) -> u8 {
        self.chart.epsilon
    }

    /// Sets `{z^A, z^B} = value` and fills `{z^B, z^A}` by antisymmetry.
    pub fn set(&mut self, a: usize, b: usize, value: SuperPoly) {
        let sign = antisym_sign(
            self.chart.coord_parity(a),
            self.chart.coord_parity(b),
            self.epsilon(),
        );
        self.pi[b][a] = if sign { value.clone() } else { -&value };
        self.pi[a][b] = value;
    }

    fn check_table(&self, f: &SuperPoly) -> Result<()> {
        if VarTable::same(f.table(), &self.chart.table) {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    pub fn bracket(&self, f: &SuperPoly, g: &SuperPoly) -> Result<SuperPoly> {
        self.check_table(f)?;
        self.check_table(g)?;
        let n = self.chart.dim();
        let left: Vec<SuperPoly> = self.chart.coords.iter().map(|&v| f.d_right(v)).collect();
        let right: Vec<SuperPoly> = self.chart.coords.iter().map(|&v| g.d_left(v)).collect();
        let mut acc = SuperPoly::zero(&self.chart.table);
        for a in 0..n {
            if left[a].is_zero() {
                continue;
            }
            for b in 0..n {
                if right[b].is_zero() || self.pi[a][b].is_zero() {
                    continue;
                }
                acc = &acc + &(&(&left[a] * &self.pi[a][b]) * &right[b]);
            }
        }
        Ok(acc)
    }

    pub fn bracket_rat(&self, f: &RationalFn, g: &RationalFn) -> Result<RationalFn> {
        if !VarTable::same(f.table(), &self.chart.table)
            || !VarTable::same(g.table(), &self.chart.table)
        {
            return Err(Error::ChartMismatch);
        }
        let n = self.chart.dim();
        let left: Vec<RationalFn> = self.chart.coords.iter().map(|&v| f.d_right(v)).collect();
        let right: Vec<RationalFn> = self.chart.coords.iter().map(|&v| g.d_left(v)).collect();
        let mut acc = RationalFn::zero(&self.chart.table);
        for a in 0..n {
            if left[a].is_zero() {
                continue;
            }
            for b in 0..n {
                if right[b].is_zero() || self.pi[a][b].is_zero() {
                    continue;
                }
                acc = acc.add(&left[a].mul_poly(&self.pi[a][b]).mul(&right[b]));
            }
        }
        Ok(acc.simplified())
    }

    /// Entrywise graded antisymmetry and parity `eps_A + eps + eps_B`.
    pub fn check_antisymmetry(&self) -> CheckReport {
        let n = self.chart.dim();
        let eps = self.epsilon();
        let mut v = Vec::new();
        for a in 0..n {
            for b in a..n {
                let (ea, eb) = (self.chart.coord_parity(a), self.chart.coord_parity(b));
                let flipped = if antisym_sign(ea, eb, eps) {
                    self.pi[b][a].clone()
                } else {
                    -&self.pi[b][a]
                };
                let res = &self.pi[a][b] - &flipped;
                if !res.is_zero() {
                    v.push(Violation {
                        location: format!("{{{},{}}}", self.chart.name(a), self.chart.name(b)),
                        residual: res.render(),
                    });
                }
                let want = (ea + eb + eps) % 2;
                if !self.pi[a][b].is_zero() && self.pi[a][b].parity() != Some(want) {
                    v.push(Violation {
                        location: format!(
                            "parity {{{},{}}}",
                            self.chart.name(a),
                            self.chart.name(b)
                        ),
                        residual: self.pi[a][b].render(),
                    });
                }
            }
        }
        CheckReport::new("antisymmetry", v)
    }

    pub fn linear_combination(&self, l1: &Q, other: &PoissonStructure, l2: &Q) -> PoissonStructure {
        let n = self.chart.dim();
        let pi = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| &self.pi[a][b].scale(l1) + &other.pi[a][b].scale(l2))
                    .collect()
            })
            .collect();
        PoissonStructure {
            chart: self.chart.clone(),
            pi,
        }
    }

    /// Plain Jacobi identity on all coordinate triples.
    pub fn check_jacobi(&self) -> CheckReport {
        let mut r = symmetrized_jacobi_pairs(self, self, &[(1, 1)]);
        r.check = "jacobi".into();
        r
    }

    /// True iff `{f, z^A} = 0` for every coordinate.
    pub fn is_casimir(&self, f: &SuperPoly) -> bool {
        (0..self.chart.dim()).all(|a| {
            self.bracket(f, &self.chart.coord(a))
                .map(|x| x.is_zero())
                .unwrap_or(false)
        })
    }

    /// Rank over the rationals of the body of `Pi` at a point.
    pub fn body_rank(&self, point: &[(VarId, Q)]) -> Result<usize> {
        let m: Matrix<Q> = self
            .pi
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| x.eval_body(point).ok_or(Error::DivisionByZero))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(rank_q(&m))
    }
}

/// Graded cyclic sum of `{{f,g}^a,h}^b + {{f,g}^b,h}^a`.
pub fn symmetrized_jacobiator(
    s1: &PoissonStructure,
    s2: &PoissonStructure,
    f: &SuperPoly,
    g: &SuperPoly,
    h: &SuperPoly,
) -> Result<SuperPoly> {
    let eps = s1.epsilon();
    let triple = [f, g, h];
    let mut acc = SuperPoly::zero(&s1.chart.table);
    for k in 0..3 {
        let (x, y, z) = (triple[k], triple[(k + 1) % 3], triple[(k + 2) % 3]);
        let sign = antisym_sign(x.eps(), z.eps(), eps);
        let t = &s2.bracket(&s1.bracket(x, y)?, z)? + &s1.bracket(&s2.bracket(x, y)?, z)?;
        acc = if sign { &acc - &t } else { &acc + &t };
    }
    Ok(acc)
}

fn symmetrized_jacobi_pairs(
    s1: &PoissonStructure,
    s2: &PoissonStructure,
    pairs: &[(usize, usize)],
) -> CheckReport {
    let n = s1.chart.dim();
    let both = [s1, s2];
    let mut v = Vec::new();
    for &(a, b) in pairs {
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let (f, g, h) = (s1.chart.coord(i), s1.chart.coord(j), s1.chart.coord(k));
                    let res = symmetrized_jacobiator(both[a - 1], both[b - 1], &f, &g, &h)
                        .expect("structures share a chart");
                    if !res.is_zero() {
                        v.push(Violation {
                            location: format!(
                                "({a},{b}) ({},{},{})",
                                s1.chart.name(i),
                                s1.chart.name(j),
                                s1.chart.name(k)
                            ),
                            residual: res.render(),
                        });
                    }
                }
            }
        }
    }
    CheckReport::new("symmetrized-jacobi", v)
}

/// Two Poisson structures of common parity on one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonPencil {
    pub first: PoissonStructure,
    pub second: PoissonStructure,
}

impl PoissonPencil {
    pub fn new(first: PoissonStructure, second: PoissonStructure) -> Result<Self> {
        if first.chart != second.chart {
            return Err(Error::ChartMismatch);
        }
        Ok(PoissonPencil { first, second })
    }

    pub fn get(&self, a: usize) -> &PoissonStructure {
        if a == 1 {
            &self.first
        } else {
            &self.second
        }
    }

    /// Symmetrized Jacobi identity for all index pairs and coordinate triples.
    pub fn check_symmetrized_jacobi(&self) -> CheckReport {
        symmetrized_jacobi_pairs(&self.first, &self.second, &[(1, 1), (2, 2), (1, 2)])
    }

    /// Verifies `{xi, xi'}^c = 0` for all listed Casimirs and both brackets;
    /// the lists are first checked to be Casimirs of bracket 1 and 2.
    pub fn check_mutual_involutivity(
        &self,
        casimirs_first: &[SuperPoly],
        casimirs_second: &[SuperPoly],
    ) -> Result<CheckReport> {
        for (list, a) in [(casimirs_first, 1), (casimirs_second, 2)] {
            for f in list {
                if !self.get(a).is_casimir(f) {
                    return Err(Error::CasimirPrecheckFailed(f.render(), a));
                }
            }
        }
        Ok(self.involutivity_brackets(casimirs_first, casimirs_second))
    }

    /// The involutivity brackets alone, without the Casimir precheck.
    pub fn involutivity_brackets(
        &self,
        casimirs_first: &[SuperPoly],
        casimirs_second: &[SuperPoly],
    ) -> CheckReport {
        let all: Vec<&SuperPoly> = casimirs_first.iter().chain(casimirs_second).collect();
        let mut v = Vec::new();
        for c in 1..=2 {
            for (i, f) in all.iter().enumerate() {
                for g in &all[i..] {
                    let r = self.get(c).bracket(f, g).expect("same chart");
                    if !r.is_zero() {
                        v.push(Violation {
                            location: format!("{{{f},{g}}}^{c}"),
                            residual: r.render(),
                        });
                    }
                }
            }
        }
        CheckReport::new("involutivity", v)
    }

    /// `{.,.}'^b = {.,.}^a (g^-1)_a^b`, a left action of `GL(2)`.
    pub fn gl2_rotate(&self, g: &[[Q; 2]; 2]) -> Result<PoissonPencil> {
        let det = &g[0][0] * &g[1][1] - &g[0][1] * &g[1][0];
        if det.is_zero() {
            return Err(Error::SingularGroupElement);
        }
        let inv = [
            [&g[1][1] / &det, -&g[0][1] / &det],
            [-&g[1][0] / &det, &g[0][0] / &det],
        ];
        let first = self
            .first
            .linear_combination(&inv[0][0], &self.second, &inv[1][0]);
        let second = self
            .first
            .linear_combination(&inv[0][1], &self.second, &inv[1][1]);
        Ok(PoissonPencil { first, second })
    }

    /// Jacobi identity for `l1 Pi^1 + l2 Pi^2`.
    pub fn combination_jacobi(&self, l1: &Q, l2: &Q) -> CheckReport {
        self.first
            .linear_combination(l1, &self.second, l2)
            .check_jacobi()
    }
}

/// `GL(2)` identity element.
pub fn gl2_identity() -> [[Q; 2]; 2] {
    [[Q::one(), Q::zero()], [Q::zero(), Q::one()]]
}
