use num::{One, Signed, Zero};

use super::poly::SuperPoly;
use super::rational::RationalFn;
use super::Q;
use crate::error::{Error, Result};

pub type Matrix<T> = Vec<Vec<T>>;

/// Inverse of a square matrix over the graded ring.
///
/// The matrix is brought to a common body denominator and split into its
/// body part `M0` (commutative, inverted through the adjugate) and a
/// nilpotent remainder `N`; then `M^-1 = sum_k (-M0^-1 N)^k M0^-1`, which
/// terminates. All products keep their left-to-right order.
pub fn invert_matrix(m: &Matrix<RationalFn>) -> Result<Matrix<RationalFn>> {
    let n = m.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let t = m[0][0].table().clone();
    let mut dens: Vec<SuperPoly> = Vec::new();
    for x in m.iter().flatten() {
        if !x.denom().is_constant() && !dens.contains(x.denom()) {
            dens.push(x.denom().clone());
        }
    }
    let delta = dens.iter().fold(SuperPoly::one(&t), |acc, d| &acc * d);
    let mhat: Matrix<SuperPoly> = m
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| {
                    let cof = delta
                        .div_exact(x.denom())
                        .expect("denominator divides the product");
                    x.numer() * &cof
                })
                .collect()
        })
        .collect();
    let m0: Matrix<SuperPoly> = mhat
        .iter()
        .map(|row| row.iter().map(|x| x.body()).collect())
        .collect();
    let det = det_poly(&m0);
    if det.is_zero() {
        for c in 0..n {
            if (0..n).any(|r| !mhat[r][c].is_zero() && mhat[r][c].parity() != Some(0)) {
                return Err(Error::OddPivot(c));
            }
        }
        return Err(Error::NotInvertible);
    }
    let adj = adjugate(&m0);
    let m0inv: Matrix<RationalFn> = adj
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| RationalFn::new(x.clone(), det.clone()).map(|r| r.simplified()))
                .collect()
        })
        .collect::<Result<_>>()?;
    let soul: Matrix<RationalFn> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| RationalFn::from(&mhat[i][j] - &m0[i][j]))
                .collect()
        })
        .collect();
    let mut acc = m0inv.clone();
    if soul.iter().flatten().any(|x| !x.is_zero()) {
        let step: Matrix<RationalFn> = mat_mul(&m0inv, &soul)
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.neg()).collect())
            .collect();
        let mut term = m0inv;
        let mut rounds = 0;
        loop {
            term = mat_mul(&step, &term);
            if term.iter().flatten().all(|x| x.is_zero()) {
                break;
            }
            rounds += 1;
            if rounds > t.len() + 1 {
                return Err(Error::NotInvertible);
            }
            for i in 0..n {
                for j in 0..n {
                    acc[i][j] = acc[i][j].add(&term[i][j]);
                }
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| x.mul_poly(&delta).simplified())
                .collect()
        })
        .collect())
}

/// Determinant of a matrix of commuting (body) polynomials.
pub fn det_poly(m: &Matrix<SuperPoly>) -> SuperPoly {
    let n = m.len();
    if n == 0 {
        return SuperPoly::one(m.first().and_then(|r| r.first()).expect("nonempty").table());
    }
    let t = m[0][0].table().clone();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = SuperPoly::zero(&t);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Matrix<SuperPoly> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        let term = &m[0][j] * &det_poly(&minor);
        acc = if j % 2 == 0 {
            &acc + &term
        } else {
            &acc - &term
        };
    }
    acc
}

/// Adjugate of a matrix of commuting polynomials.
pub fn adjugate(m: &Matrix<SuperPoly>) -> Matrix<SuperPoly> {
    let n = m.len();
    let t = m[0][0].table().clone();
    if n == 1 {
        return vec![vec![SuperPoly::one(&t)]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let minor: Matrix<SuperPoly> = m
                        .iter()
                        .enumerate()
                        .filter(|&(r, _)| r != j)
                        .map(|(_, row)| {
                            row.iter()
                                .enumerate()
                                .filter(|&(c, _)| c != i)
                                .map(|(_, x)| x.clone())
                                .collect()
                        })
                        .collect();
                    let d = det_poly(&minor);
                    if (i + j) % 2 == 0 {
                        d
                    } else {
                        -d
                    }
                })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &Matrix<RationalFn>, b: &Matrix<RationalFn>) -> Matrix<RationalFn> {
    let t = a[0][0].table().clone();
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = RationalFn::zero(&t);
                    for l in 0..k {
                        s = s.add(&a[i][l].mul(&b[l][j]));
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn mat_mul_poly(a: &Matrix<SuperPoly>, b: &Matrix<SuperPoly>) -> Matrix<SuperPoly> {
    let t = a[0][0].table().clone();
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = SuperPoly::zero(&t);
                    for l in 0..k {
                        s = &s + &(&a[i][l] * &b[l][j]);
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn row_reduce(mut a: Matrix<Q>) -> (Q, usize) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut det = Q::from_integer(1.into());
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows)
            .filter(|&r| !a[r][c].is_zero())
            .max_by(|&x, &y| a[x][c].abs().cmp(&a[y][c].abs()))
        else {
            det = Q::zero();
            continue;
        };
        if p != rank {
            a.swap(p, rank);
            det = -det;
        }
        let piv = a[rank][c].clone();
        det *= &piv;
        for r in rank + 1..rows {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &piv;
            for j in c..cols {
                let v = &f * &a[rank][j];
                a[r][j] -= v;
            }
        }
        rank += 1;
    }
    if rank < rows {
        det = Q::zero();
    }
    (det, rank)
}

/// Determinant of a square rational matrix.
pub fn det_q(a: &Matrix<Q>) -> Q {
    if a.is_empty() {
        return Q::from_integer(1.into());
    }
    row_reduce(a.clone()).0
}

/// Rank of a rational matrix.
pub fn rank_q(a: &Matrix<Q>) -> usize {
    row_reduce(a.clone()).1
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(a: &mut Matrix<Q>) -> Vec<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    for c in 0..cols {
        let r0 = pivots.len();
        if r0 == rows {
            break;
        }
        let Some(p) = (r0..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(p, r0);
        let piv = a[r0][c].clone();
        for x in a[r0].iter_mut() {
            *x /= &piv;
        }
        for r in 0..rows {
            if r == r0 || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for j in c..cols {
                let v = &f * &a[r0][j];
                a[r][j] -= v;
            }
        }
        pivots.push(c);
    }
    pivots
}

/// Unique solution of `a x = b` for square nonsingular `a`.
pub fn solve_q(a: &Matrix<Q>, b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut aug: Matrix<Q> = a
        .iter()
        .zip(b)
        .map(|(row, v)| row.iter().cloned().chain([v.clone()]).collect())
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.last().is_some_and(|&c| c >= n) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n].clone()).collect())
}

/// Basis of the kernel of `a` (columns count taken from `cols`).
pub fn nullspace_q(a: &Matrix<Q>, cols: usize) -> Vec<Vec<Q>> {
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}
