//! Split quaternions, `so(2,1)` and the adjoint double cover
//! `SL(2) -> SO+(2,1)` over exact rationals.
//!
//! The Minkowski metric is `diag(1, -1, 1)`; the middle slot is temporal.
//! Generators: `t0 = 1`, `t1 = [[0,1],[1,0]]`, `t2 = [[0,-1],[1,0]]`,
//! `t3 = [[1,0],[0,-1]]`. Greek indices are 1-based in the API.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::report::{CheckReport, Violation};
use crate::superalgebra::{fmt_q, q, qi, Q};

pub type Mat2 = [[Q; 2]; 2];
pub type Mat3 = [[Q; 3]; 3];

fn m2(a: [[i64; 2]; 2]) -> Mat2 {
    a.map(|r| r.map(qi))
}

fn m3(a: [[i64; 3]; 3]) -> Mat3 {
    a.map(|r| r.map(qi))
}

/// Split-quaternion unit `t_alpha`, `alpha` in `0..=3`.
pub fn t(alpha: usize) -> Mat2 {
    match alpha {
        0 => m2([[1, 0], [0, 1]]),
        1 => m2([[0, 1], [1, 0]]),
        2 => m2([[0, -1], [1, 0]]),
        3 => m2([[1, 0], [0, -1]]),
        _ => panic!("no generator t{alpha}"),
    }
}

/// `so(2,1)` generator `T_alpha`, `alpha` in `1..=3`.
pub fn big_t(alpha: usize) -> Mat3 {
    match alpha {
        1 => m3([[0, 0, 0], [0, 0, 1], [0, 1, 0]]),
        2 => m3([[0, 0, 1], [0, 0, 0], [-1, 0, 0]]),
        3 => m3([[0, -1, 0], [-1, 0, 0], [0, 0, 0]]),
        _ => panic!("no generator T{alpha}"),
    }
}

/// Minkowski metric `diag(1, -1, 1)` (its own inverse).
pub fn eta() -> Mat3 {
    m3([[1, 0, 0], [0, -1, 0], [0, 0, 1]])
}

/// Levi-Civita symbol with 1-based indices.
pub fn levi_civita(a: usize, b: usize, c: usize) -> i64 {
    match (a, b, c) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1,
        _ => 0,
    }
}

pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j]))
}

pub fn mul3(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| &a[i][k] * &b[k][j]).sum()))
}

pub fn add2(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j] + &b[i][j]))
}

pub fn scale2(a: &Mat2, s: &Q) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j] * s))
}

pub fn sub3(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j] - &b[i][j]))
}

pub fn scale3(a: &Mat3, s: &Q) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j] * s))
}

pub fn transpose3(a: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].clone()))
}

pub fn identity3() -> Mat3 {
    m3([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
}

pub fn det2(a: &Mat2) -> Q {
    &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0]
}

pub fn det3(a: &Mat3) -> Q {
    (0..3)
        .map(|j| {
            let minor =
                &a[1][(j + 1) % 3] * &a[2][(j + 2) % 3] - &a[1][(j + 2) % 3] * &a[2][(j + 1) % 3];
            &a[0][j] * minor
        })
        .sum()
}

pub fn inv2(a: &Mat2) -> Result<Mat2> {
    let d = det2(a);
    if d.is_zero() {
        return Err(Error::SingularGroupElement);
    }
    Ok([
        [&a[1][1] / &d, -&a[0][1] / &d],
        [-&a[1][0] / &d, &a[0][0] / &d],
    ])
}

/// Coordinates `x^alpha` of a traceless matrix `x = x^alpha t_alpha`.
pub fn sl2_coords(x: &Mat2) -> Option<[Q; 3]> {
    if !(&x[0][0] + &x[1][1]).is_zero() {
        return None;
    }
    let half = q(1, 2);
    Some([
        (&x[0][1] + &x[1][0]) * &half,
        (&x[1][0] - &x[0][1]) * &half,
        x[0][0].clone(),
    ])
}

/// `x^alpha t_alpha`.
pub fn from_sl2_coords(x: &[Q; 3]) -> Mat2 {
    (1..=3).fold(m2([[0, 0], [0, 0]]), |acc, a| {
        add2(&acc, &scale2(&t(a), &x[a - 1]))
    })
}

/// `Lambda^alpha_beta` with `g t_beta g^-1 = t_alpha Lambda^alpha_beta`, for
/// any invertible `g`.
pub fn conjugation_matrix(g: &Mat2) -> Result<Mat3> {
    let gi = inv2(g)?;
    let mut out = m3([[0; 3]; 3]);
    for b in 1..=3 {
        let x = sl2_coords(&mul2(&mul2(g, &t(b)), &gi)).expect("conjugation keeps the trace");
        for a in 1..=3 {
            out[a - 1][b - 1] = x[a - 1].clone();
        }
    }
    Ok(out)
}

/// Adjoint image of a unit-determinant `g`.
pub fn adjoint_map(g: &Mat2) -> Result<Mat3> {
    if det2(g) != Q::one() {
        return Err(Error::NotUnitDeterminant);
    }
    conjugation_matrix(g)
}

/// `Lambda^T eta Lambda = eta`.
pub fn is_lorentz(l: &Mat3) -> bool {
    mul3(&mul3(&transpose3(l), &eta()), l) == eta()
}

/// Lorentz with unit determinant and `Lambda^2_2 >= 1`.
pub fn is_restricted_lorentz(l: &Mat3) -> bool {
    is_lorentz(l) && det3(l) == Q::one() && l[1][1] >= Q::one()
}

/// `t_a t_b = eta_ab 1 + eps_abc eta^cd t_d` for `a, b` in `1..=3`, and
/// `t_0` central.
pub fn paraquaternion_table() -> CheckReport {
    let e = eta();
    let mut v = Vec::new();
    for a in 1..=3 {
        for b in 1..=3 {
            let mut want = scale2(&t(0), &e[a - 1][b - 1]);
            for c in 1..=3 {
                for d in 1..=3 {
                    let coeff = qi(levi_civita(a, b, c)) * &e[c - 1][d - 1];
                    want = add2(&want, &scale2(&t(d), &coeff));
                }
            }
            let got = mul2(&t(a), &t(b));
            if got != want {
                v.push(Violation {
                    location: format!("t{a} t{b}"),
                    residual: render2(&got),
                });
            }
        }
    }
    for a in 0..=3 {
        if mul2(&t(0), &t(a)) != mul2(&t(a), &t(0)) || mul2(&t(0), &t(a)) != t(a) {
            v.push(Violation {
                location: format!("t0 t{a}"),
                residual: render2(&mul2(&t(0), &t(a))),
            });
        }
    }
    CheckReport::new("paraquaternions", v)
}

fn comm3(a: &Mat3, b: &Mat3) -> Mat3 {
    sub3(&mul3(a, b), &mul3(b, a))
}

/// Commutators of `T_alpha`, the map `T_alpha -> t_alpha / 2`, and the
/// contraction identity of two Levi-Civita symbols.
pub fn lie_algebra_check() -> CheckReport {
    let e = eta();
    let det_eta = det3(&e);
    let mut v = Vec::new();
    let half = q(1, 2);
    for a in 1..=3 {
        for b in 1..=3 {
            let mut want = m3([[0; 3]; 3]);
            let mut want2 = m2([[0, 0], [0, 0]]);
            for c in 1..=3 {
                for d in 1..=3 {
                    let coeff = qi(levi_civita(a, b, c)) * &e[c - 1][d - 1];
                    want = sub3(&want, &scale3(&big_t(d), &-coeff.clone()));
                    want2 = add2(&want2, &scale2(&t(d), &(&coeff * &half)));
                }
            }
            if comm3(&big_t(a), &big_t(b)) != want {
                v.push(Violation {
                    location: format!("[T{a},T{b}]"),
                    residual: render3(&comm3(&big_t(a), &big_t(b))),
                });
            }
            let (ta, tb) = (scale2(&t(a), &half), scale2(&t(b), &half));
            let got2 = add2(&mul2(&ta, &tb), &scale2(&mul2(&tb, &ta), &qi(-1)));
            if got2 != want2 {
                v.push(Violation {
                    location: format!("[t{a}/2,t{b}/2]"),
                    residual: render2(&got2),
                });
            }
        }
    }
    for a in 1..=3 {
        for b in 1..=3 {
            for c in 1..=3 {
                for d in 1..=3 {
                    let mut lhs = Q::zero();
                    for m in 1..=3 {
                        for n in 1..=3 {
                            lhs += &det_eta
                                * qi(levi_civita(a, b, m) * levi_civita(n, c, d))
                                * &e[m - 1][n - 1];
                        }
                    }
                    let rhs =
                        &e[a - 1][c - 1] * &e[b - 1][d - 1] - &e[a - 1][d - 1] * &e[b - 1][c - 1];
                    if lhs != rhs {
                        v.push(Violation {
                            location: format!("eps eps ({a}{b}{c}{d})"),
                            residual: fmt_q(&(lhs - rhs)),
                        });
                    }
                }
            }
        }
    }
    CheckReport::new("so(2,1)", v)
}

/// `det(x)` against `-x^alpha eta_ab x^beta` for `x = x^alpha t_alpha`.
pub fn minkowski_length(x: &[Q; 3]) -> Q {
    let e = eta();
    let mut s = Q::zero();
    for a in 0..3 {
        s -= &x[a] * &e[a][a] * &x[a];
    }
    s
}

/// Truncated power series in one parameter, coefficients by degree.
type Series = Vec<Q>;

fn series_mul(a: &Series, b: &Series, order: usize) -> Series {
    let mut out = vec![Q::zero(); order + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j <= order {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn matrix_exp_series<const N: usize>(gen: &[[Q; N]; N], order: usize) -> Vec<[[Q; N]; N]> {
    // coefficient of s^k in exp(s gen) is gen^k / k!
    let mut out = Vec::with_capacity(order + 1);
    let mut power: [[Q; N]; N] =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { Q::one() } else { Q::zero() }));
    let mut fact = Q::one();
    for k in 0..=order {
        if k > 0 {
            power = std::array::from_fn(|i| {
                std::array::from_fn(|j| (0..N).map(|l| &power[i][l] * &gen[l][j]).sum())
            });
            fact *= qi(k as i64);
        }
        out.push(std::array::from_fn(|i| {
            std::array::from_fn(|j| &power[i][j] / &fact)
        }));
    }
    out
}

fn entry_series<const N: usize>(coeffs: &[[[Q; N]; N]], i: usize, j: usize) -> Series {
    coeffs.iter().map(|m| m[i][j].clone()).collect()
}

/// Compares `Ad(exp(s x^a t_a / 2)) t_b` with `t_a exp(s x^c T_c)^a_b`
/// coefficientwise in `s` up to `order`; returns the first mismatching
/// degree, or `None` on agreement.
pub fn exponential_series_mismatch(x: &[Q; 3], order: usize) -> Option<usize> {
    let gen2 = scale2(&from_sl2_coords(x), &q(1, 2));
    let neg2 = scale2(&gen2, &qi(-1));
    let g = matrix_exp_series(&gen2, order);
    let gi = matrix_exp_series(&neg2, order);
    let gen3 = (1..=3).fold(m3([[0; 3]; 3]), |acc, a| {
        sub3(&acc, &scale3(&big_t(a), &-x[a - 1].clone()))
    });
    let lam = matrix_exp_series(&gen3, order);
    for b in 1..=3 {
        let tb = t(b);
        // entries of g t_b g^-1 as series
        let mut conj: [[Series; 2]; 2] =
            std::array::from_fn(|_| std::array::from_fn(|_| vec![Q::zero(); order + 1]));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        if tb[k][l].is_zero() {
                            continue;
                        }
                        let prod =
                            series_mul(&entry_series(&g, i, k), &entry_series(&gi, l, j), order);
                        for (d, c) in prod.into_iter().enumerate() {
                            conj[i][j][d] += c * &tb[k][l];
                        }
                    }
                }
            }
        }
        for d in 0..=order {
            let lhs: Mat2 = std::array::from_fn(|i| std::array::from_fn(|j| conj[i][j][d].clone()));
            let coords: [Q; 3] = std::array::from_fn(|a| lam[d][a][b - 1].clone());
            if lhs != from_sl2_coords(&coords) {
                return Some(d);
            }
        }
    }
    None
}

pub fn render2(a: &Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        fmt_q(&a[0][0]),
        fmt_q(&a[0][1]),
        fmt_q(&a[1][0]),
        fmt_q(&a[1][1])
    )
}

pub fn render3(a: &Mat3) -> String {
    let rows: Vec<String> = a
        .iter()
        .map(|r| format!("[{}]", r.iter().map(fmt_q).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}
