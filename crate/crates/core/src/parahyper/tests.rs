use proptest::prelude::*;

use super::*;
use crate::superalgebra::{parse_expression, qi, GradedVariable, SuperPoly};

/// Base table `p1..pn, c1..cn` with `eps(p_i) = eps(c_i) = parities[i]`.
fn base(parities: &[u8]) -> Base {
    let mut v = Vec::new();
    for (i, &e) in parities.iter().enumerate() {
        v.push(GradedVariable::new(
            &format!("p{}", i + 1),
            e,
            0,
            Role::Momentum,
            i as u32 + 1,
        ));
    }
    for (i, &e) in parities.iter().enumerate() {
        v.push(GradedVariable::new(
            &format!("c{}", i + 1),
            e,
            0,
            Role::Casimir,
            i as u32 + 1,
        ));
    }
    Base::from_roles(&VarTable::new(v).unwrap())
}

fn r(b: &Base, s: &str) -> RationalFn {
    parse_expression(s, &b.table).unwrap().into()
}

fn e_matrix(b: &Base, rows: &[&[&str]]) -> Matrix<RationalFn> {
    rows.iter()
        .map(|row| row.iter().map(|s| r(b, s)).collect())
        .collect()
}

fn ints(m: &[&[i64]]) -> Matrix<Q> {
    m.iter()
        .map(|row| row.iter().map(|&x| qi(x)).collect())
        .collect()
}

fn anticommutator(a: &Endomorphism, b: &Endomorphism) -> Endomorphism {
    a.after(b).plus(&b.after(a))
}

#[test]
fn two_dimensional_structures() {
    let b = base(&[0]);
    let e = e_matrix(&b, &[&["1"]]);
    let sigma = build_sigma(&b);
    let p = build_p(&b, &e).unwrap();
    let j = build_j(&sigma, &p);
    assert_eq!(
        constant_components(&sigma).unwrap(),
        ints(&[&[1, 0], &[0, -1]])
    );
    assert_eq!(constant_components(&p).unwrap(), ints(&[&[0, 1], &[1, 0]]));
    assert_eq!(constant_components(&j).unwrap(), ints(&[&[0, -1], &[1, 0]]));
    assert!(j.after(&j).is_identity_times(-1));
    assert!(anticommutator(&sigma, &p).is_identity_times(0));
}

#[test]
fn p_from_linear_e() {
    let b = base(&[0]);
    let p = build_p(&b, &e_matrix(&b, &[&["p1 + c1"]])).unwrap();
    let comps = p.components();
    assert_eq!(comps[1][0], r(&b, "p1 + c1"));
    assert_eq!(
        comps[0][1],
        RationalFn::new(SuperPoly::one(&b.table), r(&b, "p1 + c1").numer().clone()).unwrap()
    );
    assert!(comps[0][0].is_zero() && comps[1][1].is_zero());
    assert!(p.after(&p).is_identity_times(1));
}

#[test]
fn singular_e_is_rejected() {
    let b = base(&[0, 0]);
    let e = e_matrix(&b, &[&["p1", "p1"], &["c2", "c2"]]);
    assert_eq!(build_p(&b, &e), Err(Error::ESingular));
    assert!(matches!(obata_connection(&b, &e), Err(Error::ESingular)));
}

#[test]
fn sigma_squares_to_identity_with_even_split() {
    for n in 1..=3 {
        let b = base(&vec![0; n]);
        let sigma = build_sigma(&b);
        assert!(sigma.after(&sigma).is_identity_times(1));
        assert_eq!(sigma.eigenspace_dims(&[]).unwrap(), (n, n));
    }
}

#[test]
fn eigenspaces_at_a_point() {
    let b = base(&[0, 0]);
    let p = build_p(&b, &e_matrix(&b, &[&["1 + p1", "c2"], &["0", "2 + c1"]])).unwrap();
    let point = [(b.p[0], qi(1)), (b.c[0], qi(3)), (b.c[1], qi(-2))];
    assert!(check_eigenspaces(&p, &point).unwrap());
    let pole = [(b.p[0], qi(-1))];
    assert!(p.eigenspace_dims(&pole).is_err());
}

#[test]
fn nijenhuis_of_sigma_and_closed_p_vanish() {
    let b = base(&[0]);
    assert!(nijenhuis(&build_sigma(&b)).is_zero());
    let p = build_p(&b, &e_matrix(&b, &[&["p1 + c1"]])).unwrap();
    assert!(nijenhuis(&p).is_zero());
}

#[test]
fn nijenhuis_detects_non_closed_e() {
    let b = base(&[0, 0]);
    let p = build_p(&b, &e_matrix(&b, &[&["1", "p2"], &["0", "1"]])).unwrap();
    let n = nijenhuis(&p);
    assert!(!n.is_zero());
    let report = n.report(&b);
    assert!(!report.passed);
    assert!(report
        .violations
        .iter()
        .any(|v| v.location.starts_with("N(p1,p2)") || v.location.starts_with("N(p2,p1)")));
}

#[test]
fn chiral_parts_recombine() {
    let b = base(&[0, 0]);
    let p = build_p(&b, &e_matrix(&b, &[&["1", "p2"], &["c1", "1"]])).unwrap();
    let d = b.dim();
    for i in 0..d {
        for j in 0..d {
            let (x, y) = (
                VectorField::coordinate(&b, i),
                VectorField::coordinate(&b, j),
            );
            let py = p.apply(&y);
            for s in [1i64, -1] {
                let lhs = chiral_nijenhuis_on(&p, s, &x, &y);
                let rhs = nijenhuis_on(&p, &x, &y).combine(&nijenhuis_on(&p, &x, &py), s);
                let eight = Q::from_integer(8.into());
                let lhs: Vec<RationalFn> = lhs.comps.iter().map(|c| c.scale(&eight)).collect();
                assert_eq!(lhs, rhs.comps, "{i} {j} {s}");
            }
        }
    }
}

#[test]
fn obata_identity_is_trivial_and_flat() {
    let b = base(&[0, 1]);
    let e = e_matrix(&b, &[&["1", "0"], &["0", "1"]]);
    let conn = obata_connection(&b, &e).unwrap();
    assert!(conn
        .christoffel
        .iter()
        .flatten()
        .flatten()
        .all(|g| g.is_zero()));
    assert!(conn.curvature().is_flat());
    assert!(conn.verify().passed);
}

#[test]
fn obata_linear_e() {
    let b = base(&[0]);
    let conn = obata_connection(&b, &e_matrix(&b, &[&["p1 + c1"]])).unwrap();
    let inv = RationalFn::new(SuperPoly::one(&b.table), r(&b, "p1 + c1").numer().clone()).unwrap();
    assert_eq!(conn.christoffel[0][0][0], inv);
    assert_eq!(conn.christoffel[1][1][1], inv.neg());
    for (i, j, k) in [
        (0, 0, 1),
        (0, 1, 0),
        (1, 0, 0),
        (1, 1, 0),
        (0, 1, 1),
        (1, 0, 1),
    ] {
        assert!(conn.christoffel[i][j][k].is_zero());
    }
    assert!(conn.verify().passed);
    let curv = conn.curvature();
    assert!(!curv.is_flat());
    let (i, j, _, _, _) = curv.components[0];
    assert_ne!(
        i < b.n(),
        j < b.n(),
        "witness mixes a momentum and a Casimir derivative"
    );
    assert!(!curv.report(&b).passed);
}

#[test]
fn obata_product_e_is_flat() {
    let b = base(&[0]);
    let conn = obata_connection(&b, &e_matrix(&b, &[&["(1 + p1)*(2 + c1)"]])).unwrap();
    let gp = &conn.christoffel[0][0][0];
    assert!(!gp.depends_on(b.c[0]));
    assert_eq!(
        *gp,
        RationalFn::new(SuperPoly::one(&b.table), r(&b, "1 + p1").numer().clone()).unwrap()
    );
    assert!(conn.verify().passed);
    assert!(conn.curvature().is_flat());
}

/// `E^i_j = dA_j/dp_i` for potentials `A_j(p)`.
fn e_from_p_potentials(b: &Base, potentials: &[&str]) -> Matrix<RationalFn> {
    let a: Vec<RationalFn> = potentials.iter().map(|s| r(b, s)).collect();
    (0..b.n())
        .map(|i| a.iter().map(|aj| aj.d_left(b.p[i])).collect())
        .collect()
}

#[test]
fn obata_odd_sector_preserves_structures() {
    let b = base(&[1, 0]);
    let e = e_from_p_potentials(&b, &["p1 + p1*p2", "2*p2 + p2^2"]);
    assert_eq!(e[1][0], r(&b, "p1"));
    let conn = obata_connection(&b, &e).unwrap();
    let report = conn.verify();
    assert!(report.passed, "{:?}", report.violations);
    assert!(conn.curvature().is_flat());
    assert!(nijenhuis(&conn.p).is_zero());
}

#[test]
fn torsion_flags_non_closed_e() {
    let b = base(&[1]);
    let conn = obata_connection(&b, &e_matrix(&b, &[&["1 + p1*c1"]])).unwrap();
    let report = conn.verify();
    assert!(report
        .violations
        .iter()
        .any(|v| v.location.starts_with("torsion (p1,p1,p1)")));
}

#[test]
fn structures_in_momentum_coordinates() {
    let s = bidarboux_structures(1);
    for (m, a) in [(&s.identity, 0), (&s.p, 1), (&s.j, 2), (&s.sigma, 3)] {
        let t = liegroup::t(a);
        assert_eq!(*m, t.iter().map(|r| r.to_vec()).collect::<Matrix<Q>>());
    }
    let s = bidarboux_structures(2);
    assert_eq!(
        s.p,
        ints(&[&[0, 0, 1, 0], &[0, 0, 0, 1], &[1, 0, 0, 0], &[0, 1, 0, 0]])
    );
    let id = ints(&[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
    let neg: Matrix<Q> = id.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    assert_eq!(mat_mul_q(&s.p, &s.p), id);
    assert_eq!(mat_mul_q(&s.j, &s.j), neg);
    assert_eq!(s.identity, id);
}

#[test]
fn structures_match_identity_e() {
    for n in 1..=3 {
        let b = base(&vec![0; n]);
        let e: Matrix<RationalFn> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| RationalFn::constant(&b.table, qi(i64::from(i == j))))
                    .collect()
            })
            .collect();
        let sigma = build_sigma(&b);
        let p = build_p(&b, &e).unwrap();
        let j = build_j(&sigma, &p);
        let s = bidarboux_structures(n);
        assert_eq!(constant_components(&sigma).unwrap(), s.sigma);
        assert_eq!(constant_components(&p).unwrap(), s.p);
        assert_eq!(constant_components(&j).unwrap(), s.j);
    }
}

#[test]
fn momentum_rotation_is_lorentz() {
    let g: Mat2 = [[qi(1), qi(1)], [qi(0), qi(1)]];
    let s = bidarboux_structures(2).rotate(&g).unwrap();
    let frame = s.lorentz_frame().unwrap();
    assert_eq!(frame, liegroup::conjugation_matrix(&g).unwrap());
    assert!(liegroup::is_lorentz(&frame));
    assert_eq!(mat_mul_q(&s.p, &s.p), bidarboux_structures(2).identity);
}

/// Random potential of the given parity in the variables `vars`: a
/// leading `lead * x_j` plus monomials of degree at most two.
fn random_potential(b: &Base, vars: &[VarId], j: usize, lead: i64, coeffs: &[i64]) -> String {
    let parity = b.table.parity(vars[j]);
    let name = |v: VarId| b.table.var(v).name.clone();
    let mut terms = vec![format!("{lead}*{}", name(vars[j]))];
    let mut k = 0;
    for (x, &u) in vars.iter().enumerate() {
        for &w in &vars[x..] {
            let pu = b.table.parity(u);
            let pw = b.table.parity(w);
            let c = coeffs[k % coeffs.len()];
            k += 1;
            if c == 0 {
                continue;
            }
            if u == w && pu == parity {
                terms.push(format!("{c}*{}", name(u)));
            }
            if (pu + pw) % 2 == parity && !(u == w && pu == 1) {
                terms.push(format!("{c}*{}*{}", name(u), name(w)));
            }
        }
    }
    terms.join(" + ")
}

fn closed_e(b: &Base, from_casimirs: bool, coeffs: &[i64]) -> Option<Matrix<RationalFn>> {
    let n = b.n();
    let vars = if from_casimirs { &b.c } else { &b.p };
    let potentials: Vec<RationalFn> = (0..n)
        .map(|j| {
            r(
                b,
                &random_potential(b, vars, j, 1 + coeffs[j].abs(), &coeffs[n..]),
            )
        })
        .collect();
    let jac: Matrix<RationalFn> = (0..n)
        .map(|i| potentials.iter().map(|a| a.d_left(vars[i])).collect())
        .collect();
    if from_casimirs {
        invert_matrix(&jac).ok()
    } else {
        Some(jac)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn obata_connection_preserves_structures(
        parities in proptest::collection::vec(0u8..2, 1..3),
        from_casimirs in any::<bool>(),
        coeffs in proptest::collection::vec(-2i64..3, 12),
    ) {
        let b = base(&parities);
        let e = closed_e(&b, from_casimirs, &coeffs);
        prop_assume!(e.as_ref().is_some_and(|e| build_p(&b, e).is_ok()));
        let e = e.unwrap();
        let sigma = build_sigma(&b);
        let p = build_p(&b, &e).unwrap();
        let j = build_j(&sigma, &p);
        prop_assert!(p.after(&p).is_identity_times(1));
        prop_assert!(j.after(&j).is_identity_times(-1));
        prop_assert!(anticommutator(&sigma, &p).is_identity_times(0));
        prop_assert!(nijenhuis(&p).is_zero());
        let conn = obata_connection(&b, &e).unwrap();
        let report = conn.verify();
        prop_assert!(report.passed, "{:?}", report.violations);
        prop_assert!(conn.curvature().is_flat());
    }

    #[test]
    fn one_dimensional_even_base_is_torsion_free(coeffs in proptest::collection::vec(-3i64..4, 5)) {
        let b = base(&[0]);
        let lead = 1 + coeffs[0].abs();
        let e = r(&b, &format!("{lead} + {}*p1 + {}*c1 + {}*p1*c1 + {}*c1^2", coeffs[1], coeffs[2], coeffs[3], coeffs[4]));
        let conn = obata_connection(&b, &[vec![e]].to_vec()).unwrap();
        prop_assert!(conn.verify().passed);
    }
}
