use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::superalgebra::parse_expression;

fn alg(parities: &[u8]) -> TriGradedAlgebra {
    TriGradedAlgebra::new(parities).unwrap()
}

fn p(a: &TriGradedAlgebra, s: &str) -> SuperPoly {
    parse_expression(s, a.table()).unwrap()
}

#[test]
fn differential_examples() {
    let a = alg(&[0, 0]);
    assert_eq!(a.d(1, &p(&a, "x1_1")), p(&a, "x3_1"));
    assert!(a.d(2, &p(&a, "x3_1*x3_2")).is_zero());
    assert_eq!(a.i(1, &p(&a, "x3_1*x3_2")), p(&a, "x1_1*x3_2 - x1_2*x3_1"));
}

#[test]
fn script_l_examples() {
    let a = alg(&[0, 0]);
    assert_eq!(a.script_l(1, 1, &p(&a, "x1_1")), p(&a, "x1_1"));
    assert_eq!(a.lambda(&p(&a, "x3_1*x3_2")), p(&a, "2*x3_1*x3_2"));
}

#[test]
fn gl2_commutator_on_degree_one_one_block() {
    let a = alg(&[0]);
    let basis = a.basis3(1, 1, 0);
    let comm = a.operator_matrix(&basis, &basis, |w| {
        &a.script_l(1, 2, &a.script_l(2, 1, w)) - &a.script_l(2, 1, &a.script_l(1, 2, w))
    });
    // delta^1_1 L^2_2 - delta^2_2 L^1_1 from the gl(2) relations
    let want = a.operator_matrix(&basis, &basis, |w| {
        &a.script_l(2, 2, w) - &a.script_l(1, 1, w)
    });
    assert_eq!(comm, want);
}

#[test]
fn lambda_block_examples() {
    let a = alg(&[0, 0]);
    let b = a.lambda_block(0, 2).unwrap();
    assert_eq!(b.basis.len(), 1);
    assert_eq!(b.matrix, vec![vec![qi(2)]]);
    assert_eq!(
        a.lambda_block(3, 1).unwrap_err(),
        Error::BlockNotCovered { n12: 3, n3: 1 }
    );
    for n12 in 0..4 {
        assert!(!a.lambda_block(n12, 2).unwrap().determinant.is_zero());
    }
    let odd = alg(&[1]);
    for n12 in 0..3 {
        for n3 in 2..4 {
            assert!(!odd.lambda_block(n12, n3).unwrap().determinant.is_zero());
        }
    }
}

#[test]
fn highest_weight_example() {
    let a = alg(&[0, 0]);
    let v = p(&a, "x1_1^2*x3_1*x3_2");
    assert!(a.script_l(2, 1, &v).is_zero());
    let hw = a.highest_weights(2, 0, 2);
    let h = hw.iter().find(|h| h.vector == v).unwrap();
    assert_eq!(h.spin, qi(1));
    assert_eq!(h.eigenvalue, qi(4));
    assert_eq!(a.lambda(&v), v.scale(&qi(4)));
}

#[test]
fn highest_weights_match_formula_and_bound() {
    for parities in [vec![0, 0], vec![0, 1], vec![1, 1, 0]] {
        let a = alg(&parities);
        for n3 in 2..=3 {
            for n1 in 0..=2 {
                for n2 in 0..=2 {
                    for h in a.highest_weights(n1, n2, n3) {
                        assert_eq!(a.lambda(&h.vector), h.vector.scale(&h.eigenvalue));
                        assert!(h.eigenvalue >= h.bound && h.bound > Q::zero());
                    }
                }
            }
        }
    }
}

#[test]
fn homotopy_examples() {
    let a = alg(&[0, 0]);
    let h = a.homotopy(&p(&a, "x3_1*x3_2")).unwrap();
    assert_eq!(h.eta, p(&a, "1/2*x1_1*x2_2 - 1/2*x1_2*x2_1"));
    assert_eq!(h.blocks[0].determinant, "2");
    assert!(a
        .homotopy(&SuperPoly::zero(a.table()))
        .unwrap()
        .eta
        .is_zero());
}

#[test]
fn homotopy_rejects_bad_input() {
    let a = alg(&[0, 0]);
    let b = alg(&[1, 1]);
    assert!(matches!(
        b.homotopy(&p(&b, "x1_1*x3_1^2")),
        Err(Error::NotClosed(_))
    ));
    assert_eq!(a.homotopy(&p(&a, "x3_1")), Err(Error::DegreeTooLow(1)));
    let small = a.clone().with_degree(3);
    let w = a.d_op(&p(&a, "x1_1^2*x2_2^2"));
    assert_eq!(small.homotopy(&w), Err(Error::BeyondTruncation(4, 3)));
}

fn random_monomial(a: &TriGradedAlgebra, rng: &mut ChaCha8Rng, max_deg: u32) -> SuperPoly {
    let mut m = SuperPoly::one(a.table());
    for _ in 0..rng.gen_range(0..=max_deg) {
        m = &m * &a.var(rng.gen_range(1..=3), rng.gen_range(0..a.n()));
    }
    m
}

fn random_form(
    a: &TriGradedAlgebra,
    rng: &mut ChaCha8Rng,
    terms: usize,
    max_deg: u32,
) -> SuperPoly {
    let mut acc = SuperPoly::zero(a.table());
    for _ in 0..terms {
        acc = &acc + &random_monomial(a, rng, max_deg).scale(&qi(rng.gen_range(-3..=3)));
    }
    acc
}

fn random_parities(rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..rng.gen_range(1..=3))
        .map(|_| rng.gen_range(0..2))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operator_relations_hold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = alg(&random_parities(&mut rng));
        let w = random_monomial(&a, &mut rng, 5);
        for (name, r) in a.relation_residuals(&w) {
            prop_assert!(r.is_zero(), "{} on {}: {}", name, w, r);
        }
    }

    #[test]
    fn homotopy_inverts_d_on_exact_forms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = alg(&random_parities(&mut rng));
        let rho = random_form(&a, &mut rng, 4, 6);
        let omega = a.d_op(&rho);
        let h = a.homotopy(&omega).unwrap();
        prop_assert_eq!(a.d_op(&h.eta), omega);
        for b in &h.blocks {
            prop_assert!(b.determinant != "0");
        }
    }
}
