use carterlab::poly::{rat, Mono, SparsePoly, Var, NVARS};
use num_rational::BigRational;
use proptest::prelude::*;

const VARS: [Var; 4] = [Var::R, Var::X, Var::A, Var::C3];

fn poly_strategy() -> impl Strategy<Value = SparsePoly> {
    prop::collection::vec(
        (prop::array::uniform4(0u8..4), -6i64..=6, 1i64..=5),
        0..6,
    )
    .prop_map(|terms| {
        SparsePoly::from_terms(terms.into_iter().map(|(e, n, d)| {
            let mut exps = [0u8; NVARS];
            for (v, k) in VARS.iter().zip(e) {
                exps[*v as usize] = k;
            }
            (Mono::from_exps(&exps), rat(n, d))
        }))
    })
}

fn point_strategy() -> impl Strategy<Value = [BigRational; NVARS]> {
    prop::array::uniform11((-7i64..=7, 1i64..=4)).prop_map(|a| a.map(|(n, d)| rat(n, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(p in poly_strategy(), q in poly_strategy(), s in poly_strategy()) {
        prop_assert_eq!(p.add(&q), q.add(&p));
        prop_assert_eq!(p.mul(&q), q.mul(&p));
        prop_assert_eq!(p.mul(&q.add(&s)), p.mul(&q).add(&p.mul(&s)));
        prop_assert_eq!(p.mul(&q).mul(&s), p.mul(&q.mul(&s)));
        prop_assert!(p.sub(&p).is_zero());
        prop_assert_eq!(p.mul(&SparsePoly::one()), p.clone());
    }

    #[test]
    fn leibniz_rule(p in poly_strategy(), q in poly_strategy()) {
        for v in VARS {
            let lhs = p.mul(&q).diff(v);
            let rhs = p.diff(v).mul(&q).add(&p.mul(&q.diff(v)));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn exact_division_inverts_product(p in poly_strategy(), q in poly_strategy()) {
        prop_assume!(!q.is_zero());
        prop_assert_eq!(p.mul(&q).exact_div(&q), Some(p));
    }

    #[test]
    fn evaluation_is_a_homomorphism(p in poly_strategy(), q in poly_strategy(), pt in point_strategy()) {
        prop_assert_eq!(p.mul(&q).eval(&pt), p.eval(&pt) * q.eval(&pt));
        prop_assert_eq!(p.add(&q).eval(&pt), p.eval(&pt) + q.eval(&pt));
    }

    #[test]
    fn substitution_then_eval_agrees(p in poly_strategy(), pt in point_strategy()) {
        let partial = p.subs(&[(Var::A, pt[Var::A as usize].clone())]);
        prop_assert_eq!(partial.degree_in(Var::A), 0);
        prop_assert_eq!(partial.eval(&pt), p.eval(&pt));
    }
}

#[test]
fn pow_and_degrees() {
    let r = SparsePoly::var(Var::R);
    let x = SparsePoly::var(Var::X);
    let p = r.add(&x).pow(4);
    assert_eq!(p.len(), 5);
    assert_eq!(p.total_degree(), 4);
    assert_eq!(p.degree_in(Var::X), 4);
    let q = r.mul(&r).sub(&SparsePoly::one());
    assert_eq!(q.exact_div(&r.sub(&SparsePoly::one())), Some(r.add(&SparsePoly::one())));
    assert_eq!(q.exact_div(&r.add(&SparsePoly::int(2))), None);
}
