use carterlab::kn::*;
use proptest::prelude::*;

// Kerr M = 1, a = 1/2, from a 50-digit closed-form evaluation
const R_PLUS: f64 = 1.8660254037844386468;
const R_MINUS: f64 = 0.13397459621556135324;
const OMEGA_H: f64 = 0.13397459621556135324;
const KAPPA_PLUS: f64 = 0.23205080756887729353;

#[test]
fn kerr_horizon_constants_match_oracle() {
    let c = horizon_constants(1.0, 0.5, 0.0).unwrap();
    assert!((c.r_plus - R_PLUS).abs() < 1e-14);
    assert!((c.r_minus - R_MINUS).abs() < 1e-14);
    assert!((c.omega_h - OMEGA_H).abs() < 1e-14);
    assert!((c.kappa_plus - KAPPA_PLUS).abs() < 1e-14);
    assert!(!c.extremal);
}

#[test]
fn schwarzschild_and_extremal_constants() {
    let c = horizon_constants(1.0, 0.0, 0.0).unwrap();
    assert_eq!(c.r_plus, 2.0);
    assert!((c.kappa_plus - 0.25).abs() < 1e-15);
    let e = horizon_constants(1.0, 0.6, 0.8).unwrap();
    assert!(e.extremal);
    assert!(e.kappa_plus.abs() < 1e-7);
}

#[test]
fn superextremal_and_bad_mass_rejected() {
    assert!(matches!(horizon_constants(1.0, 0.9, 0.5), Err(KnError::Superextremal(_))));
    assert!(matches!(horizon_constants(0.0, 0.0, 0.0), Err(KnError::NonPositiveMass(_))));
}

#[test]
fn sign_factor_identity_is_exact() {
    assert!(sign_factor_identity().is_zero());
}

#[test]
fn schwarzschild_margin_value() {
    // f(r) = 2r²(r − 3) is decreasing on [2, 2.5]; max at r = 2 is −8, at 2.5 is −6.25
    let rep = nontrapping_margin(1.0, 0.0, 0.0, 2.5, 200).unwrap();
    assert!((rep.max_factor - (-6.25)).abs() < 1e-12, "{}", rep.max_factor);
    assert_eq!(rep.verdict, TrappingVerdict::Nontrapping);
    assert!(rep.identity_is_zero && rep.derivative_signs_agree);
}

#[test]
fn factor_value_at_sample_point() {
    // M=1, a=0.5, Q=0.3, r=2: 2(4(−1) + 0.25·3 + 2·0.09·2) = −5.78
    assert!((sign_factor(1.0, 0.5, 0.3, 2.0) - (-5.78)).abs() < 1e-12);
    // Schwarzschild: 2r²(r − 3)
    assert!((sign_factor(1.0, 0.0, 0.0, 3.2) - 2.0 * 3.2 * 3.2 * 0.2).abs() < 1e-10);
}

#[test]
fn verdict_flips_near_photon_sphere() {
    let (below, _) = factor_max(1.0, 0.0, 0.0, 2.0, 2.99);
    let (above, _) = factor_max(1.0, 0.0, 0.0, 2.0, 3.01);
    assert!(below < 0.0 && above > 0.0);
}

#[test]
fn wall_outside_range_rejected() {
    assert!(matches!(nontrapping_margin(1.0, 0.3, 0.2, 2.9, 10), Err(KnError::WallRange { .. })));
    assert!(matches!(nontrapping_margin(1.0, 0.3, 0.2, 1.9, 10), Err(KnError::WallRange { .. })));
}

#[test]
fn jordan_obstruction_matches_closed_form() {
    for &(a, q, rw) in &[(0.0, 0.0, 2.5), (0.5, 0.3, 2.4), (0.3, 0.6, 2.6)] {
        let rep = wall_jordan_obstruction(1.0, a, q, rw, 1e-12).unwrap();
        assert!(rep.relative_gap < 1e-10, "{a} {q}: {}", rep.relative_gap);
        assert!(rep.pointwise_defect < 1e-9);
        assert!(rep.closed_form > 0.0);
    }
}

proptest! {
    #[test]
    fn derivative_formula_matches_fd(a in 0.0f64..0.6, q in 0.0f64..0.6, t in 0.05f64..0.95) {
        let c = horizon_constants(1.0, a, q).unwrap();
        let r = c.r_plus + t * (8.0 / 3.0 - c.r_plus).max(0.1);
        let f = |r: f64| { let w = r * r + a * a; w * w / delta(1.0, a, q, r) };
        let h = 1e-5;
        let fd = (f(r + h) - f(r - h)) / (2.0 * h);
        let an = a_derivative(1.0, a, q, r);
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
    }

    #[test]
    fn factor_max_dominates_grid(a in 0.0f64..0.7, q in 0.0f64..0.7, rw in 2.01f64..2.66) {
        prop_assume!(a * a + q * q < 0.95);
        let c = horizon_constants(1.0, a, q).unwrap();
        let (mx, _) = factor_max(1.0, a, q, c.r_plus, rw);
        for i in 0..=500 {
            let r = c.r_plus + (rw - c.r_plus) * i as f64 / 500.0;
            prop_assert!(sign_factor(1.0, a, q, r) <= mx + 1e-12);
        }
    }
}

#[test]
fn schwarzschild_wall_obstruction_value() {
    let rep = wall_jordan_obstruction(1.0, 0.0, 0.0, 2.5, 1e-12).unwrap();
    assert!((rep.closed_form - 3.2).abs() < 1e-12);
    assert!((rep.numeric - 3.2).abs() < 1e-10, "{}", rep.numeric);
}
