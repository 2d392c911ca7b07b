use carterlab::horizon::*;
use carterlab::modes::legendre_p;
use proptest::prelude::*;

const DC: f64 = 0.5;

// quadrature oracle values
const RN_BUMP_CHARGE: f64 = 1.0;
const RN_OFFSET_CHARGE: f64 = -3.0;
const KERR_BUMP_CHARGE: f64 = 2.2666666666666666667;

fn p2(x: f64) -> f64 {
    1.5 * x * x - 0.5
}

fn rn_bump(n_r: usize) -> ExtremalState {
    ExtremalState::new(1.0, 0.0, 1.0, DC, n_r, 6, |r, x| {
        let y = r - 1.0;
        let s = 1.0 + 0.5 * p2(x);
        (y * (DC - y).powi(2) * s, ((DC - y).powi(2) - 2.0 * y * (DC - y)) * s, 0.0)
    })
    .unwrap()
}

fn run_rn(n_r: usize) -> (ExtremalState, ChargeSeries) {
    let st = rn_bump(n_r);
    let dv = st.dependence_window() / 200.0;
    evolve_extremal_rn(st, dv, 200).unwrap()
}

#[test]
fn constant_charge_is_exact() {
    let c = 0.7;
    let kn = ExtremalState::constant(1.0, 0.6, 0.8, c, 8, 5).unwrap();
    assert!((extremal_charge(&kn) - 4.0 * c).abs() < 1e-14);
    let rn = ExtremalState::constant(2.0, 0.0, 2.0, c, 8, 5).unwrap();
    assert!((extremal_charge_sphere(&rn) - 8.0 * std::f64::consts::PI * 2.0 * c).abs() < 1e-13);
}

#[test]
fn bump_charges_match_quadrature() {
    assert!((extremal_charge(&rn_bump(16)) - RN_BUMP_CHARGE).abs() < 1e-14);
    let flat = ExtremalState::new(1.0, 0.0, 1.0, DC, 16, 4, |r, _| {
        let y = r - 1.0;
        (y * y * (DC - y).powi(2), 2.0 * y * (DC - y).powi(2) - 2.0 * y * y * (DC - y), 0.0)
    })
    .unwrap();
    assert_eq!(extremal_charge(&flat), 0.0);
    let kerr = ExtremalState::new(1.0, 1.0, 0.0, DC, 16, 4, |r, _| {
        let y = r - 1.0;
        (y * (DC - y).powi(2), (DC - y).powi(2) - 2.0 * y * (DC - y), 0.2)
    })
    .unwrap();
    assert!((extremal_charge(&kerr) - KERR_BUMP_CHARGE).abs() < 1e-14);
}

#[test]
fn non_extremal_rejected() {
    assert!(matches!(ExtremalState::constant(1.0, 0.5, 0.5, 1.0, 8, 4), Err(HorizonError::NotExtremal(_))));
}

#[test]
fn constant_solution_is_stationary_rn() {
    let st = ExtremalState::constant(1.0, 0.0, 1.0, 0.3, 16, 4).unwrap();
    let (end, ser) = evolve_extremal_rn(st, 0.01, 50).unwrap();
    assert!(ser.drift < 1e-13, "{}", ser.drift);
    assert!(end.u.iter().all(|v| (v - 0.3).abs() < 1e-13));
    assert!(horizon_equation_residual(&end).unwrap().abs() < 1e-11);
}

#[test]
fn constant_solution_is_stationary_kn() {
    let st = ExtremalState::constant(1.0, 0.6, 0.8, -1.2, 16, 4).unwrap();
    let (end, ser) = evolve_extremal_kn(st, 0.01, 50).unwrap();
    assert!(ser.drift < 1e-12, "{}", ser.drift);
    assert!((ser.charge[0] - 4.0 * -1.2).abs() < 1e-12);
    assert!(end.u.iter().all(|v| (v + 1.2).abs() < 1e-12));
}

#[test]
fn rn_drift_converges_at_second_order_or_better() {
    let d: Vec<f64> = [32, 64, 128].iter().map(|&n| run_rn(n).1.drift).collect();
    for w in d.windows(2) {
        let order = refinement_order(w[0], w[1]);
        assert!(order >= 2.0, "drifts {d:?}");
    }
}

#[test]
fn rn_horizon_residual_shrinks() {
    let r1 = horizon_equation_residual(&run_rn(32).0).unwrap().abs();
    let r2 = horizon_equation_residual(&run_rn(64).0).unwrap().abs();
    assert!(r2 < r1 / 3.0, "{r1} {r2}");
}

#[test]
fn pole_term_vanishes() {
    let (end, _) = run_rn(32);
    assert!(pole_term(&end).abs() < 1e-12);
}

#[test]
fn kn_drift_order_at_least_one() {
    let run = |n| {
        let st = ExtremalState::new(1.0, 0.6, 0.8, DC, n, 6, |r, x| {
            let y = r - 1.0;
            let s = 1.0 + 0.5 * p2(x);
            (y * (DC - y).powi(2) * s, ((DC - y).powi(2) - 2.0 * y * (DC - y)) * s, 0.0)
        })
        .unwrap();
        let dv = st.dependence_window() / 200.0;
        evolve_extremal_kn(st, dv, 200).unwrap().1.drift
    };
    let (a, b) = (run(16), run(32));
    assert!(refinement_order(a, b) >= 1.0, "{a} {b}");
}

#[test]
fn nondecay_flag_for_nonzero_charge() {
    let st = ExtremalState::new(1.0, 0.0, 1.0, DC, 64, 4, |r, _| {
        let y = r - 1.0;
        ((DC - y).powi(2), -2.0 * (DC - y), 0.0)
    })
    .unwrap();
    let dv = st.dependence_window() / 200.0;
    let (end, ser) = evolve_extremal_rn(st, dv, 200).unwrap();
    let rep = nondecay_report(&end, &ser);
    assert!((rep.charge - RN_OFFSET_CHARGE).abs() < 1e-13);
    assert!(rep.tangential_decay);
    assert!(rep.obstruction);
}

#[test]
fn window_and_history_errors() {
    let st = rn_bump(16);
    let limit = st.dependence_window();
    assert!(matches!(
        evolve_extremal_rn(st.clone(), limit / 10.0, 11),
        Err(HorizonError::DomainOfDependenceExceeded { .. })
    ));
    assert!(matches!(horizon_equation_residual(&st), Err(HorizonError::InsufficientHistory { .. })));
    assert!(matches!(evolve_extremal_kn(st, 0.01, 1), Err(HorizonError::WrongScheme(_))));
}

proptest! {
    #[test]
    fn gauss_legendre_integrates_legendre_products(n in 1usize..20, l in 0usize..20, k in 0usize..20) {
        prop_assume!(l + k <= 2 * n - 1);
        let (x, w) = gauss_legendre(n);
        let s: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * legendre_p(l, xi).0 * legendre_p(k, xi).0).sum();
        let exact = if l == k { 2.0 / (2.0 * l as f64 + 1.0) } else { 0.0 };
        prop_assert!((s - exact).abs() < 1e-13);
    }
}
