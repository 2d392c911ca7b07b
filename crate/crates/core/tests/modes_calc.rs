use carterlab::metric::{build_coefficients, kn_embed, CarterParams, CoefficientSet};
use carterlab::linalg::symmetric_eigen;
use carterlab::modes::*;
use num_complex::Complex64;
use proptest::prelude::*;

// 50-digit evaluation of (r₊² + a²)Ω / Δ′(r₊) for Kerr M=1, a=1/2, Ω=0.3
const SIGMA_H: f64 = 0.646_410_161_513_775_458_71;

fn kerr(a: f64) -> CoefficientSet<f64> {
    build_coefficients(&CarterParams::kerr(1.0, a))
}

fn flat() -> CoefficientSet<f64> {
    // a = 0 and C₁ = −2 give Δ_x ≡ 1
    build_coefficients(&CarterParams::new(1.0, 0.0, 0.0, 0.0, [-2.0, 0.0, 0.0, 0.0, 0.0]))
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn r_plus(a: f64) -> f64 {
    1.0 + (1.0 - a * a).sqrt()
}

#[test]
fn radial_exponents_match_closed_form() {
    let co = kerr(0.5);
    let f = frobenius_data(&co, EndpointKind::Radial, r_plus(0.5), 1.0, c(0.3), 0, c(2.0), 20).unwrap();
    assert!((f.kappa - 3f64.sqrt()).abs() < 1e-12);
    assert!((f.exponents[0].im - SIGMA_H).abs() < 1e-12);
    assert!((f.exponents[1].im + SIGMA_H).abs() < 1e-12);
    assert!(f.exponents[0].re.abs() < 1e-15);
    assert!((f.regular_exponent.im + SIGMA_H).abs() < 1e-12);
    assert!(!f.log_branch);
}

#[test]
fn static_exponents_flag_log_branch() {
    let co = kerr(0.5);
    let f = frobenius_data(&co, EndpointKind::Radial, r_plus(0.5), 1.0, c(0.0), 0, c(2.0), 10).unwrap();
    assert_eq!(f.exponents[0], c(0.0));
    assert_eq!(f.exponents[1], c(0.0));
    assert!(f.log_branch);
}

#[test]
fn extremal_double_root_is_rejected() {
    let co = build_coefficients(&kn_embed(1.0, 0.6, 0.8).unwrap());
    let e = frobenius_data(&co, EndpointKind::Radial, 1.0, 1.0, c(0.3), 0, c(2.0), 10).unwrap_err();
    assert!(matches!(e, ModeError::NotSimpleZero { .. }));
    let e = frobenius_data(&kerr(0.5), EndpointKind::Radial, 3.0, 1.0, c(0.3), 0, c(2.0), 10).unwrap_err();
    assert!(matches!(e, ModeError::NotAZero { .. }));
}

#[test]
fn frobenius_series_solves_the_equation() {
    let co = kerr(0.5);
    let f = frobenius_data(&co, EndpointKind::Radial, r_plus(0.5), 1.0, c(0.3), 1, c(2.5), 30).unwrap();
    for y in [1e-3, 1e-2, 5e-2] {
        assert!(f.residual(y) < 1e-12, "y = {y}: {}", f.residual(y));
    }
    let g = frobenius_data(&co, EndpointKind::Angular, -1.0, 1.0, c(0.3), 1, c(2.5), 30).unwrap();
    assert!((g.exponents[0].re - 0.5).abs() < 1e-14);
    assert!(g.residual(1e-2) < 1e-12);
}

fn horizon_start(co: &CoefficientSet<f64>, omega: f64, m: i32, lambda: f64, y: f64) -> (f64, Complex64, Complex64) {
    let rp = r_plus(co.params.a);
    let f = frobenius_data(co, EndpointKind::Radial, rp, 1.0, c(omega), m, c(lambda), 30).unwrap();
    let (v, flux) = f.eval(y);
    let r = rp + y;
    (r, v, flux / co.delta_r(&r))
}

#[test]
fn real_data_has_zero_wronskian() {
    let co = kerr(0.5);
    let p = ModeParams { omega: c(0.3), m: 0, lambda: c(2.0), coeffs: co };
    let t = integrate_radial(&p, (3.0, 12.0), c(1.0), c(-0.4), 1e-12, 200).unwrap();
    assert!(t.wronskian.iter().all(|w| w.norm() == 0.0));
}

#[test]
fn horizon_branch_wronskian_is_conserved() {
    let co = kerr(0.5);
    let (r0, v, dv) = horizon_start(&co, 0.3, 1, 2.0, 1e-5);
    let p = ModeParams { omega: c(0.3), m: 1, lambda: c(2.0), coeffs: co };
    let t = integrate_radial(&p, (r0, 20.0), v, dv, 1e-13, 400).unwrap();
    let w0 = t.wronskian[0].norm();
    assert!(w0 > 1e-3);
    assert!(t.max_drift / w0 < 1e-9, "relative drift {}", t.max_drift / w0);
}

#[test]
fn two_solution_wronskian_is_constant() {
    let co = kerr(0.5);
    let p = ModeParams { omega: c(0.45), m: 2, lambda: c(6.3), coeffs: co };
    let a = integrate_radial(&p, (2.5, 15.0), c(1.0), c(0.0), 1e-13, 300).unwrap();
    let b = integrate_radial(&p, (2.5, 15.0), c(0.0), c(1.0), 1e-13, 300).unwrap();
    let w = pair_wronskian(&a, &b);
    let drift = w.iter().map(|x| (x - w[0]).norm()).fold(0.0, f64::max);
    assert!(drift / w[0].norm() < 1e-9, "{drift}");
}

#[test]
fn wronskian_drift_shrinks_with_tolerance() {
    let co = kerr(0.5);
    let (r0, v, dv) = horizon_start(&co, 0.3, 1, 2.0, 1e-3);
    let p = ModeParams { omega: c(0.3), m: 1, lambda: c(2.0), coeffs: co };
    let drift = |tol: f64| integrate_radial(&p, (r0, 20.0), v, dv, tol, 100).unwrap().max_drift;
    let coarse = drift(1e-6);
    let fine = drift(1e-10);
    assert!(fine < coarse * 1e-2, "{coarse} -> {fine}");
}

#[test]
fn endpoint_start_is_refused() {
    let co = kerr(0.5);
    let p = ModeParams { omega: c(0.3), m: 0, lambda: c(2.0), coeffs: co };
    let e = integrate_radial(&p, (r_plus(0.5), 4.0), c(1.0), c(0.0), 1e-10, 10).unwrap_err();
    assert!(matches!(e, ModeError::StepFailure(_)));
}

#[test]
fn legendre_angular_spectrum() {
    let s = angular_eigenvalues(&kerr(0.0), 0.0, 0, (-1.0, 1.0), AngularBc::RegularEndpoint, 4).unwrap();
    for (j, v) in s.values.iter().enumerate() {
        let exact = (j * (j + 1)) as f64;
        assert!((v - exact).abs() < 1e-8, "j = {j}: {v}");
    }
    assert!(s.near_degenerate.is_empty());
}

#[test]
fn rotating_static_potential_keeps_spectrum_nonnegative() {
    let s = angular_eigenvalues(&kerr(0.5), 0.5, 0, (-1.0, 1.0), AngularBc::RegularEndpoint, 3).unwrap();
    assert!(s.values[0] >= 0.0);
    assert!(s.values.windows(2).all(|w| w[0] < w[1]));
    // the potential a²Ω²(1 − x²) is bounded by a²Ω²
    assert!(s.values[0] <= 0.0625 + 1e-10);
}

#[test]
fn flat_interval_spectrum() {
    let pi = std::f64::consts::PI;
    let n = angular_eigenvalues(&flat(), 0.0, 0, (-0.5, 0.5), AngularBc::Neumann, 4).unwrap();
    let d = angular_eigenvalues(&flat(), 0.0, 0, (-0.5, 0.5), AngularBc::Dirichlet, 3).unwrap();
    for j in 0..4 {
        assert!((n.values[j] - (j as f64 * pi).powi(2)).abs() < 1e-8, "{:?}", n.values);
    }
    for j in 0..3 {
        assert!((d.values[j] - ((j + 1) as f64 * pi).powi(2)).abs() < 1e-8, "{:?}", d.values);
    }
}

#[test]
fn flat_spectrum_against_dense_matrix() {
    // second-order Neumann matrix on the vertex grid, Richardson-extrapolated
    let dense = |n: usize| -> Vec<f64> {
        let h = 1.0 / n as f64;
        let mut k = faer::Mat::<f64>::zeros(n + 1, n + 1);
        let mut w = vec![h; n + 1];
        w[0] = h / 2.0;
        w[n] = h / 2.0;
        for i in 0..n {
            k[(i, i)] += 1.0 / h;
            k[(i + 1, i + 1)] += 1.0 / h;
            k[(i, i + 1)] -= 1.0 / h;
            k[(i + 1, i)] -= 1.0 / h;
        }
        let mut s = faer::Mat::<f64>::zeros(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..=n {
                s[(i, j)] = k[(i, j)] / (w[i] * w[j]).sqrt();
            }
        }
        let (mut ev, _) = symmetric_eigen(&s).unwrap();
        ev.sort_by(f64::total_cmp);
        ev
    };
    let (a, b) = (dense(400), dense(800));
    let shoot = angular_eigenvalues(&flat(), 0.0, 0, (-0.5, 0.5), AngularBc::Neumann, 3).unwrap();
    for j in 1..3 {
        let extrap = (4.0 * b[j] - a[j]) / 3.0;
        assert!((shoot.values[j] - extrap).abs() < 1e-6 * extrap, "{j}: {} vs {extrap}", shoot.values[j]);
    }
}

#[test]
fn angular_solution_endpoints() {
    let co = kerr(0.0);
    let sol = angular_solution(&co, 0.0, 0, (-1.0, 1.0), AngularBc::RegularEndpoint, 6.0, 200).unwrap();
    // λ = 6 is P₂ = (3x² − 1)/2 up to normalisation
    let (x, s, _) = sol[sol.len() / 3];
    let (x0, s0, _) = sol[0];
    let p2 = |x: f64| 0.5 * (3.0 * x * x - 1.0);
    assert!((s / s0 - p2(x) / p2(x0)).abs() < 1e-8);
}

#[test]
fn angular_wronskian_vanishes_at_endpoint() {
    let co = kerr(0.5);
    let m = 1;
    let f1 = frobenius_data(&co, EndpointKind::Angular, -1.0, 1.0, c(0.3), m, c(2.0), 30).unwrap();
    let f2 = frobenius_data(&co, EndpointKind::Angular, -1.0, 1.0, c(0.3), m, c(5.0), 30).unwrap();
    let w = |y: f64| {
        let (s1, p1) = f1.eval(y);
        let (s2, p2) = f2.eval(y);
        (s1.conj() * p2 - p1.conj() * s2).norm()
    };
    let (y0, y1) = (1e-4, 1e-3);
    let slope = (w(y1) / w(y0)).ln() / (y1 / y0).ln();
    let two_s = 2.0 * f1.regular_exponent.re;
    assert!(w(y0) < 1e-6);
    assert!(slope >= two_s - 1e-6, "slope {slope} below {two_s}");
}

#[test]
fn separated_solution_reassembles() {
    let co = kerr(0.5);
    for (omega, m) in [(0.3, 0), (0.4, 1), (0.25, -2)] {
        let rep = reassembly_check(&co, omega, m, ((-1.0, 1.0), AngularBc::RegularEndpoint, 1), (3.0, 6.0)).unwrap();
        assert!(rep.max_residual < 1e-6, "({omega}, {m}): {}", rep.max_residual);
    }
}

#[test]
fn zero_frequency_subextremal_families() {
    let cases = [
        (Family::Kerr, 0.5, 0.0),
        (Family::ReissnerNordstrom, 0.0, 0.6),
        (Family::KerrNewman, 0.4, 0.5),
    ];
    for (fam, a, q) in cases {
        for ell in 0..=2usize {
            let r = zero_frequency_classify(fam, 1.0, a, q, ell).unwrap();
            assert_eq!(r.regular_branch, RegularBranch::LegendreP);
            assert_eq!(r.singular_branch, SingularBranch::LegendreQLog);
            assert!(r.log_at_horizon);
            assert!(!r.admissible_state_exists);
            assert!((r.alpha - (1.0 - a * a - q * q).sqrt()).abs() < 1e-15);
            assert!(r.branch_residual < 1e-6, "{fam:?} {ell}: {}", r.branch_residual);
            assert!((r.growth_exponent - ell as f64).abs() < 1e-3);
            assert!((r.singular_rate + 0.5).abs() < 1e-5, "{}", r.singular_rate);
            let expect = if ell == 0 { InfinityBehavior::Constant } else { InfinityBehavior::Grows { power: ell } };
            assert_eq!(r.infinity, expect);
        }
    }
}

#[test]
fn zero_frequency_extremal() {
    for ell in 0..=2usize {
        let r = zero_frequency_classify(Family::ExtremalKerrNewman, 1.0, 0.6, 0.8, ell).unwrap();
        let l = ell as f64;
        assert_eq!(r.indicial_roots, [l, -l - 1.0]);
        assert_eq!(r.regular_branch, RegularBranch::PowerY);
        assert_eq!(r.singular_branch, SingularBranch::InversePower);
        assert!(!r.log_at_horizon);
        assert!(!r.admissible_state_exists);
        assert!(r.branch_residual < 1e-12);
        assert!((r.growth_exponent - l).abs() < 1e-9);
        assert!((r.singular_rate + l + 1.0).abs() < 1e-9);
    }
}

#[test]
fn zero_frequency_domain_errors() {
    assert!(zero_frequency_classify(Family::Kerr, 1.0, 1.2, 0.0, 1).is_err());
    assert!(zero_frequency_classify(Family::Kerr, 1.0, 0.5, 0.1, 1).is_err());
    assert!(zero_frequency_classify(Family::ReissnerNordstrom, 1.0, 0.1, 0.5, 1).is_err());
    assert!(zero_frequency_classify(Family::ExtremalKerrNewman, 1.0, 0.5, 0.5, 1).is_err());
    assert!(zero_frequency_classify(Family::KerrNewman, -1.0, 0.1, 0.1, 1).is_err());
}

#[test]
fn legendre_low_orders() {
    let x = 0.3;
    assert!((legendre_p(2, x).0 - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
    let q0 = 0.5 * ((1.0 + x) / (1.0 - x)).ln();
    assert!((legendre_q(1, x).0 - (x * q0 - 1.0)).abs() < 1e-15);
    let y: f64 = 3.0;
    let q0y = 0.5 * ((y + 1.0) / (y - 1.0)).ln();
    let q2 = 0.5 * (3.0 * y * y - 1.0) * q0y - 1.5 * y;
    assert!((legendre_q(2, y).0 - q2).abs() < 1e-13);
}

proptest! {
    #[test]
    fn legendre_wronskian_identity(l in 0usize..12, x in prop_oneof![-0.95f64..0.95, 1.05f64..20.0]) {
        let (p, dp) = legendre_p(l, x);
        let (q, dq) = legendre_q(l, x);
        let w = p * dq - dp * q;
        let exact = 1.0 / (1.0 - x * x);
        prop_assert!((w - exact).abs() <= 1e-9 * exact.abs().max(1.0), "l={} x={} w={} exact={}", l, x, w, exact);
    }

    #[test]
    fn legendre_recurrence_consistency(l in 1usize..15, x in 1.05f64..30.0) {
        let q = |n: usize| legendre_q(n, x).0;
        let lhs = (l as f64 + 1.0) * q(l + 1);
        let rhs = (2 * l + 1) as f64 * x * q(l) - l as f64 * q(l - 1);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(q(l).abs()));
    }
}
