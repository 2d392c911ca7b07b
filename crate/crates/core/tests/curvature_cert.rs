use carterlab::curvature::{
    curvature, ricci_defect_numerators, spot_check_random, verify_certificates, CertError, Fault,
    Geometry, SymParams, PHI, R, T, X,
};
use carterlab::metric::CarterParams;
use carterlab::poly::{rat, SparsePoly, Var};

#[test]
fn generic_family_certificate_passes() {
    let report = verify_certificates(SymParams::generic(), Fault::None).unwrap();
    assert!(report.passed());
    assert_eq!(report.defect_components.len(), 6);
}

#[test]
fn flipped_cross_term_fails_the_certificate() {
    match verify_certificates(SymParams::generic(), Fault::FlipGtphiTerm) {
        Err(CertError::CertificateFailure { coefficient, .. }) => assert_ne!(coefficient, "0"),
        other => panic!("expected a certificate failure, got {other:?}"),
    }
}

#[test]
fn kn_defect_is_charge_squared() {
    let p = SymParams::kn_generic();
    assert_eq!(p.delta(), SparsePoly::var(Var::C3));
    let report = verify_certificates(p, Fault::None).unwrap();
    assert!(report.passed());
}

#[test]
fn kerr_has_no_defect() {
    let geo = Geometry::new(SymParams::specialized(&CarterParams::kerr(rat(1, 1), rat(2, 5))), Fault::None);
    let data = curvature(&geo, usize::MAX).unwrap();
    for m in [T, R, X, PHI] {
        for n in [T, R, X, PHI] {
            assert!(data.trace_free[m][n].is_zero(), "S[{m}][{n}]");
        }
    }
    assert!(ricci_defect_numerators(&geo, &data).iter().all(|n| n.residual.is_zero()));
}

#[test]
fn spot_check_passes_and_catches_the_fault() {
    let ok = spot_check_random(5, 11, Fault::None).unwrap();
    assert!(ok.all_zero);
    assert_eq!(ok.points, 5);
    let bad = spot_check_random(2, 11, Fault::FlipGtphiTerm).unwrap();
    assert!(!bad.all_zero);
    assert_eq!(spot_check_random(0, 1, Fault::None).unwrap_err(), CertError::NoPoints);
}
