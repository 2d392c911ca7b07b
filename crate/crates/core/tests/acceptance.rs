//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Runs without the libtest harness so the report is always printed.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command as Proc, ExitCode};
use std::time::Instant;

use carterlab::curvature::{spot_check_random, verify_certificates, Fault, Geometry, SymParams, R};
use carterlab::evolution::{
    default_dt, real_to_complex, run_boundedness_experiment, CVec, RunSettings,
};
use carterlab::horizon::*;
use carterlab::kn::{nontrapping_margin, sign_factor_identity, wall_jordan_obstruction};
use carterlab::metric::{build_coefficients, CarterParams, CoefficientSet, SlabSpec};
use carterlab::modes::*;
use carterlab::poly::{SparsePoly, Var};
use carterlab::slab::{
    assemble_operators, pencil_mode_scan, resolvent_laurent_probe, richardson, solve_spectrum,
    solve_spectrum_with, weighted_mean, DiscreteSlab, EigenMethod, OperatorPair,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// dense generalized eigensolve of the same discretization at 32 and 64
// intervals, Richardson-extrapolated (oracles/slab_lambda1.py)
const KERR_SLAB_LAMBDA1: f64 = 0.2909585703618572;
// 50-digit (r₊² + a²)·0.3 / Δ′(r₊) for Kerr M=1, a=1/2
const SIGMA_H: f64 = 0.646_410_161_513_775_458_71;
// bump and offset charges from the mpmath quadrature oracle
const RN_OFFSET_CHARGE: f64 = -3.0;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kerr_spec() -> SlabSpec {
    SlabSpec::new((3.0, 5.0), (-0.5, 0.5), 1e-3).unwrap()
}

fn kerr_slab(n: usize, m: i32) -> (DiscreteSlab, OperatorPair) {
    let c = build_coefficients(&CarterParams::kerr(1.0, 0.5));
    let slab = DiscreteSlab::carter(&c, &kerr_spec(), n, n, m).unwrap();
    let ops = assemble_operators(&slab);
    (slab, ops)
}

fn random_mean_zero(ops: &OperatorPair, rng: &mut ChaCha8Rng) -> CVec {
    let v: CVec = (0..ops.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let c = weighted_mean(ops, &v);
    v.into_iter().map(|x| x - c).collect()
}

fn constant(ops: &OperatorPair, c: f64) -> CVec {
    vec![Complex64::new(c, 0.0); ops.len()]
}

fn curvature_certificate() -> Verdict {
    let full = verify_certificates(SymParams::generic(), Fault::None).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let spot = spot_check_random(50, 0, Fault::None).map_err(|e| e.to_string())?;
    let spot_time = t.elapsed().as_secs_f64();
    let dir = tempfile::tempdir().unwrap();
    let status = Proc::new(env!("CARGO_BIN_EXE_carterlab"))
        .args(["cert", "--set", "cert.fault=\"flip-gtphi\"", "-o"])
        .arg(dir.path().join("fault"))
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    check(
        full.passed() && full.elapsed <= 600.0 && spot.all_zero && spot_time <= 10.0 && status.code() == Some(1),
        format!(
            "symbolic {:.1}s, 7 numerators zero; 50-point spot {:.2}s; fault exit {:?}",
            full.elapsed,
            spot_time,
            status.code()
        ),
    )
}

fn trace_free_defect() -> Verdict {
    let generic = verify_certificates(SymParams::generic(), Fault::None).map_err(|e| e.to_string())?;
    let p = SymParams::kn_generic();
    let delta_is_q2 = p.delta() == SparsePoly::var(Var::C3);
    let geo = Geometry::new(p.clone(), Fault::None);
    let forms = geo.defect_closed_forms();
    let srr = forms.iter().find(|f| f.1 == R && f.2 == R).unwrap();
    // −δ/ρ⁴: numerator −Q², denominator ρ² squared
    let srr_ok = srr.3.num == SparsePoly::var(Var::C3).neg() && srr.3.den == [2, 0, 0];
    let kn = verify_certificates(p, Fault::None).map_err(|e| e.to_string())?;
    check(
        generic.trace_free_ok && kn.trace_free_ok && kn.passed() && delta_is_q2 && srr_ok,
        format!(
            "trace identically zero (generic and KN); KN defect δ = Q² exactly; {} components match",
            kn.defect_components.len()
        ),
    )
}

fn flat_anchor() -> Verdict {
    let t = Instant::now();
    let spec = SlabSpec::new((0.0, PI), (0.0, PI), 1e-3).unwrap();
    let solve = |n: usize| {
        let ops = assemble_operators(&DiscreteSlab::flat(&spec, n, n, 0));
        solve_spectrum_with(&ops, 6, EigenMethod::ShiftInvert, 1e-10).unwrap().values
    };
    let (a, b) = (solve(64), solve(128));
    let expected = [0.0, 1.0, 1.0, 2.0, 4.0, 4.0];
    let pattern = b.iter().zip(expected).all(|(v, e)| (v - e).abs() < 1e-3);
    let order = ((a[1] - 1.0).abs() / (b[1] - 1.0).abs()).log2();
    let extrap = richardson(a[1], b[1]);
    let secs = t.elapsed().as_secs_f64();
    check(
        pattern && (order - 2.0).abs() < 0.05 && (extrap - 1.0).abs() < 1e-6 && secs <= 60.0,
        format!(
            "λ(128) = {:.5?}; order {order:.3}; extrapolated λ₁ − 1 = {:.1e}; {secs:.1}s",
            &b[..5],
            extrap - 1.0
        ),
    )
}

fn slab_kernel_gap() -> Verdict {
    let solve = |n| {
        let (_, ops) = kerr_slab(n, 0);
        solve_spectrum_with(&ops, 3, EigenMethod::ShiftInvert, 1e-10).unwrap()
    };
    let (coarse, fine) = (solve(32), solve(64));
    let (l0, l1) = (fine.values[0], fine.values[1]);
    let v = &fine.vectors[0];
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let cov = sd / mean.abs();
    let extrap = richardson(coarse.values[1], l1);
    check(
        l0.abs() < 1e-10 * l1 && cov < 1e-10 && (extrap - KERR_SLAB_LAMBDA1).abs() < 1e-6,
        format!(
            "|λ₀|/λ₁ = {:.1e}; CoV = {cov:.1e}; extrapolated λ₁ = {extrap:.10} (oracle gap {:.1e})",
            l0.abs() / l1,
            (extrap - KERR_SLAB_LAMBDA1).abs()
        ),
    )
}

fn weighted_poincare() -> Verdict {
    let (_, ops) = kerr_slab(16, 0);
    let l1 = solve_spectrum(&ops, 2).unwrap().values[1];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let raw: Vec<f64> = (0..ops.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = weighted_mean(&ops, &raw);
        let v: Vec<f64> = raw.iter().map(|x| x - c).collect();
        worst = worst.max(l1 * ops.mass_norm2(&v) / ops.quadratic_form(&v));
    }
    check(worst <= 1.0 + 1e-10, format!("max λ₁·vᴴMv / vᴴHv over 200 vectors = {worst:.12}"))
}

fn resolvent_double_pole() -> Verdict {
    let (_, ops) = kerr_slab(12, 0);
    let spec = solve_spectrum(&ops, ops.len()).unwrap();
    let f: Vec<f64> = (0..ops.len()).map(|k| 1.0 + (0.37 * k as f64).sin()).collect();
    let fit = resolvent_laurent_probe(&ops, &spec.values, &f, &[1e-2, 5e-3, 2.5e-3]).map_err(|e| e.to_string())?;
    let schur_exact = fit.samples.iter().all(|s| s.schur == s.schur_expected);
    let rate = fit.rate.unwrap_or(f64::NAN);
    let pole = fit.samples.iter().map(|s| s.pole_error).fold(0.0, f64::max);
    check(
        schur_exact && (rate - 2.0).abs() < 0.05,
        format!("Schur scalar exact at all σ; pole error ∝ σ^{rate:.3}; largest pole error {pole:.1e}"),
    )
}

fn energy_and_affine() -> Verdict {
    let t = Instant::now();
    let (slab, ops) = kerr_slab(64, 0);
    let l1 = solve_spectrum_with(&ops, 2, EigenMethod::ShiftInvert, 1e-10).unwrap().values[1];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u0: CVec = random_mean_zero(&ops, &mut rng).into_iter().map(|x| x + 0.4).collect();
    let u1: CVec = random_mean_zero(&ops, &mut rng).into_iter().map(|x| x - 0.2).collect();
    let dt = default_dt(&slab);
    let run = RunSettings { horizon: 1e4 * dt, dt, record_every: 1000 };
    let s = run_boundedness_experiment(&slab, &ops, l1, (u0, u1), run).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    check(
        s.steps == 10_000 && s.max_energy_drift < 1e-10 && s.max_affine_defect < 1e-10 && secs <= 300.0,
        format!(
            "{} steps at 64²: energy drift {:.1e}, average second difference {:.1e}; {secs:.0}s",
            s.steps, s.max_energy_drift, s.max_affine_defect
        ),
    )
}

fn threshold_boundedness() -> Verdict {
    let (slab, ops) = kerr_slab(16, 0);
    let spec = solve_spectrum(&ops, 2).unwrap();
    let l1 = spec.values[1];
    let run = RunSettings { horizon: 20.0, dt: default_dt(&slab), record_every: 10 };
    let lin = run_boundedness_experiment(&slab, &ops, l1, (constant(&ops, 1.0), constant(&ops, 1.0)), run)
        .map_err(|e| e.to_string())?;
    let unit = lin.samples[0].u_norm;
    let linear = lin.samples.iter().all(|s| (s.u_norm - unit * (1.0 + s.t)).abs() < 1e-9 * s.u_norm);
    let v_zero = lin.samples.iter().all(|s| s.v_norm < 1e-10 && s.vt_norm < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = (random_mean_zero(&ops, &mut rng), random_mean_zero(&ops, &mut rng));
    let rnd = run_boundedness_experiment(&slab, &ops, l1, data, run).map_err(|e| e.to_string())?;
    let eig = run_boundedness_experiment(&slab, &ops, l1, (real_to_complex(&spec.vectors[1]), constant(&ops, 0.0)), run)
        .map_err(|e| e.to_string())?;
    check(
        linear && v_zero && rnd.sup_ratio <= rnd.constants.c_stab && eig.late_energy_ratio >= 0.99,
        format!(
            "(𝟙,𝟙) grows linearly with v ≡ 0; sup ratio {:.3} ≤ C_stab {:.3e}; eigenmode late energy ratio {:.6}",
            rnd.sup_ratio, rnd.constants.c_stab, eig.late_energy_ratio
        ),
    )
}

fn mode_exclusion() -> Verdict {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut kernels = None;
    for m in 0..=2 {
        let (_, ops) = kerr_slab(8, m);
        let rep = pencil_mode_scan(&ops).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_imag / rep.spectral_radius);
        if m == 0 {
            kernels = Some((rep.kernel_g, rep.kernel_g2));
        }
    }
    check(
        worst < 1e-8 && kernels == Some((Some(1), Some(2))),
        format!("max Im σ / radius = {worst:.1e} for m ∈ {{0,1,2}}; (dim Ker G, dim Ker G²) = {kernels:?}"),
    )
}

fn ode_calculus() -> Verdict {
    let kerr = |a| -> CoefficientSet<f64> { build_coefficients(&CarterParams::kerr(1.0, a)) };
    let c = |x: f64| Complex64::new(x, 0.0);
    let co = kerr(0.5);
    let a: f64 = 0.5;
    let rp = 1.0 + (1.0 - a * a).sqrt();

    let mut wr_drift: f64 = 0.0;
    for (omega, m, lambda) in [(0.3, 1, 2.0), (0.45, 2, 6.3), (0.2, 0, 0.5)] {
        let p = ModeParams { omega: c(omega), m, lambda: c(lambda), coeffs: co.clone() };
        let s = integrate_radial(&p, (2.5, 15.0), c(1.0), c(0.0), 1e-13, 300).map_err(|e| e.to_string())?;
        let t = integrate_radial(&p, (2.5, 15.0), c(0.0), c(1.0), 1e-13, 300).map_err(|e| e.to_string())?;
        let w = pair_wronskian(&s, &t);
        wr_drift = wr_drift.max(w.iter().map(|x| (x - w[0]).norm()).fold(0.0, f64::max) / w[0].norm());
    }

    let leg = angular_eigenvalues(&kerr(0.0), 0.0, 0, (-1.0, 1.0), AngularBc::RegularEndpoint, 5)
        .map_err(|e| e.to_string())?;
    let leg_err = leg.values.iter().enumerate().map(|(j, v)| (v - (j * (j + 1)) as f64).abs()).fold(0.0, f64::max);

    let mut reassembly: f64 = 0.0;
    for (omega, m) in [(0.3, 0), (0.4, 1), (0.25, -2)] {
        let rep = reassembly_check(&co, omega, m, ((-1.0, 1.0), AngularBc::RegularEndpoint, 1), (3.0, 6.0))
            .map_err(|e| e.to_string())?;
        reassembly = reassembly.max(rep.max_residual);
    }

    let mut frob: f64 = 0.0;
    for (omega, m) in [(0.3, 0), (0.3, 1), (0.7, -2)] {
        let f = frobenius_data(&co, EndpointKind::Radial, rp, 1.0, c(omega), m, c(2.0), 10).map_err(|e| e.to_string())?;
        let sigma = ((rp * rp + a * a) * omega - a * m as f64) / (2.0 * (rp - 1.0));
        let want = [Complex64::new(0.0, sigma), Complex64::new(0.0, -sigma)];
        frob = frob.max((f.exponents[0] - want[0]).norm()).max((f.exponents[1] - want[1]).norm());
    }
    let f0 = frobenius_data(&co, EndpointKind::Radial, rp, 1.0, c(0.3), 0, c(2.0), 10).map_err(|e| e.to_string())?;
    frob = frob.max((f0.exponents[0].im - SIGMA_H).abs());

    check(
        wr_drift < 1e-9 && leg_err < 1e-8 && reassembly < 1e-6 && frob < 1e-12,
        format!(
            "Wronskian drift {wr_drift:.1e}; Legendre error {leg_err:.1e}; reassembly {reassembly:.1e}; exponent error {frob:.1e}"
        ),
    )
}

fn zero_frequency() -> Verdict {
    let cases = [
        (Family::Kerr, 0.5, 0.0),
        (Family::ReissnerNordstrom, 0.0, 0.6),
        (Family::KerrNewman, 0.4, 0.5),
        (Family::ExtremalKerrNewman, 0.6, 0.8),
    ];
    let mut count = 0;
    for (fam, a, q) in cases {
        for ell in 0..=2usize {
            let r = zero_frequency_classify(fam, 1.0, a, q, ell).map_err(|e| e.to_string())?;
            let l = ell as f64;
            let ok = if fam == Family::ExtremalKerrNewman {
                r.indicial_roots == [l, -l - 1.0]
                    && r.regular_branch == RegularBranch::PowerY
                    && r.singular_branch == SingularBranch::InversePower
                    && !r.log_at_horizon
            } else {
                r.regular_branch == RegularBranch::LegendreP
                    && r.singular_branch == SingularBranch::LegendreQLog
                    && r.log_at_horizon
            };
            if !ok || r.admissible_state_exists {
                return Err(format!("{fam:?} ℓ={ell}: {r:?}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} (family, ℓ) cases: Legendre P/Q-log or indicial (ℓ, −ℓ−1); no admissible static state"))
}

fn kn_wall() -> Verdict {
    let identity = sign_factor_identity().is_zero();
    let margin = nontrapping_margin(1.0, 0.0, 0.0, 2.5, 400).map_err(|e| e.to_string())?;
    let schw = wall_jordan_obstruction(1.0, 0.0, 0.0, 2.5, 1e-13).map_err(|e| e.to_string())?;
    let kn = wall_jordan_obstruction(1.0, 0.3, 0.2, 2.5, 1e-13).map_err(|e| e.to_string())?;
    check(
        identity
            && (margin.max_factor + 6.25).abs() < 1e-12
            && (schw.numeric - 3.2).abs() < 1e-10
            && (kn.numeric - kn.closed_form).abs() < 1e-10,
        format!(
            "identity exact; margin {:.15}; obstruction {:.12} (closed form 3.2); KN gap {:.1e}",
            margin.max_factor,
            schw.numeric,
            (kn.numeric - kn.closed_form).abs()
        ),
    )
}

fn extremal_charge() -> Verdict {
    let t = Instant::now();
    let c = 0.7;
    let kn = ExtremalState::constant(1.0, 0.6, 0.8, c, 8, 5).map_err(|e| e.to_string())?;
    let rn = ExtremalState::constant(1.0, 0.0, 1.0, c, 8, 5).map_err(|e| e.to_string())?;
    let exact = (carterlab::horizon::extremal_charge(&kn) - 4.0 * c).abs() < 1e-14
        && (extremal_charge_sphere(&rn) - 8.0 * PI * c).abs() < 1e-13;

    let dc = 0.5;
    let p2 = |x: f64| 1.5 * x * x - 0.5;
    let drift = |n| -> Result<f64, String> {
        let st = ExtremalState::new(1.0, 0.0, 1.0, dc, n, 6, |r, x| {
            let y = r - 1.0;
            let s = 1.0 + 0.5 * p2(x);
            (y * (dc - y).powi(2) * s, ((dc - y).powi(2) - 2.0 * y * (dc - y)) * s, 0.0)
        })
        .map_err(|e| e.to_string())?;
        let dv = st.dependence_window() / 200.0;
        Ok(evolve_extremal_rn(st, dv, 200).map_err(|e| e.to_string())?.1.drift)
    };
    let d = [drift(32)?, drift(64)?, drift(128)?];
    let orders = [refinement_order(d[0], d[1]), refinement_order(d[1], d[2])];

    let st = ExtremalState::new(1.0, 0.0, 1.0, dc, 64, 4, |r, _| {
        let y = r - 1.0;
        ((dc - y).powi(2), -2.0 * (dc - y), 0.0)
    })
    .map_err(|e| e.to_string())?;
    let dv = st.dependence_window() / 200.0;
    let (end, ser) = evolve_extremal_rn(st, dv, 200).map_err(|e| e.to_string())?;
    let rep = nondecay_report(&end, &ser);
    let flagged = (rep.charge - RN_OFFSET_CHARGE).abs() < 1e-13 && rep.tangential_decay && rep.obstruction;
    let secs = t.elapsed().as_secs_f64();
    check(
        exact && orders.iter().all(|&o| o >= 2.0) && flagged && secs <= 300.0,
        format!(
            "constant charges exact; drift orders {:.2}/{:.2}; offset data charge {} flagged (decay ratio {:.2}); {secs:.1}s",
            orders[0], orders[1], rep.charge, rep.tangential_decay_ratio
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 13] = [
        ("curvature certificate", curvature_certificate),
        ("trace-free defect", trace_free_defect),
        ("flat-anchor spectrum", flat_anchor),
        ("slab kernel and gap", slab_kernel_gap),
        ("weighted Poincaré", weighted_poincare),
        ("resolvent double pole", resolvent_double_pole),
        ("energy conservation and affine law", energy_and_affine),
        ("threshold boundedness and sharpness", threshold_boundedness),
        ("mode exclusion", mode_exclusion),
        ("ODE calculus", ode_calculus),
        ("zero-frequency classification", zero_frequency),
        ("KN wall diagnostics", kn_wall),
        ("extremal charge", extremal_charge),
    ];
    // optional criterion numbers on the command line restrict the run
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(d) => println!("[{:>2}] PASS  {name}: {d} [{:.1}s]", k + 1, start.elapsed().as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("[{:>2}] FAIL  {name}: {d} [{:.1}s]", k + 1, start.elapsed().as_secs_f64());
            }
        }
    }
    println!(
        "[14] EXCLUDED  asymptotically flat scattering estimates, trapped-set bounds and higher-order horizon \
         blow-up are not asserted; only the identities and obstruction mechanics above are checked"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
