//! Subcommand dispatch, verdicts, exit codes, and atomic output files.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::curvature::{spot_check_random, verify_certificates, CertError, Fault, SymParams};
use crate::evolution::{
    default_dt, init_state, real_to_complex, run_boundedness_experiment, CVec, EvolutionError, MidpointStepper,
    RunSettings,
};
use crate::horizon::{self, ExtremalState, HorizonError};
use crate::kn::{self, KnError};
use crate::metric::{build_coefficients, CarterParams, CoefficientSet};
use crate::modes::{self, Family, ModeError};
use crate::slab::{
    assemble_operators, constant_in_kernel, richardson, solve_spectrum, solve_spectrum_with, weighted_mean,
    DiscreteSlab, EigenMethod, OperatorPair, SlabError,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Result of one run before anything is written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub verdict: String,
    pub details: Value,
    pub csv: Option<String>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(e: impl ToString) -> Self {
        Failure { code: EXIT_INVALID_INPUT, message: e.to_string() }
    }
    fn internal(e: impl ToString) -> Self {
        Failure { code: EXIT_INTERNAL, message: e.to_string() }
    }
}

impl From<SlabError> for Failure {
    fn from(e: SlabError) -> Self {
        match e {
            SlabError::NotStrictSlab(_) | SlabError::Metric(_) | SlabError::WrongMode(_) | SlabError::Resolution(_) => {
                Failure::input(e)
            }
            _ => Failure::internal(e),
        }
    }
}

impl From<EvolutionError> for Failure {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::BadStep(_) | EvolutionError::WrongMode(_) => Failure::input(e),
            _ => Failure::internal(e),
        }
    }
}

impl From<ModeError> for Failure {
    fn from(e: ModeError) -> Self {
        match e {
            ModeError::StepFailure(_) | ModeError::BracketFailure { .. } => Failure::internal(e),
            _ => Failure::input(e),
        }
    }
}

impl From<KnError> for Failure {
    fn from(e: KnError) -> Self {
        match e {
            KnError::IntegratorFailure(_) => Failure::internal(e),
            _ => Failure::input(e),
        }
    }
}

impl From<HorizonError> for Failure {
    fn from(e: HorizonError) -> Self {
        match e {
            HorizonError::StepFailure(_) => Failure::internal(e),
            _ => Failure::input(e),
        }
    }
}

/// Named boolean checks; the run passes when all hold.
#[derive(Default, Serialize)]
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn add(&mut self, name: &str, ok: bool) {
        self.0.push((name.to_string(), ok));
    }
    fn passed(&self) -> bool {
        self.0.iter().all(|(_, ok)| *ok)
    }
    fn failed(&self) -> Vec<&str> {
        self.0.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect()
    }
    fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(n, ok)| (n.clone(), Value::Bool(*ok))).collect())
    }
}

fn finish(cmd: Command, checks: Checks, mut details: Value, csv: Option<String>) -> Outcome {
    let passed = checks.passed();
    details["checks"] = checks.to_json();
    let verdict = if passed {
        format!("{}: PASS", cmd.name())
    } else {
        format!("{}: FAIL ({})", cmd.name(), checks.failed().join(", "))
    };
    Outcome { code: if passed { EXIT_PASS } else { EXIT_CHECK_FAILED }, verdict, details, csv }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// Runs the configured computation without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Outcome {
    let res = match cfg.command {
        Command::Cert => run_cert(cfg),
        Command::SlabSpectrum => run_spectrum(cfg),
        Command::SlabEvolve => run_evolve(cfg),
        Command::Modes => run_modes(cfg),
        Command::KnCheck => run_kn(cfg),
        Command::HorizonExtremal => run_horizon(cfg),
    };
    res.unwrap_or_else(|f| Outcome {
        code: f.code,
        verdict: format!(
            "{}: {} ({})",
            cfg.command.name(),
            if f.code == EXIT_INVALID_INPUT { "INVALID INPUT" } else { "INTERNAL FAILURE" },
            f.message
        ),
        details: json!({ "error": f.message }),
        csv: None,
    })
}

fn run_cert(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let fault = match cfg.cert.fault {
        FaultChoice::None => Fault::None,
        FaultChoice::FlipGtphi => Fault::FlipGtphiTerm,
    };
    let mut checks = Checks::default();
    let details = match cfg.cert.mode {
        CertMode::Full => match verify_certificates(SymParams::generic(), fault) {
            Ok(rep) => {
                checks.add("all_numerators_zero", rep.passed());
                json!({ "mode": "full", "report": to_json(&rep) })
            }
            Err(e @ CertError::CertificateFailure { .. }) => {
                checks.add("all_numerators_zero", false);
                json!({ "mode": "full", "failure": e.to_string() })
            }
            Err(e) => return Err(Failure::internal(e)),
        },
        CertMode::Spot => {
            let rep = spot_check_random(cfg.cert.points, cfg.numerics.seed, fault).map_err(Failure::internal)?;
            checks.add("all_points_zero", rep.all_zero);
            json!({ "mode": "spot", "seed": cfg.numerics.seed, "report": to_json(&rep) })
        }
    };
    Ok(finish(cfg.command, checks, details, None))
}

fn carter(cfg: &RunConfig) -> CoefficientSet<f64> {
    let c = &cfg.carter;
    build_coefficients(&CarterParams::new(c.m, c.a, c.lambda, c.k, c.c))
}

fn make_slab(cfg: &RunConfig, n: usize) -> Result<DiscreteSlab, Failure> {
    let spec = cfg.slab.spec();
    let m = cfg.numerics.m;
    if cfg.slab.flat {
        spec.validate().map_err(Failure::input)?;
        Ok(DiscreteSlab::flat(&spec, n, n, m))
    } else {
        Ok(DiscreteSlab::carter(&carter(cfg), &spec, n, n, m)?)
    }
}

/// Mass-weighted coefficient of variation.
fn coefficient_of_variation(ops: &OperatorPair, v: &[f64]) -> f64 {
    let total: f64 = ops.mass.iter().sum();
    let mean = v.iter().zip(&ops.mass).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = v.iter().zip(&ops.mass).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
    var.sqrt() / mean.abs()
}

/// Above this many unknowns `auto` uses shift-invert.
pub const CLI_DENSE_LIMIT: usize = 2000;

fn run_spectrum(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.numerics.resolution;
    let method = match cfg.spectrum.method {
        SpectrumMethod::Auto => EigenMethod::Auto,
        SpectrumMethod::Dense => EigenMethod::Dense,
        SpectrumMethod::ShiftInvert => EigenMethod::ShiftInvert,
    };
    let count = cfg.numerics.count.max(2);
    let solve = |n: usize| -> Result<(OperatorPair, crate::slab::Spectrum), Failure> {
        let ops = assemble_operators(&make_slab(cfg, n)?);
        let method = match method {
            EigenMethod::Auto if ops.len() > CLI_DENSE_LIMIT => EigenMethod::ShiftInvert,
            EigenMethod::Auto => EigenMethod::Dense,
            other => other,
        };
        let spec = solve_spectrum_with(&ops, count, method, cfg.numerics.tol)?;
        Ok((ops, spec))
    };
    let (ops, spec) = solve(n)?;
    let mut checks = Checks::default();
    let max_res = spec.residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    checks.add("residuals_below_1e-6", max_res < 1e-6);
    let mut details = json!({
        "resolution": n,
        "m": cfg.numerics.m,
        "flat": cfg.slab.flat,
        "eigenvalues": spec.values,
        "residuals": spec.residuals,
    });
    if cfg.numerics.m == 0 {
        let (l0, l1) = (spec.values[0], spec.values[1]);
        let cov = coefficient_of_variation(&ops, &spec.vectors[0]);
        checks.add("kernel_is_constant", l0.abs() < 1e-10 * l1 && cov < 1e-10);
        details["lambda1"] = json!(l1);
        details["poincare_constant"] = json!(1.0 / l1);
        details["kernel"] = json!({
            "lambda0": l0,
            "relative_to_lambda1": l0.abs() / l1,
            "coefficient_of_variation": cov,
            "constant_in_kernel": constant_in_kernel(&ops),
        });
        if cfg.spectrum.richardson {
            let (_, fine) = solve(2 * n)?;
            details["richardson"] = json!({
                "coarse": l1,
                "fine": fine.values[1],
                "extrapolated": richardson(l1, fine.values[1]),
            });
        }
    }
    let mut csv = csv_line(&["index".into(), "eigenvalue".into(), "residual".into()]);
    for (i, (v, r)) in spec.values.iter().zip(&spec.residuals).enumerate() {
        csv += &csv_line(&[i.to_string(), v.to_string(), r.to_string()]);
    }
    Ok(finish(cfg.command, checks, details, Some(csv)))
}

fn random_mean_zero(ops: &OperatorPair, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: CVec = (0..ops.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let c = weighted_mean(ops, &v);
    v.into_iter().map(|x| x - c).collect()
}

/// Relative gap in u between ten steps of size dt and twenty of size dt/2.
fn step_doubling_gap(ops: &OperatorPair, data: &(CVec, CVec), dt: f64) -> Result<f64, Failure> {
    let advance = |h: f64, n: usize| -> Result<CVec, Failure> {
        let mut s = init_state(ops, data.0.clone(), data.1.clone())?;
        let stepper = MidpointStepper::new(ops, h)?;
        for _ in 0..n {
            stepper.step(&mut s)?;
        }
        Ok(s.u)
    };
    let coarse = advance(dt, 10)?;
    let fine = advance(0.5 * dt, 20)?;
    let num: f64 = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = fine.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    Ok(if den > 0.0 { num / den } else { num })
}

fn run_evolve(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.numerics.resolution;
    let slab = make_slab(cfg, n)?;
    let ops = assemble_operators(&slab);
    let m = cfg.numerics.m;
    let needs_spectrum = m == 0 || cfg.evolve.data == EvolveData::Eigenmode;
    let spec = if needs_spectrum { Some(solve_spectrum(&ops, 2)?) } else { None };
    let lambda1 = if m == 0 { spec.as_ref().map_or(0.0, |s| s.values[1]) } else { 0.0 };
    let zero = vec![Complex64::new(0.0, 0.0); ops.len()];
    let data: (CVec, CVec) = match cfg.evolve.data {
        EvolveData::Threshold => {
            let one = vec![Complex64::new(1.0, 0.0); ops.len()];
            (one.clone(), one)
        }
        EvolveData::Random => (random_mean_zero(&ops, cfg.numerics.seed), random_mean_zero(&ops, cfg.numerics.seed + 1)),
        EvolveData::Eigenmode => {
            let s = spec.as_ref().expect("spectrum computed");
            (real_to_complex(&s.vectors[if m == 0 { 1 } else { 0 }]), zero)
        }
    };
    let dt = cfg.numerics.dt.unwrap_or_else(|| default_dt(&slab));
    let gap = step_doubling_gap(&ops, &data, dt)?;
    let run = RunSettings { horizon: cfg.evolve.horizon, dt, record_every: cfg.evolve.record_every };
    let series = run_boundedness_experiment(&slab, &ops, lambda1, data, run)?;
    let mut checks = Checks::default();
    checks.add("energy_drift", series.max_energy_drift <= cfg.evolve.drift_tol);
    checks.add("step_doubling", gap <= cfg.evolve.probe_tol);
    if m == 0 {
        checks.add("affine_average", series.max_affine_defect <= cfg.evolve.drift_tol);
    }
    if cfg.evolve.data != EvolveData::Threshold {
        checks.add("stability_bound", series.bound_holds_weighted);
    }
    let mut csv = csv_line(&["t", "energy", "mean_u", "mean_ut", "v_norm", "vt_norm"].map(String::from));
    for s in &series.samples {
        csv += &csv_line(&[s.t, s.energy, s.mean_u, s.mean_ut, s.v_norm, s.vt_norm].map(|x| x.to_string()));
    }
    let details = json!({
        "resolution": n,
        "m": m,
        "dt": dt,
        "data": cfg.evolve.data,
        "steps": series.steps,
        "max_energy_drift": series.max_energy_drift,
        "max_affine_defect": series.max_affine_defect,
        "step_doubling_gap": gap,
        "sup_ratio": series.sup_ratio,
        "sup_ratio_weighted": series.sup_ratio_weighted,
        "c_stab": series.constants.c_stab,
        "c_stab_weighted": series.constants.c_stab_weighted,
        "late_energy_ratio": series.late_energy_ratio,
        "non_decay": series.non_decay,
    });
    Ok(finish(cfg.command, checks, details, Some(csv)))
}

fn family(f: FamilyChoice) -> Family {
    match f {
        FamilyChoice::Kerr => Family::Kerr,
        FamilyChoice::ReissnerNordstrom => Family::ReissnerNordstrom,
        FamilyChoice::KerrNewman => Family::KerrNewman,
        FamilyChoice::ExtremalKerrNewman => Family::ExtremalKerrNewman,
    }
}

fn run_modes(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let o = &cfg.modes;
    let mut checks = Checks::default();
    match o.kind {
        ModesKind::Angular => {
            let coeffs = carter(cfg);
            let omegas: Vec<f64> = match &o.scan {
                Some(s) if s.points > 1 => {
                    (0..s.points).map(|i| s.from + (s.to - s.from) * i as f64 / (s.points - 1) as f64).collect()
                }
                Some(s) => vec![s.from],
                None => vec![o.omega],
            };
            let interval = (o.interval[0], o.interval[1]);
            let spectra = omegas
                .par_iter()
                .map(|&w| modes::angular_eigenvalues(&coeffs, w, cfg.numerics.m, interval, o.bc, cfg.numerics.count))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = csv_line(&["omega", "index", "lambda", "near_degenerate"].map(String::from));
            for s in &spectra {
                for (i, v) in s.values.iter().enumerate() {
                    csv += &csv_line(&[
                        s.omega.to_string(),
                        i.to_string(),
                        v.to_string(),
                        s.near_degenerate.contains(&i).to_string(),
                    ]);
                }
            }
            checks.add(
                "all_eigenvalues_found",
                spectra.iter().all(|s| s.values.len() == cfg.numerics.count && s.values.iter().all(|v| v.is_finite())),
            );
            let details = json!({ "kind": "angular", "m": cfg.numerics.m, "bc": o.bc, "interval": o.interval, "spectra": to_json(&spectra) });
            Ok(finish(cfg.command, checks, details, Some(csv)))
        }
        ModesKind::ZeroFrequency => {
            let (m, a, q) = cfg.triple();
            let reports = (0..=cfg.numerics.order)
                .map(|l| modes::zero_frequency_classify(family(o.family), m, a, q, l))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = csv_line(
                &["ell", "regular_branch", "singular_branch", "log_at_horizon", "infinity", "admissible_state", "branch_residual"]
                    .map(String::from),
            );
            for r in &reports {
                csv += &csv_line(&[
                    r.ell.to_string(),
                    format!("{:?}", r.regular_branch),
                    format!("{:?}", r.singular_branch),
                    r.log_at_horizon.to_string(),
                    format!("{:?}", r.infinity).replace(", ", ";"),
                    r.admissible_state_exists.to_string(),
                    r.branch_residual.to_string(),
                ]);
            }
            checks.add("no_decaying_regular_state", reports.iter().all(|r| !r.admissible_state_exists));
            let details = json!({ "kind": "zero-frequency", "reports": to_json(&reports) });
            Ok(finish(cfg.command, checks, details, Some(csv)))
        }
    }
}

fn kn_point(m: f64, a: f64, q: f64, rw: f64, cfg: &RunConfig) -> Result<(kn::MarginReport, kn::ObstructionReport), KnError> {
    let margin = kn::nontrapping_margin(m, a, q, rw, cfg.numerics.resolution.max(2) * 16)?;
    let obstruction = kn::wall_jordan_obstruction(m, a, q, rw, cfg.numerics.tol.max(1e-13))?;
    Ok((margin, obstruction))
}

/// Tolerance on the gap between the integrated and closed-form wall value.
pub const OBSTRUCTION_GAP_TOL: f64 = 1e-8;

fn run_kn(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (m, a, q) = cfg.triple();
    let rw = cfg.kn.r_wall;
    let mut checks = Checks::default();
    let add_point = |checks: &mut Checks, mr: &kn::MarginReport, ob: &kn::ObstructionReport| {
        checks.add("identity_exact", mr.identity_is_zero);
        checks.add("derivative_sign_agrees", mr.derivative_signs_agree);
        checks.add("obstruction_matches_closed_form", ob.relative_gap <= OBSTRUCTION_GAP_TOL);
        checks.add("obstruction_nonzero", ob.closed_form > 0.0);
    };
    match &cfg.kn.sweep {
        None => {
            let (mr, ob) = kn_point(m, a, q, rw, cfg)?;
            add_point(&mut checks, &mr, &ob);
            let details = json!({ "margin": to_json(&mr), "obstruction": to_json(&ob) });
            Ok(finish(cfg.command, checks, details, None))
        }
        Some(s) => {
            let grid: Vec<(f64, f64)> = s.a.iter().flat_map(|&a| s.q.iter().map(move |&q| (a, q))).collect();
            let rows = grid
                .par_iter()
                .map(|&(a, q)| kn_point(m, a, q, rw, cfg).map(|r| (a, q, r)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = csv_line(
                &["a", "Q", "r_plus", "max_factor", "verdict", "closed_form", "numeric", "relative_gap"].map(String::from),
            );
            for (a, q, (mr, ob)) in &rows {
                add_point(&mut checks, mr, ob);
                csv += &csv_line(&[
                    a.to_string(),
                    q.to_string(),
                    mr.constants.r_plus.to_string(),
                    mr.max_factor.to_string(),
                    format!("{:?}", mr.verdict),
                    ob.closed_form.to_string(),
                    ob.numeric.to_string(),
                    ob.relative_gap.to_string(),
                ]);
            }
            checks.0.dedup_by(|x, y| x.0 == y.0 && {
                y.1 &= x.1;
                true
            });
            let details = json!({ "M": m, "r_wall": rw, "points": rows.len() });
            Ok(finish(cfg.command, checks, details, Some(csv)))
        }
    }
}

fn horizon_data(kind: HorizonData, m: f64, dc: f64) -> impl Fn(f64, f64) -> (f64, f64, f64) {
    move |r, x| {
        let y = r - m;
        match kind {
            HorizonData::Bump => {
                let s = 1.0 + 0.5 * (1.5 * x * x - 0.5);
                (y * (dc - y).powi(2) * s, ((dc - y).powi(2) - 2.0 * y * (dc - y)) * s, 0.0)
            }
            HorizonData::Offset => ((dc - y).powi(2), -2.0 * (dc - y), 0.0),
            HorizonData::Constant => (1.0, 0.0, 0.0),
        }
    }
}

/// Drifts at or below this are rounding and carry no order information.
const DRIFT_FLOOR: f64 = 1e-12;

fn run_horizon(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let (m, a, q) = cfg.triple();
    let h = &cfg.horizon;
    let dc = h.delta_c.unwrap_or(0.5 * m);
    let rn = a == 0.0;
    let run = |n_r: usize| -> Result<(ExtremalState, horizon::ChargeSeries), Failure> {
        let st = ExtremalState::new(m, a, q, dc, n_r, h.n_theta, horizon_data(h.data, m, dc))?;
        let dv = cfg.numerics.dt.unwrap_or(st.dependence_window() / h.steps as f64);
        let out = if rn { horizon::evolve_extremal_rn(st, dv, h.steps) } else { horizon::evolve_extremal_kn(st, dv, h.steps) };
        Ok(out?)
    };
    let n = cfg.numerics.resolution;
    let coarse = run(n)?;
    let fine = if h.refine { Some(run(2 * n)?) } else { None };
    let floor = if rn { 2.0 } else { 1.0 };
    let order = fine.as_ref().and_then(|f| {
        (coarse.1.drift > DRIFT_FLOOR && f.1.drift > DRIFT_FLOOR).then(|| horizon::refinement_order(coarse.1.drift, f.1.drift))
    });
    let (state, series) = fine.as_ref().unwrap_or(&coarse);
    let report = horizon::nondecay_report(state, series);
    let residual = horizon::horizon_equation_residual(state).ok();
    let mut checks = Checks::default();
    if let Some(p) = order {
        checks.add("drift_order", p >= floor);
    }
    checks.add("pole_term_zero", horizon::pole_term(state).abs() < 1e-10);
    let mut csv = csv_line(&["v", "charge", "mean_ur", "mean_u", "mean_dv_u"].map(String::from));
    for i in 0..series.v.len() {
        csv += &csv_line(
            &[series.v[i], series.charge[i], series.mean_ur[i], series.mean_u[i], series.mean_p[i]].map(|x| x.to_string()),
        );
    }
    let details = json!({
        "scheme": if rn { "characteristic" } else { "tau-slices (experimental)" },
        "delta_c": dc,
        "resolution": [n, 2 * n],
        "steps": h.steps,
        "drift": [coarse.1.drift, fine.as_ref().map(|f| f.1.drift)],
        "order": order,
        "order_floor": floor,
        "horizon_residual": residual,
        "nondecay": to_json(&report),
    });
    Ok(finish(cfg.command, checks, details, Some(csv)))
}

/// Writes `contents` through a temporary file in the same directory and
/// renames it into place. `fail_before_rename` simulates a crash.
pub fn write_atomic(path: &Path, contents: &str, fail_before_rename: bool) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    if fail_before_rename {
        return Err(std::io::Error::other("simulated crash before rename"));
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub struct WrittenFiles {
    pub summary: PathBuf,
    pub csv: Option<PathBuf>,
    pub config: PathBuf,
}

fn with_suffix(stem: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{stem}{suffix}"))
}

/// Executes and writes the summary, the CSV table (csv format), and the
/// resolved config next to them.
pub fn run(cfg: &RunConfig) -> std::io::Result<(Outcome, WrittenFiles)> {
    let outcome = execute(cfg);
    let stem = &cfg.output.path;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "exit_code": outcome.code,
        "verdict": outcome.verdict,
        "details": outcome.details,
    });
    let files = WrittenFiles {
        summary: with_suffix(stem, ".json"),
        csv: (cfg.output.format == Format::Csv && outcome.csv.is_some()).then(|| with_suffix(stem, ".csv")),
        config: with_suffix(stem, ".config.toml"),
    };
    write_atomic(&files.config, &cfg.to_toml(), false)?;
    if let (Some(p), Some(c)) = (&files.csv, &outcome.csv) {
        write_atomic(p, c, false)?;
    }
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_atomic(&files.summary, &text, false)?;
    Ok((outcome, files))
}
