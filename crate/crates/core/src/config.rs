//! Run configuration: TOML text, `--set key.path=value` overrides, schema
//! and physical-range validation, defaults filled in before any numerics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::SlabSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("range error: {0}")]
    Range(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Cert,
    SlabSpectrum,
    SlabEvolve,
    Modes,
    KnCheck,
    HorizonExtremal,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cert => "cert",
            Command::SlabSpectrum => "slab-spectrum",
            Command::SlabEvolve => "slab-evolve",
            Command::Modes => "modes",
            Command::KnCheck => "kn-check",
            Command::HorizonExtremal => "horizon-extremal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarterTable {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "half")]
    pub a: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub c: [f64; 5],
}

impl Default for CarterTable {
    fn default() -> Self {
        CarterTable { m: 1.0, a: 0.5, lambda: 0.0, k: 0.0, c: [0.0; 5] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabTable {
    #[serde(default = "default_r")]
    pub r: [f64; 2],
    #[serde(default = "default_x")]
    pub x: [f64; 2],
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Constant-coefficient anchor instead of the Carter background.
    #[serde(default)]
    pub flat: bool,
}

impl Default for SlabTable {
    fn default() -> Self {
        SlabTable { r: default_r(), x: default_x(), margin: default_margin(), flat: false }
    }
}

impl SlabTable {
    pub fn spec(&self) -> SlabSpec {
        SlabSpec { r_minus: self.r[0], r_plus: self.r[1], x_minus: self.x[0], x_plus: self.x[1], margin: self.margin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Highest Legendre degree for zero-frequency classification.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Azimuthal number.
    #[serde(default)]
    pub m: i32,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            resolution: default_resolution(),
            dt: None,
            tol: default_tol(),
            seed: 0,
            count: default_count(),
            order: default_order(),
            m: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Stem of the output files: `<path>.json`, `<path>.csv`, `<path>.config.toml`.
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { path: default_path(), format: Format::Json }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    #[default]
    Full,
    Spot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FaultChoice {
    #[default]
    None,
    FlipGtphi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertOptions {
    #[serde(default)]
    pub mode: CertMode,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub fault: FaultChoice,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions { mode: CertMode::Full, points: default_points(), fault: FaultChoice::None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOptions {
    #[serde(default)]
    pub method: SpectrumMethod,
    /// Also solve at twice the resolution and extrapolate.
    #[serde(default)]
    pub richardson: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvolveData {
    /// (𝟙, 𝟙): the linearly growing threshold orbit.
    Threshold,
    /// Seeded mean-zero random data.
    Random,
    /// First nonconstant eigenvector, zero velocity.
    #[default]
    Eigenmode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveOptions {
    #[serde(default)]
    pub data: EvolveData,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_record")]
    pub record_every: usize,
    #[serde(default = "default_drift_tol")]
    pub drift_tol: f64,
    /// Allowed relative gap between dt and dt/2 runs over ten steps.
    #[serde(default = "default_probe_tol")]
    pub probe_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            data: EvolveData::Eigenmode,
            horizon: default_horizon(),
            record_every: default_record(),
            drift_tol: default_drift_tol(),
            probe_tol: default_probe_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModesKind {
    #[default]
    Angular,
    ZeroFrequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyChoice {
    #[default]
    Kerr,
    ReissnerNordstrom,
    KerrNewman,
    ExtremalKerrNewman,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesOptions {
    #[serde(default)]
    pub kind: ModesKind,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default = "default_bc")]
    pub bc: crate::modes::AngularBc,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub family: FamilyChoice,
}

impl Default for ModesOptions {
    fn default() -> Self {
        ModesOptions {
            kind: ModesKind::Angular,
            omega: 0.0,
            interval: default_interval(),
            bc: default_bc(),
            scan: None,
            family: FamilyChoice::Kerr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub a: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnOptions {
    #[serde(default = "default_wall")]
    pub r_wall: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl Default for KnOptions {
    fn default() -> Self {
        KnOptions { r_wall: default_wall(), sweep: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonData {
    /// y(δ_c − y)²(1 + P₂(cosθ)/2), y = r − M: nonzero charge, u = 0 on the horizon.
    #[default]
    Bump,
    /// (δ_c − y)²: nonzero charge and a decaying horizon mean of u.
    Offset,
    /// u ≡ 1.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonOptions {
    #[serde(default)]
    pub delta_c: Option<f64>,
    #[serde(default = "default_ntheta")]
    pub n_theta: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub data: HorizonData,
    /// Repeat at twice the radial resolution to estimate the drift order.
    #[serde(default = "yes")]
    pub refine: bool,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        HorizonOptions { delta_c: None, n_theta: default_ntheta(), steps: default_steps(), data: HorizonData::Bump, refine: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default)]
    pub carter: CarterTable,
    #[serde(default)]
    pub slab: SlabTable,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub cert: CertOptions,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub evolve: EvolveOptions,
    #[serde(default)]
    pub modes: ModesOptions,
    #[serde(default)]
    pub kn: KnOptions,
    #[serde(default)]
    pub horizon: HorizonOptions,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}
fn default_r() -> [f64; 2] {
    [3.0, 5.0]
}
fn default_x() -> [f64; 2] {
    [-0.5, 0.5]
}
fn default_margin() -> f64 {
    1e-3
}
fn default_resolution() -> usize {
    32
}
fn default_tol() -> f64 {
    1e-10
}
fn default_count() -> usize {
    6
}
fn default_order() -> usize {
    2
}
fn default_path() -> String {
    "carterlab-out/run".into()
}
fn default_points() -> usize {
    50
}
fn default_horizon() -> f64 {
    20.0
}
fn default_record() -> usize {
    10
}
fn default_drift_tol() -> f64 {
    1e-10
}
fn default_probe_tol() -> f64 {
    1e-2
}
fn default_interval() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_bc() -> crate::modes::AngularBc {
    crate::modes::AngularBc::RegularEndpoint
}
fn default_wall() -> f64 {
    2.5
}
fn default_ntheta() -> usize {
    6
}
fn default_steps() -> usize {
    200
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

/// Applies `key.path=value` to a table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Schema(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(ConfigError::Schema(format!("empty key segment in `{key}`")));
        }
        if i + 1 == parts.len() {
            cur.insert(part.to_string(), parse_value(value.trim()));
            return Ok(());
        }
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Schema(format!("`{}` is not a table", parts[..=i].join("."))))?;
    }
    Ok(())
}

/// Parses, applies overrides, validates, and fills command-specific defaults.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Schema(e.message().to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: RunConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Schema(e.message().to_string()))?;
    resolve(&mut cfg)?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

fn range(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Range(msg()))
    }
}

fn resolve(cfg: &mut RunConfig) -> Result<(), ConfigError> {
    let n = &cfg.numerics;
    range(n.resolution >= 4, || format!("numerics.resolution = {} must be at least 4", n.resolution))?;
    range(n.count >= 1, || "numerics.count must be at least 1".into())?;
    range(n.tol > 0.0 && n.tol < 1.0, || format!("numerics.tol = {} must lie in (0, 1)", n.tol))?;
    if let Some(dt) = n.dt {
        range(dt > 0.0 && dt.is_finite(), || format!("numerics.dt = {dt} must be positive"))?;
    }
    match cfg.command {
        Command::Cert => {
            range(cfg.cert.points >= 1, || "cert.points must be at least 1".into())?;
        }
        Command::SlabSpectrum | Command::SlabEvolve => {
            cfg.slab.spec().validate().map_err(|e| ConfigError::Range(e.to_string()))?;
            range(cfg.carter.k == 0.0, || format!("carter.k = {} must be 0", cfg.carter.k))?;
            if cfg.command == Command::SlabEvolve {
                let e = &cfg.evolve;
                range(e.horizon > 0.0, || format!("evolve.horizon = {} must be positive", e.horizon))?;
            }
        }
        Command::Modes => {
            let [lo, hi] = cfg.modes.interval;
            range(lo < hi, || format!("modes.interval [{lo}, {hi}] is empty"))?;
            if let Some(s) = &cfg.modes.scan {
                range(s.points >= 1 && s.from <= s.to, || "modes.scan needs from <= to and points >= 1".into())?;
            }
            if cfg.modes.kind == ModesKind::ZeroFrequency {
                let (m, a, q) = triple(cfg, (1.0, 0.5, 0.0));
                range(m > 0.0, || format!("M = {m} must be positive"))?;
                range(a * a + q * q <= m * m * (1.0 + 1e-12), || superextremal(m, a, q))?;
            }
        }
        Command::KnCheck => {
            let (m, a, q) = triple(cfg, (1.0, 0.3, 0.2));
            range(m > 0.0, || format!("M = {m} must be positive"))?;
            range(a * a + q * q < m * m, || superextremal(m, a, q))?;
            let (lo, hi) = crate::kn::wall_range(m);
            let rw = cfg.kn.r_wall;
            range(rw > lo && rw < hi, || format!("kn.r_wall = {rw} outside ({lo}, {hi})"))?;
            if let Some(s) = &cfg.kn.sweep {
                for &a in &s.a {
                    for &q in &s.q {
                        range(a * a + q * q < m * m, || superextremal(m, a, q))?;
                    }
                }
            }
        }
        Command::HorizonExtremal => {
            let (m, a, q) = triple(cfg, (1.0, 0.0, 1.0));
            range(m > 0.0, || format!("M = {m} must be positive"))?;
            let excess = a * a + q * q - m * m;
            range(excess.abs() <= crate::horizon::EXTREMAL_TOL * m * m, || {
                format!("horizon-extremal needs a^2 + Q^2 = M^2, off by {excess:e}")
            })?;
            let h = &mut cfg.horizon;
            let dc = *h.delta_c.get_or_insert(0.5 * m);
            range(dc > 0.0, || format!("horizon.delta_c = {dc} must be positive"))?;
            range(h.n_theta >= 1 && h.steps >= 1, || "horizon.n_theta and horizon.steps must be positive".into())?;
        }
    }
    Ok(())
}

fn superextremal(m: f64, a: f64, q: f64) -> String {
    format!("a^2 + Q^2 = {} exceeds M^2 = {}", a * a + q * q, m * m)
}

/// Fills (M, a, Q) with command defaults and returns them.
fn triple(cfg: &mut RunConfig, d: (f64, f64, f64)) -> (f64, f64, f64) {
    (*cfg.mass.get_or_insert(d.0), *cfg.a.get_or_insert(d.1), *cfg.q.get_or_insert(d.2))
}

impl RunConfig {
    pub fn triple(&self) -> (f64, f64, f64) {
        (self.mass.unwrap_or(1.0), self.a.unwrap_or(0.0), self.q.unwrap_or(0.0))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
