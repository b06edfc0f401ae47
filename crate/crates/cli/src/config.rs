//! Run configuration: one TOML file per run, schema-validated with unknown
//! keys rejected, plus dotted-path command-line overrides.

use std::path::Path;

use mtcorr_core::bath::{CorrelationModel, FiniteBath};
use mtcorr_core::cmatrix::{mats, CMatrix, C64};
use mtcorr_core::generators::OdeConfig;
use mtcorr_core::opalg::{DensityMatrix, HermitianObservable};
use mtcorr_core::oracle::Branch;
use mtcorr_core::perturb::{PropagatorChoice, SystemSpec};
use mtcorr_core::quad::QuadConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A matrix is either a named preset ("pauli_x", "identity2",
/// "maximally_mixed4", "zero2") or a literal array of rows whose entries
/// are reals or [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Preset(String),
    Literal(Vec<Vec<EntrySpec>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntrySpec {
    Real(f64),
    Complex([f64; 2]),
}

impl MatrixSpec {
    pub fn build(&self, key: &str) -> Result<CMatrix, CliError> {
        match self {
            MatrixSpec::Preset(name) => preset_matrix(name)
                .ok_or_else(|| CliError::validation(format!("{key}: unknown preset '{name}'"))),
            MatrixSpec::Literal(rows) => {
                let n = rows.len();
                if n == 0 {
                    return Err(CliError::validation(format!("{key}: empty matrix literal")));
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(CliError::validation(format!(
                            "{key}: matrix literal must be square; row {i} has {} entries, \
                             expected {n}x{n}",
                            row.len()
                        )));
                    }
                }
                let mut m = CMatrix::zeros(n, n);
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        let v = match e {
                            EntrySpec::Real(x) => C64::new(*x, 0.0),
                            EntrySpec::Complex([re, im]) => C64::new(*re, *im),
                        };
                        m.set(i, j, v);
                    }
                }
                Ok(m)
            }
        }
    }
}

fn preset_matrix(name: &str) -> Option<CMatrix> {
    match name {
        "pauli_x" => return Some(mats::pauli_x()),
        "pauli_y" => return Some(mats::pauli_y()),
        "pauli_z" => return Some(mats::pauli_z()),
        _ => {}
    }
    for (prefix, f) in [
        ("identity", (|d| CMatrix::identity(d)) as fn(usize) -> CMatrix),
        ("zero", |d| CMatrix::zeros(d, d)),
        ("maximally_mixed", |d| {
            CMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0))
        }),
    ] {
        if let Some(dim) = name.strip_prefix(prefix) {
            if let Ok(d) = dim.parse::<usize>() {
                if (1..=64).contains(&d) {
                    return Some(f(d));
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// finite-bath fields
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_e: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<MatrixSpec>>,
    #[serde(default = "default_tau_hint")]
    pub tau_hint: f64,
    #[serde(default = "default_broadening")]
    pub broadening: f64,
}

fn default_kind() -> String {
    "exponential".into()
}
fn default_tau() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    0.2
}
fn default_lambda() -> f64 {
    0.1
}
fn default_tau_hint() -> f64 {
    1.0
}
fn default_broadening() -> f64 {
    1e-4
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            tau: default_tau(),
            beta: default_beta(),
            lambda: default_lambda(),
            h_e: None,
            couplings: None,
            tau_hint: default_tau_hint(),
            broadening: default_broadening(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default = "default_hs")]
    pub hs: MatrixSpec,
    #[serde(default = "default_coupling")]
    pub coupling: MatrixSpec,
    #[serde(default = "default_rho0")]
    pub rho0: MatrixSpec,
}

fn default_hs() -> MatrixSpec {
    MatrixSpec::Preset("zero2".into())
}
fn default_coupling() -> MatrixSpec {
    MatrixSpec::Preset("pauli_x".into())
}
fn default_rho0() -> MatrixSpec {
    MatrixSpec::Preset("maximally_mixed2".into())
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { hs: default_hs(), coupling: default_coupling(), rho0: default_rho0() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySection {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_observables")]
    pub observables: Vec<MatrixSpec>,
    #[serde(default = "default_branches")]
    pub branches: Vec<String>,
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default = "default_propagator")]
    pub propagator: String,
}

fn default_times() -> Vec<f64> {
    vec![6.0, 14.0]
}
fn default_observables() -> Vec<MatrixSpec> {
    vec![MatrixSpec::Preset("pauli_z".into()), MatrixSpec::Preset("pauli_z".into())]
}
fn default_branches() -> Vec<String> {
    vec!["plus".into(), "plus".into()]
}
fn default_order() -> u32 {
    1
}
fn default_propagator() -> String {
    "davies".into()
}

impl Default for QuerySection {
    fn default() -> Self {
        Self {
            times: default_times(),
            observables: default_observables(),
            branches: default_branches(),
            order: default_order(),
            propagator: default_propagator(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_quad_rel_tol")]
    pub quad_rel_tol: f64,
    #[serde(default = "default_quad_cutoff_tau")]
    pub quad_cutoff_tau: f64,
    #[serde(default = "default_ode_dt_tau")]
    pub ode_dt_tau: f64,
}

fn default_quad_rel_tol() -> f64 {
    mtcorr_core::tolerances::QUAD_REL
}
fn default_quad_cutoff_tau() -> f64 {
    mtcorr_core::tolerances::QUAD_CUTOFF_TAU
}
fn default_ode_dt_tau() -> f64 {
    mtcorr_core::tolerances::ODE_DT_TAU
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            quad_rel_tol: default_quad_rel_tol(),
            quad_cutoff_tau: default_quad_cutoff_tau(),
            ode_dt_tau: default_ode_dt_tau(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

fn default_dir() -> String {
    "out".into()
}
fn default_precision() -> usize {
    12
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), precision: default_precision() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSection {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    #[serde(default = "default_dt_grid")]
    pub dt_grid: Vec<f64>,
}

fn default_mu() -> f64 {
    0.05
}
fn default_omega_min() -> f64 {
    -0.5
}
fn default_omega_max() -> f64 {
    0.5
}
fn default_omega_points() -> usize {
    41
}
fn default_dt_grid() -> Vec<f64> {
    vec![6.0, 10.0, 14.0]
}

impl Default for DemoSection {
    fn default() -> Self {
        Self {
            mu: default_mu(),
            omega_min: default_omega_min(),
            omega_max: default_omega_max(),
            omega_points: default_omega_points(),
            dt_grid: default_dt_grid(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
}

fn default_seed() -> u64 {
    7
}
fn default_lambdas() -> Vec<f64> {
    vec![0.02, 0.04, 0.08]
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self { seed: default_seed(), lambdas: default_lambdas() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdtSection {
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    /// observable probed on the finite bath; defaults to its coupling
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<MatrixSpec>,
}

impl Default for FdtSection {
    fn default() -> Self {
        Self { omega_points: default_omega_points(), observable: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SusceptibilitySection {
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default = "default_n_terms")]
    pub n_terms: usize,
    #[serde(default = "default_omega_cutoff")]
    pub omega_cutoff: f64,
}

fn default_t_min() -> f64 {
    0.5
}
fn default_t_max() -> f64 {
    5.0
}
fn default_t_points() -> usize {
    10
}
fn default_n_terms() -> usize {
    4000
}
fn default_omega_cutoff() -> f64 {
    4000.0
}

impl Default for SusceptibilitySection {
    fn default() -> Self {
        Self {
            t_min: default_t_min(),
            t_max: default_t_max(),
            t_points: default_t_points(),
            n_terms: default_n_terms(),
            omega_cutoff: default_omega_cutoff(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub query: QuerySection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub demo: DemoSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub fdt: FdtSection,
    #[serde(default)]
    pub susceptibility: SusceptibilitySection,
}

/// Load, apply `--set key=value` overrides, deserialize, validate.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| CliError::validation(format!("config is not valid TOML: {e}")))?;
    for ov in overrides {
        apply_override(&mut value, ov)?;
    }
    let config: RunConfig = RunConfig::deserialize(value)
        .map_err(|e| CliError::validation(format!("config schema error: {e}")))?;
    validate(&config)?;
    Ok(config)
}

fn apply_override(root: &mut toml::Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("--set needs key=value, got '{spec}'")))?;
    let parsed: toml::Value = format!("v = {raw}")
        .parse::<toml::Value>()
        .ok()
        .and_then(|t| t.get("v").cloned())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            let table = node.as_table_mut().ok_or_else(|| {
                CliError::validation(format!("--set {key}: '{part}' is not a table"))
            })?;
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| CliError::validation(format!("--set {key}: '{part}' is not a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!()
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    if c.model.kind != "exponential" && c.model.kind != "finite" {
        return Err(CliError::validation(format!(
            "model.kind must be 'exponential' or 'finite', got '{}'",
            c.model.kind
        )));
    }
    if c.model.tau <= 0.0 {
        return Err(CliError::validation(format!("model.tau must be > 0, got {}", c.model.tau)));
    }
    if c.model.beta < 0.0 {
        return Err(CliError::validation(format!("model.beta must be >= 0, got {}", c.model.beta)));
    }
    if c.model.lambda < 0.0 {
        return Err(CliError::validation(format!(
            "model.lambda must be >= 0, got {}",
            c.model.lambda
        )));
    }
    if c.model.kind == "finite" && c.model.h_e.is_none() {
        return Err(CliError::validation("model.h_e is required when model.kind = 'finite'".into()));
    }
    if c.model.tau_hint <= 0.0 {
        return Err(CliError::validation(format!(
            "model.tau_hint must be > 0, got {}",
            c.model.tau_hint
        )));
    }
    if c.query.order > 1 {
        return Err(CliError::validation(format!(
            "query.order must be 0 or 1, got {}",
            c.query.order
        )));
    }
    if !matches!(c.query.propagator.as_str(), "davies" | "redfield" | "born" | "closed") {
        return Err(CliError::validation(format!(
            "query.propagator must be one of davies/redfield/born/closed, got '{}'",
            c.query.propagator
        )));
    }
    if c.query.times.len() != c.query.observables.len()
        || c.query.times.len() != c.query.branches.len()
    {
        return Err(CliError::validation(format!(
            "query: times ({}), observables ({}) and branches ({}) must have equal lengths",
            c.query.times.len(),
            c.query.observables.len(),
            c.query.branches.len()
        )));
    }
    for b in &c.query.branches {
        if b != "plus" && b != "minus" {
            return Err(CliError::validation(format!(
                "query.branches entries must be 'plus' or 'minus', got '{b}'"
            )));
        }
    }
    if c.numerics.quad_rel_tol <= 0.0 || c.numerics.quad_cutoff_tau <= 0.0 {
        return Err(CliError::validation(
            "numerics.quad_rel_tol and numerics.quad_cutoff_tau must be > 0".into(),
        ));
    }
    if c.numerics.ode_dt_tau <= 0.0 {
        return Err(CliError::validation("numerics.ode_dt_tau must be > 0".into()));
    }
    if c.output.precision == 0 || c.output.precision > 17 {
        return Err(CliError::validation(format!(
            "output.precision must be in 1..=17, got {}",
            c.output.precision
        )));
    }
    if c.demo.omega_points < 2 || c.demo.omega_max <= c.demo.omega_min {
        return Err(CliError::validation("demo omega grid is degenerate".into()));
    }
    if c.susceptibility.t_min <= 0.0 || c.susceptibility.t_max <= c.susceptibility.t_min {
        return Err(CliError::validation(
            "susceptibility.t_min must be > 0 and t_max > t_min".into(),
        ));
    }
    Ok(())
}

/// Materialized objects shared by commands.
pub struct BuiltConfig {
    pub model: CorrelationModel,
    pub sys: SystemSpec,
    pub observables: Vec<HermitianObservable>,
    pub branches: Vec<Branch>,
    pub choice: PropagatorChoice,
}

pub fn build_model(c: &RunConfig) -> Result<CorrelationModel, CliError> {
    match c.model.kind.as_str() {
        "exponential" => {
            CorrelationModel::exponential_high_t(c.model.tau, c.model.beta, c.model.lambda)
                .map_err(CliError::numeric_from)
        }
        "finite" => {
            let h_e = c
                .model
                .h_e
                .as_ref()
                .expect("validated")
                .build("model.h_e")?;
            let couplings: Vec<CMatrix> = match &c.model.couplings {
                Some(specs) if !specs.is_empty() => {
                    let mut v = Vec::new();
                    for (i, s) in specs.iter().enumerate() {
                        v.push(s.build(&format!("model.couplings[{i}]"))?);
                    }
                    v
                }
                _ => {
                    return Err(CliError::validation(
                        "model.couplings must list at least one operator for a finite bath".into(),
                    ))
                }
            };
            let fb = FiniteBath::thermal(&h_e, &couplings, c.model.beta, c.model.lambda)
                .map_err(CliError::numeric_from)?
                .with_tau_hint(c.model.tau_hint)
                .with_broadening(c.model.broadening);
            Ok(CorrelationModel::Finite(fb))
        }
        _ => unreachable!("validated"),
    }
}

pub fn build(c: &RunConfig) -> Result<BuiltConfig, CliError> {
    let model = build_model(c)?;
    let hs = c.system.hs.build("system.hs")?;
    let coupling = c.system.coupling.build("system.coupling")?;
    let rho0_m = c.system.rho0.build("system.rho0")?;
    let rho0 = DensityMatrix::new(rho0_m, 1e-9)
        .map_err(|e| CliError::validation(format!("system.rho0: {e}")))?;
    let sys = SystemSpec { hs, coupling, rho0 };
    let mut observables = Vec::new();
    for (i, spec) in c.query.observables.iter().enumerate() {
        let key = format!("query.observables[{i}]");
        let m = spec.build(&key)?;
        observables.push(
            HermitianObservable::spectral_decompose(&m, None)
                .map_err(|e| CliError::validation(format!("{key}: {e}")))?,
        );
    }
    let branches = c
        .query
        .branches
        .iter()
        .map(|b| if b == "plus" { Branch::Plus } else { Branch::Minus })
        .collect();
    let choice = match c.query.propagator.as_str() {
        "davies" => PropagatorChoice::Davies,
        "redfield" => PropagatorChoice::Redfield,
        "born" => PropagatorChoice::Born(OdeConfig {
            dt: c.numerics.ode_dt_tau * c.model.tau,
            quad: QuadConfig { rel_tol: c.numerics.quad_rel_tol, ..QuadConfig::default() },
        }),
        _ => PropagatorChoice::Closed,
    };
    Ok(BuiltConfig { model, sys, observables, branches, choice })
}

/// Canonical serialization of the resolved config, hashed into every
/// emitted file header.
pub fn resolved_toml(c: &RunConfig) -> String {
    toml::to_string(c).expect("config serializes")
}
