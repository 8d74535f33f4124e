//! JSON experiment configuration: presets, dotted overrides and typed parsing.

use lindkrotov::liouville::DensityMatrix;
use lindkrotov::optimizer::{OptimizerConfig, UpdateSign};
use lindkrotov::thermal::{BlochVector, ThermalModel};
use lindkrotov::{CMatrix, CVector, C64};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    OpenOptimize,
    ClosedOptimize,
    ThermalSpeedup,
    FreeTime,
    Qsl,
}

/// Complex entry encoded as `[re, im]`.
pub type Entry = [f64; 2];
/// Row-major matrix of complex entries.
pub type MatrixSpec = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub omega: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Gibbs excited population, an alternative to `beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excited_population: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub h0: MatrixSpec,
    pub mu_prime: MatrixSpec,
    #[serde(default)]
    pub lindblad_ops: Vec<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi0: Option<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_state: Option<Vec<Entry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Final time; thermal modes derive it from the speedup factor instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_delta_tol")]
    pub delta_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub initial_field_amplitude: f64,
    /// `+1` or `−1`.
    #[serde(default = "one")]
    pub field_update_sign: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<[f64; 2]>>,
}

fn one() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    1e-3
}

fn default_k_max() -> usize {
    100
}

fn default_delta_tol() -> f64 {
    1e-8
}

fn default_amplitude() -> f64 {
    0.01
}

impl Default for OptimizerSection {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_oracle_dt")]
    pub dt: f64,
    #[serde(default = "default_oracle_t_max")]
    pub t_max: f64,
}

fn default_oracle_dt() -> f64 {
    1e-4
}

fn default_oracle_t_max() -> f64 {
    1e3
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            dt: default_oracle_dt(),
            t_max: default_oracle_t_max(),
        }
    }
}

/// Field for the `qsl` mode: a constant or one sample per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant(f64),
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_bloch: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speedup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// Names accepted by the `preset` key.
pub const PRESETS: &[&str] = &["gad-qubit", "speedup-demo", "qubit-flip"];

fn c(re: f64, im: f64) -> Value {
    json!([re, im])
}

pub fn preset(name: &str) -> Option<Value> {
    let gad = json!({
        "model": { "omega": 2.0, "gamma": 0.1, "excited_population": 0.4 },
        "initial_bloch": [0.0, -0.38, 0.0],
        "epsilon": 0.1,
    });
    match name {
        "gad-qubit" => Some(gad),
        "speedup-demo" => {
            let mut v = gad;
            merge(
                &mut v,
                json!({
                    "mode": "thermal-speedup",
                    "speedup": 2.0,
                    "grid": { "n_steps": 2000 },
                    "optimizer": {
                        "delta": 1.5,
                        "eta": 1.5,
                        "alpha": 1e-3,
                        "k_max": 100,
                        "delta_tol": 0.0,
                    },
                }),
            );
            Some(v)
        }
        "qubit-flip" => Some(json!({
            "mode": "closed-optimize",
            "system": {
                "h0": [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]],
                "mu_prime": [[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]],
                "psi0": [c(1., 0.), c(0., 0.)],
                "target_state": [c(0., 0.), c(1., 0.)],
            },
            "grid": { "t_final": 4.0, "n_steps": 400 },
            "optimizer": { "delta": 1.0, "eta": 1.0, "alpha": 1e-3, "k_max": 100 },
        })),
        _ => None,
    }
}

/// Recursive object merge; `top` wins.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, t) => *slot = t,
    }
}

/// Replaces the `preset` name by its expansion underneath the user's keys.
pub fn expand_preset(raw: Value) -> Result<Value, CliError> {
    let Some(name) = raw.get("preset") else {
        return Ok(raw);
    };
    let name = name
        .as_str()
        .ok_or_else(|| CliError::Parse("preset must be a string".into()))?;
    let mut expanded = preset(name).ok_or_else(|| {
        CliError::Parse(format!(
            "unknown preset {name:?}; available: {}",
            PRESETS.join(", ")
        ))
    })?;
    merge(&mut expanded, raw);
    Ok(expanded)
}

/// Applies `a.b.c=value`; the value is read as JSON, falling back to a
/// plain string.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override {spec:?} is not key=value")))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(CliError::Parse(format!(
            "override key {path:?} is malformed"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        let obj = match node {
            Value::Object(m) => m,
            _ => {
                return Err(CliError::Parse(format!(
                    "override {path:?} descends into a non-object"
                )))
            }
        };
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("path has at least one segment")
}

impl ExperimentConfig {
    /// Parses a document after preset expansion and overrides.
    pub fn from_document(
        raw: Value,
        overrides: &[String],
        seed: Option<u64>,
        output_dir: Option<&str>,
    ) -> Result<Self, CliError> {
        let mut doc = expand_preset(raw)?;
        if !doc.is_object() {
            return Err(CliError::Parse("config must be a JSON object".into()));
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        if let Some(seed) = seed {
            apply_override(&mut doc, &format!("optimizer.seed={seed}"))?;
        }
        if let Some(dir) = output_dir {
            doc["output_dir"] = Value::String(dir.to_string());
        }
        let config: Self =
            serde_json::from_value(doc).map_err(|e| CliError::Parse(e.to_string()))?;
        config.check_finite()?;
        Ok(config)
    }

    fn check_finite(&self) -> Result<(), CliError> {
        let doc = serde_json::to_value(self).expect("config serializes");
        fn walk(v: &Value, path: &str) -> Result<(), CliError> {
            match v {
                Value::Number(n) if n.as_f64().is_some_and(|x| !x.is_finite()) => {
                    Err(CliError::Validation(format!("{path} is not finite")))
                }
                Value::Array(a) => a
                    .iter()
                    .enumerate()
                    .try_for_each(|(i, x)| walk(x, &format!("{path}[{i}]"))),
                Value::Object(m) => m
                    .iter()
                    .try_for_each(|(k, x)| walk(x, &format!("{path}.{k}"))),
                _ => Ok(()),
            }
        }
        walk(&doc, "config")
    }

    pub fn require<T: Clone>(&self, value: &Option<T>, key: &str) -> Result<T, CliError> {
        value
            .clone()
            .ok_or_else(|| CliError::Validation(format!("mode {:?} requires `{key}`", self.mode)))
    }

    pub fn thermal_model(&self) -> Result<ThermalModel, CliError> {
        let m = self.require(&self.model, "model")?;
        let beta = match (m.beta, m.excited_population) {
            (Some(b), None) => b,
            (None, Some(p)) => ThermalModel::beta_for_excited_population(m.omega, p)?,
            _ => {
                return Err(CliError::Validation(
                    "model needs exactly one of `beta` and `excited_population`".into(),
                ))
            }
        };
        Ok(ThermalModel::new(m.omega, beta, m.gamma)?)
    }

    pub fn initial_bloch(&self) -> Result<BlochVector, CliError> {
        let r = BlochVector(self.require(&self.initial_bloch, "initial_bloch")?);
        if !(r.norm() <= 1.0 + 1e-12) {
            return Err(CliError::Validation(format!(
                "initial_bloch has norm {} > 1",
                r.norm()
            )));
        }
        Ok(r)
    }

    pub fn grid(&self) -> Result<GridConfig, CliError> {
        self.require(&self.grid, "grid")
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig, CliError> {
        let o = &self.optimizer;
        let config = OptimizerConfig {
            delta: o.delta,
            eta: o.eta,
            k_max: o.k_max,
            delta_tol: o.delta_tol,
            seed: o.seed,
            initial_field_amplitude: o.initial_field_amplitude,
            field_update_sign: UpdateSign::from_value(o.field_update_sign)?,
            schedule: o
                .schedule
                .as_ref()
                .map(|s| s.iter().map(|p| (p[0], p[1])).collect()),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn system(&self) -> Result<SystemConfig, CliError> {
        self.require(&self.system, "system")
    }
}

pub fn matrix(spec: &MatrixSpec, name: &str) -> Result<CMatrix, CliError> {
    let rows = spec.len();
    if rows == 0 || spec.iter().any(|r| r.len() != rows) {
        return Err(CliError::Validation(format!(
            "{name} must be a non-empty square matrix"
        )));
    }
    Ok(CMatrix::from_fn(rows, rows, |i, j| {
        C64::new(spec[i][j][0], spec[i][j][1])
    }))
}

pub fn vector(spec: &[Entry], name: &str) -> Result<CVector, CliError> {
    if spec.is_empty() {
        return Err(CliError::Validation(format!("{name} must be non-empty")));
    }
    Ok(CVector::from_iterator(
        spec.len(),
        spec.iter().map(|e| C64::new(e[0], e[1])),
    ))
}

pub fn density(spec: &Option<MatrixSpec>, name: &str) -> Result<DensityMatrix, CliError> {
    let m = spec
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("system.{name} is required")))?;
    Ok(DensityMatrix::new(matrix(m, name)?)?)
}
