//! Resolved run configurations, their layering and provenance records.
//!
//! A command's configuration is built from, in increasing precedence: the
//! built-in defaults, `<config dir>/<command>.json` when the
//! `CAUSAL_CLASSIFY_CONFIG_DIR` variable names a directory, a file given
//! with `--config`, and finally the command-line flags.

use std::path::{Path, PathBuf};

use causal_classify::classify::{ClassifierSpec, ForestParams, LogisticParams};
use causal_classify::datagen::Group;
use causal_classify::DiscoveryConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_DIR_ENV: &str = "CAUSAL_CLASSIFY_CONFIG_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Logistic,
    Forest,
}

/// Classifier choice plus the hyperparameters of both kinds; only those of
/// the chosen kind are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    pub classifier: ClassifierKind,
    pub seed: u64,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub feature_subsample: Option<usize>,
    pub max_iterations: usize,
    pub l2_penalty: f64,
    pub convergence_tol: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let f = ForestParams::with_seed(0);
        let l = LogisticParams::default();
        ModelSettings {
            classifier: ClassifierKind::Forest,
            seed: f.seed,
            n_trees: f.n_trees,
            max_depth: f.max_depth,
            min_leaf: f.min_leaf,
            feature_subsample: f.feature_subsample,
            max_iterations: l.max_iterations,
            l2_penalty: l.l2_penalty,
            convergence_tol: l.convergence_tol,
        }
    }
}

impl ModelSettings {
    pub fn spec(&self) -> ClassifierSpec {
        match self.classifier {
            ClassifierKind::Logistic => ClassifierSpec::Logistic(LogisticParams {
                max_iterations: self.max_iterations,
                l2_penalty: self.l2_penalty,
                convergence_tol: self.convergence_tol,
            }),
            ClassifierKind::Forest => ClassifierSpec::Forest(ForestParams {
                n_trees: self.n_trees,
                max_depth: self.max_depth,
                min_leaf: self.min_leaf,
                feature_subsample: self.feature_subsample,
                seed: self.seed,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub out_dir: Option<PathBuf>,
    pub group: Group,
    /// Sample from this network instead of the synthetic benchmark.
    pub bif: Option<PathBuf>,
    pub n_samples: usize,
    pub n_noise_vars: usize,
    pub continuous_fraction: f64,
    pub seed: u64,
    /// Training share; rows are split in order.
    pub split: Option<f64>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            out_dir: None,
            group: Group::Group1,
            bif: None,
            n_samples: 10_000,
            n_noise_vars: 90,
            continuous_fraction: 0.5,
            seed: 0,
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataInput {
    pub data: Option<PathBuf>,
    /// Defaults to `<data stem>.schema.json` next to the data when present.
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverConfig {
    pub input: DataInput,
    pub target: Option<String>,
    pub discovery: DiscoveryConfig,
    pub explain: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub input: DataInput,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub parents: Option<Vec<String>>,
    pub parents_file: Option<PathBuf>,
    pub model: ModelSettings,
    pub discovery: DiscoveryConfig,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub model_file: Option<PathBuf>,
    pub input: DataInput,
    pub theta: f64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub predictions: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub input: DataInput,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub theta: f64,
    pub n_points: usize,
    pub curve_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Cross-validated mode: trains per fold on `input` instead of reading
    /// predictions.
    pub folds: Option<usize>,
    pub fold_seed: u64,
    pub parents: Option<Vec<String>>,
    pub parents_file: Option<PathBuf>,
    pub model: ModelSettings,
    pub discovery: DiscoveryConfig,
    pub out_dir: Option<PathBuf>,
}

impl EvalConfig {
    pub fn cross_validation(&self, folds: usize) -> QiniConfig {
        QiniConfig {
            input: self.input.clone(),
            treatment: self.treatment.clone(),
            outcome: self.outcome.clone(),
            parents: self.parents.clone(),
            parents_file: self.parents_file.clone(),
            model: self.model.clone(),
            discovery: self.discovery.clone(),
            folds,
            fold_seed: self.fold_seed,
            n_points: self.n_points,
            out_dir: self.out_dir.clone(),
        }
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            predictions: None,
            truth: None,
            input: DataInput::default(),
            treatment: None,
            outcome: None,
            theta: 0.0,
            n_points: 10,
            curve_out: None,
            out: None,
            folds: None,
            fold_seed: 0,
            parents: None,
            parents_file: None,
            model: ModelSettings::default(),
            discovery: DiscoveryConfig::default(),
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QiniConfig {
    pub input: DataInput,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub parents: Option<Vec<String>>,
    pub parents_file: Option<PathBuf>,
    pub model: ModelSettings,
    pub discovery: DiscoveryConfig,
    pub folds: usize,
    /// Seed of the fold assignment.
    pub fold_seed: u64,
    pub n_points: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for QiniConfig {
    fn default() -> Self {
        QiniConfig {
            input: DataInput::default(),
            treatment: None,
            outcome: None,
            parents: None,
            parents_file: None,
            model: ModelSettings::default(),
            discovery: DiscoveryConfig::default(),
            folds: 10,
            fold_seed: 0,
            n_points: 10,
            out_dir: None,
        }
    }
}

/// Recursively overlays `top` onto `base`; objects merge key by key, any
/// other value replaces.
fn merge(base: &mut Value, top: Value) {
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
        (slot, v) => *slot = v,
    }
}

fn read_layer(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

/// Resolves the configuration of `command`. `flags` holds only the values
/// given on the command line.
pub fn resolve<T: Serialize + DeserializeOwned + Default>(
    command: &str,
    config_file: Option<&Path>,
    flags: Map<String, Value>,
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(T::default()).expect("defaults serialize");
    if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
        let path = PathBuf::from(dir).join(format!("{command}.json"));
        if path.is_file() {
            merge(&mut value, read_layer(&path)?);
        }
    }
    if let Some(path) = config_file {
        merge(&mut value, read_layer(path)?);
    }
    merge(&mut value, Value::Object(flags));
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid {command} configuration: {e}")))
}

/// Inserts `value` at a dotted `key` path, creating objects on the way.
pub fn set(map: &mut Map<String, Value>, key: &str, value: impl Serialize) {
    let value = serde_json::to_value(value).expect("flag value serializes");
    match key.split_once('.') {
        None => {
            map.insert(key.to_string(), value);
        }
        Some((head, rest)) => {
            let slot = map
                .entry(head.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            if let Value::Object(inner) = slot {
                set(inner, rest, value);
            }
        }
    }
}

/// Sets `key` only when the flag was given.
pub fn set_opt<V: Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<V>) {
    if let Some(v) = value {
        set(map, key, v);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the compact JSON form of `config`.
    pub config_hash: String,
    pub config: Value,
}

impl Provenance {
    pub fn new<T: Serialize>(command: &str, config: &T) -> Provenance {
        let config = serde_json::to_value(config).expect("config serializes");
        let compact = serde_json::to_string(&config).expect("config serializes");
        let hash = Sha256::digest(compact.as_bytes());
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
            config,
        }
    }
}
