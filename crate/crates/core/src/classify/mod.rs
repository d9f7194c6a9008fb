//! Two-model causal classifier: one outcome model per treatment arm over
//! PA'(Y), with the conditional effect estimated as the difference of
//! their probabilities.

mod encode;
mod forest;
mod logistic;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use encode::{Feature, FeatureEncoder, FeatureKind, Matrix};
pub use forest::{Forest, ForestParams, Tree};
pub use logistic::{LogisticModel, LogisticParams};

use crate::dataset::Dataset;
use crate::discovery::{discover, DiscoveryConfig, ParentSet};
use crate::error::{Error, Result};

/// Version written into persisted models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Logistic(LogisticParams),
    Forest(ForestParams),
}

impl ClassifierSpec {
    pub fn logistic() -> ClassifierSpec {
        ClassifierSpec::Logistic(LogisticParams::default())
    }

    pub fn forest(seed: u64) -> ClassifierSpec {
        ClassifierSpec::Forest(ForestParams::with_seed(seed))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match self {
            ClassifierSpec::Logistic(p) => {
                if p.max_iterations == 0 {
                    return bad("max_iterations must be positive");
                }
                if !(p.l2_penalty > 0.0 && p.l2_penalty.is_finite()) {
                    return bad("l2_penalty must be positive");
                }
                if !(p.convergence_tol > 0.0) {
                    return bad("convergence_tol must be positive");
                }
            }
            ClassifierSpec::Forest(p) => {
                if p.n_trees == 0 {
                    return bad("n_trees must be positive");
                }
                if p.max_depth == Some(0) {
                    return bad("max_depth must be positive");
                }
                if p.min_leaf == 0 {
                    return bad("min_leaf must be positive");
                }
                if p.feature_subsample == Some(0) {
                    return bad("feature_subsample must be positive");
                }
            }
        }
        Ok(())
    }
}

/// A fitted probability model for a binary label on encoded features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    Constant { p: f64 },
    Logistic(LogisticModel),
    Forest(Forest),
}

impl Estimator {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Estimator::Constant { p } => *p,
            Estimator::Logistic(m) => m.predict_row(row),
            Estimator::Forest(f) => f.predict_row(row),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows).map(|i| self.predict_row(x.row(i))).collect()
    }
}

/// Single-class labels give the smoothed constant (k+1)/(n+2).
fn degenerate(y: &[u8]) -> Option<Estimator> {
    let k = y.iter().filter(|&&v| v == 1).count();
    if k != 0 && k != y.len() {
        return None;
    }
    log::warn!("labels hold a single class; using a smoothed constant model");
    Some(Estimator::Constant {
        p: (k as f64 + 1.0) / (y.len() as f64 + 2.0),
    })
}

pub fn fit_logistic(x: &Matrix, y: &[u8], params: &LogisticParams) -> Estimator {
    degenerate(y).unwrap_or_else(|| Estimator::Logistic(logistic::fit(x, y, params)))
}

pub fn fit_forest(x: &Matrix, y: &[u8], params: &ForestParams) -> Estimator {
    degenerate(y).unwrap_or_else(|| Estimator::Forest(forest::fit(x, y, params)))
}

/// Penalized negative log-likelihood minimized by [`fit_logistic`];
/// `beta` holds the intercept first.
pub fn logistic_objective(beta: &[f64], x: &Matrix, y: &[u8], l2: f64) -> f64 {
    logistic::objective(beta, x, y, l2)
}

/// Analytic gradient of [`logistic_objective`].
pub fn logistic_gradient(beta: &[f64], x: &Matrix, y: &[u8], l2: f64) -> Vec<f64> {
    logistic::gradient(beta, x, y, l2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticModel {
    pub encoder: FeatureEncoder,
    pub estimator: Estimator,
    pub n_train: usize,
}

impl ProbabilisticModel {
    /// Fits on `data` rows using the given feature columns. With no
    /// features the model is the arm's outcome rate.
    pub fn fit<S: AsRef<str>>(
        data: &Dataset,
        features: &[S],
        y: &[u8],
        spec: &ClassifierSpec,
    ) -> Result<ProbabilisticModel> {
        if data.n_rows() != y.len() {
            return Err(Error::LengthMismatch(data.n_rows(), y.len()));
        }
        let encoder = FeatureEncoder::fit(data, features)?;
        let x = encoder.transform(data)?;
        let estimator = if let Some(c) = degenerate(y) {
            c
        } else if encoder.width() == 0 {
            let k = y.iter().filter(|&&v| v == 1).count();
            Estimator::Constant {
                p: k as f64 / y.len() as f64,
            }
        } else {
            match spec {
                ClassifierSpec::Logistic(p) => fit_logistic(&x, y, p),
                ClassifierSpec::Forest(p) => fit_forest(&x, y, p),
            }
        };
        Ok(ProbabilisticModel {
            encoder,
            estimator,
            n_train: y.len(),
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.encoder.names()
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        let x = self.encoder.transform(data)?;
        Ok(self.estimator.predict(&x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub treatment: String,
    pub outcome: String,
    pub n_treated: usize,
    pub n_control: usize,
    pub spec: ClassifierSpec,
    /// Set when PA'(Y) came from discovery.
    pub discovery: Option<DiscoveryConfig>,
    pub tool_version: String,
    /// Only filled when `SOURCE_DATE_EPOCH` is set, so that repeated runs
    /// produce identical files.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModelPair {
    pub format_version: u32,
    pub parents_excl_t: Vec<String>,
    /// Treated-arm model.
    pub m1: ProbabilisticModel,
    /// Control-arm model.
    pub m0: ProbabilisticModel,
    pub metadata: ModelMetadata,
}

impl TwoModelPair {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<TwoModelPair> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let h: Header = serde_json::from_str(text)?;
        if h.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(h.format_version));
        }
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpliftPrediction {
    pub effect: f64,
    pub assign: bool,
    pub p1: f64,
    pub p0: f64,
}

impl UpliftPrediction {
    pub fn new(p1: f64, p0: f64, theta: f64) -> UpliftPrediction {
        let effect = p1 - p0;
        UpliftPrediction {
            effect,
            assign: effect > theta,
            p1,
            p0,
        }
    }
}

fn source_date() -> Option<String> {
    std::env::var("SOURCE_DATE_EPOCH").ok().filter(|s| !s.is_empty())
}

/// Trains the two arm models. Without `parents`, PA(Y) is discovered from
/// `data` and the treatment removed from it.
pub fn train_cctm<S: AsRef<str>>(
    data: &Dataset,
    t: &str,
    y: &str,
    parents: Option<&[S]>,
    spec: &ClassifierSpec,
    cfg: &DiscoveryConfig,
) -> Result<TwoModelPair> {
    spec.validate()?;
    let tv = data.binary(t)?;
    let yv = data.binary(y)?;
    let (parents, discovery): (Vec<String>, _) = match parents {
        Some(p) => (p.iter().map(|s| s.as_ref().to_string()).collect(), None),
        None => {
            let found: ParentSet = discover(data, y, cfg)?;
            (found.members, Some(cfg.clone()))
        }
    };
    if parents.iter().any(|p| p == y) {
        return Err(Error::InvalidParameter(format!(
            "outcome `{y}` cannot be its own parent"
        )));
    }
    let parents: Vec<String> = parents.into_iter().filter(|p| p != t).collect();
    if parents.is_empty() {
        log::warn!("PA'(Y) is empty; both arm models are constants");
    }
    let treated: Vec<usize> = (0..tv.len()).filter(|&i| tv[i] == 1).collect();
    let control: Vec<usize> = (0..tv.len()).filter(|&i| tv[i] == 0).collect();
    for (arm, rows) in [(1u8, &treated), (0u8, &control)] {
        if rows.is_empty() {
            return Err(Error::EmptyArm {
                arm,
                treated: treated.len(),
                control: control.len(),
            });
        }
    }
    let projected = data.select(&parents)?;
    let fit_arm = |rows: &[usize]| {
        let labels: Vec<u8> = rows.iter().map(|&i| yv[i]).collect();
        ProbabilisticModel::fit(&projected.take_rows(rows), &parents, &labels, spec)
    };
    let m1 = fit_arm(&treated)?;
    let m0 = fit_arm(&control)?;
    Ok(TwoModelPair {
        format_version: MODEL_FORMAT_VERSION,
        parents_excl_t: parents,
        m1,
        m0,
        metadata: ModelMetadata {
            treatment: t.to_string(),
            outcome: y.to_string(),
            n_treated: treated.len(),
            n_control: control.len(),
            spec: spec.clone(),
            discovery,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: source_date(),
        },
    })
}

/// Predicts the effect of every row; output order follows input order.
pub fn predict_cctm(pair: &TwoModelPair, data: &Dataset, theta: f64) -> Result<Vec<UpliftPrediction>> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta must be >= 0, got {theta}")));
    }
    let p1 = pair.m1.predict_proba(data)?;
    let p0 = pair.m0.predict_proba(data)?;
    Ok(p1
        .into_iter()
        .zip(p0)
        .map(|(a, b)| UpliftPrediction::new(a, b, theta))
        .collect())
}

/// Row indices sorted by descending effect; ties keep input order.
pub fn rank_by_effect(preds: &[UpliftPrediction]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..preds.len()).collect();
    idx.sort_by(|&a, &b| {
        preds[b]
            .effect
            .partial_cmp(&preds[a].effect)
            .unwrap_or(Ordering::Equal)
    });
    idx
}
