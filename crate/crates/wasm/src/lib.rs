//! Browser bindings for the demo page in `www/`. Every call takes and
//! returns JSON strings; the plain functions are usable natively too.

use causal_classify::classify::{predict_cctm, train_cctm, UpliftPrediction};
use causal_classify::datagen::{self, generate_group, parse_bif, Group, SynthConfig};
use causal_classify::eval::{causal_accuracy, prf, qini_curve, QiniCurve};
use causal_classify::graph::verify_uplift_conditions;
use causal_classify::{discover, ClassifierSpec, Dag, Dataset, DiscoveryConfig};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Deserialize)]
pub struct GraphQuery {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub x: Vec<String>,
    #[serde(default)]
    pub y: Vec<String>,
    #[serde(default)]
    pub z: Vec<String>,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct GraphAnswer {
    /// Absent when x or y is empty.
    pub d_separated: Option<bool>,
    pub conditions: Option<causal_classify::graph::ConditionReport>,
}

pub fn graph_query(q: &GraphQuery) -> Res<GraphAnswer> {
    let g = Dag::new(&q.nodes, &q.edges).map_err(err)?;
    let d_separated = if q.x.is_empty() || q.y.is_empty() {
        None
    } else {
        Some(g.d_separated(&q.x, &q.y, &q.z).map_err(err)?)
    };
    let conditions = match (&q.treatment, &q.outcome) {
        (Some(t), Some(y)) => Some(verify_uplift_conditions(&g, t, y).map_err(err)?),
        _ => None,
    };
    Ok(GraphAnswer { d_separated, conditions })
}

#[derive(Deserialize)]
pub struct DiscoveryRequest {
    /// BIF text; the bundled 20-node network when absent.
    pub bif: Option<String>,
    pub target: String,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    DiscoveryConfig::default().alpha
}

#[derive(Serialize)]
pub struct DiscoveryAnswer {
    pub members: Vec<String>,
    pub truth: Vec<String>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_tests: usize,
    pub dag: serde_json::Value,
}

pub fn discovery_run(r: &DiscoveryRequest) -> Res<DiscoveryAnswer> {
    let net = match &r.bif {
        Some(text) => parse_bif(text).map_err(err)?,
        None => datagen::fixtures::benchmark20(),
    };
    let g = net.dag();
    let ti = g.index_of(&r.target).map_err(err)?;
    let truth: Vec<String> = g
        .parent_indices(ti)
        .iter()
        .chain(g.child_indices(ti))
        .map(|&i| g.name(i).to_string())
        .collect();
    let data = datagen::sample(&net, r.n_samples, r.seed);
    let cfg = DiscoveryConfig {
        alpha: r.alpha,
        ..DiscoveryConfig::default()
    };
    let found = discover(&data, &r.target, &cfg).map_err(err)?;
    let score = prf(&found.members, &truth);
    Ok(DiscoveryAnswer {
        n_tests: found.trace.len(),
        members: found.members,
        truth,
        precision: score.precision,
        recall: score.recall,
        f1: score.f1,
        dag: serde_json::from_str(&g.to_json()).map_err(err)?,
    })
}

#[derive(Deserialize)]
pub struct SimulationRequest {
    pub group: Group,
    pub n_samples: usize,
    pub n_noise_vars: usize,
    pub seed: u64,
    /// "logistic" or "forest".
    pub classifier: String,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
}

fn default_points() -> usize {
    10
}

#[derive(Serialize)]
pub struct Arm {
    pub covariates: Vec<String>,
    pub accuracy: f64,
    pub qini: QiniCurve,
}

#[derive(Serialize)]
pub struct SimulationAnswer {
    pub n_train: usize,
    pub n_test: usize,
    pub parents: Arm,
    pub all_covariates: Arm,
    pub oracle: QiniCurve,
}

fn curve(preds: &[UpliftPrediction], test: &Dataset, n_points: usize) -> Res<QiniCurve> {
    let y = test.binary("Y").map_err(err)?;
    let t = test.binary("T").map_err(err)?;
    qini_curve(preds, &y, &t, n_points).map_err(err)
}

/// Generates a benchmark data set, trains on the first half with the
/// discovered parents and with every covariate, and scores the second half.
pub fn simulation_run(r: &SimulationRequest) -> Res<SimulationAnswer> {
    let spec = match r.classifier.as_str() {
        "logistic" => ClassifierSpec::logistic(),
        "forest" => ClassifierSpec::forest(r.seed),
        other => return Err(format!("unknown classifier `{other}`")),
    };
    let cfg = SynthConfig {
        n_samples: r.n_samples,
        n_noise_vars: r.n_noise_vars,
        ..SynthConfig::new(r.group, r.seed)
    };
    let out = generate_group(&cfg).map_err(err)?;
    let n = out.data.n_rows();
    let head: Vec<usize> = (0..n / 2).collect();
    let tail: Vec<usize> = (n / 2..n).collect();
    let train = out.data.take_rows(&head);
    let test = out.data.take_rows(&tail);
    let truth = out.truth.take_rows(&tail);
    let dcfg = DiscoveryConfig::default();

    let arm = |parents: Option<&[String]>| -> Res<Arm> {
        let pair = train_cctm(&train, "T", "Y", parents, &spec, &dcfg).map_err(err)?;
        let preds = predict_cctm(&pair, &test, r.theta).map_err(err)?;
        Ok(Arm {
            accuracy: causal_accuracy(&preds, &truth, r.theta).map_err(err)?,
            qini: curve(&preds, &test, r.n_points)?,
            covariates: pair.parents_excl_t,
        })
    };
    let parents = arm(None)?;
    let all: Vec<String> = train
        .names()
        .filter(|c| *c != "T" && *c != "Y")
        .map(String::from)
        .collect();
    let all_covariates = arm(Some(&all))?;
    let oracle_preds: Vec<UpliftPrediction> = truth
        .rows
        .iter()
        .map(|row| UpliftPrediction::new(row.effect, 0.0, r.theta))
        .collect();
    Ok(SimulationAnswer {
        n_train: head.len(),
        n_test: tail.len(),
        parents,
        all_covariates,
        oracle: curve(&oracle_preds, &test, r.n_points)?,
    })
}

fn json_call<Q: for<'de> Deserialize<'de>, A: Serialize>(input: &str, f: impl Fn(&Q) -> Res<A>) -> Result<String, JsError> {
    let q: Q = serde_json::from_str(input).map_err(|e| JsError::new(&format!("bad request: {e}")))?;
    let a = f(&q).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&a).map_err(|e| JsError::new(&e.to_string()))
}

/// d-separation query and uplift-condition check on a user graph.
#[wasm_bindgen(js_name = graphQuery)]
pub fn graph_query_js(request: &str) -> Result<String, JsError> {
    json_call(request, graph_query)
}

/// Samples a network and runs parent discovery on one target.
#[wasm_bindgen(js_name = discoverParents)]
pub fn discover_js(request: &str) -> Result<String, JsError> {
    json_call(request, discovery_run)
}

/// End-to-end benchmark run with accuracies and Qini curves.
#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(request: &str) -> Result<String, JsError> {
    json_call(request, simulation_run)
}

/// The bundled 20-node network as BIF text.
#[wasm_bindgen(js_name = benchmarkBif)]
pub fn benchmark_bif() -> String {
    datagen::write_bif(&datagen::fixtures::benchmark20())
}
