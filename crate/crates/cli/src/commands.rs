use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use causal_classify::classify::{predict_cctm, train_cctm, TwoModelPair, UpliftPrediction};
use causal_classify::datagen::{self, generate_group, GroundTruth, SynthConfig};
use causal_classify::eval::{causal_accuracy, kfold_split, qini_coefficient, qini_curve, QiniCurve};
use causal_classify::{discover, Dataset, Role, Schema};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{
    DataInput, DiscoverConfig, EvalConfig, GenerateConfig, PredictConfig, Provenance, QiniConfig,
    TrainConfig,
};
use crate::error::CliError;

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// JSON document with the provenance record attached under `provenance`.
fn with_provenance<T: Serialize>(body: &T, prov: &Provenance) -> Value {
    let mut v = serde_json::to_value(body).expect("output serializes");
    if let Value::Object(map) = &mut v {
        map.insert("provenance".into(), serde_json::to_value(prov).expect("provenance serializes"));
    }
    v
}

/// CSV outputs carry their provenance in `<file>.run.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

fn emit_csv(path: Option<&Path>, text: &str, prov: &Provenance) -> Result<(), CliError> {
    emit(path, text)?;
    if let Some(p) = path {
        let v = serde_json::to_value(prov).expect("provenance serializes");
        write_bytes(&sidecar_path(p), pretty(&v).as_bytes())?;
    }
    Ok(())
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

/// `data.csv` -> `data.schema.json`.
pub fn default_schema_path(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}.schema.json"))
}

/// Loads `--data` with its schema. With `open_categories`, category lists
/// are taken from the data so that labels unseen in training do not fail
/// the read.
fn load_data(input: &DataInput, open_categories: bool) -> Result<Dataset, CliError> {
    let path = require(&input.data, "--data")?;
    let schema_path = match &input.schema {
        Some(p) => Some(p.clone()),
        None => Some(default_schema_path(path)).filter(|p| p.is_file()),
    };
    let schema = match schema_path {
        Some(p) => {
            let mut s = Schema::from_json(&read_text(&p)?)
                .map_err(|e| CliError::Usage(format!("schema {}: {e}", p.display())))?;
            if open_categories {
                for c in &mut s.columns {
                    c.categories = None;
                }
            }
            Some(s)
        }
        None => None,
    };
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Dataset::read_csv(std::io::BufReader::new(file), schema.as_ref()).map_err(|e| {
        CliError::Usage(format!("{}: {e}", path.display()))
    })
}

fn role_column(data: &Dataset, given: &Option<String>, role: Role, flag: &str) -> Result<String, CliError> {
    if let Some(name) = given {
        return Ok(name.clone());
    }
    data.column_with_role(role)
        .map(|c| c.name.clone())
        .ok_or_else(|| CliError::Usage(format!("{flag} not given and no column has role {role:?}")))
}

fn resolve_parents(
    parents: &Option<Vec<String>>,
    parents_file: &Option<PathBuf>,
) -> Result<Option<Vec<String>>, CliError> {
    match (parents, parents_file) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--parents and --parents-file are mutually exclusive".into(),
        )),
        (Some(p), None) => Ok(Some(p.clone())),
        (None, Some(path)) => {
            let v: Value = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let list = v.get("members").unwrap_or(&v);
            serde_json::from_value(list.clone()).map(Some).map_err(|_| {
                CliError::Usage(format!(
                    "{}: expected a list of names or an object with `members`",
                    path.display()
                ))
            })
        }
        (None, None) => Ok(None),
    }
}

struct OutDir<'a> {
    dir: &'a Path,
    schema: String,
    files: Vec<String>,
}

impl OutDir<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_bytes(&self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// `<stem>.csv`, its schema and, for synthetic data, the truth file.
    fn part(&mut self, data: &Dataset, truth: Option<&GroundTruth>, stem: &str) -> Result<(), CliError> {
        self.put(&format!("{stem}.csv"), data.to_csv_string().as_bytes())?;
        let schema = std::mem::take(&mut self.schema);
        let r = self.put(&format!("{stem}.schema.json"), schema.as_bytes());
        self.schema = schema;
        r?;
        if let Some(t) = truth {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let name = if stem == "data" { "truth".to_string() } else { format!("{stem}.truth") };
            self.put(&format!("{name}.csv"), &buf)?;
        }
        Ok(())
    }
}

pub fn generate(cfg: &GenerateConfig) -> Result<(), CliError> {
    let dir = require(&cfg.out_dir, "--out-dir")?;
    let prov = Provenance::new("generate", cfg);
    if let Some(s) = cfg.split {
        if !(s > 0.0 && s < 1.0) {
            return Err(CliError::Usage(format!("--split must lie in (0, 1), got {s}")));
        }
    }
    let (data, truth, net) = match &cfg.bif {
        Some(path) => {
            let net = datagen::parse_bif(&read_text(path)?)?;
            (datagen::sample(&net, cfg.n_samples, cfg.seed), None, net)
        }
        None => {
            let sc = SynthConfig {
                group: cfg.group,
                n_samples: cfg.n_samples,
                n_noise_vars: cfg.n_noise_vars,
                seed: cfg.seed,
                continuous_fraction: cfg.continuous_fraction,
            };
            let out = generate_group(&sc)?;
            (out.data, Some(out.truth), out.net)
        }
    };
    let mut out = OutDir { dir, schema: data.schema().to_json() + "\n", files: Vec::new() };
    out.part(&data, truth.as_ref(), "data")?;
    out.put("net.json", (net.to_json() + "\n").as_bytes())?;
    if let Some(s) = cfg.split {
        let n = data.n_rows();
        let cut = (s * n as f64).floor() as usize;
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..n).collect();
        for (stem, rows) in [("train", &head), ("test", &tail)] {
            let t = truth.as_ref().map(|t| t.take_rows(rows));
            out.part(&data.take_rows(rows), t.as_ref(), stem)?;
        }
    }
    let files = out.files;
    let run = json!({ "files": files, "provenance": prov });
    write_bytes(&dir.join("run.json"), pretty(&run).as_bytes())?;
    log::info!("wrote {} files to {}", files.len() + 1, dir.display());
    Ok(())
}

pub fn discover_cmd(cfg: &DiscoverConfig) -> Result<(), CliError> {
    let data = load_data(&cfg.input, false)?;
    let target = role_column(&data, &cfg.target, Role::Outcome, "--target")?;
    let found = discover(&data, &target, &cfg.discovery)?;
    let prov = Provenance::new("discover", cfg);
    let mut body = json!({ "target": found.target, "members": found.members });
    if cfg.explain {
        body["trace"] = serde_json::to_value(&found.trace).expect("trace serializes");
    }
    emit(cfg.out.as_deref(), &pretty(&with_provenance(&body, &prov)))
}

pub fn train(cfg: &TrainConfig) -> Result<(), CliError> {
    let data = load_data(&cfg.input, false)?;
    let t = role_column(&data, &cfg.treatment, Role::Treatment, "--treatment")?;
    let y = role_column(&data, &cfg.outcome, Role::Outcome, "--outcome")?;
    let parents = resolve_parents(&cfg.parents, &cfg.parents_file)?;
    let pair = train_cctm(&data, &t, &y, parents.as_deref(), &cfg.model.spec(), &cfg.discovery)?;
    log::info!("PA'({y}) = {:?}", pair.parents_excl_t);
    let prov = Provenance::new("train", cfg);
    emit(cfg.out.as_deref(), &pretty(&with_provenance(&pair, &prov)))
}

pub fn load_model(path: &Path) -> Result<TwoModelPair, CliError> {
    Ok(TwoModelPair::from_json(&read_text(path)?)?)
}

pub fn predictions_csv(preds: &[UpliftPrediction]) -> String {
    let mut out = String::from("row_id,p1,p0,effect,assign\n");
    for (i, p) in preds.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{},{}\n", p.p1, p.p0, p.effect, u8::from(p.assign)));
    }
    out
}

pub fn predict(cfg: &PredictConfig) -> Result<(), CliError> {
    let pair = load_model(require(&cfg.model_file, "--model")?)?;
    let data = load_data(&cfg.input, true)?;
    let preds = predict_cctm(&pair, &data, cfg.theta)?;
    emit_csv(cfg.out.as_deref(), &predictions_csv(&preds), &Provenance::new("predict", cfg))
}

#[derive(Deserialize)]
struct PredictionRow {
    p1: f64,
    p0: f64,
    effect: f64,
    assign: u8,
}

fn read_predictions(path: &Path) -> Result<Vec<UpliftPrediction>, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    rd.deserialize()
        .map(|r| {
            let r: PredictionRow = r.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Ok(UpliftPrediction {
                effect: r.effect,
                assign: r.assign == 1,
                p1: r.p1,
                p0: r.p0,
            })
        })
        .collect()
}

fn curve_csv(curve: &QiniCurve) -> String {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf8")
}

#[derive(Serialize)]
struct QiniSummary {
    coefficient: f64,
    coefficient_area: f64,
    n_gaps: usize,
    curve: QiniCurve,
}

pub fn eval(cfg: &EvalConfig) -> Result<(), CliError> {
    if let Some(k) = cfg.folds {
        return cross_validate(&cfg.cross_validation(k), "eval");
    }
    let preds = read_predictions(require(&cfg.predictions, "--predictions")?)?;
    let prov = Provenance::new("eval", cfg);
    let mut body = json!({ "n": preds.len() });
    if cfg.truth.is_none() && cfg.input.data.is_none() {
        return Err(CliError::Usage("eval needs --truth or --data".into()));
    }
    if let Some(path) = &cfg.truth {
        let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let truth = GroundTruth::read_csv(file)?;
        body["accuracy"] = json!(causal_accuracy(&preds, &truth, cfg.theta)?);
    }
    if cfg.input.data.is_some() {
        let data = load_data(&cfg.input, true)?;
        let t = role_column(&data, &cfg.treatment, Role::Treatment, "--treatment")?;
        let y = role_column(&data, &cfg.outcome, Role::Outcome, "--outcome")?;
        let (tv, yv) = (data.binary(&t)?, data.binary(&y)?);
        if preds.len() != yv.len() {
            return Err(causal_classify::Error::LengthMismatch(preds.len(), yv.len()).into());
        }
        let curve = qini_curve(&preds, &yv, &tv, cfg.n_points)?;
        let summary = QiniSummary {
            coefficient: qini_coefficient(&yv, &tv)?,
            coefficient_area: curve.coefficient_area,
            n_gaps: curve.n_gaps(),
            curve,
        };
        if let Some(p) = &cfg.curve_out {
            emit_csv(Some(p), &curve_csv(&summary.curve), &prov)?;
        }
        body["qini"] = serde_json::to_value(&summary).expect("summary serializes");
    }
    emit(cfg.out.as_deref(), &pretty(&with_provenance(&body, &prov)))
}

#[derive(Serialize)]
struct FoldReport {
    fold: usize,
    n_train: usize,
    n_test: usize,
    parents_excl_t: Vec<String>,
    coefficient_area: f64,
    n_gaps: usize,
    curve: QiniCurve,
}

/// k-fold Qini evaluation: each fold trains on the other folds and draws a
/// curve on its own rows.
pub fn cross_validate(cfg: &QiniConfig, command: &str) -> Result<(), CliError> {
    let data = load_data(&cfg.input, false)?;
    let t = role_column(&data, &cfg.treatment, Role::Treatment, "--treatment")?;
    let y = role_column(&data, &cfg.outcome, Role::Outcome, "--outcome")?;
    let parents = resolve_parents(&cfg.parents, &cfg.parents_file)?;
    let spec = cfg.model.spec();
    let folds = kfold_split(data.n_rows(), cfg.folds, cfg.fold_seed)?;
    let mut reports = Vec::with_capacity(folds.len());
    for (i, fold) in folds.iter().enumerate() {
        let train = data.take_rows(&fold.train);
        let test = data.take_rows(&fold.test);
        let pair = train_cctm(&train, &t, &y, parents.as_deref(), &spec, &cfg.discovery)?;
        let preds = predict_cctm(&pair, &test, 0.0)?;
        let curve = qini_curve(&preds, &test.binary(&y)?, &test.binary(&t)?, cfg.n_points)?;
        log::info!("fold {}: area {:.4}", i + 1, curve.coefficient_area);
        reports.push(FoldReport {
            fold: i + 1,
            n_train: fold.train.len(),
            n_test: fold.test.len(),
            parents_excl_t: pair.parents_excl_t,
            coefficient_area: curve.coefficient_area,
            n_gaps: curve.n_gaps(),
            curve,
        });
    }
    let curves: Vec<QiniCurve> = reports.iter().map(|r| r.curve.clone()).collect();
    let mean = QiniCurve::mean(&curves)?;
    let prov = Provenance::new(command, cfg);
    if let Some(dir) = &cfg.out_dir {
        for r in &reports {
            emit_csv(Some(&dir.join(format!("fold_{:02}.csv", r.fold))), &curve_csv(&r.curve), &prov)?;
        }
        emit_csv(Some(&dir.join("mean.csv")), &curve_csv(&mean), &prov)?;
    }
    let body = json!({
        "folds": reports,
        "mean": { "coefficient_area": mean.coefficient_area, "curve": mean },
    });
    let text = pretty(&with_provenance(&body, &prov));
    match &cfg.out_dir {
        Some(dir) => emit(Some(&dir.join("qini.json")), &text),
        None => emit(None, &text),
    }
}
