use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use causal_classify::classify::{predict_cctm, train_cctm, TwoModelPair};
use causal_classify::{ClassifierSpec, Dataset, DiscoveryConfig, Schema};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_causal-classify"));
    c.env_remove("CAUSAL_CLASSIFY_CONFIG_DIR").env_remove("SOURCE_DATE_EPOCH");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, n: usize, seed: u64, extra: &[&str]) {
    let n = n.to_string();
    let seed = seed.to_string();
    let mut args = vec!["generate", "--out-dir", p(dir), "-n", &n, "--seed", &seed];
    args.extend_from_slice(extra);
    ok(&args);
}

fn load(dir: &Path, stem: &str) -> Dataset {
    let schema = Schema::from_json(&fs::read_to_string(dir.join(format!("{stem}.schema.json"))).unwrap()).unwrap();
    Dataset::read_csv(fs::File::open(dir.join(format!("{stem}.csv"))).unwrap(), Some(&schema)).unwrap()
}

fn read_csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn generate_default_shape_and_split() {
    let d = tempfile::tempdir().unwrap();
    ok(&["generate", "--out-dir", p(d.path()), "--split", "0.5"]);
    let header = fs::read_to_string(d.path().join("data.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 102);
    assert_eq!(read_csv_rows(&d.path().join("data.csv")).len(), 10_000);
    assert_eq!(read_csv_rows(&d.path().join("train.csv")).len(), 5000);
    assert_eq!(read_csv_rows(&d.path().join("test.csv")).len(), 5000);
    assert_eq!(read_csv_rows(&d.path().join("test.truth.csv")).len(), 5000);
    let run: Value = serde_json::from_str(&fs::read_to_string(d.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["provenance"]["config"]["n_samples"], 10_000);
    assert_eq!(run["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    // same relative paths in two working directories, so the resolved configs agree
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let steps: [&[&str]; 3] = [
        &["generate", "--out-dir", "out", "-n", "1500", "--seed", "11", "--group", "group2"],
        &["train", "--data", "out/data.csv", "-o", "out/model.json"],
        &["predict", "--model", "out/model.json", "--data", "out/data.csv", "-o", "out/pred.csv"],
    ];
    for d in [a.path(), b.path()] {
        for args in steps {
            let out = bin().current_dir(d).args(args).output().unwrap();
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for f in ["data.csv", "data.schema.json", "truth.csv", "net.json", "run.json", "model.json", "pred.csv", "pred.csv.run.json"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn seeds_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate(a.path(), 300, 1, &[]);
    generate(b.path(), 300, 2, &[]);
    assert_ne!(fs::read(a.path().join("data.csv")).unwrap(), fs::read(b.path().join("data.csv")).unwrap());
}

#[test]
fn cli_matches_library_and_round_trips() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 2000, 5, &["--split", "0.5"]);
    let model = d.path().join("model.json");
    ok(&["train", "--data", p(&d.path().join("train.csv")), "--seed", "9", "-o", p(&model)]);
    ok(&["predict", "--model", p(&model), "--data", p(&d.path().join("test.csv")), "-o", p(&d.path().join("pred.csv"))]);

    let train = load(d.path(), "train");
    let test = load(d.path(), "test");
    let pair = train_cctm::<String>(&train, "T", "Y", None, &ClassifierSpec::forest(9), &DiscoveryConfig::default()).unwrap();
    let saved = TwoModelPair::from_json(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved.parents_excl_t, pair.parents_excl_t);
    assert_eq!(saved.m1, pair.m1);
    assert_eq!(saved.m0, pair.m0);

    let lib = predict_cctm(&pair, &test, 0.0).unwrap();
    let rows = read_csv_rows(&d.path().join("pred.csv"));
    assert_eq!(rows.len(), lib.len());
    let mut worst: f64 = 0.0;
    for (i, (r, l)) in rows.iter().zip(&lib).enumerate() {
        assert_eq!(r[0], i.to_string());
        let effect: f64 = r[3].parse().unwrap();
        worst = worst.max((effect - l.effect).abs());
        assert_eq!(r[1].parse::<f64>().unwrap(), l.p1);
        assert_eq!(r[2].parse::<f64>().unwrap(), l.p0);
        assert_eq!(r[4] == "1", l.assign);
    }
    assert!(worst <= 1e-12, "max |delta effect| = {worst}");
}

#[test]
fn train_records_discovered_parents() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 3000, 8, &[]);
    let data = p(&d.path().join("data.csv")).to_string();
    ok(&["discover", "--data", &data, "-o", p(&d.path().join("pa.json"))]);
    ok(&["train", "--data", &data, "--classifier", "logistic", "-o", p(&d.path().join("model.json"))]);
    let pa: Value = serde_json::from_str(&fs::read_to_string(d.path().join("pa.json")).unwrap()).unwrap();
    let model: Value = serde_json::from_str(&fs::read_to_string(d.path().join("model.json")).unwrap()).unwrap();
    let found: Vec<String> = serde_json::from_value(pa["members"].clone()).unwrap();
    let expected: Vec<String> = found.into_iter().filter(|m| m != "T").collect();
    let stored: Vec<String> = serde_json::from_value(model["parents_excl_t"].clone()).unwrap();
    assert_eq!(stored, expected);
    assert!(pa.get("trace").is_none());
    let explained = ok(&["discover", "--data", &data, "--explain"]);
    let v: Value = serde_json::from_slice(&explained.stdout).unwrap();
    assert!(!v["trace"].as_array().unwrap().is_empty());
}

#[test]
fn theta_sweep_is_monotone() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 1500, 4, &[]);
    let model = d.path().join("model.json");
    let data = p(&d.path().join("data.csv")).to_string();
    ok(&["train", "--data", &data, "--parents", "X1,X2,X3", "--classifier", "logistic", "-o", p(&model)]);
    let mut last = usize::MAX;
    for theta in ["0", "0.05", "0.1", "0.2", "0.4", "0.7", "1"] {
        let out = ok(&["predict", "--model", p(&model), "--data", &data, "--theta", theta]);
        let assigned = String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .filter(|l| l.ends_with(",1"))
            .count();
        assert!(assigned <= last, "theta {theta}: {assigned} > {last}");
        last = assigned;
    }
    assert_eq!(last, 0);
}

#[test]
fn empty_input_gives_header_only() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 500, 1, &[]);
    let model = d.path().join("model.json");
    ok(&["train", "--data", p(&d.path().join("data.csv")), "--parents", "X1", "-o", p(&model)]);
    let header = fs::read_to_string(d.path().join("data.csv")).unwrap().lines().next().unwrap().to_string() + "\n";
    fs::write(d.path().join("empty.csv"), header).unwrap();
    let out = ok(&[
        "predict", "--model", p(&model), "--data", p(&d.path().join("empty.csv")),
        "--schema", p(&d.path().join("data.schema.json")),
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "row_id,p1,p0,effect,assign\n");
}

#[test]
fn validation_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 400, 1, &[]);
    let data = p(&d.path().join("data.csv")).to_string();

    let out = run(&["discover", "--data", &data, "--target", "Missing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Missing"));

    assert_eq!(run(&["train", "--data", &data, "--treatment", "NoSuchT", "--parents", "X1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["discover", "--data", &data, "--alpha", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--model", p(&d.path().join("nope.json")), "--data", &data]).status.code(), Some(2));

    let model = d.path().join("model.json");
    ok(&["train", "--data", &data, "--parents", "X1,X2", "-o", p(&model)]);
    let cut: String = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(d.path().join("cut.csv"), cut).unwrap();
    let out = run(&["predict", "--model", p(&model), "--data", p(&d.path().join("cut.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("X2"));

    // predictions for fewer rows than the data
    let pred = d.path().join("pred.csv");
    ok(&["predict", "--model", p(&model), "--data", p(&d.path().join("cut.csv")).replace("cut", "data").as_str(), "-o", p(&pred)]);
    let short: String = fs::read_to_string(&pred).unwrap().lines().take(10).map(|l| l.to_string() + "\n").collect();
    fs::write(&pred, short).unwrap();
    let out = run(&["eval", "--predictions", p(&pred), "--data", &data]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["eval", "--predictions", p(&pred), "--truth", p(&d.path().join("truth.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_arm_exits_3() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 400, 1, &[]);
    let text = fs::read_to_string(d.path().join("data.csv")).unwrap();
    let treated: String = text
        .lines()
        .enumerate()
        .filter(|(i, l)| *i == 0 || l.starts_with("1,"))
        .map(|(_, l)| l.to_string() + "\n")
        .collect();
    fs::write(d.path().join("treated.csv"), treated).unwrap();
    let out = run(&[
        "train", "--data", p(&d.path().join("treated.csv")),
        "--schema", p(&d.path().join("data.schema.json")), "--parents", "X1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("control: 0"));
}

fn qini_fixture(dir: &Path) {
    let mut csv = String::from("row_id,p1,p0,effect,assign\n");
    let mut data = String::from("T,Y\n");
    for i in 0..200 {
        let treated = i < 100;
        let y = if treated { i < 30 } else { i - 100 < 10 };
        let effect = 1.0 - i as f64 / 200.0;
        csv.push_str(&format!("{i},0.5,0.5,{effect},1\n"));
        data.push_str(&format!("{},{}\n", u8::from(treated), u8::from(y)));
    }
    fs::write(dir.join("pred.csv"), csv).unwrap();
    fs::write(dir.join("obs.csv"), data).unwrap();
}

#[test]
fn eval_qini_fixture() {
    let d = tempfile::tempdir().unwrap();
    qini_fixture(d.path());
    let curve = d.path().join("curve.csv");
    let out = ok(&[
        "eval", "--predictions", p(&d.path().join("pred.csv")), "--data", p(&d.path().join("obs.csv")),
        "--treatment", "T", "--outcome", "Y", "--curve-out", p(&curve),
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["qini"]["coefficient"], 20.0);
    let text = fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("fraction,uplift\n"));
    // the top half is all treated, so every slice before the last lacks controls
    let last = text.lines().last().unwrap();
    assert_eq!(last, "1,20");
    assert!(d.path().join("curve.csv.run.json").is_file());
}

#[test]
fn oracle_predictions_score_one() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 800, 2, &[]);
    let mut csv = String::from("row_id,p1,p0,effect,assign\n");
    for (i, row) in read_csv_rows(&d.path().join("truth.csv")).iter().enumerate() {
        let e: f64 = row[1].parse().unwrap();
        csv.push_str(&format!("{i},0,0,{e},{}\n", u8::from(e > 0.0)));
    }
    fs::write(d.path().join("oracle.csv"), csv).unwrap();
    let out = ok(&["eval", "--predictions", p(&d.path().join("oracle.csv")), "--truth", p(&d.path().join("truth.csv"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["accuracy"], 1.0);
}

#[test]
fn ten_fold_mode_writes_each_fold_and_mean() {
    let d = tempfile::tempdir().unwrap();
    generate(d.path(), 1000, 6, &["--n-noise-vars", "4"]);
    let data = p(&d.path().join("data.csv")).to_string();
    for (cmd, sub) in [("eval", "e"), ("qini", "q")] {
        let out_dir = d.path().join(sub);
        ok(&[cmd, "--folds", "10", "--data", &data, "--classifier", "logistic", "--out-dir", p(&out_dir)]);
        for k in 1..=10 {
            assert!(out_dir.join(format!("fold_{k:02}.csv")).is_file());
        }
        assert!(out_dir.join("mean.csv").is_file());
        let v: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("qini.json")).unwrap()).unwrap();
        assert_eq!(v["folds"].as_array().unwrap().len(), 10);
        let n_test: u64 = v["folds"].as_array().unwrap().iter().map(|f| f["n_test"].as_u64().unwrap()).sum();
        assert_eq!(n_test, 1000);
    }
    assert_eq!(
        fs::read(d.path().join("e/mean.csv")).unwrap(),
        fs::read(d.path().join("q/mean.csv")).unwrap()
    );
}

#[test]
fn config_layers_resolve_in_order() {
    let d = tempfile::tempdir().unwrap();
    let cfg_dir = d.path().join("cfg");
    fs::create_dir_all(&cfg_dir).unwrap();
    fs::write(cfg_dir.join("generate.json"), r#"{"n_samples": 120, "n_noise_vars": 3, "seed": 1}"#).unwrap();
    let file = d.path().join("override.json");
    fs::write(&file, r#"{"n_noise_vars": 5}"#).unwrap();
    let out_dir = d.path().join("o");
    let out = bin()
        .env("CAUSAL_CLASSIFY_CONFIG_DIR", &cfg_dir)
        .args(["generate", "--config", p(&file), "--out-dir", p(&out_dir), "--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let record: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("run.json")).unwrap()).unwrap();
    let c = &record["provenance"]["config"];
    assert_eq!(c["n_samples"], 120);
    assert_eq!(c["n_noise_vars"], 5);
    assert_eq!(c["seed"], 7);
    assert_eq!(c["continuous_fraction"], 0.5);

    fs::write(&file, r#"{"n_noise": 5}"#).unwrap();
    let out = run(&["generate", "--config", p(&file), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bif_generation() {
    let d = tempfile::tempdir().unwrap();
    let bif = d.path().join("net.bif");
    fs::write(&bif, causal_classify::datagen::write_bif(&causal_classify::datagen::fixtures::benchmark20())).unwrap();
    ok(&["generate", "--bif", p(&bif), "-n", "300", "--out-dir", p(&d.path().join("o"))]);
    let data = load(&d.path().join("o"), "data");
    assert_eq!(data.n_rows(), 300);
    assert_eq!(data.n_cols(), 20);
    assert!(!d.path().join("o/truth.csv").exists());
}
