use causal_classify::datagen::{self, BayesNet};
use causal_classify::dataset::{Column, Dataset, Role};
use causal_classify::discovery::{discover, mmpc, symmetric_correction, DiscoveryConfig, Phase};
use causal_classify::eval::prf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

/// A -> Y <- B with independent roots, plus two unrelated roots C, D.
fn v_structure() -> BayesNet {
    BayesNet::new(
        "v",
        &["A", "B", "C", "D", "Y"],
        vec![bin(); 5],
        vec![
            (vec![], vec![vec![0.5, 0.5]]),
            (vec![], vec![vec![0.6, 0.4]]),
            (vec![], vec![vec![0.5, 0.5]]),
            (vec![], vec![vec![0.3, 0.7]]),
            (
                vec!["A", "B"],
                vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.4, 0.6], vec![0.1, 0.9]],
            ),
        ],
        &[],
    )
    .unwrap()
}

#[test]
fn v_structure_parents_found_and_kept_by_symmetry() {
    let data = datagen::sample(&v_structure(), 5000, 1);
    let cfg = DiscoveryConfig::default();
    let raw = mmpc(&data, "Y", &cfg).unwrap();
    assert_eq!(raw.members, vec!["A", "B"]);
    let corrected = symmetric_correction(&data, "Y", &raw, &cfg).unwrap();
    assert_eq!(corrected.members, raw.members);
    assert_eq!(discover(&data, "Y", &cfg).unwrap().members, vec!["A", "B"]);
}

#[test]
fn empty_candidate_stays_empty() {
    let data = datagen::sample(&v_structure(), 500, 2);
    let cfg = DiscoveryConfig::default();
    let mut empty = mmpc(&data, "C", &cfg).unwrap();
    empty.members.clear();
    assert!(symmetric_correction(&data, "C", &empty, &cfg).unwrap().members.is_empty());
}

#[test]
fn pure_noise_false_positive_rate_is_below_alpha() {
    let alpha = 0.05;
    let cfg = DiscoveryConfig {
        alpha,
        ..DiscoveryConfig::default()
    };
    let (mut hits, mut trials) = (0, 0);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Column::binary(
            "Y",
            Role::Outcome,
            (0..2000).map(|_| rng.random_bool(0.5) as u8).collect(),
        )];
        for k in 0..10 {
            let v = (0..2000).map(|_| rng.random_bool(0.3) as u8).collect();
            cols.push(Column::binary(format!("N{k}"), Role::Noise, v));
        }
        let found = discover(&Dataset::new(cols).unwrap(), "Y", &cfg).unwrap();
        hits += found.members.len();
        trials += 10;
    }
    let rate = hits as f64 / trials as f64;
    assert!(rate <= alpha, "false-positive rate {rate}");
}

#[test]
fn duplicated_parent_is_dropped_by_the_symmetry_check() {
    // `Dup` is an exact copy of the parent `P` and is declared first, so it
    // wins the tie and enters PC(Y) in place of P. From Dup's side P
    // separates it from Y, and the symmetry check removes it.
    let net = BayesNet::new(
        "dup",
        &["P", "Q", "Y"],
        vec![bin(); 3],
        vec![
            (vec![], vec![vec![0.5, 0.5]]),
            (vec![], vec![vec![0.5, 0.5]]),
            (
                vec!["P", "Q"],
                vec![vec![0.85, 0.15], vec![0.5, 0.5], vec![0.45, 0.55], vec![0.1, 0.9]],
            ),
        ],
        &[],
    )
    .unwrap();
    let sampled = datagen::sample(&net, 3000, 4);
    let p = sampled.binary("P").unwrap();
    let data = Dataset::new(vec![
        Column::binary("Dup", Role::Covariate, p),
        sampled.column("P").unwrap().clone(),
        sampled.column("Q").unwrap().clone(),
        sampled.column("Y").unwrap().clone(),
    ])
    .unwrap();
    let cfg = DiscoveryConfig::default();
    let raw = mmpc(&data, "Y", &cfg).unwrap();
    assert_eq!(raw.members, vec!["Dup", "Q"]);
    let corrected = symmetric_correction(&data, "Y", &raw, &cfg).unwrap();
    assert_eq!(corrected.members, vec!["Q"]);
    assert!(corrected.trace.iter().any(|r| r.phase == Phase::Symmetry));
}

#[test]
fn runs_are_deterministic() {
    let net = datagen::fixtures::benchmark20();
    let data = datagen::sample(&net, 2000, 8);
    let cfg = DiscoveryConfig::default();
    let a = discover(&data, "LowerBodyO2", &cfg).unwrap();
    let b = discover(&data, "LowerBodyO2", &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn members_do_not_depend_on_column_order() {
    let net = datagen::fixtures::benchmark20();
    let data = datagen::sample(&net, 3000, 21);
    let mut names: Vec<String> = data.names().map(String::from).collect();
    names.reverse();
    let reversed = data.select(&names).unwrap();
    let cfg = DiscoveryConfig::default();
    for target in ["LowerBodyO2", "XrayReport", "Age"] {
        let mut a = discover(&data, target, &cfg).unwrap().members;
        let mut b = discover(&reversed, target, &cfg).unwrap().members;
        a.sort();
        b.sort();
        assert_eq!(a, b, "target {target}");
    }
}

#[test]
fn trace_supports_every_decision() {
    let net = datagen::fixtures::benchmark20();
    let data = datagen::sample(&net, 3000, 3);
    let cfg = DiscoveryConfig::default();
    let found = mmpc(&data, "Age", &cfg).unwrap();
    let own: Vec<_> = found.trace.iter().filter(|r| r.target == "Age").collect();
    for name in data.names().filter(|n| *n != "Age") {
        let records: Vec<_> = own.iter().filter(|r| r.variable == name).collect();
        assert!(!records.is_empty(), "{name} never tested");
        let member = found.members.iter().any(|m| m == name);
        if member {
            assert!(records.iter().all(|r| !r.independent), "{name}");
        } else {
            assert!(records.iter().any(|r| r.independent), "{name}");
        }
    }
}

#[test]
fn more_samples_do_not_hurt_on_average() {
    let net = datagen::fixtures::benchmark20();
    let truth = ["Disease", "Sick"];
    let cfg = DiscoveryConfig::default();
    let mean_f1 = |n: usize| {
        (0..10u64)
            .map(|s| prf(&discover(&datagen::sample(&net, n, 100 + s), "Age", &cfg).unwrap().members, &truth.map(String::from).to_vec()).f1)
            .sum::<f64>()
            / 10.0
    };
    assert!(mean_f1(5000) >= mean_f1(500));
}

#[test]
fn unknown_target_is_an_error() {
    let data = datagen::sample(&v_structure(), 100, 0);
    assert!(discover(&data, "nope", &DiscoveryConfig::default()).is_err());
}
