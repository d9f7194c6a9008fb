use std::collections::HashMap;

use causal_classify::datagen::{self, generate_group, parse_bif, write_bif, BayesNet, GroundTruth, Group, Response, SynthConfig};
use causal_classify::special::chi_square_sf;
use causal_classify::stats::g2_test;
use causal_classify::Role;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(group: Group, seed: u64, n: usize) -> SynthConfig {
    SynthConfig {
        n_samples: n,
        ..SynthConfig::new(group, seed)
    }
}

#[test]
fn emitted_columns_and_roles() {
    for group in [Group::Group1, Group::Group2] {
        let s = generate_group(&small(group, 1, 200)).unwrap();
        assert_eq!(s.data.n_cols(), 102);
        assert_eq!(s.data.n_rows(), 200);
        let names: Vec<&str> = s.data.names().collect();
        assert_eq!(&names[..4], &["T", "Y", "X1", "X2"]);
        assert!(!names.iter().any(|n| n.starts_with('U')));
        assert_eq!(s.data.column("T").unwrap().role, Role::Treatment);
        assert_eq!(s.data.column("N90").unwrap().role, Role::Noise);
        assert_eq!(s.truth.len(), 200);
    }
}

#[test]
fn responses_follow_potential_outcomes() {
    let s = generate_group(&small(Group::Group2, 3, 5000)).unwrap();
    let y = s.data.binary("Y").unwrap();
    let t = s.data.binary("T").unwrap();
    let mut seen = HashMap::new();
    for (i, r) in s.truth.rows.iter().enumerate() {
        assert_eq!(r.response == Response::Positive, (r.y0, r.y1) == (0, 1));
        assert_eq!(r.response, Response::from_potential(r.y0, r.y1));
        assert_eq!(y[i], if t[i] == 1 { r.y1 } else { r.y0 });
        *seen.entry(r.response).or_insert(0) += 1;
    }
    assert_eq!(seen.len(), 4, "every response type occurs");
}

#[test]
fn generation_is_deterministic() {
    let cfg = small(Group::Group2, 9, 300);
    let a = generate_group(&cfg).unwrap();
    let b = generate_group(&cfg).unwrap();
    assert_eq!(a.data.to_csv_string(), b.data.to_csv_string());
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    a.truth.write_csv(&mut ta).unwrap();
    b.truth.write_csv(&mut tb).unwrap();
    assert_eq!(ta, tb);
    let c = generate_group(&SynthConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.data.to_csv_string(), c.data.to_csv_string());
}

#[test]
fn ground_truth_csv_round_trip() {
    let s = generate_group(&small(Group::Group1, 2, 50)).unwrap();
    let mut buf = Vec::new();
    s.truth.write_csv(&mut buf).unwrap();
    assert_eq!(GroundTruth::read_csv(buf.as_slice()).unwrap(), s.truth);
}

/// Forward sampler written against the CPT lookup only; `force` pins a
/// node to a state as an intervention.
fn forward(net: &BayesNet, rng: &mut ChaCha8Rng, force: Option<(usize, usize)>, values: &mut [usize]) {
    for v in net.dag().topological_order() {
        if let Some((f, s)) = force {
            if f == v {
                values[v] = s;
                continue;
            }
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let k = net.arity(v);
        values[v] = k - 1;
        for s in 0..k {
            acc += net.prob(v, s, values);
            if u < acc {
                values[v] = s;
                break;
            }
        }
    }
}

#[test]
fn mean_effect_matches_interventional_simulation() {
    for group in [Group::Group1, Group::Group2] {
        let s = generate_group(&small(group, 4, 10_000)).unwrap();
        let net = &s.net;
        let t = net.dag().index_of("T").unwrap();
        let y = net.dag().index_of("Y").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut values = vec![0; net.len()];
        let mut rate = [0.0; 2];
        let draws = 1_000_000;
        for (arm, r) in rate.iter_mut().enumerate() {
            let mut ones = 0u64;
            for _ in 0..draws {
                forward(net, &mut rng, Some((t, arm)), &mut values);
                ones += values[y] as u64;
            }
            *r = ones as f64 / draws as f64;
        }
        let ate = rate[1] - rate[0];
        let mean = s.truth.effects().iter().sum::<f64>() / s.truth.len() as f64;
        assert!((mean - ate).abs() <= 0.01, "{group:?}: mean effect {mean} vs ATE {ate}");
    }
}

#[test]
fn hidden_effects_match_joint_enumeration() {
    // Enumerate the interventional joint of all 15 binary nodes once per
    // arm and read P(Y=1 | do(T=t), X1..X10) off the marginal table.
    let s = generate_group(&small(Group::Group2, 5, 400)).unwrap();
    let net = &s.net;
    let dag = net.dag();
    let t = dag.index_of("T").unwrap();
    let y = dag.index_of("Y").unwrap();
    let xs: Vec<usize> = (1..=10).map(|i| dag.index_of(&format!("X{i}")).unwrap()).collect();
    let n = net.len();
    let mut tables = [vec![[0.0f64; 2]; 1 << 10], vec![[0.0f64; 2]; 1 << 10]];
    for (arm, table) in tables.iter_mut().enumerate() {
        for code in 0..(1usize << n) {
            let values: Vec<usize> = (0..n).map(|v| code >> v & 1).collect();
            if values[t] != arm {
                continue;
            }
            let p: f64 = (0..n).filter(|&v| v != t).map(|v| net.prob(v, values[v], &values)).product();
            let key = xs.iter().enumerate().fold(0, |k, (b, &x)| k | values[x] << b);
            table[key][values[y]] += p;
        }
    }
    for (i, row) in s.truth.rows.iter().enumerate() {
        let key = xs
            .iter()
            .enumerate()
            .fold(0, |k, (b, &x)| k | (s.data.binary(dag.name(x)).unwrap()[i] as usize) << b);
        let p = |arm: usize| tables[arm][key][1] / (tables[arm][key][0] + tables[arm][key][1]);
        let expected = p(1) - p(0);
        assert!((row.effect - expected).abs() < 1e-12, "row {i}: {} vs {expected}", row.effect);
    }
}

#[test]
fn effect_signs_agree_with_simulation() {
    // Group 1: the effect is a function of (X8, X9); estimate it by
    // rejection sampling under each intervention.
    let s = generate_group(&small(Group::Group1, 6, 2000)).unwrap();
    let net = &s.net;
    let dag = net.dag();
    let (t, y) = (dag.index_of("T").unwrap(), dag.index_of("Y").unwrap());
    let (x8, x9) = (dag.index_of("X8").unwrap(), dag.index_of("X9").unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut values = vec![0; net.len()];
    let mut est = HashMap::new();
    for cell in 0..4usize {
        let mut rate = [0.0; 2];
        for (arm, r) in rate.iter_mut().enumerate() {
            let (mut hit, mut ones) = (0u64, 0u64);
            while hit < 100_000 {
                forward(net, &mut rng, Some((t, arm)), &mut values);
                if values[x8] * 2 + values[x9] == cell {
                    hit += 1;
                    ones += values[y] as u64;
                }
            }
            *r = ones as f64 / hit as f64;
        }
        est.insert(cell, rate[1] - rate[0]);
    }
    let c8 = s.data.binary("X8").unwrap();
    let c9 = s.data.binary("X9").unwrap();
    for (i, r) in s.truth.rows.iter().enumerate() {
        if r.effect.abs() >= 0.05 {
            let e = est[&(c8[i] as usize * 2 + c9[i] as usize)];
            assert_eq!(e > 0.0, r.effect > 0.0, "row {i}");
        }
    }
}

#[test]
fn samples_fit_their_cpts() {
    // Pearson goodness of fit of every (node, parent configuration) row.
    let net = datagen::fixtures::benchmark20();
    let data = datagen::sample(&net, 20_000, 31);
    let cols: Vec<Vec<u32>> = data
        .columns()
        .iter()
        .map(|c| c.codes().unwrap().to_vec())
        .collect();
    let (mut total, mut total_dof) = (0.0, 0usize);
    for v in 0..net.len() {
        let cpt = net.cpt(v);
        let k = net.arity(v);
        let mut counts = vec![vec![0u64; k]; cpt.rows.len()];
        let mut values = vec![0usize; net.len()];
        for r in 0..data.n_rows() {
            for (p, c) in values.iter_mut().zip(&cols) {
                *p = c[r] as usize;
            }
            counts[net.row_index(v, &values)][values[v]] += 1;
        }
        let (mut stat, mut dof) = (0.0, 0usize);
        for (row, obs) in cpt.rows.iter().zip(&counts) {
            let n: u64 = obs.iter().sum();
            if n == 0 {
                continue;
            }
            for (p, &o) in row.iter().zip(obs) {
                let e = p * n as f64;
                if e > 0.0 {
                    stat += (o as f64 - e).powi(2) / e;
                }
            }
            dof += k - 1;
        }
        let p = chi_square_sf(stat, dof as f64).unwrap();
        assert!(p > 0.01 / net.len() as f64, "node {}: p={p}", net.dag().name(v));
        total += stat;
        total_dof += dof;
    }
    assert!(chi_square_sf(total, total_dof as f64).unwrap() > 0.01);
}

#[test]
fn noise_columns_are_independent_of_treatment_and_outcome() {
    let alpha = 0.01;
    let (mut rejections, mut tests) = (0, 0);
    for seed in 0..5u64 {
        let s = generate_group(&small(Group::Group1, seed, 3000)).unwrap();
        let (coded, _) = s.data.discretized(3).unwrap();
        for k in 1..=90 {
            for target in ["T", "Y"] {
                let r = g2_test::<&str>(&coded, &format!("N{k}"), target, &[], alpha).unwrap();
                rejections += usize::from(!r.independent);
                tests += 1;
            }
        }
    }
    let rate = rejections as f64 / tests as f64;
    assert!(rate <= 2.0 * alpha, "false-positive rate {rate}");
}

#[test]
fn bif_round_trip_of_bundled_network() {
    let net = datagen::fixtures::benchmark20();
    assert_eq!(net.len(), 20);
    let back = parse_bif(&write_bif(&net)).unwrap();
    assert_eq!(back, net);
    assert_eq!(write_bif(&back), write_bif(&net));
}

#[test]
fn invalid_config_is_rejected() {
    assert!(generate_group(&small(Group::Group1, 0, 0)).is_err());
    let cfg = SynthConfig {
        continuous_fraction: 1.5,
        ..SynthConfig::new(Group::Group1, 0)
    };
    assert!(generate_group(&cfg).is_err());
}
