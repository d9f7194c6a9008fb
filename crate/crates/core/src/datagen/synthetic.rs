//! Synthetic causal classification benchmarks with known per-row effects.
//!
//! Two topologies over X1..X10, T and Y: one causally sufficient, one with
//! latent U1..U3 whose columns are dropped from the emitted data. Both are
//! padded with noise columns unrelated to T and Y. The outcome CPT makes
//! the effect of T depend on PA'(Y) so that positive, negative and null
//! effects all occur.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{draw, BayesNet, EffectOracle};
use crate::dataset::{Column, Dataset, Role};
use crate::error::{Error, Result};
use crate::graph::fixtures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// Causal sufficiency holds.
    Group1,
    /// Latent parents of Y exist and are removed from the data.
    Group2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub group: Group,
    pub n_samples: usize,
    pub n_noise_vars: usize,
    pub seed: u64,
    /// Share of noise columns drawn from N(0,1); the rest are Bernoulli(0.5).
    pub continuous_fraction: f64,
}

impl SynthConfig {
    pub fn new(group: Group, seed: u64) -> SynthConfig {
        SynthConfig {
            group,
            n_samples: 10_000,
            n_noise_vars: 90,
            seed,
            continuous_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.continuous_fraction) {
            return Err(Error::InvalidParameter(
                "continuous_fraction must be in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

/// Response type of an individual, from its two potential outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Positive,
    Negative,
    Nonresponse0,
    Nonresponse1,
}

impl Response {
    pub fn from_potential(y0: u8, y1: u8) -> Response {
        match (y0, y1) {
            (0, 1) => Response::Positive,
            (1, 0) => Response::Negative,
            (0, 0) => Response::Nonresponse0,
            _ => Response::Nonresponse1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Response::Positive => "positive",
            Response::Negative => "negative",
            Response::Nonresponse0 => "nonresponse0",
            Response::Nonresponse1 => "nonresponse1",
        }
    }

    pub fn parse(s: &str) -> Option<Response> {
        [
            Response::Positive,
            Response::Negative,
            Response::Nonresponse0,
            Response::Nonresponse1,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub effect: f64,
    pub response: Response,
    pub y0: u8,
    pub y1: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub rows: Vec<TruthRow>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn effects(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.effect).collect()
    }

    pub fn take_rows(&self, idx: &[usize]) -> GroundTruth {
        GroundTruth {
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
        }
    }

    /// CSV with columns `row_id,effect,response,y0,y1`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row_id", "effect", "response", "y0", "y1"])?;
        for (i, r) in self.rows.iter().enumerate() {
            wr.write_record([
                i.to_string(),
                r.effect.to_string(),
                r.response.as_str().to_string(),
                r.y0.to_string(),
                r.y1.to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<GroundTruth> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(vec![name.to_string()]))
        };
        let (ie, ir, i0, i1) = (col("effect")?, col("response")?, col("y0")?, col("y1")?);
        let bad = |what: &str, v: &str| Error::Csv(format!("bad {what} `{v}`"));
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let effect = rec[ie].parse().map_err(|_| bad("effect", &rec[ie]))?;
            let response = Response::parse(&rec[ir]).ok_or_else(|| bad("response", &rec[ir]))?;
            let y0 = rec[i0].parse().map_err(|_| bad("y0", &rec[i0]))?;
            let y1 = rec[i1].parse().map_err(|_| bad("y1", &rec[i1]))?;
            rows.push(TruthRow {
                effect,
                response,
                y0,
                y1,
            });
        }
        Ok(GroundTruth { rows })
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub data: Dataset,
    pub truth: GroundTruth,
    pub net: BayesNet,
}

fn bern(p1: f64) -> Vec<f64> {
    vec![1.0 - p1, p1]
}

/// P(Y=1 | T=0) and P(Y=1 | T=1) per (X8, X9) configuration.
const OUTCOME_BASE: [(f64, f64); 4] = [
    (0.20, 0.70), // +0.5
    (0.60, 0.30), // -0.3
    (0.45, 0.45), // null effect
    (0.50, 0.80), // +0.3
];

/// Builds the benchmark network for a group. Node order follows
/// [`fixtures::synthetic_sufficient`] / [`fixtures::synthetic_hidden`].
pub fn benchmark_net(group: Group) -> BayesNet {
    let dag = match group {
        Group::Group1 => fixtures::synthetic_sufficient(),
        Group::Group2 => fixtures::synthetic_hidden(),
    };
    let hidden_names: &[&str] = match group {
        Group::Group1 => &[],
        Group::Group2 => &["U1", "U2", "U3"],
    };
    let nodes: Vec<&str> = dag.names().iter().map(String::as_str).collect();
    let mut cpts: Vec<(Vec<&str>, Vec<Vec<f64>>)> = Vec::new();
    for &v in &nodes {
        let parents = dag.parents(v).expect("node exists");
        // rows in mixed radix over `parents`, first parent most significant
        let n_rows = 1usize << parents.len();
        let bit = |row: usize, name: &str| -> f64 {
            let k = parents.iter().position(|p| *p == name).expect("parent present");
            ((row >> (parents.len() - 1 - k)) & 1) as f64
        };
        let rows: Vec<Vec<f64>> = (0..n_rows)
            .map(|r| {
                let p1 = match v {
                    "X1" => 0.5,
                    "X2" => 0.4,
                    "X3" => 0.5,
                    "X4" if group == Group::Group1 => 0.5,
                    "X4" => 0.2 + 0.6 * bit(r, "U3"),
                    "X5" if group == Group::Group1 => 0.6,
                    "X5" => 0.35 + 0.4 * bit(r, "U1"),
                    "X6" if group == Group::Group1 => 0.5,
                    "X6" => 0.3 + 0.4 * bit(r, "U1"),
                    "X7" => 0.3,
                    "X10" => [0.2, 0.6, 0.5, 0.9][r],
                    "X8" => [0.15, 0.6, 0.45, 0.85][r],
                    "X9" if group == Group::Group1 => [0.2, 0.55, 0.5, 0.85][r],
                    "X9" => 0.15 + 0.3 * bit(r, "X4") + 0.3 * bit(r, "X5") + 0.2 * bit(r, "U2"),
                    "U1" | "U2" | "U3" => 0.5,
                    "T" => 0.5 + 0.15 * bit(r, "X1") - 0.2 * bit(r, "X2") + 0.15 * bit(r, "X3"),
                    "Y" => {
                        let cell = (bit(r, "X8") as usize) * 2 + bit(r, "X9") as usize;
                        let (p0, p1) = OUTCOME_BASE[cell];
                        let t = bit(r, "T");
                        let mut p = p0 + t * (p1 - p0);
                        if group == Group::Group2 {
                            // U2 shifts both arms, U3 modulates the effect
                            p += 0.08 * (2.0 * bit(r, "U2") - 1.0);
                            p += t * 0.1 * (2.0 * bit(r, "U3") - 1.0);
                        }
                        p
                    }
                    other => unreachable!("unexpected node {other}"),
                };
                bern(p1)
            })
            .collect();
        cpts.push((parents, rows));
    }
    let binary = || vec!["0".to_string(), "1".to_string()];
    let name = match group {
        Group::Group1 => "synthetic-sufficient",
        Group::Group2 => "synthetic-hidden",
    };
    BayesNet::new(
        name,
        &nodes,
        vec![binary(); nodes.len()],
        cpts,
        hidden_names,
    )
    .expect("benchmark net is valid")
}

/// Generates data, per-row ground truth and the generating network.
///
/// Column order is T, Y, X1..X10, then the noise columns N1... Each row
/// draws the network nodes (except Y) in topological order, then one
/// uniform that determines both potential outcomes, then the noise values.
/// The observed Y is the potential outcome of the sampled T.
pub fn generate_group(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let net = benchmark_net(cfg.group);
    let dag = net.dag();
    let t = dag.index_of("T")?;
    let y = dag.index_of("Y")?;
    let oracle = EffectOracle::new(&net, "T", "Y")?;
    let order: Vec<usize> = dag.topological_order().into_iter().filter(|&v| v != y).collect();
    let n_cont = (cfg.continuous_fraction * cfg.n_noise_vars as f64).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_samples;
    let mut node_cols: Vec<Vec<u8>> = vec![Vec::with_capacity(n); net.len()];
    let mut noise: Vec<Vec<f64>> = vec![Vec::with_capacity(n); cfg.n_noise_vars];
    let mut truth = Vec::with_capacity(n);
    let mut values = vec![0usize; net.len()];

    for _ in 0..n {
        net.sample_row(&order, &mut rng, &mut values);
        let t_obs = values[t];
        let u: f64 = rng.random();
        let mut potential = [0u8; 2];
        for (arm, slot) in potential.iter_mut().enumerate() {
            values[t] = arm;
            let row = &net.cpt(y).rows[net.row_index(y, &values)];
            *slot = draw(row, u) as u8;
        }
        values[t] = t_obs;
        values[y] = potential[t_obs] as usize;
        for (c, &v) in node_cols.iter_mut().zip(&values) {
            c.push(v as u8);
        }
        truth.push(TruthRow {
            effect: oracle.effect(&values)?,
            response: Response::from_potential(potential[0], potential[1]),
            y0: potential[0],
            y1: potential[1],
        });
        for (k, col) in noise.iter_mut().enumerate() {
            col.push(if k < n_cont {
                rng.sample(StandardNormal)
            } else {
                f64::from(rng.random_bool(0.5) as u8)
            });
        }
    }

    let mut columns = vec![
        Column::binary("T", Role::Treatment, std::mem::take(&mut node_cols[t])),
        Column::binary("Y", Role::Outcome, std::mem::take(&mut node_cols[y])),
    ];
    for v in 0..net.len() {
        if v == t || v == y || net.is_hidden(v) {
            continue;
        }
        columns.push(Column::binary(
            dag.name(v),
            Role::Covariate,
            std::mem::take(&mut node_cols[v]),
        ));
    }
    for (k, col) in noise.into_iter().enumerate() {
        let name = format!("N{}", k + 1);
        columns.push(if k < n_cont {
            Column::continuous(name, Role::Noise, col)
        } else {
            Column::binary(name, Role::Noise, col.into_iter().map(|v| v as u8).collect())
        });
    }
    Ok(SynthData {
        data: Dataset::new(columns)?,
        truth: GroundTruth { rows: truth },
        net,
    })
}
