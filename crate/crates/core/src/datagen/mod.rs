//! Discrete Bayesian networks: construction, forward sampling and the exact
//! conditional causal effect used as ground truth for synthetic benchmarks.

mod bif;
mod synthetic;

pub use bif::{parse_bif, write_bif};
pub use synthetic::{
    benchmark_net, generate_group, GroundTruth, Group, Response, SynthConfig, SynthData, TruthRow,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset, Role};
use crate::error::{Error, Result};
use crate::graph::Dag;

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Conditional probability table. Rows are indexed by the parent
/// configuration in mixed radix with the first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub parents: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    pub name: String,
    dag: Dag,
    states: Vec<Vec<String>>,
    cpts: Vec<Cpt>,
    hidden: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    name: String,
    variables: Vec<VariableJson>,
    #[serde(default)]
    hidden: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VariableJson {
    name: String,
    states: Vec<String>,
    parents: Vec<String>,
    cpt: Vec<Vec<f64>>,
}

impl BayesNet {
    /// Builds a network from per-node state lists and CPTs given in node
    /// declaration order. The CPT parent lists define the DAG.
    pub fn new(
        name: impl Into<String>,
        nodes: &[&str],
        states: Vec<Vec<String>>,
        cpts: Vec<(Vec<&str>, Vec<Vec<f64>>)>,
        hidden: &[&str],
    ) -> Result<BayesNet> {
        let edges: Vec<(&str, &str)> = cpts
            .iter()
            .zip(nodes)
            .flat_map(|((parents, _), &child)| parents.iter().map(move |&p| (p, child)))
            .collect();
        let dag = Dag::new(nodes, &edges)?;
        let cpts = cpts
            .into_iter()
            .map(|(parents, rows)| {
                Ok(Cpt {
                    parents: parents
                        .iter()
                        .map(|p| dag.index_of(p))
                        .collect::<Result<Vec<_>>>()?,
                    rows,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let hidden = hidden
            .iter()
            .map(|h| dag.index_of(h))
            .collect::<Result<Vec<_>>>()?;
        let net = BayesNet {
            name: name.into(),
            dag,
            states,
            cpts,
            hidden,
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        if self.states.len() != self.dag.len() || self.cpts.len() != self.dag.len() {
            return Err(Error::InvalidParameter(
                "one state list and one CPT per node required".into(),
            ));
        }
        for (v, cpt) in self.cpts.iter().enumerate() {
            let name = self.dag.name(v).to_string();
            if self.states[v].is_empty() {
                return Err(Error::InvalidParameter(format!("`{name}` has no states")));
            }
            let expected: usize = cpt.parents.iter().map(|&p| self.arity(p)).product();
            if cpt.rows.len() < expected {
                return Err(Error::MissingCptRow {
                    node: name,
                    config: self.config_of(v, cpt.rows.len()),
                });
            }
            if cpt.rows.len() > expected {
                return Err(Error::InvalidParameter(format!(
                    "`{name}` has {} CPT rows, expected {expected}",
                    cpt.rows.len()
                )));
            }
            for (c, row) in cpt.rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != self.arity(v)
                    || row.iter().any(|p| !(0.0..=1.0).contains(p))
                    || (sum - 1.0).abs() > ROW_SUM_TOL
                {
                    return Err(Error::RowSumViolation {
                        node: name,
                        config: self.config_of(v, c),
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn arity(&self, v: usize) -> usize {
        self.states[v].len()
    }

    pub fn states(&self, v: usize) -> &[String] {
        &self.states[v]
    }

    pub fn cpt(&self, v: usize) -> &Cpt {
        &self.cpts[v]
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn is_hidden(&self, v: usize) -> bool {
        self.hidden.contains(&v)
    }

    /// Row index of the CPT of `v` for full assignment `values`.
    pub fn row_index(&self, v: usize, values: &[usize]) -> usize {
        self.cpts[v]
            .parents
            .iter()
            .fold(0, |acc, &p| acc * self.arity(p) + values[p])
    }

    /// Parent state indices for row `row` of node `v`'s CPT.
    pub fn config_of(&self, v: usize, mut row: usize) -> Vec<usize> {
        let parents = &self.cpts[v].parents;
        let mut cfg = vec![0; parents.len()];
        for (slot, &p) in cfg.iter_mut().zip(parents).rev() {
            *slot = row % self.arity(p);
            row /= self.arity(p);
        }
        cfg
    }

    pub fn prob(&self, v: usize, state: usize, values: &[usize]) -> f64 {
        self.cpts[v].rows[self.row_index(v, values)][state]
    }

    /// Index of the "positive" state of a binary node: the state labelled
    /// `1` if present, else the second state.
    pub fn positive_state(&self, v: usize) -> usize {
        self.states[v].iter().position(|s| s == "1").unwrap_or(1)
    }

    pub fn to_json(&self) -> String {
        let j = NetJson {
            name: self.name.clone(),
            variables: (0..self.len())
                .map(|v| VariableJson {
                    name: self.dag.name(v).to_string(),
                    states: self.states[v].clone(),
                    parents: self.cpts[v]
                        .parents
                        .iter()
                        .map(|&p| self.dag.name(p).to_string())
                        .collect(),
                    cpt: self.cpts[v].rows.clone(),
                })
                .collect(),
            hidden: self.hidden.iter().map(|&h| self.dag.name(h).to_string()).collect(),
        };
        serde_json::to_string_pretty(&j).expect("net serializes")
    }

    pub fn from_json(text: &str) -> Result<BayesNet> {
        let j: NetJson = serde_json::from_str(text)?;
        let nodes: Vec<&str> = j.variables.iter().map(|v| v.name.as_str()).collect();
        let states = j.variables.iter().map(|v| v.states.clone()).collect();
        let cpts = j
            .variables
            .iter()
            .map(|v| (v.parents.iter().map(String::as_str).collect(), v.cpt.clone()))
            .collect();
        let hidden: Vec<&str> = j.hidden.iter().map(String::as_str).collect();
        BayesNet::new(j.name.clone(), &nodes, states, cpts, &hidden)
    }

    /// Draws one full assignment in topological order.
    pub fn sample_row<R: Rng>(&self, order: &[usize], rng: &mut R, values: &mut [usize]) {
        for &v in order {
            let row = &self.cpts[v].rows[self.row_index(v, values)];
            values[v] = draw(row, rng.random::<f64>());
        }
    }
}

/// Inverse-CDF draw from a categorical distribution.
pub(crate) fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn state_column(net: &BayesNet, v: usize, codes: Vec<u32>) -> Column {
    let states = net.states(v);
    if states.len() == 2 && states[0] == "0" && states[1] == "1" {
        Column::binary(
            net.dag().name(v),
            Role::Covariate,
            codes.into_iter().map(|c| c as u8).collect(),
        )
    } else {
        Column::categorical(net.dag().name(v), Role::Covariate, codes, states.to_vec())
    }
}

/// Forward-samples `n` rows. All nodes, hidden or not, become columns in
/// declaration order.
pub fn sample(net: &BayesNet, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = net.dag().topological_order();
    let mut cols: Vec<Vec<u32>> = vec![Vec::with_capacity(n); net.len()];
    let mut values = vec![0usize; net.len()];
    for _ in 0..n {
        net.sample_row(&order, &mut rng, &mut values);
        for (c, &v) in cols.iter_mut().zip(&values) {
            c.push(v as u32);
        }
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(v, codes)| state_column(net, v, codes))
        .collect();
    Dataset::new(columns).expect("columns share length")
}

/// Conditional causal effect of binary `t` on binary `y` for one row:
/// P(y | do(t=1), pa') − P(y | do(t=0), pa').
///
/// `row` holds a state index per node in declaration order; entries of
/// hidden nodes and of `y` are ignored. Hidden parents of `y` are
/// marginalized over their posterior given every observed non-descendant
/// of `t`, by enumeration of all hidden configurations.
pub fn true_effect(net: &BayesNet, t: &str, y: &str, row: &[usize]) -> Result<f64> {
    EffectOracle::new(net, t, y)?.effect(row)
}

/// Precomputed state for repeated [`true_effect`] evaluations.
#[derive(Debug, Clone)]
pub struct EffectOracle<'a> {
    net: &'a BayesNet,
    t: usize,
    y: usize,
    y_pos: usize,
    t_states: (usize, usize),
    /// Nodes whose CPTs enter the hidden-variable posterior.
    evidence: Vec<usize>,
}

impl<'a> EffectOracle<'a> {
    pub fn new(net: &'a BayesNet, t: &str, y: &str) -> Result<EffectOracle<'a>> {
        let dag = net.dag();
        let ti = dag.index_of(t)?;
        let yi = dag.index_of(y)?;
        if !dag.parent_indices(yi).contains(&ti) {
            return Err(Error::TNotParent {
                t: t.to_string(),
                y: y.to_string(),
            });
        }
        if net.arity(yi) != 2 {
            return Err(Error::NonBinary(y.to_string()));
        }
        if net.arity(ti) != 2 {
            return Err(Error::NonBinary(t.to_string()));
        }
        let t_desc = dag.descendant_indices(ti);
        let evidence = (0..net.len())
            .filter(|&v| v != ti && !t_desc.contains(&v))
            .collect();
        let pos = net.positive_state(ti);
        Ok(EffectOracle {
            net,
            t: ti,
            y: yi,
            y_pos: net.positive_state(yi),
            t_states: (1 - pos.min(1), pos),
            evidence,
        })
    }

    fn direct(&self, values: &mut [usize]) -> f64 {
        values[self.t] = self.t_states.1;
        let p1 = self.net.prob(self.y, self.y_pos, values);
        values[self.t] = self.t_states.0;
        let p0 = self.net.prob(self.y, self.y_pos, values);
        p1 - p0
    }

    pub fn effect(&self, row: &[usize]) -> Result<f64> {
        if row.len() != self.net.len() {
            return Err(Error::LengthMismatch(self.net.len(), row.len()));
        }
        let mut values = row.to_vec();
        let hidden = self.net.hidden();
        let hidden_parent = self
            .net
            .cpt(self.y)
            .parents
            .iter()
            .any(|p| hidden.contains(p));
        if !hidden_parent {
            return Ok(self.direct(&mut values));
        }
        let mut total_w = 0.0;
        let mut acc = 0.0;
        let mut config = vec![0usize; hidden.len()];
        loop {
            for (&h, &s) in hidden.iter().zip(&config) {
                values[h] = s;
            }
            let w: f64 = self
                .evidence
                .iter()
                .map(|&v| self.net.prob(v, values[v], &values))
                .product();
            if w > 0.0 {
                total_w += w;
                acc += w * self.direct(&mut values);
            }
            // odometer over hidden states
            let mut k = 0;
            while k < hidden.len() {
                config[k] += 1;
                if config[k] < self.net.arity(hidden[k]) {
                    break;
                }
                config[k] = 0;
                k += 1;
            }
            if k == hidden.len() {
                break;
            }
        }
        if total_w == 0.0 {
            return Err(Error::InvalidParameter(
                "observed row has zero probability under the network".into(),
            ));
        }
        Ok(acc / total_w)
    }
}

/// Bundled networks.
pub mod fixtures {
    use super::{parse_bif, BayesNet};

    /// 20-node benchmark network with the topology of the CHILD network.
    /// Its CPTs are locally chosen (not the original parameters) with clear
    /// dependence along every edge.
    pub const BENCHMARK20_BIF: &str = include_str!("../../fixtures/benchmark20.bif");

    pub fn benchmark20() -> BayesNet {
        parse_bif(BENCHMARK20_BIF).expect("bundled network parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> Vec<String> {
        vec!["0".into(), "1".into()]
    }

    fn two_node() -> BayesNet {
        BayesNet::new(
            "pair",
            &["A", "B"],
            vec![binary(), binary()],
            vec![
                (vec![], vec![vec![0.7, 0.3]]),
                (vec!["A"], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            ],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn row_sum_and_missing_rows_rejected() {
        let err = BayesNet::new(
            "bad",
            &["A"],
            vec![binary()],
            vec![(vec![], vec![vec![0.5, 0.4]])],
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, Error::RowSumViolation { .. }));
        let err = BayesNet::new(
            "bad",
            &["A", "B"],
            vec![binary(), binary()],
            vec![(vec![], vec![vec![0.5, 0.5]]), (vec!["A"], vec![vec![0.5, 0.5]])],
            &[],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::MissingCptRow {
                node: "B".into(),
                config: vec![1]
            }
        );
    }

    #[test]
    fn config_round_trip() {
        let net = BayesNet::new(
            "c",
            &["A", "B", "C"],
            vec![binary(), vec!["x".into(), "y".into(), "z".into()], binary()],
            vec![
                (vec![], vec![vec![0.5, 0.5]]),
                (vec![], vec![vec![0.2, 0.3, 0.5]]),
                (vec!["A", "B"], vec![vec![0.5, 0.5]; 6]),
            ],
            &[],
        )
        .unwrap();
        for row in 0..6 {
            let cfg = net.config_of(2, row);
            let values = [cfg[0], cfg[1], 0];
            assert_eq!(net.row_index(2, &values), row);
        }
        assert_eq!(net.config_of(2, 4), vec![1, 1]);
    }

    #[test]
    fn deterministic_cpts_sample_one_configuration() {
        let net = BayesNet::new(
            "det",
            &["A", "B"],
            vec![binary(), binary()],
            vec![
                (vec![], vec![vec![0.0, 1.0]]),
                (vec!["A"], vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            ],
            &[],
        )
        .unwrap();
        let d = sample(&net, 50, 3);
        assert!(d.binary("A").unwrap().iter().all(|&a| a == 1));
        assert!(d.binary("B").unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn sampling_is_seeded() {
        let net = two_node();
        assert_eq!(sample(&net, 100, 9), sample(&net, 100, 9));
        assert_ne!(sample(&net, 100, 9), sample(&net, 100, 10));
    }

    #[test]
    fn effect_from_cpt_lookup() {
        let net = two_node();
        // P(B=1|A=1) - P(B=1|A=0) = 0.8 - 0.1
        let e = true_effect(&net, "A", "B", &[0, 0]).unwrap();
        assert!((e - 0.7).abs() < 1e-12);
        assert!(matches!(
            true_effect(&net, "B", "A", &[0, 0]),
            Err(Error::TNotParent { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let net = fixtures::benchmark20();
        let back = BayesNet::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn draw_handles_rounding_gap() {
        assert_eq!(draw(&[0.5, 0.5 - 1e-12], 0.999_999_999_999_9), 1);
        assert_eq!(draw(&[1.0, 0.0], 0.3), 0);
    }
}
