//! Local structure learning with Max-Min Parents and Children (MMPC).
//!
//! When the target has no descendants among the measured variables its
//! parents-and-children set is exactly its parent set, which is what the
//! two-model estimator needs.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{CITestResult, CodedData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub alpha: f64,
    pub max_cond_size: usize,
    /// Stop the forward phase once this many candidates were admitted.
    pub candidate_cap: Option<usize>,
    /// Run the symmetry correction after MMPC.
    pub symmetric: bool,
    /// Equal-frequency bins for continuous columns.
    pub bins: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            alpha: 0.01,
            max_cond_size: 3,
            candidate_cap: None,
            symmetric: true,
            bins: 3,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter("bins must be >= 2".into()));
        }
        if self.candidate_cap == Some(0) {
            return Err(Error::InvalidParameter("candidate_cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Forward,
    Backward,
    Symmetry,
}

/// One conditional independence test of `variable ⊥ target | conditioning`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub phase: Phase,
    pub target: String,
    pub variable: String,
    pub conditioning: Vec<String>,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub reliable: bool,
    pub independent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSet {
    pub target: String,
    pub members: Vec<String>,
    pub trace: Vec<TraceRecord>,
}

/// Strength of association from a test: smaller p is stronger, ties on p
/// broken by the larger statistic.
#[derive(Debug, Clone, Copy)]
struct Assoc {
    p: f64,
    stat: f64,
}

impl Assoc {
    fn of(r: &CITestResult) -> Assoc {
        Assoc {
            p: r.p_value,
            stat: r.statistic,
        }
    }

    fn cmp_strength(&self, other: &Assoc) -> Ordering {
        other
            .p
            .total_cmp(&self.p)
            .then(self.stat.total_cmp(&other.stat))
    }
}

/// All subsets of `pool` of size ≤ `max` that contain `must` (when given),
/// ordered by size then lexicographically by position.
fn subsets(pool: &[usize], must: Option<usize>, max: usize) -> Vec<Vec<usize>> {
    fn extend(rest: &[usize], size: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in from..rest.len() {
            cur.push(rest[i]);
            extend(rest, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let base: Vec<usize> = must.into_iter().collect();
    if base.len() > max {
        return Vec::new();
    }
    let rest: Vec<usize> = pool.iter().copied().filter(|&v| Some(v) != must).collect();
    let mut out = Vec::new();
    for size in base.len()..=max.min(base.len() + rest.len()) {
        let mut cur = base.clone();
        extend(&rest, size, 0, &mut cur, &mut out);
    }
    out
}

struct Tester<'a> {
    coded: CodedData<'a>,
    names: Vec<&'a str>,
    alpha: f64,
    cache: HashMap<(usize, usize, Vec<usize>), CITestResult>,
    trace: Vec<TraceRecord>,
}

impl<'a> Tester<'a> {
    fn new(data: &'a Dataset, alpha: f64) -> Result<Tester<'a>> {
        Ok(Tester {
            coded: CodedData::new(data)?,
            names: data.names().collect(),
            alpha,
            cache: HashMap::new(),
            trace: Vec::new(),
        })
    }

    fn test(&mut self, target: usize, x: usize, z: &[usize], phase: Phase) -> CITestResult {
        let mut key_z = z.to_vec();
        key_z.sort_unstable();
        let key = (target, x, key_z);
        if let Some(r) = self.cache.get(&key) {
            return *r;
        }
        let r = self.coded.test(x, target, z, self.alpha);
        self.trace.push(TraceRecord {
            phase,
            target: self.names[target].to_string(),
            variable: self.names[x].to_string(),
            conditioning: z.iter().map(|&i| self.names[i].to_string()).collect(),
            statistic: r.statistic,
            dof: r.dof,
            p_value: r.p_value,
            reliable: r.reliable,
            independent: r.independent,
        });
        self.cache.insert(key, r);
        r
    }

    fn mmpc(&mut self, target: usize, cfg: &DiscoveryConfig, symmetry_pass: bool) -> Vec<usize> {
        let (fwd, bwd) = if symmetry_pass {
            (Phase::Symmetry, Phase::Symmetry)
        } else {
            (Phase::Forward, Phase::Backward)
        };
        let n = self.coded.n_vars();
        // candidate -> weakest association seen so far
        let mut open: Vec<(usize, Assoc)> = Vec::new();
        for v in (0..n).filter(|&v| v != target) {
            let r = self.test(target, v, &[], fwd);
            if !r.independent {
                open.push((v, Assoc::of(&r)));
            }
        }
        let mut cpc: Vec<usize> = Vec::new();
        while !open.is_empty() {
            if cfg.candidate_cap.is_some_and(|cap| cpc.len() >= cap) {
                break;
            }
            // strongest minimum association; earlier declaration wins ties
            let mut best = 0;
            for i in 1..open.len() {
                if open[i].1.cmp_strength(&open[best].1) == Ordering::Greater {
                    best = i;
                }
            }
            let (chosen, _) = open.remove(best);
            cpc.push(chosen);
            let subs = subsets(&cpc, Some(chosen), cfg.max_cond_size);
            open.retain_mut(|(v, assoc)| {
                for s in &subs {
                    let r = self.test(target, *v, s, fwd);
                    if r.independent {
                        return false;
                    }
                    let a = Assoc::of(&r);
                    if a.cmp_strength(assoc) == Ordering::Less {
                        *assoc = a;
                    }
                }
                true
            });
        }

        let mut i = 0;
        while i < cpc.len() {
            let x = cpc[i];
            let others: Vec<usize> = cpc.iter().copied().filter(|&v| v != x).collect();
            let separated = subsets(&others, None, cfg.max_cond_size)
                .iter()
                .any(|s| self.test(target, x, s, bwd).independent);
            if separated {
                cpc.remove(i);
            } else {
                i += 1;
            }
        }
        cpc
    }
}

fn ordered_names(data: &Dataset, mut idx: Vec<usize>) -> Vec<String> {
    idx.sort_unstable();
    let names: Vec<&str> = data.names().collect();
    idx.into_iter().map(|i| names[i].to_string()).collect()
}

/// MMPC on an all-categorical dataset. Members come back in column order;
/// the trace lists every distinct test in the order it ran.
pub fn mmpc(data: &Dataset, target: &str, cfg: &DiscoveryConfig) -> Result<ParentSet> {
    cfg.validate()?;
    let t = data.index_of(target)?;
    let mut tester = Tester::new(data, cfg.alpha)?;
    let members = tester.mmpc(t, cfg, false);
    Ok(ParentSet {
        target: target.to_string(),
        members: ordered_names(data, members),
        trace: tester.trace,
    })
}

/// Keeps X in the candidate set only if the target is in MMPC(X).
pub fn symmetric_correction(
    data: &Dataset,
    target: &str,
    candidate: &ParentSet,
    cfg: &DiscoveryConfig,
) -> Result<ParentSet> {
    cfg.validate()?;
    let t = data.index_of(target)?;
    let mut tester = Tester::new(data, cfg.alpha)?;
    let mut kept = Vec::new();
    for name in &candidate.members {
        let x = data.index_of(name)?;
        let pc_x = tester.mmpc(x, cfg, true);
        if pc_x.contains(&t) {
            kept.push(x);
        } else {
            log::info!("symmetry check removed `{name}` from PC({target})");
        }
    }
    let mut trace = candidate.trace.clone();
    trace.extend(tester.trace);
    Ok(ParentSet {
        target: target.to_string(),
        members: ordered_names(data, kept),
        trace,
    })
}

/// Discretizes continuous columns, runs MMPC and, if configured, the
/// symmetry correction.
pub fn discover(data: &Dataset, target: &str, cfg: &DiscoveryConfig) -> Result<ParentSet> {
    cfg.validate()?;
    data.index_of(target)?;
    let (coded, degenerate) = data.discretized(cfg.bins)?;
    for name in degenerate {
        log::warn!("column `{name}` is constant after discretization");
    }
    let found = mmpc(&coded, target, cfg)?;
    if cfg.symmetric {
        symmetric_correction(&coded, target, &found, cfg)
    } else {
        Ok(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, Role};

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(&[1, 2, 3], None, 0), vec![Vec::<usize>::new()]);
        assert_eq!(subsets(&[], None, 3), vec![Vec::<usize>::new()]);
        let s = subsets(&[1, 2, 3], None, 2);
        assert_eq!(
            s,
            vec![
                vec![],
                vec![1],
                vec![2],
                vec![3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let s = subsets(&[1, 2, 3, 4], Some(4), 2);
        assert_eq!(s, vec![vec![4], vec![4, 1], vec![4, 2], vec![4, 3]]);
        assert!(subsets(&[4], Some(4), 0).is_empty());
        assert_eq!(subsets(&[1, 2, 3, 4, 5], None, 3).len(), 1 + 5 + 10 + 10);
    }

    #[test]
    fn association_order() {
        let strong = Assoc { p: 0.0, stat: 50.0 };
        let weaker = Assoc { p: 0.0, stat: 20.0 };
        let weakest = Assoc { p: 0.2, stat: 90.0 };
        assert_eq!(strong.cmp_strength(&weaker), Ordering::Greater);
        assert_eq!(weaker.cmp_strength(&weakest), Ordering::Greater);
    }

    #[test]
    fn empty_candidate_stays_empty() {
        let d = Dataset::new(vec![
            Column::binary("A", Role::Covariate, vec![0, 1, 0, 1]),
            Column::binary("Y", Role::Outcome, vec![0, 1, 1, 0]),
        ])
        .unwrap();
        let empty = ParentSet {
            target: "Y".into(),
            members: vec![],
            trace: vec![],
        };
        let out = symmetric_correction(&d, "Y", &empty, &DiscoveryConfig::default()).unwrap();
        assert!(out.members.is_empty());
    }

    #[test]
    fn rejects_unknown_target_and_continuous() {
        let d = Dataset::new(vec![
            Column::binary("A", Role::Covariate, vec![0, 1]),
            Column::continuous("C", Role::Covariate, vec![0.5, 0.1]),
        ])
        .unwrap();
        let cfg = DiscoveryConfig::default();
        assert_eq!(mmpc(&d, "Q", &cfg).unwrap_err(), Error::UnknownColumn("Q".into()));
        assert_eq!(mmpc(&d, "A", &cfg).unwrap_err(), Error::ContinuousColumn("C".into()));
        let bad = DiscoveryConfig {
            alpha: 0.0,
            ..cfg
        };
        assert!(mmpc(&d, "A", &bad).is_err());
    }
}
