//! Bagged CART trees with Gini splits for a binary label.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; `None` uses the square root of the
    /// encoded width (rounded, at least 1).
    pub feature_subsample: Option<usize>,
    pub seed: u64,
}

impl ForestParams {
    pub fn with_seed(seed: u64) -> ForestParams {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            feature_subsample: None,
            seed,
        }
    }

    fn mtry(&self, width: usize) -> usize {
        self.feature_subsample
            .unwrap_or_else(|| (width as f64).sqrt().round() as usize)
            .clamp(1, width.max(1))
    }
}

/// Flat tree: `feature[k] < 0` marks a leaf whose class-1 frequency is
/// `value[k]`; otherwise rows with `x[feature] <= value[k]` go to `left[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub value: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut k = 0usize;
        loop {
            let f = self.feature[k];
            if f < 0 {
                return self.value[k];
            }
            k = if row[f as usize] <= self.value[k] {
                self.left[k]
            } else {
                self.right[k]
            } as usize;
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    fn push(&mut self, feature: i32, value: f64) -> usize {
        self.feature.push(feature);
        self.value.push(value);
        self.left.push(0);
        self.right.push(0);
        self.feature.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub seed: u64,
    /// Accuracy at the 0.5 cutoff over rows with at least one out-of-bag
    /// tree; `None` when no row was ever out of bag.
    pub oob_accuracy: Option<f64>,
}

impl Forest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        s / self.trees.len() as f64
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Sum of n * gini over the two children.
    impurity: f64,
}

/// n * gini for a binary node.
fn weighted_gini(ones: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (o, n) = (ones as f64, n as f64);
    2.0 * o * (n - o) / n
}

struct Builder<'a> {
    cols: &'a [Vec<f64>],
    binary: &'a [bool],
    y: &'a [u8],
    params: &'a ForestParams,
    mtry: usize,
    buf: Vec<(f64, u8)>,
}

impl Builder<'_> {
    fn best_split_on(&mut self, f: usize, idx: &[u32], ones: usize) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf;
        let col = &self.cols[f];
        if self.binary[f] {
            let (mut n1, mut ones1) = (0usize, 0usize);
            for &i in idx {
                if col[i as usize] > 0.5 {
                    n1 += 1;
                    ones1 += self.y[i as usize] as usize;
                }
            }
            let n0 = n - n1;
            if n0 < min_leaf || n1 < min_leaf || n0 == 0 || n1 == 0 {
                return None;
            }
            return Some(Split {
                feature: f,
                threshold: 0.5,
                impurity: weighted_gini(ones - ones1, n0) + weighted_gini(ones1, n1),
            });
        }
        self.buf.clear();
        self.buf
            .extend(idx.iter().map(|&i| (col[i as usize], self.y[i as usize])));
        self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<Split> = None;
        let mut ones_l = 0usize;
        for k in 0..n - 1 {
            ones_l += self.buf[k].1 as usize;
            let nl = k + 1;
            if self.buf[k].0 == self.buf[k + 1].0 || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let imp = weighted_gini(ones_l, nl) + weighted_gini(ones - ones_l, n - nl);
            if best.as_ref().is_none_or(|b| imp < b.impurity) {
                best = Some(Split {
                    feature: f,
                    threshold: 0.5 * (self.buf[k].0 + self.buf[k + 1].0),
                    impurity: imp,
                });
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<u32>, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree {
            feature: Vec::new(),
            value: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
        };
        let p = self.cols.len();
        let mut order: Vec<usize> = (0..p).collect();
        // (node slot, rows, depth)
        let mut stack = vec![(tree.push(-1, 0.0), idx, 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let n = idx.len();
            let ones: usize = idx.iter().map(|&i| self.y[i as usize] as usize).sum();
            tree.value[slot] = ones as f64 / n as f64;
            let can_split = ones > 0
                && ones < n
                && n >= 2 * self.params.min_leaf
                && self.params.max_depth.is_none_or(|d| depth < d);
            if !can_split {
                continue;
            }
            // visit features in random order until `mtry` were examined and
            // some valid split exists
            order.shuffle(rng);
            let mut best: Option<Split> = None;
            for (seen, &f) in order.iter().enumerate() {
                if seen >= self.mtry && best.is_some() {
                    break;
                }
                if let Some(s) = self.best_split_on(f, &idx, ones) {
                    if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                        best = Some(s);
                    }
                }
            }
            let Some(split) = best else { continue };
            let col = &self.cols[split.feature];
            let (l, r): (Vec<u32>, Vec<u32>) =
                idx.iter().partition(|&&i| col[i as usize] <= split.threshold);
            tree.feature[slot] = split.feature as i32;
            tree.value[slot] = split.threshold;
            let ls = tree.push(-1, 0.0);
            let rs = tree.push(-1, 0.0);
            tree.left[slot] = ls as u32;
            tree.right[slot] = rs as u32;
            stack.push((rs, r, depth + 1));
            stack.push((ls, l, depth + 1));
        }
        tree
    }
}

/// Fits the forest. Tree `k` draws its bootstrap sample and feature orders
/// from ChaCha stream `k` of `params.seed`, so results do not depend on the
/// order trees are built in.
pub fn fit(x: &Matrix, y: &[u8], params: &ForestParams) -> Forest {
    let n = x.n_rows;
    let cols: Vec<Vec<f64>> = (0..x.n_cols)
        .map(|j| (0..n).map(|i| x.data[i * x.n_cols + j]).collect())
        .collect();
    let binary: Vec<bool> = cols
        .iter()
        .map(|c| c.iter().all(|&v| v == 0.0 || v == 1.0))
        .collect();
    let mut b = Builder {
        cols: &cols,
        binary: &binary,
        y,
        params,
        mtry: params.mtry(x.n_cols),
        buf: Vec::with_capacity(n),
    };
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut oob_sum = vec![0.0; n];
    let mut oob_cnt = vec![0u32; n];
    let mut in_bag = vec![false; n];
    for k in 0..params.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(k as u64);
        in_bag.iter_mut().for_each(|v| *v = false);
        let idx: Vec<u32> = (0..n)
            .map(|_| {
                let i = rng.random_range(0..n);
                in_bag[i] = true;
                i as u32
            })
            .collect();
        let tree = b.grow(idx, &mut rng);
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_sum[i] += tree.predict_row(x.row(i));
            oob_cnt[i] += 1;
        }
        trees.push(tree);
    }
    let scored: Vec<usize> = (0..n).filter(|&i| oob_cnt[i] > 0).collect();
    let oob_accuracy = (!scored.is_empty()).then(|| {
        let hits = scored
            .iter()
            .filter(|&&i| (oob_sum[i] / f64::from(oob_cnt[i]) > 0.5) == (y[i] == 1))
            .count();
        hits as f64 / scored.len() as f64
    });
    Forest {
        trees,
        seed: params.seed,
        oob_accuracy,
    }
}
