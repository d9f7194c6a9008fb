//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use causal_classify::Dag;
use rand::Rng;

pub fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

/// DAG on `n` nodes from an upper-triangular bit mask over pairs (i<j),
/// pairs enumerated row by row.
pub fn dag_from_mask(n: usize, mask: u64) -> Dag {
    let names = node_names(n);
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((names[i].clone(), names[j].clone()));
            }
            bit += 1;
        }
    }
    Dag::new(&names, &edges).unwrap()
}

/// Random DAG: a random permutation fixes the causal order, then each
/// forward pair gets an edge with probability `p`.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p: f64) -> Dag {
    let names = node_names(n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((names[order[a]].clone(), names[order[b]].clone()));
            }
        }
    }
    Dag::new(&names, &edges).unwrap()
}

/// Descendants by repeated DFS over child lists read from the edge list.
pub fn brute_descendants(g: &Dag, v: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for &(a, b) in g.edge_indices() {
            if a == u && out.insert(b) {
                stack.push(b);
            }
        }
    }
    out
}

/// d-separation by enumerating simple paths in the skeleton. A path is
/// active when every interior node is either a collider with itself or a
/// descendant in `z`, or a non-collider outside `z`. Enumeration backs off
/// as soon as a prefix contains a blocked interior node, since no extension
/// of it can be active.
pub fn brute_d_separated(
    g: &Dag,
    x: &BTreeSet<usize>,
    y: &BTreeSet<usize>,
    z: &BTreeSet<usize>,
) -> bool {
    let n = g.len();
    let has = |a: usize, b: usize| g.edge_indices().contains(&(a, b));
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&w| has(u, w) || has(w, u)).collect())
        .collect();
    let desc: Vec<BTreeSet<usize>> = (0..n).map(|v| brute_descendants(g, v)).collect();
    let collider_open = |v: usize| z.contains(&v) || desc[v].iter().any(|d| z.contains(d));

    fn walk(
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        adj: &[Vec<usize>],
        y: &BTreeSet<usize>,
        interior_ok: &dyn Fn(usize, usize, usize) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if path.len() > 1 && y.contains(&last) {
            return true;
        }
        for &next in &adj[last] {
            if on_path[next] {
                continue;
            }
            if path.len() >= 2 {
                let prev = path[path.len() - 2];
                if !interior_ok(prev, last, next) {
                    continue;
                }
            }
            path.push(next);
            on_path[next] = true;
            let found = walk(path, on_path, adj, y, interior_ok);
            path.pop();
            on_path[next] = false;
            if found {
                return true;
            }
        }
        false
    }

    let interior_ok = |a: usize, m: usize, b: usize| {
        let collider = has(a, m) && has(b, m);
        if collider {
            collider_open(m)
        } else {
            !z.contains(&m)
        }
    };
    for &s in x {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        let mut path = vec![s];
        if walk(&mut path, &mut on_path, &adj, y, &interior_ok) {
            return false;
        }
    }
    true
}

/// Every assignment of nodes to X, Y, Z or none with X and Y non-empty.
pub fn all_disjoint_triples(n: usize) -> Vec<[BTreeSet<usize>; 3]> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let mut sets: [BTreeSet<usize>; 3] = Default::default();
        let mut c = code;
        for v in 0..n {
            let k = c % 4;
            c /= 4;
            if k < 3 {
                sets[k].insert(v);
            }
        }
        if !sets[0].is_empty() && !sets[1].is_empty() {
            out.push(sets);
        }
    }
    out
}
