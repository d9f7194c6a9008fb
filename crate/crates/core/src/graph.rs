//! Directed acyclic graphs over named variables.
//!
//! Besides the usual parent/descendant queries this module provides the
//! two pieces needed to reason about interventions on a causal DAG:
//! graph mutilation (dropping incoming or outgoing edges of a node set) and
//! d-separation. [`verify_uplift_conditions`] combines them to check whether
//! the conditional causal effect of a treatment can be read off the
//! observational distribution restricted to the outcome's parents.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An immutable DAG. Node order is the declaration order and is used for
/// every ordered output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DagJson {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

impl Dag {
    /// Builds a DAG, rejecting unknown endpoints, duplicate edges and cycles
    /// (self-loops are reported as a cycle of length one).
    pub fn new<S: AsRef<str>, E: AsRef<str>>(nodes: &[S], edges: &[(E, E)]) -> Result<Dag> {
        let mut names = Vec::with_capacity(nodes.len());
        let mut index = HashMap::with_capacity(nodes.len());
        for n in nodes {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), names.len()).is_some() {
                return Err(Error::DuplicateNode(n));
            }
            names.push(n);
        }
        let mut idx_edges = Vec::with_capacity(edges.len());
        let mut seen = HashSet::with_capacity(edges.len());
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index.get(a).ok_or_else(|| Error::UnknownNode(a.to_string()))?;
            let ib = *index.get(b).ok_or_else(|| Error::UnknownNode(b.to_string()))?;
            if !seen.insert((ia, ib)) {
                return Err(Error::DuplicateEdge(a.to_string(), b.to_string()));
            }
            idx_edges.push((ia, ib));
        }
        Dag::from_index_edges(names, index, idx_edges)
    }

    fn from_index_edges(
        names: Vec<String>,
        index: HashMap<String, usize>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Dag> {
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::CycleDetected(vec![names[a].clone(), names[a].clone()]));
            }
            parents[b].push(a);
            children[a].push(b);
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }
        let dag = Dag {
            names,
            index,
            edges,
            parents,
            children,
        };
        if let Some(cycle) = dag.find_cycle() {
            return Err(Error::CycleDetected(
                cycle.into_iter().map(|i| dag.names[i].clone()).collect(),
            ));
        }
        Ok(dag)
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.names.len();
        let mut state = vec![0u8; n];
        let mut stack_path = Vec::new();
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            stack_path.push(root);
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.children[v].len() {
                    let c = self.children[v][*next];
                    *next += 1;
                    match state[c] {
                        0 => {
                            state[c] = 1;
                            stack_path.push(c);
                            stack.push((c, 0));
                        }
                        1 => {
                            let start = stack_path.iter().position(|&u| u == c).unwrap();
                            let mut cycle = stack_path[start..].to_vec();
                            cycle.push(c);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack_path.pop();
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn from_json(text: &str) -> Result<Dag> {
        let j: DagJson = serde_json::from_str(text)?;
        Dag::new(&j.nodes, &j.edges)
    }

    /// Serializes to `{"nodes": [...], "edges": [[parent, child], ...]}`,
    /// preserving node and edge order.
    pub fn to_json(&self) -> String {
        let j = DagJson {
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.names[a].clone(), self.names[b].clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&j).expect("dag serializes")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Edges as (parent, child) index pairs in declaration order.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.names[a].as_str(), self.names[b].as_str()))
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.children[a].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    pub fn parent_indices(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn child_indices(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn parents(&self, v: &str) -> Result<Vec<&str>> {
        let i = self.index_of(v)?;
        Ok(self.parents[i].iter().map(|&p| self.name(p)).collect())
    }

    pub fn children(&self, v: &str) -> Result<Vec<&str>> {
        let i = self.index_of(v)?;
        Ok(self.children[i].iter().map(|&c| self.name(c)).collect())
    }

    /// Indices reachable from `v` along edge direction, excluding `v`.
    pub fn descendant_indices(&self, v: usize) -> BTreeSet<usize> {
        self.reach(v, &self.children)
    }

    pub fn ancestor_indices(&self, v: usize) -> BTreeSet<usize> {
        self.reach(v, &self.parents)
    }

    fn reach(&self, v: usize, adj: &[Vec<usize>]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = adj[v].clone();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend_from_slice(&adj[u]);
            }
        }
        out
    }

    pub fn descendants(&self, v: &str) -> Result<Vec<&str>> {
        let i = self.index_of(v)?;
        Ok(self.descendant_indices(i).into_iter().map(|d| self.name(d)).collect())
    }

    pub fn ancestors(&self, v: &str) -> Result<Vec<&str>> {
        let i = self.index_of(v)?;
        Ok(self.ancestor_indices(i).into_iter().map(|d| self.name(d)).collect())
    }

    /// A topological order, ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// Returns a copy with the edges selected by `spec` removed.
    pub fn mutilate(&self, spec: &MutilationSpec) -> Result<Dag> {
        let incoming = self.index_set(&spec.remove_incoming)?;
        let outgoing = self.index_set(&spec.remove_outgoing)?;
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(a, b)| !incoming.contains(b) && !outgoing.contains(a))
            .collect();
        Dag::from_index_edges(self.names.clone(), self.index.clone(), edges)
    }

    fn index_set<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<usize>> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect()
    }

    /// True iff every path between a node of `x` and a node of `y` is blocked
    /// by `z`.
    pub fn d_separated<S: AsRef<str>>(&self, x: &[S], y: &[S], z: &[S]) -> Result<bool> {
        let xs = self.index_set(x)?;
        let ys = self.index_set(y)?;
        let zs = self.index_set(z)?;
        for (a, b) in [(&xs, &ys), (&xs, &zs), (&ys, &zs)] {
            if let Some(&v) = a.intersection(b).next() {
                return Err(Error::OverlappingSets(self.names[v].clone()));
            }
        }
        Ok(self.d_separated_idx(&xs, &ys, &zs))
    }

    /// Index-level d-separation; the three sets must already be disjoint.
    pub fn d_separated_idx(
        &self,
        x: &BTreeSet<usize>,
        y: &BTreeSet<usize>,
        z: &BTreeSet<usize>,
    ) -> bool {
        let reachable = self.reachable_given(x, z);
        y.iter().all(|v| !reachable[*v])
    }

    /// Nodes joined to some member of `x` by a path that is active given `z`.
    ///
    /// Traverses (node, direction) states: `Up` means the node was entered
    /// from one of its children, `Down` from one of its parents. A collider
    /// passes the ball only if it is an ancestor of (or in) `z`.
    fn reachable_given(&self, x: &BTreeSet<usize>, z: &BTreeSet<usize>) -> Vec<bool> {
        #[derive(Clone, Copy)]
        enum Dir {
            Up,
            Down,
        }
        let n = self.len();
        let mut in_z = vec![false; n];
        let mut z_anc = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        for &v in z {
            in_z[v] = true;
            if !z_anc[v] {
                z_anc[v] = true;
                stack.push(v);
            }
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !z_anc[p] {
                    z_anc[p] = true;
                    stack.push(p);
                }
            }
        }

        let mut visited = vec![[false; 2]; n];
        let mut reachable = vec![false; n];
        let mut queue: VecDeque<(usize, Dir)> = x.iter().map(|&v| (v, Dir::Up)).collect();
        while let Some((v, dir)) = queue.pop_front() {
            let slot = matches!(dir, Dir::Down) as usize;
            if visited[v][slot] {
                continue;
            }
            visited[v][slot] = true;
            if !in_z[v] {
                reachable[v] = true;
            }
            match dir {
                Dir::Up if !in_z[v] => {
                    queue.extend(self.parents[v].iter().map(|&p| (p, Dir::Up)));
                    queue.extend(self.children[v].iter().map(|&c| (c, Dir::Down)));
                }
                Dir::Up => {}
                Dir::Down => {
                    if !in_z[v] {
                        queue.extend(self.children[v].iter().map(|&c| (c, Dir::Down)));
                    }
                    if z_anc[v] {
                        queue.extend(self.parents[v].iter().map(|&p| (p, Dir::Up)));
                    }
                }
            }
        }
        reachable
    }
}

impl Serialize for Dag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DagJson {
            nodes: self.names.clone(),
            edges: self
                .edges()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DagJson::deserialize(d)?;
        Dag::new(&j.nodes, &j.edges).map_err(serde::de::Error::custom)
    }
}

/// Which edges to drop when simulating an intervention.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutilationSpec {
    pub remove_incoming: Vec<String>,
    pub remove_outgoing: Vec<String>,
}

impl MutilationSpec {
    pub fn incoming<S: AsRef<str>>(nodes: &[S]) -> Self {
        MutilationSpec {
            remove_incoming: nodes.iter().map(|s| s.as_ref().to_string()).collect(),
            remove_outgoing: Vec::new(),
        }
    }

    pub fn outgoing<S: AsRef<str>>(nodes: &[S]) -> Self {
        MutilationSpec {
            remove_incoming: Vec::new(),
            remove_outgoing: nodes.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub node: String,
    pub detail: String,
}

/// Result of checking the structural requirements for treating uplift as
/// the conditional causal effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub t_is_parent_of_y: bool,
    pub y_has_no_descendants: bool,
    pub all_others_pretreatment: bool,
    /// Y is d-separated from the non-parent pretreatment variables by
    /// PA'(Y) and T once T's incoming edges are cut.
    pub rule1_holds: bool,
    /// Y is d-separated from T by PA'(Y) once T's outgoing edges are cut.
    pub rule2_holds: bool,
    /// PA(Y) without T, in declaration order.
    pub parents_excl_t: Vec<String>,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn structural_ok(&self) -> bool {
        self.t_is_parent_of_y && self.y_has_no_descendants && self.all_others_pretreatment
    }

    pub fn all_hold(&self) -> bool {
        self.structural_ok() && self.rule1_holds && self.rule2_holds
    }
}

pub fn verify_uplift_conditions(g: &Dag, t: &str, y: &str) -> Result<ConditionReport> {
    let ti = g.index_of(t)?;
    let yi = g.index_of(y)?;
    if ti == yi {
        return Err(Error::OverlappingSets(t.to_string()));
    }
    let mut violations = Vec::new();
    let violation = |condition: &str, node: usize, detail: String| Violation {
        condition: condition.to_string(),
        node: g.name(node).to_string(),
        detail,
    };

    let t_is_parent_of_y = g.parent_indices(yi).contains(&ti);
    if !t_is_parent_of_y {
        violations.push(violation(
            "t_is_parent_of_y",
            ti,
            format!("{t} is not a parent of {y}"),
        ));
    }

    let y_desc = g.descendant_indices(yi);
    for &d in &y_desc {
        violations.push(violation(
            "y_has_no_descendants",
            d,
            format!("{} is a descendant of {y}", g.name(d)),
        ));
    }
    let t_desc = g.descendant_indices(ti);
    for &d in t_desc.iter().filter(|&&d| d != yi) {
        violations.push(violation(
            "all_others_pretreatment",
            d,
            format!("{} is a descendant of {t}", g.name(d)),
        ));
    }
    let y_has_no_descendants = y_desc.is_empty();
    let all_others_pretreatment = y_has_no_descendants && t_desc.iter().all(|&d| d == yi);

    let pa_excl: BTreeSet<usize> = g
        .parent_indices(yi)
        .iter()
        .copied()
        .filter(|&p| p != ti)
        .collect();
    let ys = BTreeSet::from([yi]);

    let cut_in = g
        .mutilate(&MutilationSpec::incoming(&[t]))
        .expect("t exists");
    let others: BTreeSet<usize> = (0..g.len())
        .filter(|v| *v != ti && *v != yi && !pa_excl.contains(v))
        .collect();
    let mut cond1 = pa_excl.clone();
    cond1.insert(ti);
    let rule1_holds = others.is_empty() || cut_in.d_separated_idx(&ys, &others, &cond1);
    if !rule1_holds {
        let reach = cut_in.reachable_given(&ys, &cond1);
        for &v in others.iter().filter(|&&v| reach[v]) {
            violations.push(violation(
                "rule1_holds",
                v,
                format!("{} is d-connected to {y} given PA(Y) after cutting edges into {t}", g.name(v)),
            ));
        }
    }

    let cut_out = g
        .mutilate(&MutilationSpec::outgoing(&[t]))
        .expect("t exists");
    let rule2_holds = cut_out.d_separated_idx(&ys, &BTreeSet::from([ti]), &pa_excl);
    if !rule2_holds {
        violations.push(violation(
            "rule2_holds",
            ti,
            format!("{t} is d-connected to {y} given PA'(Y) after cutting edges out of {t}"),
        ));
    }

    Ok(ConditionReport {
        t_is_parent_of_y,
        y_has_no_descendants,
        all_others_pretreatment,
        rule1_holds,
        rule2_holds,
        parents_excl_t: pa_excl.iter().map(|&p| g.name(p).to_string()).collect(),
        violations,
    })
}

/// Example graphs used by tests, the CLI and the demo.
pub mod fixtures {
    use super::Dag;

    /// A pretreatment-setting DAG with nine context variables: P1 and P2 are
    /// isolated, P3..P9 are ancestors of T and/or Y, and PA(Y) = {T, P8, P9}.
    /// The edge set is one illustrative choice satisfying those constraints.
    pub fn pretreatment_example() -> Dag {
        let nodes = ["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "T", "Y"];
        let edges = [
            ("P3", "T"),
            ("P3", "P6"),
            ("P4", "T"),
            ("P4", "P8"),
            ("P5", "P8"),
            ("P5", "T"),
            ("P6", "P9"),
            ("P7", "P9"),
            ("P7", "T"),
            ("P8", "Y"),
            ("P9", "Y"),
            ("T", "Y"),
        ];
        Dag::new(&nodes, &edges).expect("fixture is acyclic")
    }

    /// Edges shared by both synthetic benchmark topologies. PA(Y) = {T, X8, X9};
    /// X3 confounds T and Y through X8.
    const SHARED_EDGES: [(&str, &str); 12] = [
        ("X1", "T"),
        ("X2", "T"),
        ("X3", "T"),
        ("X3", "X8"),
        ("X4", "X9"),
        ("X5", "X9"),
        ("X6", "X10"),
        ("X7", "X10"),
        ("X10", "X8"),
        ("X8", "Y"),
        ("X9", "Y"),
        ("T", "Y"),
    ];

    const X_NODES: [&str; 10] = ["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10"];

    /// Causally sufficient benchmark topology over X1..X10, T, Y.
    pub fn synthetic_sufficient() -> Dag {
        let mut nodes: Vec<&str> = X_NODES.to_vec();
        nodes.extend(["T", "Y"]);
        Dag::new(&nodes, &SHARED_EDGES).expect("fixture is acyclic")
    }

    /// Benchmark topology with latent U1..U3. U2 and U3 are hidden parents of
    /// Y, X4 is a proxy of U3, and no hidden variable is an ancestor of T.
    pub fn synthetic_hidden() -> Dag {
        let mut nodes: Vec<&str> = X_NODES.to_vec();
        nodes.extend(["U1", "U2", "U3", "T", "Y"]);
        let mut edges = SHARED_EDGES.to_vec();
        edges.extend([
            ("U1", "X5"),
            ("U1", "X6"),
            ("U2", "X9"),
            ("U2", "Y"),
            ("U3", "X4"),
            ("U3", "Y"),
        ]);
        Dag::new(&nodes, &edges).expect("fixture is acyclic")
    }
}
