//! Ground-truth Bayesian networks.
//!
//! [`Dag`] is the structure, [`CptNetwork`] adds discrete conditional
//! probability tables. Networks come from BIF files ([`parse_bif`]) and feed
//! the sampler ([`sample`]), the d-separation oracle ([`d_separated`]) and
//! the scoring code ([`true_mb`]).

mod bif;
mod sample;

use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;

use thiserror::Error;

use crate::Var;

pub use bif::{parse_bif, BifError};
pub use sample::{sample, tile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("{names} names given for {nodes} nodes")]
    NameCount { names: usize, nodes: usize },
    #[error("node {node} has out-of-range parent {parent}")]
    BadParent { node: Var, parent: Var },
    #[error("node {0} is its own parent")]
    SelfLoop(Var),
    #[error("graph has a cycle through nodes {witness:?}")]
    Cycle { witness: Vec<Var> },
}

/// A directed acyclic graph with named nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<Var>>,
    children: Vec<Vec<Var>>,
}

impl Dag {
    /// Builds a DAG from per-node parent lists. Parent lists are sorted and
    /// deduplicated.
    pub fn new(names: Vec<String>, mut parents: Vec<Vec<Var>>) -> Result<Self, DagError> {
        let n = parents.len();
        if names.len() != n {
            return Err(DagError::NameCount {
                names: names.len(),
                nodes: n,
            });
        }
        let mut children = vec![Vec::new(); n];
        for (v, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            ps.dedup();
            for &p in ps.iter() {
                if p >= n {
                    return Err(DagError::BadParent { node: v, parent: p });
                }
                if p == v {
                    return Err(DagError::SelfLoop(v));
                }
                children[p].push(v);
            }
        }
        topo_order(&parents)?;
        Ok(Dag {
            names,
            parents,
            children,
        })
    }

    pub fn from_edges(names: Vec<String>, edges: &[(Var, Var)]) -> Result<Self, DagError> {
        let mut parents = vec![Vec::new(); names.len()];
        for &(from, to) in edges {
            if to >= names.len() {
                return Err(DagError::BadParent {
                    node: to,
                    parent: from,
                });
            }
            parents[to].push(from);
        }
        Dag::new(names, parents)
    }

    /// Nodes named `0..n` with no edges.
    pub fn empty(n: usize) -> Self {
        Dag::new((0..n).map(|i| format!("V{i}")).collect(), vec![Vec::new(); n])
            .expect("edgeless graph is acyclic")
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, v: Var) -> &[Var] {
        &self.parents[v]
    }

    pub fn children(&self, v: Var) -> &[Var] {
        &self.children[v]
    }

    pub fn has_edge(&self, from: Var, to: Var) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn adjacent(&self, a: Var, b: Var) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// All edges `(parent, child)`, ordered by child then parent.
    pub fn edges(&self) -> impl Iterator<Item = (Var, Var)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&p| (p, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn topo_order(&self) -> Vec<Var> {
        topo_order(&self.parents).expect("validated at construction")
    }

    /// Descendants of `v`, excluding `v`.
    pub fn descendants(&self, v: Var) -> BTreeSet<Var> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &c in &self.children[u] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }
}

/// Kahn's algorithm, always releasing the lowest-index ready node first.
pub fn topo_order(parents: &[Vec<Var>]) -> Result<Vec<Var>, DagError> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(v);
        }
    }
    let mut ready: BinaryHeap<Reverse<Var>> =
        (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every leftover node has a leftover parent; walk parents until a node
    // repeats.
    let start = (0..n).find(|&v| indegree[v] > 0).expect("leftover node");
    let mut pos = vec![usize::MAX; n];
    let mut walk = Vec::new();
    let mut v = start;
    while pos[v] == usize::MAX {
        pos[v] = walk.len();
        walk.push(v);
        v = *parents[v]
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("leftover node has a leftover parent");
    }
    let mut witness: Vec<Var> = walk[pos[v]..].to_vec();
    witness.reverse();
    Err(DagError::Cycle { witness })
}

/// True iff every path between `x` and `y` is blocked by `z`.
///
/// Reachability ("Bayes ball"): a trail may pass a non-collider outside `z`
/// and a collider that is in `z` or has a descendant in `z`.
pub fn d_separated(dag: &Dag, x: Var, y: Var, z: &[Var]) -> bool {
    let n = dag.n();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // Ancestors of z, z included.
    let mut anc = in_z.clone();
    let mut stack: Vec<Var> = z.to_vec();
    while let Some(v) = stack.pop() {
        for &p in dag.parents(v) {
            if !anc[p] {
                anc[p] = true;
                stack.push(p);
            }
        }
    }

    // (node, arrived from a child) / (node, arrived from a parent)
    let mut seen_up = vec![false; n];
    let mut seen_down = vec![false; n];
    let mut queue: VecDeque<(Var, bool)> = VecDeque::new();
    queue.push_back((x, true));
    while let Some((v, up)) = queue.pop_front() {
        let seen = if up { &mut seen_up } else { &mut seen_down };
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if v == y {
            return false;
        }
        if up {
            if !in_z[v] {
                queue.extend(dag.parents(v).iter().map(|&p| (p, true)));
                queue.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !in_z[v] {
                queue.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
            if anc[v] {
                queue.extend(dag.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    true
}

/// Parents/children, spouses and Markov blanket of `t` read off the DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrueMb {
    pub parents: BTreeSet<Var>,
    pub children: BTreeSet<Var>,
    pub pc: BTreeSet<Var>,
    pub spouses: BTreeSet<Var>,
    pub mb: BTreeSet<Var>,
}

pub fn true_mb(dag: &Dag, t: Var) -> TrueMb {
    let parents: BTreeSet<Var> = dag.parents(t).iter().copied().collect();
    let children: BTreeSet<Var> = dag.children(t).iter().copied().collect();
    let pc: BTreeSet<Var> = parents.union(&children).copied().collect();
    let spouses: BTreeSet<Var> = children
        .iter()
        .flat_map(|&c| dag.parents(c).iter().copied())
        .filter(|&s| s != t && !pc.contains(&s))
        .collect();
    let mb = pc.union(&spouses).copied().collect();
    TrueMb {
        parents,
        children,
        pc,
        spouses,
        mb,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("variable {var}: {message}")]
    Cpt { var: String, message: String },
}

/// A discrete Bayesian network.
///
/// `cpts[v]` holds one probability row per parent configuration, rows in
/// mixed-radix order with the first parent most significant, each row of
/// length `cards[v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CptNetwork {
    dag: Dag,
    cards: Vec<usize>,
    states: Vec<Vec<String>>,
    cpts: Vec<Vec<f64>>,
}

impl CptNetwork {
    /// Validates shapes and normalizes each row (rows must already sum to
    /// one within 1e-6).
    pub fn new(
        dag: Dag,
        cards: Vec<usize>,
        states: Vec<Vec<String>>,
        mut cpts: Vec<Vec<f64>>,
    ) -> Result<Self, NetworkError> {
        let n = dag.n();
        let err = |v: Var, message: String| NetworkError::Cpt {
            var: dag.names()[v].clone(),
            message,
        };
        if cards.len() != n || states.len() != n || cpts.len() != n {
            return Err(err(0, "per-variable vectors have the wrong length".into()));
        }
        for v in 0..n {
            if cards[v] < 2 {
                return Err(err(v, format!("cardinality {} < 2", cards[v])));
            }
            if states[v].len() != cards[v] {
                return Err(err(v, format!("{} state names", states[v].len())));
            }
            let configs: usize = dag.parents(v).iter().map(|&p| cards[p]).product();
            if cpts[v].len() != configs * cards[v] {
                return Err(err(
                    v,
                    format!(
                        "table has {} entries, expected {}",
                        cpts[v].len(),
                        configs * cards[v]
                    ),
                ));
            }
            for (r, row) in cpts[v].chunks_mut(cards[v]).enumerate() {
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(err(v, format!("row {r} has an entry outside [0, 1]")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(err(v, format!("row {r} sums to {sum}")));
                }
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok(CptNetwork {
            dag,
            cards,
            states,
            cpts,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn states(&self, v: Var) -> &[String] {
        &self.states[v]
    }

    pub fn cpt(&self, v: Var) -> &[f64] {
        &self.cpts[v]
    }

    /// Probability row of `v` for parent configuration index `config`.
    pub fn row(&self, v: Var, config: usize) -> &[f64] {
        let r = self.cards[v];
        &self.cpts[v][config * r..(config + 1) * r]
    }
}
