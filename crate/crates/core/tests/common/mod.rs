#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use elcs::bnet::{parse_bif, CptNetwork, Dag};
use elcs::graph::LocalGraph;
use elcs::Var;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

pub fn network_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("networks")
        .join(format!("{name}.bif"))
}

pub fn network(name: &str) -> CptNetwork {
    let text = std::fs::read_to_string(network_path(name)).unwrap();
    parse_bif(&text).unwrap()
}

pub fn names(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

/// Builds a DAG from `"A->B C->B"`-style edge text over `names`.
pub fn dag(nodes: &str, edges: &str) -> Dag {
    let names = names(nodes);
    let idx = |s: &str| names.iter().position(|n| n == s).unwrap();
    let edges: Vec<(Var, Var)> = edges
        .split_whitespace()
        .map(|e| {
            let (a, b) = e.split_once("->").unwrap();
            (idx(a), idx(b))
        })
        .collect();
    Dag::from_edges(names.clone(), &edges).unwrap()
}

pub fn set(dag: &Dag, vars: &str) -> BTreeSet<Var> {
    vars.split_whitespace()
        .map(|s| dag.index_of(s).unwrap())
        .collect()
}

/// Edges `i -> j` for `i` before `j` in a random order, each kept with
/// probability `p`.
pub fn random_dag(rng: &mut impl Rng, n: usize, p: f64) -> Dag {
    let mut order: Vec<Var> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::from_edges((0..n).map(|i| format!("V{i}")).collect(), &edges).unwrap()
}

/// The fixed suite of 200 random DAGs with 2 to 10 nodes and edge
/// probability 0.3.
pub fn random_suite() -> Vec<Dag> {
    let mut r = rng(20240601);
    (0..200)
        .map(|_| {
            let n = r.random_range(2..=10);
            random_dag(&mut r, n, 0.3)
        })
        .collect()
}

/// d-separation by enumerating every simple path in the skeleton.
pub fn dsep_brute(dag: &Dag, x: Var, y: Var, z: &[Var]) -> bool {
    let n = dag.n();
    let in_z = |v: Var| z.contains(&v);
    let opens = |v: Var| in_z(v) || dag.descendants(v).iter().any(|&d| in_z(d));
    let mut path = vec![x];
    let mut on_path = vec![false; n];
    on_path[x] = true;
    fn walk(
        dag: &Dag,
        y: Var,
        path: &mut Vec<Var>,
        on_path: &mut [bool],
        active: &dyn Fn(&[Var]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if last == y {
            return active(path);
        }
        for u in 0..dag.n() {
            if !on_path[u] && dag.adjacent(last, u) {
                path.push(u);
                on_path[u] = true;
                let found = walk(dag, y, path, on_path, active);
                on_path[u] = false;
                path.pop();
                if found {
                    return true;
                }
            }
        }
        false
    }
    let active = |p: &[Var]| {
        p.windows(3).all(|w| {
            let collider = dag.has_edge(w[0], w[1]) && dag.has_edge(w[2], w[1]);
            if collider {
                opens(w[1])
            } else {
                !in_z(w[1])
            }
        })
    };
    !walk(dag, y, &mut path, &mut on_path, &active)
}

/// A partially directed graph read off a random DAG: the full skeleton,
/// every unshielded collider directed, and each remaining edge directed
/// with probability `p_dir` (always in the true direction). All nodes are
/// visited.
pub fn random_pdag(rng: &mut impl Rng, n: usize, p_edge: f64, p_dir: f64) -> (Dag, LocalGraph) {
    let dag = random_dag(rng, n, p_edge);
    let mut g = LocalGraph::new(n);
    (0..n).for_each(|v| g.visit(v));
    for (a, b) in dag.edges() {
        g.add_undirected(a, b);
    }
    for v in 0..n {
        let ps = dag.parents(v);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !dag.adjacent(a, b) {
                    g.orient(a, v);
                    g.orient(b, v);
                }
            }
        }
    }
    for (a, b) in dag.edges() {
        if rng.random_bool(p_dir) {
            g.orient(a, b);
        }
    }
    (dag, g)
}

/// Every subset of `pool` with at most `max` elements.
pub fn subsets(pool: &[Var], max: usize) -> Vec<Vec<Var>> {
    let mut out = vec![Vec::new()];
    for &v in pool {
        let grown: Vec<Vec<Var>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut s = s.clone();
                s.push(v);
                s
            })
            .collect();
        out.extend(grown);
    }
    out
}
