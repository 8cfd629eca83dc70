//! Ancestral sampling and network tiling.
//!
//! The generator is xoshiro256** seeded through SplitMix64
//! (`Xoshiro256StarStar::seed_from_u64`). Draws are consumed variable by
//! variable in [`Dag::topo_order`], and row by row within a variable, each
//! draw being one `f64` in `[0, 1)` compared against the cumulative CPT row.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use super::{CptNetwork, Dag};
use crate::data::Dataset;
use crate::Var;

/// Draws `n` rows from `net`. Cardinalities are copied from the network, so
/// categories that never occur still count towards degrees of freedom.
pub fn sample(net: &CptNetwork, n: usize, seed: u64) -> Dataset {
    let dag = net.dag();
    let cards = net.cards();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); dag.n()];
    for v in dag.topo_order() {
        let parents = dag.parents(v);
        let mut col = Vec::with_capacity(n);
        #[allow(clippy::needless_range_loop)]
        for row in 0..n {
            let mut config = 0;
            for &p in parents {
                config = config * cards[p] + columns[p][row] as usize;
            }
            col.push(draw(net.row(v, config), rng.random::<f64>()));
        }
        columns[v] = col;
    }
    Dataset::new(dag.names().to_vec(), cards.to_vec(), columns)
        .expect("sampled codes are within cardinality")
}

fn draw(row: &[f64], u: f64) -> u32 {
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u32;
        }
    }
    // rounding left u above the final cumulative sum
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

/// Joins `copies` copies of `net` into one network.
///
/// Copy `i` has its variables renamed `{name}_{i}`. For every copy after
/// the first, one root of that copy (chosen at random) gains one parent
/// chosen at random among the variables of the earlier copies. The root's
/// new CPT row for parent value `v` is `0.5 * prior + 0.5 * e(v mod k)`,
/// where `prior` is its original marginal and `k` its cardinality.
pub fn tile(net: &CptNetwork, copies: usize, seed: u64) -> CptNetwork {
    assert!(copies >= 1, "tile needs at least one copy");
    let base = net.dag();
    let m = base.n();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let roots: Vec<Var> = (0..m).filter(|&v| base.parents(v).is_empty()).collect();

    let mut names = Vec::with_capacity(m * copies);
    let mut parents: Vec<Vec<Var>> = Vec::with_capacity(m * copies);
    let mut cards = Vec::with_capacity(m * copies);
    let mut states = Vec::with_capacity(m * copies);
    let mut cpts: Vec<Vec<f64>> = Vec::with_capacity(m * copies);
    for i in 0..copies {
        let offset = i * m;
        for v in 0..m {
            names.push(format!("{}_{}", base.names()[v], i));
            parents.push(base.parents(v).iter().map(|&p| p + offset).collect());
            cards.push(net.cards()[v]);
            states.push(net.states(v).to_vec());
            cpts.push(net.cpt(v).to_vec());
        }
        if i == 0 || roots.is_empty() {
            continue;
        }
        let from = rng.random_range(0..offset);
        let root = offset + roots[rng.random_range(0..roots.len())];
        let k = cards[root];
        let kp = cards[from];
        let prior = cpts[root].clone();
        let mut table = Vec::with_capacity(kp * k);
        for v in 0..kp {
            for (j, &p) in prior.iter().enumerate() {
                let hit = if j == v % k { 1.0 } else { 0.0 };
                table.push(0.5 * p + 0.5 * hit);
            }
        }
        parents[root] = vec![from];
        cpts[root] = table;
    }
    let dag = Dag::new(names, parents).expect("edges only point into later copies");
    CptNetwork::new(dag, cards, states, cpts).expect("tiled tables stay normalized")
}
