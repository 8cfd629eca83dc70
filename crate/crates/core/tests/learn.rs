mod common;

use std::collections::BTreeSet;

use common::*;
use elcs::bnet::{sample, true_mb};
use elcs::graph::{meek_closure, Mark};
use elcs::mb::{emb, iamb, MbOptions};
use elcs::{elcs, recog_pc, CiEngine, ElcsOptions, LocalGraph, Termination};

fn no_n() -> MbOptions {
    MbOptions {
        emb2: false,
        no_n: true,
    }
}

#[test]
fn chain_pc_and_blanket() {
    let g = dag("A B C D", "A->B B->C C->D");
    let mut e = CiEngine::oracle(&g);
    let (pc, sep) = recog_pc(&mut e, 1).unwrap();
    assert_eq!(pc, set(&g, "A C"));
    assert_eq!(sep.get(3), &[2]);
    let r = emb(&mut e, 1, MbOptions::default()).unwrap();
    assert_eq!(r.mb, set(&g, "A C"));
    assert!(r.p.is_empty() && r.c.is_empty());
    assert_eq!(r.un, set(&g, "A C"));
}

#[test]
fn chain_elcs_exhausts_queue() {
    let g = dag("A B C D", "A->B B->C C->D");
    let mut e = CiEngine::oracle(&g);
    let o = elcs(&mut e, 1, ElcsOptions::default()).unwrap();
    // a chain has no v-structure, so nothing can ever be oriented
    assert_eq!(o.un, set(&g, "A C"));
    assert_eq!(o.stats.termination, Termination::AllVisited);
    assert_eq!(o.stats.mbs_learned, 4);
}

#[test]
fn trace_fixture_with_oracle() {
    let net = network("trace");
    let d = net.dag();
    let t = d.index_of("T").unwrap();
    let mut e = CiEngine::oracle(d);
    let r = emb(&mut e, t, MbOptions::default()).unwrap();
    assert_eq!(r.pc, set(d, "A B E J K L"));
    assert_eq!(r.spouses(), set(d, "C D"));
    assert_eq!(r.p, set(d, "E J"));
    assert_eq!(r.c, set(d, "A B K L"));

    let mut g = LocalGraph::new(d.n());
    g.visit(t);
    g.apply_orientations(t, &r);
    let edges = g.edges();
    assert_eq!(edges.len(), 6);
    assert!(edges.iter().all(|(_, _, m)| matches!(m, Mark::Directed { .. })));
    assert!(g.conflicts().is_empty());
}

#[test]
fn n_structure_switch_keeps_blanket() {
    for dag in random_suite().iter().take(80) {
        for t in 0..dag.n() {
            let with = emb(&mut CiEngine::oracle(dag), t, MbOptions::default()).unwrap();
            let without = emb(&mut CiEngine::oracle(dag), t, no_n()).unwrap();
            assert_eq!(with.mb, without.mb);
            assert_eq!(with.pc, without.pc);
        }
    }
}

#[test]
fn emb2_finds_the_same_blanket() {
    let opts = MbOptions {
        emb2: true,
        no_n: false,
    };
    for dag in random_suite().iter().take(80) {
        for t in 0..dag.n() {
            let r = emb(&mut CiEngine::oracle(dag), t, opts).unwrap();
            assert_eq!(r.mb, true_mb(dag, t).mb);
        }
    }
}

#[test]
fn bundled_blankets_with_oracle() {
    for name in ["child", "asia"] {
        let net = network(name);
        let d = net.dag();
        for t in 0..d.n() {
            let r = emb(&mut CiEngine::oracle(d), t, MbOptions::default()).unwrap();
            let truth = true_mb(d, t);
            assert_eq!(r.pc, truth.pc, "pc of {}", d.names()[t]);
            assert_eq!(r.mb, truth.mb, "mb of {}", d.names()[t]);
            assert!(r.p.is_subset(&truth.parents));
            assert!(r.c.is_subset(&truth.children));
        }
    }
}

#[test]
fn iamb_on_trace() {
    let net = network("trace");
    let d = net.dag();
    let t = d.index_of("T").unwrap();
    let mut e = CiEngine::oracle(d);
    assert_eq!(iamb(&mut e, t).unwrap(), true_mb(d, t).mb);
    let data = sample(&net, 5000, 1);
    let mut e = CiEngine::g2(&data, 0.01).unwrap();
    let found = iamb(&mut e, t).unwrap();
    let truth = true_mb(d, t).mb;
    assert!(found.intersection(&truth).count() >= truth.len() - 2, "{found:?}");
}

#[test]
fn trace_data_mostly_recovers_parents() {
    let net = network("trace");
    let d = net.dag();
    let t = d.index_of("T").unwrap();
    let parents = set(d, "E J");
    let hits = (1..=10)
        .filter(|&seed| {
            let data = sample(&net, 5000, seed);
            let mut e = CiEngine::g2(&data, 0.01).unwrap();
            let o = elcs(&mut e, t, ElcsOptions::default()).unwrap();
            parents.is_subset(&o.p)
        })
        .count();
    assert!(hits >= 6, "{hits}/10");
}

#[test]
fn elcs_stops_once_target_resolved() {
    let net = network("trace");
    let d = net.dag();
    let t = d.index_of("T").unwrap();
    let o = elcs(&mut CiEngine::oracle(d), t, ElcsOptions::default()).unwrap();
    assert_eq!(o.stats.termination, Termination::Resolved);
    assert_eq!(o.stats.mbs_learned, 1);
    assert_eq!(o.p, set(d, "E J"));
}

#[test]
fn elcs_orientations_are_true_directions() {
    for dag in random_suite() {
        for t in 0..dag.n() {
            let o = elcs(&mut CiEngine::oracle(&dag), t, ElcsOptions::default()).unwrap();
            let pc: BTreeSet<usize> = o.p.iter().chain(&o.c).chain(&o.un).copied().collect();
            assert_eq!(pc, true_mb(&dag, t).pc);
            assert!(o.p.iter().all(|&p| dag.has_edge(p, t)));
            assert!(o.c.iter().all(|&c| dag.has_edge(t, c)));
        }
    }
}

#[test]
fn meek_on_random_pdags_is_sound() {
    let mut r = rng(17);
    for _ in 0..200 {
        let (dag, mut g) = random_pdag(&mut r, 7, 0.4, 0.2);
        meek_closure(&mut g);
        for (a, b, m) in g.edges() {
            if let Mark::Directed { from, to } = m {
                assert!(dag.has_edge(from, to), "{a}-{b}");
            }
        }
    }
}
