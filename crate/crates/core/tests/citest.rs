mod common;

use std::collections::BTreeMap;

use common::*;
use elcs::bnet::sample;
use elcs::citest::g2_statistic;
use elcs::{CiEngine, Dataset};
use proptest::prelude::*;

/// G² and dof straight from the rows, grouping by the conditioning tuple.
fn g2_rows(data: &Dataset, x: usize, y: usize, z: &[usize]) -> (f64, usize) {
    let mut strata: BTreeMap<Vec<u32>, Vec<(u32, u32)>> = BTreeMap::new();
    for r in 0..data.n_rows() {
        let key = z.iter().map(|&v| data.column(v)[r]).collect();
        strata.entry(key).or_default().push((data.column(x)[r], data.column(y)[r]));
    }
    let (mut g, mut dof) = (0.0, 0);
    for rows in strata.values() {
        let nk = rows.len() as f64;
        let count = |f: &dyn Fn(&(u32, u32)) -> bool| rows.iter().filter(|p| f(p)).count() as f64;
        let xs: std::collections::BTreeSet<u32> = rows.iter().map(|p| p.0).collect();
        let ys: std::collections::BTreeSet<u32> = rows.iter().map(|p| p.1).collect();
        for &i in &xs {
            for &j in &ys {
                let nij = count(&|p| *p == (i, j));
                if nij > 0.0 {
                    let ni = count(&|p| p.0 == i);
                    let nj = count(&|p| p.1 == j);
                    g += 2.0 * nij * (nij * nk / (ni * nj)).ln();
                }
            }
        }
        dof += (xs.len() - 1) * (ys.len() - 1);
    }
    (g.max(0.0), dof)
}

fn dataset(cards: Vec<usize>, rows: Vec<Vec<u32>>) -> Dataset {
    let n = cards.len();
    let columns = (0..n).map(|v| rows.iter().map(|r| r[v] % cards[v] as u32).collect()).collect();
    Dataset::new((0..n).map(|i| format!("V{i}")).collect(), cards, columns).unwrap()
}

fn random_data() -> impl Strategy<Value = Dataset> {
    (proptest::collection::vec(2usize..4, 4), 1usize..120).prop_flat_map(|(cards, n)| {
        proptest::collection::vec(proptest::collection::vec(0u32..4, 4), n)
            .prop_map(move |rows| dataset(cards.clone(), rows))
    })
}

proptest! {
    #[test]
    fn g2_matches_row_scan(data in random_data(), zmask in 0usize..4) {
        let z: Vec<usize> = [2, 3].into_iter().enumerate().filter(|(i, _)| zmask >> i & 1 == 1).map(|(_, v)| v).collect();
        let (g, dof) = g2_statistic(&data.contingency(0, 1, &z).unwrap());
        let (g_ref, dof_ref) = g2_rows(&data, 0, 1, &z);
        prop_assert!((g - g_ref).abs() < 1e-9 * (1.0 + g_ref));
        prop_assert_eq!(dof, dof_ref);
    }

    #[test]
    fn verdict_is_symmetric(data in random_data()) {
        let mut e = CiEngine::g2(&data, 0.05).unwrap();
        let a = e.test(0, 1, &[2]).unwrap();
        let b = e.test(1, 0, &[2]).unwrap();
        prop_assert_eq!(a.independent, b.independent);
        prop_assert_eq!(a.dof, b.dof);
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9 * (1.0 + a.statistic));
    }

    #[test]
    fn counter_counts_answered_queries(data in random_data(), queries in proptest::collection::vec((0usize..4, 0usize..4, 0usize..4), 0..30)) {
        let mut e = CiEngine::g2(&data, 0.01).unwrap().with_max_cond(Some(1));
        let mut answered = 0;
        for (x, y, w) in queries {
            let z: Vec<usize> = if w == x || w == y { vec![] } else { vec![w] };
            if e.test(x, y, &z).is_ok() {
                answered += 1;
            }
        }
        prop_assert_eq!(e.test_count(), answered);
    }
}

#[test]
fn strong_edge_gives_tiny_p_value() {
    let net = network("asia");
    let d = net.dag();
    // some asia edges are weak; the strongest one must stand out
    let data = sample(&net, 5000, 4);
    let mut e = CiEngine::g2(&data, 0.01).unwrap();
    let best = d
        .edges()
        .map(|(x, y)| e.test(x, y, &[]).unwrap().p_value)
        .fold(1.0, f64::min);
    assert!(best < 1e-6);
    assert_eq!(e.test_count() as usize, d.edge_count());
}

#[test]
fn copied_column_is_dependent() {
    let x: Vec<u32> = (0..5000).map(|i| (i * 7 % 3) as u32).collect();
    let data = Dataset::new(vec!["X".into(), "Y".into()], vec![3, 3], vec![x.clone(), x]).unwrap();
    let r = CiEngine::g2(&data, 0.01).unwrap().test(0, 1, &[]).unwrap();
    assert!(r.p_value < 1e-6 && !r.independent && r.reliable);
}

#[test]
fn oracle_agrees_with_brute_dsep() {
    for dag in random_suite().iter().take(40) {
        let mut e = CiEngine::oracle(dag);
        for x in 0..dag.n() {
            for y in 0..dag.n() {
                if x != y {
                    let z: Vec<usize> = (0..dag.n()).filter(|&v| v != x && v != y && v % 2 == 0).collect();
                    assert_eq!(e.independent(x, y, &z).unwrap(), dsep_brute(dag, x, y, &z));
                }
            }
        }
    }
}
