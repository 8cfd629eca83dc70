//! Scoring a learned neighbourhood against a known DAG.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::bnet::Dag;
use crate::Var;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("variable {0} appears in more than one of parents/children/undirected")]
    Overlap(Var),
    #[error("cannot aggregate an empty list of scores")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalScore {
    pub arr_p: f64,
    pub arr_r: f64,
    pub fdr: f64,
    pub shd: u64,
    pub ci_tests: u64,
    pub time_ms: f64,
}

/// Scores `p`/`c`/`un` for target `t` against `truth`.
///
/// A directed answer is correct when it matches the true direction. An
/// undirected answer for a true neighbour costs one SHD unit and no credit.
/// FDR counts only non-neighbours in the output.
pub fn score_local(
    p: &BTreeSet<Var>,
    c: &BTreeSet<Var>,
    un: &BTreeSet<Var>,
    truth: &Dag,
    t: Var,
) -> Result<LocalScore, MetricsError> {
    if let Some(&x) = p.intersection(c).chain(p.intersection(un)).chain(c.intersection(un)).next() {
        return Err(MetricsError::Overlap(x));
    }
    let tp: BTreeSet<Var> = truth.parents(t).iter().copied().collect();
    let tc: BTreeSet<Var> = truth.children(t).iter().copied().collect();
    let tpc: BTreeSet<Var> = tp.union(&tc).copied().collect();
    let out: BTreeSet<Var> = p.iter().chain(c).chain(un).copied().collect();

    let correct = p.intersection(&tp).count() + c.intersection(&tc).count();
    let o = out.len();
    let false_adj = out.difference(&tpc).count();
    let arr_p = if o == 0 {
        if tpc.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        correct as f64 / o as f64
    };
    let arr_r = if tpc.is_empty() {
        1.0
    } else {
        correct as f64 / tpc.len() as f64
    };
    let fdr = if o == 0 { 0.0 } else { false_adj as f64 / o as f64 };
    let undirected = un.intersection(&tpc).count();
    let reversed = p.intersection(&tc).count() + c.intersection(&tp).count();
    let missing = tpc.difference(&out).count();
    let shd = (undirected + reversed + missing + false_adj) as u64;
    Ok(LocalScore {
        arr_p,
        arr_r,
        fdr,
        shd,
        ci_tests: 0,
        time_ms: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Summary> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Summary {
            mean,
            std: var.sqrt(),
        })
    }
}

/// Mean and population standard deviation of every score field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub arr_p: Summary,
    pub arr_r: Summary,
    pub fdr: Summary,
    pub shd: Summary,
    pub ci_tests: Summary,
    pub time_ms: Summary,
}

pub fn aggregate(scores: &[LocalScore]) -> Result<Aggregate, MetricsError> {
    let field = |f: fn(&LocalScore) -> f64| {
        Summary::of(scores.iter().map(f)).ok_or(MetricsError::Empty)
    };
    Ok(Aggregate {
        arr_p: field(|s| s.arr_p)?,
        arr_r: field(|s| s.arr_r)?,
        fdr: field(|s| s.fdr)?,
        shd: field(|s| s.shd as f64)?,
        ci_tests: field(|s| s.ci_tests as f64)?,
        time_ms: field(|s| s.time_ms)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(arr_p: f64) -> LocalScore {
        LocalScore {
            arr_p,
            arr_r: 1.0,
            fdr: 0.0,
            shd: 2,
            ci_tests: 10,
            time_ms: 1.0,
        }
    }

    #[test]
    fn aggregate_closed_forms() {
        let a = aggregate(&[score(0.8), score(0.6)]).unwrap();
        assert!((a.arr_p.mean - 0.7).abs() < 1e-12);
        assert!((a.arr_p.std - 0.1).abs() < 1e-12);
        let one = aggregate(&[score(0.3)]).unwrap();
        assert_eq!(one.arr_p, Summary { mean: 0.3, std: 0.0 });
        let ten = aggregate(&[score(0.5); 10]).unwrap();
        assert_eq!(ten.shd.std, 0.0);
        assert_eq!(aggregate(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn empty_conventions() {
        let g = Dag::empty(2);
        let e = BTreeSet::new();
        let s = score_local(&e, &e, &e, &g, 0).unwrap();
        assert_eq!((s.arr_p, s.arr_r, s.fdr, s.shd), (1.0, 1.0, 0.0, 0));
        let x = BTreeSet::from([1]);
        assert_eq!(score_local(&x, &x, &e, &g, 0), Err(MetricsError::Overlap(1)));
    }
}
