//! Parent/child discovery (interleaved HITON-PC).

use std::collections::{BTreeMap, BTreeSet};

use crate::citest::{CiEngine, CiError};
use crate::subsets::find_subset;
use crate::Var;

/// Separating sets recorded against one target. Missing keys read as ∅.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sepsets {
    map: BTreeMap<Var, Vec<Var>>,
}

impl Sepsets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: Var, z: Vec<Var>) {
        self.map.insert(x, z);
    }

    pub fn get(&self, x: Var) -> &[Var] {
        self.map.get(&x).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, x: Var) -> bool {
        self.map.contains_key(&x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &[Var])> {
        self.map.iter().map(|(&x, z)| (x, z.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Learns the parents-and-children candidate set of `t`.
///
/// Variables dependent on `t` are admitted one at a time in descending
/// order of unconditional association (ties by index). After each
/// admission every member is dropped if some subset of the other members
/// separates it from `t`; the subset is recorded as its sepset. Only
/// subsets containing the newcomer are tried for old members, since every
/// other subset was already tried when it was last checked.
pub fn recog_pc(engine: &mut CiEngine<'_>, t: Var) -> Result<(BTreeSet<Var>, Sepsets), CiError> {
    let n = engine.n_vars();
    if t >= n {
        return Err(CiError::IndexOutOfRange { index: t, n_vars: n });
    }
    let max = engine.max_cond();
    let mut sep = Sepsets::new();
    let mut ranked: Vec<(Var, f64)> = Vec::new();
    for x in (0..n).filter(|&x| x != t) {
        let (r, s) = engine.test_strength(t, x, &[])?;
        if r.independent {
            sep.insert(x, Vec::new());
        } else {
            ranked.push((x, s));
        }
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut cpc: BTreeSet<Var> = BTreeSet::new();
    for (x, _) in ranked {
        let others: Vec<Var> = cpc.iter().copied().collect();
        let hit = find_subset(&others, 1, max, |_| true, |z| engine.independent(t, x, z))?;
        if let Some(z) = hit {
            sep.insert(x, z);
            continue;
        }
        cpc.insert(x);
        for y in others {
            let pool: Vec<Var> = cpc.iter().copied().filter(|&v| v != y).collect();
            let hit = find_subset(
                &pool,
                1,
                max,
                |z| z.contains(&x),
                |z| engine.independent(t, y, z),
            )?;
            if let Some(z) = hit {
                cpc.remove(&y);
                sep.insert(y, z);
            }
        }
    }
    Ok((cpc, sep))
}
