//! Markov-blanket discovery with parent/child separation (EMB), and the
//! IAMB baseline.
//!
//! [`emb`] runs four steps:
//!
//! 1. [`recog_pc`] for the parents-and-children candidates and sepsets;
//! 2. [`recog_spouses`] for candidate spouses (`csp`) and spouses (`sp`),
//!    both keyed by the shared child candidate;
//! 3. [`remove_false_pc`] drops candidates separated from the target once
//!    spouses may be conditioned on, and checks each dropped one as a
//!    possible spouse;
//! 4. [`distinguish_pc`] splits the result into parents, children and
//!    undistinguished members.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::citest::{CiEngine, CiError};
use crate::pc::{recog_pc, Sepsets};
use crate::subsets::find_subset;
use crate::Var;

pub type SetMap = BTreeMap<Var, BTreeSet<Var>>;

/// Parents, children and undistinguished neighbours.
pub type Partition = (BTreeSet<Var>, BTreeSet<Var>, BTreeSet<Var>);

#[derive(Debug, Error)]
pub enum MbError {
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MbOptions {
    /// Rank each spouse list by unconditional association with its child
    /// before pruning.
    pub emb2: bool,
    /// Skip the N-structure rule.
    pub no_n: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MbResult {
    pub target: Var,
    pub pc: BTreeSet<Var>,
    pub sp: SetMap,
    pub csp: SetMap,
    pub sep: Sepsets,
    pub p: BTreeSet<Var>,
    pub c: BTreeSet<Var>,
    pub un: BTreeSet<Var>,
    pub mb: BTreeSet<Var>,
}

impl MbResult {
    /// Union of all spouse sets.
    pub fn spouses(&self) -> BTreeSet<Var> {
        self.sp.values().flatten().copied().collect()
    }

    /// Checks the partition and key invariants.
    pub fn check(&self) -> Result<(), MbError> {
        let bad = |m: String| Err(MbError::Invariant(m));
        if !self.p.is_disjoint(&self.c) || !self.p.is_disjoint(&self.un) || !self.c.is_disjoint(&self.un)
        {
            return bad(format!("p/c/un overlap for target {}", self.target));
        }
        let all: BTreeSet<Var> = self.p.iter().chain(&self.c).chain(&self.un).copied().collect();
        if all != self.pc {
            return bad(format!("p/c/un do not cover pc for target {}", self.target));
        }
        for (y, s) in &self.sp {
            if !self.pc.contains(y) {
                return bad(format!("spouse key {y} outside pc"));
            }
            if s.contains(&self.target) || !s.is_disjoint(&self.pc) {
                return bad(format!("spouses of {y} overlap pc or target"));
            }
        }
        let mb: BTreeSet<Var> = self.pc.union(&self.spouses()).copied().collect();
        if mb != self.mb {
            return bad(format!("mb mismatch for target {}", self.target));
        }
        Ok(())
    }
}

fn get(map: &SetMap, k: Var) -> impl Iterator<Item = Var> + '_ {
    map.get(&k).into_iter().flatten().copied()
}

/// Finds candidate spouses and spouses of `t`.
///
/// A non-member `x` becomes a candidate spouse through `y ∈ pc` when `x`
/// and `y` are marginally dependent, `x` is dependent on `t` given all such
/// `y`, and `x` stays dependent on `t` given `{y} ∪ sep(x)`. A candidate is
/// kept as a spouse unless some subset of `sp{y} ∪ {t} ∪ pc ∖ {x, y}`
/// separates it from `y`.
pub fn recog_spouses(
    engine: &mut CiEngine<'_>,
    t: Var,
    pc: &BTreeSet<Var>,
    sep: &Sepsets,
    emb2: bool,
) -> Result<(SetMap, SetMap), CiError> {
    let n = engine.n_vars();
    let mut csp: SetMap = BTreeMap::new();
    for x in (0..n).filter(|x| *x != t && !pc.contains(x)) {
        let mut temp = Vec::new();
        for &y in pc {
            if engine.dependent(x, y, &[])? {
                temp.push(y);
            }
        }
        if temp.is_empty() || !engine.dependent(x, t, &temp)? {
            continue;
        }
        for &y in &temp {
            let mut z: Vec<Var> = sep.get(x).to_vec();
            if !z.contains(&y) {
                z.push(y);
                z.sort_unstable();
            }
            if engine.dependent(x, t, &z)? {
                csp.entry(y).or_default().insert(x);
            }
        }
    }

    let mut sp = csp.clone();
    for &y in pc {
        let Some(cands) = sp.get(&y) else { continue };
        let mut order: Vec<Var> = cands.iter().copied().collect();
        if emb2 {
            let mut ranked = Vec::with_capacity(order.len());
            for &x in &order {
                ranked.push((x, engine.assoc(x, y, &[])?));
            }
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            order = ranked.into_iter().map(|(x, _)| x).collect();
        }
        for x in order {
            if separated_from_child(engine, t, pc, &sp, x, y)? {
                sp.get_mut(&y).expect("entry exists").remove(&x);
            }
        }
    }
    sp.retain(|_, s| !s.is_empty());
    Ok((sp, csp))
}

/// Whether some subset of `sp{y} ∪ {t} ∪ pc ∖ {x, y}` separates `x` from `y`.
fn separated_from_child(
    engine: &mut CiEngine<'_>,
    t: Var,
    pc: &BTreeSet<Var>,
    sp: &SetMap,
    x: Var,
    y: Var,
) -> Result<bool, CiError> {
    let max = engine.max_cond();
    let pool: Vec<Var> = get(sp, y)
        .chain([t])
        .chain(pc.iter().copied())
        .filter(|&v| v != x && v != y)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(find_subset(&pool, 0, max, |_| true, |z| engine.independent(x, y, z))?.is_some())
}

/// Drops `y` from `pc` when some subset of `pc ∖ {y}` together with the
/// spouses found so far (through any child) separates it from `t`.
/// Members are visited in ascending order and removals take effect at
/// once.
///
/// Spouses are pooled across children: a non-member descendant of `t` may
/// need a spouse recorded under a different child to be separated.
///
/// A removed member can itself be a spouse (a co-parent of a child of `t`
/// is dependent on `t` given any subset of `pc`). It gets its separating
/// set in `sep` and goes through the same collider check and pruning as
/// the other candidates.
pub fn remove_false_pc(
    engine: &mut CiEngine<'_>,
    t: Var,
    pc: &mut BTreeSet<Var>,
    sp: &mut SetMap,
    csp: &mut SetMap,
    sep: &mut Sepsets,
) -> Result<(), CiError> {
    remove_false_pc_inner(engine, t, pc, sp, csp, sep, false)
}

/// With `pc_subsets_tested`, subsets drawn only from `pc` are skipped:
/// interleaved HITON-PC has already tried every one of them.
fn remove_false_pc_inner(
    engine: &mut CiEngine<'_>,
    t: Var,
    pc: &mut BTreeSet<Var>,
    sp: &mut SetMap,
    csp: &mut SetMap,
    sep: &mut Sepsets,
    pc_subsets_tested: bool,
) -> Result<(), CiError> {
    let max = engine.max_cond();
    let snapshot: Vec<Var> = pc.iter().copied().collect();
    for y in snapshot {
        let spouses: BTreeSet<Var> = sp.values().flatten().copied().collect();
        if pc_subsets_tested && spouses.is_empty() {
            continue;
        }
        let pool: Vec<Var> = spouses
            .iter()
            .chain(pc.iter())
            .copied()
            .filter(|&v| v != y)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let hit = find_subset(
            &pool,
            0,
            max,
            |z| !pc_subsets_tested || z.iter().any(|v| spouses.contains(v)),
            |z| engine.independent(t, y, z),
        )?;
        let Some(z) = hit else { continue };
        pc.remove(&y);
        sp.remove(&y);
        csp.remove(&y);
        let kids: Vec<Var> = pc.iter().copied().filter(|c| !z.contains(c)).collect();
        let mut found = Vec::new();
        for c in kids {
            let mut zc = z.clone();
            zc.push(c);
            zc.sort_unstable();
            if engine.dependent(y, t, &zc)? {
                csp.entry(c).or_default().insert(y);
                found.push(c);
            }
        }
        sep.insert(y, z);
        for c in found {
            if !separated_from_child(engine, t, pc, sp, y, c)? {
                sp.entry(c).or_default().insert(y);
            }
        }
    }
    Ok(())
}

/// Splits `pc` into parents, children and undistinguished members.
///
/// 1. Members with a spouse are children.
/// 2. Unless `no_n`, a member whose candidate spouses include a confirmed
///    spouse is a child (N-structure).
/// 3. Two remaining members that are marginally independent but dependent
///    given `t` are both parents.
/// 4. A remaining member dependent on a parent marginally but independent
///    of it given `t` is a child.
pub fn distinguish_pc(
    engine: &mut CiEngine<'_>,
    t: Var,
    pc: &BTreeSet<Var>,
    sp: &SetMap,
    csp: &SetMap,
    no_n: bool,
) -> Result<Partition, CiError> {
    let mut c: BTreeSet<Var> = pc
        .iter()
        .copied()
        .filter(|y| sp.get(y).is_some_and(|s| !s.is_empty()))
        .collect();

    if !no_n {
        let confirmed: BTreeSet<Var> = c.iter().flat_map(|&y| get(sp, y)).collect();
        let rest: Vec<Var> = pc.difference(&c).copied().collect();
        for x in rest {
            if get(csp, x).any(|s| confirmed.contains(&s)) {
                c.insert(x);
            }
        }
    }

    let mut p = BTreeSet::new();
    let rest: Vec<Var> = pc.difference(&c).copied().collect();
    for (i, &x) in rest.iter().enumerate() {
        for &y in &rest[i + 1..] {
            if engine.independent(x, y, &[])? && engine.dependent(x, y, &[t])? {
                p.insert(x);
                p.insert(y);
            }
        }
    }

    let rest: Vec<Var> = pc
        .iter()
        .copied()
        .filter(|x| !p.contains(x) && !c.contains(x))
        .collect();
    for x in rest {
        for &y in &p {
            if engine.dependent(x, y, &[])? && engine.independent(x, y, &[t])? {
                c.insert(x);
                break;
            }
        }
    }

    let un = pc
        .iter()
        .copied()
        .filter(|x| !p.contains(x) && !c.contains(x))
        .collect();
    Ok((p, c, un))
}

/// Learns the Markov blanket of `t` and orients what it can of `t`'s
/// neighbourhood.
pub fn emb(engine: &mut CiEngine<'_>, t: Var, opts: MbOptions) -> Result<MbResult, MbError> {
    let (mut pc, mut sep) = recog_pc(engine, t)?;
    let (mut sp, mut csp) = recog_spouses(engine, t, &pc, &sep, opts.emb2)?;
    remove_false_pc_inner(engine, t, &mut pc, &mut sp, &mut csp, &mut sep, true)?;
    csp.retain(|y, _| pc.contains(y));
    let (p, c, un) = distinguish_pc(engine, t, &pc, &sp, &csp, opts.no_n)?;
    let mut result = MbResult {
        target: t,
        pc,
        sp,
        csp,
        sep,
        p,
        c,
        un,
        mb: BTreeSet::new(),
    };
    result.mb = result.pc.union(&result.spouses()).copied().collect();
    result.check()?;
    Ok(result)
}

/// Incremental association Markov blanket: grow by the strongest dependent
/// variable given the current blanket, then shrink.
pub fn iamb(engine: &mut CiEngine<'_>, t: Var) -> Result<BTreeSet<Var>, CiError> {
    let n = engine.n_vars();
    if t >= n {
        return Err(CiError::IndexOutOfRange { index: t, n_vars: n });
    }
    let mut mb: BTreeSet<Var> = BTreeSet::new();
    'grow: loop {
        let z: Vec<Var> = mb.iter().copied().collect();
        let mut best: Option<(Var, f64)> = None;
        for x in (0..n).filter(|x| *x != t && !mb.contains(x)) {
            let (r, s) = match engine.test_strength(t, x, &z) {
                Ok(v) => v,
                Err(CiError::Budget { .. }) => break 'grow,
                Err(e) => return Err(e),
            };
            if !r.independent && best.is_none_or(|(_, b)| s > b) {
                best = Some((x, s));
            }
        }
        match best {
            Some((x, _)) => {
                mb.insert(x);
            }
            None => break,
        }
    }
    let snapshot: Vec<Var> = mb.iter().copied().collect();
    for x in snapshot {
        let z: Vec<Var> = mb.iter().copied().filter(|&v| v != x).collect();
        if engine.independent(t, x, &z)? {
            mb.remove(&x);
        }
    }
    Ok(mb)
}
