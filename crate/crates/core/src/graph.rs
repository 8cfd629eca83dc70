//! The ELCS outer loop and the partially directed graph it grows.
//!
//! # Meek rules
//!
//! Rules orient an undirected pair `x − y` as `x → y` and only fire when
//! both `x` and `y` have been visited (their blankets were learned). The
//! premise edges may touch unvisited nodes. "Known non-adjacent" means no
//! mark and at least one endpoint visited: a visited node's absent mark is
//! backed by its learned PC set.
//!
//! * R1: `a → x`, `a` and `y` known non-adjacent.
//! * R2: `x → m → y`.
//! * R3: `x − c`, `x − d`, `c → y`, `d → y`, `c` and `d` known non-adjacent.
//! * R4: `x − c`, `c → d → y`, `c` and `y` known non-adjacent.
//!
//! R2 is acyclicity. The other three share one argument: if instead
//! `y → x`, acyclicity forces an unshielded collider into `x` (`a → x ← y`,
//! `c → x ← d`, or `c → x ← y`) with a visited tail. That visited node's
//! blanket contains the other tail as a spouse through `x`, so its EMB run
//! would already have directed the edge into `x`, and the pair in question
//! would not be undirected.

use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use crate::citest::CiEngine;
use crate::mb::{emb, MbError, MbOptions, MbResult, Partition};
use crate::Var;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Absent,
    Undirected,
    Directed { from: Var, to: Var },
}

/// An orientation that contradicted an existing directed mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub from: Var,
    pub to: Var,
    /// Node whose blanket produced the rejected claim.
    pub source: Var,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalGraph {
    n: usize,
    marks: Vec<Mark>,
    visited: Vec<bool>,
    order: Vec<Var>,
    conflicts: Vec<Conflict>,
}

impl LocalGraph {
    pub fn new(n: usize) -> Self {
        LocalGraph {
            n,
            marks: vec![Mark::Absent; n * n],
            visited: vec![false; n],
            order: Vec::new(),
            conflicts: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, a: Var, b: Var) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        lo * self.n + hi
    }

    pub fn mark(&self, a: Var, b: Var) -> Mark {
        self.marks[self.slot(a, b)]
    }

    pub fn adjacent(&self, a: Var, b: Var) -> bool {
        self.mark(a, b) != Mark::Absent
    }

    pub fn is_undirected(&self, a: Var, b: Var) -> bool {
        self.mark(a, b) == Mark::Undirected
    }

    /// True iff the graph holds `a → b`.
    pub fn is_directed(&self, a: Var, b: Var) -> bool {
        self.mark(a, b) == Mark::Directed { from: a, to: b }
    }

    pub fn known_nonadjacent(&self, a: Var, b: Var) -> bool {
        !self.adjacent(a, b) && (self.visited[a] || self.visited[b])
    }

    pub fn is_visited(&self, v: Var) -> bool {
        self.visited[v]
    }

    /// Visited nodes in visit order.
    pub fn visited(&self) -> &[Var] {
        &self.order
    }

    pub fn visit(&mut self, v: Var) {
        if !self.visited[v] {
            self.visited[v] = true;
            self.order.push(v);
        }
    }

    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    /// Adds `a − b` unless the pair already has a mark.
    pub fn add_undirected(&mut self, a: Var, b: Var) {
        assert_ne!(a, b, "self loop");
        let s = self.slot(a, b);
        if self.marks[s] == Mark::Absent {
            self.marks[s] = Mark::Undirected;
        }
    }

    /// Sets `from → to`. Returns false (leaving the mark) if the opposite
    /// direction is already recorded.
    pub fn orient(&mut self, from: Var, to: Var) -> bool {
        assert_ne!(from, to, "self loop");
        let s = self.slot(from, to);
        match self.marks[s] {
            Mark::Directed { from: f, .. } => f == from,
            _ => {
                self.marks[s] = Mark::Directed { from, to };
                true
            }
        }
    }

    /// Neighbours of `v` with their marks, ascending.
    pub fn neighbours(&self, v: Var) -> impl Iterator<Item = (Var, Mark)> + '_ {
        (0..self.n)
            .filter(move |&u| u != v)
            .map(move |u| (u, self.mark(v, u)))
            .filter(|(_, m)| *m != Mark::Absent)
    }

    /// All marked pairs `(a, b, mark)` with `a < b`.
    pub fn edges(&self) -> Vec<(Var, Var, Mark)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                let m = self.marks[a * self.n + b];
                if m != Mark::Absent {
                    out.push((a, b, m));
                }
            }
        }
        out
    }

    /// Records `t`'s learned neighbourhood: every PC member becomes
    /// adjacent, parents point in and children point out. Existing
    /// directions are kept; contradicting claims are logged as conflicts.
    pub fn apply_orientations(&mut self, t: Var, result: &MbResult) {
        for &y in &result.pc {
            self.add_undirected(t, y);
        }
        for &y in &result.p {
            if !self.orient(y, t) {
                self.conflicts.push(Conflict {
                    from: y,
                    to: t,
                    source: t,
                });
            }
        }
        for &y in &result.c {
            if !self.orient(t, y) {
                self.conflicts.push(Conflict {
                    from: t,
                    to: y,
                    source: t,
                });
            }
        }
    }

    /// `t`'s neighbours split by the current marks, restricted to `pc`.
    pub fn partition(
        &self,
        t: Var,
        pc: &BTreeSet<Var>,
    ) -> Partition {
        let (mut p, mut c, mut un) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        for &y in pc {
            if self.is_directed(y, t) {
                p.insert(y);
            } else if self.is_directed(t, y) {
                c.insert(y);
            } else {
                un.insert(y);
            }
        }
        (p, c, un)
    }

    fn r1(&self, x: Var, y: Var) -> bool {
        (0..self.n).any(|a| a != y && self.is_directed(a, x) && self.known_nonadjacent(a, y))
    }

    fn r2(&self, x: Var, y: Var) -> bool {
        (0..self.n).any(|m| self.is_directed(x, m) && self.is_directed(m, y))
    }

    fn r3(&self, x: Var, y: Var) -> bool {
        let cs: Vec<Var> = (0..self.n)
            .filter(|&c| self.is_undirected(x, c) && self.is_directed(c, y))
            .collect();
        cs.iter()
            .enumerate()
            .any(|(i, &c)| cs[i + 1..].iter().any(|&d| self.known_nonadjacent(c, d)))
    }

    fn r4(&self, x: Var, y: Var) -> bool {
        (0..self.n).any(|c| {
            c != y
                && self.is_undirected(x, c)
                && self.known_nonadjacent(c, y)
                && (0..self.n).any(|d| self.is_directed(c, d) && self.is_directed(d, y))
        })
    }
}

/// Applies R1–R4 until nothing changes. Returns the number of edges
/// oriented.
pub fn meek_closure(graph: &mut LocalGraph) -> usize {
    let order: Vec<Var> = (0..graph.n).collect();
    meek_closure_ordered(graph, &order)
}

/// [`meek_closure`] with pairs scanned in the order induced by `order`
/// (a permutation of the nodes) instead of index order.
pub fn meek_closure_ordered(graph: &mut LocalGraph, order: &[Var]) -> usize {
    type Rule = fn(&LocalGraph, Var, Var) -> bool;
    const RULES: [Rule; 4] = [LocalGraph::r1, LocalGraph::r2, LocalGraph::r3, LocalGraph::r4];
    let nodes: Vec<Var> = order.iter().copied().filter(|&v| graph.visited[v]).collect();
    let mut oriented = 0;
    loop {
        let mut changed = false;
        for rule in RULES {
            for &x in &nodes {
                for &y in &nodes {
                    if x != y && graph.is_undirected(x, y) && rule(graph, x, y) {
                        graph.orient(x, y);
                        oriented += 1;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return oriented;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElcsOptions {
    pub mb: MbOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Resolved,
    QueueExhausted,
    AllVisited,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Resolved => "resolved",
            Termination::QueueExhausted => "queue-exhausted",
            Termination::AllVisited => "all-visited",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElcsStats {
    pub ci_tests: u64,
    pub time_ms: f64,
    pub mbs_learned: usize,
    pub termination: Termination,
    pub conflicts: usize,
}

#[derive(Debug, Clone)]
pub struct ElcsOutcome {
    pub target: Var,
    pub p: BTreeSet<Var>,
    pub c: BTreeSet<Var>,
    pub un: BTreeSet<Var>,
    /// The target's own EMB result.
    pub target_mb: MbResult,
    pub graph: LocalGraph,
    pub stats: ElcsStats,
}

/// Learns and orients the neighbourhood of `t`.
///
/// Blankets are learned in FIFO order starting at `t`; each run enqueues
/// the members it could not orient. Stops once every member of `t`'s PC is
/// oriented, the queue is empty, or every variable has been visited.
pub fn elcs(
    engine: &mut CiEngine<'_>,
    t: Var,
    opts: ElcsOptions,
) -> Result<ElcsOutcome, MbError> {
    let start = Instant::now();
    let tests_before = engine.test_count();
    let n = engine.n_vars();
    let mut graph = LocalGraph::new(n);
    let mut queue: VecDeque<Var> = VecDeque::from([t]);
    let mut target_mb: Option<MbResult> = None;
    let mut mbs_learned = 0;
    let mut partition = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    let termination = loop {
        let Some(x) = queue.pop_front() else {
            break Termination::QueueExhausted;
        };
        if graph.is_visited(x) {
            continue;
        }
        graph.visit(x);
        let result = emb(engine, x, opts.mb)?;
        mbs_learned += 1;
        graph.apply_orientations(x, &result);
        queue.extend(result.un.iter().copied());
        if x == t {
            target_mb = Some(result);
        }
        meek_closure(&mut graph);

        let pc = &target_mb.as_ref().expect("target is visited first").pc;
        partition = graph.partition(t, pc);
        if partition.2.is_empty() {
            break Termination::Resolved;
        }
        if graph.visited().len() == n {
            break Termination::AllVisited;
        }
        if queue.is_empty() {
            break Termination::QueueExhausted;
        }
    };
    let (p, c, un) = partition;
    let conflicts = graph.conflicts().len();
    Ok(ElcsOutcome {
        target: t,
        p,
        c,
        un,
        target_mb: target_mb.expect("target is visited first"),
        graph,
        stats: ElcsStats {
            ci_tests: engine.test_count() - tests_before,
            time_ms: start.elapsed().as_secs_f64() * 1e3,
            mbs_learned,
            termination,
            conflicts,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn visited_graph(n: usize) -> LocalGraph {
        let mut g = LocalGraph::new(n);
        (0..n).for_each(|v| g.visit(v));
        g
    }

    #[test]
    fn r1_orients_away_from_collider_free_side() {
        // 0 -> 1, 1 - 2, 0 and 2 non-adjacent
        let mut g = visited_graph(3);
        g.add_undirected(0, 1);
        g.orient(0, 1);
        g.add_undirected(1, 2);
        assert_eq!(meek_closure(&mut g), 1);
        assert!(g.is_directed(1, 2));
    }

    #[test]
    fn r2_follows_directed_path() {
        let mut g = visited_graph(3);
        g.orient(0, 1);
        g.orient(1, 2);
        g.add_undirected(0, 2);
        meek_closure(&mut g);
        assert!(g.is_directed(0, 2));
    }

    #[test]
    fn undirected_triangle_is_fixed() {
        let mut g = visited_graph(3);
        g.add_undirected(0, 1);
        g.add_undirected(1, 2);
        g.add_undirected(0, 2);
        let before = g.clone();
        assert_eq!(meek_closure(&mut g), 0);
        assert_eq!(g, before);
    }

    #[test]
    fn r3_and_r4() {
        // R3: x=0, y=1, c=2, d=3
        let mut g = visited_graph(4);
        g.add_undirected(0, 1);
        g.add_undirected(0, 2);
        g.add_undirected(0, 3);
        g.orient(2, 1);
        g.orient(3, 1);
        meek_closure(&mut g);
        assert!(g.is_directed(0, 1));
        assert!(g.is_undirected(0, 2) && g.is_undirected(0, 3));

        // R4: x=0, y=1, c=2, d=3; 0 - 3 keeps R1 and R2 quiet
        let mut g = visited_graph(4);
        g.add_undirected(0, 1);
        g.add_undirected(0, 2);
        g.add_undirected(0, 3);
        g.orient(2, 3);
        g.orient(3, 1);
        meek_closure(&mut g);
        assert!(g.is_directed(0, 1));
    }

    #[test]
    fn unvisited_pairs_are_left_alone() {
        let mut g = LocalGraph::new(3);
        g.visit(0);
        g.visit(1);
        g.orient(0, 1);
        g.add_undirected(1, 2);
        assert_eq!(meek_closure(&mut g), 0);
        g.visit(2);
        assert_eq!(meek_closure(&mut g), 1);
    }

    #[test]
    fn conflicting_claim_is_logged() {
        let r = |p: &[Var], c: &[Var]| MbResult {
            target: 0,
            pc: p.iter().chain(c).copied().collect(),
            sp: Default::default(),
            csp: Default::default(),
            sep: Default::default(),
            p: p.iter().copied().collect(),
            c: c.iter().copied().collect(),
            un: BTreeSet::new(),
            mb: p.iter().chain(c).copied().collect(),
        };
        let mut g = LocalGraph::new(2);
        g.apply_orientations(0, &r(&[1], &[]));
        let once = g.clone();
        g.apply_orientations(0, &r(&[1], &[]));
        assert_eq!(g, once);
        g.apply_orientations(0, &r(&[], &[1]));
        assert!(g.is_directed(1, 0));
        assert_eq!(g.conflicts().len(), 1);
    }
}
