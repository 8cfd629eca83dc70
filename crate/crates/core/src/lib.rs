//! Local causal structure learning from discrete observational data.
//!
//! Given a target variable, [`elcs`] learns its Markov blanket with [`emb`],
//! separates parents from children using v-structures, N-structures and the
//! two pairwise rules in [`mb::distinguish_pc`], and walks outwards through
//! neighbouring blankets only while some neighbour of the target is still
//! unoriented. Orientation is propagated with Meek's rules.
//!
//! Supporting pieces:
//!
//! * [`data`]: column-oriented discrete datasets and contingency counting.
//! * [`citest`]: the G² test, a d-separation oracle and the test counter.
//! * [`bnet`]: BIF parsing, DAGs, ancestral sampling, d-separation.
//! * [`metrics`]: ArrP / ArrR / SHD / FDR scoring against a known DAG.
//! * [`run`]: the learn / sample / benchmark commands behind the CLI.

pub mod bnet;
pub mod citest;
pub mod data;
pub mod graph;
pub mod mb;
pub mod metrics;
pub mod pc;
pub mod run;
pub mod subsets;

pub use bnet::{CptNetwork, Dag};
pub use citest::{CiEngine, CiError, CiResult};
pub use data::Dataset;
pub use graph::{elcs, ElcsOptions, ElcsOutcome, LocalGraph, Mark, Termination};
pub use mb::{emb, iamb, MbOptions, MbResult};
pub use metrics::{score_local, LocalScore};
pub use pc::{recog_pc, Sepsets};

/// Index of a variable (column) in a dataset or node in a DAG.
pub type Var = usize;
