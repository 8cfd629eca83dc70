//! Conditional-independence testing.
//!
//! [`CiEngine`] answers "is `x` independent of `y` given `z`?" either from
//! data (G² log-likelihood-ratio test) or from a known DAG (d-separation).
//! Every answered query bumps a counter; that counter is the efficiency
//! measure reported by the learners, so results are never cached here.

use statrs::function::gamma::gamma_ur;
use thiserror::Error;

use crate::bnet::{d_separated, Dag};
use crate::data::{ContingencyTable, DataError, Dataset};
use crate::Var;

/// Sample-size multiplier for the reliability rule: a G² test is trusted
/// only when `rows >= DEFAULT_RELIABILITY_K * dof`.
pub const DEFAULT_RELIABILITY_K: f64 = 5.0;

/// Significance level used throughout the benchmarks.
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CiError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("variable index {index} out of range ({n_vars} variables)")]
    IndexOutOfRange { index: Var, n_vars: usize },
    #[error("cannot test variable {0} against itself")]
    SameVariable(Var),
    #[error("variable {0} is both tested and conditioned on")]
    TestedInConditioning(Var),
    #[error("conditioning set of size {size} exceeds the budget of {max}")]
    Budget { size: usize, max: usize },
    #[error("significance level {0} is not in (0, 1)")]
    InvalidAlpha(f64),
    #[error("reliability multiplier {0} must be finite and non-negative")]
    InvalidReliability(f64),
    #[error("chi-square tail needs dof >= 1")]
    ZeroDof,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiResult {
    pub independent: bool,
    /// G² statistic; 0 for the oracle.
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    /// False when the reliability rule fired (the verdict is then "dependent").
    pub reliable: bool,
}

#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    G2 { data: &'a Dataset, alpha: f64 },
    Oracle { dag: &'a Dag },
}

/// A CI authority with a monotone test counter.
///
/// One engine belongs to one learning run; it is `Send` but the counter
/// makes it unsuitable for sharing between concurrent runs.
#[derive(Debug, Clone)]
pub struct CiEngine<'a> {
    backend: Backend<'a>,
    test_count: u64,
    unreliable_count: u64,
    reliability_k: f64,
    max_cond: Option<usize>,
}

impl<'a> CiEngine<'a> {
    pub fn g2(data: &'a Dataset, alpha: f64) -> Result<Self, CiError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CiError::InvalidAlpha(alpha));
        }
        Ok(Self::with_backend(Backend::G2 { data, alpha }))
    }

    pub fn oracle(dag: &'a Dag) -> Self {
        Self::with_backend(Backend::Oracle { dag })
    }

    fn with_backend(backend: Backend<'a>) -> Self {
        CiEngine {
            backend,
            test_count: 0,
            unreliable_count: 0,
            reliability_k: DEFAULT_RELIABILITY_K,
            max_cond: None,
        }
    }

    /// Sets the reliability multiplier; 0 disables the rule.
    pub fn with_reliability_k(mut self, k: f64) -> Result<Self, CiError> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(CiError::InvalidReliability(k));
        }
        self.reliability_k = k;
        Ok(self)
    }

    pub fn with_max_cond(mut self, max_cond: Option<usize>) -> Self {
        self.max_cond = max_cond;
        self
    }

    pub fn backend(&self) -> &Backend<'a> {
        &self.backend
    }

    pub fn n_vars(&self) -> usize {
        match self.backend {
            Backend::G2 { data, .. } => data.n_vars(),
            Backend::Oracle { dag } => dag.n(),
        }
    }

    pub fn test_count(&self) -> u64 {
        self.test_count
    }

    /// Number of tests whose verdict was forced to "dependent" by the
    /// reliability rule.
    pub fn unreliable_count(&self) -> u64 {
        self.unreliable_count
    }

    pub fn max_cond(&self) -> Option<usize> {
        self.max_cond
    }

    fn check(&self, x: Var, y: Var, z: &[Var]) -> Result<(), CiError> {
        let n_vars = self.n_vars();
        for &v in z.iter().chain([&x, &y]) {
            if v >= n_vars {
                return Err(CiError::IndexOutOfRange { index: v, n_vars });
            }
        }
        if x == y {
            return Err(CiError::SameVariable(x));
        }
        if let Some(&v) = z.iter().find(|&&v| v == x || v == y) {
            return Err(CiError::TestedInConditioning(v));
        }
        if let Some(max) = self.max_cond {
            if z.len() > max {
                return Err(CiError::Budget { size: z.len(), max });
            }
        }
        Ok(())
    }

    /// Tests `x ⊥ y | z`.
    pub fn test(&mut self, x: Var, y: Var, z: &[Var]) -> Result<CiResult, CiError> {
        self.check(x, y, z)?;
        let result = match self.backend {
            Backend::G2 { data, alpha } => {
                let table = data.contingency(x, y, z)?;
                let (statistic, dof) = g2_statistic(&table);
                let p_value = if dof == 0 {
                    1.0
                } else {
                    chi2_sf(statistic, dof)?
                };
                let reliable = data.n_rows() as f64 >= self.reliability_k * dof as f64;
                if !reliable {
                    self.unreliable_count += 1;
                }
                CiResult {
                    independent: reliable && p_value > alpha,
                    statistic,
                    p_value,
                    dof,
                    reliable,
                }
            }
            Backend::Oracle { dag } => {
                let independent = d_separated(dag, x, y, z);
                CiResult {
                    independent,
                    statistic: 0.0,
                    p_value: if independent { 1.0 } else { 0.0 },
                    dof: 0,
                    reliable: true,
                }
            }
        };
        self.test_count += 1;
        Ok(result)
    }

    /// Runs one test and also returns the dependency strength used for
    /// ranking: the G² statistic on data, 1/0 for the oracle.
    pub fn test_strength(
        &mut self,
        x: Var,
        y: Var,
        z: &[Var],
    ) -> Result<(CiResult, f64), CiError> {
        let r = self.test(x, y, z)?;
        let strength = match self.backend {
            Backend::G2 { .. } => r.statistic,
            Backend::Oracle { .. } => {
                if r.independent {
                    0.0
                } else {
                    1.0
                }
            }
        };
        Ok((r, strength))
    }

    /// Dependency strength of `x` and `y` given `z`. Counts as one test.
    pub fn assoc(&mut self, x: Var, y: Var, z: &[Var]) -> Result<f64, CiError> {
        self.test_strength(x, y, z).map(|(_, s)| s)
    }

    /// Independence verdict, where an over-budget conditioning set reads as
    /// "not shown independent" without running a test.
    pub fn independent(&mut self, x: Var, y: Var, z: &[Var]) -> Result<bool, CiError> {
        match self.test(x, y, z) {
            Ok(r) => Ok(r.independent),
            Err(CiError::Budget { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn dependent(&mut self, x: Var, y: Var, z: &[Var]) -> Result<bool, CiError> {
        self.independent(x, y, z).map(|i| !i)
    }
}

/// G² statistic and degrees of freedom of a three-way table.
///
/// `G² = 2 Σ N_ijk ln(N_ijk N_k / (N_i·k N_·jk))`, zero cells contributing
/// nothing. Each stratum adds `(rows_k - 1)(cols_k - 1)` degrees of freedom
/// counting only non-empty rows and columns.
pub fn g2_statistic(table: &ContingencyTable) -> (f64, usize) {
    let (rx, ry) = (table.rx, table.ry);
    let mut row = vec![0u64; rx];
    let mut col = vec![0u64; ry];
    let mut stat = 0.0;
    let mut dof = 0usize;
    for k in 0..table.strata {
        let cells = table.stratum(k);
        row.iter_mut().for_each(|r| *r = 0);
        col.iter_mut().for_each(|c| *c = 0);
        for i in 0..rx {
            for j in 0..ry {
                let n = cells[i * ry + j];
                row[i] += n;
                col[j] += n;
            }
        }
        let nk: u64 = row.iter().sum();
        if nk == 0 {
            continue;
        }
        let nk = nk as f64;
        for i in 0..rx {
            for j in 0..ry {
                let n = cells[i * ry + j];
                if n > 0 {
                    let n = n as f64;
                    stat += n * (n * nk / (row[i] as f64 * col[j] as f64)).ln();
                }
            }
        }
        let nr = row.iter().filter(|&&r| r > 0).count();
        let nc = col.iter().filter(|&&c| c > 0).count();
        dof += nr.saturating_sub(1) * nc.saturating_sub(1);
    }
    ((2.0 * stat).max(0.0), dof)
}

/// Upper tail `P(χ²_dof > x)`.
pub fn chi2_sf(x: f64, dof: usize) -> Result<f64, CiError> {
    if dof == 0 {
        return Err(CiError::ZeroDof);
    }
    if x.is_nan() {
        return Ok(f64::NAN);
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(strata: Vec<Vec<Vec<u64>>>) -> ContingencyTable {
        let rx = strata[0].len();
        let ry = strata[0][0].len();
        ContingencyTable::from_counts(rx, ry, strata)
    }

    #[test]
    fn independent_table_has_zero_statistic() {
        let (g, dof) = g2_statistic(&table(vec![vec![vec![25, 25], vec![25, 25]]]));
        assert!(g.abs() < 1e-12);
        assert_eq!(dof, 1);
    }

    #[test]
    fn skewed_two_by_two() {
        // 2 * (2 * 30 ln 1.5 + 2 * 10 ln 0.5)
        let want = 2.0 * (60.0 * 1.5f64.ln() + 20.0 * 0.5f64.ln());
        let (g, dof) = g2_statistic(&table(vec![vec![vec![30, 10], vec![10, 30]]]));
        assert!((g - want).abs() < 1e-9);
        assert!((g - 20.929926).abs() < 1e-6);
        assert_eq!(dof, 1);
    }

    #[test]
    fn two_perfect_strata() {
        let s = vec![vec![5, 0], vec![0, 5]];
        let (g, dof) = g2_statistic(&table(vec![s.clone(), s]));
        assert!((g - 40.0 * 2f64.ln()).abs() < 1e-9);
        assert!((g - 27.7259).abs() < 1e-3);
        assert_eq!(dof, 2);
    }

    #[test]
    fn empty_rows_reduce_dof() {
        let (_, dof) = g2_statistic(&table(vec![vec![
            vec![3, 4, 0],
            vec![0, 0, 0],
            vec![1, 2, 0],
        ]]));
        assert_eq!(dof, 1);
        let (g, dof) = g2_statistic(&ContingencyTable::from_counts(2, 2, vec![]));
        assert_eq!((g, dof), (0.0, 0));
    }

    #[test]
    fn chi2_tail_reference_points() {
        assert_eq!(chi2_sf(0.0, 3).unwrap(), 1.0);
        assert!((chi2_sf(3.841459, 1).unwrap() - 0.05).abs() < 1e-6);
        assert!((chi2_sf(6.634897, 1).unwrap() - 0.01).abs() < 1e-6);
        assert!(matches!(chi2_sf(1.0, 0), Err(CiError::ZeroDof)));
        // dof 2 has the closed form exp(-x/2).
        for x in [0.1, 1.0, 5.0, 20.0] {
            assert!((chi2_sf(x, 2).unwrap() - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
    }

    fn binary_data(x: Vec<u32>, y: Vec<u32>) -> Dataset {
        Dataset::new(vec!["X".into(), "Y".into()], vec![2, 2], vec![x, y]).unwrap()
    }

    #[test]
    fn identical_columns_are_dependent() {
        let col: Vec<u32> = (0..200).map(|i| (i % 2) as u32).collect();
        let data = binary_data(col.clone(), col);
        let mut e = CiEngine::g2(&data, 0.01).unwrap();
        let r = e.test(0, 1, &[]).unwrap();
        assert!(!r.independent && r.reliable);
        assert!(e.assoc(0, 1, &[]).unwrap() > 0.0);
        assert_eq!(e.test_count(), 2);
    }

    #[test]
    fn reliability_rule_forces_dependence() {
        // 4 rows < 5 * 1 dof.
        let data = binary_data(vec![0, 1, 0, 1], vec![0, 0, 1, 1]);
        let mut e = CiEngine::g2(&data, 0.01).unwrap();
        let r = e.test(0, 1, &[]).unwrap();
        assert!(!r.reliable && !r.independent);
        assert_eq!(e.unreliable_count(), 1);
        let mut e = CiEngine::g2(&data, 0.01)
            .unwrap()
            .with_reliability_k(0.0)
            .unwrap();
        assert!(e.test(0, 1, &[]).unwrap().independent);
    }

    #[test]
    fn budget_and_precondition_errors_do_not_count() {
        let data = binary_data(vec![0, 1], vec![1, 0]);
        let mut e = CiEngine::g2(&data, 0.05).unwrap().with_max_cond(Some(0));
        assert!(matches!(e.test(0, 0, &[]), Err(CiError::SameVariable(0))));
        assert!(matches!(
            e.test(0, 1, &[1]),
            Err(CiError::TestedInConditioning(1))
        ));
        assert!(matches!(e.test(0, 5, &[]), Err(CiError::IndexOutOfRange { .. })));
        assert!(!e.independent(0, 1, &[0]).is_ok_and(|v| v));
        assert_eq!(e.test_count(), 0);
        assert!(CiEngine::g2(&data, 1.0).is_err());
        assert!(CiEngine::g2(&data, 0.0).is_err());
    }

    #[test]
    fn oracle_chain_and_collider() {
        let names: Vec<String> = ["X", "Z", "Y"].iter().map(|s| s.to_string()).collect();
        let chain = Dag::from_edges(names.clone(), &[(0, 1), (1, 2)]).unwrap();
        let mut e = CiEngine::oracle(&chain);
        assert!(e.test(0, 2, &[1]).unwrap().independent);
        assert!(!e.test(0, 2, &[]).unwrap().independent);

        let collider = Dag::from_edges(names, &[(0, 1), (2, 1)]).unwrap();
        let mut e = CiEngine::oracle(&collider);
        assert!(!e.test(0, 2, &[1]).unwrap().independent);
        assert!(e.test(0, 2, &[]).unwrap().independent);
        assert_eq!(e.assoc(0, 2, &[]).unwrap(), 0.0);
        assert_eq!(e.assoc(0, 1, &[]).unwrap(), 1.0);
        assert_eq!(e.test_count(), 4);
    }
}
