//! Discrete datasets and contingency counting.
//!
//! A [`Dataset`] stores one column of category codes per variable. Codes of
//! variable `v` lie in `0..cards[v]`. CSV files carry a header row of names
//! and base-10 codes; an optional sidecar `<name>.card` file (one integer
//! per line, header order) pins the cardinalities, which otherwise default
//! to `max code + 1`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::Var;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty header")]
    EmptyHeader,
    #[error("empty variable name in header column {column}")]
    EmptyName { column: usize },
    #[error("duplicate variable name {name:?} in header columns {first} and {second}")]
    DuplicateName {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowLength {
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column:?}: {value:?} is not an integer code")]
    NonInteger {
        row: u64,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column:?}: negative code {value}")]
    NegativeCode {
        row: u64,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column:?}: code {code} is not below cardinality {card}")]
    CodeOutOfRange {
        row: u64,
        column: String,
        code: u32,
        card: usize,
    },
    #[error("cardinality file {path}: {message}")]
    CardFile { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("variable index {index} out of range (dataset has {n_vars} variables)")]
    IndexOutOfRange { index: Var, n_vars: usize },
    #[error("x and y must differ (both are {0})")]
    SameVariable(Var),
    #[error("variable {0} appears both as a tested variable and in the conditioning set")]
    TestedInConditioning(Var),
}

/// Immutable column-oriented table of discrete codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    names: Vec<String>,
    cards: Vec<usize>,
    columns: Vec<Vec<u32>>,
    rows: usize,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        cards: Vec<usize>,
        columns: Vec<Vec<u32>>,
    ) -> Result<Self, DataError> {
        if names.len() != cards.len() || names.len() != columns.len() {
            return Err(DataError::Invalid(format!(
                "{} names, {} cardinalities, {} columns",
                names.len(),
                cards.len(),
                columns.len()
            )));
        }
        check_names(&names)?;
        let rows = columns.first().map_or(0, Vec::len);
        for (v, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(DataError::Invalid(format!(
                    "column {:?} has {} rows, expected {rows}",
                    names[v],
                    col.len()
                )));
            }
            if cards[v] < 2 {
                return Err(DataError::Invalid(format!(
                    "variable {:?} has cardinality {} (< 2)",
                    names[v], cards[v]
                )));
            }
            if let Some((r, &code)) = col
                .iter()
                .enumerate()
                .find(|(_, &c)| c as usize >= cards[v])
            {
                return Err(DataError::CodeOutOfRange {
                    row: r as u64 + 2,
                    column: names[v].clone(),
                    code,
                    card: cards[v],
                });
            }
        }
        Ok(Dataset {
            names,
            cards,
            columns,
            rows,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn column(&self, v: Var) -> &[u32] {
        &self.columns[v]
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name)
    }

    /// Loads `path`, honouring a `.card` sidecar next to it when present.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let sidecar = card_path(path);
        let cards = if sidecar.exists() {
            Some(read_cards(&sidecar)?)
        } else {
            None
        };
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text, cards)
    }

    /// Parses CSV text. `cards`, when given, overrides cardinality inference.
    pub fn parse_csv(text: &str, cards: Option<Vec<usize>>) -> Result<Self, DataError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let names: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
            return Err(DataError::EmptyHeader);
        }
        check_names(&names)?;

        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); names.len()];
        for record in reader.records() {
            let record = record?;
            let row = record.position().map_or(0, |p| p.line());
            if record.len() != names.len() {
                return Err(DataError::RowLength {
                    row,
                    expected: names.len(),
                    found: record.len(),
                });
            }
            for (v, cell) in record.iter().enumerate() {
                columns[v].push(parse_code(cell, row, &names[v])?);
            }
        }

        let cards = match cards {
            Some(cards) => {
                if cards.len() != names.len() {
                    return Err(DataError::Invalid(format!(
                        "{} cardinalities declared for {} variables",
                        cards.len(),
                        names.len()
                    )));
                }
                cards
            }
            None => columns
                .iter()
                .map(|col| col.iter().max().map_or(2, |&m| (m as usize + 1).max(2)))
                .collect(),
        };
        Dataset::new(names, cards, columns)
    }

    /// Serializes to CSV text (header + one line per row).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.rows * self.n_vars() * 2 + 64);
        out.push_str(&self.names.join(","));
        out.push('\n');
        for r in 0..self.rows {
            for (v, col) in self.columns.iter().enumerate() {
                if v > 0 {
                    out.push(',');
                }
                out.push_str(&col[r].to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Writes `path` and its `.card` sidecar.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| DataError::Io { path: p, source }
        };
        fs::write(path, self.to_csv_string()).map_err(io_err(path))?;
        let sidecar = card_path(path);
        let cards: String = self.cards.iter().map(|c| format!("{c}\n")).collect();
        fs::write(&sidecar, cards).map_err(io_err(&sidecar))?;
        Ok(())
    }

    /// Counts `N_ijk` for `x` (rows), `y` (columns) and every observed
    /// configuration `k` of `z`.
    pub fn contingency(&self, x: Var, y: Var, z: &[Var]) -> Result<ContingencyTable, DataError> {
        let n_vars = self.n_vars();
        for &v in z.iter().chain([&x, &y]) {
            if v >= n_vars {
                return Err(DataError::IndexOutOfRange { index: v, n_vars });
            }
        }
        if x == y {
            return Err(DataError::SameVariable(x));
        }
        if let Some(&v) = z.iter().find(|&&v| v == x || v == y) {
            return Err(DataError::TestedInConditioning(v));
        }

        let rx = self.cards[x];
        let ry = self.cards[y];
        let cell = rx * ry;
        let (strata, row_stratum) = self.strata(z);
        let mut counts = vec![0u64; strata * cell];
        let xs = &self.columns[x];
        let ys = &self.columns[y];
        for r in 0..self.rows {
            let k = row_stratum.as_ref().map_or(0, |s| s[r]);
            counts[k * cell + xs[r] as usize * ry + ys[r] as usize] += 1;
        }
        Ok(ContingencyTable {
            rx,
            ry,
            strata,
            counts,
            n: self.rows as u64,
        })
    }

    /// Assigns every row a stratum index; strata are the observed
    /// configurations of `z` in lexicographic order. `None` means a single
    /// stratum holding every row.
    fn strata(&self, z: &[Var]) -> (usize, Option<Vec<usize>>) {
        if z.is_empty() {
            return (usize::from(self.rows > 0), None);
        }
        let mut radix: u64 = 1;
        let mut overflow = false;
        for &v in z {
            match radix.checked_mul(self.cards[v] as u64) {
                Some(r) => radix = r,
                None => overflow = true,
            }
        }
        if overflow {
            return self.strata_by_tuple(z);
        }

        // Mixed-radix key with the first conditioning variable most
        // significant, so key order is tuple order.
        let mut keys = vec![0u64; self.rows];
        for &v in z {
            let card = self.cards[v] as u64;
            for (key, &code) in keys.iter_mut().zip(&self.columns[v]) {
                *key = *key * card + code as u64;
            }
        }

        if radix as usize <= self.rows.max(1 << 12) * 4 {
            let mut slot = vec![usize::MAX; radix as usize];
            for &k in &keys {
                slot[k as usize] = 0;
            }
            let mut next = 0;
            for s in slot.iter_mut().filter(|s| **s == 0) {
                *s = next;
                next += 1;
            }
            let stratum = keys.iter().map(|&k| slot[k as usize]).collect();
            (next, Some(stratum))
        } else {
            let mut distinct = keys.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let index: HashMap<u64, usize> =
                distinct.iter().enumerate().map(|(i, &k)| (k, i)).collect();
            let stratum = keys.iter().map(|k| index[k]).collect();
            (distinct.len(), Some(stratum))
        }
    }

    fn strata_by_tuple(&self, z: &[Var]) -> (usize, Option<Vec<usize>>) {
        let tuples: Vec<Vec<u32>> = (0..self.rows)
            .map(|r| z.iter().map(|&v| self.columns[v][r]).collect())
            .collect();
        let mut index: BTreeMap<&[u32], usize> = BTreeMap::new();
        for t in &tuples {
            index.insert(t.as_slice(), 0);
        }
        for (i, slot) in index.values_mut().enumerate() {
            *slot = i;
        }
        let stratum = tuples.iter().map(|t| index[t.as_slice()]).collect();
        (index.len(), Some(stratum))
    }
}

/// Three-way count table `N_ijk` over (x-level, y-level, observed stratum).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub rx: usize,
    pub ry: usize,
    pub strata: usize,
    /// Flat `[k][i][j]` layout.
    pub counts: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    /// Builds a table from explicit `[k][i][j]` counts.
    pub fn from_counts(rx: usize, ry: usize, strata: Vec<Vec<Vec<u64>>>) -> Self {
        let counts: Vec<u64> = strata
            .iter()
            .flat_map(|s| {
                assert_eq!(s.len(), rx);
                s.iter().flat_map(|row| {
                    assert_eq!(row.len(), ry);
                    row.iter().copied()
                })
            })
            .collect();
        let n = counts.iter().sum();
        ContingencyTable {
            rx,
            ry,
            strata: strata.len(),
            counts,
            n,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u64 {
        self.counts[k * self.rx * self.ry + i * self.ry + j]
    }

    pub fn stratum(&self, k: usize) -> &[u64] {
        let cell = self.rx * self.ry;
        &self.counts[k * cell..(k + 1) * cell]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn check_names(names: &[String]) -> Result<(), DataError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(DataError::EmptyName { column: i + 1 });
        }
        if let Some(&first) = seen.get(name.as_str()) {
            return Err(DataError::DuplicateName {
                name: name.clone(),
                first: first + 1,
                second: i + 1,
            });
        }
        seen.insert(name, i);
    }
    Ok(())
}

fn parse_code(cell: &str, row: u64, column: &str) -> Result<u32, DataError> {
    match cell.parse::<i64>() {
        Ok(v) if v < 0 => Err(DataError::NegativeCode {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        }),
        Ok(v) if v <= u32::MAX as i64 => Ok(v as u32),
        _ => Err(DataError::NonInteger {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        }),
    }
}

/// The sidecar cardinality path for a data file.
pub fn card_path(path: &Path) -> PathBuf {
    path.with_extension("card")
}

fn read_cards(path: &Path) -> Result<Vec<usize>, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim().parse::<usize>() {
            Ok(c) if c >= 2 => Ok(c),
            _ => Err(DataError::CardFile {
                path: path.to_path_buf(),
                message: format!("line {}: {:?} is not a cardinality >= 2", i + 1, l.trim()),
            }),
        })
        .collect()
}
