//! Parser for the discrete subset of the BIF (v0.15) format.
//!
//! Supported:
//!
//! ```text
//! network <name> { }
//! variable <name> { type discrete [ k ] { s0, ..., s(k-1) }; }
//! probability ( <var> ) { table p0, ..., p(k-1); }
//! probability ( <var> | <p1>, ..., <pm> ) { (v1, ..., vm) p0, ..., p(k-1); ... }
//! ```
//!
//! Line (`//`) and block (`/* */`) comments are skipped. Anything else,
//! including `property` entries, continuous variables and `default` rows,
//! is rejected with a line/column position so that a partially understood
//! file never becomes ground truth.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::{CptNetwork, Dag, DagError, NetworkError};
use crate::Var;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BifError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: unknown variable {name:?}")]
    UnknownVariable { pos: Pos, name: String },
    #[error("{pos}: variable {name:?}: continuous unsupported")]
    Continuous { pos: Pos, name: String },
    #[error("{pos}: variable {name:?} declared twice")]
    DuplicateVariable { pos: Pos, name: String },
    #[error("{pos}: second probability block for {name:?}")]
    DuplicateProbability { pos: Pos, name: String },
    #[error("{pos}: {name:?} has no value {value:?}")]
    UnknownValue {
        pos: Pos,
        name: String,
        value: String,
    },
    #[error("{pos}: probability for {name:?}: {message}")]
    BadRow {
        pos: Pos,
        name: String,
        message: String,
    },
    #[error("{pos}: probability for {name:?} is missing the row for ({config})")]
    MissingRow {
        pos: Pos,
        name: String,
        config: String,
    },
    #[error("variable {name:?} (declared at {pos}) has no probability block")]
    MissingProbability { pos: Pos, name: String },
    #[error("{pos}: cycle through {names:?}")]
    Cycle { pos: Pos, names: Vec<String> },
    #[error("invalid network: {0}")]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

const PUNCT: &str = "{}[]();,|";

fn lex(text: &str) -> Result<Vec<Token>, BifError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(c, &mut line, &mut col);
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(BifError::Syntax {
                        pos,
                        message: "unterminated block comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    col += 2;
                    break;
                }
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
        } else if PUNCT.contains(c) {
            out.push(Token {
                tok: Tok::Punct(c),
                pos,
            });
            advance(c, &mut line, &mut col);
            i += 1;
        } else if c == '"' {
            let mut word = String::new();
            advance(c, &mut line, &mut col);
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                word.push(chars[i]);
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
            if i == chars.len() {
                return Err(BifError::Syntax {
                    pos,
                    message: "unterminated string".into(),
                });
            }
            advance('"', &mut line, &mut col);
            i += 1;
            out.push(Token {
                tok: Tok::Word(word),
                pos,
            });
        } else {
            let mut word = String::new();
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !PUNCT.contains(chars[i])
                && chars[i] != '"'
                && !(chars[i] == '/' && matches!(chars.get(i + 1), Some('/') | Some('*')))
            {
                word.push(chars[i]);
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
            out.push(Token {
                tok: Tok::Word(word),
                pos,
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, BifError> {
        Err(BifError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn peek_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn punct(&mut self, c: char) -> Result<(), BifError> {
        if self.peek_punct(c) {
            self.at += 1;
            Ok(())
        } else {
            self.syntax(format!("expected '{c}', found {}", self.describe()))
        }
    }

    fn word(&mut self) -> Result<(String, Pos), BifError> {
        match self.toks.get(self.at) {
            Some(Token {
                tok: Tok::Word(w),
                pos,
            }) => {
                let out = (w.clone(), *pos);
                self.at += 1;
                Ok(out)
            }
            _ => self.syntax(format!("expected a name, found {}", self.describe())),
        }
    }

    fn number(&mut self) -> Result<f64, BifError> {
        let pos = self.pos();
        let (w, _) = self.word()?;
        w.parse::<f64>().map_err(|_| BifError::Syntax {
            pos,
            message: format!("expected a number, found {w:?}"),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of file".into(),
            Some(Tok::Punct(c)) => format!("'{c}'"),
            Some(Tok::Word(w)) => format!("{w:?}"),
        }
    }

    /// `a, b, c` up to (not including) `close`.
    fn word_list(&mut self, close: char) -> Result<Vec<(String, Pos)>, BifError> {
        let mut out = vec![self.word()?];
        while self.peek_punct(',') {
            self.at += 1;
            out.push(self.word()?);
        }
        if !self.peek_punct(close) {
            return self.syntax(format!("expected ',' or '{close}', found {}", self.describe()));
        }
        Ok(out)
    }

    fn number_list(&mut self) -> Result<Vec<f64>, BifError> {
        let mut out = vec![self.number()?];
        while self.peek_punct(',') {
            self.at += 1;
            out.push(self.number()?);
        }
        self.punct(';')?;
        Ok(out)
    }
}

struct VarDecl {
    name: String,
    pos: Pos,
    states: Vec<String>,
}

/// Parent states, probabilities, and the position of the row.
type Row = (Vec<(String, Pos)>, Vec<f64>, Pos);

enum Entries {
    Table(Vec<f64>, Pos),
    Rows(Vec<Row>),
}

struct ProbBlock {
    child: (String, Pos),
    parents: Vec<(String, Pos)>,
    entries: Entries,
    pos: Pos,
}

/// Parses BIF text into a validated [`CptNetwork`]. Variables keep their
/// declaration order and category codes follow declared value order.
pub fn parse_bif(text: &str) -> Result<CptNetwork, BifError> {
    let toks = lex(text)?;
    let end = Pos {
        line: text.lines().count().max(1),
        col: 1,
    };
    let mut p = Parser { toks, at: 0, end };
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut probs: Vec<ProbBlock> = Vec::new();

    while let Some(tok) = p.peek().cloned() {
        match tok {
            Tok::Word(w) if w == "network" => {
                p.at += 1;
                p.word()?;
                p.punct('{')?;
                if !p.peek_punct('}') {
                    return p.syntax(format!(
                        "unsupported network content {}; only an empty block is accepted",
                        p.describe()
                    ));
                }
                p.punct('}')?;
            }
            Tok::Word(w) if w == "variable" => {
                p.at += 1;
                vars.push(parse_variable(&mut p)?);
            }
            Tok::Word(w) if w == "probability" => {
                let pos = p.pos();
                p.at += 1;
                probs.push(parse_probability(&mut p, pos)?);
            }
            _ => return p.syntax(format!("unexpected {}", p.describe())),
        }
    }

    let mut index: HashMap<&str, Var> = HashMap::new();
    for (i, v) in vars.iter().enumerate() {
        if index.insert(v.name.as_str(), i).is_some() {
            return Err(BifError::DuplicateVariable {
                pos: v.pos,
                name: v.name.clone(),
            });
        }
    }
    let lookup = |(name, pos): &(String, Pos)| {
        index
            .get(name.as_str())
            .copied()
            .ok_or_else(|| BifError::UnknownVariable {
                pos: *pos,
                name: name.clone(),
            })
    };

    let n = vars.len();
    let cards: Vec<usize> = vars.iter().map(|v| v.states.len()).collect();
    let mut parents: Vec<Option<Vec<Var>>> = vec![None; n];
    let mut cpts: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut block_pos = vec![Pos { line: 0, col: 0 }; n];

    for block in &probs {
        let v = lookup(&block.child)?;
        if parents[v].is_some() {
            return Err(BifError::DuplicateProbability {
                pos: block.pos,
                name: block.child.0.clone(),
            });
        }
        let ps: Vec<Var> = block.parents.iter().map(lookup).collect::<Result<_, _>>()?;
        let name = &vars[v].name;
        let configs: usize = ps.iter().map(|&q| cards[q]).product();
        let r = cards[v];
        let mut table = vec![f64::NAN; configs * r];
        let check_row = |row: &[f64], pos: Pos| -> Result<(), BifError> {
            if row.len() != r {
                return Err(BifError::BadRow {
                    pos,
                    name: name.clone(),
                    message: format!("{} probabilities for {r} values", row.len()),
                });
            }
            if let Some(bad) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(BifError::BadRow {
                    pos,
                    name: name.clone(),
                    message: format!("probability {bad} outside [0, 1]"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(BifError::BadRow {
                    pos,
                    name: name.clone(),
                    message: format!("row sums to {sum}, not 1"),
                });
            }
            Ok(())
        };
        match &block.entries {
            Entries::Table(values, pos) => {
                if !ps.is_empty() {
                    return Err(BifError::BadRow {
                        pos: *pos,
                        name: name.clone(),
                        message: "'table' is only supported for variables without parents"
                            .into(),
                    });
                }
                check_row(values, *pos)?;
                table.copy_from_slice(values);
            }
            Entries::Rows(rows) => {
                if ps.is_empty() && !rows.is_empty() {
                    return Err(BifError::BadRow {
                        pos: rows[0].2,
                        name: name.clone(),
                        message: "conditional row for a variable without parents".into(),
                    });
                }
                for (config, values, pos) in rows {
                    if config.len() != ps.len() {
                        return Err(BifError::BadRow {
                            pos: *pos,
                            name: name.clone(),
                            message: format!(
                                "row names {} parent values, expected {}",
                                config.len(),
                                ps.len()
                            ),
                        });
                    }
                    let mut k = 0;
                    for ((value, vpos), &q) in config.iter().zip(&ps) {
                        let code = vars[q].states.iter().position(|s| s == value).ok_or_else(
                            || BifError::UnknownValue {
                                pos: *vpos,
                                name: vars[q].name.clone(),
                                value: value.clone(),
                            },
                        )?;
                        k = k * cards[q] + code;
                    }
                    check_row(values, *pos)?;
                    if !table[k * r].is_nan() {
                        return Err(BifError::BadRow {
                            pos: *pos,
                            name: name.clone(),
                            message: "parent configuration given twice".into(),
                        });
                    }
                    table[k * r..(k + 1) * r].copy_from_slice(values);
                }
            }
        }
        if let Some(k) = (0..configs).find(|&k| table[k * r].is_nan()) {
            let mut rem = k;
            let mut config: Vec<&str> = Vec::with_capacity(ps.len());
            for &q in ps.iter().rev() {
                config.push(&vars[q].states[rem % cards[q]]);
                rem /= cards[q];
            }
            config.reverse();
            return Err(BifError::MissingRow {
                pos: block.pos,
                name: name.clone(),
                config: config.join(", "),
            });
        }
        parents[v] = Some(ps);
        cpts[v] = table;
        block_pos[v] = block.pos;
    }

    let parents: Vec<Vec<Var>> = parents
        .into_iter()
        .enumerate()
        .map(|(v, ps)| {
            ps.ok_or_else(|| BifError::MissingProbability {
                pos: vars[v].pos,
                name: vars[v].name.clone(),
            })
        })
        .collect::<Result<_, _>>()?;

    // Dag::new sorts parent lists; remap the tables first.
    let (parents, cpts) = sort_parents(parents, cpts, &cards);
    let names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    let dag = match Dag::new(names.clone(), parents) {
        Ok(d) => d,
        Err(DagError::Cycle { witness }) => {
            return Err(BifError::Cycle {
                pos: block_pos[witness[0]],
                names: witness.iter().map(|&v| names[v].clone()).collect(),
            })
        }
        Err(e) => return Err(BifError::Network(e.into())),
    };
    let states = vars.into_iter().map(|v| v.states).collect();
    Ok(CptNetwork::new(dag, cards, states, cpts)?)
}

fn parse_variable(p: &mut Parser) -> Result<VarDecl, BifError> {
    let (name, pos) = p.word()?;
    p.punct('{')?;
    let type_pos = p.pos();
    match p.peek() {
        Some(Tok::Word(w)) if w == "type" => p.at += 1,
        Some(Tok::Word(w)) if w == "property" => {
            return p.syntax("'property' entries are not supported");
        }
        _ => return p.syntax(format!("expected 'type', found {}", p.describe())),
    }
    match p.peek() {
        Some(Tok::Word(w)) if w == "discrete" => p.at += 1,
        Some(Tok::Word(w)) if w == "continuous" => {
            return Err(BifError::Continuous {
                pos: type_pos,
                name,
            })
        }
        _ => return p.syntax(format!("expected 'discrete', found {}", p.describe())),
    }
    p.punct('[')?;
    let k_pos = p.pos();
    let (k, _) = p.word()?;
    let k: usize = k.parse().map_err(|_| BifError::Syntax {
        pos: k_pos,
        message: format!("expected a state count, found {k:?}"),
    })?;
    p.punct(']')?;
    p.punct('{')?;
    let states: Vec<String> = p.word_list('}')?.into_iter().map(|(s, _)| s).collect();
    p.punct('}')?;
    p.punct(';')?;
    if states.len() != k {
        return Err(BifError::Syntax {
            pos: k_pos,
            message: format!("{name:?} declares {k} states but lists {}", states.len()),
        });
    }
    if k < 2 {
        return Err(BifError::Syntax {
            pos: k_pos,
            message: format!("{name:?} needs at least 2 states"),
        });
    }
    if !p.peek_punct('}') {
        return p.syntax(format!(
            "unsupported variable content {}; only 'type' is accepted",
            p.describe()
        ));
    }
    p.punct('}')?;
    Ok(VarDecl { name, pos, states })
}

fn parse_probability(p: &mut Parser, pos: Pos) -> Result<ProbBlock, BifError> {
    p.punct('(')?;
    let child = p.word()?;
    let mut parents = Vec::new();
    if p.peek_punct('|') {
        p.at += 1;
        parents = p.word_list(')')?;
    }
    p.punct(')')?;
    p.punct('{')?;
    let entries = match p.peek() {
        Some(Tok::Word(w)) if w == "table" => {
            let tpos = p.pos();
            p.at += 1;
            let values = p.number_list()?;
            Entries::Table(values, tpos)
        }
        _ => {
            let mut rows = Vec::new();
            while p.peek_punct('(') {
                let rpos = p.pos();
                p.at += 1;
                let config = p.word_list(')')?;
                p.punct(')')?;
                let values = p.number_list()?;
                rows.push((config, values, rpos));
            }
            Entries::Rows(rows)
        }
    };
    if !p.peek_punct('}') {
        return p.syntax(format!("unsupported probability entry {}", p.describe()));
    }
    p.punct('}')?;
    Ok(ProbBlock {
        child,
        parents,
        entries,
        pos,
    })
}

/// Reorders each variable's parents ascending and permutes its table rows
/// to keep the first-parent-most-significant layout.
fn sort_parents(
    parents: Vec<Vec<Var>>,
    cpts: Vec<Vec<f64>>,
    cards: &[usize],
) -> (Vec<Vec<Var>>, Vec<Vec<f64>>) {
    let mut out_p = Vec::with_capacity(parents.len());
    let mut out_c = Vec::with_capacity(parents.len());
    for (v, (ps, table)) in parents.into_iter().zip(cpts).enumerate() {
        let mut sorted = ps.clone();
        sorted.sort_unstable();
        if sorted == ps {
            out_p.push(ps);
            out_c.push(table);
            continue;
        }
        let r = cards[v];
        let configs = table.len() / r;
        let mut new_table = vec![0.0; table.len()];
        for k in 0..configs {
            // decode k in the original order
            let mut rem = k;
            let mut codes = vec![0usize; ps.len()];
            for (slot, &q) in codes.iter_mut().zip(&ps).rev() {
                *slot = rem % cards[q];
                rem /= cards[q];
            }
            let mut k2 = 0;
            for &q in &sorted {
                let i = ps.iter().position(|&x| x == q).expect("same parents");
                k2 = k2 * cards[q] + codes[i];
            }
            new_table[k2 * r..(k2 + 1) * r].copy_from_slice(&table[k * r..(k + 1) * r]);
        }
        out_p.push(sorted);
        out_c.push(new_table);
    }
    (out_p, out_c)
}
