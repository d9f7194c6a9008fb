//! Reader and writer for the discrete subset of the BIF network format.
//!
//! Supported: `network`, `variable` blocks with `type discrete [ n ] { ... }`,
//! and `probability` blocks with either per-configuration rows
//! `(s1, s2) p, q;` or a flat `table`. A flat table lists the rows one after
//! another, parent configurations ordered with the last parent varying
//! fastest. `property` statements are skipped. Comments use `//` and
//! `/* */`.

use std::collections::HashMap;
use std::fmt::Write;

use super::BayesNet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '+' | '"' | '\'')
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
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
        if c.is_whitespace() {
            advance(c, &mut line, &mut col);
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(Error::Syntax {
                        line: l0,
                        col: c0,
                        expected: "end of comment".into(),
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
        } else if "{}()[];,|".contains(c) {
            out.push(Token {
                tok: Tok::Punct(c),
                line,
                col,
            });
            i += 1;
            col += 1;
        } else if is_word_char(c) {
            let (l0, c0) = (line, col);
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
                col += 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Word(word.trim_matches(|c| c == '"' || c == '\'').to_string()),
                line: l0,
                col: c0,
            });
        } else {
            return Err(Error::Syntax {
                line,
                col,
                expected: format!("token, found `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn err<T>(&self, expected: &str) -> Result<T> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.col));
        Err(Error::Syntax {
            line,
            col,
            expected: expected.to_string(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn punct(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("`{c}`"))
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(what),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(&format!("`{kw}`")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Word(w)) => match w.parse::<f64>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                Err(_) => self.err("number"),
            },
            _ => self.err("number"),
        }
    }

    fn skip_statement(&mut self) -> Result<()> {
        while self.peek().is_some() {
            if self.eat_punct(';') {
                return Ok(());
            }
            self.pos += 1;
        }
        self.err("`;`")
    }

    /// Comma-separated list closed by `close`.
    fn list(&mut self, close: char, what: &str) -> Result<Vec<String>> {
        let mut items = vec![self.word(what)?];
        while self.eat_punct(',') {
            items.push(self.word(what)?);
        }
        self.punct(close)?;
        Ok(items)
    }

    fn numbers(&mut self) -> Result<Vec<f64>> {
        let mut v = vec![self.number()?];
        while self.eat_punct(',') {
            v.push(self.number()?);
        }
        self.punct(';')?;
        Ok(v)
    }
}

struct VarDecl {
    name: String,
    states: Vec<String>,
}

struct ProbDecl {
    child: String,
    parents: Vec<String>,
    rows: HashMap<Vec<String>, Vec<f64>>,
    table: Option<Vec<f64>>,
    default: Option<Vec<f64>>,
}

pub fn parse_bif(text: &str) -> Result<BayesNet> {
    let toks = tokenize(text)?;
    let lines: Vec<&str> = text.lines().collect();
    let end = (lines.len().max(1), lines.last().map_or(1, |l| l.len() + 1));
    let mut p = Parser { toks, pos: 0, end };
    let mut name = String::from("unknown");
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut probs: Vec<ProbDecl> = Vec::new();

    while let Some(tok) = p.peek().cloned() {
        match tok {
            Tok::Word(w) if w == "network" => {
                p.pos += 1;
                name = p.word("network name")?;
                p.punct('{')?;
                while !p.eat_punct('}') {
                    if p.peek().is_none() {
                        return p.err("`}`");
                    }
                    p.skip_statement()?;
                }
            }
            Tok::Word(w) if w == "variable" => {
                p.pos += 1;
                let vname = p.word("variable name")?;
                p.punct('{')?;
                let mut states = None;
                while !p.eat_punct('}') {
                    match p.peek() {
                        Some(Tok::Word(w)) if w == "type" => {
                            p.pos += 1;
                            p.keyword("discrete")?;
                            p.punct('[')?;
                            let n = p.number()?;
                            p.punct(']')?;
                            p.punct('{')?;
                            let s = p.list('}', "state name")?;
                            p.punct(';')?;
                            if s.len() as f64 != n {
                                return p.err(&format!("{n} states for `{vname}`"));
                            }
                            states = Some(s);
                        }
                        Some(_) => p.skip_statement()?,
                        None => return p.err("`}`"),
                    }
                }
                let Some(states) = states else {
                    return p.err(&format!("type declaration for `{vname}`"));
                };
                vars.push(VarDecl {
                    name: vname,
                    states,
                });
            }
            Tok::Word(w) if w == "probability" => {
                p.pos += 1;
                p.punct('(')?;
                let child = p.word("variable name")?;
                let mut parents = Vec::new();
                if p.eat_punct('|') {
                    parents = p.list(')', "parent name")?;
                } else {
                    p.punct(')')?;
                }
                p.punct('{')?;
                let mut decl = ProbDecl {
                    child,
                    parents,
                    rows: HashMap::new(),
                    table: None,
                    default: None,
                };
                while !p.eat_punct('}') {
                    match p.peek() {
                        Some(Tok::Punct('(')) => {
                            p.pos += 1;
                            let cfg = p.list(')', "state name")?;
                            let row = p.numbers()?;
                            decl.rows.insert(cfg, row);
                        }
                        Some(Tok::Word(w)) if w == "table" => {
                            p.pos += 1;
                            decl.table = Some(p.numbers()?);
                        }
                        Some(Tok::Word(w)) if w == "default" => {
                            p.pos += 1;
                            decl.default = Some(p.numbers()?);
                        }
                        Some(Tok::Word(w)) if w == "property" => p.skip_statement()?,
                        Some(_) => return p.err("probability row, `table` or `}`"),
                        None => return p.err("`}`"),
                    }
                }
                probs.push(decl);
            }
            _ => return p.err("`network`, `variable` or `probability`"),
        }
    }

    assemble(name, vars, probs)
}

fn assemble(name: String, vars: Vec<VarDecl>, probs: Vec<ProbDecl>) -> Result<BayesNet> {
    let index: HashMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut by_child: Vec<Option<&ProbDecl>> = vec![None; vars.len()];
    for pd in &probs {
        let &c = index
            .get(pd.child.as_str())
            .ok_or_else(|| Error::UnknownVariable(pd.child.clone()))?;
        for par in &pd.parents {
            if !index.contains_key(par.as_str()) {
                return Err(Error::UnknownVariable(par.clone()));
            }
        }
        by_child[c] = Some(pd);
    }

    let mut cpts = Vec::with_capacity(vars.len());
    for (v, decl) in vars.iter().enumerate() {
        let Some(pd) = by_child[v] else {
            return Err(Error::MissingCptRow {
                node: decl.name.clone(),
                config: vec![],
            });
        };
        let par_idx: Vec<usize> = pd.parents.iter().map(|p| index[p.as_str()]).collect();
        let arities: Vec<usize> = par_idx.iter().map(|&i| vars[i].states.len()).collect();
        let n_rows: usize = arities.iter().product();
        let k = decl.states.len();
        let mut rows = Vec::with_capacity(n_rows);
        for r in 0..n_rows {
            let mut cfg = vec![0usize; arities.len()];
            let mut rem = r;
            for (slot, &a) in cfg.iter_mut().zip(&arities).rev() {
                *slot = rem % a;
                rem /= a;
            }
            let key: Vec<String> = cfg
                .iter()
                .zip(&par_idx)
                .map(|(&s, &pi)| vars[pi].states[s].clone())
                .collect();
            let row = if let Some(row) = pd.rows.get(&key) {
                row.clone()
            } else if let Some(t) = &pd.table {
                t.get(r * k..(r + 1) * k)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| Error::MissingCptRow {
                        node: decl.name.clone(),
                        config: cfg.clone(),
                    })?
            } else if let Some(d) = &pd.default {
                d.clone()
            } else {
                return Err(Error::MissingCptRow {
                    node: decl.name.clone(),
                    config: cfg,
                });
            };
            rows.push(row);
        }
        for key in pd.rows.keys() {
            for (s, &pi) in key.iter().zip(&par_idx) {
                if !vars[pi].states.contains(s) {
                    return Err(Error::UnknownVariable(format!("{}={s}", vars[pi].name)));
                }
            }
        }
        cpts.push((pd.parents.iter().map(String::as_str).collect(), rows));
    }
    let nodes: Vec<&str> = vars.iter().map(|v| v.name.as_str()).collect();
    let states = vars.iter().map(|v| v.states.clone()).collect();
    BayesNet::new(name, &nodes, states, cpts, &[])
}

/// Emits the network in the same subset; root nodes use `table`, others one
/// row per parent configuration.
pub fn write_bif(net: &BayesNet) -> String {
    let dag = net.dag();
    let mut s = String::new();
    writeln!(s, "network {} {{\n}}", net.name).unwrap();
    for v in 0..net.len() {
        writeln!(
            s,
            "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}",
            dag.name(v),
            net.arity(v),
            net.states(v).join(", ")
        )
        .unwrap();
    }
    let nums = |row: &[f64]| {
        row.iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    };
    for v in 0..net.len() {
        let cpt = net.cpt(v);
        if cpt.parents.is_empty() {
            writeln!(
                s,
                "probability ( {} ) {{\n  table {};\n}}",
                dag.name(v),
                nums(&cpt.rows[0])
            )
            .unwrap();
            continue;
        }
        let parents: Vec<&str> = cpt.parents.iter().map(|&p| dag.name(p)).collect();
        writeln!(
            s,
            "probability ( {} | {} ) {{",
            dag.name(v),
            parents.join(", ")
        )
        .unwrap();
        for (r, row) in cpt.rows.iter().enumerate() {
            let cfg: Vec<&str> = net
                .config_of(v, r)
                .iter()
                .zip(&cpt.parents)
                .map(|(&st, &p)| net.states(p)[st].as_str())
                .collect();
            writeln!(s, "  ({}) {};", cfg.join(", "), nums(row)).unwrap();
        }
        writeln!(s, "}}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"
network pair {
}
// two binary variables
variable A {
  type discrete [ 2 ] { yes, no };
}
variable B {
  type discrete [ 2 ] { on, off };
  property weight 1;
}
probability ( A ) {
  table 0.3, 0.7;
}
probability ( B | A ) {
  (yes) 0.9, 0.1;
  (no) 0.2, 0.8;
}
"#;

    #[test]
    fn parses_two_node_network() {
        let net = parse_bif(PAIR).unwrap();
        assert_eq!(net.name, "pair");
        assert_eq!(net.dag().parents("B").unwrap(), vec!["A"]);
        assert_eq!(net.cpt(0).rows, vec![vec![0.3, 0.7]]);
        assert_eq!(net.cpt(1).rows, vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        assert_eq!(net.states(1), ["on", "off"]);
    }

    #[test]
    fn row_sum_violation() {
        let bad = PAIR.replace("0.9, 0.1", "0.8, 0.1");
        match parse_bif(&bad).unwrap_err() {
            Error::RowSumViolation { node, config, sum } => {
                assert_eq!(node, "B");
                assert_eq!(config, vec![0]);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn missing_row_and_unknown_variable() {
        let bad = PAIR.replace("  (no) 0.2, 0.8;\n", "");
        assert_eq!(
            parse_bif(&bad).unwrap_err(),
            Error::MissingCptRow {
                node: "B".into(),
                config: vec![1]
            }
        );
        let bad = PAIR.replace("( B | A )", "( B | Q )");
        assert_eq!(parse_bif(&bad).unwrap_err(), Error::UnknownVariable("Q".into()));
    }

    #[test]
    fn syntax_error_carries_position() {
        let bad = PAIR.replace("table 0.3, 0.7;", "table 0.3 0.7;");
        match parse_bif(&bad).unwrap_err() {
            Error::Syntax { line, col, .. } => {
                assert_eq!(line, 13);
                assert_eq!(col, 13);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn flat_table_for_conditional() {
        let flat = PAIR.replace(
            "  (yes) 0.9, 0.1;\n  (no) 0.2, 0.8;\n",
            "  table 0.9, 0.1, 0.2, 0.8;\n",
        );
        assert_eq!(parse_bif(&flat).unwrap(), parse_bif(PAIR).unwrap());
    }

    #[test]
    fn write_then_parse() {
        let net = parse_bif(PAIR).unwrap();
        let text = write_bif(&net);
        assert_eq!(parse_bif(&text).unwrap(), net);
        assert_eq!(write_bif(&parse_bif(&text).unwrap()), text);
    }
}
