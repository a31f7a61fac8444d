//! Reader for the subset of the MATPOWER `.m` case format needed by the
//! OPF formulation: `baseMVA`, `bus`, `gen`, `branch`, `gencost`.
//!
//! Half of each branch's line-charging susceptance is folded into the
//! shunt of both endpoints, so the rest of the crate only ever sees a
//! series admittance per line. Parallel branches are merged, and several
//! generators on one bus are aggregated (bounds and cost polynomials
//! summed).

use std::collections::HashMap;

use num_complex::Complex64;

use super::{Bus, CostPoly, Line, Network, ParseOptions};
use crate::error::ParseError;

/// Metadata fields that may appear in a case but carry nothing the
/// formulation uses.
const IGNORED_FIELDS: &[&str] = &["version", "areas", "bus_name", "gentype", "genfuel"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str,
    Eq,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Newline,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            })
        };
        match c {
            '\n' => {
                push(&mut out, Tok::Newline);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '%' | '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '.' if i + 2 < chars.len() && chars[i + 1] == '.' && chars[i + 2] == '.' => {
                // continuation: skip to the end of the line including the newline
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '=' => push(&mut out, Tok::Eq),
            '[' => push(&mut out, Tok::LBracket),
            ']' => push(&mut out, Tok::RBracket),
            '{' => push(&mut out, Tok::LBrace),
            '}' => push(&mut out, Tok::RBrace),
            ';' => push(&mut out, Tok::Semi),
            ',' => push(&mut out, Tok::Comma),
            '\'' | '"' => {
                let quote = c;
                let mut j = i + 1;
                while j < chars.len() && chars[j] != quote {
                    if chars[j] == '\n' {
                        return Err(syntax(tl, tc, "unterminated string"));
                    }
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(syntax(tl, tc, "unterminated string"));
                }
                push(&mut out, Tok::Str);
                col += j + 1 - i;
                i = j + 1;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '.')
                {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match word.as_str() {
                    "Inf" | "inf" => Tok::Num(f64::INFINITY),
                    "NaN" | "nan" => Tok::Num(f64::NAN),
                    _ => Tok::Ident(word),
                };
                push(&mut out, tok);
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                let mut j = i;
                if chars[j] == '-' || chars[j] == '+' {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'I' || chars[j] == 'i') {
                    let word: String = chars[j..(j + 3).min(chars.len())].iter().collect();
                    if word.eq_ignore_ascii_case("inf") {
                        let v = if c == '-' { f64::NEG_INFINITY } else { f64::INFINITY };
                        push(&mut out, Tok::Num(v));
                        col += j + 3 - i;
                        i = j + 3;
                        continue;
                    }
                }
                let start = j;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    j += 1;
                    if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                        j += 1;
                    }
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j == start {
                    return Err(syntax(tl, tc, format!("unexpected character `{c}`")));
                }
                let lit: String = chars[i..j].iter().collect();
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(tl, tc, format!("malformed number `{lit}`")))?;
                push(&mut out, Tok::Num(v));
                col += j - i;
                i = j;
                continue;
            }
            other => return Err(syntax(tl, tc, format!("unexpected character `{other}`"))),
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

enum Value {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    Other,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    last: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if let Some(t) = &t {
            self.last = (t.line, t.column);
        }
        self.pos += 1;
        t
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.last, |t| (t.line, t.column))
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline) | Some(Tok::Semi) | Some(Tok::Comma)) {
            self.pos += 1;
        }
    }

    fn skip_line(&mut self) {
        while let Some(t) = self.peek() {
            if *t == Tok::Newline {
                break;
            }
            self.pos += 1;
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.next().map(|t| t.tok) {
            Some(Tok::Num(v)) => Ok(Value::Scalar(v)),
            Some(Tok::Str) => Ok(Value::Other),
            Some(Tok::LBracket) => self.matrix().map(Value::Matrix),
            Some(Tok::LBrace) => {
                let mut depth = 1;
                while depth > 0 {
                    match self.next().map(|t| t.tok) {
                        Some(Tok::LBrace) => depth += 1,
                        Some(Tok::RBrace) => depth -= 1,
                        None => return Err(self.err("unterminated cell array")),
                        _ => {}
                    }
                }
                Ok(Value::Other)
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected a value"))
            }
        }
    }

    fn matrix(&mut self) -> Result<Vec<Vec<f64>>, ParseError> {
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            let tok = self.next().ok_or_else(|| self.err("unterminated matrix"))?;
            match tok.tok {
                Tok::Num(v) => row.push(v),
                Tok::Comma => {}
                Tok::Semi | Tok::Newline => {
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Tok::RBracket => {
                    if !row.is_empty() {
                        rows.push(row);
                    }
                    return Ok(rows);
                }
                _ => {
                    return Err(syntax(tok.line, tok.column, "unexpected token in matrix"));
                }
            }
        }
    }
}

struct Raw {
    base_mva: Option<f64>,
    bus: Option<Vec<Vec<f64>>>,
    gen: Option<Vec<Vec<f64>>>,
    branch: Option<Vec<Vec<f64>>>,
    gencost: Option<Vec<Vec<f64>>>,
}

fn read_statements(text: &str) -> Result<Raw, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        last: (1, 1),
    };
    let mut raw = Raw {
        base_mva: None,
        bus: None,
        gen: None,
        branch: None,
        gencost: None,
    };
    let mut prefix: Option<String> = None;
    loop {
        p.skip_newlines();
        let Some(tok) = p.next() else { break };
        let Tok::Ident(name) = tok.tok else {
            return Err(syntax(tok.line, tok.column, "expected a statement"));
        };
        if name == "function" {
            // function mpc = caseN
            match (p.next().map(|t| t.tok), p.peek()) {
                (Some(Tok::Ident(out)), Some(Tok::Eq)) => prefix = Some(out),
                _ => return Err(p.err("malformed function header")),
            }
            p.skip_line();
            continue;
        }
        let field = match name.split_once('.') {
            Some((head, field)) if prefix.as_deref().map_or(true, |pre| pre == head) => {
                field.to_string()
            }
            _ => {
                return Err(ParseError::Unsupported {
                    field: name,
                    reason: "only `mpc.<field> = ...` assignments are supported".into(),
                })
            }
        };
        if p.next().map(|t| t.tok) != Some(Tok::Eq) {
            return Err(p.err(format!("expected `=` after `{name}`")));
        }
        let value = p.value()?;
        match (field.as_str(), value) {
            ("baseMVA", Value::Scalar(v)) => raw.base_mva = Some(v),
            ("bus", Value::Matrix(m)) => raw.bus = Some(m),
            ("gen", Value::Matrix(m)) => raw.gen = Some(m),
            ("branch", Value::Matrix(m)) => raw.branch = Some(m),
            ("gencost", Value::Matrix(m)) => raw.gencost = Some(m),
            (f, _) if IGNORED_FIELDS.contains(&f) => {}
            (f @ ("baseMVA" | "bus" | "gen" | "branch" | "gencost"), _) => {
                return Err(p.err(format!("field `{f}` has the wrong shape")));
            }
            (f, _) => {
                return Err(ParseError::Unsupported {
                    field: f.to_string(),
                    reason: "not part of the supported case subset".into(),
                })
            }
        }
    }
    Ok(raw)
}

fn need_cols(table: &str, rows: &[Vec<f64>], cols: usize) -> Result<(), ParseError> {
    match rows.iter().position(|r| r.len() < cols) {
        Some(i) => Err(ParseError::Unsupported {
            field: table.into(),
            reason: format!("row {} has {} columns, need at least {cols}", i + 1, rows[i].len()),
        }),
        None => Ok(()),
    }
}

fn finite(table: &str, column: &str, v: f64) -> Result<f64, ParseError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::Unsupported {
            field: format!("{table}.{column}"),
            reason: format!("non-finite value {v}"),
        })
    }
}

/// Parse MATPOWER case text into a per-unit [`Network`].
pub fn parse_matpower(text: &str, options: ParseOptions) -> Result<Network, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let raw = read_statements(text)?;
    let base = raw.base_mva.ok_or_else(|| ParseError::Missing("baseMVA".into()))?;
    let bus_rows = raw.bus.ok_or_else(|| ParseError::Missing("bus".into()))?;
    let gen_rows = raw.gen.unwrap_or_default();
    let branch_rows = raw.branch.ok_or_else(|| ParseError::Missing("branch".into()))?;
    let cost_rows = raw.gencost.unwrap_or_default();
    need_cols("bus", &bus_rows, 13)?;
    need_cols("gen", &gen_rows, 10)?;
    need_cols("branch", &branch_rows, 11)?;

    let mut index = HashMap::new();
    let mut buses = Vec::new();
    for row in &bus_rows {
        // type 4 marks an isolated bus
        if row[1] as i64 == 4 {
            continue;
        }
        let ext = row[0] as i64;
        let id = buses.len();
        if index.insert(ext, id).is_some() {
            return Err(ParseError::Reference {
                field: "bus.bus_i".into(),
                message: format!("duplicate bus number {ext}"),
            });
        }
        buses.push(Bus {
            id,
            ext_id: ext,
            pd: finite("bus", "Pd", row[2])? / base,
            qd: finite("bus", "Qd", row[3])? / base,
            pg_min: 0.0,
            pg_max: 0.0,
            qg_min: 0.0,
            qg_max: 0.0,
            v_min: finite("bus", "Vmin", row[12])?,
            v_max: finite("bus", "Vmax", row[11])?,
            shunt: Complex64::new(
                finite("bus", "Gs", row[4])? / base,
                finite("bus", "Bs", row[5])? / base,
            ),
            cost: None,
        });
    }

    let active_gens: Vec<usize> = (0..gen_rows.len()).filter(|&g| gen_rows[g][7] > 0.0).collect();
    if !cost_rows.is_empty() && cost_rows.len() != gen_rows.len() {
        return Err(ParseError::Unsupported {
            field: "gencost".into(),
            reason: format!(
                "expected one row per generator ({}), found {} (reactive costs are not supported)",
                gen_rows.len(),
                cost_rows.len()
            ),
        });
    }
    for &g in &active_gens {
        let row = &gen_rows[g];
        let ext = row[0] as i64;
        let Some(&b) = index.get(&ext) else {
            return Err(ParseError::Reference {
                field: "gen.bus".into(),
                message: format!("generator {} sits on unknown bus {ext}", g + 1),
            });
        };
        let cost = match cost_rows.get(g) {
            Some(c) => poly_cost(c, g)?,
            None => CostPoly { c2: 0.0, c1: 0.0, c0: 0.0 },
        };
        let bus = &mut buses[b];
        let first = bus.cost.is_none();
        bus.pg_min += finite("gen", "Pmin", row[9])? / base;
        bus.pg_max += finite("gen", "Pmax", row[8])? / base;
        bus.qg_min += finite("gen", "Qmin", row[4])? / base;
        bus.qg_max += finite("gen", "Qmax", row[3])? / base;
        bus.cost = Some(if first { cost } else { bus.cost.unwrap().add(&cost) });
    }

    let mut lines: Vec<Line> = Vec::new();
    for (k, row) in branch_rows.iter().enumerate() {
        if row[10] <= 0.0 {
            continue;
        }
        let (fe, te) = (row[0] as i64, row[1] as i64);
        let (Some(&from), Some(&to)) = (index.get(&fe), index.get(&te)) else {
            if bus_rows.iter().any(|r| r[0] as i64 == fe || r[0] as i64 == te) {
                // touches an isolated bus
                continue;
            }
            return Err(ParseError::Reference {
                field: "branch".into(),
                message: format!("branch {} references unknown bus", k + 1),
            });
        };
        let ratio = row[8];
        let shift = row[9];
        if !options.ignore_taps && ((ratio != 0.0 && ratio != 1.0) || shift != 0.0) {
            return Err(ParseError::Unsupported {
                field: "branch.ratio".into(),
                reason: format!(
                    "branch {} ({fe}-{te}) has tap ratio {ratio} / shift {shift}; transformers are not modelled",
                    k + 1
                ),
            });
        }
        let z = Complex64::new(finite("branch", "r", row[2])?, finite("branch", "x", row[3])?);
        if z.norm() == 0.0 {
            return Err(ParseError::Unsupported {
                field: "branch.x".into(),
                reason: format!("branch {} has zero impedance", k + 1),
            });
        }
        let y = z.inv();
        let charging = finite("branch", "b", row[4])?;
        buses[from].shunt.im += charging / 2.0;
        buses[to].shunt.im += charging / 2.0;
        let rate = finite("branch", "rateA", row[5])?;
        let rating = (rate > 0.0).then_some(rate / base);
        if let Some(existing) = lines
            .iter_mut()
            .find(|l| (l.from == from && l.to == to) || (l.from == to && l.to == from))
        {
            existing.y += y;
            existing.rating = match (existing.rating, rating) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
        } else {
            lines.push(Line {
                from,
                to,
                y,
                rating,
                i_max: None,
                s_max: None,
                p_max: None,
            });
        }
    }

    Ok(Network {
        base_mva: base,
        buses,
        lines,
    })
}

fn poly_cost(row: &[f64], g: usize) -> Result<CostPoly, ParseError> {
    let field = || "gencost".to_string();
    if row.len() < 4 || row[0] as i64 != 2 {
        return Err(ParseError::Unsupported {
            field: field(),
            reason: format!("generator {}: only polynomial cost model 2 is supported", g + 1),
        });
    }
    let n = row[3] as usize;
    if n > 3 {
        return Err(ParseError::Unsupported {
            field: field(),
            reason: format!("generator {}: polynomial degree {} exceeds 2", g + 1, n - 1),
        });
    }
    if row.len() < 4 + n {
        return Err(ParseError::Unsupported {
            field: field(),
            reason: format!("generator {}: expected {n} coefficients", g + 1),
        });
    }
    // coefficients are listed highest order first
    let mut c = [0.0; 3];
    for (k, &v) in row[4..4 + n].iter().rev().enumerate() {
        c[k] = v;
    }
    Ok(CostPoly {
        c2: c[2],
        c1: c[1],
        c0: c[0],
    })
}
