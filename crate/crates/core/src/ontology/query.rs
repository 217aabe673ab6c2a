//! SPARQL-subset SELECT: basic graph patterns, natural join on shared
//! variables, projection, dedup, deterministic row order.
//!
//! ```text
//! SELECT ?v1 ?v2 ... WHERE { t1 t2 t3 . t1 t2 t3 . ... }
//! ```
//!
//! Each pattern term is a variable (`?x`), an identifier, or a quoted
//! literal. No FILTER, OPTIONAL, prefixes, or aggregates.

use crate::store::{Bindings, PatternTerm, Term, TriplePattern, TripleStore};
use std::collections::HashSet;

/// A parsed SELECT query.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectQuery {
    variables: Vec<String>,
    patterns: Vec<TriplePattern>,
}

impl SelectQuery {
    /// Builds a query, checking every projected variable is bound by at
    /// least one pattern.
    pub fn new(
        variables: Vec<String>,
        patterns: Vec<TriplePattern>,
    ) -> Result<Self, QueryError> {
        let bound: HashSet<&str> = patterns.iter().flat_map(|p| p.variables()).collect();
        for var in &variables {
            if !bound.contains(var.as_str()) {
                return Err(QueryError::UnboundProjection(var.clone()));
            }
        }
        Ok(SelectQuery {
            variables,
            patterns,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn patterns(&self) -> &[TriplePattern] {
        &self.patterns
    }
}

/// Query results: projected variable names and deduplicated rows in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

impl ResultTable {
    /// Rows rendered in file syntax (identifiers bare, literals quoted).
    pub fn rendered_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(Term::to_string).collect())
            .collect()
    }
}

/// Evaluates the query as a natural join of per-pattern matches.
pub fn select(store: &TripleStore, query: &SelectQuery) -> Result<ResultTable, QueryError> {
    // Re-check projection in case the query was built by hand.
    let bound: HashSet<&str> = query.patterns.iter().flat_map(|p| p.variables()).collect();
    for var in &query.variables {
        if !bound.contains(var.as_str()) {
            return Err(QueryError::UnboundProjection(var.clone()));
        }
    }

    let mut partial: Vec<Bindings> = vec![Bindings::new()];
    for pattern in &query.patterns {
        let mut next = Vec::new();
        for binding in &partial {
            let narrowed = substitute(pattern, binding);
            for found in store.matches(&narrowed) {
                let mut merged = binding.clone();
                merged.extend(found);
                next.push(merged);
            }
        }
        partial = next;
    }

    let mut rows: Vec<Vec<Term>> = partial
        .iter()
        .map(|b| {
            query
                .variables
                .iter()
                .map(|v| b.get(v).expect("projection checked above").clone())
                .collect()
        })
        .collect();
    rows.sort();
    rows.dedup();
    Ok(ResultTable {
        vars: query.variables.clone(),
        rows,
    })
}

/// Replaces variables already bound upstream with their concrete terms, so
/// the store's index can narrow the scan.
fn substitute(pattern: &TriplePattern, binding: &Bindings) -> TriplePattern {
    let subst = |t: &PatternTerm| match t {
        PatternTerm::Var(name) => match binding.get(name) {
            Some(term) => PatternTerm::Term(term.clone()),
            None => t.clone(),
        },
        concrete => concrete.clone(),
    };
    TriplePattern::new(
        subst(&pattern.subject),
        subst(&pattern.predicate),
        subst(&pattern.object),
    )
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Literal(String),
    LBrace,
    RBrace,
    Dot,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, QueryError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let is_word = |b: u8| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b':' | b'-');
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'{' => {
                toks.push((i, Tok::LBrace));
                i += 1;
            }
            b'}' => {
                toks.push((i, Tok::RBrace));
                i += 1;
            }
            b'?' => {
                let start = i;
                i += 1;
                let name_start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                if i == name_start {
                    return Err(QueryError::SyntaxError {
                        position: start,
                        expected: "variable name after `?`".into(),
                    });
                }
                toks.push((start, Tok::Var(text[name_start..i].to_string())));
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut value = String::new();
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(QueryError::SyntaxError {
                                position: start,
                                expected: "closing `\"`".into(),
                            })
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => {
                            let escape = bytes.get(i + 1);
                            match escape {
                                Some(b'"') => value.push('"'),
                                Some(b'\\') => value.push('\\'),
                                Some(b'n') => value.push('\n'),
                                _ => {
                                    return Err(QueryError::SyntaxError {
                                        position: i,
                                        expected: "escape `\\\"`, `\\\\` or `\\n`".into(),
                                    })
                                }
                            }
                            i += 2;
                        }
                        Some(_) => {
                            let ch_len = text[i..].chars().next().map(char::len_utf8).unwrap_or(1);
                            value.push_str(&text[i..i + ch_len]);
                            i += ch_len;
                        }
                    }
                }
                toks.push((start, Tok::Literal(value)));
            }
            b if is_word(b) => {
                let start = i;
                while i < bytes.len() && is_word(bytes[i]) {
                    i += 1;
                }
                let mut word = &text[start..i];
                // A trailing dot run belongs to the pattern separator, not
                // the identifier: `obs1 .` and `obs1.` both end the pattern.
                let mut dots = 0;
                while word.ends_with('.') {
                    word = &word[..word.len() - 1];
                    dots += 1;
                }
                if !word.is_empty() {
                    toks.push((start, Tok::Word(word.to_string())));
                }
                for d in 0..dots {
                    toks.push((start + word.len() + d, Tok::Dot));
                }
            }
            other => {
                return Err(QueryError::SyntaxError {
                    position: i,
                    expected: format!("token, found `{}`", other as char),
                })
            }
        }
    }
    Ok(toks)
}

/// Parses the SPARQL subset.
pub fn parse_select(text: &str) -> Result<SelectQuery, QueryError> {
    let toks = lex(text)?;
    let mut pos = 0;
    let position = |pos: usize| toks.get(pos).map(|(p, _)| *p).unwrap_or(text.len());
    let err = |pos: usize, expected: &str| QueryError::SyntaxError {
        position: position(pos),
        expected: expected.to_string(),
    };

    match toks.get(pos) {
        Some((_, Tok::Word(w))) if w == "SELECT" => pos += 1,
        _ => return Err(err(pos, "`SELECT`")),
    }

    let mut variables = Vec::new();
    while let Some((_, Tok::Var(name))) = toks.get(pos) {
        variables.push(name.clone());
        pos += 1;
    }
    if variables.is_empty() {
        return Err(err(pos, "at least one projected variable"));
    }

    match toks.get(pos) {
        Some((_, Tok::Word(w))) if w == "WHERE" => pos += 1,
        _ => return Err(err(pos, "`WHERE`")),
    }
    match toks.get(pos) {
        Some((_, Tok::LBrace)) => pos += 1,
        _ => return Err(err(pos, "`{`")),
    }

    let mut patterns = Vec::new();
    loop {
        if let Some((_, Tok::RBrace)) = toks.get(pos) {
            pos += 1;
            break;
        }
        let mut terms = Vec::new();
        for _ in 0..3 {
            let term = match toks.get(pos) {
                Some((_, Tok::Var(name))) => PatternTerm::Var(name.clone()),
                Some((_, Tok::Word(w))) => PatternTerm::Term(Term::id(w.clone())),
                Some((_, Tok::Literal(l))) => PatternTerm::Term(Term::literal(l.clone())),
                _ => return Err(err(pos, "pattern term")),
            };
            terms.push(term);
            pos += 1;
        }
        let object = terms.pop().expect("three terms read");
        let predicate = terms.pop().expect("three terms read");
        let subject = terms.pop().expect("three terms read");
        patterns.push(TriplePattern::new(subject, predicate, object));
        // `.` separates patterns and is optional before `}`.
        if let Some((_, Tok::Dot)) = toks.get(pos) {
            pos += 1;
        } else if !matches!(toks.get(pos), Some((_, Tok::RBrace))) {
            return Err(err(pos, "`.` or `}`"));
        }
    }

    if pos != toks.len() {
        return Err(err(pos, "end of query"));
    }
    SelectQuery::new(variables, patterns)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("syntax error at byte {position}: expected {expected}")]
    SyntaxError { position: usize, expected: String },
    #[error("projected variable `?{0}` is not bound by any pattern")]
    UnboundProjection(String),
}
