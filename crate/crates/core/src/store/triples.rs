//! Triple store with set semantics, insertion-order iteration and
//! index-accelerated pattern matching.

use super::StoreError;
use indexmap::IndexSet;
use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

/// A concrete term: a bare identifier (or IRI-like name) or a quoted literal.
/// The two kinds never compare equal, so `"High"` and `High` are distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Id(String),
    Literal(String),
}

impl Term {
    pub fn id(s: impl Into<String>) -> Self {
        Term::Id(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal(s.into())
    }

    pub fn text(&self) -> &str {
        match self {
            Term::Id(s) | Term::Literal(s) => s,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }
}

impl fmt::Display for Term {
    /// Renders the term in file syntax: identifiers bare, literals quoted
    /// with `"` , `\` and newlines escaped.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Id(s) => f.write_str(s),
            Term::Literal(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// An atomic subject-predicate-object statement. Subject and predicate are
/// identifiers; only the object may be a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: String,
    predicate: String,
    object: Term,
}

/// Owned (subject, predicate, object) view used by tests and callers that
/// need plain tuples.
pub type TripleKey = (String, String, Term);

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: Term,
    ) -> Result<Self, StoreError> {
        let subject = subject.into();
        let predicate = predicate.into();
        for (name, value) in [("subject", &subject), ("predicate", &predicate)] {
            if value.is_empty() {
                return Err(StoreError::CorruptFile {
                    line: 0,
                    reason: format!("{name} must not be empty"),
                });
            }
        }
        if object.text().is_empty() && !object.is_literal() {
            return Err(StoreError::CorruptFile {
                line: 0,
                reason: "object must not be empty".into(),
            });
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// One position of a triple pattern: a variable (`?name`) or a concrete term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn id(s: impl Into<String>) -> Self {
        PatternTerm::Term(Term::id(s))
    }

    pub fn literal(s: impl Into<String>) -> Self {
        PatternTerm::Term(Term::literal(s))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

/// Query pattern over the store; all-variable patterns are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(|t| t.as_var())
    }
}

/// Variable assignments produced by a single pattern match. Concrete-only
/// patterns yield an empty binding per matching triple.
pub type Bindings = HashMap<String, Term>;

/// In-memory triple store. Insertion order is preserved so query results and
/// persisted files are deterministic.
#[derive(Debug, Default, Clone)]
pub struct TripleStore {
    triples: IndexSet<Triple>,
    by_subject: HashMap<String, Vec<usize>>,
    by_predicate: HashMap<String, Vec<usize>>,
}

impl TripleStore {
    pub fn new() -> Self {
        TripleStore::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    /// Inserts with set semantics; returns true iff the triple was new.
    pub fn insert(&mut self, t: Triple) -> bool {
        let (index, inserted) = self.triples.insert_full(t);
        if inserted {
            let t = self.triples.get_index(index).expect("just inserted");
            self.by_subject
                .entry(t.subject().to_string())
                .or_default()
                .push(index);
            self.by_predicate
                .entry(t.predicate().to_string())
                .or_default()
                .push(index);
        }
        inserted
    }

    pub fn insert_all(&mut self, triples: impl IntoIterator<Item = Triple>) -> usize {
        triples.into_iter().filter(|t| self.insert(t.clone())).count()
    }

    /// Candidate triples for a pattern, narrowed by the most selective of the
    /// subject and predicate indexes. Always in insertion order.
    fn candidates(&self, p: &TriplePattern) -> Vec<usize> {
        let by_s = match &p.subject {
            PatternTerm::Term(Term::Id(s)) => Some(self.by_subject.get(s)),
            _ => None,
        };
        let by_p = match &p.predicate {
            PatternTerm::Term(Term::Id(s)) => Some(self.by_predicate.get(s)),
            _ => None,
        };
        match (by_s, by_p) {
            // A concrete subject/predicate with no index entry matches nothing.
            (Some(None), _) | (_, Some(None)) => Vec::new(),
            (Some(Some(s)), Some(Some(p))) => {
                if s.len() <= p.len() {
                    s.clone()
                } else {
                    p.clone()
                }
            }
            (Some(Some(s)), None) => s.clone(),
            (None, Some(Some(p))) => p.clone(),
            (None, None) => (0..self.triples.len()).collect(),
        }
    }

    /// Returns one binding map per matching triple, in insertion order.
    pub fn matches(&self, p: &TriplePattern) -> Vec<Bindings> {
        let mut out = Vec::new();
        for index in self.candidates(p) {
            let t = self.triples.get_index(index).expect("index valid");
            if let Some(b) = match_triple(t, p) {
                out.push(b);
            }
        }
        out
    }

    /// Serializes to one `subject predicate object .` line per triple.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        write_atomic(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn from_text(text: &str) -> Result<Self, StoreError> {
        let mut store = TripleStore::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let corrupt = |reason: String| StoreError::CorruptFile {
                line: line_no,
                reason,
            };
            let body = line
                .strip_suffix('.')
                .ok_or_else(|| corrupt("missing terminal `.`".into()))?
                .trim_end();
            let mut terms = Vec::new();
            let mut rest = body;
            while !rest.is_empty() {
                let (term, tail) = read_term(rest).map_err(&corrupt)?;
                terms.push(term);
                rest = tail.trim_start();
            }
            if terms.len() != 3 {
                return Err(corrupt(format!("expected 3 terms, found {}", terms.len())));
            }
            let object = terms.pop().expect("len checked");
            let predicate = terms.pop().expect("len checked");
            let subject = terms.pop().expect("len checked");
            let (subject, predicate) = match (subject, predicate) {
                (Term::Id(s), Term::Id(p)) => (s, p),
                _ => return Err(corrupt("subject and predicate must be identifiers".into())),
            };
            let triple = Triple::new(subject, predicate, object)
                .map_err(|e| corrupt(e.to_string()))?;
            store.insert(triple);
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Matches one triple against one pattern, binding variables. A variable
/// repeated within the pattern must bind to the same term each time.
fn match_triple(t: &Triple, p: &TriplePattern) -> Option<Bindings> {
    let mut bindings = Bindings::new();
    let positions = [
        (&p.subject, Term::Id(t.subject().to_string())),
        (&p.predicate, Term::Id(t.predicate().to_string())),
        (&p.object, t.object().clone()),
    ];
    for (pattern, actual) in positions {
        match pattern {
            PatternTerm::Term(expected) => {
                if *expected != actual {
                    return None;
                }
            }
            PatternTerm::Var(name) => match bindings.get(name) {
                Some(bound) if *bound != actual => return None,
                Some(_) => {}
                None => {
                    bindings.insert(name.clone(), actual);
                }
            },
        }
    }
    Some(bindings)
}

/// Reads one term from the head of `input`, returning the remainder.
fn read_term(input: &str) -> Result<(Term, &str), String> {
    if let Some(rest) = input.strip_prefix('"') {
        let mut text = String::new();
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some((_, '"')) => text.push('"'),
                    Some((_, '\\')) => text.push('\\'),
                    Some((_, 'n')) => text.push('\n'),
                    Some((_, other)) => return Err(format!("unknown escape `\\{other}`")),
                    None => return Err("unterminated escape".into()),
                },
                '"' => return Ok((Term::Literal(text), &rest[i + 1..])),
                c => text.push(c),
            }
        }
        Err("unterminated literal".into())
    } else {
        let end = input
            .find(char::is_whitespace)
            .unwrap_or(input.len());
        if end == 0 {
            return Err("empty term".into());
        }
        Ok((Term::Id(input[..end].to_string()), &input[end..]))
    }
}

/// Writes via a temp file + rename so readers never observe partial content.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: Term) -> Triple {
        Triple::new(s, p, o).unwrap()
    }

    #[test]
    fn insert_has_set_semantics() {
        let mut store = TripleStore::new();
        assert!(store.insert(t("ws1", "rdf:type", Term::id("ssn:Sensor"))));
        assert!(!store.insert(t("ws1", "rdf:type", Term::id("ssn:Sensor"))));
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn literal_and_identifier_objects_are_distinct() {
        let mut store = TripleStore::new();
        assert!(store.insert(t("obs1", "ssn:hasValue", Term::literal("31.0"))));
        assert!(store.insert(t("obs1", "ssn:hasValue", Term::id("31.0"))));
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn match_with_variable() {
        let mut store = TripleStore::new();
        store.insert(t("s1", "rdf:type", Term::id("ssn:Sensor")));
        store.insert(t("s2", "rdf:type", Term::id("ikon:LivingThings")));
        let pattern = TriplePattern::new(
            PatternTerm::var("x"),
            PatternTerm::id("rdf:type"),
            PatternTerm::id("ssn:Sensor"),
        );
        let result = store.matches(&pattern);
        assert_eq!(result.len(), 1);
        assert_eq!(result[0]["x"], Term::id("s1"));
    }

    #[test]
    fn all_variable_pattern_scans_everything() {
        let mut store = TripleStore::new();
        store.insert(t("s1", "rdf:type", Term::id("ssn:Sensor")));
        store.insert(t("s2", "rdf:type", Term::id("ikon:LivingThings")));
        let pattern = TriplePattern::new(
            PatternTerm::var("s"),
            PatternTerm::var("p"),
            PatternTerm::var("o"),
        );
        assert_eq!(store.matches(&pattern).len(), 2);
    }

    #[test]
    fn concrete_pattern_yields_empty_binding() {
        let mut store = TripleStore::new();
        store.insert(t("s1", "rdf:type", Term::id("ssn:Sensor")));
        let pattern = TriplePattern::new(
            PatternTerm::id("s1"),
            PatternTerm::id("rdf:type"),
            PatternTerm::id("ssn:Sensor"),
        );
        let result = store.matches(&pattern);
        assert_eq!(result, vec![Bindings::new()]);
    }

    #[test]
    fn repeated_variable_must_agree() {
        let mut store = TripleStore::new();
        store.insert(t("a", "links", Term::id("a")));
        store.insert(t("a", "links", Term::id("b")));
        let pattern = TriplePattern::new(
            PatternTerm::var("x"),
            PatternTerm::id("links"),
            PatternTerm::var("x"),
        );
        let result = store.matches(&pattern);
        assert_eq!(result.len(), 1);
        assert_eq!(result[0]["x"], Term::id("a"));
    }

    #[test]
    fn round_trip_preserves_order_and_content() {
        let mut store = TripleStore::new();
        store.insert(t("obs1", "ssn:hasValue", Term::literal("31.5")));
        store.insert(t("ws1", "rdf:type", Term::id("ssn:Sensor")));
        store.insert(t("obs1", "ikon:note", Term::literal("dry \"spell\" \\ ahead\nline2")));
        let text = store.to_text();
        let reloaded = TripleStore::from_text(&text).unwrap();
        let a: Vec<&Triple> = store.iter().collect();
        let b: Vec<&Triple> = reloaded.iter().collect();
        assert_eq!(a, b);
        assert_eq!(text, reloaded.to_text());
    }

    #[test]
    fn missing_terminal_dot_is_corrupt() {
        let err = TripleStore::from_text("a b c\n").unwrap_err();
        match err {
            StoreError::CorruptFile { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn wrong_arity_is_corrupt() {
        assert!(TripleStore::from_text("a b .\n").is_err());
        assert!(TripleStore::from_text("a b c d .\n").is_err());
        assert!(TripleStore::from_text("\"lit\" b c .\n").is_err());
    }
}
