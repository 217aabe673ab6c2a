//! Class vocabularies: a rooted acyclic subclass hierarchy plus property
//! declarations, loaded from a line-oriented file format.
//!
//! ```text
//! # comment
//! class NAME
//! subclass CHILD PARENT
//! property NAME DOMAIN RANGE     RANGE is a class or the keyword Literal
//! ```
//!
//! `owl:Thing` is always declared. A class with no explicit parent sits
//! directly under `owl:Thing`, so the hierarchy always has that single root.

use indexmap::IndexSet;
use std::collections::{HashMap, HashSet};

pub const OWL_THING: &str = "owl:Thing";

/// A property declaration: name, domain class, range class or literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDecl {
    pub name: String,
    pub domain: String,
    pub range: PropertyRange,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyRange {
    Class(String),
    Literal,
}

/// Immutable class hierarchy; freely shareable once loaded.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    classes: IndexSet<String>,
    // child -> parents, in declaration order
    parents: HashMap<String, Vec<String>>,
    properties: Vec<PropertyDecl>,
    // reflexive-transitive closure, precomputed at load
    ancestors: HashMap<String, HashSet<String>>,
}

impl Vocabulary {
    /// Loads one vocabulary file.
    pub fn load(text: &str) -> Result<Self, VocabularyError> {
        Self::from_sources([text])
    }

    /// Loads several files as if concatenated; duplicate classes across
    /// files are rejected like duplicates within one file.
    pub fn from_sources<'a>(
        sources: impl IntoIterator<Item = &'a str> + Clone,
    ) -> Result<Self, VocabularyError> {
        let mut classes = IndexSet::new();
        classes.insert(OWL_THING.to_string());

        // First pass: class declarations.
        for source in sources.clone() {
            for (line_no, line) in numbered_lines(source) {
                let fields: Vec<&str> = line.split_whitespace().collect();
                match fields.as_slice() {
                    ["class", name] => {
                        if !classes.insert((*name).to_string()) {
                            return Err(VocabularyError::DuplicateClass((*name).to_string()));
                        }
                    }
                    ["class", ..] => {
                        return Err(VocabularyError::MalformedLine {
                            line: line_no,
                            reason: "class takes exactly one name".into(),
                        })
                    }
                    _ => {}
                }
            }
        }

        // Second pass: edges and properties over the full class set.
        let declared = |name: &str| -> Result<String, VocabularyError> {
            if classes.contains(name) {
                Ok(name.to_string())
            } else {
                Err(VocabularyError::UndeclaredClass(name.to_string()))
            }
        };
        let mut parents: HashMap<String, Vec<String>> = HashMap::new();
        let mut properties = Vec::new();
        for source in sources {
            for (line_no, line) in numbered_lines(source) {
                let fields: Vec<&str> = line.split_whitespace().collect();
                match fields.as_slice() {
                    ["class", _] => {}
                    ["subclass", child, parent] => {
                        let child = declared(child)?;
                        let parent = declared(parent)?;
                        parents.entry(child).or_default().push(parent);
                    }
                    ["property", name, domain, range] => {
                        let range = if *range == "Literal" {
                            PropertyRange::Literal
                        } else {
                            PropertyRange::Class(declared(range)?)
                        };
                        properties.push(PropertyDecl {
                            name: (*name).to_string(),
                            domain: declared(domain)?,
                            range,
                        });
                    }
                    _ => {
                        return Err(VocabularyError::MalformedLine {
                            line: line_no,
                            reason: format!("unrecognized directive `{line}`"),
                        })
                    }
                }
            }
        }

        // Orphan classes hang off the root.
        for class in &classes {
            if class != OWL_THING && !parents.contains_key(class) {
                parents.insert(class.clone(), vec![OWL_THING.to_string()]);
            }
        }

        detect_cycles(&classes, &parents)?;
        let ancestors = closure(&classes, &parents);
        Ok(Vocabulary {
            classes,
            parents,
            properties,
            ancestors,
        })
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(String::as_str)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn declares(&self, class: &str) -> bool {
        self.classes.contains(class)
    }

    pub fn properties(&self) -> &[PropertyDecl] {
        &self.properties
    }

    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Direct parents of a class, in declaration order.
    pub fn direct_parents(&self, class: &str) -> &[String] {
        self.parents.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The most specific class a name files under: its first declared parent.
    pub fn primary_parent(&self, class: &str) -> Option<&str> {
        self.direct_parents(class).first().map(String::as_str)
    }

    pub fn direct_children<'a>(&'a self, parent: &'a str) -> impl Iterator<Item = &'a str> {
        self.classes.iter().map(String::as_str).filter(move |c| {
            self.parents
                .get(*c)
                .is_some_and(|ps| ps.iter().any(|p| p == parent))
        })
    }

    /// Reflexive-transitive subsumption: true iff `a` = `b` or `a` reaches
    /// `b` through subclass edges.
    pub fn is_subclass_of(&self, a: &str, b: &str) -> Result<bool, VocabularyError> {
        for class in [a, b] {
            if !self.declares(class) {
                return Err(VocabularyError::UndeclaredClass(class.to_string()));
            }
        }
        Ok(self.ancestors[a].contains(b))
    }
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(idx, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((idx + 1, line))
        }
    })
}

fn detect_cycles(
    classes: &IndexSet<String>,
    parents: &HashMap<String, Vec<String>>,
) -> Result<(), VocabularyError> {
    // Iterative DFS with three colors; a back edge names a class on a cycle.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color: HashMap<&str, Color> =
        classes.iter().map(|c| (c.as_str(), Color::White)).collect();
    for start in classes {
        if color[start.as_str()] != Color::White {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
        color.insert(start.as_str(), Color::Gray);
        while let Some((node, next_child)) = stack.pop() {
            let edges = parents.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if let Some(parent) = edges.get(next_child) {
                stack.push((node, next_child + 1));
                match color[parent.as_str()] {
                    Color::Gray => return Err(VocabularyError::CycleDetected(parent.clone())),
                    Color::White => {
                        color.insert(parent.as_str(), Color::Gray);
                        stack.push((parent.as_str(), 0));
                    }
                    Color::Black => {}
                }
            } else {
                color.insert(node, Color::Black);
            }
        }
    }
    Ok(())
}

fn closure(
    classes: &IndexSet<String>,
    parents: &HashMap<String, Vec<String>>,
) -> HashMap<String, HashSet<String>> {
    // Depth-first accumulation with memoization; the graph is acyclic here.
    fn visit<'a>(
        class: &'a str,
        parents: &'a HashMap<String, Vec<String>>,
        memo: &mut HashMap<String, HashSet<String>>,
    ) -> HashSet<String> {
        if let Some(done) = memo.get(class) {
            return done.clone();
        }
        let mut up = HashSet::new();
        up.insert(class.to_string());
        if let Some(ps) = parents.get(class) {
            for p in ps {
                up.extend(visit(p, parents, memo));
            }
        }
        memo.insert(class.to_string(), up.clone());
        up
    }
    let mut memo = HashMap::new();
    for class in classes {
        visit(class, parents, &mut memo);
    }
    memo
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VocabularyError {
    #[error("subclass cycle through `{0}`")]
    CycleDetected(String),
    #[error("undeclared class `{0}`")]
    UndeclaredClass(String),
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_contains_only_the_root() {
        let v = Vocabulary::load("").unwrap();
        assert_eq!(v.class_count(), 1);
        assert!(v.declares(OWL_THING));
    }

    #[test]
    fn subsumption_is_reflexive_and_transitive() {
        let v = Vocabulary::load(
            "class LivingThings\n\
             class Plant\n\
             class MugumoTree\n\
             subclass LivingThings owl:Thing\n\
             subclass Plant LivingThings\n\
             subclass MugumoTree Plant\n",
        )
        .unwrap();
        assert!(v.is_subclass_of("LivingThings", OWL_THING).unwrap());
        assert!(v.is_subclass_of("MugumoTree", "MugumoTree").unwrap());
        assert!(v.is_subclass_of("MugumoTree", OWL_THING).unwrap());
        assert!(v.is_subclass_of("MugumoTree", "LivingThings").unwrap());
        assert!(!v.is_subclass_of("LivingThings", "MugumoTree").unwrap());
        assert!(!v.is_subclass_of("Plant", "MugumoTree").unwrap());
    }

    #[test]
    fn two_cycle_detected() {
        let err = Vocabulary::load(
            "class A\nclass B\nsubclass A B\nsubclass B A\n",
        )
        .unwrap_err();
        assert!(matches!(err, VocabularyError::CycleDetected(_)));
    }

    #[test]
    fn longer_cycle_detected() {
        let err = Vocabulary::load(
            "class A\nclass B\nclass C\nsubclass A B\nsubclass B C\nsubclass C A\n",
        )
        .unwrap_err();
        assert!(matches!(err, VocabularyError::CycleDetected(_)));
    }

    #[test]
    fn duplicate_class_rejected() {
        let err = Vocabulary::load("class A\nclass A\n").unwrap_err();
        assert_eq!(err, VocabularyError::DuplicateClass("A".into()));
    }

    #[test]
    fn undeclared_edge_endpoint_rejected() {
        let err = Vocabulary::load("class A\nsubclass A Missing\n").unwrap_err();
        assert_eq!(err, VocabularyError::UndeclaredClass("Missing".into()));
    }

    #[test]
    fn orphan_classes_fall_under_the_root() {
        let v = Vocabulary::load("class A\nclass B\nsubclass B A\n").unwrap();
        assert_eq!(v.direct_parents("A"), ["owl:Thing"]);
        assert_eq!(v.direct_parents("B"), ["A"]);
        assert!(v.is_subclass_of("B", OWL_THING).unwrap());
    }

    #[test]
    fn undeclared_query_class_is_an_error() {
        let v = Vocabulary::load("class A\n").unwrap();
        assert!(v.is_subclass_of("A", "Nope").is_err());
        assert!(v.is_subclass_of("Nope", "A").is_err());
    }

    #[test]
    fn properties_parse_with_class_and_literal_ranges() {
        let v = Vocabulary::load(
            "class Observation\nclass Sensor\n\
             property observedBy Observation Sensor\n\
             property hasValue Observation Literal\n",
        )
        .unwrap();
        assert_eq!(v.properties().len(), 2);
        assert_eq!(
            v.property("observedBy").unwrap().range,
            PropertyRange::Class("Sensor".into())
        );
        assert_eq!(v.property("hasValue").unwrap().range, PropertyRange::Literal);
    }

    #[test]
    fn multiple_inheritance_keeps_declaration_order() {
        let v = Vocabulary::load(
            "class A\nclass B\nclass C\nsubclass C A\nsubclass C B\n",
        )
        .unwrap();
        assert_eq!(v.primary_parent("C"), Some("A"));
        assert!(v.is_subclass_of("C", "B").unwrap());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let v = Vocabulary::load("# header\n\nclass A  # trailing\n").unwrap();
        assert!(v.declares("A"));
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(matches!(
            Vocabulary::load("classes A\n").unwrap_err(),
            VocabularyError::MalformedLine { line: 1, .. }
        ));
    }
}
