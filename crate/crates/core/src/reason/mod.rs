//! Deductive layer: certainty-factor rules over a fact base, forward-chained
//! to a fixpoint, emitting recommendations.
//!
//! Rules are conjunctions of "subject is state" clauses concluding a named
//! event with drought categories and a rule CF:
//!
//! ```text
//! RULE DroughtIndicators DOMAIN "INDIGENOUS KNOWLEDGE"
//!   IF (MugumoTree is Flowering AND MoonSize is Full)
//!   THEN Drought [METEOROLOGICAL && AGRICULTURAL] CF 10%
//! ```
//!
//! Certainty factors follow the classic positive-evidence calculus:
//! conjunction takes the minimum, firing multiplies by the rule CF, and
//! parallel evidence for the same conclusion combines as a + b(1 - a).

mod engine;
mod parse;

pub use engine::{
    combine_cf, evaluate_rule, facts_from_pipeline, forward_chain, forward_chain_with_stats,
    ChainStats, FactBase,
};
pub use parse::{parse_rule, parse_rules};

use crate::model::CertaintyFactor;

/// A parsed inference rule.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRule {
    name: String,
    domain_tag: String,
    antecedents: Vec<(String, String)>,
    event: String,
    categories: Vec<String>,
    rule_cf: CertaintyFactor,
}

impl InferenceRule {
    pub fn new(
        name: impl Into<String>,
        domain_tag: impl Into<String>,
        antecedents: Vec<(String, String)>,
        event: impl Into<String>,
        categories: Vec<String>,
        rule_cf: CertaintyFactor,
    ) -> Result<Self, RuleParseError> {
        if antecedents.is_empty() {
            return Err(RuleParseError::EmptyAntecedents);
        }
        for (i, clause) in antecedents.iter().enumerate() {
            if antecedents[..i].contains(clause) {
                return Err(RuleParseError::DuplicateAntecedent {
                    subject: clause.0.clone(),
                    state: clause.1.clone(),
                });
            }
        }
        if categories.is_empty() {
            return Err(RuleParseError::EmptyCategories);
        }
        Ok(InferenceRule {
            name: name.into(),
            domain_tag: domain_tag.into(),
            antecedents,
            event: event.into(),
            categories,
            rule_cf,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Metadata used for grouping and filtering rule sets; it does not
    /// restrict which fact domains the antecedents may match.
    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    pub fn antecedents(&self) -> &[(String, String)] {
        &self.antecedents
    }

    pub fn event(&self) -> &str {
        &self.event
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn rule_cf(&self) -> CertaintyFactor {
        self.rule_cf
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleParseError {
    #[error("syntax error at byte {position}: expected {expected}")]
    SyntaxError { position: usize, expected: String },
    #[error("rule certainty factor must be in [0, 1], got {0}")]
    CfOutOfRange(f64),
    #[error("a rule needs at least one antecedent")]
    EmptyAntecedents,
    #[error("duplicate antecedent `{subject} is {state}`")]
    DuplicateAntecedent { subject: String, state: String },
    #[error("a rule needs at least one category")]
    EmptyCategories,
}
