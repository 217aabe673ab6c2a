//! Complex event processing: a rule DSL over timestamped sensor streams and
//! a tumbling-window engine that evaluates it.
//!
//! A rule names a composite event, defines its attributes as aggregates over
//! one stream window, and fires when the window's condition holds:
//!
//! ```text
//! HighTemp(avg_temp = AVG(Temperature.value)) :=
//!     WINDOW(Temperature, 1h, MIN_COUNT=4)
//!     WHERE AVG(Temperature.value) >= 30.0
//!     EMIT AverageDailyTemp is High CF 1.0
//! ```
//!
//! Windows are epoch-aligned and non-overlapping (index = floor(t / width)).
//! They close when the watermark (latest timestamp seen) moves past their
//! end, or on an explicit flush, so evaluation is fully replay-deterministic.

mod engine;
mod parse;

pub use engine::{event_to_fact, CepEngine};
pub use parse::{parse_cep_rule, parse_cep_rules};

use crate::model::CertaintyFactor;
use std::fmt;

/// Aggregate functions usable in rule heads and conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Avg,
    Min,
    Max,
    Sum,
    Count,
    Last,
}

impl AggFn {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "AVG" => AggFn::Avg,
            "MIN" => AggFn::Min,
            "MAX" => AggFn::Max,
            "SUM" => AggFn::Sum,
            "COUNT" => AggFn::Count,
            "LAST" => AggFn::Last,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Avg => "AVG",
            AggFn::Min => "MIN",
            AggFn::Max => "MAX",
            AggFn::Sum => "SUM",
            AggFn::Count => "COUNT",
            AggFn::Last => "LAST",
        }
    }
}

/// An aggregate over the `value` field of one stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateExpr {
    pub function: AggFn,
    pub stream: String,
}

impl fmt::Display for AggregateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}.value)", self.function.name(), self.stream)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            // Exact float equality; rules should prefer inequalities.
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// One comparison of an aggregate against a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub agg: AggregateExpr,
    pub op: CmpOp,
    pub threshold: f64,
}

/// Boolean tree over comparisons. AND and OR have equal precedence and
/// associate left; parentheses group.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Cmp(Comparison),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    fn collect_aggs<'a>(&'a self, out: &mut Vec<&'a AggregateExpr>) {
        match self {
            Condition::Cmp(c) => out.push(&c.agg),
            Condition::And(l, r) | Condition::Or(l, r) => {
                l.collect_aggs(out);
                r.collect_aggs(out);
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Cmp(c) => write!(f, "{} {} {}", c.agg, c.op.symbol(), c.threshold),
            Condition::And(l, r) => write!(f, "({l} AND {r})"),
            Condition::Or(l, r) => write!(f, "({l} OR {r})"),
        }
    }
}

/// The tumbling window a rule evaluates over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub stream: String,
    pub width_secs: u64,
    pub min_count: usize,
}

/// Optional fact emitted when the rule fires, handed to the inference layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitSpec {
    pub subject: String,
    pub state: String,
    pub cf: CertaintyFactor,
}

/// A parsed CEP rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CepRule {
    name: String,
    attributes: Vec<(String, AggregateExpr)>,
    window: WindowSpec,
    condition: Condition,
    emit: Option<EmitSpec>,
}

impl CepRule {
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<(String, AggregateExpr)>,
        window: WindowSpec,
        condition: Condition,
        emit: Option<EmitSpec>,
    ) -> Result<Self, CepParseError> {
        let name = name.into();
        if window.width_secs == 0 {
            return Err(CepParseError::BadDuration {
                position: 0,
                reason: "window width must be positive".into(),
            });
        }
        if window.min_count == 0 {
            return Err(CepParseError::BadMinCount);
        }
        for (i, (attr, _)) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|(a, _)| a == attr) {
                return Err(CepParseError::DuplicateAttribute(attr.clone()));
            }
        }
        let mut aggs: Vec<&AggregateExpr> = attributes.iter().map(|(_, a)| a).collect();
        condition.collect_aggs(&mut aggs);
        for agg in aggs {
            if agg.stream != window.stream {
                return Err(CepParseError::StreamMismatch {
                    expected: window.stream.clone(),
                    found: agg.stream.clone(),
                });
            }
        }
        Ok(CepRule {
            name,
            attributes,
            window,
            condition,
            emit,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[(String, AggregateExpr)] {
        &self.attributes
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    pub fn emit(&self) -> Option<&EmitSpec> {
        self.emit.as_ref()
    }

    /// Renders the rule in the DSL; reparsing the result yields an equal rule.
    pub fn to_text(&self) -> String {
        let attrs = self
            .attributes
            .iter()
            .map(|(name, agg)| format!("{name} = {agg}"))
            .collect::<Vec<_>>()
            .join(", ");
        let mut out = format!(
            "{}({}) := WINDOW({}, {}s, MIN_COUNT={}) WHERE {}",
            self.name,
            attrs,
            self.window.stream,
            self.window.width_secs,
            self.window.min_count,
            self.condition
        );
        if let Some(emit) = &self.emit {
            out.push_str(&format!(
                " EMIT {} is {} CF {}",
                emit.subject,
                emit.state,
                emit.cf.value()
            ));
        }
        out
    }
}

/// Rule text that does not conform to the DSL.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CepParseError {
    #[error("syntax error at byte {position}: expected {expected}")]
    SyntaxError { position: usize, expected: String },
    #[error("unknown aggregate `{name}` at byte {position}")]
    UnknownAggregate { position: usize, name: String },
    #[error("bad duration at byte {position}: {reason}")]
    BadDuration { position: usize, reason: String },
    #[error("MIN_COUNT must be a positive integer")]
    BadMinCount,
    #[error("emit certainty factor must be in [0, 1], got {0}")]
    CfOutOfRange(f64),
    #[error("aggregate reads stream `{found}` but the window is over `{expected}`")]
    StreamMismatch { expected: String, found: String },
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
}

/// Stream error raised when readings regress in time.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("out-of-order reading: {sensor_id}/{property} at t={timestamp} behind watermark {last_seen}")]
pub struct OutOfOrder {
    pub sensor_id: String,
    pub property: String,
    pub timestamp: u64,
    pub last_seen: u64,
}
