//! Shared domain types used by every pipeline stage.
//!
//! All values are validated on construction and immutable afterwards, so they
//! can be shared freely across threads. Constructors are the only way to
//! obtain instances.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Integer seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(u64);

impl Timestamp {
    pub fn from_secs(secs: u64) -> Self {
        Timestamp(secs)
    }

    /// Converts a possibly-signed epoch value, rejecting negatives.
    pub fn try_from_i64(secs: i64) -> Result<Self, ValidationError> {
        if secs < 0 {
            Err(ValidationError::NegativeTimestamp(secs))
        } else {
            Ok(Timestamp(secs as u64))
        }
    }

    pub fn secs(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Confidence in [0.0, 1.0] attached to facts, rules and recommendations.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CertaintyFactor(f64);

impl CertaintyFactor {
    pub const ZERO: CertaintyFactor = CertaintyFactor(0.0);
    pub const ONE: CertaintyFactor = CertaintyFactor(1.0);

    pub fn new(value: f64) -> Result<Self, ValidationError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(CertaintyFactor(value))
        } else {
            Err(ValidationError::CfOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CertaintyFactor {
    type Error = ValidationError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        CertaintyFactor::new(value)
    }
}

impl From<CertaintyFactor> for f64 {
    fn from(cf: CertaintyFactor) -> f64 {
        cf.0
    }
}

impl fmt::Display for CertaintyFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One timestamped measurement from a named sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    sensor_id: String,
    property: String,
    value: f64,
    unit: String,
    timestamp: Timestamp,
}

impl SensorReading {
    pub fn new(
        sensor_id: impl Into<String>,
        property: impl Into<String>,
        value: f64,
        unit: impl Into<String>,
        timestamp: Timestamp,
    ) -> Result<Self, ValidationError> {
        let sensor_id = sensor_id.into();
        let property = property.into();
        if sensor_id.is_empty() {
            return Err(ValidationError::EmptyField("sensor_id"));
        }
        if property.is_empty() {
            return Err(ValidationError::EmptyField("property"));
        }
        if !value.is_finite() {
            return Err(ValidationError::NonFiniteValue("value"));
        }
        Ok(SensorReading {
            sensor_id,
            property,
            value,
            unit: unit.into(),
            timestamp,
        })
    }

    pub fn sensor_id(&self) -> &str {
        &self.sensor_id
    }

    pub fn property(&self) -> &str {
        &self.property
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn timestamp(&self) -> Timestamp {
        self.timestamp
    }
}

/// One indigenous-knowledge field report: a natural indicator observed in a
/// particular state at a location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkObservation {
    indicator: String,
    state: String,
    description: String,
    latitude: f64,
    longitude: f64,
    observer: String,
    confidence: CertaintyFactor,
    timestamp: Timestamp,
    photo_ref: Option<String>,
}

#[allow(clippy::too_many_arguments)]
impl IkObservation {
    pub fn new(
        indicator: impl Into<String>,
        state: impl Into<String>,
        description: impl Into<String>,
        latitude: f64,
        longitude: f64,
        observer: impl Into<String>,
        confidence: CertaintyFactor,
        timestamp: Timestamp,
        photo_ref: Option<String>,
    ) -> Result<Self, ValidationError> {
        let indicator = indicator.into();
        let state = state.into();
        if indicator.is_empty() {
            return Err(ValidationError::EmptyField("indicator"));
        }
        if state.is_empty() {
            return Err(ValidationError::EmptyField("state"));
        }
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(ValidationError::CoordinateOutOfRange {
                field: "latitude",
                value: latitude,
            });
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(ValidationError::CoordinateOutOfRange {
                field: "longitude",
                value: longitude,
            });
        }
        Ok(IkObservation {
            indicator,
            state,
            description: description.into(),
            latitude,
            longitude,
            observer: observer.into(),
            confidence,
            timestamp,
            photo_ref,
        })
    }

    pub fn indicator(&self) -> &str {
        &self.indicator
    }

    pub fn state(&self) -> &str {
        &self.state
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn observer(&self) -> &str {
        &self.observer
    }

    pub fn confidence(&self) -> CertaintyFactor {
        self.confidence
    }

    pub fn timestamp(&self) -> Timestamp {
        self.timestamp
    }

    pub fn photo_ref(&self) -> Option<&str> {
        self.photo_ref.as_deref()
    }
}

/// Where a fact came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FactDomain {
    Sensor,
    IndigenousKnowledge,
    Derived,
}

impl fmt::Display for FactDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FactDomain::Sensor => "SENSOR",
            FactDomain::IndigenousKnowledge => "INDIGENOUS_KNOWLEDGE",
            FactDomain::Derived => "DERIVED",
        };
        f.write_str(s)
    }
}

/// An atomic assertion "subject is state" with a certainty factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    subject: String,
    state: String,
    cf: CertaintyFactor,
    domain: FactDomain,
    timestamp: Timestamp,
}

impl Fact {
    pub fn new(
        subject: impl Into<String>,
        state: impl Into<String>,
        cf: CertaintyFactor,
        domain: FactDomain,
        timestamp: Timestamp,
    ) -> Result<Self, ValidationError> {
        let subject = subject.into();
        let state = state.into();
        if subject.is_empty() {
            return Err(ValidationError::EmptyField("subject"));
        }
        if state.is_empty() {
            return Err(ValidationError::EmptyField("state"));
        }
        Ok(Fact {
            subject,
            state,
            cf,
            domain,
            timestamp,
        })
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn state(&self) -> &str {
        &self.state
    }

    pub fn cf(&self) -> CertaintyFactor {
        self.cf
    }

    pub fn domain(&self) -> FactDomain {
        self.domain
    }

    pub fn timestamp(&self) -> Timestamp {
        self.timestamp
    }

    /// Identity key within a fact base.
    pub fn key(&self) -> (String, String) {
        (self.subject.clone(), self.state.clone())
    }
}

/// Output of a CEP rule: a named event with attributes computed over one
/// closed window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeEvent {
    name: String,
    attributes: Vec<(String, f64)>,
    window_start: Timestamp,
    window_end: Timestamp,
    source_rule: String,
}

impl CompositeEvent {
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<(String, f64)>,
        window_start: Timestamp,
        window_end: Timestamp,
        source_rule: impl Into<String>,
    ) -> Result<Self, ValidationError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ValidationError::EmptyField("name"));
        }
        if window_start >= window_end {
            return Err(ValidationError::WindowOrder {
                start: window_start,
                end: window_end,
            });
        }
        for (i, (attr, _)) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|(a, _)| a == attr) {
                return Err(ValidationError::DuplicateAttribute(attr.clone()));
            }
        }
        Ok(CompositeEvent {
            name,
            attributes,
            window_start,
            window_end,
            source_rule: source_rule.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[(String, f64)] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<f64> {
        self.attributes
            .iter()
            .find(|(a, _)| a == name)
            .map(|(_, v)| *v)
    }

    pub fn window_start(&self) -> Timestamp {
        self.window_start
    }

    pub fn window_end(&self) -> Timestamp {
        self.window_end
    }

    pub fn source_rule(&self) -> &str {
        &self.source_rule
    }
}

/// A CF-weighted conclusion published to consumers.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    event: String,
    categories: Vec<String>,
    cf: CertaintyFactor,
    fired_rule: String,
    supporting_facts: Vec<(String, String, CertaintyFactor)>,
    issued_at: Timestamp,
}

impl Recommendation {
    pub fn new(
        event: impl Into<String>,
        categories: Vec<String>,
        cf: CertaintyFactor,
        fired_rule: impl Into<String>,
        supporting_facts: Vec<(String, String, CertaintyFactor)>,
        issued_at: Timestamp,
    ) -> Result<Self, ValidationError> {
        let event = event.into();
        if event.is_empty() {
            return Err(ValidationError::EmptyField("event"));
        }
        if categories.is_empty() {
            return Err(ValidationError::EmptyField("categories"));
        }
        if supporting_facts.is_empty() {
            return Err(ValidationError::EmptyField("supporting_facts"));
        }
        Ok(Recommendation {
            event,
            categories,
            cf,
            fired_rule: fired_rule.into(),
            supporting_facts,
            issued_at,
        })
    }

    pub fn event(&self) -> &str {
        &self.event
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn cf(&self) -> CertaintyFactor {
        self.cf
    }

    pub fn fired_rule(&self) -> &str {
        &self.fired_rule
    }

    pub fn supporting_facts(&self) -> &[(String, String, CertaintyFactor)] {
        &self.supporting_facts
    }

    pub fn issued_at(&self) -> Timestamp {
        self.issued_at
    }
}

/// Violation of a domain-type invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("field `{0}` must be a finite number")]
    NonFiniteValue(&'static str),
    #[error("timestamp must not be negative, got {0}")]
    NegativeTimestamp(i64),
    #[error("{field} out of range: {value}")]
    CoordinateOutOfRange { field: &'static str, value: f64 },
    #[error("certainty factor must be in [0, 1], got {0}")]
    CfOutOfRange(f64),
    #[error("window start {start} must precede end {end}")]
    WindowOrder { start: Timestamp, end: Timestamp },
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
}
