//! Data acquisition: parsers that turn sensor and indigenous-knowledge inputs
//! from files or request bodies into validated domain values.
//!
//! Three wire formats are supported:
//!
//! - sensor CSV, header `sensor_id,property,value,unit,timestamp`
//! - sensor XML, `<readings><reading sensor=".." property=".." value=".." unit=".." t=".."/></readings>`
//! - IK JSON, one observation object per document
//!
//! All parsers are pure and reentrant.

use crate::model::{CertaintyFactor, IkObservation, SensorReading, Timestamp, ValidationError};
use crate::model::{Fact, FactDomain};
use serde::Deserialize;

pub const CSV_HEADER: &str = "sensor_id,property,value,unit,timestamp";

/// A list of readings sorted by timestamp, ties broken by sensor id then
/// property.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorBatch {
    readings: Vec<SensorReading>,
}

impl SensorBatch {
    pub fn new(mut readings: Vec<SensorReading>) -> Self {
        readings.sort_by(|a, b| {
            a.timestamp()
                .cmp(&b.timestamp())
                .then_with(|| a.sensor_id().cmp(b.sensor_id()))
                .then_with(|| a.property().cmp(b.property()))
        });
        SensorBatch { readings }
    }

    pub fn readings(&self) -> &[SensorReading] {
        &self.readings
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn into_readings(self) -> Vec<SensorReading> {
        self.readings
    }

    /// Renders the batch back to the CSV wire format. Values use the
    /// canonical shortest round-trip decimal form, so
    /// `parse_sensor_csv(batch.to_csv())` reproduces the batch exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.readings {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sensor_id(),
                r.property(),
                r.value(),
                r.unit(),
                r.timestamp()
            ));
        }
        out
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-')
}

/// Parses the sensor CSV replay format. The header row is required and
/// line numbers in errors are 1-based (header is line 1).
pub fn parse_sensor_csv(text: &str) -> Result<SensorBatch, IngestError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((_, line)) => break line.trim(),
            None => {
                return Err(IngestError::MalformedHeader {
                    found: String::new(),
                })
            }
        }
    };
    if header != CSV_HEADER {
        return Err(IngestError::MalformedHeader {
            found: header.to_string(),
        });
    }

    let mut readings = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let (sensor_id, property, value, unit, timestamp) =
            (fields[0], fields[1], fields[2], fields[3], fields[4]);
        if !unit.is_empty() && !is_identifier(unit) {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("unit `{unit}` contains characters outside [A-Za-z0-9_.-]"),
            });
        }
        for (name, field) in [("sensor_id", sensor_id), ("property", property)] {
            if !field.is_empty() && !is_identifier(field) {
                return Err(IngestError::MalformedRow {
                    line: line_no,
                    reason: format!("{name} `{field}` contains characters outside [A-Za-z0-9_.-]"),
                });
            }
        }
        let value: f64 = value.parse().map_err(|_| IngestError::MalformedRow {
            line: line_no,
            reason: format!("value `{value}` is not a decimal number"),
        })?;
        let timestamp: u64 = timestamp.parse().map_err(|_| IngestError::MalformedRow {
            line: line_no,
            reason: format!("timestamp `{timestamp}` is not an unsigned integer"),
        })?;
        let reading =
            SensorReading::new(sensor_id, property, value, unit, Timestamp::from_secs(timestamp))
                .map_err(|source| IngestError::Validation {
                    line: Some(line_no),
                    source,
                })?;
        readings.push(reading);
    }
    Ok(SensorBatch::new(readings))
}

/// Parses the sensor XML format; semantics are identical to
/// [`parse_sensor_csv`].
pub fn parse_sensor_xml(text: &str) -> Result<SensorBatch, IngestError> {
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| IngestError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "readings" {
        return Err(IngestError::MalformedXml(format!(
            "expected root element <readings>, found <{}>",
            root.tag_name().name()
        )));
    }
    let mut readings = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        if node.tag_name().name() != "reading" {
            return Err(IngestError::MalformedXml(format!(
                "unexpected element <{}>",
                node.tag_name().name()
            )));
        }
        let attr = |name: &'static str| {
            node.attribute(name)
                .ok_or(IngestError::MissingElement(name))
        };
        let sensor = attr("sensor")?;
        let property = attr("property")?;
        let value = attr("value")?;
        let unit = attr("unit")?;
        let t = attr("t")?;
        let value: f64 = value.parse().map_err(|_| {
            IngestError::MalformedXml(format!("value `{value}` is not a decimal number"))
        })?;
        let t: u64 = t.parse().map_err(|_| {
            IngestError::MalformedXml(format!("t `{t}` is not an unsigned integer"))
        })?;
        let reading = SensorReading::new(sensor, property, value, unit, Timestamp::from_secs(t))
            .map_err(|source| IngestError::Validation { line: None, source })?;
        readings.push(reading);
    }
    Ok(SensorBatch::new(readings))
}

#[derive(Deserialize)]
struct RawIkObservation {
    indicator: Option<String>,
    state: Option<String>,
    #[serde(default)]
    description: Option<String>,
    lat: Option<f64>,
    lon: Option<f64>,
    observer: Option<String>,
    t: Option<i64>,
    #[serde(default)]
    cf: Option<f64>,
    #[serde(default)]
    photo_ref: Option<String>,
}

/// Parses one IK observation object. A missing `cf` defaults to 1.0.
pub fn parse_ik_json(text: &str) -> Result<IkObservation, IngestError> {
    let raw: RawIkObservation =
        serde_json::from_str(text).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    let missing = |name: &'static str| IngestError::MissingField(name);
    let indicator = raw.indicator.ok_or(missing("indicator"))?;
    let state = raw.state.ok_or(missing("state"))?;
    let lat = raw.lat.ok_or(missing("lat"))?;
    let lon = raw.lon.ok_or(missing("lon"))?;
    let observer = raw.observer.ok_or(missing("observer"))?;
    let t = raw.t.ok_or(missing("t"))?;
    let validation = |source: ValidationError| IngestError::Validation { line: None, source };
    let cf = CertaintyFactor::new(raw.cf.unwrap_or(1.0)).map_err(validation)?;
    let timestamp = Timestamp::try_from_i64(t).map_err(validation)?;
    IkObservation::new(
        indicator,
        state,
        raw.description.unwrap_or_default(),
        lat,
        lon,
        observer,
        cf,
        timestamp,
        raw.photo_ref,
    )
    .map_err(validation)
}

/// Lowers a validated observation into the fact model: the indicator becomes
/// the subject, the observed state the fact state, and the observer's
/// confidence carries over unchanged.
pub fn ik_to_fact(obs: &IkObservation) -> Fact {
    Fact::new(
        obs.indicator(),
        obs.state(),
        obs.confidence(),
        FactDomain::IndigenousKnowledge,
        obs.timestamp(),
    )
    .expect("validated observation always yields a valid fact")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("malformed header: expected `{CSV_HEADER}`, found `{found}`")]
    MalformedHeader { found: String },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("reading element missing `{0}` attribute")]
    MissingElement(&'static str),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("validation failed{}: {source}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Validation {
        line: Option<usize>,
        source: ValidationError,
    },
}
