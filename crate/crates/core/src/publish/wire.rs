//! Wire representations shared by the REST service, the event log and the
//! CLI reports. One canonical JSON shape per domain type.

use crate::model::{
    CertaintyFactor, CompositeEvent, IkObservation, Recommendation, SensorReading, Timestamp,
    ValidationError,
};
use serde::{Deserialize, Serialize};

/// A sensor reading on the wire: same field set as the CSV columns, with
/// `t` for the timestamp.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadingDto {
    pub sensor_id: String,
    pub property: String,
    pub value: f64,
    pub unit: String,
    pub t: u64,
}

impl From<&SensorReading> for ReadingDto {
    fn from(r: &SensorReading) -> Self {
        ReadingDto {
            sensor_id: r.sensor_id().to_string(),
            property: r.property().to_string(),
            value: r.value(),
            unit: r.unit().to_string(),
            t: r.timestamp().secs(),
        }
    }
}

impl TryFrom<ReadingDto> for SensorReading {
    type Error = ValidationError;

    fn try_from(dto: ReadingDto) -> Result<Self, Self::Error> {
        SensorReading::new(
            dto.sensor_id,
            dto.property,
            dto.value,
            dto.unit,
            Timestamp::from_secs(dto.t),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IkObservationDto {
    pub indicator: String,
    pub state: String,
    #[serde(default)]
    pub description: String,
    pub lat: f64,
    pub lon: f64,
    pub observer: String,
    pub cf: f64,
    pub t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photo_ref: Option<String>,
}

impl From<&IkObservation> for IkObservationDto {
    fn from(o: &IkObservation) -> Self {
        IkObservationDto {
            indicator: o.indicator().to_string(),
            state: o.state().to_string(),
            description: o.description().to_string(),
            lat: o.latitude(),
            lon: o.longitude(),
            observer: o.observer().to_string(),
            cf: o.confidence().value(),
            t: o.timestamp().secs(),
            photo_ref: o.photo_ref().map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositeEventDto {
    pub name: String,
    pub attributes: Vec<(String, f64)>,
    pub window_start: u64,
    pub window_end: u64,
    pub source_rule: String,
}

impl From<&CompositeEvent> for CompositeEventDto {
    fn from(e: &CompositeEvent) -> Self {
        CompositeEventDto {
            name: e.name().to_string(),
            attributes: e.attributes().to_vec(),
            window_start: e.window_start().secs(),
            window_end: e.window_end().secs(),
            source_rule: e.source_rule().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportingFactDto {
    pub subject: String,
    pub state: String,
    pub cf: f64,
}

/// The published recommendation shape. Field order is part of the wire
/// contract: event, categories, cf, fired_rule, supporting_facts, issued_at.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecommendationDto {
    pub event: String,
    pub categories: Vec<String>,
    pub cf: f64,
    pub fired_rule: String,
    pub supporting_facts: Vec<SupportingFactDto>,
    pub issued_at: u64,
}

impl From<&Recommendation> for RecommendationDto {
    fn from(r: &Recommendation) -> Self {
        RecommendationDto {
            event: r.event().to_string(),
            categories: r.categories().to_vec(),
            cf: r.cf().value(),
            fired_rule: r.fired_rule().to_string(),
            supporting_facts: r
                .supporting_facts()
                .iter()
                .map(|(subject, state, cf)| SupportingFactDto {
                    subject: subject.clone(),
                    state: state.clone(),
                    cf: cf.value(),
                })
                .collect(),
            issued_at: r.issued_at().secs(),
        }
    }
}

impl TryFrom<RecommendationDto> for Recommendation {
    type Error = ValidationError;

    fn try_from(dto: RecommendationDto) -> Result<Self, Self::Error> {
        let supporting = dto
            .supporting_facts
            .into_iter()
            .map(|f| Ok((f.subject, f.state, CertaintyFactor::new(f.cf)?)))
            .collect::<Result<Vec<_>, ValidationError>>()?;
        Recommendation::new(
            dto.event,
            dto.categories,
            CertaintyFactor::new(dto.cf)?,
            dto.fired_rule,
            supporting,
            Timestamp::from_secs(dto.issued_at),
        )
    }
}

/// Canonical JSON for one recommendation: fixed key order, shortest
/// round-trip float rendering.
pub fn serialize_recommendation(r: &Recommendation) -> String {
    serde_json::to_string(&RecommendationDto::from(r)).expect("recommendations always serialize")
}

/// Parses canonical recommendation JSON back into the domain type.
pub fn deserialize_recommendation(text: &str) -> Result<Recommendation, String> {
    let dto: RecommendationDto = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Recommendation::try_from(dto).map_err(|e| e.to_string())
}

/// Canonical JSON array for a recommendation list, one line, most recent
/// first as supplied by the reasoner.
pub fn serialize_recommendations(recs: &[Recommendation]) -> String {
    let dtos: Vec<RecommendationDto> = recs.iter().map(RecommendationDto::from).collect();
    serde_json::to_string(&dtos).expect("recommendations always serialize")
}
