//! Alignment of validated inputs into triples.

use super::Vocabulary;
use crate::model::{IkObservation, SensorReading};
use crate::store::{Term, Triple};

/// Canonical numeric literal: the shortest decimal string that parses back
/// to the same double, e.g. 31.50 renders as "31.5". Keeps persisted stores
/// and golden outputs byte-stable.
pub fn canonical_f64(value: f64) -> String {
    format!("{value}")
}

fn triple(s: &str, p: &str, o: Term) -> Triple {
    Triple::new(s, p, o).expect("alignment terms are non-empty")
}

/// Describes a reading as exactly five observation triples.
pub fn align_sensor(reading: &SensorReading, obs_id: &str) -> Vec<Triple> {
    vec![
        triple(obs_id, "rdf:type", Term::id("ssn:Observation")),
        triple(obs_id, "ssn:observedBy", Term::id(reading.sensor_id())),
        triple(obs_id, "ssn:observedProperty", Term::id(reading.property())),
        triple(obs_id, "ssn:hasValue", Term::literal(canonical_f64(reading.value()))),
        triple(obs_id, "ssn:observedAt", Term::literal(reading.timestamp().to_string())),
    ]
}

/// Describes an IK observation as seven triples, plus a classification
/// triple when the vocabulary knows the indicator (its most specific class).
pub fn align_ik(obs: &IkObservation, id: &str, vocabulary: &Vocabulary) -> Vec<Triple> {
    let mut triples = vec![
        triple(id, "rdf:type", Term::id("ikon:Observation")),
        triple(id, "ikon:indicator", Term::id(obs.indicator())),
        triple(id, "ikon:state", Term::id(obs.state())),
        triple(id, "ikon:cf", Term::literal(canonical_f64(obs.confidence().value()))),
        triple(id, "ikon:lat", Term::literal(canonical_f64(obs.latitude()))),
        triple(id, "ikon:lon", Term::literal(canonical_f64(obs.longitude()))),
        triple(id, "ikon:observedAt", Term::literal(obs.timestamp().to_string())),
    ];
    if vocabulary.declares(obs.indicator()) {
        if let Some(class) = vocabulary.primary_parent(obs.indicator()) {
            triples.push(triple(obs.indicator(), "rdf:type", Term::id(class)));
        }
    }
    triples
}
