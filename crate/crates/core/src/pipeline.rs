//! End-to-end wiring of the functional groups: ingestion feeds the event
//! log, the triple store and the CEP engine; flushing closes windows into
//! composite events and derived facts; reasoning forward-chains the fact
//! base into recommendations.
//!
//! Both the REST service and the offline replay drive this one struct, so
//! the two paths produce identical results for identical inputs.

use crate::cep::{event_to_fact, parse_cep_rules, CepEngine, CepParseError, OutOfOrder};
use crate::config::{Config, ConfigError};
use crate::ingest::SensorBatch;
use crate::model::{CompositeEvent, Fact, IkObservation, Recommendation, Timestamp};
use crate::ontology::{
    align_ik, align_sensor, parse_select, select, QueryError, ResultTable, Vocabulary,
    VocabularyError,
};
use crate::publish::wire::{CompositeEventDto, IkObservationDto, ReadingDto, RecommendationDto};
use crate::reason::{facts_from_pipeline, forward_chain, InferenceRule, RuleParseError};
use crate::store::{EntryKind, EventLog, StoreError, TripleStore};
use std::fs;
use std::path::{Path, PathBuf};

/// One middleware instance: all shared state behind the REST routes and the
/// replay command.
#[derive(Debug, Clone)]
pub struct Pipeline {
    vocabulary: Vocabulary,
    cep: CepEngine,
    inference_rules: Vec<InferenceRule>,
    log: EventLog,
    triples: TripleStore,
    events: Vec<CompositeEvent>,
    ik_facts: Vec<Fact>,
    event_facts: Vec<Fact>,
    recommendations: Vec<Recommendation>,
    obs_seq: u64,
}

impl Pipeline {
    pub fn new(
        vocabulary: Vocabulary,
        cep_rules: Vec<crate::cep::CepRule>,
        inference_rules: Vec<InferenceRule>,
    ) -> Self {
        Pipeline {
            vocabulary,
            cep: CepEngine::new(cep_rules),
            inference_rules,
            log: EventLog::new(),
            triples: TripleStore::new(),
            events: Vec::new(),
            ik_facts: Vec::new(),
            event_facts: Vec::new(),
            recommendations: Vec::new(),
            obs_seq: 0,
        }
    }

    /// Loads vocabularies and rule files named by the config. Errors name
    /// the offending file.
    pub fn from_config(config: &Config) -> Result<Self, PipelineError> {
        let mut sources = Vec::new();
        for path in &config.vocabularies {
            sources.push((path.clone(), read(path)?));
        }
        let vocabulary = Vocabulary::from_sources(sources.iter().map(|(_, text)| text.as_str()))
            .map_err(|source| PipelineError::Vocabulary {
                path: config.vocabularies.first().cloned().unwrap_or_default(),
                source,
            })?;
        let cep_text = read(&config.cep_rules)?;
        let cep_rules = parse_cep_rules(&cep_text).map_err(|source| PipelineError::CepRules {
            path: config.cep_rules.clone(),
            source,
        })?;
        let rule_text = read(&config.inference_rules)?;
        let inference_rules =
            crate::reason::parse_rules(&rule_text).map_err(|source| PipelineError::InferenceRules {
                path: config.inference_rules.clone(),
                source,
            })?;
        Ok(Pipeline::new(vocabulary, cep_rules, inference_rules))
    }

    fn next_obs_id(&mut self) -> String {
        self.obs_seq += 1;
        format!("obs{:06}", self.obs_seq)
    }

    /// Ingests a whole batch atomically: if any reading would regress behind
    /// the stream watermark the batch is rejected and no state changes.
    pub fn ingest_batch(&mut self, batch: SensorBatch) -> Result<usize, OutOfOrder> {
        if let (Some(first), Some(watermark)) = (batch.readings().first(), self.cep.watermark()) {
            if first.timestamp() < watermark {
                return Err(OutOfOrder {
                    sensor_id: first.sensor_id().to_string(),
                    property: first.property().to_string(),
                    timestamp: first.timestamp().secs(),
                    last_seen: watermark.secs(),
                });
            }
        }
        let accepted = batch.len();
        for reading in batch.into_readings() {
            let payload = serde_json::to_value(ReadingDto::from(&reading))
                .expect("readings always serialize");
            self.log.append(EntryKind::Sensor, payload, reading.timestamp());
            let obs_id = self.next_obs_id();
            self.triples.insert_all(align_sensor(&reading, &obs_id));
            let emitted = self
                .cep
                .advance(reading)
                .expect("batch is sorted and starts at or after the watermark");
            self.record_events(emitted);
        }
        Ok(accepted)
    }

    pub fn ingest_ik(&mut self, observation: IkObservation) {
        let payload = serde_json::to_value(IkObservationDto::from(&observation))
            .expect("observations always serialize");
        self.log.append(EntryKind::Ik, payload, observation.timestamp());
        let id = self.next_obs_id();
        self.triples
            .insert_all(align_ik(&observation, &id, &self.vocabulary));
        self.ik_facts.push(crate::ingest::ik_to_fact(&observation));
    }

    /// Closes windows up to `at` and returns how many composite events that
    /// produced.
    pub fn flush(&mut self, at: Timestamp) -> usize {
        let emitted = self.cep.flush(at);
        let count = emitted.len();
        self.record_events(emitted);
        count
    }

    fn record_events(&mut self, emitted: Vec<CompositeEvent>) {
        for event in emitted {
            let payload = serde_json::to_value(CompositeEventDto::from(&event))
                .expect("events always serialize");
            self.log.append(EntryKind::Composite, payload, event.window_end());
            if let Some(rule) = self.cep.rule_by_name(event.source_rule()) {
                if let Some(fact) = event_to_fact(rule, &event) {
                    self.event_facts.push(fact);
                }
            }
            self.events.push(event);
        }
    }

    /// Rebuilds the fact base from everything ingested so far and forward
    /// chains it. Replaces the current recommendation set.
    pub fn reason(&mut self) -> usize {
        let facts = facts_from_pipeline(self.ik_facts.clone(), self.event_facts.clone());
        let (recommendations, _) = forward_chain(&facts, &self.inference_rules);
        for rec in &recommendations {
            let payload = serde_json::to_value(RecommendationDto::from(rec))
                .expect("recommendations always serialize");
            self.log.append(EntryKind::Recommendation, payload, rec.issued_at());
        }
        self.recommendations = recommendations;
        self.recommendations.len()
    }

    /// Composite events, optionally only those whose window ended after
    /// `since`.
    pub fn events_since(&self, since: Option<Timestamp>) -> Vec<&CompositeEvent> {
        self.events
            .iter()
            .filter(|e| since.is_none_or(|s| e.window_end() > s))
            .collect()
    }

    /// Current recommendations, most recent first.
    pub fn recommendations(&self) -> &[Recommendation] {
        &self.recommendations
    }

    pub fn triples(&self) -> &TripleStore {
        &self.triples
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn query(&self, text: &str) -> Result<ResultTable, QueryError> {
        let query = parse_select(text)?;
        select(&self.triples, &query)
    }

    /// Persists the triple store and event log under `data_dir`.
    pub fn persist(&self, config: &Config) -> Result<(), PipelineError> {
        fs::create_dir_all(&config.data_dir).map_err(|source| PipelineError::Io {
            path: config.data_dir.clone(),
            source,
        })?;
        self.triples
            .save(config.triples_path())
            .map_err(|source| PipelineError::Store {
                path: config.triples_path(),
                source,
            })?;
        self.log
            .save(config.event_log_path())
            .map_err(|source| PipelineError::Store {
                path: config.event_log_path(),
                source,
            })?;
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("vocabulary {path}: {source}")]
    Vocabulary {
        path: PathBuf,
        source: VocabularyError,
    },
    #[error("CEP rules {path}: {source}")]
    CepRules { path: PathBuf, source: CepParseError },
    #[error("inference rules {path}: {source}")]
    InferenceRules { path: PathBuf, source: RuleParseError },
    #[error("storage {path}: {source}")]
    Store { path: PathBuf, source: StoreError },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_ik_json, parse_sensor_csv};

    fn demo_pipeline() -> Pipeline {
        let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
        let data = manifest.join("../../data");
        let config = Config::parse(
            &format!(
                r#"{{"port":0,"data_dir":"out","cep_rules":"{}","inference_rules":"{}","vocabularies":["{}","{}"]}}"#,
                data.join("rules/drought.cep").display(),
                data.join("rules/drought.rules").display(),
                data.join("vocab/ssn.vocab").display(),
                data.join("vocab/ikon.vocab").display(),
            ),
            Path::new("."),
        )
        .unwrap();
        Pipeline::from_config(&config).unwrap()
    }

    fn demo_csv() -> String {
        let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
        fs::read_to_string(manifest.join("../../data/scenarios/drought/sensors.csv")).unwrap()
    }

    fn demo_ik() -> Vec<String> {
        let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
        fs::read_to_string(manifest.join("../../data/scenarios/drought/ik.jsonl"))
            .unwrap()
            .lines()
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn full_demo_run_recommends_drought() {
        let mut pipeline = demo_pipeline();
        let batch = parse_sensor_csv(&demo_csv()).unwrap();
        assert_eq!(pipeline.ingest_batch(batch).unwrap(), 12);
        for line in demo_ik() {
            pipeline.ingest_ik(parse_ik_json(&line).unwrap());
        }
        assert_eq!(pipeline.flush(Timestamp::from_secs(3600)), 5);
        assert_eq!(pipeline.reason(), 1);

        let rec = &pipeline.recommendations()[0];
        assert_eq!(rec.event(), "Drought");
        assert!((rec.cf().value() - 0.10).abs() < 1e-9);
        assert_eq!(rec.supporting_facts().len(), 9);

        // 12 readings * 5 triples, plus 8 triples for each classified
        // indicator and 7 for MoonSize (not a seed class).
        assert_eq!(pipeline.triples().len(), 12 * 5 + 3 * 8 + 7);
        // 12 sensor + 4 ik + 5 composite + 1 recommendation log entries.
        assert_eq!(pipeline.log().len(), 22);
    }

    #[test]
    fn regressing_batch_is_rejected_without_state_change() {
        let mut pipeline = demo_pipeline();
        let batch = parse_sensor_csv(
            "sensor_id,property,value,unit,timestamp\nws1,Temperature,15.0,C,5000",
        )
        .unwrap();
        pipeline.ingest_batch(batch).unwrap();
        let log_len = pipeline.log().len();
        let store_len = pipeline.triples().len();

        let stale = parse_sensor_csv(
            "sensor_id,property,value,unit,timestamp\nws1,Temperature,15.0,C,100",
        )
        .unwrap();
        assert!(pipeline.ingest_batch(stale).is_err());
        assert_eq!(pipeline.log().len(), log_len);
        assert_eq!(pipeline.triples().len(), store_len);
    }

    #[test]
    fn reason_is_idempotent_for_a_fixed_fact_base() {
        let mut pipeline = demo_pipeline();
        for line in demo_ik() {
            pipeline.ingest_ik(parse_ik_json(&line).unwrap());
        }
        pipeline.reason();
        let first = pipeline.recommendations().to_vec();
        pipeline.reason();
        assert_eq!(pipeline.recommendations(), first.as_slice());
    }

    #[test]
    fn query_sees_aligned_observations() {
        let mut pipeline = demo_pipeline();
        let batch = parse_sensor_csv(&demo_csv()).unwrap();
        pipeline.ingest_batch(batch).unwrap();
        let table = pipeline
            .query("SELECT ?o WHERE { ?o rdf:type ssn:Observation }")
            .unwrap();
        assert_eq!(table.rows.len(), 12);
    }

    #[test]
    fn events_since_filters_by_window_end() {
        let mut pipeline = demo_pipeline();
        let batch = parse_sensor_csv(&demo_csv()).unwrap();
        pipeline.ingest_batch(batch).unwrap();
        pipeline.flush(Timestamp::from_secs(3600));
        assert_eq!(pipeline.events_since(None).len(), 5);
        assert_eq!(pipeline.events_since(Some(Timestamp::from_secs(0))).len(), 5);
        assert_eq!(pipeline.events_since(Some(Timestamp::from_secs(3600))).len(), 0);
    }
}
