//! Semantic data-integration middleware for heterogeneous environmental
//! data: sensor streams and indigenous-knowledge observations flow through
//! ingestion, storage, complex event processing, ontology alignment and
//! certainty-factor inference, and come out as drought recommendations over
//! a REST API.

pub mod cep;
pub mod config;
pub mod ingest;
pub mod model;
pub mod ontology;
pub mod pipeline;
pub mod publish;
pub mod reason;
pub mod store;

pub use config::Config;
pub use model::{
    CertaintyFactor, CompositeEvent, Fact, FactDomain, IkObservation, Recommendation,
    SensorReading, Timestamp, ValidationError,
};
pub use pipeline::Pipeline;
