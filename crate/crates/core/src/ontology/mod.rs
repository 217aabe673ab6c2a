//! Semantic layer: class vocabularies with subsumption, alignment of
//! readings and observations into triples, and a SPARQL-subset SELECT
//! engine over the triple store.

mod align;
mod query;
mod vocab;

pub use align::{align_ik, align_sensor, canonical_f64};
pub use query::{parse_select, select, QueryError, ResultTable, SelectQuery};
pub use vocab::{PropertyDecl, PropertyRange, Vocabulary, VocabularyError, OWL_THING};
