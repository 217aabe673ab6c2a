//! Data publishing: the REST seams between the functional groups and the
//! canonical JSON wire shapes.

mod service;
pub mod wire;

pub use service::{serve, ApiError, ServeError, ServiceHandle};
pub use wire::{deserialize_recommendation, serialize_recommendation, serialize_recommendations};
