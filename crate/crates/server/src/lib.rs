//! PMT backend: HTTP API and CLI over a local dataset store.

pub mod engine;
pub mod http;
pub mod view;

pub use engine::{Engine, EngineError};
pub use http::router;
