//! Pavement patching management: measurement ingestion, threshold
//! derivation, structural checks, fusion and patching suggestions.

pub mod analytics;
pub mod domain;
pub mod fusion;
pub mod ingest;
pub mod reliability;
pub mod structural;
pub mod suggest;
