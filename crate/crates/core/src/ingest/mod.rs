//! Parsing, validation, unit normalization and persistence of FWD and
//! surface-segment measurement files.

mod parse;
mod store;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{FwdTestPoint, RoadClass, SurfaceSegment};

pub use parse::{parse_fwd_csv, parse_segment_csv, FWD_HEADER, SEGMENT_HEADER};
pub use store::{canonical_lines, DatasetStore};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid dataset id '{0}'")]
    InvalidId(String),
    #[error("dataset '{0}' already exists")]
    IdCollision(String),
    #[error("dataset '{0}' not found")]
    NotFound(String),
    #[error("hash mismatch for {file}: manifest {expected}, found {actual}")]
    HashMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("corrupted dataset: {0}")]
    Corrupted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    /// Errors caused by the input data rather than the environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            IngestError::Schema(_) | IngestError::InvalidId(_) | IngestError::IdCollision(_)
        )
    }
}

/// Units the input file was written in. SI: microns and m/km; US: mils and
/// in/mi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Si,
    Us,
}

impl std::str::FromStr for UnitSystem {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "si" => Ok(UnitSystem::Si),
            "us" => Ok(UnitSystem::Us),
            other => Err(IngestError::Schema(format!(
                "unknown unit system '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub line: u64,
    pub message: String,
}

/// Outcome of parsing one file. `accepted + rejected.len()` equals the number
/// of data lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub id: String,
    pub road_class: RoadClass,
    pub units: UnitSystem,
    pub source_files: Vec<FileDigest>,
    pub fwd_count: usize,
    pub segment_count: usize,
    pub ingested_at: String,
    /// Digests of the persisted record files, checked on load.
    pub record_files: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub points: Vec<FwdTestPoint>,
    pub segments: Vec<SurfaceSegment>,
}

impl Dataset {
    pub fn routes(&self) -> Vec<String> {
        let mut r: Vec<String> = self
            .points
            .iter()
            .map(|p| p.route.clone())
            .chain(self.segments.iter().map(|s| s.route.clone()))
            .collect();
        r.sort();
        r.dedup();
        r
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One input file: its name as supplied and its raw bytes.
pub struct SourceFile<'a> {
    pub path: &'a str,
    pub bytes: &'a [u8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReports {
    pub fwd: ValidationReport,
    pub segments: ValidationReport,
}

pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Hashes and parses a pair of measurement files into an unsaved dataset.
/// Without an explicit id, one is derived from the content hashes.
pub fn build_dataset(
    fwd: SourceFile<'_>,
    segments: SourceFile<'_>,
    road_class: RoadClass,
    units: UnitSystem,
    id: Option<&str>,
) -> Result<(Dataset, IngestReports), IngestError> {
    let source_files = vec![
        FileDigest {
            path: fwd.path.to_string(),
            sha256: sha256_hex(fwd.bytes),
        },
        FileDigest {
            path: segments.path.to_string(),
            sha256: sha256_hex(segments.bytes),
        },
    ];
    let (points, fwd_report) = parse_fwd_csv(fwd.bytes, units)?;
    let (segs, seg_report) = parse_segment_csv(segments.bytes, units)?;

    let id = match id {
        Some(id) if is_valid_id(id) => id.to_string(),
        Some(id) => return Err(IngestError::InvalidId(id.to_string())),
        None => {
            let seed = format!(
                "{}:{}:{}:{:?}",
                source_files[0].sha256, source_files[1].sha256, road_class, units
            );
            format!("{}-{}", road_class, &sha256_hex(seed.as_bytes())[..12])
        }
    };

    let manifest = DatasetManifest {
        id,
        road_class,
        units,
        source_files,
        fwd_count: points.len(),
        segment_count: segs.len(),
        ingested_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        record_files: Vec::new(),
    };
    Ok((
        Dataset {
            manifest,
            points,
            segments: segs,
        },
        IngestReports {
            fwd: fwd_report,
            segments: seg_report,
        },
    ))
}
