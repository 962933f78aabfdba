use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{is_valid_id, sha256_hex, Dataset, DatasetManifest, FileDigest, IngestError};
use crate::domain::{FwdTestPoint, SurfaceSegment};

const MANIFEST: &str = "manifest.json";
const FWD_RECORDS: &str = "fwd.ndjson";
const SEGMENT_RECORDS: &str = "segments.ndjson";

/// One compact JSON object per line, fields in declaration order.
pub fn canonical_lines<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// File-backed dataset store: `<root>/datasets/<id>/` holds the manifest and
/// the two record files. Datasets appear atomically via directory rename.
#[derive(Debug, Clone)]
pub struct DatasetStore {
    root: PathBuf,
}

impl DatasetStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets"))?;
        Ok(DatasetStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(id)
    }

    pub fn exists(&self, id: &str) -> bool {
        is_valid_id(id) && self.dir(id).join(MANIFEST).is_file()
    }

    /// Persists a dataset and returns its id. The record-file digests in the
    /// stored manifest are filled in here.
    pub fn store(&self, dataset: &Dataset) -> Result<String, IngestError> {
        let id = dataset.manifest.id.clone();
        if !is_valid_id(&id) {
            return Err(IngestError::InvalidId(id));
        }
        let target = self.dir(&id);
        if target.exists() {
            return Err(IngestError::IdCollision(id));
        }

        let fwd = canonical_lines(&dataset.points);
        let segs = canonical_lines(&dataset.segments);
        let mut manifest = dataset.manifest.clone();
        manifest.fwd_count = dataset.points.len();
        manifest.segment_count = dataset.segments.len();
        manifest.record_files = vec![
            FileDigest {
                path: FWD_RECORDS.into(),
                sha256: sha256_hex(fwd.as_bytes()),
            },
            FileDigest {
                path: SEGMENT_RECORDS.into(),
                sha256: sha256_hex(segs.as_bytes()),
            },
        ];

        let tmp = self
            .root
            .join("datasets")
            .join(format!(".tmp-{id}-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        let write = || -> Result<(), IngestError> {
            fs::write(tmp.join(FWD_RECORDS), &fwd)?;
            fs::write(tmp.join(SEGMENT_RECORDS), &segs)?;
            let manifest_json = serde_json::to_string_pretty(&manifest)
                .map_err(|e| IngestError::Corrupted(e.to_string()))?;
            fs::write(tmp.join(MANIFEST), manifest_json + "\n")?;
            Ok(())
        };
        if let Err(e) = write() {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
        match fs::rename(&tmp, &target) {
            Ok(()) => Ok(id),
            Err(e) => {
                let _ = fs::remove_dir_all(&tmp);
                if target.exists() {
                    Err(IngestError::IdCollision(id))
                } else {
                    Err(e.into())
                }
            }
        }
    }

    pub fn manifest(&self, id: &str) -> Result<DatasetManifest, IngestError> {
        if !is_valid_id(id) {
            return Err(IngestError::NotFound(id.to_string()));
        }
        let raw = match fs::read(self.dir(id).join(MANIFEST)) {
            Ok(raw) => raw,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(IngestError::NotFound(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&raw).map_err(|e| IngestError::Corrupted(format!("manifest: {e}")))
    }

    /// Manifests of all stored datasets, ordered by id.
    pub fn list(&self) -> Result<Vec<DatasetManifest>, IngestError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join("datasets"))? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if is_valid_id(&name) {
                ids.push(name);
            }
        }
        ids.sort();
        ids.iter()
            .filter(|id| self.exists(id))
            .map(|id| self.manifest(id))
            .collect()
    }

    fn read_verified(
        &self,
        id: &str,
        manifest: &DatasetManifest,
        name: &str,
    ) -> Result<String, IngestError> {
        let digest = manifest
            .record_files
            .iter()
            .find(|f| f.path == name)
            .ok_or_else(|| IngestError::Corrupted(format!("manifest lacks digest for {name}")))?;
        let bytes = fs::read(self.dir(id).join(name))?;
        let actual = sha256_hex(&bytes);
        if actual != digest.sha256 {
            return Err(IngestError::HashMismatch {
                file: name.to_string(),
                expected: digest.sha256.clone(),
                actual,
            });
        }
        String::from_utf8(bytes).map_err(|e| IngestError::Corrupted(e.to_string()))
    }

    pub fn load(&self, id: &str) -> Result<Dataset, IngestError> {
        let manifest = self.manifest(id)?;
        let fwd = self.read_verified(id, &manifest, FWD_RECORDS)?;
        let segs = self.read_verified(id, &manifest, SEGMENT_RECORDS)?;

        let points: Vec<FwdTestPoint> = parse_lines(&fwd, FWD_RECORDS)?;
        let segments: Vec<SurfaceSegment> = parse_lines(&segs, SEGMENT_RECORDS)?;
        for p in &points {
            p.check()
                .map_err(|e| IngestError::Corrupted(format!("{FWD_RECORDS}: {e}")))?;
        }
        for s in &segments {
            s.check()
                .map_err(|e| IngestError::Corrupted(format!("{SEGMENT_RECORDS}: {e}")))?;
        }
        if points.len() != manifest.fwd_count || segments.len() != manifest.segment_count {
            return Err(IngestError::Corrupted(
                "record counts differ from manifest".into(),
            ));
        }
        Ok(Dataset {
            manifest,
            points,
            segments,
        })
    }
}

fn parse_lines<T: serde::de::DeserializeOwned>(
    text: &str,
    name: &str,
) -> Result<Vec<T>, IngestError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| IngestError::Corrupted(format!("{name} line {}: {e}", i + 1)))
        })
        .collect()
}
