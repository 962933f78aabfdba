//! Shared backend for the HTTP API and the CLI: dataset snapshot, threshold
//! overrides and the per-road queries.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use pmt_core::analytics::{
    box_stats, exceedance_stems, histogram, series_values, AnalyticsError, BoxStats, Histogram,
    Series, Stem,
};
use pmt_core::domain::{
    Direction, Lane, LaneKey, Parameter, Provenance, RoadClass, ThresholdBand, ThresholdSet,
};
use pmt_core::fusion::{fuse_dataset, FusedSegmentProfile, DEFAULT_MAX_DISTANCE_M};
use pmt_core::ingest::{
    build_dataset, Dataset, DatasetManifest, DatasetStore, IngestError, IngestReports, SourceFile,
    UnitSystem,
};
use pmt_core::reliability::{
    derive_threshold_set, DeriveConfig, ReliabilityError, ReliabilityPair,
};
use pmt_core::structural::ClassConstants;
use pmt_core::suggest::{export_patching_tables, suggest_road, PatchingTable};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::view::SegmentView;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("upload exceeds the size limit")]
    TooLarge,
    #[error("{0}")]
    Io(String),
}

impl EngineError {
    /// 2 for storage and I/O failures, 1 for everything caused by input.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Io(_) => 2,
            _ => 1,
        }
    }
}

impl From<IngestError> for EngineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Schema(_) => EngineError::Schema(e.to_string()),
            IngestError::InvalidId(_) => EngineError::BadRequest(e.to_string()),
            IngestError::IdCollision(_) => EngineError::Conflict(e.to_string()),
            IngestError::NotFound(_) => EngineError::NotFound(e.to_string()),
            IngestError::HashMismatch { .. } | IngestError::Corrupted(_) | IngestError::Io(_) => {
                EngineError::Io(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for EngineError {
    fn from(e: std::io::Error) -> Self {
        EngineError::Io(e.to_string())
    }
}

impl From<ReliabilityError> for EngineError {
    fn from(e: ReliabilityError) -> Self {
        EngineError::Unprocessable(e.to_string())
    }
}

impl From<AnalyticsError> for EngineError {
    fn from(e: AnalyticsError) -> Self {
        EngineError::Unprocessable(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandValues {
    pub lower: f64,
    pub upper: f64,
}

/// User-adjusted bands for one road class; parameters not listed keep the
/// builtin band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOverride {
    pub road_class: RoadClass,
    #[serde(default)]
    pub bands: BTreeMap<Parameter, BandValues>,
    #[serde(default)]
    pub note: Option<String>,
}

/// Applies bands on top of `base`. Each band must satisfy lower < upper.
pub fn apply_bands(
    base: &ThresholdSet,
    bands: &BTreeMap<Parameter, BandValues>,
) -> Result<ThresholdSet> {
    let mut set = base.clone();
    for (p, b) in bands {
        let band = ThresholdBand::new(*p, b.lower, b.upper)
            .map_err(|e| EngineError::Unprocessable(format!("{p}: {e}")))?;
        set.set_band(band)
            .map_err(|e| EngineError::Unprocessable(format!("{p}: {e}")))?;
    }
    if !bands.is_empty() {
        set.provenance = Provenance::UserOverride;
    }
    Ok(set)
}

/// Parses `param:lower:upper,...`. An empty string gives no bands.
pub fn parse_band_spec(spec: &str) -> Result<BTreeMap<Parameter, BandValues>> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let [p, lo, hi] = parts[..] else {
            return Err(EngineError::Unprocessable(format!(
                "threshold '{item}' is not param:lower:upper"
            )));
        };
        let parameter: Parameter = p.parse().map_err(|e: pmt_core::domain::DomainError| {
            EngineError::Unprocessable(e.to_string())
        })?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    EngineError::Unprocessable(format!("invalid number '{s}' in '{item}'"))
                })
        };
        let band = BandValues {
            lower: num(lo)?,
            upper: num(hi)?,
        };
        if out.insert(parameter, band).is_some() {
            return Err(EngineError::Unprocessable(format!(
                "{parameter} given twice"
            )));
        }
    }
    Ok(out)
}

/// Optional direction/lane filter for road queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LaneFilter {
    pub direction: Option<Direction>,
    pub lane: Option<Lane>,
}

impl LaneFilter {
    pub fn parse(direction: Option<&str>, lane: Option<&str>) -> Result<Self> {
        let un = |e: pmt_core::domain::DomainError| EngineError::Unprocessable(e.to_string());
        Ok(LaneFilter {
            direction: direction
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .transpose()
                .map_err(un)?,
            lane: lane
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .transpose()
                .map_err(un)?,
        })
    }

    fn matches(&self, key: &LaneKey) -> bool {
        self.direction.is_none_or(|d| d == key.direction) && self.lane.is_none_or(|l| l == key.lane)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    None,
    Lane,
    Direction,
    LaneKey,
}

impl std::str::FromStr for GroupBy {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" | "none" => Ok(GroupBy::None),
            "lane" => Ok(GroupBy::Lane),
            "direction" => Ok(GroupBy::Direction),
            "lane_key" => Ok(GroupBy::LaneKey),
            other => Err(EngineError::Unprocessable(format!(
                "unknown groupby '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: String,
    pub stats: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaneStems {
    pub direction: Direction,
    pub lane: Lane,
    pub stems: Vec<Stem>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestOutcome {
    pub manifest: DatasetManifest,
    pub reports: IngestReports,
}

pub struct IngestRequest<'a> {
    pub fwd: SourceFile<'a>,
    pub segments: SourceFile<'a>,
    pub road_class: RoadClass,
    pub units: UnitSystem,
    pub id: Option<&'a str>,
}

struct LoadedDataset {
    dataset: Dataset,
    lanes: BTreeMap<LaneKey, Vec<FusedSegmentProfile>>,
}

impl LoadedDataset {
    fn new(dataset: Dataset) -> Result<Self> {
        let lanes = fuse_dataset(&dataset.points, &dataset.segments, DEFAULT_MAX_DISTANCE_M)
            .map_err(|e| EngineError::Io(format!("dataset {}: {e}", dataset.manifest.id)))?;
        Ok(LoadedDataset { dataset, lanes })
    }
}

/// Immutable view served to readers; writers build a new one and swap it in.
#[derive(Default)]
struct Snapshot {
    datasets: BTreeMap<String, Arc<LoadedDataset>>,
    overrides: BTreeMap<RoadClass, ThresholdOverride>,
}

pub struct Engine {
    data_dir: PathBuf,
    store: DatasetStore,
    snapshot: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

fn override_path(data_dir: &Path, class: RoadClass) -> PathBuf {
    data_dir
        .join("thresholds")
        .join(format!("{}.json", class.as_str()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("path has a parent");
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl Engine {
    /// Opens (creating if needed) a data directory and loads every stored
    /// dataset and threshold override, verifying dataset hashes.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self> {
        let data_dir = data_dir.into();
        let store = DatasetStore::open(&data_dir)?;
        let mut snap = Snapshot::default();
        for m in store.list()? {
            let ds = store.load(&m.id)?;
            snap.datasets
                .insert(m.id.clone(), Arc::new(LoadedDataset::new(ds)?));
        }
        for class in RoadClass::ALL {
            let path = override_path(&data_dir, class);
            match fs::read(&path) {
                Ok(bytes) => {
                    let o: ThresholdOverride = serde_json::from_slice(&bytes)
                        .map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))?;
                    snap.overrides.insert(class, o);
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Engine {
            data_dir,
            store,
            snapshot: RwLock::new(Arc::new(snap)),
            writer: Mutex::new(()),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn snap(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn swap(&self, f: impl FnOnce(&Snapshot) -> Snapshot) {
        let mut guard = self.snapshot.write().expect("snapshot lock");
        let next = f(&guard);
        *guard = Arc::new(next);
    }

    pub fn list_datasets(&self) -> Vec<DatasetManifest> {
        self.snap()
            .datasets
            .values()
            .map(|d| d.dataset.manifest.clone())
            .collect()
    }

    pub fn ingest(&self, req: IngestRequest<'_>) -> Result<IngestOutcome> {
        let _w = self.writer.lock().expect("writer lock");
        let (dataset, reports) =
            build_dataset(req.fwd, req.segments, req.road_class, req.units, req.id)?;
        let id = self.store.store(&dataset)?;
        let stored = self.store.load(&id)?;
        let loaded = Arc::new(LoadedDataset::new(stored)?);
        let manifest = loaded.dataset.manifest.clone();
        self.swap(|s| {
            let mut datasets = s.datasets.clone();
            datasets.insert(id, loaded);
            Snapshot {
                datasets,
                overrides: s.overrides.clone(),
            }
        });
        Ok(IngestOutcome { manifest, reports })
    }

    fn effective(snap: &Snapshot, class: RoadClass) -> Result<ThresholdSet> {
        let base = ThresholdSet::builtin(class);
        match snap.overrides.get(&class) {
            Some(o) => apply_bands(&base, &o.bands),
            None => Ok(base),
        }
    }

    /// Builtin bands with the stored override applied.
    pub fn thresholds(&self, class: RoadClass) -> Result<ThresholdSet> {
        Self::effective(&self.snap(), class)
    }

    pub fn stored_override(&self, class: RoadClass) -> Option<ThresholdOverride> {
        self.snap().overrides.get(&class).cloned()
    }

    /// Validates and persists an override, replacing any previous one. An
    /// override without bands removes it.
    pub fn put_override(
        &self,
        class: RoadClass,
        bands: BTreeMap<Parameter, BandValues>,
        note: Option<String>,
    ) -> Result<ThresholdSet> {
        let _w = self.writer.lock().expect("writer lock");
        let effective = apply_bands(&ThresholdSet::builtin(class), &bands)?;
        let path = override_path(&self.data_dir, class);
        let stored = if bands.is_empty() {
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
            None
        } else {
            let o = ThresholdOverride {
                road_class: class,
                bands,
                note,
            };
            let json = serde_json::to_vec_pretty(&o).expect("override serializes");
            write_atomic(&path, &json)?;
            Some(o)
        };
        self.swap(|s| {
            let mut overrides = s.overrides.clone();
            match stored {
                Some(o) => overrides.insert(class, o),
                None => overrides.remove(&class),
            };
            Snapshot {
                datasets: s.datasets.clone(),
                overrides,
            }
        });
        Ok(effective)
    }

    /// Derives a threshold set from a stored dataset. Nothing is installed.
    pub fn derive(&self, dataset_id: &str, pair: Option<ReliabilityPair>) -> Result<ThresholdSet> {
        let snap = self.snap();
        let ds = snap
            .datasets
            .get(dataset_id)
            .ok_or_else(|| EngineError::NotFound(format!("dataset '{dataset_id}' not found")))?;
        let class = ds.dataset.manifest.road_class;
        let pair = pair.unwrap_or_else(|| ReliabilityPair::default_for(class));
        Ok(derive_threshold_set(
            &ds.dataset.points,
            &ds.dataset.segments,
            class,
            pair,
            DeriveConfig::default(),
        )?)
    }

    /// Stores every band of `set` as the override for its class.
    pub fn install(&self, set: &ThresholdSet, note: Option<String>) -> Result<ThresholdSet> {
        let bands = Parameter::ALL
            .into_iter()
            .filter_map(|p| {
                set.band(p).map(|b| {
                    (
                        p,
                        BandValues {
                            lower: b.lower,
                            upper: b.upper,
                        },
                    )
                })
            })
            .collect();
        self.put_override(set.road_class, bands, note)
    }

    // Newest dataset containing the route, by ingestion time then id.
    fn road(snap: &Snapshot, route: &str) -> Result<Arc<LoadedDataset>> {
        snap.datasets
            .values()
            .filter(|d| d.lanes.keys().any(|k| k.route == route))
            .max_by(|a, b| {
                let key = |d: &LoadedDataset| {
                    (
                        d.dataset.manifest.ingested_at.clone(),
                        d.dataset.manifest.id.clone(),
                    )
                };
                key(a).cmp(&key(b))
            })
            .cloned()
            .ok_or_else(|| EngineError::NotFound(format!("route '{route}' not found")))
    }

    fn road_context(
        &self,
        route: &str,
        filter: LaneFilter,
        query_bands: &BTreeMap<Parameter, BandValues>,
    ) -> Result<(Arc<LoadedDataset>, ThresholdSet, Vec<LaneKey>)> {
        let snap = self.snap();
        let road = Self::road(&snap, route)?;
        let base = Self::effective(&snap, road.dataset.manifest.road_class)?;
        let thresholds = apply_bands(&base, query_bands)?;
        let keys = road
            .lanes
            .keys()
            .filter(|k| k.route == route && filter.matches(k))
            .cloned()
            .collect();
        Ok((road, thresholds, keys))
    }

    pub fn road_class(&self, route: &str) -> Result<RoadClass> {
        Ok(Self::road(&self.snap(), route)?.dataset.manifest.road_class)
    }

    /// One table per lane, in lane order.
    pub fn patching_tables(
        &self,
        route: &str,
        filter: LaneFilter,
        query_bands: &BTreeMap<Parameter, BandValues>,
    ) -> Result<Vec<PatchingTable>> {
        let (road, thresholds, keys) = self.road_context(route, filter, query_bands)?;
        keys.iter()
            .map(|k| {
                suggest_road(&road.lanes[k], &thresholds)
                    .map_err(|e| EngineError::Unprocessable(e.to_string()))
            })
            .collect()
    }

    pub fn patching_csv(
        &self,
        route: &str,
        filter: LaneFilter,
        query_bands: &BTreeMap<Parameter, BandValues>,
    ) -> Result<Vec<u8>> {
        let tables = self.patching_tables(route, filter, query_bands)?;
        Ok(export_patching_tables(&tables.iter().collect::<Vec<_>>()))
    }

    pub fn segments(
        &self,
        route: &str,
        filter: LaneFilter,
        query_bands: &BTreeMap<Parameter, BandValues>,
    ) -> Result<Vec<SegmentView>> {
        let (road, thresholds, keys) = self.road_context(route, filter, query_bands)?;
        let constants = ClassConstants::default_for(road.dataset.manifest.road_class);
        let mut out = Vec::new();
        for k in &keys {
            let profiles = &road.lanes[k];
            let table = suggest_road(profiles, &thresholds)
                .map_err(|e| EngineError::Unprocessable(e.to_string()))?;
            let mut by_dmi: BTreeMap<u64, &FusedSegmentProfile> = BTreeMap::new();
            for p in profiles {
                by_dmi.insert(p.segment.dmi, p);
            }
            for row in &table.rows {
                out.push(SegmentView::new(by_dmi[&row.segment.dmi], row, &constants)?);
            }
        }
        Ok(out)
    }

    fn filtered_profiles(
        road: &LoadedDataset,
        keys: &[LaneKey],
    ) -> Vec<(LaneKey, FusedSegmentProfile)> {
        keys.iter()
            .flat_map(|k| road.lanes[k].iter().map(move |p| (k.clone(), p.clone())))
            .collect()
    }

    pub fn stats(
        &self,
        route: &str,
        series: Series,
        groupby: GroupBy,
        filter: LaneFilter,
    ) -> Result<Vec<GroupStats>> {
        let (road, thresholds, keys) = self.road_context(route, filter, &BTreeMap::new())?;
        let threshold = thresholds.band(series.parameter()).map(|b| b.upper);
        let mut groups: BTreeMap<String, Vec<FusedSegmentProfile>> = BTreeMap::new();
        for (k, p) in Self::filtered_profiles(&road, &keys) {
            let g = match groupby {
                GroupBy::None => "all".to_string(),
                GroupBy::Lane => k.lane.to_string(),
                GroupBy::Direction => k.direction.to_string(),
                GroupBy::LaneKey => format!("{}-{}", k.direction, k.lane),
            };
            groups.entry(g).or_default().push(p);
        }
        let mut out = Vec::new();
        for (group, profiles) in groups {
            let values = series_values(&profiles, series);
            if values.is_empty() {
                continue;
            }
            out.push(GroupStats {
                group,
                stats: box_stats(&values, threshold)?,
            });
        }
        Ok(out)
    }

    pub fn histogram(
        &self,
        route: &str,
        series: Series,
        bins: usize,
        filter: LaneFilter,
    ) -> Result<Histogram> {
        let (road, _, keys) = self.road_context(route, filter, &BTreeMap::new())?;
        let profiles: Vec<FusedSegmentProfile> = Self::filtered_profiles(&road, &keys)
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        let values = series_values(&profiles, series);
        let mut h = histogram(&values, bins)?;
        h.parameter = Some(series);
        Ok(h)
    }

    pub fn stems(
        &self,
        route: &str,
        series: Series,
        filter: LaneFilter,
        query_bands: &BTreeMap<Parameter, BandValues>,
    ) -> Result<Vec<LaneStems>> {
        let (road, thresholds, keys) = self.road_context(route, filter, query_bands)?;
        keys.iter()
            .map(|k| {
                Ok(LaneStems {
                    direction: k.direction,
                    lane: k.lane,
                    stems: exceedance_stems(&road.lanes[k], &thresholds, series)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_spec_parsing() {
        let b = parse_band_spec("iri:0.5:1.0, d0:100:200").unwrap();
        assert_eq!(
            b[&Parameter::Iri],
            BandValues {
                lower: 0.5,
                upper: 1.0
            }
        );
        assert_eq!(
            b[&Parameter::D0],
            BandValues {
                lower: 100.0,
                upper: 200.0
            }
        );
        assert!(parse_band_spec("").unwrap().is_empty());
        for bad in ["iri:1", "x:1:2", "iri:a:2", "iri:1:2,iri:1:3", "iri:1:inf"] {
            assert!(
                matches!(parse_band_spec(bad), Err(EngineError::Unprocessable(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn inverted_band_is_unprocessable() {
        let mut bands = BTreeMap::new();
        bands.insert(
            Parameter::D0,
            BandValues {
                lower: 200.0,
                upper: 150.0,
            },
        );
        let base = ThresholdSet::builtin(RoadClass::InterstateHighway);
        assert!(matches!(
            apply_bands(&base, &bands),
            Err(EngineError::Unprocessable(_))
        ));
    }

    #[test]
    fn overrides_persist_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let engine = Engine::open(dir.path()).unwrap();
        let mut bands = BTreeMap::new();
        bands.insert(
            Parameter::Iri,
            BandValues {
                lower: 1.5,
                upper: 2.5,
            },
        );
        engine
            .put_override(RoadClass::UsHighway, bands, Some("trial".into()))
            .unwrap();
        let reopened = Engine::open(dir.path()).unwrap();
        let t = reopened.thresholds(RoadClass::UsHighway).unwrap();
        assert_eq!((t.iri.unwrap().lower, t.iri.unwrap().upper), (1.5, 2.5));
        assert_eq!(t.provenance, Provenance::UserOverride);
        reopened
            .put_override(RoadClass::UsHighway, BTreeMap::new(), None)
            .unwrap();
        assert_eq!(
            Engine::open(dir.path())
                .unwrap()
                .thresholds(RoadClass::UsHighway)
                .unwrap(),
            ThresholdSet::builtin(RoadClass::UsHighway)
        );
    }

    #[test]
    fn lane_filter_parsing() {
        let f = LaneFilter::parse(Some("WB"), Some("pl")).unwrap();
        assert_eq!((f.direction, f.lane), (Some(Direction::WB), Some(Lane::PL)));
        assert_eq!(
            LaneFilter::parse(Some(""), None).unwrap(),
            LaneFilter::default()
        );
        assert!(LaneFilter::parse(Some("XB"), None).is_err());
    }
}
