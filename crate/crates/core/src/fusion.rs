//! Nearest-neighbour join of sparse FWD test points onto surface segments.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, FwdTestPoint, LaneKey, LatLon, SurfaceSegment};

pub const EARTH_RADIUS_M: f64 = 6_371_008.8;
pub const DEFAULT_MAX_DISTANCE_M: f64 = 200.0;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("mixed lanes in one call: {0} and {1}")]
    MixedLanes(LaneKey, LaneKey),
    #[error("max distance must be finite and >= 0, got {0}")]
    InvalidMaxDistance(f64),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Full,
    SurfaceOnly,
}

impl Completeness {
    pub fn as_str(self) -> &'static str {
        match self {
            Completeness::Full => "full",
            Completeness::SurfaceOnly => "surface_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedSegmentProfile {
    pub segment: SurfaceSegment,
    pub fwd: Option<FwdTestPoint>,
    pub fwd_distance_m: Option<f64>,
    pub completeness: Completeness,
}

/// Haversine distance in meters.
pub fn great_circle_distance(a: LatLon, b: LatLon) -> Result<f64, DomainError> {
    let a = LatLon::new(a.lat, a.lon)?;
    let b = LatLon::new(b.lat, b.lon)?;
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin())
}

// Total order over points so the result does not depend on input order.
fn point_order(a: &FwdTestPoint, b: &FwdTestPoint) -> Ordering {
    let station = |p: &FwdTestPoint| p.station_m.unwrap_or(f64::INFINITY);
    station(a)
        .total_cmp(&station(b))
        .then(a.latitude.total_cmp(&b.latitude))
        .then(a.longitude.total_cmp(&b.longitude))
        .then_with(|| {
            let key = |p: &FwdTestPoint| {
                [
                    p.basin.d0,
                    p.basin.d12,
                    p.basin.d24,
                    p.basin.d36,
                    p.basin.d60,
                ]
                .map(|d| d.nanometres())
            };
            key(a).cmp(&key(b))
        })
        .then(a.basin.load_lbf.total_cmp(&b.basin.load_lbf))
        .then(
            a.hp_in
                .unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&b.hp_in.unwrap_or(f64::NEG_INFINITY)),
        )
}

fn distance(point: &FwdTestPoint, segment: &SurfaceSegment) -> Result<f64, DomainError> {
    match point.station_m {
        Some(s) => Ok((s - segment.chainage_m()).abs()),
        None => great_circle_distance(point.position(), segment.position()),
    }
}

/// Assigns each segment its nearest FWD point within `max_distance_m`.
/// Distance is along the lane (station against DMI chainage) when the point
/// carries a station, great-circle otherwise. All inputs must share one lane.
pub fn match_fwd_to_segments(
    points: &[FwdTestPoint],
    segments: &[SurfaceSegment],
    max_distance_m: f64,
) -> Result<Vec<FusedSegmentProfile>, FusionError> {
    if !(max_distance_m.is_finite() && max_distance_m >= 0.0) {
        return Err(FusionError::InvalidMaxDistance(max_distance_m));
    }
    let mut key: Option<LaneKey> = None;
    let keys = points
        .iter()
        .map(FwdTestPoint::lane_key)
        .chain(segments.iter().map(SurfaceSegment::lane_key));
    for k in keys {
        match &key {
            None => key = Some(k),
            Some(first) if *first != k => return Err(FusionError::MixedLanes(first.clone(), k)),
            _ => {}
        }
    }

    let mut sorted: Vec<&FwdTestPoint> = points.iter().collect();
    sorted.sort_by(|a, b| point_order(a, b));

    let mut out = Vec::with_capacity(segments.len());
    for segment in segments {
        let mut best: Option<(f64, &FwdTestPoint)> = None;
        for p in &sorted {
            let d = distance(p, segment)?;
            // Strict comparison keeps the earliest point in canonical order.
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
        let profile = match best {
            Some((d, p)) if d <= max_distance_m => FusedSegmentProfile {
                segment: segment.clone(),
                fwd: Some(p.clone()),
                fwd_distance_m: Some(d),
                completeness: Completeness::Full,
            },
            _ => FusedSegmentProfile {
                segment: segment.clone(),
                fwd: None,
                fwd_distance_m: None,
                completeness: Completeness::SurfaceOnly,
            },
        };
        out.push(profile);
    }
    Ok(out)
}

/// Groups a whole dataset by lane and fuses each lane. Lanes with FWD points
/// but no segments produce no profiles.
pub fn fuse_dataset(
    points: &[FwdTestPoint],
    segments: &[SurfaceSegment],
    max_distance_m: f64,
) -> Result<BTreeMap<LaneKey, Vec<FusedSegmentProfile>>, FusionError> {
    let mut lanes: BTreeMap<LaneKey, (Vec<FwdTestPoint>, Vec<SurfaceSegment>)> = BTreeMap::new();
    for p in points {
        lanes.entry(p.lane_key()).or_default().0.push(p.clone());
    }
    for s in segments {
        lanes.entry(s.lane_key()).or_default().1.push(s.clone());
    }
    let mut out = BTreeMap::new();
    for (key, (pts, segs)) in lanes {
        if segs.is_empty() {
            continue;
        }
        out.insert(key, match_fwd_to_segments(&pts, &segs, max_distance_m)?);
    }
    Ok(out)
}
