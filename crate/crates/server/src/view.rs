//! Per-segment records served to the map view.

use pmt_core::domain::{DbpVector, Direction, Lane, LatLon};
use pmt_core::fusion::FusedSegmentProfile;
use pmt_core::structural::{snr_for_point, ClassConstants};
use pmt_core::suggest::{PatchingRow, PatchingSuggestion, RatingVector};
use serde::Serialize;

use crate::engine::{EngineError, Result};

/// Google Maps Street View link for a position.
pub fn street_view_url(lat: f64, lon: f64) -> Result<String> {
    let p = LatLon::new(lat, lon).map_err(|e| EngineError::Unprocessable(e.to_string()))?;
    Ok(format!(
        "https://www.google.com/maps/@?api=1&map_action=pano&viewpoint={:.6},{:.6}",
        p.lat, p.lon
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Images {
    pub surface: Option<String>,
    pub row: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentView {
    pub route: String,
    pub direction: Direction,
    pub lane: Lane,
    pub dmi: u64,
    pub rp_km: f64,
    pub latitude: f64,
    pub longitude: f64,
    pub l_iri: f64,
    pub r_iri: f64,
    pub cd_left: f64,
    pub cd_right: f64,
    pub dbps: Option<DbpVector>,
    pub fwd_distance_m: Option<f64>,
    /// Structural number ratio of the matched test point, when computable.
    pub snr: Option<f64>,
    pub ratings: RatingVector,
    pub suggestion: PatchingSuggestion,
    pub marker_color: &'static str,
    pub images: Images,
    pub street_view_url: String,
}

impl SegmentView {
    pub fn new(
        profile: &FusedSegmentProfile,
        row: &PatchingRow,
        constants: &ClassConstants,
    ) -> Result<Self> {
        let s = &row.segment;
        let snr = profile
            .fwd
            .as_ref()
            .and_then(|p| snr_for_point(p, constants).ok())
            .map(|r| r.snr);
        Ok(SegmentView {
            route: s.route.clone(),
            direction: s.direction,
            lane: s.lane,
            dmi: s.dmi,
            rp_km: row.rp_km(),
            latitude: s.latitude,
            longitude: s.longitude,
            l_iri: s.l_iri,
            r_iri: s.r_iri,
            cd_left: s.cd_left,
            cd_right: s.cd_right,
            dbps: row.dbps,
            fwd_distance_m: profile.fwd_distance_m,
            snr,
            ratings: row.ratings,
            suggestion: row.suggestion.clone(),
            marker_color: row.suggestion.decision.marker_color(),
            images: Images {
                surface: s.surface_image.clone(),
                row: s.row_image.clone(),
            },
            street_view_url: street_view_url(s.latitude, s.longitude)?,
        })
    }
}
