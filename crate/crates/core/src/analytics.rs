//! Box-plot statistics, histograms and per-DMI exceedance stems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{classify, Parameter, Quantity, Rating, ThresholdSet};
use crate::fusion::FusedSegmentProfile;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("no values")]
    Empty,
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("no threshold band for {0}")]
    MissingBand(Series),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// Values strictly above the supplied threshold, ascending.
    pub outliers: Vec<f64>,
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite(*v));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

// Linear interpolation at h = (n - 1) p.
fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn box_stats(values: &[f64], threshold: Option<f64>) -> Result<BoxStats, AnalyticsError> {
    let s = sorted_finite(values)?;
    let outliers = match threshold {
        Some(t) => s.iter().copied().filter(|v| *v > t).collect(),
        None => Vec::new(),
    };
    Ok(BoxStats {
        n: s.len(),
        min: s[0],
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        q3: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
        outliers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub parameter: Option<Series>,
    /// bins + 1 ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over [min, max]; the last bin includes its right edge.
/// Constant data is widened by a small epsilon so edges stay increasing.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram, AnalyticsError> {
    if bins == 0 {
        return Err(AnalyticsError::ZeroBins);
    }
    let s = sorted_finite(values)?;
    let mut lo = s[0];
    let mut hi = s[s.len() - 1];
    if hi <= lo {
        let eps = (lo.abs() * 1e-9).max(1e-9);
        lo -= eps;
        hi += eps;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    let mut counts = vec![0usize; bins];
    for v in s {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        // Guard against rounding putting v on the wrong side of an edge.
        let idx = if v < edges[idx] {
            idx - 1
        } else if idx + 1 < bins && v >= edges[idx + 1] {
            idx + 1
        } else {
            idx
        };
        counts[idx] += 1;
    }
    Ok(Histogram {
        parameter: None,
        edges,
        counts,
    })
}

/// A per-segment value series: each wheel path of IRI and CD is its own
/// series; FWD series exist only where a test point was assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    LIri,
    RIri,
    CdLeft,
    CdRight,
    D0,
    Sci,
    Bdi,
    D60,
    Bci,
}

impl Series {
    pub const ALL: [Series; 9] = [
        Series::LIri,
        Series::RIri,
        Series::CdLeft,
        Series::CdRight,
        Series::D0,
        Series::Sci,
        Series::Bdi,
        Series::D60,
        Series::Bci,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Series::LIri => "l_iri",
            Series::RIri => "r_iri",
            Series::CdLeft => "cd_left",
            Series::CdRight => "cd_right",
            Series::D0 => "d0",
            Series::Sci => "sci",
            Series::Bdi => "bdi",
            Series::D60 => "d60",
            Series::Bci => "bci",
        }
    }

    /// The parameter whose band rates this series.
    pub fn parameter(self) -> Parameter {
        match self {
            Series::LIri | Series::RIri => Parameter::Iri,
            Series::CdLeft | Series::CdRight => Parameter::Cd,
            Series::D0 => Parameter::D0,
            Series::Sci => Parameter::Sci,
            Series::Bdi => Parameter::Bdi,
            Series::D60 => Parameter::D60,
            Series::Bci => Parameter::Bci,
        }
    }

    /// Value for one profile in the parameter's canonical unit.
    pub fn value(self, p: &FusedSegmentProfile) -> Option<f64> {
        let s = &p.segment;
        let fwd = p.fwd.as_ref().map(|f| f.dbps);
        match self {
            Series::LIri => Some(s.l_iri),
            Series::RIri => Some(s.r_iri),
            Series::CdLeft => Some(s.cd_left),
            Series::CdRight => Some(s.cd_right),
            Series::D0 => fwd.map(|d| d.d0.microns()),
            Series::Sci => fwd.map(|d| d.sci.microns()),
            Series::Bdi => fwd.map(|d| d.bdi.microns()),
            Series::D60 => fwd.map(|d| d.d60.microns()),
            Series::Bci => fwd.map(|d| d.bci.microns()),
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Series {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        let alias = match norm.as_str() {
            "cd_left_pct" => "cd_left",
            "cd_right_pct" => "cd_right",
            other => other,
        };
        Series::ALL
            .into_iter()
            .find(|x| x.as_str() == alias)
            .ok_or_else(|| AnalyticsError::UnknownParameter(s.to_string()))
    }
}

/// Values of a series across profiles, skipping profiles without a value.
pub fn series_values(profiles: &[FusedSegmentProfile], series: Series) -> Vec<f64> {
    profiles.iter().filter_map(|p| series.value(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stem {
    pub dmi: u64,
    pub value: f64,
    pub rating: Rating,
    /// Above the upper threshold.
    pub flagged: bool,
}

/// One stem per profile that has a value for `series`, ordered by DMI.
pub fn exceedance_stems(
    profiles: &[FusedSegmentProfile],
    thresholds: &ThresholdSet,
    series: Series,
) -> Result<Vec<Stem>, AnalyticsError> {
    let band = thresholds
        .band(series.parameter())
        .ok_or(AnalyticsError::MissingBand(series))?;
    let mut stems: Vec<Stem> = profiles
        .iter()
        .filter_map(|p| series.value(p).map(|v| (p.segment.dmi, v)))
        .map(|(dmi, value)| {
            let rating = classify(Quantity::new(value, band.unit), band)
                .map_err(|_| AnalyticsError::NonFinite(value))?;
            Ok(Stem {
                dmi,
                value,
                rating,
                flagged: rating == Rating::Poor,
            })
        })
        .collect::<Result<_, AnalyticsError>>()?;
    stems.sort_by_key(|s| s.dmi);
    Ok(stems)
}
