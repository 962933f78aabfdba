//! ECDF construction and reliability-percentile threshold derivation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    DomainError, FwdTestPoint, Parameter, Provenance, RoadClass, SurfaceSegment, ThresholdBand,
    ThresholdSet,
};

pub const DEFAULT_MIN_SAMPLES: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReliabilityError {
    #[error("empty sample set")]
    Empty,
    #[error("non-finite sample {0}")]
    NonFinite(f64),
    #[error("percentile {0} outside (0, 100]")]
    PercentileOutOfRange(f64),
    #[error("invalid reliability pair ({lower}, {upper})")]
    InvalidPair { lower: f64, upper: f64 },
    #[error("insufficient samples for {parameter}: {count} < {min}")]
    InsufficientSamples {
        parameter: Parameter,
        count: usize,
        min: usize,
    },
    #[error("degenerate threshold for {parameter}: lower {lower} >= upper {upper}")]
    Degenerate {
        parameter: Parameter,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Empirical CDF: F(x) = #{samples <= x} / n.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

pub fn build_ecdf(samples: &[f64]) -> Result<Ecdf, ReliabilityError> {
    Ecdf::new(samples.to_vec())
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, ReliabilityError> {
        if samples.is_empty() {
            return Err(ReliabilityError::Empty);
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(ReliabilityError::NonFinite(*bad));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|v| *v <= x);
        at_or_below as f64 / self.sorted.len() as f64
    }

    /// Nearest-rank percentile: the sample at 1-based rank ceil(p/100 * n),
    /// i.e. the smallest sample whose ECDF value reaches p/100.
    pub fn percentile(&self, p: f64) -> Result<f64, ReliabilityError> {
        if !(p > 0.0 && p <= 100.0) {
            return Err(ReliabilityError::PercentileOutOfRange(p));
        }
        let n = self.sorted.len();
        let exact = p * n as f64 / 100.0;
        // p*n/100 is often integral in exact arithmetic; absorb rounding noise
        // before taking the ceiling.
        let nearest = exact.round();
        let rank = if (exact - nearest).abs() < 1e-9 {
            nearest
        } else {
            exact.ceil()
        };
        let rank = (rank as usize).clamp(1, n);
        Ok(self.sorted[rank - 1])
    }
}

pub fn percentile(ecdf: &Ecdf, p: f64) -> Result<f64, ReliabilityError> {
    ecdf.percentile(p)
}

/// Reliability levels in percent: the lower level separates Good from Fair,
/// the upper separates Fair from Poor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPair {
    pub lower: f64,
    pub upper: f64,
}

impl ReliabilityPair {
    pub fn new(lower: f64, upper: f64) -> Result<Self, ReliabilityError> {
        let in_range = |v: f64| v > 0.0 && v < 100.0;
        if in_range(lower) && in_range(upper) && lower < upper {
            Ok(ReliabilityPair { lower, upper })
        } else {
            Err(ReliabilityError::InvalidPair { lower, upper })
        }
    }

    pub fn default_for(class: RoadClass) -> Self {
        match class {
            RoadClass::StateRoad => ReliabilityPair {
                lower: 80.0,
                upper: 85.0,
            },
            RoadClass::UsHighway => ReliabilityPair {
                lower: 85.0,
                upper: 90.0,
            },
            RoadClass::InterstateHighway => ReliabilityPair {
                lower: 90.0,
                upper: 95.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DeriveConfig {
    pub min_samples: usize,
}

impl Default for DeriveConfig {
    fn default() -> Self {
        DeriveConfig {
            min_samples: DEFAULT_MIN_SAMPLES,
        }
    }
}

fn fwd_samples(points: &[FwdTestPoint], parameter: Parameter) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let d = match parameter {
                Parameter::D0 => p.dbps.d0,
                Parameter::D60 => p.dbps.d60,
                Parameter::Sci => p.dbps.sci,
                Parameter::Bci => p.dbps.bci,
                Parameter::Bdi => p.dbps.bdi,
                Parameter::Iri | Parameter::Cd => unreachable!("not an FWD parameter"),
            };
            d.microns()
        })
        .collect()
}

// IRI and CD pool both wheel paths into one sample.
fn surface_samples(segments: &[SurfaceSegment], parameter: Parameter) -> Vec<f64> {
    segments
        .iter()
        .flat_map(|s| match parameter {
            Parameter::Iri => [s.l_iri, s.r_iri],
            Parameter::Cd => [s.cd_left, s.cd_right],
            _ => unreachable!("not a surface parameter"),
        })
        .collect()
}

fn derive_band(
    parameter: Parameter,
    samples: Vec<f64>,
    pair: ReliabilityPair,
    config: DeriveConfig,
) -> Result<ThresholdBand, ReliabilityError> {
    if samples.len() < config.min_samples.max(1) {
        return Err(ReliabilityError::InsufficientSamples {
            parameter,
            count: samples.len(),
            min: config.min_samples,
        });
    }
    let ecdf = Ecdf::new(samples)?;
    let lower = ecdf.percentile(pair.lower)?;
    let upper = ecdf.percentile(pair.upper)?;
    if lower >= upper {
        return Err(ReliabilityError::Degenerate {
            parameter,
            lower,
            upper,
        });
    }
    Ok(ThresholdBand::new(parameter, lower, upper)?)
}

/// Derives a threshold set from measured data. FWD bands come from the
/// points; IRI and CD bands from the segments, and are left missing when no
/// segments are given.
pub fn derive_threshold_set(
    points: &[FwdTestPoint],
    segments: &[SurfaceSegment],
    road_class: RoadClass,
    pair: ReliabilityPair,
    config: DeriveConfig,
) -> Result<ThresholdSet, ReliabilityError> {
    let pair = ReliabilityPair::new(pair.lower, pair.upper)?;
    let fwd = |p| derive_band(p, fwd_samples(points, p), pair, config);
    let surface = |p| -> Result<Option<ThresholdBand>, ReliabilityError> {
        if segments.is_empty() {
            Ok(None)
        } else {
            derive_band(p, surface_samples(segments, p), pair, config).map(Some)
        }
    };
    Ok(ThresholdSet {
        road_class,
        provenance: Provenance::Derived,
        d0: fwd(Parameter::D0)?,
        d60: fwd(Parameter::D60)?,
        sci: fwd(Parameter::Sci)?,
        bci: fwd(Parameter::Bci)?,
        bdi: fwd(Parameter::Bdi)?,
        iri: surface(Parameter::Iri)?,
        cd: surface(Parameter::Cd)?,
    })
}
