//! Shared vocabulary: measurement records, deflection basin parameters,
//! rating bands and unit handling.
//!
//! Canonical units inside the crate are microns for deflections, m/km for
//! IRI, percent for crack density, inches for pavement thickness and
//! pounds-force for FWD load. Conversions happen at the parsing boundary.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Microns per mil (exact).
pub const MICRONS_PER_MIL: f64 = 25.4;
/// in/mi per m/km (exact: 63360 in per mile / 1000 m per km).
pub const IN_PER_MI_PER_M_PER_KM: f64 = 63.36;
/// Length of one surface segment along the lane, in meters.
pub const SEGMENT_LENGTH_M: f64 = 1.8;
/// Width of the lane footprint a segment marker stands for, in meters.
pub const SEGMENT_WIDTH_M: f64 = 3.6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("invalid basin: {0}")]
    InvalidBasin(String),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("unit mismatch: value in {value}, band in {band}")]
    UnitMismatch { value: Unit, band: Unit },
    #[error("cannot convert {from} to {to}")]
    IncompatibleUnits { from: Unit, to: Unit },
    #[error("invalid band for {parameter}: lower {lower} must be < upper {upper}")]
    InvalidBand {
        parameter: Parameter,
        lower: f64,
        upper: f64,
    },
    #[error("coordinates out of range: lat {lat}, lon {lon}")]
    InvalidCoordinates { lat: f64, lon: f64 },
    #[error("unknown {kind} '{value}'")]
    Unrecognized { kind: &'static str, value: String },
}

fn unrecognized(kind: &'static str, value: &str) -> DomainError {
    DomainError::Unrecognized {
        kind,
        value: value.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoadClass {
    #[serde(rename = "state")]
    StateRoad,
    #[serde(rename = "us")]
    UsHighway,
    #[serde(rename = "interstate")]
    InterstateHighway,
}

impl RoadClass {
    pub const ALL: [RoadClass; 3] = [
        RoadClass::StateRoad,
        RoadClass::UsHighway,
        RoadClass::InterstateHighway,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoadClass::StateRoad => "state",
            RoadClass::UsHighway => "us",
            RoadClass::InterstateHighway => "interstate",
        }
    }
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoadClass {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "state" | "state-road" | "sr" => Ok(RoadClass::StateRoad),
            "us" | "us-highway" => Ok(RoadClass::UsHighway),
            "interstate" | "interstate-highway" | "i" => Ok(RoadClass::InterstateHighway),
            _ => Err(unrecognized("road class", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    EB,
    WB,
    NB,
    SB,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::EB => "EB",
            Direction::WB => "WB",
            Direction::NB => "NB",
            Direction::SB => "SB",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EB" => Ok(Direction::EB),
            "WB" => Ok(Direction::WB),
            "NB" => Ok(Direction::NB),
            "SB" => Ok(Direction::SB),
            _ => Err(unrecognized("direction", s)),
        }
    }
}

/// Driving lane or passing lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lane {
    DL,
    PL,
}

impl Lane {
    pub fn as_str(self) -> &'static str {
        match self {
            Lane::DL => "DL",
            Lane::PL => "PL",
        }
    }
}

impl fmt::Display for Lane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lane {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DL" => Ok(Lane::DL),
            "PL" => Ok(Lane::PL),
            _ => Err(unrecognized("lane", s)),
        }
    }
}

/// Identifies one lane of one road: the unit of fusion and of a patching table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneKey {
    pub route: String,
    pub direction: Direction,
    pub lane: Lane,
}

impl fmt::Display for LaneKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.route, self.direction, self.lane)
    }
}

// ---------------------------------------------------------------------------
// Units
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Microns,
    Mils,
    MPerKm,
    InPerMi,
    Percent,
}

impl Unit {
    /// The canonical unit of this unit's dimension.
    pub fn canonical(self) -> Unit {
        match self {
            Unit::Microns | Unit::Mils => Unit::Microns,
            Unit::MPerKm | Unit::InPerMi => Unit::MPerKm,
            Unit::Percent => Unit::Percent,
        }
    }

    // Multiplier taking a value in `self` to the canonical unit.
    fn to_canonical_factor(self) -> f64 {
        match self {
            Unit::Microns | Unit::MPerKm | Unit::Percent => 1.0,
            Unit::Mils => MICRONS_PER_MIL,
            Unit::InPerMi => 1.0 / IN_PER_MI_PER_M_PER_KM,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Microns => "microns",
            Unit::Mils => "mils",
            Unit::MPerKm => "m/km",
            Unit::InPerMi => "in/mi",
            Unit::Percent => "percent",
        })
    }
}

/// Converts `value` between two units of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64, DomainError> {
    if !value.is_finite() {
        return Err(DomainError::NonFinite(value));
    }
    if from.canonical() != to.canonical() {
        return Err(DomainError::IncompatibleUnits { from, to });
    }
    if from == to {
        return Ok(value);
    }
    // Divide rather than multiply by a reciprocal where possible so the
    // mil/micron pair round-trips without accumulating error.
    Ok(match (from, to) {
        (Unit::Microns, Unit::Mils) => value / MICRONS_PER_MIL,
        (Unit::Mils, Unit::Microns) => value * MICRONS_PER_MIL,
        (Unit::MPerKm, Unit::InPerMi) => value * IN_PER_MI_PER_M_PER_KM,
        (Unit::InPerMi, Unit::MPerKm) => value / IN_PER_MI_PER_M_PER_KM,
        _ => value * from.to_canonical_factor() / to.to_canonical_factor(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeflectionUnit {
    Microns,
    Mils,
}

impl From<DeflectionUnit> for Unit {
    fn from(u: DeflectionUnit) -> Unit {
        match u {
            DeflectionUnit::Microns => Unit::Microns,
            DeflectionUnit::Mils => Unit::Mils,
        }
    }
}

/// 1 mil = 25.4 microns.
pub fn convert_deflection(
    value: f64,
    from: DeflectionUnit,
    to: DeflectionUnit,
) -> Result<f64, DomainError> {
    convert(value, from.into(), to.into())
}

/// A value tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Quantity { value, unit }
    }

    pub fn to_unit(self, unit: Unit) -> Result<Quantity, DomainError> {
        Ok(Quantity::new(convert(self.value, self.unit, unit)?, unit))
    }

    /// Idempotent: normalizing an already canonical quantity is a no-op.
    pub fn normalize(self) -> Result<Quantity, DomainError> {
        self.to_unit(self.unit.canonical())
    }
}

// ---------------------------------------------------------------------------
// Deflections
// ---------------------------------------------------------------------------

const NM_PER_MICRON: f64 = 1000.0;

/// A deflection (or a difference of deflections) held as an integer number
/// of nanometres so that basin arithmetic is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Deflection(i64);

impl Deflection {
    pub const ZERO: Deflection = Deflection(0);

    pub fn from_microns(microns: f64) -> Result<Self, DomainError> {
        if !microns.is_finite() {
            return Err(DomainError::NonFinite(microns));
        }
        Ok(Deflection((microns * NM_PER_MICRON).round() as i64))
    }

    pub fn from_mils(mils: f64) -> Result<Self, DomainError> {
        Self::from_microns(convert(mils, Unit::Mils, Unit::Microns)?)
    }

    pub fn from_nanometres(nm: i64) -> Self {
        Deflection(nm)
    }

    pub fn nanometres(self) -> i64 {
        self.0
    }

    pub fn microns(self) -> f64 {
        self.0 as f64 / NM_PER_MICRON
    }

    pub fn mils(self) -> f64 {
        self.microns() / MICRONS_PER_MIL
    }

    pub fn inches(self) -> f64 {
        self.mils() / 1000.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl Add for Deflection {
    type Output = Deflection;
    fn add(self, rhs: Deflection) -> Deflection {
        Deflection(self.0 + rhs.0)
    }
}

impl Sub for Deflection {
    type Output = Deflection;
    fn sub(self, rhs: Deflection) -> Deflection {
        Deflection(self.0 - rhs.0)
    }
}

impl fmt::Display for Deflection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} um", self.microns())
    }
}

// Serialized as microns; the nanometre grid survives an f64 round trip.
impl Serialize for Deflection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.microns())
    }
}

impl<'de> Deserialize<'de> for Deflection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Deflection::from_microns(v).map_err(serde::de::Error::custom)
    }
}

/// One FWD drop: load plus the five geophone deflections used downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflectionBasin {
    pub d0: Deflection,
    pub d12: Deflection,
    pub d24: Deflection,
    pub d36: Deflection,
    pub d60: Deflection,
    pub load_lbf: f64,
}

impl DeflectionBasin {
    pub fn new(
        d0: Deflection,
        d12: Deflection,
        d24: Deflection,
        d36: Deflection,
        d60: Deflection,
        load_lbf: f64,
    ) -> Result<Self, DomainError> {
        for (name, d) in [
            ("d0", d0),
            ("d12", d12),
            ("d24", d24),
            ("d36", d36),
            ("d60", d60),
        ] {
            if !d.is_positive() {
                return Err(DomainError::InvalidBasin(format!(
                    "deflection {name} must be positive, got {}",
                    d.microns()
                )));
            }
        }
        if !(load_lbf.is_finite() && load_lbf > 0.0) {
            return Err(DomainError::InvalidBasin(format!(
                "load must be positive, got {load_lbf}"
            )));
        }
        Ok(DeflectionBasin {
            d0,
            d12,
            d24,
            d36,
            d60,
            load_lbf,
        })
    }

    pub fn from_microns(d: [f64; 5], load_lbf: f64) -> Result<Self, DomainError> {
        let [d0, d12, d24, d36, d60] = d.map(Deflection::from_microns);
        Self::new(d0?, d12?, d24?, d36?, d60?, load_lbf)
    }

    pub fn from_mils(d: [f64; 5], load_lbf: f64) -> Result<Self, DomainError> {
        let [d0, d12, d24, d36, d60] = d.map(Deflection::from_mils);
        Self::new(d0?, d12?, d24?, d36?, d60?, load_lbf)
    }

    /// True when deflections do not increase away from the load.
    pub fn is_monotone(&self) -> bool {
        self.d0 >= self.d12 && self.d12 >= self.d24 && self.d24 >= self.d36 && self.d36 >= self.d60
    }

    pub fn dbps(&self) -> DbpVector {
        derive_dbps(self)
    }
}

/// Deflection basin parameters derived from one basin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbpVector {
    pub sci: Deflection,
    pub bdi: Deflection,
    pub bci: Deflection,
    pub d0: Deflection,
    pub d60: Deflection,
    /// Set when the source basin was not monotone; negative DBPs are kept.
    pub non_monotone: bool,
}

pub fn derive_dbps(basin: &DeflectionBasin) -> DbpVector {
    DbpVector {
        sci: basin.d0 - basin.d12,
        bdi: basin.d12 - basin.d24,
        bci: basin.d24 - basin.d36,
        d0: basin.d0,
        d60: basin.d60,
        non_monotone: !basin.is_monotone(),
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Result<Self, DomainError> {
        if lat.is_finite() && lon.is_finite() && lat.abs() <= 90.0 && lon.abs() <= 180.0 {
            Ok(LatLon { lat, lon })
        } else {
            Err(DomainError::InvalidCoordinates { lat, lon })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwdTestPoint {
    pub route: String,
    pub direction: Direction,
    pub lane: Lane,
    pub latitude: f64,
    pub longitude: f64,
    pub station_m: Option<f64>,
    pub basin: DeflectionBasin,
    pub dbps: DbpVector,
    /// Pavement thickness above subgrade, inches.
    pub hp_in: Option<f64>,
}

impl FwdTestPoint {
    pub fn new(
        key: LaneKey,
        position: LatLon,
        station_m: Option<f64>,
        basin: DeflectionBasin,
        hp_in: Option<f64>,
    ) -> Self {
        let dbps = derive_dbps(&basin);
        FwdTestPoint {
            route: key.route,
            direction: key.direction,
            lane: key.lane,
            latitude: position.lat,
            longitude: position.lon,
            station_m,
            basin,
            dbps,
            hp_in,
        }
    }

    pub fn lane_key(&self) -> LaneKey {
        LaneKey {
            route: self.route.clone(),
            direction: self.direction,
            lane: self.lane,
        }
    }

    pub fn position(&self) -> LatLon {
        LatLon {
            lat: self.latitude,
            lon: self.longitude,
        }
    }

    /// Checks the invariants a deserialized record must still satisfy.
    pub fn check(&self) -> Result<(), DomainError> {
        LatLon::new(self.latitude, self.longitude)?;
        let rebuilt = DeflectionBasin::new(
            self.basin.d0,
            self.basin.d12,
            self.basin.d24,
            self.basin.d36,
            self.basin.d60,
            self.basin.load_lbf,
        )?;
        if derive_dbps(&rebuilt) != self.dbps {
            return Err(DomainError::InvalidBasin(
                "stored DBPs do not match the basin".into(),
            ));
        }
        Ok(())
    }
}

/// One 1.8 m segment of a lane with its surface measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSegment {
    pub route: String,
    pub direction: Direction,
    pub lane: Lane,
    pub dmi: u64,
    pub latitude: f64,
    pub longitude: f64,
    pub length_m: f64,
    /// Left wheel-path IRI, m/km.
    pub l_iri: f64,
    /// Right wheel-path IRI, m/km.
    pub r_iri: f64,
    pub cd_left: f64,
    pub cd_right: f64,
    pub surface_image: Option<String>,
    pub row_image: Option<String>,
}

impl SurfaceSegment {
    pub fn lane_key(&self) -> LaneKey {
        LaneKey {
            route: self.route.clone(),
            direction: self.direction,
            lane: self.lane,
        }
    }

    pub fn position(&self) -> LatLon {
        LatLon {
            lat: self.latitude,
            lon: self.longitude,
        }
    }

    /// Distance along the lane implied by the DMI index, meters.
    pub fn chainage_m(&self) -> f64 {
        self.dmi as f64 * SEGMENT_LENGTH_M
    }

    pub fn check(&self) -> Result<(), DomainError> {
        LatLon::new(self.latitude, self.longitude)?;
        for v in [self.l_iri, self.r_iri] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DomainError::NonFinite(v));
            }
        }
        for v in [self.cd_left, self.cd_right] {
            if !(v.is_finite() && (0.0..=100.0).contains(&v)) {
                return Err(DomainError::NonFinite(v));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Ratings and thresholds
// ---------------------------------------------------------------------------

/// Condition rating. Severity order is Good < Fair < Poor; Unknown marks
/// missing data and sits outside that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rating {
    Good,
    Fair,
    Poor,
    Unknown,
}

impl Rating {
    pub const ALL: [Rating; 4] = [Rating::Unknown, Rating::Good, Rating::Fair, Rating::Poor];

    pub fn severity(self) -> Option<u8> {
        match self {
            Rating::Good => Some(0),
            Rating::Fair => Some(1),
            Rating::Poor => Some(2),
            Rating::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != Rating::Unknown
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rating::Good => "good",
            Rating::Fair => "fair",
            Rating::Poor => "poor",
            Rating::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Worst known rating, or Unknown when nothing is known.
pub fn worst_of<I: IntoIterator<Item = Rating>>(ratings: I) -> Rating {
    ratings
        .into_iter()
        .filter(|r| r.is_known())
        .max_by_key(|r| r.severity())
        .unwrap_or(Rating::Unknown)
}

/// Parameters that carry a threshold band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    D0,
    D60,
    Sci,
    Bci,
    Bdi,
    Iri,
    Cd,
}

impl Parameter {
    pub const ALL: [Parameter; 7] = [
        Parameter::D0,
        Parameter::D60,
        Parameter::Sci,
        Parameter::Bci,
        Parameter::Bdi,
        Parameter::Iri,
        Parameter::Cd,
    ];
    pub const FWD: [Parameter; 5] = [
        Parameter::D0,
        Parameter::D60,
        Parameter::Sci,
        Parameter::Bci,
        Parameter::Bdi,
    ];

    pub fn canonical_unit(self) -> Unit {
        match self {
            Parameter::Iri => Unit::MPerKm,
            Parameter::Cd => Unit::Percent,
            _ => Unit::Microns,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::D0 => "d0",
            Parameter::D60 => "d60",
            Parameter::Sci => "sci",
            Parameter::Bci => "bci",
            Parameter::Bdi => "bdi",
            Parameter::Iri => "iri",
            Parameter::Cd => "cd",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d0" => Ok(Parameter::D0),
            "d60" => Ok(Parameter::D60),
            "sci" => Ok(Parameter::Sci),
            "bci" => Ok(Parameter::Bci),
            "bdi" => Ok(Parameter::Bdi),
            "iri" => Ok(Parameter::Iri),
            "cd" => Ok(Parameter::Cd),
            _ => Err(unrecognized("parameter", s)),
        }
    }
}

/// Good at or below `lower`, Fair up to and including `upper`, Poor above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBand {
    pub parameter: Parameter,
    pub lower: f64,
    pub upper: f64,
    pub unit: Unit,
}

impl ThresholdBand {
    /// A band in the parameter's canonical unit.
    pub fn new(parameter: Parameter, lower: f64, upper: f64) -> Result<Self, DomainError> {
        Self::with_unit(parameter, lower, upper, parameter.canonical_unit())
    }

    pub fn with_unit(
        parameter: Parameter,
        lower: f64,
        upper: f64,
        unit: Unit,
    ) -> Result<Self, DomainError> {
        if unit.canonical() != parameter.canonical_unit() {
            return Err(DomainError::IncompatibleUnits {
                from: unit,
                to: parameter.canonical_unit(),
            });
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(DomainError::InvalidBand {
                parameter,
                lower,
                upper,
            });
        }
        Ok(ThresholdBand {
            parameter,
            lower,
            upper,
            unit,
        })
    }

    pub fn to_unit(&self, unit: Unit) -> Result<ThresholdBand, DomainError> {
        ThresholdBand::with_unit(
            self.parameter,
            convert(self.lower, self.unit, unit)?,
            convert(self.upper, self.unit, unit)?,
            unit,
        )
    }

    pub fn check(&self) -> Result<(), DomainError> {
        Self::with_unit(self.parameter, self.lower, self.upper, self.unit).map(|_| ())
    }
}

/// Rates `value` against `band`. A value exactly on an edge takes the less
/// severe rating.
pub fn classify(value: Quantity, band: &ThresholdBand) -> Result<Rating, DomainError> {
    if value.unit != band.unit {
        return Err(DomainError::UnitMismatch {
            value: value.unit,
            band: band.unit,
        });
    }
    if !value.value.is_finite() {
        return Err(DomainError::NonFinite(value.value));
    }
    Ok(if value.value <= band.lower {
        Rating::Good
    } else if value.value <= band.upper {
        Rating::Fair
    } else {
        Rating::Poor
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin,
    Derived,
    UserOverride,
}

/// One band per parameter for one road class. IRI and CD may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub road_class: RoadClass,
    pub provenance: Provenance,
    pub d0: ThresholdBand,
    pub d60: ThresholdBand,
    pub sci: ThresholdBand,
    pub bci: ThresholdBand,
    pub bdi: ThresholdBand,
    pub iri: Option<ThresholdBand>,
    pub cd: Option<ThresholdBand>,
}

// (lower, upper) for D0, D60, SCI, BCI, BDI in microns.
const BUILTIN_FWD_BANDS: [(RoadClass, [(f64, f64); 5]); 3] = [
    (
        RoadClass::StateRoad,
        [
            (359.9, 388.6),
            (59.4, 62.2),
            (111.0, 123.2),
            (57.2, 62.2),
            (81.5, 89.2),
        ],
    ),
    (
        RoadClass::UsHighway,
        [
            (227.6, 259.8),
            (53.1, 56.6),
            (66.0, 76.7),
            (34.3, 39.1),
            (50.0, 55.9),
        ],
    ),
    (
        RoadClass::InterstateHighway,
        [
            (149.1, 214.9),
            (37.1, 47.5),
            (43.2, 49.3),
            (21.8, 33.8),
            (25.4, 37.6),
        ],
    ),
];

const INTERSTATE_IRI_BAND: (f64, f64) = (1.73, 2.07);
const INTERSTATE_CD_BAND: (f64, f64) = (12.5, 13.2);

impl ThresholdSet {
    /// The shipped thresholds for a road class. Functional (IRI/CD) bands are
    /// only available for Interstate highways.
    pub fn builtin(road_class: RoadClass) -> ThresholdSet {
        let (_, fwd) = BUILTIN_FWD_BANDS
            .iter()
            .find(|(c, _)| *c == road_class)
            .expect("every road class has builtin bands");
        let band = |p: Parameter, (lo, hi): (f64, f64)| {
            ThresholdBand::new(p, lo, hi).expect("builtin bands are valid")
        };
        let (iri, cd) = match road_class {
            RoadClass::InterstateHighway => (
                Some(band(Parameter::Iri, INTERSTATE_IRI_BAND)),
                Some(band(Parameter::Cd, INTERSTATE_CD_BAND)),
            ),
            _ => (None, None),
        };
        ThresholdSet {
            road_class,
            provenance: Provenance::Builtin,
            d0: band(Parameter::D0, fwd[0]),
            d60: band(Parameter::D60, fwd[1]),
            sci: band(Parameter::Sci, fwd[2]),
            bci: band(Parameter::Bci, fwd[3]),
            bdi: band(Parameter::Bdi, fwd[4]),
            iri,
            cd,
        }
    }

    pub fn band(&self, parameter: Parameter) -> Option<&ThresholdBand> {
        match parameter {
            Parameter::D0 => Some(&self.d0),
            Parameter::D60 => Some(&self.d60),
            Parameter::Sci => Some(&self.sci),
            Parameter::Bci => Some(&self.bci),
            Parameter::Bdi => Some(&self.bdi),
            Parameter::Iri => self.iri.as_ref(),
            Parameter::Cd => self.cd.as_ref(),
        }
    }

    /// Replaces one band; the band must be for `band.parameter` in its
    /// canonical unit.
    pub fn set_band(&mut self, band: ThresholdBand) -> Result<(), DomainError> {
        let band = band.to_unit(band.parameter.canonical_unit())?;
        match band.parameter {
            Parameter::D0 => self.d0 = band,
            Parameter::D60 => self.d60 = band,
            Parameter::Sci => self.sci = band,
            Parameter::Bci => self.bci = band,
            Parameter::Bdi => self.bdi = band,
            Parameter::Iri => self.iri = Some(band),
            Parameter::Cd => self.cd = Some(band),
        }
        Ok(())
    }

    /// Parameters whose band is absent.
    pub fn missing(&self) -> Vec<Parameter> {
        Parameter::ALL
            .into_iter()
            .filter(|p| self.band(*p).is_none())
            .collect()
    }

    pub fn check(&self) -> Result<(), DomainError> {
        for p in Parameter::ALL {
            if let Some(b) = self.band(p) {
                b.check()?;
                if b.parameter != p || b.unit != p.canonical_unit() {
                    return Err(DomainError::UnitMismatch {
                        value: p.canonical_unit(),
                        band: b.unit,
                    });
                }
            }
        }
        Ok(())
    }
}
