//! Per-parameter rating of fused profiles and the patching decision rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    classify, worst_of, DbpVector, DomainError, LaneKey, Parameter, Quantity, Rating,
    SurfaceSegment, ThresholdSet, Unit, SEGMENT_LENGTH_M, SEGMENT_WIDTH_M,
};
use crate::fusion::{Completeness, FusedSegmentProfile};

/// Footprint of one flagged segment, m².
pub const PATCH_AREA_M2: f64 = SEGMENT_LENGTH_M * SEGMENT_WIDTH_M;

pub const PAVEMENT_TYPE: &str = "full_depth_asphalt";

pub const PATCHING_HEADER: [&str; 30] = [
    "route",
    "direction",
    "lane",
    "dmi",
    "rp",
    "latitude",
    "longitude",
    "pavement_type",
    "l_iri",
    "r_iri",
    "cd_left_pct",
    "cd_right_pct",
    "d0_um",
    "sci_um",
    "bdi_um",
    "d60_um",
    "bci_um",
    "rating_l_iri",
    "rating_r_iri",
    "rating_cd",
    "rating_d0",
    "rating_sci",
    "rating_bdi",
    "rating_d60",
    "rating_bci",
    "patch_depth",
    "patch_priority",
    "patch_area_m2",
    "triggers",
    "completeness",
];

#[derive(Debug, Error, PartialEq)]
pub enum SuggestError {
    #[error("profiles from more than one lane: {0} and {1}")]
    MixedLanes(LaneKey, LaneKey),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// The eight rated quantities of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatedParam {
    LIri,
    RIri,
    Cd,
    D0,
    Sci,
    Bdi,
    D60,
    Bci,
}

impl RatedParam {
    pub const ALL: [RatedParam; 8] = [
        RatedParam::LIri,
        RatedParam::RIri,
        RatedParam::Cd,
        RatedParam::D0,
        RatedParam::Sci,
        RatedParam::Bdi,
        RatedParam::D60,
        RatedParam::Bci,
    ];
    pub const SHALLOW: [RatedParam; 6] = [
        RatedParam::LIri,
        RatedParam::RIri,
        RatedParam::Cd,
        RatedParam::D0,
        RatedParam::Sci,
        RatedParam::Bdi,
    ];
    pub const DEEP: [RatedParam; 2] = [RatedParam::D60, RatedParam::Bci];

    pub fn as_str(self) -> &'static str {
        match self {
            RatedParam::LIri => "l_iri",
            RatedParam::RIri => "r_iri",
            RatedParam::Cd => "cd",
            RatedParam::D0 => "d0",
            RatedParam::Sci => "sci",
            RatedParam::Bdi => "bdi",
            RatedParam::D60 => "d60",
            RatedParam::Bci => "bci",
        }
    }
}

impl fmt::Display for RatedParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingVector {
    pub l_iri: Rating,
    pub r_iri: Rating,
    pub cd: Rating,
    pub d0: Rating,
    pub sci: Rating,
    pub bdi: Rating,
    pub d60: Rating,
    pub bci: Rating,
}

impl RatingVector {
    pub fn uniform(r: Rating) -> Self {
        RatingVector {
            l_iri: r,
            r_iri: r,
            cd: r,
            d0: r,
            sci: r,
            bdi: r,
            d60: r,
            bci: r,
        }
    }

    pub fn get(&self, p: RatedParam) -> Rating {
        match p {
            RatedParam::LIri => self.l_iri,
            RatedParam::RIri => self.r_iri,
            RatedParam::Cd => self.cd,
            RatedParam::D0 => self.d0,
            RatedParam::Sci => self.sci,
            RatedParam::Bdi => self.bdi,
            RatedParam::D60 => self.d60,
            RatedParam::Bci => self.bci,
        }
    }

    pub fn set(&mut self, p: RatedParam, r: Rating) {
        let slot = match p {
            RatedParam::LIri => &mut self.l_iri,
            RatedParam::RIri => &mut self.r_iri,
            RatedParam::Cd => &mut self.cd,
            RatedParam::D0 => &mut self.d0,
            RatedParam::Sci => &mut self.sci,
            RatedParam::Bdi => &mut self.bdi,
            RatedParam::D60 => &mut self.d60,
            RatedParam::Bci => &mut self.bci,
        };
        *slot = r;
    }
}

/// Patching decision, declared from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    NoAction,
    SurfaceWarning,
    SurfaceRequired,
    FullDepthWarning,
    FullDepthRequired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchDepth {
    FullDepth,
    Surface,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    Required,
    Warning,
    None,
}

impl Decision {
    pub const ALL: [Decision; 5] = [
        Decision::FullDepthRequired,
        Decision::FullDepthWarning,
        Decision::SurfaceRequired,
        Decision::SurfaceWarning,
        Decision::NoAction,
    ];

    pub fn depth(self) -> PatchDepth {
        match self {
            Decision::FullDepthRequired | Decision::FullDepthWarning => PatchDepth::FullDepth,
            Decision::SurfaceRequired | Decision::SurfaceWarning => PatchDepth::Surface,
            Decision::NoAction => PatchDepth::None,
        }
    }

    pub fn priority(self) -> Priority {
        match self {
            Decision::FullDepthRequired | Decision::SurfaceRequired => Priority::Required,
            Decision::FullDepthWarning | Decision::SurfaceWarning => Priority::Warning,
            Decision::NoAction => Priority::None,
        }
    }

    /// Map marker colour.
    pub fn marker_color(self) -> &'static str {
        match self {
            Decision::FullDepthRequired => "red",
            Decision::FullDepthWarning => "orange",
            Decision::SurfaceRequired => "yellow",
            Decision::SurfaceWarning => "blue",
            Decision::NoAction => "green",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::FullDepthRequired => "full_depth_required",
            Decision::FullDepthWarning => "full_depth_warning",
            Decision::SurfaceRequired => "surface_required",
            Decision::SurfaceWarning => "surface_warning",
            Decision::NoAction => "no_action",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Decision::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| DomainError::Unrecognized {
                kind: "decision",
                value: s.to_string(),
            })
    }
}

impl PatchDepth {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchDepth::FullDepth => "full_depth",
            PatchDepth::Surface => "surface",
            PatchDepth::None => "none",
        }
    }
}

impl Priority {
    pub fn as_str(self) -> &'static str {
        match self {
            Priority::Required => "required",
            Priority::Warning => "warning",
            Priority::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchingSuggestion {
    pub decision: Decision,
    pub depth: PatchDepth,
    pub priority: Priority,
    pub triggers: Vec<RatedParam>,
    pub area_m2: f64,
    pub completeness: Completeness,
}

fn rate(
    value: f64,
    unit: Unit,
    band: Option<&crate::domain::ThresholdBand>,
) -> Result<Rating, DomainError> {
    match band {
        Some(b) => classify(Quantity::new(value, unit).to_unit(b.unit)?, b),
        None => Ok(Rating::Unknown),
    }
}

/// Rates every parameter of one profile. FWD ratings are Unknown without an
/// assigned test point; IRI and CD ratings are Unknown without a band.
pub fn rate_profile(
    profile: &FusedSegmentProfile,
    thresholds: &ThresholdSet,
) -> Result<RatingVector, DomainError> {
    let s = &profile.segment;
    let iri = thresholds.band(Parameter::Iri);
    let cd_band = thresholds.band(Parameter::Cd);
    let mut v = RatingVector::uniform(Rating::Unknown);
    v.l_iri = rate(s.l_iri, Unit::MPerKm, iri)?;
    v.r_iri = rate(s.r_iri, Unit::MPerKm, iri)?;
    v.cd = worst_of([
        rate(s.cd_left, Unit::Percent, cd_band)?,
        rate(s.cd_right, Unit::Percent, cd_band)?,
    ]);
    if let Some(p) = &profile.fwd {
        let d = &p.dbps;
        let um = |x: crate::domain::Deflection| x.microns();
        v.d0 = rate(um(d.d0), Unit::Microns, thresholds.band(Parameter::D0))?;
        v.sci = rate(um(d.sci), Unit::Microns, thresholds.band(Parameter::Sci))?;
        v.bdi = rate(um(d.bdi), Unit::Microns, thresholds.band(Parameter::Bdi))?;
        v.d60 = rate(um(d.d60), Unit::Microns, thresholds.band(Parameter::D60))?;
        v.bci = rate(um(d.bci), Unit::Microns, thresholds.band(Parameter::Bci))?;
    }
    Ok(v)
}

fn group_worst(v: &RatingVector, group: &[RatedParam]) -> Rating {
    worst_of(group.iter().map(|p| v.get(*p)))
}

/// Maps a rating vector to a patching decision. Within each group the worst
/// known rating counts; the deep group is consulted first.
pub fn suggest(v: &RatingVector) -> PatchingSuggestion {
    let deep = group_worst(v, &RatedParam::DEEP);
    let shallow = group_worst(v, &RatedParam::SHALLOW);
    let (decision, group, worst): (Decision, &[RatedParam], Rating) = match (deep, shallow) {
        (Rating::Poor, _) => (Decision::FullDepthRequired, &RatedParam::DEEP, deep),
        (Rating::Fair, _) => (Decision::FullDepthWarning, &RatedParam::DEEP, deep),
        (_, Rating::Poor) => (Decision::SurfaceRequired, &RatedParam::SHALLOW, shallow),
        (_, Rating::Fair) => (Decision::SurfaceWarning, &RatedParam::SHALLOW, shallow),
        _ => (Decision::NoAction, &[], Rating::Good),
    };
    let triggers = group
        .iter()
        .copied()
        .filter(|p| v.get(*p) == worst)
        .collect();
    let completeness = if deep == Rating::Unknown || shallow == Rating::Unknown {
        Completeness::SurfaceOnly
    } else {
        Completeness::Full
    };
    PatchingSuggestion {
        decision,
        depth: decision.depth(),
        priority: decision.priority(),
        triggers,
        area_m2: if decision == Decision::NoAction {
            0.0
        } else {
            PATCH_AREA_M2
        },
        completeness,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchingRow {
    pub segment: SurfaceSegment,
    pub dbps: Option<DbpVector>,
    pub ratings: RatingVector,
    pub suggestion: PatchingSuggestion,
}

impl PatchingRow {
    /// Reference point: DMI chainage in km.
    pub fn rp_km(&self) -> f64 {
        self.segment.chainage_m() / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTotal {
    pub decision: Decision,
    pub count: usize,
    pub area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchingSummary {
    /// One entry per decision, most severe first.
    pub by_decision: Vec<DecisionTotal>,
    pub patch_count: usize,
    pub patch_area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchingTable {
    /// None only for an empty table.
    pub lane: Option<LaneKey>,
    pub pavement_type: String,
    pub rows: Vec<PatchingRow>,
    pub summary: PatchingSummary,
}

fn summarize(rows: &[PatchingRow]) -> PatchingSummary {
    let mut counts: BTreeMap<Decision, usize> = BTreeMap::new();
    for r in rows {
        *counts.entry(r.suggestion.decision).or_default() += 1;
    }
    let by_decision: Vec<DecisionTotal> = Decision::ALL
        .into_iter()
        .map(|d| {
            let count = counts.get(&d).copied().unwrap_or(0);
            let area = if d == Decision::NoAction {
                0.0
            } else {
                count as f64 * PATCH_AREA_M2
            };
            DecisionTotal {
                decision: d,
                count,
                area_m2: area,
            }
        })
        .collect();
    let patch_count = rows
        .iter()
        .filter(|r| r.suggestion.decision != Decision::NoAction)
        .count();
    PatchingSummary {
        by_decision,
        patch_count,
        patch_area_m2: patch_count as f64 * PATCH_AREA_M2,
    }
}

/// Rates and suggests every profile of one lane; rows are ordered by DMI.
pub fn suggest_road(
    profiles: &[FusedSegmentProfile],
    thresholds: &ThresholdSet,
) -> Result<PatchingTable, SuggestError> {
    let mut lane: Option<LaneKey> = None;
    for p in profiles {
        let k = p.segment.lane_key();
        match &lane {
            None => lane = Some(k),
            Some(first) if *first != k => return Err(SuggestError::MixedLanes(first.clone(), k)),
            _ => {}
        }
    }
    let mut rows = profiles
        .iter()
        .map(|p| {
            let ratings = rate_profile(p, thresholds)?;
            Ok(PatchingRow {
                segment: p.segment.clone(),
                dbps: p.fwd.as_ref().map(|f| f.dbps),
                ratings,
                suggestion: suggest(&ratings),
            })
        })
        .collect::<Result<Vec<_>, DomainError>>()?;
    rows.sort_by_key(|r| r.segment.dmi);
    let summary = summarize(&rows);
    Ok(PatchingTable {
        lane,
        pavement_type: PAVEMENT_TYPE.to_string(),
        rows,
        summary,
    })
}

fn fixed(v: f64, places: usize) -> String {
    let s = format!("{v:.places$}");
    // Avoid "-0.0" for tiny negatives.
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn row_fields(table: &PatchingTable, r: &PatchingRow) -> Vec<String> {
    let s = &r.segment;
    let dbp =
        |f: fn(&DbpVector) -> f64| r.dbps.as_ref().map(|d| fixed(f(d), 1)).unwrap_or_default();
    let sg = &r.suggestion;
    let mut out = vec![
        s.route.clone(),
        s.direction.to_string(),
        s.lane.to_string(),
        s.dmi.to_string(),
        fixed(r.rp_km(), 3),
        fixed(s.latitude, 6),
        fixed(s.longitude, 6),
        table.pavement_type.clone(),
        fixed(s.l_iri, 2),
        fixed(s.r_iri, 2),
        fixed(s.cd_left, 1),
        fixed(s.cd_right, 1),
        dbp(|d| d.d0.microns()),
        dbp(|d| d.sci.microns()),
        dbp(|d| d.bdi.microns()),
        dbp(|d| d.d60.microns()),
        dbp(|d| d.bci.microns()),
    ];
    out.extend(
        RatedParam::ALL
            .iter()
            .map(|p| r.ratings.get(*p).as_str().to_string()),
    );
    out.extend([
        sg.depth.as_str().to_string(),
        sg.priority.as_str().to_string(),
        fixed(sg.area_m2, 2),
        sg.triggers
            .iter()
            .map(|t| t.as_str())
            .collect::<Vec<_>>()
            .join(";"),
        sg.completeness.as_str().to_string(),
    ]);
    out
}

/// Serializes several tables under one header, in the order given.
pub fn export_patching_tables(tables: &[&PatchingTable]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(PATCHING_HEADER).expect("write to memory");
    for t in tables {
        for r in &t.rows {
            w.write_record(row_fields(t, r)).expect("write to memory");
        }
    }
    w.into_inner().expect("flush to memory")
}

pub fn export_patching_table(table: &PatchingTable) -> Vec<u8> {
    export_patching_tables(&[table])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DeflectionBasin, Direction, FwdTestPoint, Lane, LatLon, RoadClass};

    fn segment(dmi: u64, l_iri: f64, r_iri: f64, cd: f64) -> SurfaceSegment {
        SurfaceSegment {
            route: "I-70".into(),
            direction: Direction::WB,
            lane: Lane::PL,
            dmi,
            latitude: 39.7,
            longitude: -86.1,
            length_m: SEGMENT_LENGTH_M,
            l_iri,
            r_iri,
            cd_left: cd,
            cd_right: cd,
            surface_image: None,
            row_image: None,
        }
    }

    // d0, sci, bdi, bci, d60 in microns, built back into a basin.
    fn fwd(d0: f64, sci: f64, bdi: f64, bci: f64, d60: f64) -> FwdTestPoint {
        let d12 = d0 - sci;
        let d24 = d12 - bdi;
        let d36 = d24 - bci;
        FwdTestPoint::new(
            LaneKey {
                route: "I-70".into(),
                direction: Direction::WB,
                lane: Lane::PL,
            },
            LatLon::new(39.7, -86.1).unwrap(),
            None,
            DeflectionBasin::from_microns([d0, d12, d24, d36, d60], 9000.0).unwrap(),
            None,
        )
    }

    fn profile(seg: SurfaceSegment, f: Option<FwdTestPoint>) -> FusedSegmentProfile {
        let completeness = if f.is_some() {
            Completeness::Full
        } else {
            Completeness::SurfaceOnly
        };
        FusedSegmentProfile {
            segment: seg,
            fwd_distance_m: f.as_ref().map(|_| 0.0),
            fwd: f,
            completeness,
        }
    }

    fn interstate() -> ThresholdSet {
        ThresholdSet::builtin(RoadClass::InterstateHighway)
    }

    fn good_fwd() -> FwdTestPoint {
        fwd(140.0, 40.0, 20.0, 20.0, 30.0)
    }

    #[test]
    fn d60_poor_against_interstate_band() {
        let p = profile(
            segment(1, 1.0, 1.0, 1.0),
            Some(fwd(140.0, 40.0, 20.0, 20.0, 50.0)),
        );
        let r = rate_profile(&p, &interstate()).unwrap();
        assert_eq!(r.d60, Rating::Poor);
        assert_eq!(r.bci, Rating::Good);
    }

    #[test]
    fn surface_only_profile_has_unknown_fwd_ratings() {
        let r = rate_profile(&profile(segment(1, 1.0, 1.0, 1.0), None), &interstate()).unwrap();
        for p in [
            RatedParam::D0,
            RatedParam::Sci,
            RatedParam::Bdi,
            RatedParam::D60,
            RatedParam::Bci,
        ] {
            assert_eq!(r.get(p), Rating::Unknown);
        }
        assert_eq!(r.l_iri, Rating::Good);
    }

    #[test]
    fn values_on_lower_edges_are_good() {
        let t = interstate();
        let p = profile(
            segment(
                1,
                t.iri.unwrap().lower,
                t.iri.unwrap().lower,
                t.cd.unwrap().lower,
            ),
            Some(fwd(
                t.d0.lower,
                t.sci.lower,
                t.bdi.lower,
                t.bci.lower,
                t.d60.lower,
            )),
        );
        assert_eq!(
            rate_profile(&p, &t).unwrap(),
            RatingVector::uniform(Rating::Good)
        );
    }

    #[test]
    fn missing_functional_bands_give_unknown() {
        let t = ThresholdSet::builtin(RoadClass::UsHighway);
        let r = rate_profile(&profile(segment(1, 9.0, 9.0, 50.0), Some(good_fwd())), &t).unwrap();
        assert_eq!(
            (r.l_iri, r.r_iri, r.cd),
            (Rating::Unknown, Rating::Unknown, Rating::Unknown)
        );
    }

    #[test]
    fn cd_takes_worst_wheel_path() {
        let mut s = segment(1, 1.0, 1.0, 1.0);
        s.cd_right = 20.0;
        let r = rate_profile(&profile(s, Some(good_fwd())), &interstate()).unwrap();
        assert_eq!(r.cd, Rating::Poor);
    }

    fn with(pairs: &[(RatedParam, Rating)]) -> RatingVector {
        let mut v = RatingVector::uniform(Rating::Good);
        for (p, r) in pairs {
            v.set(*p, *r);
        }
        v
    }

    #[test]
    fn decision_examples() {
        use RatedParam::*;
        let s = suggest(&with(&[(D60, Rating::Poor), (Bci, Rating::Poor)]));
        assert_eq!(s.decision, Decision::FullDepthRequired);
        assert_eq!(s.triggers, vec![D60, Bci]);
        let s = suggest(&with(&[(D60, Rating::Fair), (Bci, Rating::Fair)]));
        assert_eq!(s.decision, Decision::FullDepthWarning);
        let s = suggest(&with(&[(LIri, Rating::Poor)]));
        assert_eq!(s.decision, Decision::SurfaceRequired);
        assert_eq!(s.triggers, vec![LIri]);
        let s = suggest(&RatingVector::uniform(Rating::Good));
        assert_eq!(s.decision, Decision::NoAction);
        assert!(s.triggers.is_empty());
        assert_eq!(s.area_m2, 0.0);
        let s = suggest(&with(&[(D60, Rating::Poor)]));
        assert_eq!(s.decision, Decision::FullDepthRequired);
        assert_eq!(s.triggers, vec![D60]);
        assert_eq!(s.area_m2, 6.48);
    }

    #[test]
    fn triggers_only_at_group_worst() {
        use RatedParam::*;
        let s = suggest(&with(&[
            (Cd, Rating::Fair),
            (Sci, Rating::Poor),
            (Bdi, Rating::Poor),
        ]));
        assert_eq!(s.decision, Decision::SurfaceRequired);
        assert_eq!(s.triggers, vec![Sci, Bdi]);
    }

    #[test]
    fn unknown_deep_group_is_surface_only() {
        use RatedParam::*;
        let s = suggest(&with(&[
            (D0, Rating::Unknown),
            (Sci, Rating::Unknown),
            (Bdi, Rating::Unknown),
            (D60, Rating::Unknown),
            (Bci, Rating::Unknown),
            (RIri, Rating::Fair),
        ]));
        assert_eq!(s.decision, Decision::SurfaceWarning);
        assert_eq!(s.completeness, Completeness::SurfaceOnly);
        let s = suggest(&RatingVector::uniform(Rating::Unknown));
        assert_eq!(s.decision, Decision::NoAction);
        assert_eq!(s.completeness, Completeness::SurfaceOnly);
    }

    #[test]
    fn decision_depth_priority_consistent() {
        for d in Decision::ALL {
            let expect = match d {
                Decision::FullDepthRequired => (PatchDepth::FullDepth, Priority::Required),
                Decision::FullDepthWarning => (PatchDepth::FullDepth, Priority::Warning),
                Decision::SurfaceRequired => (PatchDepth::Surface, Priority::Required),
                Decision::SurfaceWarning => (PatchDepth::Surface, Priority::Warning),
                Decision::NoAction => (PatchDepth::None, Priority::None),
            };
            assert_eq!((d.depth(), d.priority()), expect);
            assert_eq!(d.as_str().parse::<Decision>().unwrap(), d);
        }
        assert!(Decision::FullDepthRequired > Decision::FullDepthWarning);
        assert!(Decision::SurfaceWarning > Decision::NoAction);
    }

    fn ten_good() -> Vec<FusedSegmentProfile> {
        (0..10)
            .map(|i| profile(segment(100 + i, 1.0, 1.0, 1.0), Some(good_fwd())))
            .collect()
    }

    #[test]
    fn all_good_road() {
        let t = suggest_road(&ten_good(), &interstate()).unwrap();
        assert_eq!(t.rows.len(), 10);
        assert!(t
            .rows
            .iter()
            .all(|r| r.suggestion.decision == Decision::NoAction));
        assert_eq!(t.summary.patch_count, 0);
        assert_eq!(t.summary.patch_area_m2, 0.0);
    }

    #[test]
    fn single_full_depth_segment() {
        let mut ps = ten_good();
        ps[4].fwd = Some(fwd(140.0, 40.0, 20.0, 20.0, 60.0));
        let t = suggest_road(&ps, &interstate()).unwrap();
        let fd = &t.summary.by_decision[0];
        assert_eq!(
            (fd.decision, fd.count, fd.area_m2),
            (Decision::FullDepthRequired, 1, 6.48)
        );
        assert_eq!(t.summary.patch_count, 1);
        assert_eq!(t.summary.patch_area_m2, 6.48);
        let counted: usize = t.summary.by_decision.iter().map(|d| d.count).sum();
        assert_eq!(counted, t.rows.len());
    }

    #[test]
    fn permuted_profiles_give_identical_table() {
        let mut ps = ten_good();
        ps[2].segment.l_iri = 3.0;
        let a = suggest_road(&ps, &interstate()).unwrap();
        ps.reverse();
        let b = suggest_road(&ps, &interstate()).unwrap();
        assert_eq!(a, b);
        assert_eq!(export_patching_table(&a), export_patching_table(&b));
    }

    #[test]
    fn mixed_lanes_rejected() {
        let mut ps = ten_good();
        ps[0].segment.lane = Lane::DL;
        assert!(matches!(
            suggest_road(&ps, &interstate()),
            Err(SuggestError::MixedLanes(..))
        ));
    }

    #[test]
    fn empty_export_is_header_only() {
        let t = suggest_road(&[], &interstate()).unwrap();
        let csv = String::from_utf8(export_patching_table(&t)).unwrap();
        assert_eq!(csv, format!("{}\n", PATCHING_HEADER.join(",")));
    }

    #[test]
    fn single_row_export_format() {
        let mut s = segment(2924, 1.234, 0.5, 2.25);
        s.latitude = 39.123456789;
        let t = suggest_road(&[profile(s, Some(good_fwd()))], &interstate()).unwrap();
        let csv = String::from_utf8(export_patching_table(&t)).unwrap();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(
            line,
            "I-70,WB,PL,2924,5.263,39.123457,-86.100000,full_depth_asphalt,1.23,0.50,2.2,2.2,\
             140.0,40.0,20.0,30.0,20.0,good,good,good,good,good,good,good,good,none,none,0.00,,full"
        );
    }

    #[test]
    fn surface_only_export_leaves_fwd_cells_empty() {
        let t = suggest_road(&[profile(segment(1, 2.5, 1.0, 1.0), None)], &interstate()).unwrap();
        let csv = String::from_utf8(export_patching_table(&t)).unwrap();
        let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields.len(), 30);
        assert!(fields[12..17].iter().all(|f| f.is_empty()));
        assert_eq!(
            &fields[25..],
            &["surface", "required", "6.48", "l_iri", "surface_only"]
        );
    }

    #[test]
    fn fixed_formatting_has_no_negative_zero() {
        assert_eq!(fixed(-0.04, 1), "0.0");
        assert_eq!(fixed(-0.06, 1), "-0.1");
    }
}
