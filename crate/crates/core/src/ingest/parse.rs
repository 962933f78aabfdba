use std::collections::HashSet;

use csv::{ReaderBuilder, StringRecord};

use super::{IngestError, Rejection, UnitSystem, ValidationReport, Warning};
use crate::domain::{
    convert, Deflection, DeflectionBasin, Direction, FwdTestPoint, Lane, LaneKey, LatLon,
    SurfaceSegment, Unit, SEGMENT_LENGTH_M,
};

pub const FWD_HEADER: [&str; 13] = [
    "route",
    "direction",
    "lane",
    "latitude",
    "longitude",
    "station_m",
    "load_lbf",
    "d0",
    "d12",
    "d24",
    "d36",
    "d60",
    "hp_in",
];

pub const SEGMENT_HEADER: [&str; 12] = [
    "route",
    "direction",
    "lane",
    "dmi",
    "latitude",
    "longitude",
    "l_iri",
    "r_iri",
    "cd_left_pct",
    "cd_right_pct",
    "surface_image",
    "row_image",
];

fn check_header(found: &StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found == expected {
        return Ok(());
    }
    let missing: Vec<&str> = expected
        .iter()
        .copied()
        .filter(|c| !found.contains(c))
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::Schema(format!(
            "missing column(s): {}",
            missing.join(", ")
        )));
    }
    let extra: Vec<&str> = found
        .iter()
        .copied()
        .filter(|c| !expected.contains(c))
        .collect();
    if !extra.is_empty() {
        return Err(IngestError::Schema(format!(
            "unexpected column(s): {}",
            extra.join(", ")
        )));
    }
    Err(IngestError::Schema(format!(
        "columns out of order: expected {}",
        expected.join(",")
    )))
}

// Row accessor that turns every problem into a rejection reason.
struct Row<'a> {
    record: &'a StringRecord,
    header: &'a [&'a str],
}

impl<'a> Row<'a> {
    fn raw(&self, column: &str) -> &'a str {
        let idx = self
            .header
            .iter()
            .position(|c| *c == column)
            .expect("column is part of the schema");
        self.record.get(idx).unwrap_or("").trim()
    }

    fn text(&self, column: &str) -> Result<String, String> {
        let v = self.raw(column);
        if v.is_empty() {
            Err(format!("missing {column}"))
        } else {
            Ok(v.to_string())
        }
    }

    fn optional_text(&self, column: &str) -> Option<String> {
        let v = self.raw(column);
        (!v.is_empty()).then(|| v.to_string())
    }

    fn parse<T: std::str::FromStr>(&self, column: &str) -> Result<T, String> {
        let v = self.text(column)?;
        v.parse().map_err(|_| format!("invalid {column} '{v}'"))
    }

    // Decimal point only; no exponents of infinity or NaN, no separators.
    fn number(&self, column: &str, missing_label: &str) -> Result<f64, String> {
        let v = self.raw(column);
        if v.is_empty() {
            return Err(format!("missing {missing_label}"));
        }
        parse_decimal(v).ok_or_else(|| format!("invalid {column} '{v}'"))
    }

    fn optional_number(&self, column: &str) -> Result<Option<f64>, String> {
        let v = self.raw(column);
        if v.is_empty() {
            return Ok(None);
        }
        parse_decimal(v)
            .map(Some)
            .ok_or_else(|| format!("invalid {column} '{v}'"))
    }
}

fn parse_decimal(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut dots = 0;
    let mut digits = 0;
    for c in body.chars() {
        match c {
            '0'..='9' => digits += 1,
            '.' => dots += 1,
            _ => return None,
        }
    }
    if digits == 0 || dots > 1 {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

// Data line number and either the record or a reason it was unusable.
type NumberedRecord = (u64, Result<StringRecord, String>);

fn read_records(bytes: &[u8], expected: &[&str]) -> Result<Vec<NumberedRecord>, IngestError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| IngestError::Schema(format!("unreadable header: {e}")))?
        .clone();
    check_header(&header, expected)?;
    let mut out = Vec::new();
    let mut record = StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(line);
                if record.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                if record.len() != expected.len() {
                    out.push((
                        line,
                        Err(format!(
                            "expected {} fields, found {}",
                            expected.len(),
                            record.len()
                        )),
                    ));
                } else {
                    out.push((line, Ok(record.clone())));
                }
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(line);
                out.push((line, Err(format!("unreadable row: {e}"))));
                if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn lane_key(row: &Row<'_>) -> Result<LaneKey, String> {
    Ok(LaneKey {
        route: row.text("route")?,
        direction: row.parse::<Direction>("direction")?,
        lane: row.parse::<Lane>("lane")?,
    })
}

fn position(row: &Row<'_>) -> Result<LatLon, String> {
    let lat = row.number("latitude", "latitude")?;
    let lon = row.number("longitude", "longitude")?;
    LatLon::new(lat, lon).map_err(|_| format!("coordinates out of range ({lat}, {lon})"))
}

fn fwd_row(row: &Row<'_>, units: UnitSystem) -> Result<FwdTestPoint, String> {
    let key = lane_key(row)?;
    let pos = position(row)?;
    let station = row.optional_number("station_m")?;
    let load = row.number("load_lbf", "load_lbf")?;
    if load <= 0.0 {
        return Err(format!("load_lbf must be positive, got {load}"));
    }
    let mut d = [Deflection::ZERO; 5];
    for (slot, name) in d.iter_mut().zip(["d0", "d12", "d24", "d36", "d60"]) {
        let v = row.number(name, &format!("deflection {name}"))?;
        if v <= 0.0 {
            return Err(format!("non-positive deflection {name}"));
        }
        let deflection = match units {
            UnitSystem::Si => Deflection::from_microns(v),
            UnitSystem::Us => Deflection::from_mils(v),
        };
        *slot = deflection.map_err(|e| e.to_string())?;
        if !slot.is_positive() {
            return Err(format!("non-positive deflection {name}"));
        }
    }
    let hp = row.optional_number("hp_in")?;
    if let Some(h) = hp {
        if h <= 0.0 {
            return Err(format!("hp_in must be positive, got {h}"));
        }
    }
    let basin =
        DeflectionBasin::new(d[0], d[1], d[2], d[3], d[4], load).map_err(|e| e.to_string())?;
    Ok(FwdTestPoint::new(key, pos, station, basin, hp))
}

/// Parses an FWD file. Invalid rows are rejected with a reason; only an
/// unreadable or mismatched header fails the whole file.
pub fn parse_fwd_csv(
    bytes: &[u8],
    units: UnitSystem,
) -> Result<(Vec<FwdTestPoint>, ValidationReport), IngestError> {
    let records = read_records(bytes, &FWD_HEADER)?;
    let mut report = ValidationReport::default();
    let mut points = Vec::new();
    for (line, record) in records {
        let parsed = record.and_then(|r| {
            fwd_row(
                &Row {
                    record: &r,
                    header: &FWD_HEADER,
                },
                units,
            )
        });
        match parsed {
            Ok(p) => {
                if p.dbps.non_monotone {
                    report.warnings.push(Warning {
                        line,
                        message: "non-monotone deflection basin".into(),
                    });
                }
                report.accepted += 1;
                points.push(p);
            }
            Err(reason) => report.rejected.push(Rejection { line, reason }),
        }
    }
    Ok((points, report))
}

fn segment_row(row: &Row<'_>, units: UnitSystem) -> Result<SurfaceSegment, String> {
    let key = lane_key(row)?;
    let dmi: u64 = row.parse("dmi")?;
    let pos = position(row)?;
    let iri_unit = match units {
        UnitSystem::Si => Unit::MPerKm,
        UnitSystem::Us => Unit::InPerMi,
    };
    let mut iri = [0.0; 2];
    for (slot, name) in iri.iter_mut().zip(["l_iri", "r_iri"]) {
        let v = row.number(name, name)?;
        if v < 0.0 {
            return Err(format!("{name} must be >= 0"));
        }
        *slot = convert(v, iri_unit, Unit::MPerKm).map_err(|e| e.to_string())?;
    }
    let mut cd = [0.0; 2];
    for (slot, name) in cd.iter_mut().zip(["cd_left_pct", "cd_right_pct"]) {
        let v = row.number(name, name)?;
        if !(0.0..=100.0).contains(&v) {
            return Err("cd out of [0,100]".into());
        }
        *slot = v;
    }
    Ok(SurfaceSegment {
        route: key.route,
        direction: key.direction,
        lane: key.lane,
        dmi,
        latitude: pos.lat,
        longitude: pos.lon,
        length_m: SEGMENT_LENGTH_M,
        l_iri: iri[0],
        r_iri: iri[1],
        cd_left: cd[0],
        cd_right: cd[1],
        surface_image: row.optional_text("surface_image"),
        row_image: row.optional_text("row_image"),
    })
}

/// Parses a surface-segment file. A DMI repeated within one lane keeps the
/// first occurrence and rejects the rest.
pub fn parse_segment_csv(
    bytes: &[u8],
    units: UnitSystem,
) -> Result<(Vec<SurfaceSegment>, ValidationReport), IngestError> {
    let records = read_records(bytes, &SEGMENT_HEADER)?;
    let mut report = ValidationReport::default();
    let mut segments = Vec::new();
    let mut seen: HashSet<(LaneKey, u64)> = HashSet::new();
    for (line, record) in records {
        let parsed = record.and_then(|r| {
            segment_row(
                &Row {
                    record: &r,
                    header: &SEGMENT_HEADER,
                },
                units,
            )
        });
        match parsed {
            Ok(s) => {
                if !seen.insert((s.lane_key(), s.dmi)) {
                    report.rejected.push(Rejection {
                        line,
                        reason: "duplicate dmi".into(),
                    });
                    continue;
                }
                report.accepted += 1;
                segments.push(s);
            }
            Err(reason) => report.rejected.push(Rejection { line, reason }),
        }
    }
    Ok((segments, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FWD_HEAD: &str =
        "route,direction,lane,latitude,longitude,station_m,load_lbf,d0,d12,d24,d36,d60,hp_in\n";
    const SEG_HEAD: &str = "route,direction,lane,dmi,latitude,longitude,l_iri,r_iri,cd_left_pct,cd_right_pct,surface_image,row_image\n";

    fn fwd(rows: &[&str]) -> Vec<u8> {
        let mut s = FWD_HEAD.to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s.into_bytes()
    }

    fn seg(rows: &[&str]) -> Vec<u8> {
        let mut s = SEG_HEAD.to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s.into_bytes()
    }

    #[test]
    fn fwd_happy_path() {
        let bytes = fwd(&[
            "I-70,EB,DL,39.70,-86.10,100,9000,300,200,150,120,50,12",
            "I-70,EB,DL,39.71,-86.11,,9000,250,190,140,110,45,",
            "I-70,EB,PL,39.72,-86.12,300.5,9100,200,150,120,100,40,11.5",
        ]);
        let (pts, report) = parse_fwd_csv(&bytes, UnitSystem::Si).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(report.accepted, 3);
        assert!(report.rejected.is_empty());
        assert_eq!(pts[0].dbps.sci.microns(), 100.0);
        assert_eq!(pts[1].station_m, None);
        assert_eq!(pts[1].hp_in, None);
        assert_eq!(pts[2].station_m, Some(300.5));
    }

    #[test]
    fn fwd_non_monotone_row_is_accepted_with_warning() {
        let bytes = fwd(&["I-70,EB,DL,39.70,-86.10,100,9000,150,160,100,90,40,12"]);
        let (pts, report) = parse_fwd_csv(&bytes, UnitSystem::Si).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].dbps.sci.microns() < 0.0);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].line, 2);
    }

    #[test]
    fn fwd_missing_d60_is_rejected() {
        let bytes = fwd(&[
            "I-70,EB,DL,39.70,-86.10,100,9000,300,200,150,120,50,12",
            "I-70,EB,DL,39.70,-86.10,100,9000,300,200,150,120,,12",
        ]);
        let (pts, report) = parse_fwd_csv(&bytes, UnitSystem::Si).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(
            report.rejected,
            vec![Rejection {
                line: 3,
                reason: "missing deflection d60".into()
            }]
        );
        assert_eq!(report.total(), 2);
    }

    #[test]
    fn fwd_us_units_are_normalized() {
        let bytes = fwd(&["I-70,EB,DL,39.70,-86.10,,9000,10,8,6,4,2.5,12"]);
        let (pts, _) = parse_fwd_csv(&bytes, UnitSystem::Us).unwrap();
        assert_eq!(pts[0].basin.d0.microns(), 254.0);
        assert_eq!(pts[0].basin.d60.microns(), 63.5);
    }

    #[test]
    fn fwd_rejects_bad_values_but_keeps_going() {
        let bytes = fwd(&[
            "I-70,XB,DL,39.70,-86.10,100,9000,300,200,150,120,50,12",
            "I-70,EB,DL,95.0,-86.10,100,9000,300,200,150,120,50,12",
            "I-70,EB,DL,39.70,-86.10,100,9000,1e3,200,150,120,50,12",
            "I-70,EB,DL,39.70,-86.10,100,9000,300,200,150,120,50",
            "I-70,EB,DL,39.70,-86.10,100,9000,300,200,-5,120,50,12",
            "I-70,EB,DL,39.70,-86.10,100,9000,300,200,150,120,50,12",
        ]);
        let (pts, report) = parse_fwd_csv(&bytes, UnitSystem::Si).unwrap();
        assert_eq!(pts.len(), 1);
        let lines: Vec<u64> = report.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5, 6]);
        assert!(report.rejected[0].reason.contains("direction"));
        assert!(report.rejected[1].reason.contains("coordinates"));
        assert!(report.rejected[3].reason.contains("fields"));
        assert_eq!(report.rejected[4].reason, "non-positive deflection d24");
    }

    #[test]
    fn header_errors_name_the_column() {
        let bad =
            b"route,direction,lane,latitude,longitude,station_m,load_lbf,d0,d12,d24,d36,hp_in\n";
        let err = parse_fwd_csv(bad, UnitSystem::Si).unwrap_err();
        assert!(err.to_string().contains("d60"), "{err}");
        let reordered = b"direction,route,lane,latitude,longitude,station_m,load_lbf,d0,d12,d24,d36,d60,hp_in\n";
        assert!(matches!(
            parse_fwd_csv(reordered, UnitSystem::Si),
            Err(IngestError::Schema(_))
        ));
    }

    fn seg_row(dmi: u64, l: f64, cd: f64) -> String {
        format!("I-70,WB,PL,{dmi},39.7,-86.1,{l},1.2,{cd},2.0,img/{dmi}.jpg,")
    }

    #[test]
    fn segments_happy_path() {
        let rows: Vec<String> = (0..10).map(|i| seg_row(i, 1.1, 3.0)).collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let (segs, report) = parse_segment_csv(&seg(&refs), UnitSystem::Si).unwrap();
        assert_eq!(segs.len(), 10);
        assert_eq!(report.accepted, 10);
        assert_eq!(segs[3].surface_image.as_deref(), Some("img/3.jpg"));
        assert_eq!(segs[3].row_image, None);
        assert_eq!(segs[3].length_m, 1.8);
    }

    #[test]
    fn duplicate_dmi_is_rejected() {
        let rows = [
            seg_row(41, 1.0, 1.0),
            seg_row(42, 1.0, 1.0),
            seg_row(42, 2.0, 1.0),
        ];
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let (segs, report) = parse_segment_csv(&seg(&refs), UnitSystem::Si).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].l_iri, 1.0);
        assert_eq!(report.rejected[0].reason, "duplicate dmi");
        assert_eq!(report.rejected[0].line, 4);
    }

    #[test]
    fn cd_out_of_range_is_rejected() {
        let rows = [seg_row(1, 1.0, 120.0)];
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let (segs, report) = parse_segment_csv(&seg(&refs), UnitSystem::Si).unwrap();
        assert!(segs.is_empty());
        assert_eq!(report.rejected[0].reason, "cd out of [0,100]");
    }

    #[test]
    fn iri_in_per_mile() {
        let rows = [seg_row(1, 126.72, 1.0)];
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let (segs, _) = parse_segment_csv(&seg(&refs), UnitSystem::Us).unwrap();
        assert!((segs[0].l_iri - 2.0).abs() < 1e-12);
    }

    #[test]
    fn decimal_parsing_is_strict() {
        assert_eq!(parse_decimal("12.5"), Some(12.5));
        assert_eq!(parse_decimal("-0.25"), Some(-0.25));
        assert_eq!(parse_decimal("1,5"), None);
        assert_eq!(parse_decimal("1e3"), None);
        assert_eq!(parse_decimal("NaN"), None);
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal("1.2.3"), None);
    }
}
