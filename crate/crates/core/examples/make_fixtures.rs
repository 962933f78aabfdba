//! Writes the bundled CSV fixtures.
//!
//! Usage: cargo run -p pmt-core --example make_fixtures [-- OUT_DIR]
//!
//! Output is deterministic. Every FWD fixture is built so the nearest-rank
//! percentiles at 80/85/90/95 % land exactly on the reference values below,
//! and the I-70 segment fixture pools IRI and CD onto the Interstate bands.

use std::fmt::Write as _;
use std::path::PathBuf;

use pmt_core::domain::{
    DeflectionBasin, Direction, FwdTestPoint, Lane, LaneKey, LatLon, RoadClass,
};
use pmt_core::structural::{
    aupp, sn_required, snr_for_point, subgrade_modulus, ClassConstants, SUBGRADE_SENSOR_OFFSET_IN,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Values at 80, 85, 90, 95 % for D0, D60, SCI, BCI, BDI (microns).
const STATE: [[f64; 4]; 5] = [
    [359.9, 388.6, 423.7, 494.3],
    [59.4, 62.2, 67.3, 77.5],
    [111.0, 123.2, 138.7, 171.2],
    [57.2, 62.2, 68.1, 82.6],
    [81.5, 89.2, 102.9, 125.0],
];
const US: [[f64; 4]; 5] = [
    [212.9, 227.6, 259.8, 295.4],
    [50.5, 53.1, 56.6, 63.0],
    [58.9, 66.0, 76.7, 94.0],
    [30.5, 34.3, 39.1, 46.2],
    [45.5, 50.0, 55.9, 68.6],
];
const INTERSTATE: [[f64; 4]; 5] = [
    [106.4, 121.4, 149.1, 214.9],
    [30.2, 33.0, 37.1, 47.5],
    [35.6, 38.1, 43.2, 49.3],
    [13.2, 15.5, 21.8, 33.8],
    [17.3, 19.6, 25.4, 37.6],
];
const LEVELS: [f64; 4] = [80.0, 85.0, 90.0, 95.0];

const LOAD_LBF: f64 = 9000.0;
const FWD_HEADER: &str =
    "route,direction,lane,latitude,longitude,station_m,load_lbf,d0,d12,d24,d36,d60,hp_in";
const SEG_HEADER: &str = "route,direction,lane,dmi,latitude,longitude,l_iri,r_iri,cd_left_pct,cd_right_pct,surface_image,row_image";

// SNR trend imposed on the I-70 points: snr = exp(-B * (d0 - CROSSING)).
const SNR_SLOPE_PER_UM: f64 = 0.004;
const SNR_CROSSING_UM: f64 = 203.0;

fn rank(p: f64, n: usize) -> usize {
    let r = (p * n as f64 / 100.0 - 1e-9).ceil() as usize;
    r.clamp(1, n)
}

fn hundredths(v: f64) -> i64 {
    (v * 100.0).round() as i64
}

/// Sorted series (hundredths of a micron) of length n for one parameter.
/// Below the 80 % rank and above the 95 % rank every parameter follows the
/// same scale factor; between anchors values are interpolated linearly.
fn series(anchors: [f64; 4], n: usize) -> Vec<i64> {
    let ranks: Vec<usize> = LEVELS.iter().map(|p| rank(*p, n)).collect();
    let a: Vec<i64> = anchors.iter().map(|v| hundredths(*v)).collect();
    let mut out = vec![0i64; n];
    for (k0, slot) in out.iter_mut().enumerate() {
        let k = k0 + 1;
        *slot = if k <= ranks[0] {
            let t = if ranks[0] > 1 {
                (k - 1) as f64 / (ranks[0] - 1) as f64
            } else {
                1.0
            };
            (a[0] as f64 * (0.55 + 0.45 * t)).round() as i64
        } else if k >= ranks[3] {
            let span = (n - ranks[3]).max(1) as f64;
            (a[3] as f64 * (1.0 + 0.25 * (k - ranks[3]) as f64 / span)).round() as i64
        } else {
            let j = (0..3)
                .find(|&j| k <= ranks[j + 1])
                .expect("between anchors");
            let t = (k - ranks[j]) as f64 / (ranks[j + 1] - ranks[j]) as f64;
            (a[j] as f64 + t * (a[j + 1] - a[j]) as f64).round() as i64
        };
    }
    for (level, (r, v)) in LEVELS.iter().zip(ranks.iter().zip(&a)) {
        assert_eq!(out[r - 1], *v, "anchor at {level} %");
    }
    assert!(
        out.windows(2).all(|w| w[0] <= w[1]),
        "series must be sorted"
    );
    out
}

/// Basins in rank order, as hundredths of a micron [d0, d12, d24, d36, d60].
fn ranked_basins(table: &[[f64; 4]; 5], n: usize) -> Vec<[i64; 5]> {
    let cols: Vec<Vec<i64>> = table.iter().map(|row| series(*row, n)).collect();
    (0..n)
        .map(|i| {
            let (d0, d60, sci, bci, bdi) =
                (cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i]);
            let d12 = d0 - sci;
            let d24 = d12 - bdi;
            let d36 = d24 - bci;
            assert!(
                d36 >= d60 && d60 > 0,
                "rank {} gives a non-monotone basin",
                i + 1
            );
            [d0, d12, d24, d36, d60]
        })
        .collect()
}

fn um(h: i64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

// Points along a straight east-west alignment; chainage grows eastwards.
fn position(base_lat: f64, base_lon: f64, chainage_m: f64) -> (f64, f64) {
    let r = 6_371_008.8_f64;
    let dlon = (chainage_m / (r * base_lat.to_radians().cos())).to_degrees();
    (base_lat, base_lon + dlon)
}

fn fwd_line(
    key: &LaneKey,
    lat: f64,
    lon: f64,
    station: Option<f64>,
    b: &[i64; 5],
    hp: Option<f64>,
) -> String {
    format!(
        "{},{},{},{:.6},{:.6},{},{:.0},{},{},{},{},{},{}",
        key.route,
        key.direction,
        key.lane,
        lat,
        lon,
        station.map(|s| format!("{s:.1}")).unwrap_or_default(),
        LOAD_LBF,
        um(b[0]),
        um(b[1]),
        um(b[2]),
        um(b[3]),
        um(b[4]),
        hp.map(|h| format!("{h:.4}")).unwrap_or_default(),
    )
}

fn basin(b: &[i64; 5]) -> DeflectionBasin {
    DeflectionBasin::from_microns(b.map(|h| h as f64 / 100.0), LOAD_LBF).expect("valid basin")
}

/// Pavement thickness that puts the point on the imposed SNR curve.
fn thickness_for_trend(b: &[i64; 5], constants: &ClassConstants) -> f64 {
    let basin = basin(b);
    let m_r = subgrade_modulus(LOAD_LBF, basin.d60.inches(), SUBGRADE_SENSOR_OFFSET_IN).unwrap();
    let sn_req = sn_required(&constants.with_modulus(m_r)).unwrap().sn;
    let target = (-SNR_SLOPE_PER_UM * (basin.d0.microns() - SNR_CROSSING_UM)).exp();
    let sn_eff = target * sn_req;
    let hp = (sn_eff / (2.272 * aupp(&basin).powf(-0.4678))).powf(1.0 / 0.4217);
    assert!((3.0..=40.0).contains(&hp), "unrealistic thickness {hp}");
    hp
}

fn simple_fixture(route: &str, table: &[[f64; 4]; 5], n: usize, seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = LaneKey {
        route: route.into(),
        direction: Direction::NB,
        lane: Lane::DL,
    };
    let mut basins = ranked_basins(table, n);
    basins.shuffle(&mut rng);
    let mut fwd = format!("{FWD_HEADER}\n");
    for (i, b) in basins.iter().enumerate() {
        let station = 30.0 * i as f64;
        let (lat, lon) = position(40.2, -86.9, station);
        let hp = rng.gen_range(60_000..140_000) as f64 / 10_000.0;
        writeln!(
            fwd,
            "{}",
            fwd_line(&key, lat, lon, Some(station), b, Some(hp))
        )
        .unwrap();
    }
    let mut seg = format!("{SEG_HEADER}\n");
    for k in 0..60u64 {
        let dmi = 20 * k;
        let (lat, lon) = position(40.2, -86.9, dmi as f64 * 1.8);
        writeln!(
            seg,
            "{},{},{},{},{:.6},{:.6},{:.2},{:.2},{:.1},{:.1},,",
            key.route,
            key.direction,
            key.lane,
            dmi,
            lat,
            lon,
            rng.gen_range(80..300) as f64 / 100.0,
            rng.gen_range(80..300) as f64 / 100.0,
            rng.gen_range(0..200) as f64 / 10.0,
            rng.gen_range(0..200) as f64 / 10.0,
        )
        .unwrap();
    }
    (fwd, seg)
}

struct LaneLayout {
    key: LaneKey,
    base_lat: f64,
    dmi_offset: u64,
    // FWD stations: first, spacing.
    stations: (f64, f64),
}

fn i70_lanes() -> Vec<LaneLayout> {
    let key = |direction, lane| LaneKey {
        route: "I-70".into(),
        direction,
        lane,
    };
    vec![
        LaneLayout {
            key: key(Direction::EB, Lane::DL),
            base_lat: 39.77000,
            dmi_offset: 7,
            stations: (90.0, 180.0),
        },
        LaneLayout {
            key: key(Direction::EB, Lane::PL),
            base_lat: 39.77004,
            dmi_offset: 21,
            stations: (90.0, 180.0),
        },
        LaneLayout {
            key: key(Direction::WB, Lane::DL),
            base_lat: 39.77020,
            dmi_offset: 0,
            stations: (108.0, 216.0),
        },
        LaneLayout {
            key: key(Direction::WB, Lane::PL),
            base_lat: 39.77016,
            dmi_offset: 14,
            stations: (108.0, 216.0),
        },
    ]
}

const I70_BASE_LON: f64 = -86.30;
const SEGMENTS_PER_LANE: u64 = 100;
const DMI_STEP: u64 = 30;

fn i70_fwd() -> String {
    let basins = ranked_basins(&INTERSTATE, 100);
    let constants = ClassConstants::default_for(RoadClass::InterstateHighway);
    let lanes = i70_lanes();
    // Passing lanes take the lower half of the ranks, driving lanes the upper.
    let ranks_for = |l: &LaneLayout| -> Vec<usize> {
        match (l.key.direction, l.key.lane) {
            (Direction::WB, Lane::PL) => (0..25).collect(),
            (Direction::EB, Lane::PL) => (25..50).collect(),
            (Direction::EB, Lane::DL) => (50..100).step_by(2).collect(),
            _ => (51..100).step_by(2).collect(),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut out = format!("{FWD_HEADER}\n");
    for lane in &lanes {
        let mut ranks = ranks_for(lane);
        ranks.shuffle(&mut rng);
        for (j, r) in ranks.iter().enumerate() {
            let b = &basins[*r];
            let station =
                lane.dmi_offset as f64 * 1.8 + lane.stations.0 + lane.stations.1 * j as f64;
            let (lat, lon) = position(lane.base_lat, I70_BASE_LON, station);
            let hp = thickness_for_trend(b, &constants);
            writeln!(
                out,
                "{}",
                fwd_line(&lane.key, lat, lon, Some(station), b, Some(hp))
            )
            .unwrap();
        }
    }
    // Sanity: the written points reproduce the trend closely.
    for line in out.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let v = |i: usize| f[i].parse::<f64>().unwrap();
        let p = FwdTestPoint::new(
            LaneKey {
                route: "I-70".into(),
                direction: f[1].parse().unwrap(),
                lane: f[2].parse().unwrap(),
            },
            LatLon::new(v(3), v(4)).unwrap(),
            Some(v(5)),
            DeflectionBasin::from_microns([v(7), v(8), v(9), v(10), v(11)], v(6)).unwrap(),
            Some(v(12)),
        );
        let snr = snr_for_point(&p, &constants).unwrap().snr;
        let want = (-SNR_SLOPE_PER_UM * (v(7) - SNR_CROSSING_UM)).exp();
        assert!((snr / want - 1.0).abs() < 1e-4, "snr {snr} vs {want}");
    }
    out
}

/// 800 pooled values in ascending order with exact anchors at the 90 % and
/// 95 % nearest ranks. `low`, `fair`, `poor` give the value ranges of the
/// three bands; the top three poor values are replaced by `extremes`.
fn pooled(
    lower: f64,
    upper: f64,
    low: (f64, f64),
    fair: (f64, f64),
    poor: (f64, f64),
    extremes: &[f64],
    scale: f64,
) -> Vec<i64> {
    let n = 800;
    let (r90, r95) = (rank(90.0, n), rank(95.0, n));
    let q = |v: f64| (v * scale).round() as i64;
    let lin =
        |(a, b): (f64, f64), i: usize, m: usize| q(a + (b - a) * i as f64 / (m.max(2) - 1) as f64);
    let mut v = Vec::with_capacity(n);
    let m_low = r90 - 1;
    v.extend((0..m_low).map(|i| lin(low, i, m_low)));
    v.push(q(lower));
    let m_fair = r95 - r90 - 1;
    v.extend((0..m_fair).map(|i| lin(fair, i, m_fair)));
    v.push(q(upper));
    let m_poor = n - r95 - extremes.len();
    v.extend((0..m_poor).map(|i| lin(poor, i, m_poor)));
    let mut ex: Vec<i64> = extremes.iter().map(|e| q(*e)).collect();
    ex.sort();
    v.extend(ex);
    assert_eq!(v.len(), n);
    assert!(v.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(v[r90 - 1], q(lower));
    assert_eq!(v[r95 - 1], q(upper));
    v
}

fn i70_segments() -> String {
    let lanes = i70_lanes();
    let mut rng = ChaCha8Rng::seed_from_u64(2924);

    // IRI in hundredths of m/km, CD in tenths of a percent.
    let iri = pooled(
        1.73,
        2.07,
        (1.10, 1.72),
        (1.74, 2.06),
        (2.08, 4.50),
        &[5.4, 7.7, 8.1],
        100.0,
    );
    let cd = pooled(
        12.5,
        13.2,
        (0.0, 12.4),
        (12.6, 13.1),
        (13.3, 30.0),
        &[],
        10.0,
    );

    // Slots: (lane index, segment index, wheel path 0 = left / 1 = right).
    let slot_dmi = |l: usize, k: u64| lanes[l].dmi_offset + DMI_STEP * k;
    let is_passing = |l: usize| lanes[l].key.lane == Lane::PL;
    let find = |dir: Direction, lane: Lane| {
        lanes
            .iter()
            .position(|x| x.key.direction == dir && x.key.lane == lane)
            .unwrap()
    };
    let wb_pl = find(Direction::WB, Lane::PL);
    let wb_dl = find(Direction::WB, Lane::DL);
    let k_2924 = (2924 - lanes[wb_pl].dmi_offset) / DMI_STEP;
    let k_330 = (330 - lanes[wb_dl].dmi_offset) / DMI_STEP;
    assert_eq!(slot_dmi(wb_pl, k_2924), 2924);
    assert_eq!(slot_dmi(wb_dl, k_330), 330);

    let q = |v: f64| (v * 100.0).round() as i64;
    let specials = [
        ((wb_pl, k_2924, 0), q(8.1)),
        ((wb_dl, k_330, 0), q(5.4)),
        ((wb_dl, k_330, 1), q(7.7)),
    ];

    let mut all_slots: Vec<(usize, u64, usize)> = Vec::new();
    for l in 0..lanes.len() {
        for k in 0..SEGMENTS_PER_LANE {
            for w in 0..2 {
                all_slots.push((l, k, w));
            }
        }
    }
    let mut assigned_iri = std::collections::HashMap::new();
    for (slot, v) in specials {
        assigned_iri.insert(slot, v);
    }
    let mut pool: Vec<i64> = iri.clone();
    for (_, v) in specials {
        let i = pool.iter().rposition(|x| *x == v).unwrap();
        pool.remove(i);
    }
    // Passing lanes take the lowest values.
    let mut pl_slots: Vec<_> = all_slots
        .iter()
        .copied()
        .filter(|s| is_passing(s.0) && !assigned_iri.contains_key(s))
        .collect();
    let mut dl_slots: Vec<_> = all_slots
        .iter()
        .copied()
        .filter(|s| !is_passing(s.0) && !assigned_iri.contains_key(s))
        .collect();
    pl_slots.shuffle(&mut rng);
    dl_slots.shuffle(&mut rng);
    let (pl_vals, dl_vals) = pool.split_at(pl_slots.len());
    for (s, v) in pl_slots
        .iter()
        .zip(pl_vals)
        .chain(dl_slots.iter().zip(dl_vals))
    {
        assigned_iri.insert(*s, *v);
    }

    let mut cd_pl: Vec<_> = all_slots
        .iter()
        .copied()
        .filter(|s| is_passing(s.0))
        .collect();
    let mut cd_dl: Vec<_> = all_slots
        .iter()
        .copied()
        .filter(|s| !is_passing(s.0))
        .collect();
    cd_pl.shuffle(&mut rng);
    cd_dl.shuffle(&mut rng);
    let (cpl, cdl) = cd.split_at(cd_pl.len());
    let assigned_cd: std::collections::HashMap<_, _> = cd_pl
        .iter()
        .zip(cpl)
        .chain(cd_dl.iter().zip(cdl))
        .map(|(s, v)| (*s, *v))
        .collect();

    // Scenario checks: the WB passing lane is good everywhere except the
    // left wheel path at DMI 2924.
    for k in 0..SEGMENTS_PER_LANE {
        for w in 0..2 {
            let s = (wb_pl, k, w);
            if s != (wb_pl, k_2924, 0) {
                assert!(assigned_iri[&s] <= q(1.73), "WB PL IRI must be good");
            }
            assert!(assigned_cd[&s] <= 125, "WB PL CD must be good");
        }
    }

    let mut out = format!("{SEG_HEADER}\n");
    for (l, lane) in lanes.iter().enumerate() {
        for k in 0..SEGMENTS_PER_LANE {
            let dmi = slot_dmi(l, k);
            let (lat, lon) = position(lane.base_lat, I70_BASE_LON, dmi as f64 * 1.8);
            let tag = format!("{}_{}_{}", lane.key.direction, lane.key.lane, dmi);
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{},{},{},{},images/surface/{tag}.jpg,images/row/{tag}.jpg",
                lane.key.route,
                lane.key.direction,
                lane.key.lane,
                dmi,
                lat,
                lon,
                um(assigned_iri[&(l, k, 0)]),
                um(assigned_iri[&(l, k, 1)]),
                tenths(assigned_cd[&(l, k, 0)]),
                tenths(assigned_cd[&(l, k, 1)]),
            )
            .unwrap();
        }
    }
    out
}

fn tenths(v: i64) -> String {
    format!("{}.{}", v / 10, v % 10)
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    std::fs::create_dir_all(&out).unwrap();

    let (fwd, seg) = simple_fixture("SR-37", &STATE, 1579, 37);
    std::fs::write(out.join("state_fwd.csv"), fwd).unwrap();
    std::fs::write(out.join("state_segments.csv"), seg).unwrap();
    let (fwd, seg) = simple_fixture("US-31", &US, 605, 31);
    std::fs::write(out.join("us_fwd.csv"), fwd).unwrap();
    std::fs::write(out.join("us_segments.csv"), seg).unwrap();
    std::fs::write(out.join("i70_fwd.csv"), i70_fwd()).unwrap();
    std::fs::write(out.join("i70_segments.csv"), i70_segments()).unwrap();
    println!("fixtures written to {}", out.display());
}
