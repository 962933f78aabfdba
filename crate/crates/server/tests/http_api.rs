mod common;

use axum::http::{Method, StatusCode};
use common::{dataset_body, fixture, TestApp};
use serde_json::json;

#[tokio::test]
async fn empty_store_lists_nothing() {
    let app = TestApp::new();
    let (s, v) = app.get_json("/datasets").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!([]));
}

#[tokio::test]
async fn ingest_returns_manifest_with_counts() {
    let app = TestApp::new();
    let (s, v) = app
        .post_dataset(dataset_body(
            &fixture("i70_fwd.csv"),
            &fixture("i70_segments.csv"),
            "interstate",
            None,
        ))
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["manifest"]["fwd_count"], 100);
    assert_eq!(v["manifest"]["segment_count"], 400);
    assert_eq!(v["manifest"]["road_class"], "interstate");
    assert_eq!(v["reports"]["fwd"]["accepted"], 100);
    assert!(v["manifest"]["id"]
        .as_str()
        .unwrap()
        .starts_with("interstate-"));

    let (_, list) = app.get_json("/datasets").await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0], v["manifest"]);
}

#[tokio::test]
async fn missing_column_is_a_400_naming_it() {
    let app = TestApp::new();
    let fwd = String::from_utf8(fixture("i70_fwd.csv")).unwrap();
    // Only the header line loses the column.
    let header_without_d60 = fwd.replacen(",d60,", ",", 1);
    let (s, v) = app
        .post_dataset(dataset_body(
            header_without_d60.as_bytes(),
            &fixture("i70_segments.csv"),
            "interstate",
            None,
        ))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
    assert!(v["error"].as_str().unwrap().contains("d60"), "{v}");
}

#[tokio::test]
async fn malformed_upload_fields_are_400() {
    let app = TestApp::new();
    let (s, _) = app
        .post_dataset(dataset_body(
            &fixture("i70_fwd.csv"),
            &fixture("i70_segments.csv"),
            "motorway",
            None,
        ))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let body = common::multipart(&[common::Part {
        name: "fwd",
        file_name: Some("f.csv"),
        bytes: &fixture("i70_fwd.csv"),
    }]);
    let (s, v) = app.post_dataset(body).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("segments"));
}

#[tokio::test]
async fn duplicate_id_is_409() {
    let app = TestApp::new();
    app.ingest_i70().await;
    let (s, _) = app
        .post_dataset(dataset_body(
            &fixture("i70_fwd.csv"),
            &fixture("i70_segments.csv"),
            "interstate",
            Some("i70"),
        ))
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn oversize_upload_is_413() {
    let app = TestApp::with_limit(4 * 1024);
    let (s, _) = app
        .post_dataset(dataset_body(
            &fixture("i70_fwd.csv"),
            &fixture("i70_segments.csv"),
            "interstate",
            None,
        ))
        .await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn interstate_defaults_without_override() {
    let app = TestApp::new();
    let (s, v) = app.get_json("/thresholds/interstate").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["provenance"], "builtin");
    let expected = [
        ("d0", 149.1, 214.9),
        ("d60", 37.1, 47.5),
        ("sci", 43.2, 49.3),
        ("bci", 21.8, 33.8),
        ("bdi", 25.4, 37.6),
    ];
    for (p, lo, hi) in expected {
        assert_eq!(v[p]["lower"], lo, "{p}");
        assert_eq!(v[p]["upper"], hi, "{p}");
    }
    let (s, _) = app.get_json("/thresholds/county").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn inverted_band_put_is_422_and_changes_nothing() {
    let app = TestApp::new();
    let (_, before) = app.get_json("/thresholds/interstate").await;
    let (s, _) = app
        .json(
            Method::PUT,
            "/thresholds/interstate",
            json!({ "bands": { "d0": { "lower": 200.0, "upper": 150.0 } } }),
        )
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, after) = app.get_json("/thresholds/interstate").await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn put_override_merges_with_defaults() {
    let app = TestApp::new();
    let (s, v) = app
        .json(
            Method::PUT,
            "/thresholds/us",
            json!({ "bands": { "iri": { "lower": 1.5, "upper": 2.5 } }, "note": "trial" }),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, got) = app.get_json("/thresholds/us").await;
    assert_eq!(got, v);
    assert_eq!(got["provenance"], "user_override");
    assert_eq!(got["iri"]["upper"], 2.5);
    assert_eq!(got["d0"]["lower"], 227.6);
}

#[tokio::test]
async fn derive_on_fixture_reproduces_the_reference_band() {
    let app = TestApp::new();
    let id = app.ingest_i70().await;
    let (s, v) = app
        .json(
            Method::POST,
            "/thresholds/derive",
            json!({ "dataset_id": id, "pair": [90.0, 95.0] }),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["provenance"], "derived");
    assert_eq!(
        (v["d0"]["lower"].as_f64(), v["d0"]["upper"].as_f64()),
        (Some(149.1), Some(214.9))
    );
    // Not installed unless asked.
    let (_, t) = app.get_json("/thresholds/interstate").await;
    assert_eq!(t["provenance"], "builtin");

    let (s, _) = app
        .json(
            Method::POST,
            "/thresholds/derive",
            json!({ "dataset_id": id, "pair": [90.0, 95.0], "install": true }),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    let (_, t) = app.get_json("/thresholds/interstate").await;
    assert_eq!(t["provenance"], "user_override");
    assert_eq!(t["d0"]["upper"], 214.9);
}

#[tokio::test]
async fn derive_errors() {
    let app = TestApp::new();
    let (s, _) = app
        .json(
            Method::POST,
            "/thresholds/derive",
            json!({ "dataset_id": "nope" }),
        )
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let id = app.ingest_i70().await;
    let (s, _) = app
        .json(
            Method::POST,
            "/thresholds/derive",
            json!({ "dataset_id": id, "pair": [95.0, 90.0] }),
        )
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_route_is_404_and_bad_parameter_422() {
    let app = TestApp::new();
    app.ingest_i70().await;
    for uri in [
        "/roads/I-69/segments",
        "/roads/I-69/patching.csv",
        "/roads/I-69/stats?parameter=d0",
    ] {
        let (s, _) = app.get(uri).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
    }
    for uri in [
        "/roads/I-70/stats?parameter=rutting",
        "/roads/I-70/histogram?parameter=d0&bins=0",
        "/roads/I-70/histogram?parameter=d0&bins=x",
        "/roads/I-70/segments?thresholds=iri:2:1",
        "/roads/I-70/segments?direction=XB",
        "/roads/I-70/stats?parameter=d0&groupby=color",
    ] {
        let (s, _) = app.get(uri).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{uri}");
    }
}

#[tokio::test]
async fn segments_carry_markers_and_street_view() {
    let app = TestApp::new();
    app.ingest_i70().await;
    let (s, v) = app
        .get_json("/roads/I-70/segments?direction=WB&lane=PL")
        .await;
    assert_eq!(s, StatusCode::OK);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 100);
    let flagged: Vec<_> = rows
        .iter()
        .filter(|r| r["marker_color"] != "green")
        .collect();
    assert_eq!(flagged.len(), 1);
    assert_eq!(flagged[0]["dmi"], 2924);
    assert_eq!(flagged[0]["marker_color"], "yellow");
    assert_eq!(flagged[0]["suggestion"]["decision"], "surface_required");
    for r in rows {
        let url = r["street_view_url"].as_str().unwrap();
        assert!(url.contains(&format!(
            "{:.6},{:.6}",
            r["latitude"].as_f64().unwrap(),
            r["longitude"].as_f64().unwrap()
        )));
        assert!(r["snr"].is_number());
        assert!(r["images"]["surface"].is_string());
    }
}

#[tokio::test]
async fn query_override_forces_surface_patching_without_mutation() {
    let app = TestApp::new();
    app.ingest_i70().await;
    let (_, before) = app.get_json("/thresholds/interstate").await;
    let (s, v) = app
        .get_json("/roads/I-70/segments?thresholds=iri:0.5:1.0")
        .await;
    assert_eq!(s, StatusCode::OK);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 400);
    for r in rows {
        let d = r["suggestion"]["decision"].as_str().unwrap();
        assert!(
            [
                "surface_required",
                "full_depth_warning",
                "full_depth_required"
            ]
            .contains(&d),
            "{d}"
        );
    }
    let (_, after) = app.get_json("/thresholds/interstate").await;
    assert_eq!(before, after);
    let (_, csv_default) = app.get("/roads/I-70/patching.csv").await;
    let (_, csv_what_if) = app
        .get("/roads/I-70/patching.csv?thresholds=iri:0.5:1.0")
        .await;
    assert_ne!(csv_default, csv_what_if);
    let (_, csv_again) = app.get("/roads/I-70/patching.csv").await;
    assert_eq!(csv_default, csv_again);
}

#[tokio::test]
async fn patching_csv_is_deterministic() {
    let app = TestApp::new();
    app.ingest_i70().await;
    let (s, a) = app.get("/roads/I-70/patching.csv").await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = app.get("/roads/I-70/patching.csv").await;
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 401);
    assert!(text.starts_with("route,"));
}

#[tokio::test]
async fn stats_by_lane_put_driving_lane_above_passing_lane() {
    let app = TestApp::new();
    app.ingest_i70().await;
    let (s, v) = app
        .get_json("/roads/I-70/stats?parameter=d0&groupby=lane")
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let groups = v["groups"].as_array().unwrap();
    let median = |g: &str| {
        groups.iter().find(|x| x["group"] == g).unwrap()["stats"]["median"]
            .as_f64()
            .unwrap()
    };
    assert!(median("DL") > median("PL"));

    let (_, all) = app.get_json("/roads/I-70/stats?parameter=l_iri").await;
    assert_eq!(all["groups"].as_array().unwrap().len(), 1);
    assert_eq!(all["groups"][0]["stats"]["n"], 400);
    let (_, keyed) = app
        .get_json("/roads/I-70/stats?parameter=l_iri&groupby=lane_key")
        .await;
    assert_eq!(keyed["groups"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn histogram_and_stems() {
    let app = TestApp::new();
    app.ingest_i70().await;
    let (s, h) = app
        .get_json("/roads/I-70/histogram?parameter=l_iri&bins=8")
        .await;
    assert_eq!(s, StatusCode::OK);
    let counts: u64 = h["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(counts, 400);
    assert_eq!(h["edges"].as_array().unwrap().len(), 9);

    let (s, v) = app
        .get_json("/roads/I-70/stems?parameter=l_iri&direction=WB&lane=PL")
        .await;
    assert_eq!(s, StatusCode::OK);
    let stems = v[0]["stems"].as_array().unwrap();
    let flagged: Vec<u64> = stems
        .iter()
        .filter(|s| s["flagged"] == true)
        .map(|s| s["dmi"].as_u64().unwrap())
        .collect();
    assert_eq!(flagged, vec![2924]);
}

#[tokio::test]
async fn state_survives_restart() {
    let app = TestApp::new();
    app.ingest_i70().await;
    app.json(
        Method::PUT,
        "/thresholds/interstate",
        json!({ "bands": { "cd": { "lower": 10.0, "upper": 11.0 } } }),
    )
    .await;
    let (_, csv) = app.get("/roads/I-70/patching.csv").await;
    let engine = pmt_server::Engine::open(app.dir.path()).unwrap();
    let again = TestApp {
        router: pmt_server::router(std::sync::Arc::new(engine), 1 << 20),
        dir: tempfile::tempdir().unwrap(),
    };
    let (_, csv2) = again.get("/roads/I-70/patching.csv").await;
    assert_eq!(csv, csv2);
}
