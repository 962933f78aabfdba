//! axum router over [`Engine`].

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::multipart::MultipartError;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pmt_core::analytics::Series;
use pmt_core::domain::{Parameter, RoadClass};
use pmt_core::ingest::{SourceFile, UnitSystem};
use pmt_core::reliability::ReliabilityPair;
use serde::Deserialize;
use serde_json::json;

use crate::engine::{
    parse_band_spec, BandValues, Engine, EngineError, GroupBy, IngestRequest, LaneFilter,
};

/// Default request body cap, bytes.
pub const DEFAULT_BODY_LIMIT: usize = 64 * 1024 * 1024;

pub const DEFAULT_HISTOGRAM_BINS: usize = 10;

impl EngineError {
    pub fn status(&self) -> StatusCode {
        match self {
            EngineError::BadRequest(_) | EngineError::Schema(_) => StatusCode::BAD_REQUEST,
            EngineError::NotFound(_) => StatusCode::NOT_FOUND,
            EngineError::Conflict(_) => StatusCode::CONFLICT,
            EngineError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            EngineError::TooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            EngineError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for EngineError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl From<MultipartError> for EngineError {
    fn from(e: MultipartError) -> Self {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            EngineError::TooLarge
        } else {
            EngineError::BadRequest(e.body_text())
        }
    }
}

type AppState = Arc<Engine>;
type ApiResult<T> = Result<T, EngineError>;

pub fn router(engine: Arc<Engine>, body_limit: usize) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets).post(ingest))
        .route("/thresholds/derive", post(derive))
        .route(
            "/thresholds/{class}",
            get(get_thresholds).put(put_thresholds),
        )
        .route("/roads/{route}/segments", get(segments))
        .route("/roads/{route}/patching.csv", get(patching_csv))
        .route("/roads/{route}/stats", get(stats))
        .route("/roads/{route}/histogram", get(histogram))
        .route("/roads/{route}/stems", get(stems))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(engine)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| EngineError::Io(format!("worker failed: {e}")))?
}

async fn list_datasets(State(engine): State<AppState>) -> Json<serde_json::Value> {
    Json(json!(engine.list_datasets()))
}

async fn ingest(State(engine): State<AppState>, mut multipart: Multipart) -> ApiResult<Response> {
    let mut fwd: Option<(String, Vec<u8>)> = None;
    let mut segments: Option<(String, Vec<u8>)> = None;
    let mut text: BTreeMap<String, String> = BTreeMap::new();
    while let Some(field) = multipart.next_field().await? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let bytes = field.bytes().await?.to_vec();
        match name.as_str() {
            "fwd" => fwd = Some((file_name.unwrap_or_else(|| "fwd.csv".into()), bytes)),
            "segments" => {
                segments = Some((file_name.unwrap_or_else(|| "segments.csv".into()), bytes))
            }
            "units" | "class" | "id" => {
                let v = String::from_utf8(bytes)
                    .map_err(|_| EngineError::BadRequest(format!("field '{name}' is not UTF-8")))?;
                text.insert(name, v.trim().to_string());
            }
            other => {
                return Err(EngineError::BadRequest(format!(
                    "unexpected field '{other}'"
                )))
            }
        }
    }
    let (fwd_name, fwd) =
        fwd.ok_or_else(|| EngineError::BadRequest("missing field 'fwd'".into()))?;
    let (seg_name, seg) =
        segments.ok_or_else(|| EngineError::BadRequest("missing field 'segments'".into()))?;
    let class: RoadClass = text
        .get("class")
        .ok_or_else(|| EngineError::BadRequest("missing field 'class'".into()))?
        .parse()
        .map_err(|e: pmt_core::domain::DomainError| EngineError::BadRequest(e.to_string()))?;
    let units: UnitSystem = match text.get("units") {
        Some(u) => u
            .parse()
            .map_err(|e: pmt_core::ingest::IngestError| EngineError::BadRequest(e.to_string()))?,
        None => UnitSystem::Si,
    };
    let id = text.get("id").filter(|s| !s.is_empty()).cloned();
    let outcome = blocking(move || {
        engine.ingest(IngestRequest {
            fwd: SourceFile {
                path: &fwd_name,
                bytes: &fwd,
            },
            segments: SourceFile {
                path: &seg_name,
                bytes: &seg,
            },
            road_class: class,
            units,
            id: id.as_deref(),
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(outcome)).into_response())
}

fn road_class(s: &str) -> ApiResult<RoadClass> {
    s.parse()
        .map_err(|_| EngineError::NotFound(format!("unknown road class '{s}'")))
}

async fn get_thresholds(
    State(engine): State<AppState>,
    Path(class): Path<String>,
) -> ApiResult<Response> {
    Ok(Json(engine.thresholds(road_class(&class)?)?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PutBody {
    #[serde(default)]
    road_class: Option<RoadClass>,
    #[serde(default)]
    bands: BTreeMap<Parameter, BandValues>,
    #[serde(default)]
    note: Option<String>,
}

async fn put_thresholds(
    State(engine): State<AppState>,
    Path(class): Path<String>,
    Json(body): Json<PutBody>,
) -> ApiResult<Response> {
    let class = road_class(&class)?;
    if body.road_class.is_some_and(|c| c != class) {
        return Err(EngineError::Unprocessable(
            "road_class does not match the path".into(),
        ));
    }
    let set = blocking(move || engine.put_override(class, body.bands, body.note)).await?;
    Ok(Json(set).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeriveBody {
    dataset_id: String,
    /// Lower and upper reliability levels in percent; the class default
    /// when absent.
    #[serde(default)]
    pair: Option<(f64, f64)>,
    #[serde(default)]
    install: bool,
}

async fn derive(
    State(engine): State<AppState>,
    Json(body): Json<DeriveBody>,
) -> ApiResult<Response> {
    let pair = body
        .pair
        .map(|(lo, hi)| ReliabilityPair::new(lo, hi))
        .transpose()?;
    let set = blocking(move || {
        let set = engine.derive(&body.dataset_id, pair)?;
        if body.install {
            engine.install(&set, Some(format!("derived from {}", body.dataset_id)))?;
        }
        Ok(set)
    })
    .await?;
    Ok(Json(set).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct RoadQuery {
    direction: Option<String>,
    lane: Option<String>,
    thresholds: Option<String>,
    parameter: Option<String>,
    groupby: Option<String>,
    bins: Option<String>,
}

impl RoadQuery {
    fn filter(&self) -> ApiResult<LaneFilter> {
        LaneFilter::parse(self.direction.as_deref(), self.lane.as_deref())
    }

    fn bands(&self) -> ApiResult<BTreeMap<Parameter, BandValues>> {
        parse_band_spec(self.thresholds.as_deref().unwrap_or(""))
    }

    fn series(&self) -> ApiResult<Series> {
        let p = self.parameter.as_deref().ok_or_else(|| {
            EngineError::Unprocessable("missing query parameter 'parameter'".into())
        })?;
        Ok(p.parse()?)
    }
}

async fn segments(
    State(engine): State<AppState>,
    Path(route): Path<String>,
    Query(q): Query<RoadQuery>,
) -> ApiResult<Response> {
    Ok(Json(engine.segments(&route, q.filter()?, &q.bands()?)?).into_response())
}

async fn patching_csv(
    State(engine): State<AppState>,
    Path(route): Path<String>,
    Query(q): Query<RoadQuery>,
) -> ApiResult<Response> {
    let bytes = engine.patching_csv(&route, q.filter()?, &q.bands()?)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], bytes).into_response())
}

async fn stats(
    State(engine): State<AppState>,
    Path(route): Path<String>,
    Query(q): Query<RoadQuery>,
) -> ApiResult<Response> {
    let series = q.series()?;
    let groupby: GroupBy = q.groupby.as_deref().unwrap_or("").parse()?;
    let groups = engine.stats(&route, series, groupby, q.filter()?)?;
    Ok(
        Json(json!({ "route": route, "parameter": series, "groupby": groupby, "groups": groups }))
            .into_response(),
    )
}

async fn histogram(
    State(engine): State<AppState>,
    Path(route): Path<String>,
    Query(q): Query<RoadQuery>,
) -> ApiResult<Response> {
    let series = q.series()?;
    let bins = match q.bins.as_deref() {
        None | Some("") => DEFAULT_HISTOGRAM_BINS,
        Some(b) => b
            .parse()
            .map_err(|_| EngineError::Unprocessable(format!("invalid bins '{b}'")))?,
    };
    Ok(Json(engine.histogram(&route, series, bins, q.filter()?)?).into_response())
}

async fn stems(
    State(engine): State<AppState>,
    Path(route): Path<String>,
    Query(q): Query<RoadQuery>,
) -> ApiResult<Response> {
    let series = q.series()?;
    Ok(Json(engine.stems(&route, series, q.filter()?, &q.bands()?)?).into_response())
}
