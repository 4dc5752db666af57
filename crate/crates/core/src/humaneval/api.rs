//! JSON API over an [`EventStore`].

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::agreement::agreement;
use super::rubric::{rubric, Criterion};
use super::store::{EventStore, HumanEvalError, ItemFilter};
use super::summary::Summary;

pub struct ApiError {
    status: StatusCode,
    message: String,
    criterion: Option<Criterion>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            criterion: None,
        }
    }
}

impl From<HumanEvalError> for ApiError {
    fn from(e: HumanEvalError) -> Self {
        let status = match &e {
            HumanEvalError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            HumanEvalError::NotAssigned { .. } => StatusCode::FORBIDDEN,
            HumanEvalError::UnknownItem(_) => StatusCode::NOT_FOUND,
            HumanEvalError::Conflict(_) => StatusCode::CONFLICT,
            HumanEvalError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let criterion = match &e {
            HumanEvalError::Validation(v) => v.criterion,
            _ => None,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError {
            status,
            message: e.to_string(),
            criterion,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(r.status(), r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(c) = self.criterion {
            body["criterion"] = json!(c);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;
type Store = State<Arc<EventStore>>;

#[derive(Deserialize)]
struct ItemsQuery {
    annotator: String,
    status: Option<String>,
}

async fn items(State(store): Store, query: Result<Query<ItemsQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = query?;
    let filter: ItemFilter = match q.status.as_deref() {
        None => ItemFilter::Pending,
        Some(s) => s
            .parse()
            .map_err(|e: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e))?,
    };
    let items = store.items_for(&q.annotator, filter);
    Ok(Json(json!({
        "annotator": q.annotator,
        "status": filter,
        "items": items,
        "rubric": rubric(),
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingBody {
    annotator: String,
    item_id: String,
    scores: Value,
    #[serde(default)]
    note: Option<String>,
}

async fn ratings(State(store): Store, body: Result<Json<RatingBody>, JsonRejection>) -> ApiResult {
    let Json(b) = body?;
    let outcome = store.record_rating(&b.annotator, &b.item_id, &b.scores, b.note)?;
    Ok(Json(json!(outcome)))
}

async fn agreement_view(State(store): Store) -> ApiResult {
    Ok(Json(json!(agreement(&store.snapshot()))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsensusBody {
    item_id: String,
    scores: Value,
    resolved_by: Vec<String>,
    /// `seq` of the agreement view the decision was based on.
    #[serde(default)]
    seen_seq: Option<u64>,
}

async fn consensus(
    State(store): Store,
    body: Result<Json<ConsensusBody>, JsonRejection>,
) -> ApiResult {
    let Json(b) = body?;
    let record = store.resolve(&b.item_id, &b.scores, b.resolved_by, b.seen_seq)?;
    Ok(Json(json!(record)))
}

async fn summary(State(store): Store) -> ApiResult {
    Ok(Json(json!(Summary::of(&store.snapshot()))))
}

async fn export(State(store): Store) -> Response {
    (
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        store.export(),
    )
        .into_response()
}

/// Routes under `/api`.
pub fn router(store: Arc<EventStore>) -> Router {
    Router::new()
        .route("/api/items", get(items))
        .route("/api/ratings", post(ratings))
        .route("/api/agreement", get(agreement_view))
        .route("/api/consensus", post(consensus))
        .route("/api/summary", get(summary))
        .route("/api/export", get(export))
        .with_state(store)
}
