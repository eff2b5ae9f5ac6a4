//! HTTP front end of the collector.
//!
//! `POST /reports` takes one report object, `GET /reports/{seq}` returns a
//! stored record, `GET /stats?metric=..&group_by=technology` aggregates and
//! `GET /healthz` reports liveness. There is no authentication.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::stats::{parse_grouping, query_stats, Metric, QueryError};
use crate::store::{IngestError, ReportStore};

pub fn router(store: Arc<ReportStore>) -> Router {
    Router::new()
        .route("/reports", post(post_report))
        .route("/reports/{seq}", get(get_report))
        .route("/stats", get(get_stats))
        .route("/healthz", get(healthz))
        .with_state(store)
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

async fn post_report(State(store): State<Arc<ReportStore>>, body: String) -> Response {
    // Appends fsync; keep them off the async workers.
    let outcome = tokio::task::spawn_blocking(move || store.ingest(&body)).await;
    match outcome {
        Ok(Ok(seq)) => (StatusCode::CREATED, Json(json!({ "seq": seq }))).into_response(),
        Ok(Err(IngestError::Invalid(v))) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "violations": v })),
        )
            .into_response(),
        Ok(Err(e @ IngestError::Malformed(_))) => error(StatusCode::BAD_REQUEST, e),
        Ok(Err(e @ IngestError::Storage(_))) => {
            log::error!("{e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, e)
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn get_report(State(store): State<Arc<ReportStore>>, Path(seq): Path<u64>) -> Response {
    match store.get(seq) {
        Some(rec) => Json(rec).into_response(),
        None => error(
            StatusCode::NOT_FOUND,
            format!("no report with sequence {seq}"),
        ),
    }
}

#[derive(Debug, Deserialize)]
struct StatsParams {
    metric: Option<String>,
    group_by: Option<String>,
}

async fn get_stats(
    State(store): State<Arc<ReportStore>>,
    Query(q): Query<StatsParams>,
) -> Response {
    let Some(name) = q.metric else {
        return error(StatusCode::BAD_REQUEST, "missing `metric` parameter");
    };
    let parsed = name
        .parse::<Metric>()
        .and_then(|m| Ok((m, parse_grouping(q.group_by.as_deref())?)));
    let (metric, grouped) = match parsed {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let result = {
        let snap = store.snapshot();
        let reports: Vec<_> = snap.iter().map(|r| r.report.clone()).collect();
        drop(snap);
        query_stats(&reports, metric, grouped)
    };
    match result {
        Ok(stats) => Json(stats).into_response(),
        Err(QueryError::Empty) => (
            StatusCode::NOT_FOUND,
            Json(json!({ "status": "empty", "error": QueryError::Empty.to_string() })),
        )
            .into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
    }
}

async fn healthz(State(store): State<Arc<ReportStore>>) -> Response {
    Json(json!({ "status": "ok", "reports": store.len() })).into_response()
}
