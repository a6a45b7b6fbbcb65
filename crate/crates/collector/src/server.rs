//! HTTP front end for the [`Store`].

use std::str::FromStr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use decwatt_core::{DecoderKind, Standard};

use crate::store::{ExportFilter, FieldError, IngestReceipt, Store, Verdict};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Mutex<Store>>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        AppState {
            store: Arc::new(Mutex::new(store)),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/submissions", post(submit))
        .route("/v1/completeness", get(completeness))
        .route("/v1/export", get(export))
        .with_state(state)
}

fn status_for(v: Verdict) -> StatusCode {
    match v {
        Verdict::AcceptedNew => StatusCode::CREATED,
        Verdict::SupersededPrevious => StatusCode::OK,
        Verdict::RejectedDuplicate => StatusCode::CONFLICT,
        Verdict::RejectedInvalid => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn unprocessable(errors: Vec<FieldError>) -> Response {
    let receipt = IngestReceipt {
        verdict: Verdict::RejectedInvalid,
        seq: None,
        sample: None,
        errors,
    };
    (StatusCode::UNPROCESSABLE_ENTITY, Json(receipt)).into_response()
}

async fn submit(State(state): State<AppState>, body: Bytes) -> Response {
    let mut store = state.store.lock().expect("store lock poisoned");
    match store.ingest_bytes(&body) {
        Ok(receipt) => {
            tracing::info!(verdict = ?receipt.verdict, seq = ?receipt.seq, "submission");
            (status_for(receipt.verdict), Json(receipt)).into_response()
        }
        Err(e) => {
            tracing::error!(error = %e, "ingest failed");
            let body = serde_json::json!({ "error": e.to_string(), "retriable": e.is_retriable() });
            (StatusCode::SERVICE_UNAVAILABLE, Json(body)).into_response()
        }
    }
}

async fn completeness(State(state): State<AppState>) -> Response {
    let rows = state.store.lock().expect("store lock poisoned").completeness_report();
    Json(rows).into_response()
}

#[derive(Debug, Default, Deserialize)]
pub struct ExportQuery {
    pub standard: Option<String>,
    pub kind: Option<String>,
    pub model: Option<String>,
}

impl ExportQuery {
    pub fn to_filter(&self) -> Result<ExportFilter, Vec<FieldError>> {
        let mut errs = Vec::new();
        let nonempty = |o: &Option<String>| o.as_deref().filter(|s| !s.is_empty()).map(str::to_string);
        let standard = nonempty(&self.standard).and_then(|s| {
            Standard::from_str(&s)
                .map_err(|e| errs.push(FieldError { field: "standard".into(), reason: e.to_string() }))
                .ok()
        });
        let kind = nonempty(&self.kind).and_then(|s| {
            DecoderKind::from_str(&s)
                .map_err(|e| errs.push(FieldError { field: "kind".into(), reason: e.to_string() }))
                .ok()
        });
        if !errs.is_empty() {
            return Err(errs);
        }
        Ok(ExportFilter {
            standard,
            kind,
            model: nonempty(&self.model),
        })
    }
}

async fn export(State(state): State<AppState>, Query(q): Query<ExportQuery>) -> Response {
    let filter = match q.to_filter() {
        Ok(f) => f,
        Err(errs) => return unprocessable(errs),
    };
    let bytes = state.store.lock().expect("store lock poisoned").export_bytes(&filter);
    ([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response()
}
