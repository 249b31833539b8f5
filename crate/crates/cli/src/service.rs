use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};

use refdoc::baseline::keyword_predict;
use refdoc::pipeline::{predict_message, ModelFile};
use refdoc::terms::{match_patterns, PatternCatalog};

/// Largest accepted message, in bytes.
pub const MAX_MESSAGE_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Deserialize)]
pub struct PredictRequest {
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub label: String,
    pub scores: BTreeMap<String, f64>,
    pub baseline: Option<String>,
    pub patterns: BTreeMap<String, Vec<String>>,
}

pub fn predict_response(file: &ModelFile, message: &str) -> PredictResponse {
    let scores = predict_message(&file.model, message);
    PredictResponse {
        label: scores.label().name().to_string(),
        scores: scores.to_map(),
        baseline: keyword_predict(message).label.map(|l| l.name().to_string()),
        patterns: match_patterns(message, PatternCatalog::bundled())
            .into_iter()
            .map(|(c, p)| (c.name().to_string(), p))
            .collect(),
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    let body = serde_json::json!({ "error": message }).to_string();
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn predict(State(model): State<Arc<ModelFile>>, body: Bytes) -> Response {
    let request: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, &format!("malformed request: {e}")),
    };
    if request.message.len() > MAX_MESSAGE_BYTES {
        return error(StatusCode::PAYLOAD_TOO_LARGE, "message exceeds 65536 bytes");
    }
    if request.message.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "message is empty");
    }
    let response = predict_response(&model, &request.message);
    match serde_json::to_string(&response) {
        Ok(body) => (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn health() -> &'static str {
    "ok"
}

pub fn router(model: ModelFile) -> Router {
    Router::new()
        .route("/predict", post(predict))
        .route("/health", get(health))
        // room for JSON escaping around a maximal message
        .layer(DefaultBodyLimit::max(8 * MAX_MESSAGE_BYTES))
        .with_state(Arc::new(model))
}
