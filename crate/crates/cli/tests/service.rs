use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use refdoc::classifiers::{Algorithm, ModelConfig};
use refdoc::pipeline::{fit, ModelFile};
use refdoc::synth::bundled_synthetic;
use refdoc_cli::{router, PredictResponse, MAX_MESSAGE_BYTES};
use tower::ServiceExt;

fn model(algorithm: Algorithm) -> ModelFile {
    let d = bundled_synthetic().unwrap();
    ModelFile::new(fit(&d, &ModelConfig::new(algorithm)).unwrap(), &d, None)
}

async fn post(app: axum::Router, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let request = Request::post("/predict")
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let response = app.oneshot(request).await.unwrap();
    let status = response.status();
    (status, response.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn message(text: &str) -> String {
    serde_json::json!({ "message": text }).to_string()
}

#[tokio::test]
async fn health() {
    let app = router(model(Algorithm::Nb));
    let response = app.oneshot(Request::get("/health").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    assert_eq!(&response.into_body().collect().await.unwrap().to_bytes()[..], b"ok");
}

#[tokio::test]
async fn probabilistic_models_answer_with_normalized_scores() {
    for algorithm in [Algorithm::Nb, Algorithm::Logreg] {
        let (status, body) = post(router(model(algorithm)), message("Extract common code into helper")).await;
        assert_eq!(status, StatusCode::OK);
        let r: PredictResponse = serde_json::from_slice(&body).unwrap();
        assert_eq!(r.label, "ExtractMethod");
        assert!((r.scores.values().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(r.baseline.as_deref(), Some("ExtractMethod"));
    }
}

#[tokio::test]
async fn bad_requests() {
    let app = router(model(Algorithm::Nb));
    assert_eq!(post(app.clone(), message("")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(app.clone(), message(" \n\t")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(app.clone(), "{\"message\": ").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(app.clone(), "{\"text\": \"x\"}").await.0, StatusCode::BAD_REQUEST);
    let (status, body) = post(app.clone(), message(&"a".repeat(MAX_MESSAGE_BYTES + 1))).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert!(serde_json::from_slice::<serde_json::Value>(&body).unwrap()["error"].is_string());
    assert_eq!(post(app, message(&"a ".repeat(MAX_MESSAGE_BYTES / 2))).await.0, StatusCode::OK);
}

#[tokio::test]
async fn identical_requests_give_identical_bodies() {
    let app = router(model(Algorithm::Gbt));
    let a = post(app.clone(), message("Moved parse() to the Reader class and renamed it")).await;
    let b = post(app, message("Moved parse() to the Reader class and renamed it")).await;
    assert_eq!(a.0, StatusCode::OK);
    assert_eq!(a, b);
}
