use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use super::{ApiError, Service};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut body = json!({ "error": self.message });
        if !self.details.is_empty() {
            body["details"] = json!(self.details);
        }
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<Service>>;

#[derive(Deserialize)]
struct StudentQuery {
    student: Option<String>,
}

async fn list_exercises(State(svc): Shared) -> Response {
    Json(svc.handle_get_exercises()).into_response()
}

async fn get_exercise(State(svc): Shared, Path(id): Path<String>, Query(q): Query<StudentQuery>) -> Response {
    match svc.handle_get_exercise(&id, q.student.as_deref()) {
        Ok(bundle) => Json(bundle).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn post_submission(State(svc): Shared, Path(id): Path<String>, body: Bytes) -> Response {
    let req = match Service::parse_submission(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    // judging is CPU-bound and may spawn external processes
    let result = tokio::task::spawn_blocking(move || svc.handle_post_submission(&id, req)).await;
    match result {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(500, e.to_string()).into_response(),
    }
}

async fn exercise_leaderboard(State(svc): Shared, Path(id): Path<String>) -> Response {
    match svc.handle_get_leaderboard(Some(&id)) {
        Ok(rows) => Json(rows).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn global_leaderboard(State(svc): Shared) -> Response {
    match svc.handle_get_leaderboard(None) {
        Ok(rows) => Json(rows).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn exercise_stats(State(svc): Shared, Path(id): Path<String>) -> Response {
    match svc.handle_get_stats(&id) {
        Ok(stats) => Json(stats).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn put_exercise(State(svc): Shared, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let bearer =
        headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
    let Ok(text) = std::str::from_utf8(&body) else {
        return ApiError::new(400, "body is not UTF-8").into_response();
    };
    let result = {
        let (svc, text, bearer) = (svc.clone(), text.to_string(), bearer.map(str::to_string));
        tokio::task::spawn_blocking(move || svc.handle_put_exercise(&id, bearer.as_deref(), &text)).await
    };
    match result {
        Ok(Ok(replaced)) => {
            let status = if replaced { StatusCode::OK } else { StatusCode::CREATED };
            (status, Json(json!({ "replaced": replaced }))).into_response()
        }
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(500, e.to_string()).into_response(),
    }
}

/// HTTP routes over a shared service.
pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/exercises", get(list_exercises))
        .route("/exercises/{id}", get(get_exercise).put(put_exercise))
        .route("/exercises/{id}/submissions", axum::routing::post(post_submission))
        .route("/exercises/{id}/leaderboard", get(exercise_leaderboard))
        .route("/exercises/{id}/stats", get(exercise_stats))
        .route("/leaderboard", get(global_leaderboard))
        .with_state(service)
}
