//! JSON-over-HTTP front end of [`RoundService`].
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | POST | `/rounds` | [`CreateRound`] | `{"round_id"}` |
//! | POST | `/rounds/{id}/join` | | [`Joined`] |
//! | GET | `/rounds/{id}/view?token=` | | [`WorkerView`](pva_core::WorkerView) |
//! | POST | `/rounds/{id}/actions` | [`Submission`] | [`Ack`](crate::service::Ack) |
//! | POST | `/rounds/{id}/close` | | `{"winner"}` |
//! | GET | `/rounds/{id}/results` | | [`Results`](crate::service::Results) |
//!
//! Errors are `{"error", "message"}` with 400, 401, 404 or 409.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pva_core::MechanismError;
use serde::{Deserialize, Serialize};

use crate::service::{CreateRound, Joined, RoundService, ServiceError, Submission};

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

pub struct ApiError(StatusCode, &'static str, String);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        use MechanismError as M;
        let (status, code) = match &e {
            ServiceError::UnknownRound(_) => (StatusCode::NOT_FOUND, "unknown_round"),
            ServiceError::InvalidToken => (StatusCode::UNAUTHORIZED, "invalid_token"),
            ServiceError::InvalidPayoffs(_) => (StatusCode::BAD_REQUEST, "invalid_payoffs"),
            ServiceError::Mechanism(m) => match m {
                M::RoundClosed => (StatusCode::CONFLICT, "round_closed"),
                M::RoundStillOpen => (StatusCode::CONFLICT, "round_still_open"),
                M::DuplicateVote(_) => (StatusCode::CONFLICT, "duplicate_vote"),
                M::NotTerminable | M::NoVotes => (StatusCode::CONFLICT, "not_terminable"),
                M::UnknownContribution(_) => (StatusCode::BAD_REQUEST, "unknown_contribution"),
                M::EmptyProposal => (StatusCode::BAD_REQUEST, "empty_proposal"),
                M::InvalidStopping(_) => (StatusCode::BAD_REQUEST, "invalid_stopping"),
                M::WinnerNotInRound(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            },
            ServiceError::Io(_) | ServiceError::Replay(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.1,
            message: self.2,
        };
        (self.0, Json(body)).into_response()
    }
}

type Svc = State<Arc<RoundService>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Serialize, Deserialize)]
pub struct Created {
    pub round_id: String,
}

#[derive(Deserialize)]
struct TokenQuery {
    token: String,
}

// The service does file IO under a round lock; keep it off the async workers.
async fn blocking<T, F>(svc: Arc<RoundService>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&RoundService) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map(Json)
        .map_err(ApiError::from)
}

async fn create(State(svc): Svc, body: Result<Json<CreateRound>, JsonRejection>) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(req) = body?;
    let Json(round_id) = blocking(svc, move |s| s.create_round(req)).await?;
    Ok((StatusCode::CREATED, Json(Created { round_id })))
}

async fn join(State(svc): Svc, Path(id): Path<String>) -> ApiResult<Joined> {
    blocking(svc, move |s| s.join_round(&id)).await
}

async fn view(State(svc): Svc, Path(id): Path<String>, Query(q): Query<TokenQuery>) -> Response {
    blocking(svc, move |s| s.view(&id, &q.token)).await.into_response()
}

async fn actions(State(svc): Svc, Path(id): Path<String>, body: Result<Json<Submission>, JsonRejection>) -> Response {
    match body {
        Ok(Json(sub)) => blocking(svc, move |s| s.submit_action(&id, sub)).await.into_response(),
        Err(e) => ApiError::from(e).into_response(),
    }
}

async fn close(State(svc): Svc, Path(id): Path<String>) -> Response {
    blocking(svc, move |s| s.close_round(&id)).await.into_response()
}

async fn results(State(svc): Svc, Path(id): Path<String>) -> Response {
    blocking(svc, move |s| s.results(&id)).await.into_response()
}

pub fn router(service: Arc<RoundService>) -> Router {
    Router::new()
        .route("/rounds", post(create))
        .route("/rounds/{id}/join", post(join))
        .route("/rounds/{id}/view", get(view))
        .route("/rounds/{id}/actions", post(actions))
        .route("/rounds/{id}/close", post(close))
        .route("/rounds/{id}/results", get(results))
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(service: Arc<RoundService>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
