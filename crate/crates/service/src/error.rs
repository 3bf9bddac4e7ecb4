use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use flame_core::FlameError;
use serde::Serialize;

/// JSON error body: `{code, message, details}`.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub details: serde_json::Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                details: serde_json::Value::Null,
            },
        }
    }

    pub fn session_not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "SessionNotFound",
            format!("no session with id {id}"),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

pub fn status_for(e: &FlameError) -> StatusCode {
    match e {
        FlameError::Config { .. }
        | FlameError::Format { .. }
        | FlameError::DuplicateId(_)
        | FlameError::NonFinite(_)
        | FlameError::Dimension { .. }
        | FlameError::DegenerateVector(_)
        | FlameError::Json(_) => StatusCode::BAD_REQUEST,
        FlameError::UnknownShot(_) => StatusCode::NOT_FOUND,
        FlameError::Phase { .. }
        | FlameError::AnnotationIncomplete { .. }
        | FlameError::Locked(_) => StatusCode::CONFLICT,
        FlameError::EmptyPool
        | FlameError::InsufficientSamples { .. }
        | FlameError::EmptyBand(_)
        | FlameError::SingleClass { .. }
        | FlameError::Convergence { .. }
        | FlameError::Divergence { .. }
        | FlameError::NotSeparable(_)
        | FlameError::NoPositives => StatusCode::UNPROCESSABLE_ENTITY,
        FlameError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => StatusCode::BAD_REQUEST,
        FlameError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<FlameError> for ApiError {
    fn from(e: FlameError) -> Self {
        ApiError {
            status: status_for(&e),
            body: ErrorBody {
                code: e.code().into(),
                message: e.to_string(),
                details: e.details(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::error!("{}: {}", self.body.code, self.body.message);
        }
        (self.status, Json(self.body)).into_response()
    }
}
