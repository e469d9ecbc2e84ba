use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use easytime::model::{SchemaError, ValidationReport};
use easytime::runtime::{EventError, InitError};

use crate::RaceStatus;

/// Error response: a status code and a JSON body whose `error` field names
/// the failure.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": code, "message": message.into() }),
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong bearer token")
    }

    pub fn unknown_model(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownModel", format!("no model {id}"))
    }

    pub fn unknown_race(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownRace", format!("no race {id}"))
    }

    pub fn schema(path: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": "SchemaError", "path": path, "message": message.into() }),
        }
    }

    pub fn validation(report: &ValidationReport) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({ "error": "ValidationErrors", "report": report }),
        }
    }

    pub fn invalid_transition(from: RaceStatus, to: RaceStatus) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": "InvalidTransition",
                "message": format!("cannot go from {from:?} to {to:?}"),
                "from": from,
                "to": to,
            }),
        }
    }

    pub fn not_running(status: RaceStatus) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": "RaceNotRunning",
                "message": format!("race is {status:?}"),
                "status": status,
            }),
        }
    }

    pub fn event(error: &EventError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error.code(), error.to_string())
    }

    pub fn timestamp_required(agent: u32) -> Self {
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "TimestampRequired",
            format!("agent {agent} is automatic and must send ts_ms"),
        )
    }

    pub fn internal(error: std::io::Error) -> Self {
        tracing::error!(%error, "storage failure");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageError", error.to_string())
    }
}

impl From<SchemaError> for ApiError {
    fn from(e: SchemaError) -> Self {
        ApiError::schema(&e.path, e.message)
    }
}

impl From<InitError> for ApiError {
    fn from(e: InitError) -> Self {
        let code = match e {
            InitError::EmptyRoster => "EmptyRoster",
            InitError::DuplicateBib(_) => "DuplicateBib",
            InitError::InvalidBib => "InvalidBib",
        };
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::internal(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
