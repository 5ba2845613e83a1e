use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use payroll_core::{PayrollError, TimeCardError};
use payroll_datastore::StoreError;
use payroll_taskqueue::QueueError;
use serde::{Deserialize, Serialize};

use crate::auth::AuthError;
use crate::routing::RouteError;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.to_string(), message: message.into() } }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let status = match e {
            AuthError::Unauthenticated => StatusCode::UNAUTHORIZED,
            AuthError::Forbidden => StatusCode::FORBIDDEN,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound { .. } => StatusCode::NOT_FOUND,
            StoreError::AlreadyExists(_)
            | StoreError::VersionConflict { .. }
            | StoreError::RunExists { .. }
            | StoreError::InvalidSupersede { .. }
            | StoreError::DuplicateTimeCard(..) => StatusCode::CONFLICT,
            StoreError::InvalidRange { .. } | StoreError::InvalidRecord(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            StoreError::CorruptStore { .. } | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<PayrollError> for ApiError {
    fn from(e: PayrollError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}

impl From<QueueError> for ApiError {
    fn from(e: QueueError) -> Self {
        let status = match e {
            QueueError::QueueFull { .. } => StatusCode::SERVICE_UNAVAILABLE,
            QueueError::NotFound(_) => StatusCode::NOT_FOUND,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<RouteError> for ApiError {
    fn from(e: RouteError) -> Self {
        let status = match e {
            RouteError::NoVersions => StatusCode::SERVICE_UNAVAILABLE,
            RouteError::InvalidWeights(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

/// Time card validation reports every problem; the code is the first one's.
impl From<Vec<TimeCardError>> for ApiError {
    fn from(errors: Vec<TimeCardError>) -> Self {
        let code = errors.first().map_or("InvalidTimeCard", |e| e.code());
        let status = match errors.first() {
            Some(TimeCardError::DuplicateTimeCard(..)) => StatusCode::CONFLICT,
            Some(TimeCardError::UnknownEmployee(_)) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let message = errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        ApiError::new(status, code, message)
    }
}
