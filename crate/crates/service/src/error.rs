use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use appropriateness::taxonomy::Violation;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(String),
    #[error("campaign `{0}` already exists")]
    CampaignExists(String),
    #[error("annotator `{0}` is not on the roster")]
    UnknownAnnotator(String),
    #[error("missing or invalid bearer token")]
    Unauthorized,
    #[error("token does not belong to annotator `{0}`")]
    Forbidden(String),
    #[error("argument `{0}` was not issued to this annotator")]
    Stale(String),
    #[error("record rejected")]
    Rejected(Vec<Violation>),
    #[error("{0}")]
    BadRequest(String),
    #[error("campaign writer stopped")]
    WriterGone,
    #[error("corrupt journal {path}, line {line}: {message}")]
    Journal { path: String, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] appropriateness::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownCampaign(_) => StatusCode::NOT_FOUND,
            ServiceError::CampaignExists(_) | ServiceError::Stale(_) => StatusCode::CONFLICT,
            ServiceError::UnknownAnnotator(_) | ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) | ServiceError::Json(_) => StatusCode::BAD_REQUEST,
            ServiceError::Core(e) => match e {
                appropriateness::Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
                _ => StatusCode::BAD_REQUEST,
            },
            ServiceError::WriterGone | ServiceError::Journal { .. } | ServiceError::Io(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownCampaign(_) => "unknown_campaign",
            ServiceError::CampaignExists(_) => "campaign_exists",
            ServiceError::UnknownAnnotator(_) => "unknown_annotator",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::Stale(_) => "stale_item",
            ServiceError::Rejected(_) => "rejected",
            ServiceError::BadRequest(_) | ServiceError::Json(_) | ServiceError::Core(_) => "bad_request",
            ServiceError::WriterGone | ServiceError::Journal { .. } | ServiceError::Io(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        if let ServiceError::Rejected(violations) = &self {
            body["violations"] = violations
                .iter()
                .map(|v| {
                    json!({
                        "dimension": v.dimension(),
                        "message": v.to_string(),
                        "detail": v,
                    })
                })
                .collect();
        }
        (status, Json(body)).into_response()
    }
}
