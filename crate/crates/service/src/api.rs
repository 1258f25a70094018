use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use appropriateness::AnnotationRecord;

use crate::campaign::{CampaignSpec, Next, Progress};
use crate::export::{export, ExportKind};
use crate::store::{CampaignHandle, Registry};
use crate::{Result, ServiceError};

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    /// Required for campaign creation when set.
    pub admin_token: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/campaigns", post(create_campaign))
        .route("/campaigns/{id}/next", get(next_item))
        .route("/campaigns/{id}/submit", post(submit))
        .route("/campaigns/{id}/progress", get(progress))
        .route("/campaigns/{id}/export/{kind}", get(export_file))
        .with_state(state)
}

fn bearer(headers: &HeaderMap) -> Result<&str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or(ServiceError::Unauthorized)
}

impl AppState {
    fn is_admin(&self, token: &str) -> bool {
        self.admin_token.as_deref() == Some(token)
    }

    /// The annotator a bearer token belongs to.
    fn annotator(&self, handle: &CampaignHandle, headers: &HeaderMap) -> Result<String> {
        let token = bearer(headers)?;
        handle
            .read()
            .annotator_for_token(token)
            .map(str::to_string)
            .ok_or(ServiceError::Unauthorized)
    }

    /// Read access for any roster member or the admin.
    fn reader(&self, handle: &CampaignHandle, headers: &HeaderMap) -> Result<()> {
        let token = bearer(headers)?;
        if self.is_admin(token) || handle.read().annotator_for_token(token).is_some() {
            Ok(())
        } else {
            Err(ServiceError::Unauthorized)
        }
    }
}

async fn health() -> &'static str {
    "ok"
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub campaign_id: String,
    pub batches: usize,
    pub batch_sizes: Vec<usize>,
    pub pacing_window_secs: i64,
}

async fn create_campaign(State(app): State<AppState>, headers: HeaderMap, body: Bytes) -> Result<Response> {
    if app.admin_token.is_some() && !app.is_admin(bearer(&headers)?) {
        return Err(ServiceError::Unauthorized);
    }
    let spec: CampaignSpec = serde_json::from_slice(&body)?;
    let registry = Arc::clone(&app.registry);
    let handle = tokio::task::spawn_blocking(move || registry.create(spec))
        .await
        .map_err(|_| ServiceError::WriterGone)??;
    let campaign = handle.read();
    let meta = campaign.meta();
    let created = Created {
        campaign_id: meta.campaign_id.clone(),
        batches: meta.plan.len(),
        batch_sizes: meta.plan.sizes(),
        pacing_window_secs: meta.pacing_window_secs,
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

async fn next_item(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<NextQuery>,
    headers: HeaderMap,
) -> Result<Json<Next>> {
    let handle = app.registry.get(&id)?;
    let who = app.annotator(&handle, &headers)?;
    if let Some(asked) = query.annotator {
        if !handle.read().on_roster(&asked) {
            return Err(ServiceError::UnknownAnnotator(asked));
        }
        if asked != who {
            return Err(ServiceError::Forbidden(asked));
        }
    }
    let now = app.registry.clock().now();
    let next = handle.read().next(&who, now)?;
    Ok(Json(next))
}

async fn submit(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response> {
    let handle = app.registry.get(&id)?;
    let who = app.annotator(&handle, &headers)?;
    let record: AnnotationRecord = serde_json::from_slice(&body)?;
    let ack = handle.submit(&who, record).await?;
    Ok(Json(ack).into_response())
}

async fn progress(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Json<Progress>> {
    let handle = app.registry.get(&id)?;
    app.reader(&handle, &headers)?;
    let now = app.registry.clock().now();
    let progress = handle.read().progress(now);
    Ok(Json(progress))
}

async fn export_file(
    State(app): State<AppState>,
    Path((id, kind)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Response> {
    let handle = app.registry.get(&id)?;
    app.reader(&handle, &headers)?;
    let kind: ExportKind = kind.parse()?;
    let body = export(&handle.read(), kind)?;
    let disposition = format!("attachment; filename=\"{}-{}\"", id, kind.file_name());
    Ok((
        [
            (header::CONTENT_TYPE, kind.content_type().to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        body,
    )
        .into_response())
}
