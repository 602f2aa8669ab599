//! HTTP service through which annotators label topics and then the tweets
//! of the topics they marked relevant.
//!
//! Every accepted label is appended to a [`pharmwatch::screening::AnnotationStore`]
//! log and synced before the response goes out, so restarting the service on
//! the same log reproduces its state.

mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use pharmwatch::screening::{AnnotationEvent, Appended, ClassLabel, TopicLabel};
use pharmwatch::Error;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

pub use state::{
    AnnotationView, AppState, Artifacts, CandidatePage, PassProgress, Progress, TopicCard, TweetPage, TweetView,
    WordWeight, DEFAULT_SAMPLES,
};

/// Page size when a request gives none.
pub const DEFAULT_LIMIT: usize = 20;
pub const MAX_LIMIT: usize = 500;

type Shared = Arc<AppState>;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Invalid {
        message: String,
        allowed: Option<Vec<&'static str>>,
    },
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::Invalid { message, allowed } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                match allowed {
                    Some(a) => json!({ "error": message, "allowed": a }),
                    None => json!({ "error": message }),
                },
            ),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": m })),
        };
        (status, Json(body)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidLabel { ref allowed, .. } => ApiError::Invalid {
                allowed: Some(allowed.clone()),
                message: e.to_string(),
            },
            Error::InvalidArgument(m) => ApiError::Invalid {
                message: m,
                allowed: None,
            },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r {
            JsonRejection::JsonDataError(e) => ApiError::Invalid {
                message: e.body_text(),
                allowed: None,
            },
            other => ApiError::BadRequest(other.body_text()),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct PageQuery {
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

impl PageQuery {
    fn bounds(&self) -> (usize, usize) {
        (
            self.offset.unwrap_or(0),
            self.limit.unwrap_or(DEFAULT_LIMIT).min(MAX_LIMIT),
        )
    }
}

#[derive(Debug, Deserialize)]
pub struct TopicAnnotationRequest {
    pub topic_id: usize,
    pub label: String,
    pub annotator_id: String,
    #[serde(default)]
    pub nonce: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct TweetAnnotationRequest {
    pub tweet_id: String,
    pub label: String,
    pub annotator_id: String,
    #[serde(default)]
    pub nonce: Option<String>,
}

async fn topics(State(state): State<Shared>) -> Json<Vec<TopicCard>> {
    Json(state.topics())
}

async fn topic_tweets(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<PageQuery>,
) -> Result<Json<TweetPage>, ApiError> {
    let (offset, limit) = q.bounds();
    id.parse::<usize>()
        .ok()
        .and_then(|z| state.topic_tweets(z, offset, limit))
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("no topic `{id}`")))
}

async fn rogue_candidates(State(state): State<Shared>, Query(q): Query<PageQuery>) -> Json<CandidatePage> {
    let (offset, limit) = q.bounds();
    Json(state.rogue_candidates(offset, limit))
}

async fn progress(State(state): State<Shared>) -> Json<Progress> {
    Json(state.progress())
}

/// Appends on a blocking thread, since the store syncs to disk.
async fn record(state: Shared, event: AnnotationEvent) -> Result<Response, ApiError> {
    let appended = tokio::task::spawn_blocking(move || state.store().append(event))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let (status, tag) = match &appended {
        Appended::New(_) => (StatusCode::CREATED, "recorded"),
        Appended::Duplicate(_) => (StatusCode::OK, "duplicate"),
    };
    Ok((status, Json(json!({ "status": tag, "event": appended.event() }))).into_response())
}

async fn annotate_topic(
    State(state): State<Shared>,
    body: Result<Json<TopicAnnotationRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let label: TopicLabel = req.label.parse()?;
    if req.topic_id >= state.topic_count() {
        return Err(ApiError::NotFound(format!("no topic `{}`", req.topic_id)));
    }
    let mut event = AnnotationEvent::topic(req.topic_id, label, &req.annotator_id, Utc::now());
    event.nonce = req.nonce;
    record(state, event).await
}

async fn annotate_tweet(
    State(state): State<Shared>,
    body: Result<Json<TweetAnnotationRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let label: ClassLabel = req.label.parse()?;
    if !state.has_tweet(&req.tweet_id) {
        return Err(ApiError::NotFound(format!("no tweet `{}`", req.tweet_id)));
    }
    let mut event = AnnotationEvent::tweet(&req.tweet_id, label, &req.annotator_id, Utc::now());
    event.nonce = req.nonce;
    record(state, event).await
}

const PLACEHOLDER: &str = "<!doctype html>
<title>pharmwatch annotation</title>
<h1>pharmwatch annotation service</h1>
<p>No UI assets are installed. The JSON API is available:</p>
<ul>
<li>GET /topics</li>
<li>GET /topics/{id}/tweets?offset&amp;limit</li>
<li>POST /annotations/topic</li>
<li>GET /tweets/rogue-candidates</li>
<li>POST /annotations/tweet</li>
<li>GET /progress</li>
</ul>
";

/// The API routes plus static UI assets from `assets` at `/` (or a
/// placeholder page when there are none).
pub fn router(state: Arc<AppState>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/topics", get(topics))
        .route("/topics/{id}/tweets", get(topic_tweets))
        .route("/tweets/rogue-candidates", get(rogue_candidates))
        .route("/annotations/topic", post(annotate_topic))
        .route("/annotations/tweet", post(annotate_tweet))
        .route("/progress", get(progress))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

/// Serves until interrupted with Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr, assets: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, assets))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
