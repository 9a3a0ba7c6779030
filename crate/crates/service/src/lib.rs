//! HTTP API for the reviewer feedback loop: assess a pasted review, then
//! re-score individual comments after editing them.
//!
//! Routes: `POST /api/assess`, `POST /api/rescore`, `GET /api/health`.
//! Sessions live in memory only and expire after a configurable TTL.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use revutil_core::rubric::ScoreMode;
use revutil_core::segmenter::{
    extract_review_sections, DropReport, LengthBounds, Segmenter, SegmenterConfig,
};
use revutil_core::{Aspect, ReviewComment};
use revutil_scorer::{
    AspectScore, JobConfig, ParseStatus, ScoreError, ScoredComment, Scorer, ScoringPath,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::{AllowOrigin, CorsLayer};
use uuid::Uuid;

/// Scoring mode as sent by clients: `"s"` or `"s+r"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ModeParam {
    #[serde(rename = "s")]
    Score,
    #[default]
    #[serde(rename = "s+r")]
    ScoreRationale,
}

impl From<ModeParam> for ScoreMode {
    fn from(m: ModeParam) -> Self {
        match m {
            ModeParam::Score => ScoreMode::ScoreOnly,
            ModeParam::ScoreRationale => ScoreMode::ScoreWithRationale,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssessRequest {
    pub review_text: String,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub mode: ModeParam,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentView {
    pub comment_id: String,
    pub text: String,
    /// Always all four aspects; `null` where the output could not be parsed.
    pub aspects: BTreeMap<Aspect, Option<AspectScore>>,
    pub parse_status: ParseStatus,
}

impl CommentView {
    fn new(comment: &ReviewComment, scored: ScoredComment) -> Self {
        let aspects = Aspect::ALL
            .iter()
            .map(|a| (*a, scored.scores.get(a).cloned()))
            .collect();
        Self {
            comment_id: comment.id.clone(),
            text: comment.text.clone(),
            aspects,
            parse_status: scored.parse_status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessResponse {
    pub session_id: Uuid,
    pub comments: Vec<CommentView>,
    pub drop_report: DropReport,
    /// Comments whose output was not fully parsed.
    pub parse_failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescoreRequest {
    pub session_id: Uuid,
    pub comment_id: String,
    pub edited_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<Vec<CommentView>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.into(),
                partial: None,
            },
        }
    }
}

impl From<ScoreError> for ApiError {
    fn from(e: ScoreError) -> Self {
        let status = match e {
            ScoreError::Backend(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub path: ScoringPath,
    pub rng_seed: u64,
    pub max_concurrency: usize,
    pub session_ttl_secs: u64,
    pub segmenter: SegmenterConfig,
    /// Length filter; defaults to the reference corpus statistics.
    pub length_bounds: Option<LengthBounds>,
    /// Origin allowed by CORS; any origin when unset.
    pub allowed_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            path: ScoringPath::MultiAspect,
            rng_seed: 0,
            max_concurrency: 4,
            session_ttl_secs: 3600,
            segmenter: SegmenterConfig::default(),
            length_bounds: None,
            allowed_origin: None,
        }
    }
}

struct Session {
    mode: ScoreMode,
    comments: Vec<(ReviewComment, CommentView)>,
    last_used: Instant,
}

pub struct AppState {
    scorer: Scorer,
    segmenter: Segmenter,
    bounds: LengthBounds,
    config: ServiceConfig,
    sessions: Mutex<HashMap<Uuid, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(
        scorer: Scorer,
        config: ServiceConfig,
    ) -> Result<Arc<Self>, revutil_core::segmenter::SegmentError> {
        let segmenter = Segmenter::new(config.segmenter.clone())?;
        Ok(Arc::new(Self {
            scorer,
            segmenter,
            bounds: config
                .length_bounds
                .unwrap_or_else(LengthBounds::reference_corpus),
            config,
            sessions: Mutex::new(HashMap::new()),
        }))
    }

    fn ttl(&self) -> Duration {
        Duration::from_secs(self.config.session_ttl_secs)
    }

    /// Drops expired sessions; a session whose lock is held is in use and kept.
    async fn evict_expired(&self) {
        let ttl = self.ttl();
        self.sessions
            .lock()
            .await
            .retain(|_, s| match s.try_lock() {
                Ok(s) => s.last_used.elapsed() < ttl,
                Err(_) => true,
            });
    }

    pub async fn session_count(&self) -> usize {
        self.evict_expired().await;
        self.sessions.lock().await.len()
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

async fn assess(
    State(state): State<Arc<AppState>>,
    Json(req): Json<AssessRequest>,
) -> Result<Json<AssessResponse>, ApiError> {
    if req.review_text.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "review_text is empty",
        ));
    }
    state.evict_expired().await;
    let sections =
        extract_review_sections(&req.review_text, req.venue.as_deref(), &state.segmenter)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let outcome = state.segmenter.segment(&sections, &state.bounds);
    let drop_report = outcome.report;
    let comments = outcome.into_comments("review", req.venue.as_deref().unwrap_or(""), 0);
    let mode = ScoreMode::from(req.mode);

    let views: Vec<CommentView> = if comments.is_empty() {
        Vec::new()
    } else {
        let job = JobConfig {
            aspects: Aspect::ALL.to_vec(),
            path: state.config.path,
            score_mode: mode,
            rng_seed: state.config.rng_seed,
            max_concurrency: state.config.max_concurrency,
        };
        let batch = state.scorer.score_batch(&comments, &job).await?;
        let backend_down = batch.items.iter().all(|i| i.raw_outputs.is_empty());
        let views: Vec<_> = comments
            .iter()
            .zip(batch.items)
            .map(|(c, s)| CommentView::new(c, s))
            .collect();
        if backend_down {
            let error = match &views[0].parse_status {
                ParseStatus::Failed { reason } => reason.clone(),
                _ => "backend failure".into(),
            };
            return Err(ApiError {
                status: StatusCode::BAD_GATEWAY,
                body: ErrorBody {
                    error,
                    partial: Some(views),
                },
            });
        }
        views
    };

    let parse_failures = views.iter().filter(|v| !v.parse_status.is_ok()).count();
    let session_id = Uuid::new_v4();
    let session = Session {
        mode,
        comments: comments.into_iter().zip(views.iter().cloned()).collect(),
        last_used: Instant::now(),
    };
    state
        .sessions
        .lock()
        .await
        .insert(session_id, Arc::new(Mutex::new(session)));
    Ok(Json(AssessResponse {
        session_id,
        comments: views,
        drop_report,
        parse_failures,
    }))
}

async fn rescore(
    State(state): State<Arc<AppState>>,
    Json(req): Json<RescoreRequest>,
) -> Result<Json<CommentView>, ApiError> {
    if req.edited_text.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "edited_text is empty",
        ));
    }
    state.evict_expired().await;
    let session = state
        .sessions
        .lock()
        .await
        .get(&req.session_id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown session"))?;
    // Held for the whole rescore so edits within one session are serialized.
    let mut session = session.lock().await;
    session.last_used = Instant::now();
    let idx = session
        .comments
        .iter()
        .position(|(c, _)| c.id == req.comment_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown comment"))?;
    let mut comment = session.comments[idx].0.clone();
    comment.word_count = revutil_core::model::word_count(&req.edited_text);
    comment.text = req.edited_text;
    let scored = state
        .scorer
        .score_comment(
            &comment,
            &Aspect::ALL,
            state.config.path,
            session.mode,
            state.config.rng_seed,
        )
        .await?;
    let view = CommentView::new(&comment, scored);
    session.comments[idx] = (comment, view.clone());
    Ok(Json(view))
}

pub fn router(state: Arc<AppState>) -> Router {
    let origin = match &state.config.allowed_origin {
        Some(o) => match HeaderValue::from_str(o) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => AllowOrigin::any(),
        },
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/assess", post(assess))
        .route("/api/rescore", post(rescore))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}
