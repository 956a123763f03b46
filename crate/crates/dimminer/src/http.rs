//! JSON-over-HTTP session protocol for one loaded corpus.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dimminer_core::corpus::SubjectivityLexicon;
use dimminer_core::dimension::{DimensionProfile, FeatureList};
use dimminer_core::selection::{PolarityMap, SelectionResult, SelectionScore, SelectionSource};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::session::{FeedbackSession, Preview, Selection, SessionOverrides, SessionStore, Workspace};

pub struct AppState {
    pub workspace: Workspace,
    pub sessions: SessionStore,
    /// Used by lexicon selection when the request names no words.
    pub lexicon: Option<SubjectivityLexicon>,
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(self.body())).into_response()
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/:id/dimensions", get(dimensions))
        .route("/sessions/:id/preview", get(preview))
        .route("/sessions/:id/selection", post(select))
        .route("/sessions/:id/result", get(result))
        .route("/sessions/:id/lexicon-selection", post(lexicon_selection))
        .route("/sessions/:id/adapt", post(adapt))
        .fallback(|| async { AppError::NotFound("no such endpoint".to_string()) })
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> AppResult<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::io(format!("binding {addr}"), e))?;
    log::info!("listening on http://{addr}");
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| AppError::io("serving", e))
}

/// Runs blocking session work off the async executor.
async fn blocking<T: Send + 'static>(
    state: &Shared,
    f: impl FnOnce(&AppState) -> AppResult<T> + Send + 'static,
) -> AppResult<T> {
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| AppError::Internal(format!("worker failed: {e}")))?
}

/// An empty body reads as `T::default()`.
fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> AppResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| AppError::Invalid(format!("request body: {e}")))
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> AppResult<T> {
    serde_json::from_slice(body).map_err(|e| AppError::Invalid(format!("request body: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub revision: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
}

async fn list_sessions(State(state): State<Shared>) -> AppResult<Json<Vec<SessionSummary>>> {
    blocking(&state, |s| {
        let mut out = Vec::new();
        for id in s.sessions.list()? {
            let session = s.sessions.load(&id)?;
            out.push(SessionSummary {
                session_id: session.session_id,
                revision: session.revision,
                selection: session.selection,
                created_at_ms: session.created_at_ms,
                updated_at_ms: session.updated_at_ms,
            });
        }
        Ok(out)
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSession {
    pub session_id: Option<String>,
    pub settings: SessionOverrides,
}

pub fn new_session_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> AppResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let session = blocking(&state, move |s| {
        let id = req.session_id.unwrap_or_else(new_session_id);
        let session = FeedbackSession::new(&s.workspace, id, &req.settings)?;
        s.sessions.create(&session)?;
        Ok(session)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(session)).into_response())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dimension {
    pub eig_index: usize,
    pub eigenvalue: f64,
    pub list_c1: FeatureList,
    pub list_c2: FeatureList,
    pub unambiguous_top: usize,
    pub unambiguous_bottom: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dimensions {
    pub session_id: String,
    pub m: usize,
    pub dimensions: Vec<Dimension>,
}

pub fn dimensions_of(ws: &Workspace, session: &FeedbackSession) -> Dimensions {
    Dimensions {
        session_id: session.session_id.clone(),
        m: ws.basis.m(),
        dimensions: session
            .profiles
            .iter()
            .map(|p| Dimension {
                eig_index: p.eig_index,
                eigenvalue: ws.basis.eigenvalues[p.eig_index - 1],
                list_c1: p.list_c1.clone(),
                list_c2: p.list_c2.clone(),
                unambiguous_top: p.top_ids.len(),
                unambiguous_bottom: p.bottom_ids.len(),
                warnings: p.warnings.clone(),
            })
            .collect(),
    }
}

async fn dimensions(State(state): State<Shared>, Path(id): Path<String>) -> AppResult<Json<Dimensions>> {
    blocking(&state, move |s| {
        let session = s.sessions.load(&id)?;
        Ok(dimensions_of(&s.workspace, &session))
    })
    .await
    .map(Json)
}

/// Parses `3` or `3,4`.
pub fn parse_indices(text: &str) -> AppResult<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| AppError::Invalid(format!("bad eigenvector index `{t}`")))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
pub struct PreviewQuery {
    pub eig: String,
}

async fn preview(
    State(state): State<Shared>,
    Path(id): Path<String>,
    query: Result<Query<PreviewQuery>, QueryRejection>,
) -> AppResult<Json<Preview>> {
    let Query(query) = query.map_err(|e| AppError::Invalid(format!("query: {e}")))?;
    let indices = parse_indices(&query.eig)?;
    blocking(&state, move |s| {
        let session = s.sessions.load(&id)?;
        s.workspace.preview(&indices, &session.settings)
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRequest {
    pub indices: Vec<usize>,
    #[serde(default)]
    pub polarity_map: Option<PolarityMap>,
    #[serde(default)]
    pub source: Option<SelectionSource>,
    /// Revision the caller last saw; a mismatch is a conflict.
    #[serde(default)]
    pub revision: Option<u64>,
}

async fn select(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> AppResult<Json<FeedbackSession>> {
    let req: SelectionRequest = parse_required(&body)?;
    blocking(&state, move |s| {
        let (session, _) = s.sessions.update(&id, req.revision, |session| {
            session
                .record_selection(
                    &s.workspace,
                    &req.indices,
                    req.polarity_map,
                    req.source.unwrap_or(SelectionSource::Human),
                    None,
                )
                .map(|_| ())
        })?;
        Ok(session)
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultView {
    pub session_id: String,
    pub revision: u64,
    pub selection: Selection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarity_map: Option<PolarityMap>,
    pub result: SelectionResult,
}

async fn result(State(state): State<Shared>, Path(id): Path<String>) -> AppResult<Json<ResultView>> {
    blocking(&state, move |s| {
        let session = s.sessions.load(&id)?;
        match (session.selection, session.result) {
            (Some(selection), Some(result)) => Ok(ResultView {
                session_id: session.session_id,
                revision: session.revision,
                selection,
                polarity_map: session.polarity_map,
                result,
            }),
            _ => Err(AppError::NotFound(format!("session `{id}` has no result yet"))),
        }
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredSession {
    pub score: SelectionScore,
    pub session: FeedbackSession,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconRequest {
    pub positive: Option<Vec<String>>,
    pub negative: Option<Vec<String>>,
    pub revision: Option<u64>,
}

async fn lexicon_selection(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> AppResult<Json<ScoredSession>> {
    let req: LexiconRequest = parse_body(&body)?;
    blocking(&state, move |s| {
        let lexicon = match (req.positive, req.negative) {
            (None, None) => s
                .lexicon
                .clone()
                .ok_or_else(|| AppError::Invalid("no lexicon loaded; send `positive` and `negative` word lists".to_string()))?,
            (p, n) => SubjectivityLexicon::new(p.unwrap_or_default(), n.unwrap_or_default())?,
        };
        let (session, score) = s
            .sessions
            .update(&id, req.revision, |session| session.lexicon_selection(&s.workspace, &lexicon))?;
        Ok(ScoredSession { score, session })
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptRequest {
    pub source: DimensionProfile,
    #[serde(default)]
    pub polarity_map: Option<PolarityMap>,
    #[serde(default)]
    pub revision: Option<u64>,
}

/// Either a wrapped request or a bare profile.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AdaptBody {
    Wrapped(AdaptRequest),
    Bare(DimensionProfile),
}

async fn adapt(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> AppResult<Json<ScoredSession>> {
    let req = match parse_required::<AdaptBody>(&body)? {
        AdaptBody::Wrapped(r) => r,
        AdaptBody::Bare(source) => AdaptRequest {
            source,
            polarity_map: None,
            revision: None,
        },
    };
    blocking(&state, move |s| {
        let (session, score) = s.sessions.update(&id, req.revision, |session| {
            session.adapt(&s.workspace, &req.source, req.polarity_map)
        })?;
        Ok(ScoredSession { score, session })
    })
    .await
    .map(Json)
}
