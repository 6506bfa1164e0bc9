//! HTTP game master.
//!
//! | method | path                     | body                  | reply |
//! |--------|--------------------------|-----------------------|-------|
//! | POST   | `/api/games`             | `{"difficulty"?}`     | session view |
//! | GET    | `/api/games`             |                       | summaries |
//! | GET    | `/api/games/{id}`        |                       | session view |
//! | POST   | `/api/games/{id}/probe`  | `{"s": "Q....."}`     | `{"y": 0|1}` |
//! | POST   | `/api/games/{id}/guess`  | `{"rule": "..."}`     | verdict |
//! | POST   | `/api/games/{id}/abandon`|                       | session view |
//! | GET    | `/api/health`            |                       | `{"status":"ok"}` |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use odeen_core::service::{Difficulty, GameMaster, RowOracle};
use odeen_core::{AtomTable, ServiceError};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::CliError;

pub struct ServeOptions {
    pub host: String,
    pub port: u16,
    pub static_dir: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    pub seed: u64,
}

struct ApiError(ServiceError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

type Master = Arc<GameMaster>;

#[derive(Debug, Default, Deserialize)]
struct CreateBody {
    #[serde(default)]
    difficulty: Difficulty,
}

#[derive(Debug, Deserialize)]
struct ProbeBody {
    s: String,
}

#[derive(Debug, Deserialize)]
struct GuessBody {
    rule: String,
}

/// Routes for the game-master API, optionally serving static files at `/`.
pub fn router(master: Master, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/api/games", post(create).get(list))
        .route("/api/games/{id}", get(show))
        .route("/api/games/{id}/probe", post(probe))
        .route("/api/games/{id}/guess", post(guess))
        .route("/api/games/{id}/abandon", post(abandon))
        .with_state(master);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn create(State(gm): State<Master>, body: Option<Json<CreateBody>>) -> Result<Response, ApiError> {
    let difficulty = body.map(|Json(b)| b.difficulty).unwrap_or_default();
    let view = gm.create_session(difficulty)?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list(State(gm): State<Master>) -> Response {
    Json(gm.list_sessions()).into_response()
}

async fn show(State(gm): State<Master>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(gm.get_session(&id)?).into_response())
}

async fn probe(State(gm): State<Master>, Path(id): Path<String>, Json(body): Json<ProbeBody>) -> Result<Response, ApiError> {
    let y = gm.probe(&id, &body.s)?;
    Ok(Json(json!({ "y": u8::from(y) })).into_response())
}

async fn guess(State(gm): State<Master>, Path(id): Path<String>, Json(body): Json<GuessBody>) -> Result<Response, ApiError> {
    Ok(Json(gm.guess(&id, &body.rule)?).into_response())
}

async fn abandon(State(gm): State<Master>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(gm.abandon(&id)?).into_response())
}

/// Builds the game master with the atom table as its row oracle.
pub fn game_master(log_dir: Option<&std::path::Path>, seed: u64) -> Result<GameMaster, CliError> {
    let oracle: Arc<dyn RowOracle> = Arc::new(AtomTable::build());
    Ok(match log_dir {
        Some(dir) => GameMaster::with_log(oracle, seed, dir)?,
        None => GameMaster::new(oracle, seed),
    })
}

pub fn serve(options: ServeOptions) -> Result<(), CliError> {
    let addr: SocketAddr = format!("{}:{}", options.host, options.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
    // Session ids only need to be unpredictable across restarts.
    let seed = options.seed
        ^ std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
    let master = Arc::new(game_master(options.log_dir.as_deref(), seed)?);
    let app = router(master, options.static_dir);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await
    })?;
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = terminate => {}
    }
}
