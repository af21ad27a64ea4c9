//! HTTP/JSON service over a folder of annotation documents.
//!
//! Every operation of the engine is reachable here: listing and loading
//! documents, windowed layouts, summary trees, edits with undo, diff export
//! and replay, SVG output and taxonomy recoloring. Source files are never
//! written; diffs are the only way edits leave the process.

mod error;
mod store;

use std::collections::BTreeMap;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use tag_core::api::{
    resolve_select, DocumentEntry, EditResponse, ExportResponse, RecolorRequest, ReplayResponse, TreeQuery, Upload,
    UploadResponse, ValidateResponse, ViewQuery,
};
use tag_core::edit::{DiffLog, EditOp, Session};
use tag_core::format::{parse_taxonomy, serialize, Serialized};
use tag_core::graph::{recolor_type, Document, Severity, SourceFormat, Taxonomy};
use tag_core::layout::{layout_window, LayoutGeometry};
use tag_core::render::{render_document, render_tree_svg, StyleSheet};
use tag_core::tree::{extract_tree, SummaryTree, TreeError};

pub use error::ApiError;
pub use store::{entry_ids, Slot, Snapshot, Store};

pub const DEFAULT_ROW_WIDTH: f64 = 800.0;

type ApiResult<T> = Result<T, ApiError>;
type AppState = Arc<Store>;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub data: PathBuf,
    pub bind: SocketAddr,
    pub row_width: f64,
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/api/documents", get(list_documents).post(upload))
        .route("/api/documents/{id}", get(get_document))
        .route("/api/documents/{id}/layout", get(get_layout))
        .route("/api/documents/{id}/tree", get(get_tree))
        .route("/api/documents/{id}/tree/svg", get(get_tree_svg))
        .route("/api/documents/{id}/edits", post(post_edit))
        .route("/api/documents/{id}/undo", post(post_undo))
        .route("/api/documents/{id}/diff", get(get_diff))
        .route("/api/documents/{id}/replay", post(post_replay))
        .route("/api/documents/{id}/svg", get(get_svg))
        .route("/api/documents/{id}/export", get(get_export))
        .route("/api/documents/{id}/validate", get(get_validate))
        .route("/api/taxonomies", get(list_taxonomies))
        .route("/api/taxonomies/{id}", get(get_taxonomy))
        .route("/api/taxonomies/{id}/recolor", post(post_recolor))
        .with_state(store)
}

/// Binds `addr` and serves `app` in the background.
pub async fn spawn(app: Router, addr: SocketAddr) -> io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok((local, handle))
}

/// Loads the data folder and serves until interrupted.
pub async fn serve(cfg: ServerConfig) -> io::Result<()> {
    let (store, problems) = Store::open(&cfg.data, cfg.row_width)?;
    for p in &problems {
        tracing::warn!("{p}");
    }
    tracing::info!("{} documents from {}", store.entries().len(), cfg.data.display());
    let listener = tokio::net::TcpListener::bind(cfg.bind).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn body<T>(json: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    json.map(|Json(v)| v).map_err(|e| ApiError::bad_request("MALFORMED_BODY", e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::bad_request("MALFORMED_QUERY", e.body_text()))
}

fn slot(store: &Store, id: &str) -> ApiResult<Arc<Slot>> {
    store.slot(id).ok_or_else(|| ApiError::not_found("document", id))
}

async fn list_documents(State(store): State<AppState>) -> Json<Vec<DocumentEntry>> {
    Json(store.entries())
}

/// Registers documents sent in the body. Re-uploading identical content
/// under an existing id is a no-op; different content is a conflict.
async fn upload(
    State(store): State<AppState>,
    up: Result<Json<Upload>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let up = body(up)?;
    let (format, docs, report) = up.parse()?;
    let taxonomy = match &up.taxonomy {
        Some(text) => {
            let tax = parse_taxonomy(Some(&up.id), text)?;
            match store.taxonomy(&up.id) {
                Some(old) if old != tax => {
                    return Err(ApiError::new(
                        StatusCode::CONFLICT,
                        "DUPLICATE_ID",
                        format!("taxonomy {} differs", up.id),
                    ))
                }
                _ => store.put_taxonomy(up.id.clone(), tax),
            }
            Some(up.id.clone())
        }
        None => None,
    };
    let mut entries = Vec::new();
    let mut created = false;
    for (id, doc) in entry_ids(&up.id, &docs).into_iter().zip(docs) {
        let entry = DocumentEntry { id: id.clone(), format, paths: Vec::new(), taxonomy: taxonomy.clone() };
        match store.insert(entry, doc.clone()) {
            Ok(slot) => {
                created = true;
                entries.push(slot.entry.clone());
            }
            Err(existing) if existing.base.content_hash() == doc.content_hash() => entries.push(existing.entry.clone()),
            Err(_) => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "DUPLICATE_ID",
                    format!("document {id} already exists"),
                ))
            }
        }
    }
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(UploadResponse { entries, report })))
}

async fn get_document(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Document>> {
    let slot = slot(&store, &id)?;
    Ok(Json(store.snapshot(&slot).await.document))
}

async fn get_layout(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ViewQuery>, QueryRejection>,
) -> ApiResult<Json<LayoutGeometry>> {
    let q = query(q)?;
    let slot = slot(&store, &id)?;
    let range = q.row_range()?;
    let snap = store.snapshot(&slot).await;
    let cfg = snap.view_config(&q.view_config(store.row_width));
    Ok(Json(layout_window(&snap.document, snap.taxonomy.as_ref(), &cfg, range)?))
}

async fn tree_for(store: &Store, id: &str, select: &str) -> ApiResult<(SummaryTree, Snapshot)> {
    let slot = slot(store, id)?;
    let snap = store.snapshot(&slot).await;
    let anchor = resolve_select(&snap.document, select).ok_or_else(|| TreeError::UnknownRef(select.to_string()))?;
    Ok((extract_tree(&snap.document, &anchor)?, snap))
}

async fn get_tree(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<TreeQuery>, QueryRejection>,
) -> ApiResult<Json<SummaryTree>> {
    let q = query(q)?;
    Ok(Json(tree_for(&store, &id, &q.select).await?.0))
}

async fn get_tree_svg(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<TreeQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let q = query(q)?;
    let (tree, snap) = tree_for(&store, &id, &q.select).await?;
    let cfg = ViewQuery::default().view_config(store.row_width);
    let svg = render_tree_svg(&tree, &StyleSheet::new(&cfg, snap.taxonomy.as_ref()));
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg))
}

async fn edit(store: &Store, id: &str, op: EditOp) -> ApiResult<Json<EditResponse>> {
    let slot = slot(store, id)?;
    let response = store
        .with_session(&slot, |s| {
            let applied = s.apply(op)?;
            let entry = s.log().last().cloned().expect("applied op is logged");
            Ok::<_, ApiError>(EditResponse { applied, entry, content_hash: s.document().content_hash() })
        })
        .await?;
    Ok(Json(response))
}

async fn post_edit(
    State(store): State<AppState>,
    Path(id): Path<String>,
    op: Result<Json<EditOp>, JsonRejection>,
) -> ApiResult<Json<EditResponse>> {
    edit(&store, &id, body(op)?).await
}

async fn post_undo(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<EditResponse>> {
    edit(&store, &id, EditOp::Undo).await
}

async fn get_diff(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let slot = slot(&store, &id)?;
    let text = match &*slot.session.read().await {
        Some(s) => s.export_diff().to_jsonl(),
        // an untouched document exports an empty diff
        None => Session::new(slot.base.clone(), None).export_diff().to_jsonl(),
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text))
}

/// Replaces the document's session with the result of applying the diff
/// to its base.
async fn post_replay(
    State(store): State<AppState>,
    Path(id): Path<String>,
    text: String,
) -> ApiResult<Json<ReplayResponse>> {
    let slot = slot(&store, &id)?;
    let diff = DiffLog::from_jsonl(&text)?;
    let tax = slot.entry.taxonomy.as_deref().and_then(|t| store.taxonomy(t));
    let session = Session::replay(slot.base.clone(), tax, &diff)?;
    let response = ReplayResponse { entries: session.log().len(), content_hash: session.document().content_hash() };
    *slot.session.write().await = Some(session);
    Ok(Json(response))
}

async fn get_svg(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ViewQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let q = query(q)?;
    let slot = slot(&store, &id)?;
    let snap = store.snapshot(&slot).await;
    let cfg = snap.view_config(&q.view_config(store.row_width));
    let svg = render_document(&snap.document, snap.taxonomy.as_ref(), &cfg)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<SourceFormat>,
}

async fn get_export(
    State(store): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<Json<ExportResponse>> {
    let q = query(q)?;
    let slot = slot(&store, &id)?;
    let format = q.format.unwrap_or(slot.entry.format);
    let doc = store.snapshot(&slot).await.document;
    let (out, report) = serialize(&doc, format)?;
    let files = match out {
        Serialized::Brat { txt, ann } => BTreeMap::from([("txt".to_string(), txt), ("ann".to_string(), ann)]),
        Serialized::Single(s) => {
            let ext = if format == SourceFormat::Conllx { "conll" } else { "xml" };
            BTreeMap::from([(ext.to_string(), s)])
        }
    };
    Ok(Json(ExportResponse { format, files, report }))
}

async fn get_validate(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ValidateResponse>> {
    let slot = slot(&store, &id)?;
    let issues = store.snapshot(&slot).await.document.validate();
    let valid = issues.iter().all(|i| i.severity != Severity::Error);
    Ok(Json(ValidateResponse { valid, issues }))
}

async fn list_taxonomies(State(store): State<AppState>) -> Json<Vec<String>> {
    Json(store.taxonomy_ids())
}

async fn get_taxonomy(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Taxonomy>> {
    store.taxonomy(&id).map(Json).ok_or_else(|| ApiError::not_found("taxonomy", &id))
}

/// Recolors the stored taxonomy. Open sessions bound to it receive the same
/// change as a logged edit so their views stay in step.
async fn post_recolor(
    State(store): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<RecolorRequest>, JsonRejection>,
) -> ApiResult<Json<Taxonomy>> {
    let req = body(req)?;
    let tax = store.taxonomy(&id).ok_or_else(|| ApiError::not_found("taxonomy", &id))?;
    let next = recolor_type(&tax, &req.type_name, req.color, req.cascade)?;
    store.put_taxonomy(id.clone(), next.clone());
    for slot in store.slots().into_iter().filter(|s| s.entry.taxonomy.as_deref() == Some(&id)) {
        if let Some(session) = slot.session.write().await.as_mut() {
            let op = EditOp::RecolorType { type_name: req.type_name.clone(), color: req.color, cascade: req.cascade };
            session.apply(op)?;
        }
    }
    Ok(Json(next))
}
