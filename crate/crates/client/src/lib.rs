//! Async client for the annotation graph service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), tag_client::ClientError> {
//! let client = tag_client::Client::new("http://127.0.0.1:8080")?;
//! for entry in client.documents().await? {
//!     println!("{} ({})", entry.id, entry.format);
//! }
//! # Ok(())
//! # }
//! ```

use reqwest::{Method, RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use tag_core::api::{
    DocumentEntry, EditResponse, ExportResponse, RecolorRequest, ReplayResponse, TreeQuery, Upload, UploadResponse,
    ValidateResponse, ViewQuery,
};
use tag_core::edit::{DiffLog, EditOp};
use tag_core::graph::{Document, SourceFormat, Taxonomy};
use tag_core::layout::LayoutGeometry;
use tag_core::tree::SummaryTree;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid service url {0}")]
    BadUrl(String),
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error body.
    #[error("{status}: {code}: {message}")]
    Api { status: StatusCode, code: String, message: String },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    /// Machine-readable code for service errors.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
struct ErrorBody {
    error: ErrorDetail,
}

#[derive(Deserialize)]
struct ErrorDetail {
    code: String,
    message: String,
}

#[derive(Serialize)]
struct ExportQuery {
    format: Option<SourceFormat>,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let base = base.trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::BadUrl(base));
        }
        Ok(Client { base, http: reqwest::Client::new() })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    fn doc_path(id: &str, tail: &str) -> String {
        format!("/api/documents/{}{tail}", encode(id))
    }

    async fn check(resp: Response) -> Result<Response, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => ClientError::Api { status, code: b.error.code, message: b.error.message },
            Err(_) => ClientError::Api { status, code: "HTTP_ERROR".into(), message: text },
        })
    }

    async fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, ClientError> {
        let resp = Self::check(req.send().await?).await?;
        let bytes = resp.bytes().await?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    async fn text(&self, req: RequestBuilder) -> Result<String, ClientError> {
        Ok(Self::check(req.send().await?).await?.text().await?)
    }

    pub async fn documents(&self) -> Result<Vec<DocumentEntry>, ClientError> {
        self.json(self.request(Method::GET, "/api/documents")).await
    }

    pub async fn upload(&self, upload: &Upload) -> Result<UploadResponse, ClientError> {
        self.json(self.request(Method::POST, "/api/documents").json(upload)).await
    }

    pub async fn document(&self, id: &str) -> Result<Document, ClientError> {
        self.json(self.request(Method::GET, &Self::doc_path(id, ""))).await
    }

    pub async fn layout(&self, id: &str, view: &ViewQuery) -> Result<LayoutGeometry, ClientError> {
        self.json(self.request(Method::GET, &Self::doc_path(id, "/layout")).query(view)).await
    }

    pub async fn tree(&self, id: &str, select: &str) -> Result<SummaryTree, ClientError> {
        let q = TreeQuery { select: select.into() };
        self.json(self.request(Method::GET, &Self::doc_path(id, "/tree")).query(&q)).await
    }

    pub async fn tree_svg(&self, id: &str, select: &str) -> Result<String, ClientError> {
        let q = TreeQuery { select: select.into() };
        self.text(self.request(Method::GET, &Self::doc_path(id, "/tree/svg")).query(&q)).await
    }

    pub async fn apply(&self, id: &str, op: &EditOp) -> Result<EditResponse, ClientError> {
        self.json(self.request(Method::POST, &Self::doc_path(id, "/edits")).json(op)).await
    }

    pub async fn undo(&self, id: &str) -> Result<EditResponse, ClientError> {
        self.json(self.request(Method::POST, &Self::doc_path(id, "/undo"))).await
    }

    pub async fn diff(&self, id: &str) -> Result<DiffLog, ClientError> {
        let text = self.diff_text(id).await?;
        DiffLog::from_jsonl(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    /// The diff exactly as served, one JSON value per line.
    pub async fn diff_text(&self, id: &str) -> Result<String, ClientError> {
        self.text(self.request(Method::GET, &Self::doc_path(id, "/diff"))).await
    }

    pub async fn replay(&self, id: &str, diff_jsonl: &str) -> Result<ReplayResponse, ClientError> {
        let req = self
            .request(Method::POST, &Self::doc_path(id, "/replay"))
            .header("content-type", "application/x-ndjson")
            .body(diff_jsonl.to_string());
        self.json(req).await
    }

    pub async fn svg(&self, id: &str, view: &ViewQuery) -> Result<String, ClientError> {
        self.text(self.request(Method::GET, &Self::doc_path(id, "/svg")).query(view)).await
    }

    /// The current document serialized as `format` (its own format if `None`).
    pub async fn export(&self, id: &str, format: Option<SourceFormat>) -> Result<ExportResponse, ClientError> {
        self.json(self.request(Method::GET, &Self::doc_path(id, "/export")).query(&ExportQuery { format })).await
    }

    pub async fn validate(&self, id: &str) -> Result<ValidateResponse, ClientError> {
        self.json(self.request(Method::GET, &Self::doc_path(id, "/validate"))).await
    }

    pub async fn taxonomies(&self) -> Result<Vec<String>, ClientError> {
        self.json(self.request(Method::GET, "/api/taxonomies")).await
    }

    pub async fn taxonomy(&self, id: &str) -> Result<Taxonomy, ClientError> {
        self.json(self.request(Method::GET, &format!("/api/taxonomies/{}", encode(id)))).await
    }

    pub async fn recolor(&self, taxonomy: &str, req: &RecolorRequest) -> Result<Taxonomy, ClientError> {
        let path = format!("/api/taxonomies/{}/recolor", encode(taxonomy));
        self.json(self.request(Method::POST, &path).json(req)).await
    }
}

/// Percent-encodes a path segment.
fn encode(segment: &str) -> String {
    let mut out = String::with_capacity(segment.len());
    for b in segment.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
