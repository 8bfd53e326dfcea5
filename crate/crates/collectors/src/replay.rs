//! Replays recorded HTTP exchanges from a local server, for tests and demos.
//!
//! A recording file is a JSON array of
//! `{"request": {"method", "path"}, "response": {"status", "headers", "body"}}`
//! where `path` includes the query string. Several recordings with the same
//! request are served in order; the last one repeats. The literal `{base}`
//! in headers and bodies is replaced by the server's base URL.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::body::{Body, Bytes};
use axum::extract::State;
use axum::http::{HeaderMap, Method, StatusCode, Uri};
use axum::response::Response;
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub status: u16,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    #[serde(default)]
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub request: RecordedRequest,
    pub response: RecordedResponse,
}

impl Recording {
    pub fn new(method: &str, path: &str, status: u16, body: Value) -> Self {
        Recording {
            request: RecordedRequest {
                method: method.to_ascii_uppercase(),
                path: path.to_string(),
            },
            response: RecordedResponse {
                status,
                headers: BTreeMap::new(),
                body,
            },
        }
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.response.headers.insert(name.to_ascii_lowercase(), value.to_string());
        self
    }

    /// Reads one recording file.
    pub fn load(path: &Path) -> io::Result<Vec<Recording>> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub headers: BTreeMap<String, String>,
    pub body: String,
    pub at: Instant,
}

#[derive(Default)]
struct Shared {
    base: String,
    queues: Mutex<HashMap<(String, String), (Vec<RecordedResponse>, usize)>>,
    log: Mutex<Vec<LoggedRequest>>,
}

pub struct ReplayServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    task: tokio::task::JoinHandle<()>,
}

impl ReplayServer {
    pub async fn start(recordings: Vec<Recording>) -> io::Result<Self> {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let mut queues: HashMap<(String, String), (Vec<RecordedResponse>, usize)> = HashMap::new();
        for r in recordings {
            queues
                .entry((r.request.method.to_ascii_uppercase(), r.request.path))
                .or_default()
                .0
                .push(r.response);
        }
        let shared = Arc::new(Shared {
            base: format!("http://{addr}"),
            queues: Mutex::new(queues),
            log: Mutex::new(Vec::new()),
        });
        let app = Router::new().fallback(replay).with_state(shared.clone());
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(ReplayServer { addr, shared, task })
    }

    pub fn base_url(&self) -> &str {
        &self.shared.base
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.shared.log.lock().expect("log poisoned").clone()
    }
}

impl Drop for ReplayServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn replay(State(shared): State<Arc<Shared>>, method: Method, uri: Uri, headers: HeaderMap, body: Bytes) -> Response {
    let path = uri.path_and_query().map(|p| p.as_str().to_string()).unwrap_or_else(|| "/".into());
    shared.log.lock().expect("log poisoned").push(LoggedRequest {
        method: method.to_string(),
        path: path.clone(),
        headers: headers
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_string(), v.to_str().ok()?.to_string())))
            .collect(),
        body: String::from_utf8_lossy(&body).into_owned(),
        at: Instant::now(),
    });

    let recorded = {
        let mut queues = shared.queues.lock().expect("queues poisoned");
        queues.get_mut(&(method.to_string(), path.clone())).map(|(list, next)| {
            let r = list[(*next).min(list.len() - 1)].clone();
            *next += 1;
            r
        })
    };
    let Some(rec) = recorded else {
        return Response::builder()
            .status(StatusCode::NOT_FOUND)
            .header("content-type", "application/json")
            .body(Body::from(format!(r#"{{"message":"no recording for {method} {path}"}}"#)))
            .expect("response");
    };
    let mut builder = Response::builder()
        .status(StatusCode::from_u16(rec.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR))
        .header("content-type", "application/json");
    for (k, v) in &rec.headers {
        builder = builder.header(k.as_str(), v.replace("{base}", &shared.base));
    }
    let body = serde_json::to_string(&rec.body).expect("json").replace("{base}", &shared.base);
    builder.body(Body::from(body)).expect("response")
}
