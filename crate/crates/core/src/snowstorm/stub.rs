//! A local stand-in for a Snowstorm server, used by tests and offline demos.
//!
//! The fixture is a directory of `<conceptId>.json` files, each a
//! [`StubDocument`]. The server answers the default routes of
//! [`Routes`](super::Routes) with paginated listings
//! (`?offset=&limit=` → `{items, total, limit, offset}`) and can be told to
//! fail requests for chosen ids.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::Serialize;
use tiny_http::{Header, Response, Server};

use super::payload::{ConceptBundle, Page, StubDocument};
use crate::rf2::SctId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Answer the next `times` requests for the id with `status`, then behave.
    Transient { status: u16, times: u32 },
    /// Always answer with `status`.
    Permanent { status: u16 },
}

struct State {
    docs: HashMap<SctId, StubDocument>,
    faults: Mutex<HashMap<SctId, Fault>>,
    hits: Mutex<HashMap<SctId, u32>>,
}

pub struct StubServer {
    url: String,
    server: Arc<Server>,
    state: Arc<State>,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

/// Writes one `<id>.json` document per bundle.
pub fn write_documents(dir: &Path, bundles: &[ConceptBundle]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for bundle in bundles {
        let json = serde_json::to_string_pretty(&StubDocument::from_bundle(bundle)).map_err(io::Error::other)?;
        fs::write(dir.join(format!("{}.json", bundle.concept.id)), json)?;
    }
    Ok(())
}

fn load_documents(dir: &Path) -> io::Result<HashMap<SctId, StubDocument>> {
    let mut docs = HashMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let doc: StubDocument = serde_json::from_slice(&fs::read(&path)?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
        docs.insert(doc.concept.concept_id, doc);
    }
    Ok(docs)
}

fn json_response<T: Serialize>(status: u16, body: &T) -> Response<io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("serializable response");
    Response::from_data(bytes)
        .with_status_code(status)
        .with_header(Header::from_bytes("Content-Type", "application/json").expect("static header"))
}

fn page<T: Clone + Serialize>(items: &[T], query: &HashMap<&str, &str>) -> Response<io::Cursor<Vec<u8>>> {
    let offset: usize = query.get("offset").and_then(|v| v.parse().ok()).unwrap_or(0);
    let limit: usize = query.get("limit").and_then(|v| v.parse().ok()).unwrap_or(50).max(1);
    let start = offset.min(items.len());
    let end = (start + limit).min(items.len());
    json_response(200, &Page { items: items[start..end].to_vec(), total: items.len(), limit, offset })
}

fn handle(state: &State, url: &str) -> Response<io::Cursor<Vec<u8>>> {
    let (path, query_text) = url.split_once('?').unwrap_or((url, ""));
    let query: HashMap<&str, &str> = query_text.split('&').filter_map(|kv| kv.split_once('=')).collect();
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    let Some(at) = segments.iter().rposition(|s| *s == "concepts") else {
        return json_response(404, &serde_json::json!({"error": "no such route"}));
    };
    let Some(Ok(id)) = segments.get(at + 1).map(|s| s.parse::<SctId>()) else {
        return json_response(400, &serde_json::json!({"error": "bad concept id"}));
    };
    *state.hits.lock().expect("hits lock").entry(id).or_default() += 1;

    {
        let mut faults = state.faults.lock().expect("faults lock");
        match faults.get_mut(&id) {
            Some(Fault::Permanent { status }) => return json_response(*status, &serde_json::json!({"error": "injected"})),
            Some(Fault::Transient { status, times }) if *times > 0 => {
                *times -= 1;
                return json_response(*status, &serde_json::json!({"error": "injected"}));
            }
            _ => {}
        }
    }

    let Some(doc) = state.docs.get(&id) else {
        return json_response(404, &serde_json::json!({"error": format!("concept {id} not found")}));
    };
    match &segments[at + 2..] {
        [] => json_response(200, &doc.concept),
        ["descriptions"] => page(&doc.descriptions, &query),
        ["relationships"] => page(&doc.relationships, &query),
        _ => json_response(404, &serde_json::json!({"error": "no such route"})),
    }
}

impl StubServer {
    /// Serves the documents in `dir` on an ephemeral localhost port.
    pub fn start(dir: &Path) -> io::Result<Self> {
        Self::start_with(load_documents(dir)?)
    }

    /// Serves the given bundles directly.
    pub fn from_bundles(bundles: &[ConceptBundle]) -> io::Result<Self> {
        Self::start_with(bundles.iter().map(|b| (b.concept.id, StubDocument::from_bundle(b))).collect())
    }

    fn start_with(docs: HashMap<SctId, StubDocument>) -> io::Result<Self> {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(|e| io::Error::other(e.to_string()))?);
        let port = server.server_addr().to_ip().map(|a| a.port()).ok_or_else(|| io::Error::other("no TCP address"))?;
        let state = Arc::new(State { docs, faults: Mutex::new(HashMap::new()), hits: Mutex::new(HashMap::new()) });
        let stop = Arc::new(AtomicBool::new(false));
        let workers = (0..8)
            .map(|_| {
                let (server, state, stop) = (server.clone(), state.clone(), stop.clone());
                std::thread::spawn(move || {
                    while !stop.load(Ordering::SeqCst) {
                        let Ok(request) = server.recv() else { break };
                        let response = handle(&state, request.url());
                        let _ = request.respond(response);
                    }
                })
            })
            .collect();
        Ok(StubServer { url: format!("http://127.0.0.1:{port}"), server, state, stop, workers })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn inject(&self, id: SctId, fault: Fault) {
        self.state.faults.lock().expect("faults lock").insert(id, fault);
    }

    /// Requests received for `id` so far, across all routes.
    pub fn hits(&self, id: SctId) -> u32 {
        self.state.hits.lock().expect("hits lock").get(&id).copied().unwrap_or(0)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for _ in &self.workers {
            self.server.unblock();
        }
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}
