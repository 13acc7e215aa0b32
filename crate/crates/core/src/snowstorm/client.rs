//! Blocking HTTP client for concept bundles, with retries and resumable bulk fetches.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::payload::{ConceptBundle, ConceptPayload, DescriptionPayload, Page, RelationshipPayload};
use crate::retry::RetryPolicy;
use crate::rf2::{ConceptRow, DescriptionRow, RelationshipRow, SctId};

/// URL templates; `{base}`, `{branch}` and `{id}` are substituted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Routes {
    pub concept: String,
    pub descriptions: String,
    pub relationships: String,
}

impl Default for Routes {
    fn default() -> Self {
        Routes {
            concept: "{base}/{branch}/concepts/{id}".into(),
            descriptions: "{base}/{branch}/concepts/{id}/descriptions".into(),
            relationships: "{base}/{branch}/concepts/{id}/relationships".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub base_url: String,
    pub branch: String,
    pub page_size: usize,
    /// Re-attempts after the first request; at most 10.
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_ms: u64,
    pub routes: Routes,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            base_url: "http://localhost:8080".into(),
            branch: "MAIN".into(),
            page_size: 100,
            max_retries: 3,
            backoff_base_ms: 50,
            timeout_ms: 30_000,
            routes: Routes::default(),
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<(), FetchError> {
        if self.page_size == 0 {
            return Err(FetchError::Config("page_size must be at least 1".into()));
        }
        if self.max_retries > 10 {
            return Err(FetchError::Config(format!("max_retries {} exceeds 10", self.max_retries)));
        }
        Ok(())
    }

    fn url(&self, template: &str, id: SctId) -> String {
        template
            .replace("{base}", self.base_url.trim_end_matches('/'))
            .replace("{branch}", &self.branch)
            .replace("{id}", &id.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum FetchError {
    #[error("unknown concept {0}")]
    UnknownConcept(SctId),
    #[error("HTTP {status} from {url}")]
    Status { status: u16, url: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed payload from {url}: {detail}")]
    Decode { url: String, detail: String },
    #[error("invalid server configuration: {0}")]
    Config(String),
}

impl FetchError {
    fn retryable(&self) -> bool {
        match self {
            FetchError::Status { status, .. } => *status == 429 || *status >= 500,
            FetchError::Transport(_) => true,
            _ => false,
        }
    }
}

/// A fetched bundle and the number of retries spent on it.
#[derive(Debug, Clone)]
pub struct Fetched {
    pub bundle: ConceptBundle,
    pub retries: u32,
}

pub struct SnowstormClient {
    config: ServerConfig,
    agent: ureq::Agent,
    policy: RetryPolicy,
}

impl SnowstormClient {
    pub fn new(config: ServerConfig) -> Result<Self, FetchError> {
        config.validate()?;
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_millis(config.timeout_ms)).build();
        let policy = RetryPolicy::with_retries(config.max_retries, Duration::from_millis(config.backoff_base_ms));
        Ok(SnowstormClient { config, agent, policy })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    fn get_once<T: DeserializeOwned>(&self, url: &str, query: &[(&str, String)], id: SctId) -> Result<T, FetchError> {
        let mut request = self.agent.get(url);
        for (k, v) in query {
            request = request.query(k, v);
        }
        let response = match request.call() {
            Ok(r) => r,
            Err(ureq::Error::Status(404, _)) => return Err(FetchError::UnknownConcept(id)),
            Err(ureq::Error::Status(status, _)) => return Err(FetchError::Status { status, url: url.to_string() }),
            Err(ureq::Error::Transport(t)) => return Err(FetchError::Transport(t.to_string())),
        };
        let body = response.into_string().map_err(|e| FetchError::Transport(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| FetchError::Decode { url: url.to_string(), detail: e.to_string() })
    }

    fn get<T: DeserializeOwned>(&self, url: &str, query: &[(&str, String)], id: SctId, retries: &mut u32) -> Result<T, FetchError> {
        let outcome = self.policy.run(
            |attempt| {
                if attempt > 0 {
                    log::warn!("retrying {url} (attempt {})", attempt + 1);
                }
                self.get_once(url, query, id)
            },
            FetchError::retryable,
        );
        *retries += outcome.retries;
        outcome.result
    }

    fn get_all<T: DeserializeOwned>(&self, url: &str, id: SctId, retries: &mut u32) -> Result<Vec<T>, FetchError> {
        let mut items = Vec::new();
        loop {
            let query = [("offset", items.len().to_string()), ("limit", self.config.page_size.to_string())];
            let page: Page<T> = self.get(url, &query, id, retries)?;
            let received = page.items.len();
            items.extend(page.items);
            if items.len() >= page.total {
                return Ok(items);
            }
            if received == 0 {
                return Err(FetchError::Decode {
                    url: url.to_string(),
                    detail: format!("empty page at offset {} of {}", items.len(), page.total),
                });
            }
        }
    }

    /// Fetches one concept with all pages of its descriptions and relationships.
    pub fn fetch_concept_bundle(&self, concept_id: SctId) -> Result<Fetched, FetchError> {
        let mut retries = 0;
        let url = self.config.url(&self.config.routes.concept, concept_id);
        let concept: ConceptPayload = self.get(&url, &[], concept_id, &mut retries)?;
        let concept = concept.into_row().map_err(|detail| FetchError::Decode { url: url.clone(), detail })?;
        if concept.id != concept_id {
            return Err(FetchError::Decode { url, detail: format!("asked for {concept_id}, received {}", concept.id) });
        }
        let url = self.config.url(&self.config.routes.descriptions, concept_id);
        let descriptions: Vec<DescriptionPayload> = self.get_all(&url, concept_id, &mut retries)?;
        let url = self.config.url(&self.config.routes.relationships, concept_id);
        let relationships: Vec<RelationshipPayload> = self.get_all(&url, concept_id, &mut retries)?;
        Ok(Fetched {
            bundle: ConceptBundle {
                concept,
                descriptions: descriptions.into_iter().map(DescriptionPayload::into_row).collect(),
                relationships: relationships.into_iter().map(RelationshipPayload::into_row).collect(),
            },
            retries,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailedFetch {
    pub id: SctId,
    pub last_error: String,
}

/// `fetched + failed.len() == requested`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FetchReport {
    pub requested: usize,
    pub fetched: usize,
    pub failed: Vec<FailedFetch>,
    pub retries: u32,
    /// Ids satisfied from the checkpoint rather than the server.
    pub resumed: usize,
}

/// Rows of a bulk fetch, one row per (kind, id), sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FetchedRows {
    pub concepts: Vec<ConceptRow>,
    pub descriptions: Vec<DescriptionRow>,
    pub relationships: Vec<RelationshipRow>,
}

impl FetchedRows {
    fn from_bundles(bundles: Vec<ConceptBundle>) -> Self {
        let mut rows = FetchedRows::default();
        for b in bundles {
            rows.concepts.push(b.concept);
            rows.descriptions.extend(b.descriptions);
            rows.relationships.extend(b.relationships);
        }
        // stable sorts keep the first occurrence (in id-list order) of a repeated id
        rows.concepts.sort_by_key(|r| r.id);
        rows.concepts.dedup_by_key(|r| r.id);
        rows.descriptions.sort_by_key(|r| r.id);
        rows.descriptions.dedup_by_key(|r| r.id);
        rows.relationships.sort_by_key(|r| r.id);
        rows.relationships.dedup_by_key(|r| r.id);
        rows
    }
}

/// Append-only record of completed bundles, one JSON object per line.
///
/// A torn final line (from an interrupted write) is ignored on reload.
pub struct Checkpoint {
    path: PathBuf,
    file: Mutex<File>,
}

impl Checkpoint {
    /// Opens or creates the checkpoint and returns the bundles already completed.
    pub fn open(path: &Path) -> io::Result<(Self, Vec<ConceptBundle>)> {
        let mut done = Vec::new();
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                match serde_json::from_str::<ConceptBundle>(&line?) {
                    Ok(b) => done.push(b),
                    Err(e) => {
                        log::warn!("{}: ignoring unreadable checkpoint line: {e}", path.display());
                        break;
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok((Checkpoint { path: path.to_path_buf(), file: Mutex::new(file) }, done))
    }

    fn record(&self, bundle: &ConceptBundle) -> io::Result<()> {
        let mut line = serde_json::to_string(bundle).map_err(io::Error::other)?;
        line.push('\n');
        let mut file = self.file.lock().expect("checkpoint lock");
        file.write_all(line.as_bytes())?;
        file.flush()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Fetches every id with at most `concurrency` requests in flight.
///
/// Repeated ids are fetched once. Failures are isolated per id. The result
/// does not depend on `concurrency`.
pub fn fetch_all(
    client: &SnowstormClient,
    ids: &[SctId],
    concurrency: usize,
    checkpoint: Option<(&Checkpoint, Vec<ConceptBundle>)>,
) -> (FetchedRows, FetchReport) {
    let mut seen = HashSet::new();
    let unique: Vec<SctId> = ids.iter().copied().filter(|id| seen.insert(*id)).collect();
    let mut report = FetchReport { requested: unique.len(), ..Default::default() };

    let (checkpoint, done) = match checkpoint {
        Some((c, done)) => (Some(c), done),
        None => (None, Vec::new()),
    };
    let mut done_by_id: std::collections::HashMap<SctId, ConceptBundle> = done.into_iter().map(|b| (b.concept.id, b)).collect();

    let mut slots: Vec<Option<Result<Fetched, FetchError>>> = Vec::with_capacity(unique.len());
    let mut todo = Vec::new();
    for (i, id) in unique.iter().enumerate() {
        match done_by_id.remove(id) {
            Some(bundle) => {
                report.resumed += 1;
                slots.push(Some(Ok(Fetched { bundle, retries: 0 })));
            }
            None => {
                slots.push(None);
                todo.push(i);
            }
        }
    }

    let next = AtomicUsize::new(0);
    let results = Mutex::new(slots);
    std::thread::scope(|scope| {
        for _ in 0..concurrency.max(1).min(todo.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&slot) = todo.get(k) else { break };
                let outcome = client.fetch_concept_bundle(unique[slot]);
                if let (Ok(fetched), Some(c)) = (&outcome, checkpoint) {
                    if let Err(e) = c.record(&fetched.bundle) {
                        log::warn!("{}: checkpoint write failed: {e}", c.path().display());
                    }
                }
                results.lock().expect("result lock")[slot] = Some(outcome);
            });
        }
    });

    let mut bundles = Vec::new();
    for (id, slot) in unique.iter().zip(results.into_inner().expect("result lock")) {
        match slot.expect("every id processed") {
            Ok(fetched) => {
                report.fetched += 1;
                report.retries += fetched.retries;
                bundles.push(fetched.bundle);
            }
            Err(e) => {
                log::warn!("fetch of {id} failed: {e}");
                report.failed.push(FailedFetch { id: *id, last_error: e.to_string() });
            }
        }
    }
    (FetchedRows::from_bundles(bundles), report)
}
