//! Checks run over a loaded graph: ID consistency, duplicate triples and
//! multi-hop connectivity between configured concept pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AliasTable, GraphStore, GraphView, RedundancyNote, StoreError};
use crate::rf2::{SctId, Triple};

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("unknown concept {0}")]
    UnknownEndpoint(SctId),
    #[error("max_hops must be at least 1")]
    ZeroHops,
    #[error("{path}: {detail}")]
    Config { path: String, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct IdInconsistency {
    pub relationship_id: SctId,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnreachablePair {
    pub source_id: SctId,
    pub destination_id: SctId,
    pub max_hops: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub id_inconsistencies: Vec<IdInconsistency>,
    pub redundant_edges: Vec<RedundancyNote>,
    pub unreachable_pairs: Vec<UnreachablePair>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.id_inconsistencies.is_empty() && self.redundant_edges.is_empty() && self.unreachable_pairs.is_empty()
    }
}

/// Flags edges whose stored endpoints differ from the nodes they hang off.
///
/// In `strict` mode an edge whose type id is neither a node nor an alias is
/// flagged too.
pub fn check_id_consistency(store: &GraphStore, strict: bool, aliases: &AliasTable) -> Vec<IdInconsistency> {
    let view = store.view();
    let mut found = Vec::new();
    for edge in view.edges() {
        let id = edge.relationship_id;
        match view.attachment(id) {
            None => found.push(IdInconsistency { relationship_id: id, detail: "edge is not attached to any node pair".into() }),
            Some((source, destination)) if (source, destination) != (edge.source_id, edge.destination_id) => {
                found.push(IdInconsistency {
                    relationship_id: id,
                    detail: format!(
                        "stored endpoints {} -> {} but attached to {} -> {}",
                        edge.source_id, edge.destination_id, source, destination
                    ),
                })
            }
            Some(_) => {}
        }
        if strict && view.node(edge.type_id).is_none() && aliases.get(edge.type_id).is_none() {
            found.push(IdInconsistency {
                relationship_id: id,
                detail: format!("type {} has no node and no alias", edge.type_id),
            });
        }
    }
    found.sort();
    found
}

/// Reports edges sharing (source, type, destination); the largest relationship
/// id in each group is kept. With `eliminate`, the others are removed.
pub fn detect_redundant_edges(store: &GraphStore, eliminate: bool) -> Result<Vec<RedundancyNote>, StoreError> {
    let found = {
        let view = store.view();
        let mut groups: HashMap<Triple, Vec<SctId>> = HashMap::new();
        for edge in view.edges() {
            groups.entry(edge.triple()).or_default().push(edge.relationship_id);
        }
        let mut found: Vec<RedundancyNote> = groups
            .into_values()
            .filter(|ids| ids.len() > 1)
            .flat_map(|ids| {
                let kept = *ids.iter().max().expect("non-empty group");
                ids.into_iter().filter(move |id| *id != kept).map(move |removed| RedundancyNote { kept, removed })
            })
            .collect();
        found.sort_by_key(|n| (n.removed, n.kept));
        found
    };
    if eliminate && !found.is_empty() {
        let ids: Vec<SctId> = found.iter().map(|n| n.removed).collect();
        store.remove_edges(&ids)?;
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Directed,
    Undirected,
}

/// A connecting path: `concepts.len() == relationships.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HopPath {
    pub concepts: Vec<SctId>,
    pub relationships: Vec<SctId>,
}

impl HopPath {
    pub fn hops(&self) -> usize {
        self.relationships.len()
    }
}

/// Neighbors of `id` in ascending concept order; for parallel edges the
/// smallest relationship id is used.
fn neighbors(
    view: &GraphView<'_>,
    id: SctId,
    direction: Direction,
    type_filter: Option<&BTreeSet<SctId>>,
) -> BTreeMap<SctId, SctId> {
    let passes = |type_id: SctId| type_filter.is_none_or(|f| f.contains(&type_id));
    let mut out: BTreeMap<SctId, SctId> = BTreeMap::new();
    let mut offer = |neighbor: SctId, rel: SctId| {
        out.entry(neighbor).and_modify(|r| *r = (*r).min(rel)).or_insert(rel);
    };
    for edge in view.outgoing(id).filter(|e| passes(e.type_id)) {
        if let Some((_, destination)) = view.attachment(edge.relationship_id) {
            offer(destination, edge.relationship_id);
        }
    }
    if direction == Direction::Undirected {
        for edge in view.incoming(id).filter(|e| passes(e.type_id)) {
            if let Some((source, _)) = view.attachment(edge.relationship_id) {
                offer(source, edge.relationship_id);
            }
        }
    }
    out
}

/// Breadth-first search for a shortest path of at most `max_hops` edges.
///
/// Neighbors are expanded in ascending concept id, so among shortest paths the
/// one with the lexicographically smallest concept sequence is returned.
pub fn verify_multi_hop(
    store: &GraphStore,
    source: SctId,
    destination: SctId,
    max_hops: usize,
    type_filter: Option<&BTreeSet<SctId>>,
    direction: Direction,
) -> Result<Option<HopPath>, ValidateError> {
    if max_hops == 0 {
        return Err(ValidateError::ZeroHops);
    }
    let view = store.view();
    for endpoint in [source, destination] {
        if view.node(endpoint).is_none() {
            return Err(ValidateError::UnknownEndpoint(endpoint));
        }
    }
    if source == destination {
        return Ok(Some(HopPath { concepts: vec![source], relationships: vec![] }));
    }
    let mut parent: HashMap<SctId, (SctId, SctId)> = HashMap::new();
    let mut depth: HashMap<SctId, usize> = HashMap::from([(source, 0)]);
    let mut queue = VecDeque::from([source]);
    while let Some(current) = queue.pop_front() {
        let d = depth[&current];
        if d == max_hops {
            continue;
        }
        for (next, rel) in neighbors(&view, current, direction, type_filter) {
            if depth.contains_key(&next) {
                continue;
            }
            depth.insert(next, d + 1);
            parent.insert(next, (current, rel));
            if next == destination {
                let mut concepts = vec![destination];
                let mut relationships = Vec::new();
                let mut at = destination;
                while let Some(&(prev, rel)) = parent.get(&at) {
                    concepts.push(prev);
                    relationships.push(rel);
                    at = prev;
                }
                concepts.reverse();
                relationships.reverse();
                return Ok(Some(HopPath { concepts, relationships }));
            }
            queue.push_back(next);
        }
    }
    Ok(None)
}

/// A pair expected to be connected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityPair {
    pub source: SctId,
    pub destination: SctId,
    #[serde(default = "default_max_hops")]
    pub max_hops: usize,
    /// Restrict traversal to these relationship types.
    #[serde(default)]
    pub types: Option<BTreeSet<SctId>>,
}

fn default_max_hops() -> usize {
    4
}

/// `[[pairs]]` entries from a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairList {
    #[serde(default)]
    pub pairs: Vec<ConnectivityPair>,
}

impl PairList {
    pub fn from_file(path: &Path) -> Result<Self, ValidateError> {
        let bad = |detail: String| ValidateError::Config { path: path.display().to_string(), detail };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        toml::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateOptions {
    pub strict: bool,
    pub eliminate: bool,
    pub direction: Direction,
}

/// Runs all three checks. Pairs are checked after any elimination.
pub fn validate(
    store: &GraphStore,
    aliases: &AliasTable,
    pairs: &PairList,
    options: &ValidateOptions,
) -> Result<ValidationReport, ValidateError> {
    let id_inconsistencies = check_id_consistency(store, options.strict, aliases);
    let redundant_edges = detect_redundant_edges(store, options.eliminate)?;
    let mut unreachable_pairs = Vec::new();
    for pair in &pairs.pairs {
        let found =
            verify_multi_hop(store, pair.source, pair.destination, pair.max_hops, pair.types.as_ref(), options.direction)?;
        if found.is_none() {
            unreachable_pairs.push(UnreachablePair {
                source_id: pair.source,
                destination_id: pair.destination,
                max_hops: pair.max_hops,
            });
        }
    }
    log::info!(
        "validation: {} id inconsistencies, {} redundant edges, {} unreachable pairs",
        id_inconsistencies.len(),
        redundant_edges.len(),
        unreachable_pairs.len()
    );
    Ok(ValidationReport { id_inconsistencies, redundant_edges, unreachable_pairs })
}
