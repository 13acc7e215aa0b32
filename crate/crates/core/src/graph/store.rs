//! The in-process labeled property graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io;
use std::ops::Range;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock, RwLockReadGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fault::{FaultInjector, FaultPoint};
use super::journal::{Journal, JournalRecord};
use super::model::{EdgeRecord, NodeRecord, TypeNames};
use crate::retry::RetryPolicy;
use crate::rf2::{RelationshipRow, SctId, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoreOptions {
    /// Drop edges whose (source, type, destination) is already stored,
    /// keeping the larger relationship id. Turning this off lets duplicates
    /// in, for the validator to find.
    pub dedup_edges: bool,
    pub retry: RetryPolicy,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { dedup_edges: true, retry: RetryPolicy::default() }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("relationship {relationship_id} is a self-loop on concept {concept_id}")]
    SelfLoop { relationship_id: SctId, concept_id: SctId },
    #[error("relationship {0} is already stored with different content")]
    EdgeConflict(SctId),
    #[error("relationship {0} is inactive")]
    InactiveRelationship(SctId),
    #[error("batch {batch_id} rejected: {detail}")]
    InvalidBatch { batch_id: u64, detail: String },
    #[error("batch {batch_id} failed after {attempts} attempts: {reason}")]
    BatchFailed { batch_id: u64, attempts: u32, reason: String },
    #[error("journal: {0}")]
    Journal(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Upsert {
    Created,
    Updated,
}

/// A duplicate triple that was not stored (or was displaced).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RedundancyNote {
    pub kept: SctId,
    pub removed: SctId,
}

/// Elements committed together: all become visible, or none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub batch_id: u64,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BatchOutcome {
    pub retries: u32,
    pub nodes_written: usize,
    pub edges_written: usize,
}

enum Undo {
    RemoveNode(SctId),
    RestoreNode(NodeRecord),
    RemoveEdge(SctId),
    RestoreEdge(EdgeRecord),
    RemoveNote(RedundancyNote),
}

#[derive(Default)]
struct Graph {
    nodes: HashMap<SctId, NodeRecord>,
    edges: HashMap<SctId, EdgeRecord>,
    /// The (source, type, destination) each edge is attached under.
    attached: HashMap<SctId, Triple>,
    outgoing: HashMap<SctId, BTreeSet<SctId>>,
    incoming: HashMap<SctId, BTreeSet<SctId>>,
    by_triple: HashMap<Triple, BTreeSet<SctId>>,
    notes: BTreeSet<RedundancyNote>,
    journal: Option<Journal>,
}

enum AttemptError {
    Fault(String),
    Invalid(StoreError),
}

impl Graph {
    fn insert_edge(&mut self, edge: EdgeRecord) {
        let id = edge.relationship_id;
        let key = edge.triple();
        self.outgoing.entry(key.source_id).or_default().insert(id);
        self.incoming.entry(key.destination_id).or_default().insert(id);
        self.by_triple.entry(key).or_default().insert(id);
        self.attached.insert(id, key);
        self.edges.insert(id, edge);
    }

    fn remove_edge(&mut self, id: SctId) -> Option<EdgeRecord> {
        let edge = self.edges.remove(&id)?;
        let key = self.attached.remove(&id).expect("every edge has an attachment");
        for (map, node) in [(&mut self.outgoing, key.source_id), (&mut self.incoming, key.destination_id)] {
            if let Some(set) = map.get_mut(&node) {
                set.remove(&id);
                if set.is_empty() {
                    map.remove(&node);
                }
            }
        }
        if let Some(set) = self.by_triple.get_mut(&key) {
            set.remove(&id);
            if set.is_empty() {
                self.by_triple.remove(&key);
            }
        }
        Some(edge)
    }

    fn apply_node(&mut self, node: &NodeRecord, undo: &mut Vec<Undo>) -> Upsert {
        match self.nodes.get_mut(&node.concept_id) {
            Some(existing) => {
                undo.push(Undo::RestoreNode(existing.clone()));
                existing.merge(node);
                Upsert::Updated
            }
            None => {
                self.nodes.insert(node.concept_id, node.clone());
                undo.push(Undo::RemoveNode(node.concept_id));
                Upsert::Created
            }
        }
    }

    fn ensure_node(&mut self, id: SctId, undo: &mut Vec<Undo>) {
        if let std::collections::hash_map::Entry::Vacant(e) = self.nodes.entry(id) {
            e.insert(NodeRecord::placeholder(id));
            undo.push(Undo::RemoveNode(id));
        }
    }

    fn note(&mut self, note: RedundancyNote, undo: &mut Vec<Undo>) {
        if self.notes.insert(note) {
            undo.push(Undo::RemoveNote(note));
        }
    }

    /// Stores `edge`; returns the id of the edge that represents its triple afterwards.
    fn apply_edge(&mut self, edge: &EdgeRecord, dedup: bool, undo: &mut Vec<Undo>) -> Result<SctId, StoreError> {
        if edge.source_id == edge.destination_id {
            return Err(StoreError::SelfLoop { relationship_id: edge.relationship_id, concept_id: edge.source_id });
        }
        if let Some(existing) = self.edges.get(&edge.relationship_id) {
            return if existing == edge { Ok(edge.relationship_id) } else { Err(StoreError::EdgeConflict(edge.relationship_id)) };
        }
        self.ensure_node(edge.source_id, undo);
        self.ensure_node(edge.destination_id, undo);

        if dedup {
            if let Some(&current) = self.by_triple.get(&edge.triple()).and_then(|ids| ids.last()) {
                if edge.relationship_id < current {
                    self.note(RedundancyNote { kept: current, removed: edge.relationship_id }, undo);
                    return Ok(current);
                }
                let displaced = self.remove_edge(current).expect("indexed edge exists");
                undo.push(Undo::RestoreEdge(displaced));
                self.note(RedundancyNote { kept: edge.relationship_id, removed: current }, undo);
            }
        }
        self.insert_edge(edge.clone());
        undo.push(Undo::RemoveEdge(edge.relationship_id));
        Ok(edge.relationship_id)
    }

    fn rollback(&mut self, undo: Vec<Undo>) {
        for step in undo.into_iter().rev() {
            match step {
                Undo::RemoveNode(id) => {
                    self.nodes.remove(&id);
                }
                Undo::RestoreNode(node) => {
                    self.nodes.insert(node.concept_id, node);
                }
                Undo::RemoveEdge(id) => {
                    self.remove_edge(id);
                }
                Undo::RestoreEdge(edge) => self.insert_edge(edge),
                Undo::RemoveNote(note) => {
                    self.notes.remove(&note);
                }
            }
        }
    }

    /// One all-or-nothing attempt at a batch.
    fn attempt(
        &mut self,
        batch: &Batch,
        attempt: u32,
        dedup: bool,
        faults: Option<&dyn FaultInjector>,
    ) -> Result<(), AttemptError> {
        let mut undo = Vec::new();
        let result = self.attempt_inner(batch, attempt, dedup, faults, &mut undo);
        if result.is_err() {
            self.rollback(undo);
        }
        result
    }

    fn attempt_inner(
        &mut self,
        batch: &Batch,
        attempt: u32,
        dedup: bool,
        faults: Option<&dyn FaultInjector>,
        undo: &mut Vec<Undo>,
    ) -> Result<(), AttemptError> {
        let check = |point| faults.map_or(Ok(()), |f| f.check(point)).map_err(|e| AttemptError::Fault(e.0));
        let batch_id = batch.batch_id;
        for (index, node) in batch.nodes.iter().enumerate() {
            check(FaultPoint::Element { batch_id, attempt, index })?;
            self.apply_node(node, undo);
        }
        for (offset, edge) in batch.edges.iter().enumerate() {
            check(FaultPoint::Element { batch_id, attempt, index: batch.nodes.len() + offset })?;
            self.apply_edge(edge, dedup, undo).map_err(AttemptError::Invalid)?;
        }
        check(FaultPoint::Commit { batch_id, attempt })?;
        if let Some(journal) = self.journal.as_mut() {
            let record = JournalRecord::Batch { batch_id, nodes: batch.nodes.clone(), edges: batch.edges.clone() };
            journal.append(&record).map_err(|e| AttemptError::Fault(format!("journal write: {e}")))?;
        }
        Ok(())
    }
}

/// The store. All methods take `&self`; batches are applied under an
/// exclusive lock, so readers never observe a partial batch.
pub struct GraphStore {
    graph: RwLock<Graph>,
    options: StoreOptions,
    faults: RwLock<Option<Arc<dyn FaultInjector>>>,
    next_batch: AtomicU64,
}

impl Default for GraphStore {
    fn default() -> Self {
        GraphStore::new(StoreOptions::default())
    }
}

impl GraphStore {
    pub fn new(options: StoreOptions) -> Self {
        GraphStore {
            graph: RwLock::new(Graph::default()),
            options,
            faults: RwLock::new(None),
            next_batch: AtomicU64::new(1),
        }
    }

    /// Opens a journaled store, replaying whatever the journal already holds.
    pub fn with_journal(path: &Path, options: StoreOptions) -> Result<Self, StoreError> {
        let (journal, records) = Journal::open(path)?;
        let store = GraphStore::new(options);
        let mut max_batch = 0;
        {
            let mut g = store.graph.write().expect("graph lock");
            for record in records {
                match record {
                    JournalRecord::Batch { batch_id, nodes, edges } => {
                        max_batch = max_batch.max(batch_id);
                        let batch = Batch { batch_id, nodes, edges };
                        if let Err(AttemptError::Invalid(e)) = g.attempt(&batch, 0, store.options.dedup_edges, None) {
                            return Err(StoreError::InvalidBatch { batch_id, detail: format!("journal replay: {e}") });
                        }
                    }
                    JournalRecord::RemoveEdges { ids } => {
                        for id in ids {
                            g.remove_edge(id);
                        }
                    }
                }
            }
            g.journal = Some(journal);
        }
        store.next_batch.store(max_batch + 1, Ordering::SeqCst);
        Ok(store)
    }

    pub fn options(&self) -> &StoreOptions {
        &self.options
    }

    pub fn set_fault_injector(&self, faults: Option<Arc<dyn FaultInjector>>) {
        *self.faults.write().expect("fault lock") = faults;
    }

    /// Reserves `n` consecutive batch ids.
    pub fn allocate_batch_ids(&self, n: u64) -> Range<u64> {
        let start = self.next_batch.fetch_add(n, Ordering::SeqCst);
        start..start + n
    }

    /// Applies a batch atomically, retrying injected faults per the retry policy.
    ///
    /// On failure nothing of the batch is visible.
    pub fn submit_batch(&self, batch: &Batch) -> Result<BatchOutcome, StoreError> {
        let faults = self.faults.read().expect("fault lock").clone();
        let outcome = self.options.retry.run(
            |attempt| {
                let mut g = self.graph.write().expect("graph lock");
                g.attempt(batch, attempt, self.options.dedup_edges, faults.as_deref())
            },
            |e| matches!(e, AttemptError::Fault(_)),
        );
        match outcome.result {
            Ok(()) => {
                if outcome.retries > 0 {
                    log::debug!("batch {} committed after {} retries", batch.batch_id, outcome.retries);
                }
                Ok(BatchOutcome { retries: outcome.retries, nodes_written: batch.nodes.len(), edges_written: batch.edges.len() })
            }
            Err(AttemptError::Fault(reason)) => {
                log::warn!("batch {} rolled back: {reason}", batch.batch_id);
                Err(StoreError::BatchFailed { batch_id: batch.batch_id, attempts: outcome.retries + 1, reason })
            }
            Err(AttemptError::Invalid(e)) => Err(StoreError::InvalidBatch { batch_id: batch.batch_id, detail: e.to_string() }),
        }
    }

    fn direct(&self, nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord>) -> Result<(), StoreError> {
        let batch = Batch { batch_id: self.allocate_batch_ids(1).start, nodes, edges };
        let mut g = self.graph.write().expect("graph lock");
        g.attempt(&batch, 0, self.options.dedup_edges, None).map_err(|e| match e {
            AttemptError::Invalid(e) => e,
            AttemptError::Fault(reason) => StoreError::Journal(io::Error::other(reason)),
        })
    }

    /// Inserts or merges one node.
    pub fn upsert_node(&self, node: NodeRecord) -> Result<Upsert, StoreError> {
        let existed = self.graph.read().expect("graph lock").nodes.contains_key(&node.concept_id);
        self.direct(vec![node], Vec::new())?;
        Ok(if existed { Upsert::Updated } else { Upsert::Created })
    }

    /// Returns the node for `id`, creating a placeholder if there is none.
    pub fn ensure_placeholder(&self, id: SctId) -> Result<NodeRecord, StoreError> {
        if let Some(node) = self.node(id) {
            return Ok(node);
        }
        self.direct(vec![NodeRecord::placeholder(id)], Vec::new())?;
        Ok(self.node(id).expect("just inserted"))
    }

    /// Adds the edge for an active relationship, creating placeholder
    /// endpoints as needed. A duplicate triple returns the edge already kept.
    pub fn add_edge(&self, relationship: &RelationshipRow, names: &TypeNames) -> Result<EdgeRecord, StoreError> {
        if !relationship.active {
            return Err(StoreError::InactiveRelationship(relationship.id));
        }
        let edge = EdgeRecord::from_relationship(relationship, names);
        let key = edge.triple();
        self.direct(Vec::new(), vec![edge])?;
        let g = self.graph.read().expect("graph lock");
        let kept = g.by_triple.get(&key).and_then(|ids| ids.last()).expect("edge stored");
        Ok(g.edges[kept].clone())
    }

    /// Removes edges by id, journaling the removal. Returns the removed edges.
    pub fn remove_edges(&self, ids: &[SctId]) -> Result<Vec<EdgeRecord>, StoreError> {
        let mut g = self.graph.write().expect("graph lock");
        let present: Vec<SctId> = ids.iter().copied().filter(|id| g.edges.contains_key(id)).collect();
        if let Some(journal) = g.journal.as_mut() {
            journal.append(&JournalRecord::RemoveEdges { ids: present.clone() })?;
        }
        Ok(present.into_iter().filter_map(|id| g.remove_edge(id)).collect())
    }

    /// Overwrites an edge's stored endpoints without re-attaching it.
    ///
    /// Only for exercising the ID-consistency check.
    #[doc(hidden)]
    pub fn tamper_edge(&self, id: SctId, source_id: SctId, destination_id: SctId) -> bool {
        let mut g = self.graph.write().expect("graph lock");
        match g.edges.get_mut(&id) {
            Some(edge) => {
                edge.source_id = source_id;
                edge.destination_id = destination_id;
                true
            }
            None => false,
        }
    }

    pub fn node(&self, id: SctId) -> Option<NodeRecord> {
        self.graph.read().expect("graph lock").nodes.get(&id).cloned()
    }

    pub fn node_count(&self) -> usize {
        self.graph.read().expect("graph lock").nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.read().expect("graph lock").edges.len()
    }

    /// A read-locked view; writers wait while it is alive.
    pub fn view(&self) -> GraphView<'_> {
        GraphView(self.graph.read().expect("graph lock"))
    }

    pub fn snapshot(&self) -> GraphSnapshot {
        self.view().snapshot()
    }

    pub fn stats(&self) -> GraphStats {
        self.view().stats()
    }
}

/// Consistent read access to the graph.
pub struct GraphView<'a>(RwLockReadGuard<'a, Graph>);

impl GraphView<'_> {
    pub fn node(&self, id: SctId) -> Option<&NodeRecord> {
        self.0.nodes.get(&id)
    }

    pub fn edge(&self, id: SctId) -> Option<&EdgeRecord> {
        self.0.edges.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.0.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.0.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.0.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.0.edges.len()
    }

    /// Edges attached as outgoing from `id`, by ascending relationship id.
    pub fn outgoing(&self, id: SctId) -> impl Iterator<Item = &EdgeRecord> {
        self.0.outgoing.get(&id).into_iter().flatten().map(|rel| &self.0.edges[rel])
    }

    /// Edges attached as incoming to `id`, by ascending relationship id.
    pub fn incoming(&self, id: SctId) -> impl Iterator<Item = &EdgeRecord> {
        self.0.incoming.get(&id).into_iter().flatten().map(|rel| &self.0.edges[rel])
    }

    /// The source and destination the edge is actually attached to.
    pub fn attachment(&self, relationship_id: SctId) -> Option<(SctId, SctId)> {
        self.0.attached.get(&relationship_id).map(|t| (t.source_id, t.destination_id))
    }

    pub fn redundancy_notes(&self) -> impl Iterator<Item = &RedundancyNote> {
        self.0.notes.iter()
    }

    pub fn snapshot(&self) -> GraphSnapshot {
        GraphSnapshot {
            nodes: self.0.nodes.iter().map(|(k, v)| (*k, v.clone())).collect(),
            edges: self.0.edges.iter().map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats { nodes: self.0.nodes.len(), edges: self.0.edges.len(), ..Default::default() };
        for node in self.0.nodes.values() {
            *stats.categories.entry(node.category.clone()).or_default() += 1;
            stats.placeholders += usize::from(node.placeholder);
        }
        for edge in self.0.edges.values() {
            *stats.edge_types.entry(edge.type_name.clone()).or_default() += 1;
        }
        stats
    }
}

/// A full, ordered copy of the graph, used for equality checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphSnapshot {
    pub nodes: BTreeMap<SctId, NodeRecord>,
    pub edges: BTreeMap<SctId, EdgeRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub placeholders: usize,
    /// Node count per category.
    pub categories: BTreeMap<String, usize>,
    /// Edge count per type name.
    pub edge_types: BTreeMap<String, usize>,
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::graph::fault::{RandomFaults, ScriptedFaults};
    use crate::rf2::well_known::*;
    use crate::rf2::EffectiveTime;

    fn id(v: u64) -> SctId {
        SctId::new(v).unwrap()
    }

    fn rel(rid: u64, s: u64, ty: SctId, d: u64) -> RelationshipRow {
        RelationshipRow {
            id: id(rid),
            effective_time: EffectiveTime::new(20200101).unwrap(),
            active: true,
            module_id: CORE_MODULE,
            source_id: id(s),
            destination_id: id(d),
            relationship_group: 0,
            type_id: ty,
            characteristic_type_id: INFERRED_RELATIONSHIP,
            modifier_id: EXISTENTIAL_MODIFIER,
        }
    }

    fn edge(rid: u64, s: u64, d: u64) -> EdgeRecord {
        EdgeRecord {
            relationship_id: id(rid),
            source_id: id(s),
            destination_id: id(d),
            type_id: IS_A,
            type_name: "Is a".into(),
            relationship_group: 0,
        }
    }

    fn quick() -> StoreOptions {
        StoreOptions { retry: RetryPolicy { initial_backoff: std::time::Duration::ZERO, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn upsert_is_idempotent() {
        let store = GraphStore::default();
        let node = NodeRecord::new(id(123), "Diabetes mellitus", "disorder");
        assert_eq!(store.upsert_node(node.clone()).unwrap(), Upsert::Created);
        let before = store.snapshot();
        assert_eq!(store.upsert_node(node).unwrap(), Upsert::Updated);
        assert_eq!(store.snapshot(), before);
    }

    #[test]
    fn real_data_replaces_placeholder() {
        let store = GraphStore::default();
        let p = store.ensure_placeholder(id(456)).unwrap();
        assert!(p.placeholder);
        assert_eq!(p.category, "(none)");
        store.upsert_node(NodeRecord::new(id(456), "Structure of endocrine system", "body structure")).unwrap();
        let n = store.node(id(456)).unwrap();
        assert!(!n.placeholder);
        assert_eq!(n.name, "Structure of endocrine system");
        assert_eq!(store.ensure_placeholder(id(456)).unwrap(), n);
        store.ensure_placeholder(id(789)).unwrap();
        store.ensure_placeholder(id(789)).unwrap();
        assert_eq!(store.node_count(), 2);
    }

    #[test]
    fn diabetes_edges_get_resolved_type_names() {
        let store = GraphStore::default();
        let names = TypeNames::default();
        let e1 = store.add_edge(&rel(111, 123, FINDING_SITE, 456), &names).unwrap();
        let e2 = store.add_edge(&rel(222, 123, IS_A, 789), &names).unwrap();
        assert_eq!(e1.type_name, "Finding site");
        assert_eq!(e2.type_name, "Is a");
        assert_eq!(store.node_count(), 3);
        assert!(store.node(id(789)).unwrap().placeholder);
        store.add_edge(&rel(111, 123, FINDING_SITE, 456), &names).unwrap();
        assert_eq!(store.edge_count(), 2);
    }

    #[test]
    fn duplicate_triples_keep_largest_id() {
        let store = GraphStore::default();
        let names = TypeNames::default();
        store.add_edge(&rel(223, 123, IS_A, 789), &names).unwrap();
        let kept = store.add_edge(&rel(222, 123, IS_A, 789), &names).unwrap();
        assert_eq!(kept.relationship_id, id(223));
        assert_eq!(store.edge_count(), 1);
        let notes: Vec<RedundancyNote> = store.view().redundancy_notes().copied().collect();
        assert_eq!(notes, vec![RedundancyNote { kept: id(223), removed: id(222) }]);
    }

    #[test]
    fn self_loops_and_conflicts_are_rejected() {
        let store = GraphStore::default();
        let names = TypeNames::default();
        assert!(matches!(store.add_edge(&rel(1, 5, IS_A, 5), &names), Err(StoreError::SelfLoop { .. })));
        store.add_edge(&rel(1, 5, IS_A, 6), &names).unwrap();
        assert!(matches!(store.add_edge(&rel(1, 5, IS_A, 7), &names), Err(StoreError::EdgeConflict(_))));
        assert_eq!(store.node_count(), 2, "failed edge leaves no placeholder behind");
    }

    #[test]
    fn retried_batch_becomes_fully_visible() {
        let store = GraphStore::new(quick());
        store.set_fault_injector(Some(Arc::new(ScriptedFaults(HashMap::from([(1, 1)])))));
        let batch = Batch {
            batch_id: 1,
            nodes: (0..10).map(|i| NodeRecord::new(id(100 + i), format!("n{i}"), "finding")).collect(),
            edges: vec![],
        };
        let outcome = store.submit_batch(&batch).unwrap();
        assert_eq!(outcome.retries, 1);
        assert_eq!(store.node_count(), 10);
    }

    #[test]
    fn exhausted_batch_leaves_nothing_behind() {
        let store = GraphStore::new(quick());
        store.upsert_node(NodeRecord::new(id(100), "kept", "finding")).unwrap();
        let before = store.snapshot();
        store.set_fault_injector(Some(Arc::new(ScriptedFaults(HashMap::from([(7, 99)])))));
        let batch = Batch {
            batch_id: 7,
            nodes: vec![NodeRecord::new(id(100), "renamed", "disorder"), NodeRecord::new(id(101), "new", "finding")],
            edges: vec![edge(900, 100, 101), edge(901, 101, 555)],
        };
        let err = store.submit_batch(&batch).unwrap_err();
        assert!(matches!(err, StoreError::BatchFailed { batch_id: 7, attempts: 3, .. }));
        assert_eq!(store.snapshot(), before);
    }

    #[test]
    fn invalid_batch_is_not_retried() {
        let store = GraphStore::new(quick());
        let batch = Batch { batch_id: 1, nodes: vec![], edges: vec![edge(1, 100, 101), edge(2, 100, 100)] };
        assert!(matches!(store.submit_batch(&batch), Err(StoreError::InvalidBatch { .. })));
        assert_eq!(store.snapshot(), GraphSnapshot::default());
    }

    /// Last-writer-wins reference map for node upserts.
    #[test]
    fn random_upserts_match_reference_map() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let store = GraphStore::default();
        let mut oracle: BTreeMap<SctId, (String, String, BTreeSet<String>, bool)> = BTreeMap::new();
        for _ in 0..1000 {
            let cid = id(rng.gen_range(1..=60));
            let node = if rng.gen_bool(0.3) {
                NodeRecord::placeholder(cid)
            } else {
                NodeRecord::new(cid, format!("name{}", rng.gen_range(0..5)), ["finding", "disorder"][rng.gen_range(0..2)])
            }
            .with_synonyms((0..rng.gen_range(0..3)).map(|_| format!("s{}", rng.gen_range(0..10))));
            store.upsert_node(node.clone()).unwrap();

            let entry = oracle.entry(cid).or_insert_with(|| (node.name.clone(), node.category.clone(), BTreeSet::new(), node.placeholder));
            entry.2.extend(node.synonyms.iter().cloned());
            if !node.placeholder {
                entry.0 = node.name.clone();
                entry.1 = node.category.clone();
                entry.3 = false;
            }
        }
        let snap = store.snapshot();
        assert_eq!(snap.nodes.len(), oracle.len());
        for (cid, (name, category, synonyms, placeholder)) in oracle {
            let n = &snap.nodes[&cid];
            assert_eq!((&n.name, &n.category, &n.synonyms, n.placeholder), (&name, &category, &synonyms, placeholder));
        }
    }

    #[test]
    fn journal_replay_reconstructs_the_store() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.journal");
        let names = TypeNames::default();
        let expected = {
            let store = GraphStore::with_journal(&path, quick()).unwrap();
            store.upsert_node(NodeRecord::new(id(123), "Diabetes mellitus", "disorder")).unwrap();
            store.add_edge(&rel(111, 123, FINDING_SITE, 456), &names).unwrap();
            store.add_edge(&rel(222, 123, IS_A, 789), &names).unwrap();
            store.add_edge(&rel(223, 123, IS_A, 790), &names).unwrap();
            store.set_fault_injector(Some(Arc::new(ScriptedFaults(HashMap::from([(50, 99)])))));
            let failed = Batch { batch_id: 50, nodes: vec![NodeRecord::new(id(999), "ghost", "finding")], edges: vec![] };
            assert!(store.submit_batch(&failed).is_err());
            store.remove_edges(&[id(223)]).unwrap();
            store.snapshot()
        };
        let reopened = GraphStore::with_journal(&path, quick()).unwrap();
        assert_eq!(reopened.snapshot(), expected);
        assert!(reopened.node(id(999)).is_none());
        assert!(reopened.allocate_batch_ids(1).start > 4);
    }

    #[test]
    fn stats_partition_nodes_and_edges() {
        let store = GraphStore::default();
        assert_eq!(store.stats(), GraphStats::default());
        for (i, cat) in ["disorder", "disorder", "disorder", "finding", "finding"].iter().enumerate() {
            store.upsert_node(NodeRecord::new(id(100 + i as u64), format!("c{i}"), *cat)).unwrap();
        }
        let stats = store.stats();
        assert_eq!(stats.categories, BTreeMap::from([("disorder".to_string(), 3), ("finding".to_string(), 2)]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Whatever the fault schedule, the visible graph equals a fault-free
        /// load of exactly the batches that reported success.
        #[test]
        fn visible_state_is_union_of_whole_batches(seed in any::<u64>(), rate in 0.0f64..0.9) {
            let store = GraphStore::new(quick());
            store.set_fault_injector(Some(Arc::new(RandomFaults { seed, transient_rate: rate, permanent_rate: 0.1 })));
            let reference = GraphStore::new(quick());
            for b in 1..=30u64 {
                let base = b * 100;
                let batch = Batch {
                    batch_id: b,
                    nodes: (0..4).map(|k| NodeRecord::new(id(base + k), format!("n{}", base + k), "finding")).collect(),
                    edges: (0..4).map(|k| edge(10_000 + base + k, base + k, base + (k + 1) % 4 + 50)).collect(),
                };
                if store.submit_batch(&batch).is_ok() {
                    reference.submit_batch(&batch).unwrap();
                }
                prop_assert_eq!(store.snapshot(), reference.snapshot());
            }
        }
    }
}
