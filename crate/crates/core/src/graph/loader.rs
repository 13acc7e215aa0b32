//! Buffered, sharded loading: elements accumulate in a subgraph buffer and
//! are committed as atomic batches once a threshold is reached.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fault::mix;
use super::model::{EdgeRecord, NodeRecord};
use super::store::{Batch, GraphStore, StoreError};
use crate::rf2::SctId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoaderOptions {
    pub flush_threshold: usize,
    /// Slices each flush is split into.
    pub shards: usize,
    /// Threads committing slices concurrently.
    pub workers: usize,
}

impl Default for LoaderOptions {
    fn default() -> Self {
        LoaderOptions { flush_threshold: 1000, shards: 1, workers: 1 }
    }
}

/// Pending elements not yet committed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubgraphBuffer {
    pub pending_nodes: Vec<NodeRecord>,
    pub pending_edges: Vec<EdgeRecord>,
}

impl SubgraphBuffer {
    pub fn is_empty(&self) -> bool {
        self.pending_nodes.is_empty() && self.pending_edges.is_empty()
    }
}

fn node_hash(id: SctId) -> u64 {
    mix(&[id.get()])
}

/// Splits a buffer into `n` disjoint slices (some possibly empty).
///
/// Nodes are ordered by a hash of their id and dealt round-robin, so slice
/// sizes differ by at most one. An edge goes to its source's slice when the
/// source is pending, otherwise to the slice picked by hashing the source.
/// Within a slice, elements keep their buffer order.
pub fn shard(buffer: SubgraphBuffer, n: usize) -> Vec<SubgraphBuffer> {
    let n = n.max(1);
    let mut slices = vec![SubgraphBuffer::default(); n];
    if n == 1 {
        slices[0] = buffer;
        return slices;
    }
    let mut order: Vec<(u64, SctId)> = buffer.pending_nodes.iter().map(|node| (node_hash(node.concept_id), node.concept_id)).collect();
    order.sort_unstable();
    let slot: HashMap<SctId, usize> = order.iter().enumerate().map(|(rank, (_, id))| (*id, rank % n)).collect();
    for node in buffer.pending_nodes {
        slices[slot[&node.concept_id]].pending_nodes.push(node);
    }
    for edge in buffer.pending_edges {
        let k = slot.get(&edge.source_id).copied().unwrap_or_else(|| (node_hash(edge.source_id) % n as u64) as usize);
        slices[k].pending_edges.push(edge);
    }
    slices
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CommitReport {
    pub batches_committed: usize,
    /// Batches that needed at least one retry.
    pub batches_retried: usize,
    pub batches_failed: usize,
    pub nodes_written: usize,
    pub edges_written: usize,
    /// Largest number of pending nodes observed right before a flush.
    pub peak_pending_nodes: usize,
    pub peak_pending_edges: usize,
}

/// What a flush policy sees after each flush.
#[derive(Debug, Clone, Copy)]
pub struct FlushObservation {
    pub threshold: usize,
    pub flushed_nodes: usize,
    pub flushed_edges: usize,
    pub commit_time: Duration,
}

/// Chooses the threshold for the next flush.
pub trait FlushPolicy: Send {
    fn next_threshold(&mut self, observed: &FlushObservation) -> usize;
}

/// Keeps the configured threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticThreshold;

impl FlushPolicy for StaticThreshold {
    fn next_threshold(&mut self, observed: &FlushObservation) -> usize {
        observed.threshold
    }
}

/// Result of a load: the report plus every batch error encountered.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub report: CommitReport,
    pub errors: Vec<StoreError>,
}

pub struct GraphLoader<'s> {
    store: &'s GraphStore,
    options: LoaderOptions,
    threshold: usize,
    buffer: SubgraphBuffer,
    pending_sources: HashSet<SctId>,
    detached_edges: usize,
    policy: Box<dyn FlushPolicy>,
    pool: rayon::ThreadPool,
    outcome: LoadOutcome,
}

impl<'s> GraphLoader<'s> {
    pub fn new(store: &'s GraphStore, options: LoaderOptions) -> Self {
        Self::with_policy(store, options, Box::new(StaticThreshold))
    }

    pub fn with_policy(store: &'s GraphStore, options: LoaderOptions, policy: Box<dyn FlushPolicy>) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers.max(1))
            .build()
            .expect("thread pool with a positive thread count");
        GraphLoader {
            store,
            threshold: options.flush_threshold.max(1),
            options,
            buffer: SubgraphBuffer::default(),
            pending_sources: HashSet::new(),
            detached_edges: 0,
            policy,
            pool,
            outcome: LoadOutcome::default(),
        }
    }

    pub fn push_node(&mut self, node: NodeRecord) {
        self.pending_sources.insert(node.concept_id);
        self.buffer.pending_nodes.push(node);
        if self.buffer.pending_nodes.len() >= self.threshold {
            self.flush();
        }
    }

    /// Queues an edge. Edges whose source is not pending count against the
    /// threshold on their own, so a run of edges cannot grow the buffer without bound.
    pub fn push_edge(&mut self, edge: EdgeRecord) {
        if !self.pending_sources.contains(&edge.source_id) {
            self.detached_edges += 1;
        }
        self.buffer.pending_edges.push(edge);
        if self.detached_edges >= self.threshold {
            self.flush();
        }
    }

    pub fn pending(&self) -> &SubgraphBuffer {
        &self.buffer
    }

    /// Commits everything pending, one batch per non-empty shard.
    pub fn flush(&mut self) {
        if self.buffer.is_empty() {
            return;
        }
        let report = &mut self.outcome.report;
        report.peak_pending_nodes = report.peak_pending_nodes.max(self.buffer.pending_nodes.len());
        report.peak_pending_edges = report.peak_pending_edges.max(self.buffer.pending_edges.len());
        let (flushed_nodes, flushed_edges) = (self.buffer.pending_nodes.len(), self.buffer.pending_edges.len());

        let buffer = std::mem::take(&mut self.buffer);
        self.pending_sources.clear();
        self.detached_edges = 0;
        let slices: Vec<SubgraphBuffer> = shard(buffer, self.options.shards).into_iter().filter(|s| !s.is_empty()).collect();
        let ids = self.store.allocate_batch_ids(slices.len() as u64);
        let batches: Vec<Batch> = slices
            .into_iter()
            .zip(ids)
            .map(|(s, batch_id)| Batch { batch_id, nodes: s.pending_nodes, edges: s.pending_edges })
            .collect();

        let started = Instant::now();
        let store = self.store;
        let results: Vec<_> = self.pool.install(|| batches.par_iter().map(|b| store.submit_batch(b)).collect());
        let commit_time = started.elapsed();

        for result in results {
            match result {
                Ok(o) => {
                    report.batches_committed += 1;
                    report.batches_retried += usize::from(o.retries > 0);
                    report.nodes_written += o.nodes_written;
                    report.edges_written += o.edges_written;
                }
                Err(e) => {
                    report.batches_failed += 1;
                    self.outcome.errors.push(e);
                }
            }
        }
        let observed = FlushObservation { threshold: self.threshold, flushed_nodes, flushed_edges, commit_time };
        self.threshold = self.policy.next_threshold(&observed).max(1);
    }

    pub fn finish(mut self) -> LoadOutcome {
        self.flush();
        self.outcome
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::rf2::well_known::IS_A;

    fn id(v: u64) -> SctId {
        SctId::new(v).unwrap()
    }

    fn workload(seed: u64, n: u64) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<NodeRecord> =
            (1..=n).map(|i| NodeRecord::new(id(100_000 + i), format!("c{i}"), "finding").with_synonyms([format!("s{i}")])).collect();
        let mut edges = Vec::new();
        for i in 1..=n {
            for k in 0..rng.gen_range(0..4) {
                let dest = rng.gen_range(1..=n + n / 10);
                if dest != i {
                    edges.push(EdgeRecord {
                        relationship_id: id(1_000_000 + i * 10 + k),
                        source_id: id(100_000 + i),
                        destination_id: id(100_000 + dest),
                        type_id: IS_A,
                        type_name: "Is a".into(),
                        relationship_group: 0,
                    });
                }
            }
        }
        (nodes, edges)
    }

    fn load(nodes: &[NodeRecord], edges: &[EdgeRecord], options: LoaderOptions) -> (GraphStore, LoadOutcome) {
        let store = GraphStore::default();
        let mut loader = GraphLoader::new(&store, options);
        let mut by_source: HashMap<SctId, Vec<&EdgeRecord>> = HashMap::new();
        for e in edges {
            by_source.entry(e.source_id).or_default().push(e);
        }
        for node in nodes {
            loader.push_node(node.clone());
            for e in by_source.get(&node.concept_id).into_iter().flatten() {
                loader.push_edge((*e).clone());
            }
        }
        let outcome = loader.finish();
        (store, outcome)
    }

    #[test]
    fn single_shard_is_the_input() {
        let (nodes, edges) = workload(1, 50);
        let buffer = SubgraphBuffer { pending_nodes: nodes, pending_edges: edges };
        assert_eq!(shard(buffer.clone(), 1), vec![buffer]);
    }

    #[test]
    fn shards_partition_and_balance() {
        for seed in 0..100 {
            let (nodes, edges) = workload(seed, 100);
            let buffer = SubgraphBuffer { pending_nodes: nodes.clone(), pending_edges: edges.clone() };
            let slices = shard(buffer, 4);
            for s in &slices {
                assert!((24..=26).contains(&s.pending_nodes.len()), "{}", s.pending_nodes.len());
                let here: HashSet<SctId> = s.pending_nodes.iter().map(|n| n.concept_id).collect();
                assert!(s.pending_edges.iter().all(|e| here.contains(&e.source_id)));
            }
            let mut all_nodes: Vec<SctId> = slices.iter().flat_map(|s| s.pending_nodes.iter().map(|n| n.concept_id)).collect();
            all_nodes.sort();
            assert_eq!(all_nodes, nodes.iter().map(|n| n.concept_id).collect::<Vec<_>>());
            assert_eq!(slices.iter().map(|s| s.pending_edges.len()).sum::<usize>(), edges.len());
        }
    }

    #[test]
    fn batch_size_shards_and_workers_do_not_change_the_graph() {
        let (nodes, edges) = workload(5, 3000);
        let (reference, _) = load(&nodes, &edges, LoaderOptions { flush_threshold: usize::MAX, shards: 1, workers: 1 });
        let expected = reference.snapshot();
        for threshold in [1, 7, 1000] {
            for (shards, workers) in [(1, 1), (4, 8)] {
                let (store, outcome) = load(&nodes, &edges, LoaderOptions { flush_threshold: threshold, shards, workers });
                assert!(outcome.errors.is_empty());
                assert!(outcome.report.peak_pending_nodes <= threshold);
                assert_eq!(store.snapshot(), expected, "threshold {threshold}, shards {shards}");
            }
        }
    }

    #[test]
    fn flush_fires_at_threshold() {
        let store = GraphStore::default();
        let mut loader = GraphLoader::new(&store, LoaderOptions { flush_threshold: 10, ..Default::default() });
        for i in 1..=9 {
            loader.push_node(NodeRecord::new(id(100 + i), "x", "finding"));
        }
        assert_eq!(store.node_count(), 0);
        loader.push_node(NodeRecord::new(id(200), "x", "finding"));
        assert_eq!(store.node_count(), 10);
        assert!(loader.pending().is_empty());
        let outcome = loader.finish();
        assert_eq!(outcome.report.batches_committed, 1);
    }

    struct Doubling;
    impl FlushPolicy for Doubling {
        fn next_threshold(&mut self, observed: &FlushObservation) -> usize {
            observed.threshold * 2
        }
    }

    #[test]
    fn policy_hook_adjusts_threshold() {
        let store = GraphStore::default();
        let mut loader = GraphLoader::with_policy(&store, LoaderOptions { flush_threshold: 2, ..Default::default() }, Box::new(Doubling));
        for i in 1..=14 {
            loader.push_node(NodeRecord::new(id(100 + i), "x", "finding"));
        }
        // flushes at 2, 4 and 8 pending nodes
        assert_eq!(loader.finish().report.batches_committed, 3);
    }
}
