//! Labeled property graph of concepts and typed relationships.
//!
//! [`GraphStore`] holds the graph and applies batches atomically;
//! [`GraphLoader`] buffers writes and flushes them in sharded batches.

mod bulk_csv;
pub mod fault;
mod journal;
mod loader;
mod model;
mod store;

pub use bulk_csv::{
    csv_field, export_bulk_csv, import_bulk_csv, join_synonyms, split_synonyms, type_label, CsvError, EDGES_FILE,
    EDGES_HEADER, NODES_FILE, NODES_HEADER,
};
pub use fault::{FaultInjector, FaultPoint, InjectedFault, RandomFaults, ScriptedFaults};
pub use journal::{read_records, Journal, JournalRecord};
pub use loader::{
    shard, CommitReport, FlushObservation, FlushPolicy, GraphLoader, LoadOutcome, LoaderOptions, StaticThreshold,
    SubgraphBuffer,
};
pub use model::{AliasError, AliasTable, EdgeRecord, NodeRecord, TypeNames};
pub use store::{
    Batch, BatchOutcome, GraphSnapshot, GraphStats, GraphStore, GraphView, RedundancyNote, StoreError, StoreOptions,
    Upsert,
};
