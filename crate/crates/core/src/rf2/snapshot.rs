//! Reduction of versioned RF2 rows to the current snapshot.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::Serialize;

use super::{RelationshipRow, SctId, Versioned};

/// Keeps, for every component id, the row with the latest `effectiveTime`,
/// and drops it if that row is inactive.
///
/// When two rows of one id share an `effectiveTime`, the later row in the
/// input wins. Output is sorted by ascending id.
pub fn resolve_snapshot<T: Versioned>(rows: Vec<T>) -> Vec<T> {
    let mut latest: HashMap<SctId, usize> = HashMap::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        match latest.entry(row.component_id()) {
            Entry::Vacant(slot) => {
                slot.insert(index);
            }
            Entry::Occupied(mut slot) => {
                if row.effective_time() >= rows[*slot.get()].effective_time() {
                    slot.insert(index);
                }
            }
        }
    }

    let mut winners: Vec<usize> = latest.into_values().filter(|&i| rows[i].is_active()).collect();
    winners.sort_unstable_by_key(|&i| rows[i].component_id());

    let mut slots: Vec<Option<T>> = rows.into_iter().map(Some).collect();
    winners
        .into_iter()
        .map(|i| slots[i].take().expect("each winner index is unique"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelfLoop {
    pub relationship_id: SctId,
    pub concept_id: SctId,
}

/// Splits off active relationships whose source and destination coincide.
pub fn reject_self_loops(rows: Vec<RelationshipRow>) -> (Vec<RelationshipRow>, Vec<SelfLoop>) {
    let mut rejected = Vec::new();
    let kept = rows
        .into_iter()
        .filter(|row| {
            let is_loop = row.active && row.source_id == row.destination_id;
            if is_loop {
                rejected.push(SelfLoop { relationship_id: row.id, concept_id: row.source_id });
            }
            !is_loop
        })
        .collect();
    (kept, rejected)
}
