//! RF2 component model: identifiers, rows, snapshot resolution and composites.

mod composite;
mod snapshot;
mod types;
pub mod well_known;

pub use composite::{
    build_composites, default_fsn_type, drop_incomplete, reintegrate_axioms, semantic_tag, CompositeConcept, CompositeSet,
    DropReason, DropReport, DroppedComposite, RelationshipRef, NO_CATEGORY,
};
pub use snapshot::{reject_self_loops, resolve_snapshot, SelfLoop};
pub use types::*;
