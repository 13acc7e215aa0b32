//! Knowledge paths: seed concepts found in clinical text, the chains that
//! lead out of them, and their text renderings.

mod render;
mod search;
mod seeds;

use std::collections::BTreeSet;

use serde::Serialize;

pub use render::{render_path, resolve_rendered, RenderMode, ResolveError, ARROW};
pub use search::{find_paths, link_alias, Hop, KnowledgePath, Link, SearchLimits};
pub use seeds::{match_seeds, Lexicon, SeedMatch};

use crate::graph::{AliasTable, GraphStore};
use crate::rf2::SctId;

/// The paths extracted for one piece of text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnowledgeVector {
    pub seed_terms: Vec<SeedMatch>,
    pub paths: Vec<KnowledgePath>,
}

impl KnowledgeVector {
    pub fn rendered(&self, mode: RenderMode) -> Vec<String> {
        self.paths.iter().map(|p| render_path(p, mode)).collect()
    }

    /// The `query-path` JSON shape.
    pub fn to_json(&self, mode: RenderMode) -> serde_json::Value {
        serde_json::json!({
            "seeds": self.seed_terms,
            "paths": self.paths.iter().map(|p| serde_json::json!({
                "concepts": p.hops.iter().map(|h| &h.concept_name).collect::<Vec<_>>(),
                "concept_ids": p.concept_ids(),
                "relations": p.links.iter().map(|l| &l.alias).collect::<Vec<_>>(),
                "type_ids": p.type_ids(),
                "rendered": render_path(p, mode),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Matches seeds in `text` and expands them into paths.
pub fn knowledge_vector(
    store: &GraphStore,
    aliases: &AliasTable,
    text: &str,
    type_filter: Option<&BTreeSet<SctId>>,
    limits: SearchLimits,
) -> KnowledgeVector {
    let view = store.view();
    let seed_terms = match_seeds(&view, text);
    let seeds: Vec<SctId> = seed_terms.iter().map(|m| m.concept_id).collect();
    let paths = find_paths(&view, aliases, &seeds, type_filter, limits);
    KnowledgeVector { seed_terms, paths }
}
