//! Text rendering of knowledge paths, and parsing renderings back.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::search::{link_alias, Hop, KnowledgePath, Link};
use crate::graph::{AliasTable, GraphView};
use crate::rf2::SctId;

pub const ARROW: &str = " → ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderMode {
    /// `A → B → C`
    ConceptsOnly,
    /// `A → alias → B → alias → C`
    #[default]
    WithRelations,
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concepts-only" => Ok(RenderMode::ConceptsOnly),
            "with-relations" => Ok(RenderMode::WithRelations),
            other => Err(format!("unknown render mode `{other}` (expected concepts-only or with-relations)")),
        }
    }
}

pub fn render_path(path: &KnowledgePath, mode: RenderMode) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(path.hops.len() * 2);
    for (i, hop) in path.hops.iter().enumerate() {
        if i > 0 && mode == RenderMode::WithRelations {
            parts.push(&path.links[i - 1].alias);
        }
        parts.push(&hop.concept_name);
    }
    parts.join(ARROW)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("a with-relations rendering has an odd number of parts; found {0}")]
    PartCount(usize),
    #[error("no concept named `{0}`")]
    UnknownConcept(String),
    #[error("no edge labelled `{alias}` leads from `{from}` to a concept named `{to}`")]
    NoEdge { from: String, alias: String, to: String },
}

/// Recovers the concept and type ids behind a with-relations rendering.
///
/// Where several readings exist, the one with the smallest concept id
/// sequence wins.
pub fn resolve_rendered(view: &GraphView<'_>, aliases: &AliasTable, text: &str) -> Result<KnowledgePath, ResolveError> {
    let parts: Vec<&str> = text.split(ARROW).collect();
    if parts.len().is_multiple_of(2) {
        return Err(ResolveError::PartCount(parts.len()));
    }
    let mut by_name: BTreeMap<&str, Vec<SctId>> = BTreeMap::new();
    for node in view.nodes() {
        by_name.entry(node.name.as_str()).or_default().push(node.concept_id);
    }
    for ids in by_name.values_mut() {
        ids.sort();
    }
    let starts = by_name.get(parts[0]).ok_or_else(|| ResolveError::UnknownConcept(parts[0].to_string()))?;
    let mut furthest = (0usize, parts[0]);
    for &start in starts {
        let mut hops = vec![start];
        let mut links = Vec::new();
        if extend(view, aliases, &parts, &mut hops, &mut links, &mut furthest) {
            return Ok(KnowledgePath {
                hops: hops
                    .into_iter()
                    .zip(parts.iter().step_by(2))
                    .map(|(concept_id, name)| Hop { concept_id, concept_name: name.to_string() })
                    .collect(),
                links,
            });
        }
    }
    let k = furthest.0;
    Err(ResolveError::NoEdge { from: parts[k].to_string(), alias: parts[k + 1].to_string(), to: parts[k + 2].to_string() })
}

fn extend<'t>(
    view: &GraphView<'_>,
    aliases: &AliasTable,
    parts: &[&'t str],
    hops: &mut Vec<SctId>,
    links: &mut Vec<Link>,
    furthest: &mut (usize, &'t str),
) -> bool {
    let at = 2 * (hops.len() - 1);
    if at + 1 >= parts.len() {
        return true;
    }
    if at >= furthest.0 {
        *furthest = (at, parts[at]);
    }
    let (alias, name) = (parts[at + 1], parts[at + 2]);
    let current = *hops.last().expect("non-empty");
    let mut candidates: Vec<(SctId, SctId, SctId)> = view
        .outgoing(current)
        .filter_map(|e| {
            let (_, destination) = view.attachment(e.relationship_id)?;
            let matches = link_alias(aliases, e.type_id, &e.type_name) == alias
                && view.node(destination).is_some_and(|n| n.name == name)
                && !hops.contains(&destination);
            matches.then_some((destination, e.relationship_id, e.type_id))
        })
        .collect();
    candidates.sort();
    for (destination, _, type_id) in candidates {
        hops.push(destination);
        links.push(Link { type_id, alias: alias.to_string() });
        if extend(view, aliases, parts, hops, links, furthest) {
            return true;
        }
        hops.pop();
        links.pop();
    }
    false
}
