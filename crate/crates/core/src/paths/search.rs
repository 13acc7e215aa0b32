//! Enumeration of knowledge paths from seed concepts.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::graph::{AliasTable, GraphView};
use crate::rf2::SctId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub concept_id: SctId,
    pub concept_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Link {
    pub type_id: SctId,
    pub alias: String,
}

/// An alternating chain of concepts and relationship links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnowledgePath {
    pub hops: Vec<Hop>,
    pub links: Vec<Link>,
}

impl KnowledgePath {
    pub fn concept_ids(&self) -> Vec<SctId> {
        self.hops.iter().map(|h| h.concept_id).collect()
    }

    pub fn type_ids(&self) -> Vec<SctId> {
        self.links.iter().map(|l| l.type_id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_depth: usize,
    pub max_paths: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_depth: 4, max_paths: 3 }
    }
}

/// The label shown between two hops: the alias for the type, else the
/// edge's stored type name.
pub fn link_alias(aliases: &AliasTable, type_id: SctId, type_name: &str) -> String {
    aliases.get(type_id).map_or_else(|| type_name.to_string(), str::to_string)
}

/// (relationship id, type id, destination, type name) for each usable edge
/// out of `id`, by ascending destination then relationship id.
fn steps(view: &GraphView<'_>, id: SctId, type_filter: Option<&BTreeSet<SctId>>) -> Vec<(SctId, SctId, SctId, String)> {
    let mut out: Vec<(SctId, SctId, SctId, String)> = view
        .outgoing(id)
        .filter(|e| type_filter.is_none_or(|f| f.contains(&e.type_id)))
        .filter_map(|e| view.attachment(e.relationship_id).map(|(_, d)| (e.relationship_id, e.type_id, d, e.type_name.clone())))
        .collect();
    out.sort_by_key(|s| (s.2, s.0));
    out
}

struct Partial {
    concepts: Vec<SctId>,
    steps: Vec<(SctId, SctId, String)>,
}

/// Paths from each seed that cannot be extended: they either reach
/// `max_depth` edges or end where no unvisited concept is reachable.
///
/// Output order is seed order, then path length, then the concept id
/// sequence (relationship ids break remaining ties). At most `max_paths`
/// paths are returned in total.
pub fn find_paths(
    view: &GraphView<'_>,
    aliases: &AliasTable,
    seeds: &[SctId],
    type_filter: Option<&BTreeSet<SctId>>,
    limits: SearchLimits,
) -> Vec<KnowledgePath> {
    let mut out = Vec::new();
    let mut seen_seeds = BTreeSet::new();
    for &seed in seeds {
        if out.len() >= limits.max_paths || limits.max_depth == 0 {
            break;
        }
        if !seen_seeds.insert(seed) || view.node(seed).is_none() {
            continue;
        }
        let mut level = vec![Partial { concepts: vec![seed], steps: vec![] }];
        for depth in 0..limits.max_depth {
            let mut terminal = Vec::new();
            let mut next = Vec::new();
            for partial in level {
                let last = *partial.concepts.last().expect("paths are non-empty");
                let extensions: Vec<_> =
                    steps(view, last, type_filter).into_iter().filter(|s| !partial.concepts.contains(&s.2)).collect();
                if extensions.is_empty() {
                    if depth > 0 {
                        terminal.push(partial);
                    }
                    continue;
                }
                for (rel, type_id, destination, type_name) in extensions {
                    let mut concepts = partial.concepts.clone();
                    concepts.push(destination);
                    let mut taken = partial.steps.clone();
                    taken.push((rel, type_id, type_name));
                    next.push(Partial { concepts, steps: taken });
                }
            }
            sort_level(&mut terminal);
            out.extend(terminal.into_iter().take(limits.max_paths - out.len()).map(|p| materialize(view, aliases, p)));
            if out.len() >= limits.max_paths {
                break;
            }
            if depth + 1 == limits.max_depth {
                sort_level(&mut next);
                out.extend(next.into_iter().take(limits.max_paths - out.len()).map(|p| materialize(view, aliases, p)));
                break;
            }
            level = next;
            if level.is_empty() {
                break;
            }
        }
    }
    out
}

fn sort_level(level: &mut [Partial]) {
    level.sort_by(|a, b| {
        a.concepts.cmp(&b.concepts).then_with(|| a.steps.iter().map(|s| s.0).cmp(b.steps.iter().map(|s| s.0)))
    });
}

fn materialize(view: &GraphView<'_>, aliases: &AliasTable, partial: Partial) -> KnowledgePath {
    let hops = partial
        .concepts
        .iter()
        .map(|&id| Hop { concept_id: id, concept_name: view.node(id).map_or_else(|| id.to_string(), |n| n.name.clone()) })
        .collect();
    let links = partial
        .steps
        .into_iter()
        .map(|(_, type_id, type_name)| Link { type_id, alias: link_alias(aliases, type_id, &type_name) })
        .collect();
    KnowledgePath { hops, links }
}
