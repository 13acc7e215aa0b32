//! Lexical lookup of concept names inside free text.

use std::collections::BTreeMap;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};
use serde::Serialize;

use crate::graph::GraphView;
use crate::rf2::SctId;

/// A matched span of the input text, as byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedMatch {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub concept_id: SctId,
}

/// Names and synonyms of every non-placeholder node, matched ASCII
/// case-insensitively on word boundaries.
pub struct Lexicon {
    automaton: Option<AhoCorasick>,
    /// Pattern index to concept; a term shared by several concepts goes to
    /// the smallest id.
    concepts: Vec<SctId>,
}

impl Lexicon {
    pub fn new(view: &GraphView<'_>) -> Self {
        let mut terms: BTreeMap<String, SctId> = BTreeMap::new();
        for node in view.nodes().filter(|n| !n.placeholder) {
            for term in std::iter::once(&node.name).chain(&node.synonyms) {
                let key = term.trim().to_ascii_lowercase();
                if key.is_empty() {
                    continue;
                }
                terms.entry(key).and_modify(|id| *id = (*id).min(node.concept_id)).or_insert(node.concept_id);
            }
        }
        let automaton = (!terms.is_empty()).then(|| {
            AhoCorasickBuilder::new()
                .ascii_case_insensitive(true)
                .match_kind(MatchKind::Standard)
                .build(terms.keys())
                .expect("lexicon automaton builds")
        });
        Lexicon { automaton, concepts: terms.into_values().collect() }
    }

    /// Longest matches first, ties to the leftmost; overlapping matches are
    /// dropped. The result is in text order.
    pub fn find(&self, text: &str) -> Vec<SeedMatch> {
        let Some(automaton) = &self.automaton else { return Vec::new() };
        let mut candidates: Vec<(usize, usize, SctId)> = automaton
            .find_overlapping_iter(text)
            .filter(|m| on_boundary(text, m.start(), m.end()))
            .map(|m| (m.start(), m.end(), self.concepts[m.pattern().as_usize()]))
            .collect();
        candidates.sort_by_key(|&(start, end, id)| (std::cmp::Reverse(end - start), start, id));
        let mut taken: Vec<(usize, usize, SctId)> = Vec::new();
        for c in candidates {
            if taken.iter().all(|t| c.1 <= t.0 || c.0 >= t.1) {
                taken.push(c);
            }
        }
        taken.sort();
        taken
            .into_iter()
            .map(|(start, end, concept_id)| SeedMatch { text: text[start..end].to_string(), start, end, concept_id })
            .collect()
    }
}

fn on_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    let word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    let first = text[start..end].chars().next();
    let last = text[start..end].chars().next_back();
    // A boundary is only needed where the term itself starts or ends with a word character.
    !(word(before) && word(first)) && !(word(after) && word(last))
}

pub fn match_seeds(view: &GraphView<'_>, text: &str) -> Vec<SeedMatch> {
    Lexicon::new(view).find(text)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::graph::{GraphStore, NodeRecord};

    fn store(names: &[(u64, &str)]) -> GraphStore {
        let store = GraphStore::default();
        for (id, name) in names {
            store.upsert_node(NodeRecord::new(SctId::new(*id).unwrap(), *name, "finding")).unwrap();
        }
        store
    }

    fn ids(found: &[SeedMatch]) -> Vec<u64> {
        found.iter().map(|m| m.concept_id.get()).collect()
    }

    #[test]
    fn cough_and_fever() {
        let s = store(&[(100001, "cough"), (100002, "fever")]);
        let found = match_seeds(&s.view(), "patient reports cough and fever");
        assert_eq!(ids(&found), vec![100001, 100002]);
        assert_eq!(found[0].text, "cough");
        assert!(match_seeds(&s.view(), "nothing relevant here").is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let s = store(&[(100001, "pain"), (100002, "chest pain")]);
        assert_eq!(ids(&match_seeds(&s.view(), "Chest pain since Monday")), vec![100002]);
        assert_eq!(match_seeds(&s.view(), "Chest pain since Monday")[0].text, "Chest pain");
    }

    #[test]
    fn words_must_be_whole() {
        let s = store(&[(100001, "cough")]);
        assert!(match_seeds(&s.view(), "persistent coughing").is_empty());
        assert_eq!(ids(&match_seeds(&s.view(), "cough, cough.")), vec![100001, 100001]);
    }

    #[test]
    fn synonyms_match_and_placeholders_do_not() {
        let s = store(&[]);
        s.upsert_node(NodeRecord::new(SctId::new(100001).unwrap(), "Pyrexia", "finding").with_synonyms(["fever"])).unwrap();
        s.ensure_placeholder(SctId::new(100002).unwrap()).unwrap();
        assert_eq!(ids(&match_seeds(&s.view(), "fever 100002")), vec![100001]);
    }

    #[test]
    fn shared_term_goes_to_smallest_id() {
        let s = store(&[(100009, "cold"), (100003, "Cold")]);
        assert_eq!(ids(&match_seeds(&s.view(), "a cold")), vec![100003]);
    }

    proptest! {
        /// Brute force: try every lexicon term at every position, then resolve
        /// overlaps the same way.
        #[test]
        fn matches_brute_force(text in "[ab ]{0,30}", terms in prop::collection::btree_set("[ab]{1,3}( [ab]{1,2})?", 1..6)) {
            let names: Vec<(u64, &str)> = terms.iter().enumerate().map(|(i, t)| (100_000 + i as u64, t.as_str())).collect();
            let s = store(&names);
            let mut all = Vec::new();
            for (id, term) in &names {
                for start in 0..text.len() {
                    let end = start + term.len();
                    let is_word = |i: usize| text.as_bytes().get(i).is_some_and(|b| *b != b' ');
                    if end <= text.len() && &text[start..end] == *term && !(start > 0 && is_word(start - 1)) && !is_word(end) {
                        all.push((start, end, *id));
                    }
                }
            }
            all.sort_by_key(|&(s, e, id)| (std::cmp::Reverse(e - s), s, id));
            let mut kept: Vec<(usize, usize, u64)> = Vec::new();
            for c in all {
                if kept.iter().all(|k| c.1 <= k.0 || c.0 >= k.1) {
                    kept.push(c);
                }
            }
            kept.sort();
            let got: Vec<(usize, usize, u64)> = match_seeds(&s.view(), &text).into_iter().map(|m| (m.start, m.end, m.concept_id.get())).collect();
            prop_assert_eq!(got, kept);
        }
    }
}
