//! The concept-centric composite view: a concept with its names and its
//! outgoing relationships grouped by relationship type.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::well_known::{EXISTENTIAL_MODIFIER, FSN_TYPE, STATED_RELATIONSHIP, SYNTHETIC_RELATIONSHIP_BASE};
use super::{ConceptRow, DescriptionRow, RelationshipRow, SctId, SourcedAxiomTriple, Triple};

/// Category assigned to names without a trailing semantic tag.
pub const NO_CATEGORY: &str = "(none)";

/// Splits a fully specified name into its term and its trailing semantic tag.
///
/// ```
/// use snomed_kg::rf2::semantic_tag;
/// assert_eq!(semantic_tag("A (b) (finding)"), ("A (b)".to_string(), "finding".to_string()));
/// assert_eq!(semantic_tag("Penicillin"), ("Penicillin".to_string(), "(none)".to_string()));
/// ```
pub fn semantic_tag(fsn: &str) -> (String, String) {
    let trimmed = fsn.trim_end();
    let untagged = || (fsn.trim().to_string(), NO_CATEGORY.to_string());
    if !trimmed.ends_with(')') {
        return untagged();
    }
    let mut depth = 0usize;
    for (pos, ch) in trimmed.char_indices().rev() {
        match ch {
            ')' => depth += 1,
            '(' => {
                depth -= 1;
                if depth == 0 {
                    let term = trimmed[..pos].trim();
                    let category = trimmed[pos + 1..trimmed.len() - 1].trim();
                    if term.is_empty() || category.is_empty() {
                        return untagged();
                    }
                    return (term.to_string(), category.to_string());
                }
            }
            _ => {}
        }
    }
    untagged()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipRef {
    pub type_name: String,
    pub destination_id: SctId,
    pub relationship_group: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeConcept {
    pub concept_id: SctId,
    pub fsn: String,
    pub term: String,
    pub category: String,
    pub synonyms: Vec<String>,
    pub relationships: BTreeMap<SctId, Vec<RelationshipRef>>,
}

/// Output of [`build_composites`]: one composite per active concept plus the
/// descriptions that belong to no active concept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CompositeSet {
    pub composites: Vec<CompositeConcept>,
    pub unattached_descriptions: Vec<SctId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DropReason {
    EmptyFsn,
    EmptyTerm,
    UnresolvedConcept,
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DropReason::EmptyFsn => "empty FSN",
            DropReason::EmptyTerm => "empty term",
            DropReason::UnresolvedConcept => "unresolved concept id",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedComposite {
    pub concept_id: SctId,
    pub reason: DropReason,
    /// Description terms lost with the composite.
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub dropped: Vec<DroppedComposite>,
    pub unattached_descriptions: Vec<SctId>,
}

/// Joins snapshot-resolved concepts, descriptions and relationships into
/// composites. `fsn_type` selects which description type counts as the FSN.
///
/// A concept without an FSN still yields a composite, with an empty `fsn`,
/// so that [`drop_incomplete`] can report it.
pub fn build_composites(
    concepts: &[ConceptRow],
    descriptions: &[DescriptionRow],
    relationships: &[RelationshipRow],
    fsn_type: SctId,
) -> CompositeSet {
    let active: HashSet<SctId> = concepts.iter().filter(|c| c.active).map(|c| c.id).collect();

    let mut names: HashMap<SctId, Vec<&DescriptionRow>> = HashMap::new();
    let mut unattached = Vec::new();
    for d in descriptions.iter().filter(|d| d.active) {
        if active.contains(&d.concept_id) {
            names.entry(d.concept_id).or_default().push(d);
        } else {
            unattached.push(d.id);
        }
    }

    // FSN per concept: latest effectiveTime, then larger description id.
    let mut fsn_of: HashMap<SctId, &DescriptionRow> = HashMap::new();
    for (concept_id, descs) in &names {
        if let Some(best) = descs
            .iter()
            .filter(|d| d.type_id == fsn_type)
            .max_by_key(|d| (d.effective_time, d.id))
        {
            fsn_of.insert(*concept_id, best);
        }
    }
    let type_names: HashMap<SctId, String> = fsn_of.iter().map(|(id, d)| (*id, semantic_tag(&d.term).0)).collect();
    let type_name = |type_id: SctId| type_names.get(&type_id).cloned().unwrap_or_else(|| type_id.to_string());

    let mut outgoing: HashMap<SctId, Vec<&RelationshipRow>> = HashMap::new();
    for r in relationships.iter().filter(|r| r.active) {
        outgoing.entry(r.source_id).or_default().push(r);
    }

    let mut composites: Vec<CompositeConcept> = concepts
        .iter()
        .filter(|c| c.active)
        .map(|concept| {
            let fsn_row = fsn_of.get(&concept.id);
            let fsn = fsn_row.map(|d| d.term.clone()).unwrap_or_default();
            let (term, category) = if fsn.is_empty() { (String::new(), String::new()) } else { semantic_tag(&fsn) };

            let mut others: Vec<&DescriptionRow> = names
                .get(&concept.id)
                .into_iter()
                .flatten()
                .filter(|d| fsn_row.is_none_or(|f| f.id != d.id))
                .copied()
                .collect();
            others.sort_by_key(|d| d.id);

            let mut grouped: BTreeMap<SctId, Vec<RelationshipRef>> = BTreeMap::new();
            for r in outgoing.get(&concept.id).into_iter().flatten() {
                grouped.entry(r.type_id).or_default().push(RelationshipRef {
                    type_name: type_name(r.type_id),
                    destination_id: r.destination_id,
                    relationship_group: r.relationship_group,
                });
            }
            for refs in grouped.values_mut() {
                refs.sort_by_key(|r| (r.relationship_group, r.destination_id));
            }

            CompositeConcept {
                concept_id: concept.id,
                fsn,
                term,
                category,
                synonyms: others.into_iter().map(|d| d.term.clone()).collect(),
                relationships: grouped,
            }
        })
        .collect();
    composites.sort_by_key(|c| c.concept_id);
    unattached.sort();

    CompositeSet { composites, unattached_descriptions: unattached }
}

/// Removes composites with empty or unresolved fields, reporting each with a reason.
///
/// A composite is unresolved when `known_concepts` is given and does not contain it.
pub fn drop_incomplete(set: CompositeSet, known_concepts: Option<&HashSet<SctId>>) -> (Vec<CompositeConcept>, DropReport) {
    let mut report = DropReport { dropped: Vec::new(), unattached_descriptions: set.unattached_descriptions };
    let mut kept = Vec::with_capacity(set.composites.len());
    for composite in set.composites {
        let reason = if known_concepts.is_some_and(|known| !known.contains(&composite.concept_id)) {
            Some(DropReason::UnresolvedConcept)
        } else if composite.fsn.trim().is_empty() {
            Some(DropReason::EmptyFsn)
        } else if composite.term.trim().is_empty() || composite.category.trim().is_empty() {
            Some(DropReason::EmptyTerm)
        } else {
            None
        };
        match reason {
            Some(reason) => {
                let mut terms = composite.synonyms;
                if !composite.fsn.is_empty() {
                    terms.insert(0, composite.fsn);
                }
                report.dropped.push(DroppedComposite { concept_id: composite.concept_id, reason, terms });
            }
            None => kept.push(composite),
        }
    }
    (kept, report)
}

/// Merges relationships recovered from axioms into the relationship snapshot.
///
/// A triple already present (same source, type and destination) is not added
/// again, and RF2 rows always win over axiom-derived ones. New rows receive ids
/// from the reserved synthetic range, allocated in sorted triple order.
pub fn reintegrate_axioms(axiom_triples: &[SourcedAxiomTriple], relationships: Vec<RelationshipRow>) -> Vec<RelationshipRow> {
    let present: HashSet<Triple> = relationships.iter().filter(|r| r.active).map(|r| r.triple()).collect();

    let mut fresh: BTreeMap<Triple, &SourcedAxiomTriple> = BTreeMap::new();
    for sourced in axiom_triples {
        let key = sourced.triple.triple();
        if present.contains(&key) {
            continue;
        }
        fresh
            .entry(key)
            .and_modify(|cur| {
                if (sourced.triple.relationship_group, sourced.axiom_id) < (cur.triple.relationship_group, cur.axiom_id) {
                    *cur = sourced;
                }
            })
            .or_insert(sourced);
    }

    let mut merged = relationships;
    merged.reserve(fresh.len());
    for (offset, (_, sourced)) in fresh.into_iter().enumerate() {
        let t = &sourced.triple;
        merged.push(RelationshipRow {
            id: SctId::new(SYNTHETIC_RELATIONSHIP_BASE + offset as u64).expect("synthetic range fits in 18 digits"),
            effective_time: sourced.effective_time,
            active: true,
            module_id: sourced.module_id,
            source_id: t.source_id,
            destination_id: t.destination_id,
            relationship_group: t.relationship_group,
            type_id: t.type_id,
            characteristic_type_id: STATED_RELATIONSHIP,
            modifier_id: EXISTENTIAL_MODIFIER,
        });
    }
    merged
}

/// Default FSN description type.
pub fn default_fsn_type() -> SctId {
    FSN_TYPE
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::rf2::well_known::*;
    use crate::rf2::{AxiomTriple, EffectiveTime};

    fn id(v: u64) -> SctId {
        SctId::new(v).unwrap()
    }
    fn t(v: u32) -> EffectiveTime {
        EffectiveTime::new(v).unwrap()
    }
    fn concept(v: u64) -> ConceptRow {
        ConceptRow { id: id(v), effective_time: t(20200101), active: true, module_id: CORE_MODULE, definition_status_id: PRIMITIVE }
    }
    fn desc(did: u64, cid: u64, type_id: SctId, term: &str) -> DescriptionRow {
        DescriptionRow {
            id: id(did),
            effective_time: t(20200101),
            active: true,
            module_id: CORE_MODULE,
            concept_id: id(cid),
            language_code: "en".into(),
            type_id,
            term: term.into(),
            case_significance_id: CASE_INSENSITIVE,
        }
    }
    fn rel(rid: u64, s: u64, type_id: SctId, d: u64) -> RelationshipRow {
        RelationshipRow {
            id: id(rid),
            effective_time: t(20200101),
            active: true,
            module_id: CORE_MODULE,
            source_id: id(s),
            destination_id: id(d),
            relationship_group: 0,
            type_id,
            characteristic_type_id: INFERRED_RELATIONSHIP,
            modifier_id: EXISTENTIAL_MODIFIER,
        }
    }

    #[test]
    fn semantic_tag_examples() {
        assert_eq!(semantic_tag("Diabetes mellitus (disorder)"), ("Diabetes mellitus".into(), "disorder".into()));
        assert_eq!(semantic_tag("Penicillin"), ("Penicillin".into(), "(none)".into()));
        assert_eq!(semantic_tag("A (b) (finding)"), ("A (b)".into(), "finding".into()));
        assert_eq!(semantic_tag("X (a (b))"), ("X".into(), "a (b)".into()));
        assert_eq!(semantic_tag("(finding)"), ("(finding)".into(), "(none)".into()));
        assert_eq!(semantic_tag("broken)"), ("broken)".into(), "(none)".into()));
    }

    proptest! {
        #[test]
        fn semantic_tag_inverts_formatting(term in "[A-Za-z][A-Za-z0-9 -]{0,20}[A-Za-z0-9]", cat in "[a-z][a-z ]{0,12}[a-z]") {
            prop_assert_eq!(semantic_tag(&format!("{term} ({cat})")), (term, cat));
        }
    }

    fn diabetes_fixture() -> (Vec<ConceptRow>, Vec<DescriptionRow>, Vec<RelationshipRow>) {
        let concepts = vec![concept(123), concept(456), concept(789), concept(116680003), concept(363698007)];
        let descriptions = vec![
            desc(1001, 123, FSN_TYPE, "Diabetes mellitus (disorder)"),
            desc(1002, 123, SYNONYM_TYPE, "Diabetes Mellitus"),
            desc(1003, 456, FSN_TYPE, "Structure of endocrine system (body structure)"),
            desc(1004, 789, FSN_TYPE, "Drug-induced diabetes mellitus (disorder)"),
            desc(1005, 116680003, FSN_TYPE, "Is a (attribute)"),
            desc(1006, 363698007, FSN_TYPE, "Finding site (attribute)"),
        ];
        let relationships = vec![rel(111, 123, FINDING_SITE, 456), rel(222, 123, IS_A, 789)];
        (concepts, descriptions, relationships)
    }

    #[test]
    fn composite_groups_relationships_by_type() {
        let (c, d, r) = diabetes_fixture();
        let set = build_composites(&c, &d, &r, FSN_TYPE);
        let dm = set.composites.iter().find(|c| c.concept_id == id(123)).unwrap();
        assert_eq!(dm.term, "Diabetes mellitus");
        assert_eq!(dm.category, "disorder");
        assert_eq!(dm.synonyms, vec!["Diabetes Mellitus".to_string()]);
        assert_eq!(
            dm.relationships[&FINDING_SITE],
            vec![RelationshipRef { type_name: "Finding site".into(), destination_id: id(456), relationship_group: 0 }]
        );
        assert_eq!(
            dm.relationships[&IS_A],
            vec![RelationshipRef { type_name: "Is a".into(), destination_id: id(789), relationship_group: 0 }]
        );
        let site = set.composites.iter().find(|c| c.concept_id == id(456)).unwrap();
        assert!(site.relationships.is_empty());
    }

    #[test]
    fn unknown_type_concept_falls_back_to_literal_id() {
        let (c, d, _) = diabetes_fixture();
        let r = vec![rel(333, 123, id(999999), 456)];
        let set = build_composites(&c, &d, &r, FSN_TYPE);
        let dm = set.composites.iter().find(|c| c.concept_id == id(123)).unwrap();
        assert_eq!(dm.relationships[&id(999999)][0].type_name, "999999");
    }

    #[test]
    fn fsn_tie_breaks_on_time_then_id() {
        let c = vec![concept(123)];
        let mut older = desc(5, 123, FSN_TYPE, "Old (disorder)");
        older.effective_time = t(20100101);
        let d = vec![older, desc(7, 123, FSN_TYPE, "Seven (disorder)"), desc(6, 123, FSN_TYPE, "Six (disorder)")];
        let set = build_composites(&c, &d, &[], FSN_TYPE);
        assert_eq!(set.composites[0].fsn, "Seven (disorder)");
        assert_eq!(set.composites[0].synonyms, vec!["Old (disorder)".to_string(), "Six (disorder)".to_string()]);
    }

    #[test]
    fn drop_incomplete_reports_reasons() {
        let c = vec![concept(100), concept(200)];
        let d = vec![desc(1, 100, FSN_TYPE, "Full (finding)"), desc(2, 200, SYNONYM_TYPE, "only synonym"), desc(3, 300, FSN_TYPE, "Orphan (finding)")];
        let set = build_composites(&c, &d, &[], FSN_TYPE);
        let (kept, report) = drop_incomplete(set, None);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].concept_id, id(100));
        assert_eq!(report.dropped.len(), 1);
        assert_eq!(report.dropped[0].reason.to_string(), "empty FSN");
        assert_eq!(report.dropped[0].terms, vec!["only synonym".to_string()]);
        assert_eq!(report.unattached_descriptions, vec![id(3)]);

        let set = build_composites(&c, &d, &[], FSN_TYPE);
        let known: HashSet<SctId> = [id(200)].into_iter().collect();
        let (kept, report) = drop_incomplete(set, Some(&known));
        assert!(kept.is_empty());
        assert_eq!(report.dropped[0].reason, DropReason::UnresolvedConcept);
    }

    #[test]
    fn reintegration_examples() {
        let (_, _, r) = diabetes_fixture();
        let sourced = |s, ty, d| SourcedAxiomTriple {
            triple: AxiomTriple { source_id: id(s), type_id: ty, destination_id: id(d), relationship_group: 0 },
            axiom_id: id(5000),
            effective_time: t(20210101),
            module_id: CORE_MODULE,
        };
        let merged = reintegrate_axioms(&[sourced(123, IS_A, 789)], r.clone());
        assert_eq!(merged, r);

        let merged = reintegrate_axioms(&[sourced(123, FINDING_SITE, 456)], r[1..].to_vec());
        assert_eq!(merged.len(), 2);
        let added = merged.last().unwrap();
        assert_eq!(added.triple(), Triple { source_id: id(123), type_id: FINDING_SITE, destination_id: id(456) });
        assert!(added.id.get() >= SYNTHETIC_RELATIONSHIP_BASE);
    }

    /// Seeds a random fixture and compares composites with a nested-loop join.
    #[test]
    fn composites_match_nested_loop_join() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1000u64;
        let concepts: Vec<ConceptRow> = (1..=n).map(|i| concept(100_000 + i)).collect();
        let mut descriptions = Vec::new();
        let mut next = 1_000_000u64;
        for i in 1..=n {
            if rng.gen_bool(0.95) {
                descriptions.push(desc(next, 100_000 + i, FSN_TYPE, &format!("Concept {i} (finding)")));
                next += 1;
            }
            for s in 0..rng.gen_range(0..3) {
                descriptions.push(desc(next, 100_000 + i, SYNONYM_TYPE, &format!("syn {i}/{s}")));
                next += 1;
            }
        }
        let mut relationships = Vec::new();
        for i in 1..=n {
            for _ in 0..rng.gen_range(0..4) {
                let ty = 100_000 + rng.gen_range(1..=20);
                relationships.push(rel(next, 100_000 + i, id(ty), 100_000 + rng.gen_range(1..=n)));
                next += 1;
            }
        }
        let set = build_composites(&concepts, &descriptions, &relationships, FSN_TYPE);
        assert_eq!(set.composites.len(), n as usize);
        for c in &concepts {
            let composite = set.composites.iter().find(|x| x.concept_id == c.id).unwrap();
            let mut fsn = String::new();
            let mut synonyms = Vec::new();
            for d in &descriptions {
                if d.concept_id == c.id {
                    if d.type_id == FSN_TYPE {
                        fsn = d.term.clone();
                    } else {
                        synonyms.push(d.term.clone());
                    }
                }
            }
            assert_eq!(composite.fsn, fsn);
            assert_eq!(composite.synonyms, synonyms);
            let mut expected: BTreeMap<SctId, Vec<RelationshipRef>> = BTreeMap::new();
            for r in &relationships {
                if r.source_id == c.id {
                    let mut name = r.type_id.to_string();
                    for d in &descriptions {
                        if d.concept_id == r.type_id && d.type_id == FSN_TYPE {
                            name = semantic_tag(&d.term).0;
                        }
                    }
                    expected.entry(r.type_id).or_default().push(RelationshipRef {
                        type_name: name,
                        destination_id: r.destination_id,
                        relationship_group: r.relationship_group,
                    });
                }
            }
            for v in expected.values_mut() {
                v.sort_by_key(|r| (r.relationship_group, r.destination_id));
            }
            assert_eq!(composite.relationships, expected);
        }
    }

    #[test]
    fn seeded_defects_are_exactly_dropped() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let concepts: Vec<ConceptRow> = (1..=100).map(|i| concept(100_000 + i)).collect();
        let mut defects: Vec<u64> = Vec::new();
        while defects.len() < 7 {
            let pick = rng.gen_range(1..=100);
            if !defects.contains(&pick) {
                defects.push(pick);
            }
        }
        let descriptions: Vec<DescriptionRow> = (1..=100)
            .map(|i| {
                let ty = if defects.contains(&i) { SYNONYM_TYPE } else { FSN_TYPE };
                desc(5_000_000 + i, 100_000 + i, ty, &format!("C{i} (finding)"))
            })
            .collect();
        let (kept, report) = drop_incomplete(build_composites(&concepts, &descriptions, &[], FSN_TYPE), None);
        assert_eq!(kept.len(), 93);
        let mut dropped: Vec<u64> = report.dropped.iter().map(|d| d.concept_id.get() - 100_000).collect();
        dropped.sort();
        defects.sort();
        assert_eq!(dropped, defects);

        // every term is accounted for exactly once
        let mut seen: Vec<String> = kept.iter().flat_map(|c| std::iter::once(c.fsn.clone()).chain(c.synonyms.clone())).collect();
        seen.extend(report.dropped.iter().flat_map(|d| d.terms.clone()));
        seen.sort();
        let mut all: Vec<String> = descriptions.iter().map(|d| d.term.clone()).collect();
        all.sort();
        assert_eq!(seen, all);
    }

    #[test]
    fn reintegration_matches_hash_set_union() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rf2: Vec<RelationshipRow> = (0..300)
            .map(|i| rel(200_000 + i, 100_000 + rng.gen_range(0..30), id(100_000 + rng.gen_range(0..5)), 100_000 + rng.gen_range(0..30)))
            .collect();
        let axioms: Vec<SourcedAxiomTriple> = (0..300)
            .map(|i| SourcedAxiomTriple {
                triple: AxiomTriple {
                    source_id: id(100_000 + rng.gen_range(0..30)),
                    type_id: id(100_000 + rng.gen_range(0..5)),
                    destination_id: id(100_000 + rng.gen_range(0..30)),
                    relationship_group: rng.gen_range(0..2),
                },
                axiom_id: id(900_000 + i),
                effective_time: t(20200101),
                module_id: CORE_MODULE,
            })
            .collect();
        let merged = reintegrate_axioms(&axioms, rf2.clone());
        let expected: HashSet<Triple> = rf2.iter().map(|r| r.triple()).chain(axioms.iter().map(|a| a.triple.triple())).collect();
        let got: HashSet<Triple> = merged.iter().map(|r| r.triple()).collect();
        assert_eq!(got, expected);
        assert_eq!(&merged[..rf2.len()], &rf2[..]);
        let synthetic: Vec<&RelationshipRow> = merged[rf2.len()..].iter().collect();
        let distinct: HashSet<Triple> = synthetic.iter().map(|r| r.triple()).collect();
        assert_eq!(distinct.len(), synthetic.len());
    }
}
