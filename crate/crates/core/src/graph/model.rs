//! Node and edge records and relationship-type naming.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rf2::well_known::{CAUSATIVE_AGENT, FINDING_SITE, INDICATED_FOR, IS_A};
use crate::rf2::{CompositeConcept, RelationshipRow, SctId, NO_CATEGORY};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub concept_id: SctId,
    pub name: String,
    pub category: String,
    pub synonyms: BTreeSet<String>,
    pub placeholder: bool,
}

impl NodeRecord {
    pub fn new(concept_id: SctId, name: impl Into<String>, category: impl Into<String>) -> Self {
        NodeRecord { concept_id, name: name.into(), category: category.into(), synonyms: BTreeSet::new(), placeholder: false }
    }

    /// A stand-in for a concept referenced before its data is loaded.
    pub fn placeholder(concept_id: SctId) -> Self {
        NodeRecord {
            concept_id,
            name: concept_id.to_string(),
            category: NO_CATEGORY.to_string(),
            synonyms: BTreeSet::new(),
            placeholder: true,
        }
    }

    pub fn from_composite(c: &CompositeConcept) -> Self {
        NodeRecord {
            concept_id: c.concept_id,
            name: c.term.clone(),
            category: c.category.clone(),
            synonyms: c.synonyms.iter().cloned().collect(),
            placeholder: false,
        }
    }

    pub fn with_synonyms<I: IntoIterator<Item = S>, S: Into<String>>(mut self, synonyms: I) -> Self {
        self.synonyms.extend(synonyms.into_iter().map(Into::into));
        self
    }

    /// Merges `incoming` into `self`: synonyms are unioned, and real data
    /// replaces name and category and clears the placeholder flag.
    pub fn merge(&mut self, incoming: &NodeRecord) {
        self.synonyms.extend(incoming.synonyms.iter().cloned());
        if !incoming.placeholder {
            self.name.clone_from(&incoming.name);
            self.category.clone_from(&incoming.category);
            self.placeholder = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub relationship_id: SctId,
    pub source_id: SctId,
    pub destination_id: SctId,
    pub type_id: SctId,
    pub type_name: String,
    pub relationship_group: u32,
}

impl EdgeRecord {
    pub fn from_relationship(row: &RelationshipRow, names: &TypeNames) -> Self {
        EdgeRecord {
            relationship_id: row.id,
            source_id: row.source_id,
            destination_id: row.destination_id,
            type_id: row.type_id,
            type_name: names.type_name(row.type_id),
            relationship_group: row.relationship_group,
        }
    }

    pub fn triple(&self) -> crate::rf2::Triple {
        crate::rf2::Triple { source_id: self.source_id, type_id: self.type_id, destination_id: self.destination_id }
    }
}

#[derive(Debug, Error)]
pub enum AliasError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },
}

/// Clinical link names for relationship types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasTable(pub BTreeMap<SctId, String>);

#[derive(Serialize, Deserialize)]
struct AliasFile {
    aliases: BTreeMap<String, String>,
}

impl Default for AliasTable {
    fn default() -> Self {
        AliasTable(BTreeMap::from([
            (CAUSATIVE_AGENT, "caused by".to_string()),
            (INDICATED_FOR, "treats".to_string()),
            (IS_A, "Is a".to_string()),
            (FINDING_SITE, "Finding site".to_string()),
        ]))
    }
}

impl AliasTable {
    pub fn get(&self, type_id: SctId) -> Option<&str> {
        self.0.get(&type_id).map(String::as_str)
    }

    /// Adds or overrides entries from a TOML file with an `[aliases]` table
    /// mapping type ids to names.
    pub fn extend_from_file(&mut self, path: &Path) -> Result<(), AliasError> {
        let text = std::fs::read_to_string(path).map_err(|source| AliasError::Io { path: path.display().to_string(), source })?;
        self.extend_from_toml(&text).map_err(|detail| AliasError::Parse { path: path.display().to_string(), detail })
    }

    pub fn extend_from_toml(&mut self, text: &str) -> Result<(), String> {
        let file: AliasFile = toml::from_str(text).map_err(|e| e.to_string())?;
        for (id, name) in file.aliases {
            let id: SctId = id.parse().map_err(|e| format!("alias key `{id}`: {e}"))?;
            self.0.insert(id, name);
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let file = AliasFile { aliases: self.0.iter().map(|(k, v)| (k.to_string(), v.clone())).collect() };
        toml::to_string(&file).expect("alias table serializes")
    }
}

/// Resolves a relationship type id to the name stored on edges: the FSN term
/// of the type concept, else its alias, else the id itself.
#[derive(Debug, Clone, Default)]
pub struct TypeNames {
    pub fsn_terms: HashMap<SctId, String>,
    pub aliases: AliasTable,
}

impl TypeNames {
    pub fn new(composites: &[CompositeConcept], aliases: AliasTable) -> Self {
        TypeNames { fsn_terms: composites.iter().map(|c| (c.concept_id, c.term.clone())).collect(), aliases }
    }

    pub fn type_name(&self, type_id: SctId) -> String {
        self.fsn_terms
            .get(&type_id)
            .cloned()
            .or_else(|| self.aliases.get(type_id).map(str::to_string))
            .unwrap_or_else(|| type_id.to_string())
    }

    /// The label used between hops of a rendered path: alias first.
    pub fn link_label(&self, type_id: SctId, type_name: &str) -> String {
        self.aliases.get(type_id).map_or_else(|| type_name.to_string(), str::to_string)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_rules() {
        let id = SctId::from_const(456);
        let mut node = NodeRecord::placeholder(id);
        node.merge(&NodeRecord::new(id, "Structure of endocrine system", "body structure"));
        assert!(!node.placeholder);
        assert_eq!(node.name, "Structure of endocrine system");
        node.merge(&NodeRecord::placeholder(id).with_synonyms(["endocrine"]));
        assert_eq!(node.name, "Structure of endocrine system");
        assert!(node.synonyms.contains("endocrine"));
    }

    #[test]
    fn alias_table_from_toml() {
        let mut table = AliasTable::default();
        assert_eq!(table.get(CAUSATIVE_AGENT), Some("caused by"));
        table.extend_from_toml("[aliases]\n\"900001\" = \"causes\"\n116680003 = \"is a\"\n").unwrap();
        assert_eq!(table.get(SctId::from_const(900001)), Some("causes"));
        assert_eq!(table.get(IS_A), Some("is a"));
        let round = {
            let mut t = AliasTable(BTreeMap::new());
            t.extend_from_toml(&table.to_toml()).unwrap();
            t
        };
        assert_eq!(round, table);
        assert!(table.extend_from_toml("[aliases]\nabc = \"x\"\n").is_err());
    }

    #[test]
    fn type_name_resolution_order() {
        let mut names = TypeNames::default();
        assert_eq!(names.type_name(CAUSATIVE_AGENT), "caused by");
        assert_eq!(names.type_name(SctId::from_const(999999)), "999999");
        names.fsn_terms.insert(CAUSATIVE_AGENT, "Causative agent".into());
        assert_eq!(names.type_name(CAUSATIVE_AGENT), "Causative agent");
        assert_eq!(names.link_label(CAUSATIVE_AGENT, "Causative agent"), "caused by");
        assert_eq!(names.link_label(SctId::from_const(999999), "whatever"), "whatever");
    }
}
