//! JSON shapes exchanged with a Snowstorm-style server and their mapping onto RF2 rows.
//!
//! Field names follow Snowstorm's browser API. Identifiers and dates may be
//! sent as strings or numbers; unknown fields are ignored.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::rf2::well_known::{CASE_INSENSITIVE, CORE_MODULE, EXISTENTIAL_MODIFIER, FULLY_DEFINED, INFERRED_RELATIONSHIP, PRIMITIVE};
use crate::rf2::{ConceptRow, DescriptionRow, EffectiveTime, RelationshipRow, SctId};

#[derive(Deserialize)]
#[serde(untagged)]
enum StrOrNum {
    Str(String),
    Num(u64),
}

impl StrOrNum {
    fn text(self) -> String {
        match self {
            StrOrNum::Str(s) => s,
            StrOrNum::Num(n) => n.to_string(),
        }
    }
}

fn de_id<'de, D: Deserializer<'de>>(d: D) -> Result<SctId, D::Error> {
    StrOrNum::deserialize(d)?.text().parse().map_err(de::Error::custom)
}

fn de_opt_id<'de, D: Deserializer<'de>>(d: D) -> Result<Option<SctId>, D::Error> {
    Option::<StrOrNum>::deserialize(d)?.map(|v| v.text().parse().map_err(de::Error::custom)).transpose()
}

fn de_time<'de, D: Deserializer<'de>>(d: D) -> Result<EffectiveTime, D::Error> {
    StrOrNum::deserialize(d)?.text().parse().map_err(de::Error::custom)
}

fn ser_id<S: serde::Serializer>(id: &SctId, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&id.to_string())
}

fn ser_time<S: serde::Serializer>(t: &EffectiveTime, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

fn default_module() -> SctId {
    CORE_MODULE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConceptPayload {
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub concept_id: SctId,
    #[serde(deserialize_with = "de_time", serialize_with = "ser_time")]
    pub effective_time: EffectiveTime,
    pub active: bool,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id", default = "default_module")]
    pub module_id: SctId,
    #[serde(default, deserialize_with = "de_opt_id", skip_serializing_if = "Option::is_none")]
    pub definition_status_id: Option<SctId>,
    /// Snowstorm's symbolic form, `PRIMITIVE` or `FULLY_DEFINED`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition_status: Option<String>,
}

impl ConceptPayload {
    pub fn into_row(self) -> Result<ConceptRow, String> {
        let definition_status_id = match (self.definition_status_id, self.definition_status.as_deref()) {
            (Some(id), _) => id,
            (None, Some("PRIMITIVE")) => PRIMITIVE,
            (None, Some("FULLY_DEFINED")) => FULLY_DEFINED,
            (None, other) => return Err(format!("concept {}: unknown definition status {other:?}", self.concept_id)),
        };
        Ok(ConceptRow {
            id: self.concept_id,
            effective_time: self.effective_time,
            active: self.active,
            module_id: self.module_id,
            definition_status_id,
        })
    }

    pub fn from_row(row: &ConceptRow) -> Self {
        ConceptPayload {
            concept_id: row.id,
            effective_time: row.effective_time,
            active: row.active,
            module_id: row.module_id,
            definition_status_id: Some(row.definition_status_id),
            definition_status: None,
        }
    }
}

fn default_case() -> SctId {
    CASE_INSENSITIVE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DescriptionPayload {
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub description_id: SctId,
    #[serde(deserialize_with = "de_time", serialize_with = "ser_time")]
    pub effective_time: EffectiveTime,
    pub active: bool,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id", default = "default_module")]
    pub module_id: SctId,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub concept_id: SctId,
    #[serde(alias = "languageCode")]
    pub lang: String,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub type_id: SctId,
    pub term: String,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id", default = "default_case")]
    pub case_significance_id: SctId,
}

impl DescriptionPayload {
    pub fn into_row(self) -> DescriptionRow {
        DescriptionRow {
            id: self.description_id,
            effective_time: self.effective_time,
            active: self.active,
            module_id: self.module_id,
            concept_id: self.concept_id,
            language_code: self.lang,
            type_id: self.type_id,
            term: self.term,
            case_significance_id: self.case_significance_id,
        }
    }

    pub fn from_row(row: &DescriptionRow) -> Self {
        DescriptionPayload {
            description_id: row.id,
            effective_time: row.effective_time,
            active: row.active,
            module_id: row.module_id,
            concept_id: row.concept_id,
            lang: row.language_code.clone(),
            type_id: row.type_id,
            term: row.term.clone(),
            case_significance_id: row.case_significance_id,
        }
    }
}

fn default_characteristic() -> SctId {
    INFERRED_RELATIONSHIP
}

fn default_modifier() -> SctId {
    EXISTENTIAL_MODIFIER
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationshipPayload {
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub relationship_id: SctId,
    #[serde(deserialize_with = "de_time", serialize_with = "ser_time")]
    pub effective_time: EffectiveTime,
    pub active: bool,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id", default = "default_module")]
    pub module_id: SctId,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub source_id: SctId,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub destination_id: SctId,
    #[serde(alias = "relationshipGroup", default)]
    pub group_id: u32,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id")]
    pub type_id: SctId,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id", default = "default_characteristic")]
    pub characteristic_type_id: SctId,
    #[serde(deserialize_with = "de_id", serialize_with = "ser_id", default = "default_modifier")]
    pub modifier_id: SctId,
}

impl RelationshipPayload {
    pub fn into_row(self) -> RelationshipRow {
        RelationshipRow {
            id: self.relationship_id,
            effective_time: self.effective_time,
            active: self.active,
            module_id: self.module_id,
            source_id: self.source_id,
            destination_id: self.destination_id,
            relationship_group: self.group_id,
            type_id: self.type_id,
            characteristic_type_id: self.characteristic_type_id,
            modifier_id: self.modifier_id,
        }
    }

    pub fn from_row(row: &RelationshipRow) -> Self {
        RelationshipPayload {
            relationship_id: row.id,
            effective_time: row.effective_time,
            active: row.active,
            module_id: row.module_id,
            source_id: row.source_id,
            destination_id: row.destination_id,
            group_id: row.relationship_group,
            type_id: row.type_id,
            characteristic_type_id: row.characteristic_type_id,
            modifier_id: row.modifier_id,
        }
    }
}

/// One page of a paginated listing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub total: usize,
    #[serde(default)]
    pub limit: usize,
    #[serde(default)]
    pub offset: usize,
}

/// A concept with its descriptions and outgoing relationships.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptBundle {
    pub concept: ConceptRow,
    pub descriptions: Vec<DescriptionRow>,
    pub relationships: Vec<RelationshipRow>,
}

/// The stub server's on-disk document: `<id>.json` in the fixture directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StubDocument {
    pub concept: ConceptPayload,
    #[serde(default)]
    pub descriptions: Vec<DescriptionPayload>,
    #[serde(default)]
    pub relationships: Vec<RelationshipPayload>,
}

impl StubDocument {
    pub fn from_bundle(bundle: &ConceptBundle) -> Self {
        StubDocument {
            concept: ConceptPayload::from_row(&bundle.concept),
            descriptions: bundle.descriptions.iter().map(DescriptionPayload::from_row).collect(),
            relationships: bundle.relationships.iter().map(RelationshipPayload::from_row).collect(),
        }
    }
}
