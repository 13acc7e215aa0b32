//! Identifier, date and row types for the four RF2 component files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest identifier representable in 18 decimal digits.
const SCTID_MAX: u64 = 999_999_999_999_999_999;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier `{0}` is not a decimal integer")]
    NotNumeric(String),
    #[error("identifier `{0}` has a leading zero")]
    LeadingZero(String),
    #[error("identifier must be positive")]
    Zero,
    #[error("identifier `{0}` exceeds 18 digits")]
    TooLong(String),
}

/// A SNOMED CT component identifier.
///
/// Identifiers are opaque positive integers of at most 18 decimal digits.
/// Check digits are not verified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct SctId(u64);

impl SctId {
    pub fn new(value: u64) -> Result<Self, IdError> {
        if value == 0 {
            Err(IdError::Zero)
        } else if value > SCTID_MAX {
            Err(IdError::TooLong(value.to_string()))
        } else {
            Ok(SctId(value))
        }
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    /// Whether the identifier has the 6 to 18 digits of a published SCTID.
    pub fn has_standard_length(self) -> bool {
        self.0 >= 100_000
    }

    /// Builds an identifier from a compile-time constant.
    ///
    /// Panics if `value` is zero or longer than 18 digits.
    pub const fn from_const(value: u64) -> Self {
        assert!(value > 0 && value <= SCTID_MAX);
        SctId(value)
    }
}

impl TryFrom<u64> for SctId {
    type Error = IdError;
    fn try_from(value: u64) -> Result<Self, Self::Error> {
        SctId::new(value)
    }
}

impl From<SctId> for u64 {
    fn from(id: SctId) -> u64 {
        id.0
    }
}

impl FromStr for SctId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(IdError::Empty);
        }
        if !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IdError::NotNumeric(s.to_string()));
        }
        if s.len() > 18 {
            return Err(IdError::TooLong(s.to_string()));
        }
        if s.starts_with('0') {
            return Err(if s.len() == 1 { IdError::Zero } else { IdError::LeadingZero(s.to_string()) });
        }
        // at most 18 digits always fits in u64
        SctId::new(s.parse().expect("digit string of length <= 18"))
    }
}

impl fmt::Display for SctId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid effectiveTime `{0}`: expected a calendar date as yyyymmdd")]
pub struct DateError(pub String);

/// An RF2 `effectiveTime`, a calendar date compared as a yyyymmdd integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct EffectiveTime(u32);

impl EffectiveTime {
    pub fn new(yyyymmdd: u32) -> Result<Self, DateError> {
        let (y, m, d) = (yyyymmdd / 10_000, (yyyymmdd / 100) % 100, yyyymmdd % 100);
        if !(1000..=9999).contains(&y) || chrono::NaiveDate::from_ymd_opt(y as i32, m, d).is_none() {
            return Err(DateError(yyyymmdd.to_string()));
        }
        Ok(EffectiveTime(yyyymmdd))
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for EffectiveTime {
    type Error = DateError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        EffectiveTime::new(value)
    }
}

impl From<EffectiveTime> for u32 {
    fn from(t: EffectiveTime) -> u32 {
        t.0
    }
}

impl FromStr for EffectiveTime {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DateError(s.to_string()));
        }
        EffectiveTime::new(s.parse().map_err(|_| DateError(s.to_string()))?)
    }
}

impl fmt::Display for EffectiveTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08}", self.0)
    }
}

/// Common view over versioned RF2 rows used by snapshot resolution.
pub trait Versioned {
    fn component_id(&self) -> SctId;
    fn effective_time(&self) -> EffectiveTime;
    fn is_active(&self) -> bool;
}

macro_rules! versioned {
    ($ty:ty) => {
        impl Versioned for $ty {
            fn component_id(&self) -> SctId {
                self.id
            }
            fn effective_time(&self) -> EffectiveTime {
                self.effective_time
            }
            fn is_active(&self) -> bool {
                self.active
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConceptRow {
    pub id: SctId,
    pub effective_time: EffectiveTime,
    pub active: bool,
    pub module_id: SctId,
    pub definition_status_id: SctId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DescriptionRow {
    pub id: SctId,
    pub effective_time: EffectiveTime,
    pub active: bool,
    pub module_id: SctId,
    pub concept_id: SctId,
    pub language_code: String,
    pub type_id: SctId,
    pub term: String,
    pub case_significance_id: SctId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationshipRow {
    pub id: SctId,
    pub effective_time: EffectiveTime,
    pub active: bool,
    pub module_id: SctId,
    pub source_id: SctId,
    pub destination_id: SctId,
    pub relationship_group: u32,
    pub type_id: SctId,
    pub characteristic_type_id: SctId,
    pub modifier_id: SctId,
}

impl RelationshipRow {
    pub fn triple(&self) -> Triple {
        Triple { source_id: self.source_id, type_id: self.type_id, destination_id: self.destination_id }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AxiomRow {
    pub id: SctId,
    pub effective_time: EffectiveTime,
    pub active: bool,
    pub module_id: SctId,
    pub refset_id: SctId,
    pub referenced_component_id: SctId,
    pub owl_expression: String,
}

versioned!(ConceptRow);
versioned!(DescriptionRow);
versioned!(RelationshipRow);
versioned!(AxiomRow);

/// The identity of a relationship for redundancy purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub source_id: SctId,
    pub type_id: SctId,
    pub destination_id: SctId,
}

/// A relationship recovered from an OWL class axiom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AxiomTriple {
    pub source_id: SctId,
    pub type_id: SctId,
    pub destination_id: SctId,
    pub relationship_group: u32,
}

impl AxiomTriple {
    pub fn triple(&self) -> Triple {
        Triple { source_id: self.source_id, type_id: self.type_id, destination_id: self.destination_id }
    }
}

/// An axiom triple together with the versioning data of the axiom row it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcedAxiomTriple {
    pub triple: AxiomTriple,
    pub axiom_id: SctId,
    pub effective_time: EffectiveTime,
    pub module_id: SctId,
}
