//! Concept identifiers from the public RF2 release that the pipeline relies on.

use super::SctId;

/// `Is a (attribute)`.
pub const IS_A: SctId = SctId::from_const(116_680_003);
/// `Finding site (attribute)`.
pub const FINDING_SITE: SctId = SctId::from_const(363_698_007);
/// `Causative agent (attribute)`.
pub const CAUSATIVE_AGENT: SctId = SctId::from_const(246_075_003);
/// `Indicated for`, aliased as "treats".
pub const INDICATED_FOR: SctId = SctId::from_const(410_662_002);
/// `Role group (attribute)`, the property that wraps grouped attributes in OWL axioms.
pub const ROLE_GROUP: SctId = SctId::from_const(609_096_000);

/// Description type of a fully specified name.
pub const FSN_TYPE: SctId = SctId::from_const(900_000_000_000_003_001);
/// Description type of a synonym.
pub const SYNONYM_TYPE: SctId = SctId::from_const(900_000_000_000_013_009);

pub const CORE_MODULE: SctId = SctId::from_const(900_000_000_000_207_008);
pub const PRIMITIVE: SctId = SctId::from_const(900_000_000_000_074_008);
pub const FULLY_DEFINED: SctId = SctId::from_const(900_000_000_000_073_002);
pub const CASE_INSENSITIVE: SctId = SctId::from_const(900_000_000_000_448_009);
pub const STATED_RELATIONSHIP: SctId = SctId::from_const(900_000_000_000_010_007);
pub const INFERRED_RELATIONSHIP: SctId = SctId::from_const(900_000_000_000_011_006);
pub const EXISTENTIAL_MODIFIER: SctId = SctId::from_const(900_000_000_000_451_002);
pub const OWL_AXIOM_REFSET: SctId = SctId::from_const(733_073_007);

/// First identifier of the range reserved for relationships synthesized from axioms.
pub const SYNTHETIC_RELATIONSHIP_BASE: u64 = 100_000_000_000_000_000;
