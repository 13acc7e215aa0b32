//! Reading RF2 release files and OWL class axioms.

mod owl;
mod release;
mod rf2_file;

pub use owl::{axiom_triples, parse_owl_axiom, parse_owl_axiom_default, AxiomFailure, OwlError, OwlErrorKind};
pub use release::{discover, parallel_parse, parse_file_chunked, ParsedRelease, ReleaseFiles};
pub use rf2_file::{
    parse_axiom_file, parse_concept_file, parse_description_file, parse_file, parse_line, parse_relationship_file, write_file,
    LineError, ParseError, ParseReport, Rf2Reader, Rf2Record, RowStream,
};
