//! A parser for the subset of OWL functional syntax used by SNOMED CT class axioms.
//!
//! Supported: `SubClassOf`, `EquivalentClasses` (read left to right),
//! `ObjectIntersectionOf` and `ObjectSomeValuesFrom`, with role groups expressed
//! as existentials over the role-group property.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::rf2::well_known::{IS_A, ROLE_GROUP};
use crate::rf2::{AxiomRow, AxiomTriple, SctId, SourcedAxiomTriple};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum OwlErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    Expected(&'static str),
    UnsupportedConstruct(String),
    BadIdentifier(String),
    SubjectMismatch { expected: SctId, found: SctId },
    TrailingInput,
}

impl fmt::Display for OwlErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OwlErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            OwlErrorKind::UnexpectedEnd => f.write_str("unexpected end of expression"),
            OwlErrorKind::Expected(what) => write!(f, "expected {what}"),
            OwlErrorKind::UnsupportedConstruct(name) => write!(f, "unsupported construct `{name}`"),
            OwlErrorKind::BadIdentifier(text) => write!(f, "invalid concept reference `{text}`"),
            OwlErrorKind::SubjectMismatch { expected, found } => {
                write!(f, "axiom subject {found} does not match referenced component {expected}")
            }
            OwlErrorKind::TrailingInput => f.write_str("trailing input after axiom"),
        }
    }
}

/// An expression-level error; `offset` is the byte position in the expression.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("at offset {offset}: {kind}")]
pub struct OwlError {
    pub offset: usize,
    pub kind: OwlErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Word(&'a str),
    Iri(&'a str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok<'_>)>, OwlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b'<' => {
                let end = text[i..].find('>').ok_or(OwlError { offset: i, kind: OwlErrorKind::UnexpectedEnd })?;
                out.push((i, Tok::Iri(&text[i + 1..i + end])));
                i += end + 1;
            }
            _ if c.is_ascii_alphanumeric() || c == b':' || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b':' || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Word(&text[start..i])));
            }
            _ => {
                let ch = text[i..].chars().next().expect("in bounds");
                return Err(OwlError { offset: i, kind: OwlErrorKind::UnexpectedChar(ch) });
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum ClassExpr {
    Named(SctId, usize),
    And(Vec<ClassExpr>),
    Some(SctId, Box<ClassExpr>, usize),
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    len: usize,
}

const IRI_PREFIX: &str = "http://snomed.info/id/";

impl<'a> Parser<'a> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn err<T>(&self, kind: OwlErrorKind) -> Result<T, OwlError> {
        Err(OwlError { offset: self.offset(), kind })
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn expect(&mut self, want: Tok<'static>, what: &'static str) -> Result<(), OwlError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.err(OwlErrorKind::Expected(what)),
            None => self.err(OwlErrorKind::UnexpectedEnd),
        }
    }

    fn parse_id(&self, text: &str) -> Result<SctId, OwlError> {
        let digits = text.strip_prefix(':').or_else(|| text.strip_prefix(IRI_PREFIX)).unwrap_or(text);
        digits.parse().map_err(|_| OwlError { offset: self.offset(), kind: OwlErrorKind::BadIdentifier(text.to_string()) })
    }

    /// An entity reference: `:123`, `<http://snomed.info/id/123>` or `123`.
    fn entity(&mut self) -> Result<SctId, OwlError> {
        let id = match self.peek() {
            Some(Tok::Word(w)) if w.starts_with(':') || w.bytes().all(|b| b.is_ascii_digit()) => self.parse_id(w)?,
            Some(Tok::Iri(iri)) => {
                if !iri.starts_with(IRI_PREFIX) {
                    return self.err(OwlErrorKind::BadIdentifier(format!("<{iri}>")));
                }
                self.parse_id(iri)?
            }
            Some(Tok::Word(w)) => return self.err(OwlErrorKind::BadIdentifier(w.to_string())),
            Some(_) => return self.err(OwlErrorKind::Expected("concept reference")),
            None => return self.err(OwlErrorKind::UnexpectedEnd),
        };
        self.pos += 1;
        Ok(id)
    }

    fn keyword(&self) -> Option<&'a str> {
        match (self.toks.get(self.pos), self.toks.get(self.pos + 1)) {
            (Some((_, Tok::Word(w))), Some((_, Tok::Open))) => Some(w),
            _ => None,
        }
    }

    fn class_expr(&mut self) -> Result<ClassExpr, OwlError> {
        let at = self.offset();
        let Some(kw) = self.keyword() else {
            return Ok(ClassExpr::Named(self.entity()?, at));
        };
        match kw {
            "ObjectIntersectionOf" => {
                self.pos += 2;
                let mut parts = Vec::new();
                while !matches!(self.peek(), Some(Tok::Close) | None) {
                    parts.push(self.class_expr()?);
                }
                self.expect(Tok::Close, "`)`")?;
                if parts.len() < 2 {
                    return Err(OwlError { offset: at, kind: OwlErrorKind::Expected("two or more intersection operands") });
                }
                Ok(ClassExpr::And(parts))
            }
            "ObjectSomeValuesFrom" => {
                self.pos += 2;
                if self.keyword().is_some() {
                    return self.err(OwlErrorKind::UnsupportedConstruct("complex property expression".into()));
                }
                let property = self.entity()?;
                let filler = self.class_expr()?;
                self.expect(Tok::Close, "`)`")?;
                Ok(ClassExpr::Some(property, Box::new(filler), at))
            }
            other => self.err(OwlErrorKind::UnsupportedConstruct(other.to_string())),
        }
    }
}

fn flatten(
    source: SctId,
    expr: &ClassExpr,
    group: u32,
    in_group: bool,
    next_group: &mut u32,
    role_group: SctId,
    out: &mut Vec<AxiomTriple>,
) -> Result<(), OwlError> {
    match expr {
        ClassExpr::Named(parent, _) if !in_group => {
            out.push(AxiomTriple { source_id: source, type_id: IS_A, destination_id: *parent, relationship_group: 0 });
        }
        ClassExpr::Named(_, at) => {
            // A named class inside a role group has no relationship reading.
            return Err(OwlError { offset: *at, kind: OwlErrorKind::UnsupportedConstruct("named class in role group".into()) });
        }
        ClassExpr::And(parts) => {
            for part in parts {
                flatten(source, part, group, in_group, next_group, role_group, out)?;
            }
        }
        ClassExpr::Some(property, filler, at) if *property == role_group => {
            if in_group {
                return Err(OwlError { offset: *at, kind: OwlErrorKind::UnsupportedConstruct("nested role group".into()) });
            }
            let g = *next_group;
            *next_group += 1;
            flatten(source, filler, g, true, next_group, role_group, out)?;
        }
        ClassExpr::Some(property, filler, at) => match **filler {
            ClassExpr::Named(dest, _) => {
                out.push(AxiomTriple { source_id: source, type_id: *property, destination_id: dest, relationship_group: group })
            }
            _ => return Err(OwlError { offset: *at, kind: OwlErrorKind::UnsupportedConstruct("nested existential".into()) }),
        },
    }
    Ok(())
}

/// Extracts relationship triples from one class axiom.
///
/// `referenced` must be the named class on the left-hand side. Role groups
/// (existentials over `role_group`) are numbered from 1 in order of
/// appearance; ungrouped attributes get group 0.
///
/// ```
/// use snomed_kg::parser::parse_owl_axiom;
/// use snomed_kg::rf2::{well_known::ROLE_GROUP, SctId};
///
/// let triples = parse_owl_axiom("SubClassOf(:123 :789)", SctId::from_const(123), ROLE_GROUP).unwrap();
/// assert_eq!(triples[0].type_id.get(), 116680003);
/// assert_eq!(triples[0].destination_id.get(), 789);
/// ```
pub fn parse_owl_axiom(expression: &str, referenced: SctId, role_group: SctId) -> Result<Vec<AxiomTriple>, OwlError> {
    let toks = tokenize(expression)?;
    let mut p = Parser { toks, pos: 0, len: expression.len() };
    let Some(kw) = p.keyword() else {
        return p.err(OwlErrorKind::Expected("axiom"));
    };
    if kw != "SubClassOf" && kw != "EquivalentClasses" {
        return p.err(OwlErrorKind::UnsupportedConstruct(kw.to_string()));
    }
    p.pos += 2;
    let subject_at = p.offset();
    let subject = match p.class_expr()? {
        ClassExpr::Named(id, _) => id,
        _ => return Err(OwlError { offset: subject_at, kind: OwlErrorKind::Expected("named class as axiom subject") }),
    };
    if subject != referenced {
        return Err(OwlError { offset: subject_at, kind: OwlErrorKind::SubjectMismatch { expected: referenced, found: subject } });
    }
    let definition = p.class_expr()?;
    p.expect(Tok::Close, "`)`")?;
    if p.pos != p.toks.len() {
        return p.err(OwlErrorKind::TrailingInput);
    }
    let mut out = Vec::new();
    let mut next_group = 1;
    flatten(subject, &definition, 0, false, &mut next_group, role_group, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomFailure {
    pub axiom_id: SctId,
    pub error: OwlError,
}

/// Parses every active axiom row, keeping the row's versioning data with each triple.
pub fn axiom_triples(rows: &[AxiomRow], role_group: SctId) -> (Vec<SourcedAxiomTriple>, Vec<AxiomFailure>) {
    let mut triples = Vec::new();
    let mut failures = Vec::new();
    for row in rows.iter().filter(|r| r.active) {
        match parse_owl_axiom(&row.owl_expression, row.referenced_component_id, role_group) {
            Ok(found) => triples.extend(found.into_iter().map(|triple| SourcedAxiomTriple {
                triple,
                axiom_id: row.id,
                effective_time: row.effective_time,
                module_id: row.module_id,
            })),
            Err(error) => failures.push(AxiomFailure { axiom_id: row.id, error }),
        }
    }
    (triples, failures)
}

/// Parses with the default role-group property.
pub fn parse_owl_axiom_default(expression: &str, referenced: SctId) -> Result<Vec<AxiomTriple>, OwlError> {
    parse_owl_axiom(expression, referenced, ROLE_GROUP)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::rf2::well_known::FINDING_SITE;

    fn id(v: u64) -> SctId {
        SctId::new(v).unwrap()
    }
    fn tr(s: u64, t: SctId, d: u64, g: u32) -> AxiomTriple {
        AxiomTriple { source_id: id(s), type_id: t, destination_id: id(d), relationship_group: g }
    }

    #[test]
    fn simple_subclass() {
        assert_eq!(parse_owl_axiom_default("SubClassOf(:123 :789)", id(123)).unwrap(), vec![tr(123, IS_A, 789, 0)]);
    }

    #[test]
    fn intersection_with_existential() {
        let got = parse_owl_axiom_default(
            "SubClassOf(:123 ObjectIntersectionOf(:789 ObjectSomeValuesFrom(:363698007 :456)))",
            id(123),
        )
        .unwrap();
        assert_eq!(got, vec![tr(123, IS_A, 789, 0), tr(123, FINDING_SITE, 456, 0)]);
    }

    #[test]
    fn role_groups_are_numbered() {
        let expr = "EquivalentClasses(:123 ObjectIntersectionOf(:789 \
            ObjectSomeValuesFrom(:609096000 ObjectIntersectionOf(ObjectSomeValuesFrom(:363698007 :456) ObjectSomeValuesFrom(:246075003 :555))) \
            ObjectSomeValuesFrom(:609096000 ObjectSomeValuesFrom(:363698007 :457))))";
        let got = parse_owl_axiom_default(expr, id(123)).unwrap();
        assert_eq!(
            got,
            vec![
                tr(123, IS_A, 789, 0),
                tr(123, FINDING_SITE, 456, 1),
                tr(123, crate::rf2::well_known::CAUSATIVE_AGENT, 555, 1),
                tr(123, FINDING_SITE, 457, 2)
            ]
        );
    }

    #[test]
    fn identifier_forms() {
        let a = parse_owl_axiom_default("SubClassOf(<http://snomed.info/id/123> 789)", id(123)).unwrap();
        assert_eq!(a, vec![tr(123, IS_A, 789, 0)]);
        let err = parse_owl_axiom_default("SubClassOf(:123 <http://example.org/789>)", id(123)).unwrap_err();
        assert!(matches!(err.kind, OwlErrorKind::BadIdentifier(_)));
        let err = parse_owl_axiom_default("SubClassOf(:123 :0789)", id(123)).unwrap_err();
        assert_eq!(err.offset, 16);
        let err = parse_owl_axiom_default("SubClassOf(:123 :1234567890123456789)", id(123)).unwrap_err();
        assert!(matches!(err.kind, OwlErrorKind::BadIdentifier(_)));
    }

    #[test]
    fn unsupported_constructs() {
        let err = parse_owl_axiom_default("ObjectPropertyChain(:1 :2)", id(123)).unwrap_err();
        assert_eq!(err.kind, OwlErrorKind::UnsupportedConstruct("ObjectPropertyChain".into()));
        assert_eq!(err.offset, 0);
        let err = parse_owl_axiom_default("SubClassOf(:123 ObjectUnionOf(:1 :2))", id(123)).unwrap_err();
        assert_eq!(err.offset, 16);
        let err = parse_owl_axiom_default("SubObjectPropertyOf(:1 :2)", id(1)).unwrap_err();
        assert!(matches!(err.kind, OwlErrorKind::UnsupportedConstruct(_)));
    }

    #[test]
    fn malformed_expressions() {
        for bad in ["", "SubClassOf(:123", "SubClassOf(:123 :789", "SubClassOf(:123 :789))", "SubClassOf(:123 :789) x", "SubClassOf(:123 #)"] {
            assert!(parse_owl_axiom_default(bad, id(123)).is_err(), "{bad}");
        }
        let err = parse_owl_axiom_default("SubClassOf(:124 :789)", id(123)).unwrap_err();
        assert!(matches!(err.kind, OwlErrorKind::SubjectMismatch { .. }));
    }

    proptest! {
        /// Every emitted type id either appears in the expression or is Is-a.
        #[test]
        fn type_ids_come_from_the_expression(parents in prop::collection::vec(100_000u64..100_100, 1..3),
                                             attrs in prop::collection::vec((200_000u64..200_050, 300_000u64..300_050, 0u8..3), 0..6)) {
            let mut parts: Vec<String> = parents.iter().map(|p| format!(":{p}")).collect();
            for (ty, dest, grouped) in &attrs {
                let inner = format!("ObjectSomeValuesFrom(:{ty} :{dest})");
                parts.push(if *grouped > 0 { format!("ObjectSomeValuesFrom(:609096000 {inner})") } else { inner });
            }
            let body = if parts.len() == 1 { parts[0].clone() } else { format!("ObjectIntersectionOf({})", parts.join(" ")) };
            let expr = format!("SubClassOf(:999999 {body})");
            let triples = parse_owl_axiom_default(&expr, id(999_999)).unwrap();
            prop_assert_eq!(triples.len(), parents.len() + attrs.len());
            for t in &triples {
                let mentioned = expr.contains(&format!(":{}", t.type_id));
                prop_assert!(t.type_id == IS_A || mentioned);
                prop_assert!(t.type_id != ROLE_GROUP);
            }
        }

        #[test]
        fn arbitrary_text_never_panics(text in "\\PC{0,60}") {
            let _ = parse_owl_axiom_default(&text, id(123));
        }
    }
}
