//! RDF term model, prefix handling and the Turtle / N-Triples text formats.

mod iso;
pub(crate) mod lexer;
pub mod turtle;
pub mod write;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use turtle::{parse_turtle, parse_turtle_with_base, ParseError, ParseErrorKind};
pub use write::{serialize_ntriples, serialize_turtle, term_to_ntriples};

/// Well-known namespaces and IRIs.
pub mod vocab {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const RR: &str = "http://www.w3.org/ns/r2rml#";
    pub const RML: &str = "http://semweb.mmlab.be/ns/rml#";
    pub const QL: &str = "http://semweb.mmlab.be/ns/ql#";
    pub const D2RQ: &str = "http://www.wiwiss.fu-berlin.de/suhl/bizer/D2RQ/0.1#";
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RdfError {
    #[error("not an absolute IRI: {0:?}")]
    RelativeIri(String),
    #[error("invalid blank node label: {0:?}")]
    InvalidBlankLabel(String),
    #[error("invalid prefix label: {0:?}")]
    InvalidPrefix(String),
    #[error("invalid triple: {0}")]
    InvalidTriple(&'static str),
    #[error("invalid language tag: {0:?}")]
    InvalidLanguage(String),
}

/// Returns true if `iri` starts with a URI scheme followed by `:`.
pub fn is_absolute_iri(iri: &str) -> bool {
    let Some(colon) = iri.find(':') else {
        return false;
    };
    let scheme = &iri[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

fn is_valid_blank_label(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric())
}

/// An RDF literal. Holds either a datatype or a language tag, never both.
///
/// Literals typed `xsd:string` are stored as plain literals, so the two
/// spellings compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    value: String,
    datatype: Option<String>,
    language: Option<String>,
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(value: impl Into<String>, datatype: impl Into<String>) -> Self {
        let datatype = datatype.into();
        if datatype == vocab::XSD_STRING {
            return Literal::plain(value);
        }
        Literal {
            value: value.into(),
            datatype: Some(datatype),
            language: None,
        }
    }

    /// Language tags are normalized to lower case.
    pub fn with_language(value: impl Into<String>, language: &str) -> Result<Self, RdfError> {
        let valid = !language.is_empty()
            && language.split('-').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric())
            })
            && language.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        if !valid {
            return Err(RdfError::InvalidLanguage(language.to_string()));
        }
        Ok(Literal {
            value: value.into(),
            datatype: None,
            language: Some(language.to_ascii_lowercase()),
        })
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn datatype(&self) -> Option<&str> {
        self.datatype.as_deref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn is_plain(&self) -> bool {
        self.datatype.is_none() && self.language.is_none()
    }
}

/// An RDF term: IRI, blank node or literal.
///
/// Variant order gives the canonical sort order used by serializers
/// (IRIs, then blank nodes, then literals).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    /// Builds an IRI term. Panics if `iri` is not absolute; use
    /// [`Term::try_iri`] for untrusted input.
    pub fn iri(iri: impl Into<String>) -> Self {
        let iri = iri.into();
        assert!(is_absolute_iri(&iri), "not an absolute IRI: {iri:?}");
        Term::Iri(iri)
    }

    pub fn try_iri(iri: impl Into<String>) -> Result<Self, RdfError> {
        let iri = iri.into();
        if is_absolute_iri(&iri) {
            Ok(Term::Iri(iri))
        } else {
            Err(RdfError::RelativeIri(iri))
        }
    }

    /// Builds a blank node. Panics on labels outside `[A-Za-z0-9]+`.
    pub fn blank(label: impl Into<String>) -> Self {
        let label = label.into();
        assert!(is_valid_blank_label(&label), "invalid blank label: {label:?}");
        Term::Blank(label)
    }

    pub fn try_blank(label: impl Into<String>) -> Result<Self, RdfError> {
        let label = label.into();
        if is_valid_blank_label(&label) {
            Ok(Term::Blank(label))
        } else {
            Err(RdfError::InvalidBlankLabel(label))
        }
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal(Literal::plain(value))
    }

    pub fn typed_literal(value: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal(Literal::typed(value, datatype))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_to_ntriples(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    /// Panics if the subject is a literal or the predicate is not an IRI.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        match Triple::try_new(subject, predicate, object) {
            Ok(t) => t,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn try_new(subject: Term, predicate: Term, object: Term) -> Result<Self, RdfError> {
        if subject.is_literal() {
            return Err(RdfError::InvalidTriple("subject is a literal"));
        }
        if !predicate.is_iri() {
            return Err(RdfError::InvalidTriple("predicate is not an IRI"));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

pub(crate) fn is_valid_prefix_label(label: &str) -> bool {
    if label.is_empty() {
        return true;
    }
    let mut chars = label.chars();
    let first = chars.next().unwrap();
    if !(first.is_ascii_alphabetic() || (!first.is_ascii() && first.is_alphabetic())) {
        return false;
    }
    !label.ends_with('.')
        && chars.all(|c| {
            c.is_ascii_alphanumeric()
                || matches!(c, '_' | '-' | '.')
                || (!c.is_ascii() && c.is_alphanumeric())
        })
}

/// Prefix label to namespace IRI, ordered by label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixMap {
    entries: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a prefix. Returns the namespace it replaced.
    pub fn insert(
        &mut self,
        label: impl Into<String>,
        namespace: impl Into<String>,
    ) -> Result<Option<String>, RdfError> {
        let label = label.into();
        if !is_valid_prefix_label(&label) {
            return Err(RdfError::InvalidPrefix(label));
        }
        Ok(self.entries.insert(label, namespace.into()))
    }

    pub fn get(&self, label: &str) -> Option<&str> {
        self.entries.get(label).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn expand(&self, label: &str, local: &str) -> Option<String> {
        self.get(label).map(|ns| format!("{ns}{local}"))
    }

    /// Splits `iri` into (label, local) using the longest matching namespace.
    /// Ties on namespace length go to the smallest label.
    pub fn compact<'a>(&'a self, iri: &'a str) -> Option<(&'a str, &'a str)> {
        self.entries
            .iter()
            .filter(|(_, ns)| !ns.is_empty() && iri.starts_with(ns.as_str()))
            .max_by(|(la, a), (lb, b)| a.len().cmp(&b.len()).then(lb.cmp(la)))
            .map(|(label, ns)| (label.as_str(), &iri[ns.len()..]))
    }

    /// Merges `other` into `self`; entries of `other` win on label conflicts.
    pub fn merge(&mut self, other: &PrefixMap) {
        for (label, ns) in &other.entries {
            self.entries.insert(label.clone(), ns.clone());
        }
    }
}

/// A set of triples plus the prefixes used to abbreviate them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    pub prefixes: PrefixMap,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefixes(prefixes: PrefixMap) -> Self {
        Graph {
            triples: BTreeSet::new(),
            prefixes,
        }
    }

    /// Returns false if the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    /// Triples whose subject is `subject`, in canonical order.
    pub fn triples_for_subject<'a>(&'a self, subject: &'a Term) -> impl Iterator<Item = &'a Triple> {
        // smallest possible triple with this subject: the empty IRI sorts first
        let start = Triple {
            subject: subject.clone(),
            predicate: Term::Iri(String::new()),
            object: Term::Iri(String::new()),
        };
        self.triples
            .range(start..)
            .take_while(move |t| &t.subject == subject)
    }

    /// Graph equality up to a bijective renaming of blank nodes.
    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        iso::isomorphic(&self.triples, &other.triples)
    }

    /// The same graph with blank nodes renamed `b0`, `b1`, ... by their
    /// position in the graph's structure rather than by their old labels.
    pub fn with_canonical_blanks(&self) -> Graph {
        if !self.triples.iter().any(|t| t.subject.is_blank() || t.object.is_blank()) {
            return self.clone();
        }
        let labels = iso::canonical_labels(&self.triples);
        let rename = |t: &Term| match t {
            Term::Blank(l) => Term::Blank(labels[l].clone()),
            other => other.clone(),
        };
        let mut out = Graph::with_prefixes(self.prefixes.clone());
        for t in &self.triples {
            out.insert(Triple {
                subject: rename(&t.subject),
                predicate: t.predicate.clone(),
                object: rename(&t.object),
            });
        }
        out
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter);
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph {
            triples: iter.into_iter().collect(),
            prefixes: PrefixMap::new(),
        }
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn absolute_iri_detection() {
        assert!(is_absolute_iri("http://srv.ktbl.de/data/psm/"));
        assert!(is_absolute_iri("urn:x"));
        assert!(is_absolute_iri("file:///tmp/a.ttl#x"));
        assert!(!is_absolute_iri("#TriplesMap1"));
        assert!(!is_absolute_iri("1abc:foo"));
        assert!(!is_absolute_iri("relative/path"));
    }

    #[test]
    fn literal_invariants() {
        let lit = Literal::typed("a", vocab::XSD_STRING);
        assert!(lit.is_plain());
        assert_eq!(lit, Literal::plain("a"));
        let tagged = Literal::with_language("Abstand", "DE").unwrap();
        assert_eq!(tagged.language(), Some("de"));
        assert!(tagged.datatype().is_none());
        assert!(Literal::with_language("x", "").is_err());
        assert!(Literal::with_language("x", "de--x").is_err());
    }

    #[test]
    fn triple_rejects_literal_subject_and_non_iri_predicate() {
        let iri = Term::iri("http://e/x");
        assert!(Triple::try_new(Term::literal("s"), iri.clone(), iri.clone()).is_err());
        assert!(Triple::try_new(iri.clone(), Term::blank("b0"), iri.clone()).is_err());
        assert!(Triple::try_new(Term::blank("b0"), iri.clone(), Term::literal("o")).is_ok());
    }

    #[test]
    fn prefix_compaction_prefers_longest_namespace() {
        let mut p = PrefixMap::new();
        p.insert("psm", "http://srv.ktbl.de/data/psm/").unwrap();
        p.insert("psmr", "http://srv.ktbl.de/data/psm/resources/").unwrap();
        assert_eq!(
            p.compact("http://srv.ktbl.de/data/psm/resources/crop_RUBID"),
            Some(("psmr", "crop_RUBID"))
        );
        assert_eq!(
            p.compact("http://srv.ktbl.de/data/psm/Crop"),
            Some(("psm", "Crop"))
        );
        assert_eq!(p.compact("http://example.org/x"), None);
        assert!(p.insert("bad label", "http://x/").is_err());
        assert!(p.insert("1x", "http://x/").is_err());
    }

    proptest! {
        #[test]
        fn compact_then_expand_is_identity(
            namespaces in proptest::collection::btree_map("[a-z]{1,4}", "http://ex\\.org/[a-z]{0,3}/?", 1..5),
            suffix in "[A-Za-z0-9_]{0,8}",
            pick in 0usize..5,
        ) {
            let mut map = PrefixMap::new();
            for (label, ns) in &namespaces {
                map.insert(label.clone(), ns.clone()).unwrap();
            }
            let ns = namespaces.values().nth(pick % namespaces.len()).unwrap();
            let iri = format!("{ns}{suffix}");
            let (label, local) = map.compact(&iri).expect("a namespace matches");
            prop_assert_eq!(map.expand(label, local).unwrap(), iri.clone());
            let chosen = map.get(label).unwrap();
            for other in namespaces.values() {
                if iri.starts_with(other.as_str()) {
                    prop_assert!(other.len() <= chosen.len());
                }
            }
        }
    }
}
