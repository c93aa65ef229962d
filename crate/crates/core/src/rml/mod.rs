//! Mapping documents in the R2RML/RML vocabulary: extraction from a parsed
//! mapping graph and execution over a [`TableStore`](crate::table::TableStore).

mod exec;
mod extract;
mod template;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rdf::{ParseError, PrefixMap, Term};
use crate::table::SqlError;

pub use exec::{execute_mapping, execute_triples_map};
pub use extract::{extract_mapping, parse_mapping};
pub use template::{iri_safe_encode, Template, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    /// A database-like store of named tables, queried with `rml:query`.
    TableStore,
    /// A CSV file; without a query its rows are read from the table named
    /// after the file stem.
    CsvFile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDef {
    pub kind: SourceKind,
    pub location: String,
}

impl SourceDef {
    /// Table holding the rows of a CSV source: the file name without
    /// directory or extension.
    pub fn table_name(&self) -> &str {
        let file = self.location.rsplit(['/', '\\']).next().unwrap_or(&self.location);
        match file.rfind('.') {
            Some(dot) if dot > 0 => &file[..dot],
            _ => file,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalSource {
    pub source: SourceDef,
    pub query: Option<String>,
    /// Recorded only; there is a single query dialect.
    pub reference_formulation: Option<String>,
    /// Recorded only.
    pub sql_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectMap {
    pub template: Template,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinCondition {
    pub child: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectMap {
    Constant(Term),
    Reference {
        column: String,
        datatype: Option<String>,
        language: Option<String>,
    },
    /// Produces IRIs.
    Template(Template),
    Join {
        parent: String,
        conditions: Vec<JoinCondition>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateObjectMap {
    pub predicate: String,
    pub object: ObjectMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplesMap {
    pub id: String,
    pub logical_source: LogicalSource,
    pub subject_map: SubjectMap,
    pub predicate_object_maps: Vec<PredicateObjectMap>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingDocument {
    /// Sorted by id.
    pub triples_maps: Vec<TriplesMap>,
    pub sources: BTreeMap<String, SourceDef>,
    pub prefixes: PrefixMap,
}

impl MappingDocument {
    pub fn triples_map(&self, id: &str) -> Option<&TriplesMap> {
        self.triples_maps.iter().find(|m| m.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("mapping syntax: {0}")]
    Parse(#[from] ParseError),
    #[error("unknown mapping property {property} on {subject}")]
    UnknownProperty { property: String, subject: String },
    #[error("{subject} is missing {property}")]
    MissingProperty { subject: String, property: String },
    #[error("{subject} has more than one {property}")]
    MultipleValues { subject: String, property: String },
    #[error("{subject}: invalid {property}: {message}")]
    InvalidValue {
        subject: String,
        property: String,
        message: String,
    },
    #[error("triples map {map} has no subject map")]
    MissingSubjectMap { map: String },
    #[error("triples map {map} has neither a class nor a predicate-object map")]
    EmptyTriplesMap { map: String },
    #[error("triples map {map} refers to unknown parent triples map {parent}")]
    DanglingParent { map: String, parent: String },
    #[error("triples map {map}: join condition {message}")]
    DanglingJoin { map: String, message: String },
    #[error("triples map {map}: source {source_id} is not a known source")]
    UnknownSource { map: String, source_id: String },
    #[error("triples map {map}: a table-store source needs rml:query")]
    MissingQuery { map: String },
    #[error("triples map {map}: {source}")]
    Template {
        map: String,
        #[source]
        source: TemplateError,
    },
    #[error("triples map {map}: {source}")]
    Query {
        map: String,
        #[source]
        source: SqlError,
    },
    #[error("triples map {map}: no table {table} for source")]
    MissingTable { map: String, table: String },
    #[error("triples map {map}: column {column} is not in the logical source result")]
    UnknownColumn { map: String, column: String },
    #[error("triples map {map}: generated IRI {iri:?} is not absolute")]
    InvalidIri { map: String, iri: String },
}
