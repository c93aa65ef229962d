//! Core of the registration-data pipeline: RDF model and Turtle I/O,
//! tabular store with an SQL subset, RML mapping execution, an indexed
//! triple store with DESCRIBE/SELECT, JSON-LD output, and the paged API
//! crawler.

pub mod crawler;
pub mod jsonld;
pub mod rdf;
pub mod rml;
pub mod store;
pub mod table;

pub use rdf::{Graph, Literal, PrefixMap, Term, Triple};
