//! Harvester for the paged JSON registration API.
//!
//! An [`ApiModel`] names the endpoints and their source column types;
//! [`compile_model`] turns it into table schemas plus fetch plans, and
//! [`Crawler`] pulls every page, committing rows and a [`CrawlState`]
//! checkpoint after each one so an interrupted crawl resumes where it
//! stopped.

mod fetch;
mod model;
mod state;
mod transport;

use std::path::PathBuf;

use thiserror::Error;

use crate::table::{CsvError, TableError};

pub use fetch::{decode_item, Crawler, PageEnvelope, DEFAULT_PAGE_LIMIT};
pub use model::{compile_model, map_source_type, ApiModel, EndpointDef, FetchPlan, FieldDef};
pub use state::{CrawlState, CrawlStorage, DirStorage, MemoryStorage, TableState};
pub use transport::{HttpTransport, RetryPolicy, Transport, TransportError};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid API model: {0}")]
    InvalidModel(String),
    #[error("unmapped source type {source_type:?} for field {field} of {endpoint}")]
    UnmappedType {
        endpoint: String,
        field: String,
        source_type: String,
    },
    #[error("{error} (after {attempts} attempt(s))")]
    Transport {
        error: TransportError,
        attempts: u32,
    },
    #[error("{url}: malformed response: {message}")]
    Envelope { url: String, message: String },
    #[error("table {table}, item at offset {offset}, field {field}: {message}")]
    Decode {
        table: String,
        offset: u64,
        field: String,
        message: String,
    },
    #[error("{url}: no release stamp")]
    NoReleaseStamp { url: String },
    #[error("release changed from {saved:?} to {current:?}; reset the crawl state to start over")]
    ReleaseChanged { saved: String, current: String },
    #[error("{path}: {message}")]
    Storage { path: PathBuf, message: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{} table(s) failed: {}", .0.len(), summarize(.0))]
    Tables(Vec<(String, CrawlError)>),
}

fn summarize(errors: &[(String, CrawlError)]) -> String {
    errors
        .iter()
        .map(|(table, e)| format!("{table}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}
