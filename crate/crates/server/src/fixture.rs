//! Offline stand-in for the upstream registration API: serves CSV-backed
//! tables through the paging envelope, plus `/stand`. Every request is
//! logged, and faults can be scheduled by request number.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use pam_core::crawler::{compile_model, ApiModel, CrawlError, PageEnvelope, DEFAULT_PAGE_LIMIT};
use pam_core::table::{load_csv, CsvError, Table, Value};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Model(#[from] CrawlError),
    #[error("fixture table {table}: {source}")]
    Csv { table: String, source: CsvError },
}

/// Tables keyed by endpoint path (without slashes), as JSON items.
#[derive(Debug, Clone, Default)]
pub struct FixtureData {
    pub tables: BTreeMap<String, Vec<Map<String, Json>>>,
    pub stand: String,
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Text(s) => Json::String(s.clone()),
        Value::Integer(i) => json!(i),
        Value::Real(r) => serde_json::Number::from_f64(*r).map_or(Json::Null, Json::Number),
    }
}

/// Items keyed by column name.
pub fn table_items(table: &Table) -> Vec<Map<String, Json>> {
    table
        .rows()
        .iter()
        .map(|row| {
            table
                .columns()
                .iter()
                .zip(row)
                .map(|(c, v)| (c.name.clone(), value_json(v)))
                .collect()
        })
        .collect()
}

impl FixtureData {
    /// Reads `<dir>/<table_name>.csv` for every endpoint of the model.
    pub fn load(dir: &Path, model: &ApiModel, stand: impl Into<String>) -> Result<Self, FixtureError> {
        let mut tables = BTreeMap::new();
        for (plan, ep) in compile_model(model)?.iter().zip(&model.endpoints) {
            let path = dir.join(format!("{}.csv", plan.table_name));
            let table = load_csv(&path, &plan.table_name, &plan.columns).map_err(|source| {
                FixtureError::Csv {
                    table: plan.table_name.clone(),
                    source,
                }
            })?;
            tables.insert(ep.path.trim_matches('/').to_string(), table_items(&table));
        }
        Ok(FixtureData {
            tables,
            stand: stand.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Answer with this HTTP status.
    Status(u16),
    /// Answer 200 with the envelope cut off halfway.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestRecord {
    pub path: String,
    pub limit: Option<usize>,
    pub offset: Option<u64>,
    pub status: u16,
}

#[derive(Debug, Default)]
pub struct FixtureServer {
    data: FixtureData,
    max_limit: usize,
    log: Mutex<Vec<RequestRecord>>,
    faults: Mutex<HashMap<usize, Fault>>,
}

impl FixtureServer {
    pub fn new(data: FixtureData) -> Arc<Self> {
        Arc::new(FixtureServer {
            data,
            max_limit: DEFAULT_PAGE_LIMIT,
            log: Mutex::new(Vec::new()),
            faults: Mutex::new(HashMap::new()),
        })
    }

    /// Requests handled so far, in arrival order.
    pub fn requests(&self) -> Vec<RequestRecord> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("log lock").clear();
    }

    /// Makes the `n`-th request from now (0-based, counted over all paths)
    /// fail with `fault`.
    pub fn inject(&self, n: usize, fault: Fault) {
        let base = self.log.lock().expect("log lock").len();
        self.faults.lock().expect("fault lock").insert(base + n, fault);
    }

    pub fn router(self: &Arc<Self>) -> Router {
        Router::new()
            .route("/stand", get(stand))
            .route("/{table}", get(page))
            .with_state(Arc::clone(self))
    }

    fn record(&self, path: &str, limit: Option<usize>, offset: Option<u64>, response: Response) -> Response {
        let mut log = self.log.lock().expect("log lock");
        let fault = self.faults.lock().expect("fault lock").remove(&log.len());
        let response = match fault {
            None => response,
            Some(Fault::Status(code)) => {
                let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
                (status, "injected fault\n").into_response()
            }
            Some(Fault::Truncated) => {
                ([(header::CONTENT_TYPE, "application/json")], r#"{"items":[{"#).into_response()
            }
        };
        log.push(RequestRecord {
            path: path.to_string(),
            limit,
            offset,
            status: response.status().as_u16(),
        });
        response
    }
}

fn envelope_response(envelope: &impl serde::Serialize) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        serde_json::to_string(envelope).expect("JSON renders"),
    )
        .into_response()
}

async fn stand(State(server): State<Arc<FixtureServer>>) -> Response {
    let body = json!({
        "items": [{"stand": server.data.stand}],
        "hasMore": false,
        "limit": server.max_limit,
        "offset": 0,
    });
    server.record("/stand", None, None, envelope_response(&body))
}

async fn page(
    State(server): State<Arc<FixtureServer>>,
    UrlPath(table): UrlPath<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let path = format!("/{table}");
    let limit = params.get("limit").map(|v| v.parse::<usize>());
    let offset = params.get("offset").map(|v| v.parse::<u64>());
    let (limit, offset) = match (limit, offset) {
        (Some(Err(_)), _) | (_, Some(Err(_))) | (Some(Ok(0)), _) => {
            let r = (StatusCode::BAD_REQUEST, "limit must be a positive integer, offset a non-negative one\n").into_response();
            return server.record(&path, None, None, r);
        }
        (l, o) => (
            l.map_or(server.max_limit, |l| l.expect("checked")).min(server.max_limit),
            o.map_or(0, |o| o.expect("checked")),
        ),
    };
    let response = match server.data.tables.get(&table) {
        None => (StatusCode::NOT_FOUND, format!("no table {table}\n")).into_response(),
        Some(items) => envelope_response(&PageEnvelope::slice(items, limit, offset)),
    };
    server.record(&path, Some(limit), Some(offset), response)
}
