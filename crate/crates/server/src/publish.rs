//! Read-only query endpoint and indication lookup over a triple store.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use pam_core::jsonld::graph_to_jsonld;
use pam_core::rdf::{serialize_ntriples, serialize_turtle};
use pam_core::store::{parse_query, QueryResult, TripleStore};
use pam_core::{Graph, Term};

pub const TURTLE: &str = "text/turtle";
pub const NTRIPLES: &str = "application/n-triples";
pub const JSON_LD: &str = "application/ld+json";
pub const SPARQL_JSON: &str = "application/sparql-results+json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Turtle,
    NTriples,
    JsonLd,
}

impl GraphFormat {
    /// Names accepted by the `format` parameter.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "turtle" | "ttl" => Some(GraphFormat::Turtle),
            "ntriples" | "n-triples" | "nt" => Some(GraphFormat::NTriples),
            "jsonld" | "json-ld" => Some(GraphFormat::JsonLd),
            _ => None,
        }
    }

    fn from_media_type(media: &str) -> Option<Self> {
        match media {
            TURTLE | "application/x-turtle" => Some(GraphFormat::Turtle),
            NTRIPLES | "text/plain" => Some(GraphFormat::NTriples),
            JSON_LD | "application/json" => Some(GraphFormat::JsonLd),
            _ => None,
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            GraphFormat::Turtle => "text/turtle; charset=utf-8",
            GraphFormat::NTriples => "application/n-triples; charset=utf-8",
            GraphFormat::JsonLd => "application/ld+json",
        }
    }

    pub fn render(self, graph: &Graph) -> String {
        match self {
            GraphFormat::Turtle => serialize_turtle(graph),
            GraphFormat::NTriples => serialize_ntriples(graph),
            GraphFormat::JsonLd => {
                serde_json::to_string_pretty(&graph_to_jsonld(graph)).expect("JSON renders") + "\n"
            }
        }
    }
}

/// Media ranges of an Accept header ordered by descending quality;
/// ranges with q=0 are dropped.
fn accept_ranges(headers: &HeaderMap) -> Option<Vec<String>> {
    let value = headers.get(header::ACCEPT)?.to_str().ok()?;
    let mut ranges: Vec<(f32, usize, String)> = value
        .split(',')
        .enumerate()
        .filter_map(|(i, part)| {
            let mut pieces = part.split(';').map(str::trim);
            let media = pieces.next()?.to_ascii_lowercase();
            if media.is_empty() {
                return None;
            }
            let q = pieces
                .filter_map(|p| p.strip_prefix("q="))
                .find_map(|q| q.parse::<f32>().ok())
                .unwrap_or(1.0);
            (q > 0.0).then_some((q, i, media))
        })
        .collect();
    ranges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Some(ranges.into_iter().map(|(_, _, m)| m).collect())
}

fn negotiate_graph(headers: &HeaderMap, format: Option<&str>) -> Result<GraphFormat, Response> {
    if let Some(name) = format {
        return GraphFormat::from_name(name)
            .ok_or_else(|| not_acceptable(&format!("unsupported format {name:?}")));
    }
    let Some(ranges) = accept_ranges(headers) else {
        return Ok(GraphFormat::Turtle);
    };
    for media in &ranges {
        if media == "*/*" || media == "text/*" {
            return Ok(GraphFormat::Turtle);
        }
        if media == "application/*" {
            return Ok(GraphFormat::NTriples);
        }
        if let Some(f) = GraphFormat::from_media_type(media) {
            return Ok(f);
        }
    }
    Err(not_acceptable("no acceptable graph format"))
}

fn negotiate_bindings(headers: &HeaderMap, format: Option<&str>) -> Result<(), Response> {
    if let Some(name) = format {
        return match name.to_ascii_lowercase().as_str() {
            "json" | "srj" => Ok(()),
            _ => Err(not_acceptable(&format!("SELECT results are JSON only, not {name:?}"))),
        };
    }
    match accept_ranges(headers) {
        None => Ok(()),
        Some(ranges)
            if ranges.iter().any(|m| {
                matches!(m.as_str(), SPARQL_JSON | "application/json" | "application/*" | "*/*")
            }) =>
        {
            Ok(())
        }
        Some(_) => Err(not_acceptable("SELECT results are available as JSON only")),
    }
}

fn plain(status: StatusCode, message: &str) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        format!("{message}\n"),
    )
        .into_response()
}

fn not_acceptable(message: &str) -> Response {
    plain(StatusCode::NOT_ACCEPTABLE, message)
}

struct Publisher {
    store: TripleStore,
    resources_ns: String,
}

/// Routes `/sparql`, `/indications/{id}` and `/healthz`. Indication ids
/// resolve to `<resources_ns>ind_<id>`.
pub fn router(store: TripleStore, resources_ns: impl Into<String>) -> Router {
    let state = Arc::new(Publisher {
        store,
        resources_ns: resources_ns.into(),
    });
    Router::new()
        .route("/sparql", get(sparql_get).post(sparql_post))
        .route("/indications/{id}", get(indication))
        .route("/healthz", get(healthz))
        .with_state(state)
}

fn answer(publisher: &Publisher, headers: &HeaderMap, text: &str, format: Option<&str>) -> Response {
    if text.trim().is_empty() {
        return plain(StatusCode::BAD_REQUEST, "missing query");
    }
    let query = match parse_query(text) {
        Ok(q) => q,
        Err(e) => return plain(StatusCode::BAD_REQUEST, &format!("query parse error: {e}")),
    };
    let negotiated = match &query.form {
        pam_core::store::QueryForm::Describe(_) => negotiate_graph(headers, format).map(Some),
        pam_core::store::QueryForm::Select(_) => negotiate_bindings(headers, format).map(|_| None),
    };
    let graph_format = match negotiated {
        Ok(f) => f,
        Err(response) => return response,
    };
    match (publisher.store.execute(&query), graph_format) {
        (QueryResult::Graph(g), Some(f)) => {
            ([(header::CONTENT_TYPE, f.content_type())], f.render(&g)).into_response()
        }
        (QueryResult::Bindings(solution), _) => (
            [(header::CONTENT_TYPE, SPARQL_JSON)],
            serde_json::to_string_pretty(&solution.to_json()).expect("JSON renders") + "\n",
        )
            .into_response(),
        (QueryResult::Graph(_), None) => unreachable!("DESCRIBE negotiates a graph format"),
    }
}

async fn sparql_get(
    State(p): State<Arc<Publisher>>,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Response {
    let text = params.get("query").map(String::as_str).unwrap_or("");
    answer(&p, &headers, text, params.get("format").map(String::as_str))
}

/// Body is the query itself (`application/sparql-query`, `text/plain`)
/// or a form with a `query` field.
async fn sparql_post(
    State(p): State<Arc<Publisher>>,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let media = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .map(|v| v.trim().to_ascii_lowercase())
        .unwrap_or_else(|| "text/plain".into());
    let Ok(body) = std::str::from_utf8(&body) else {
        return plain(StatusCode::BAD_REQUEST, "request body is not UTF-8");
    };
    match media.as_str() {
        "application/sparql-query" | "text/plain" => {
            answer(&p, &headers, body, params.get("format").map(String::as_str))
        }
        "application/x-www-form-urlencoded" => {
            let form: HashMap<String, String> = url_decode_form(body);
            let format = params.get("format").or_else(|| form.get("format"));
            answer(
                &p,
                &headers,
                form.get("query").map(String::as_str).unwrap_or(""),
                format.map(String::as_str),
            )
        }
        other => plain(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            &format!("unsupported request content type {other:?}"),
        ),
    }
}

fn url_decode_form(body: &str) -> HashMap<String, String> {
    url::form_urlencoded::parse(body.as_bytes()).into_owned().collect()
}

async fn indication(State(p): State<Arc<Publisher>>, Path(id): Path<String>) -> Response {
    let valid = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if !valid {
        return plain(StatusCode::BAD_REQUEST, &format!("malformed indication id {id:?}"));
    }
    let iri = format!("{}ind_{id}", p.resources_ns);
    let cbd = p.store.describe(&Term::iri(iri.as_str()));
    if cbd.is_empty() {
        return plain(StatusCode::NOT_FOUND, &format!("unknown indication {id}"));
    }
    (
        [(header::CONTENT_TYPE, GraphFormat::JsonLd.content_type())],
        GraphFormat::JsonLd.render(&cbd),
    )
        .into_response()
}

async fn healthz(State(p): State<Arc<Publisher>>) -> Response {
    axum::Json(serde_json::json!({"status": "ok", "triples": p.store.len()})).into_response()
}
