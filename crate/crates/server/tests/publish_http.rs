use pam_core::rdf::parse_turtle;
use pam_core::store::TripleStore;
use pam_core::{Graph, Term};
use pam_server::{publish_router, BackgroundServer};
use pam_testkit::graph::isomorphic;
use pam_testkit::jsonld::expand;
use reqwest::blocking::Client;
use reqwest::header::{ACCEPT, CONTENT_TYPE};
use serde_json::Value;

const NS: &str = "http://srv.ktbl.de/data/psm/resources/";
const IND: &str = "http://srv.ktbl.de/data/psm/resources/ind_034028-60-07-004";
const DESCRIBE: &str = "PREFIX psmr: <http://srv.ktbl.de/data/psm/resources/>\nDESCRIBE psmr:ind_034028-60-07-004";

fn graph() -> Graph {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/golden/indication_extended.ttl");
    parse_turtle(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn server() -> (BackgroundServer, TripleStore) {
    let store = TripleStore::from_graph(&graph());
    let server = BackgroundServer::local(publish_router(store.clone(), NS)).unwrap();
    (server, store)
}

fn content_type(r: &reqwest::blocking::Response) -> String {
    r.headers()[CONTENT_TYPE].to_str().unwrap().to_string()
}

#[test]
fn describe_negotiates_graph_formats() {
    let (server, store) = server();
    let expected = store.describe(&Term::iri(IND));
    assert_eq!(expected.len(), 20);
    let client = Client::new();
    let url = format!("{}/sparql", server.url());

    let r = client.get(&url).query(&[("query", DESCRIBE)]).send().unwrap();
    assert_eq!(r.status(), 200);
    assert!(content_type(&r).starts_with("text/turtle"));
    assert!(isomorphic(&parse_turtle(&r.text().unwrap()).unwrap(), &expected));

    for accept in ["application/n-triples", "text/plain;q=0.9, application/xml;q=0.1"] {
        let r = client.get(&url).query(&[("query", DESCRIBE)]).header(ACCEPT, accept).send().unwrap();
        assert!(content_type(&r).starts_with("application/n-triples"), "{accept}");
        assert!(isomorphic(&parse_turtle(&r.text().unwrap()).unwrap(), &expected));
    }

    let r = client
        .get(&url)
        .query(&[("query", DESCRIBE)])
        .header(ACCEPT, "application/ld+json")
        .send()
        .unwrap();
    assert_eq!(content_type(&r), "application/ld+json");
    let doc: Value = r.json().unwrap();
    assert!(isomorphic(&expand(&doc).unwrap(), &expected));

    let r = client
        .get(&url)
        .query(&[("query", DESCRIBE), ("format", "nt")])
        .header(ACCEPT, "text/turtle")
        .send()
        .unwrap();
    assert!(content_type(&r).starts_with("application/n-triples"));

    let r = client.get(&url).query(&[("query", DESCRIBE)]).header(ACCEPT, "image/png").send().unwrap();
    assert_eq!(r.status(), 406);
    let r = client.get(&url).query(&[("query", DESCRIBE), ("format", "rdfxml")]).send().unwrap();
    assert_eq!(r.status(), 406);
}

#[test]
fn select_answers_with_result_json() {
    let (server, _) = server();
    let client = Client::new();
    let url = format!("{}/sparql", server.url());
    let q = "PREFIX psm: <http://srv.ktbl.de/data/psm/> SELECT ?c WHERE { ?i psm:appliedOnCrop ?c }";
    let r = client.get(&url).query(&[("query", q)]).send().unwrap();
    assert_eq!(r.status(), 200);
    assert_eq!(content_type(&r), "application/sparql-results+json");
    let body: Value = r.json().unwrap();
    assert_eq!(body["head"]["vars"], serde_json::json!(["c"]));
    let values: Vec<&str> = body["results"]["bindings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["c"]["value"].as_str().unwrap())
        .collect();
    assert_eq!(values, [format!("{NS}crop_RUBFR"), format!("{NS}crop_RUBID")]);

    let r = client.get(&url).query(&[("query", q)]).header(ACCEPT, "text/turtle").send().unwrap();
    assert_eq!(r.status(), 406);
}

#[test]
fn post_bodies_and_errors() {
    let (server, _) = server();
    let client = Client::new();
    let url = format!("{}/sparql", server.url());

    let r = client
        .post(&url)
        .header(CONTENT_TYPE, "application/sparql-query")
        .body(DESCRIBE)
        .send()
        .unwrap();
    assert_eq!(r.status(), 200);
    assert_eq!(parse_turtle(&r.text().unwrap()).unwrap().len(), 20);

    let form = url::form_urlencoded::Serializer::new(String::new())
        .append_pair("query", DESCRIBE)
        .append_pair("format", "jsonld")
        .finish();
    let r = client
        .post(&url)
        .header(CONTENT_TYPE, "application/x-www-form-urlencoded")
        .body(form)
        .send()
        .unwrap();
    assert_eq!(content_type(&r), "application/ld+json");

    let r = client.post(&url).header(CONTENT_TYPE, "application/json").body("{}").send().unwrap();
    assert_eq!(r.status(), 415);
    let r = client.get(&url).send().unwrap();
    assert_eq!(r.status(), 400);
    let r = client.get(&url).query(&[("query", "DESCRIBE psmr:x")]).send().unwrap();
    assert_eq!(r.status(), 400);
    let r = client.get(&url).query(&[("query", "CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }")]).send().unwrap();
    assert_eq!(r.status(), 400);
}

#[test]
fn indication_lookup() {
    let (server, store) = server();
    let client = Client::new();
    let r = client.get(format!("{}/indications/034028-60-07-004", server.url())).send().unwrap();
    assert_eq!(r.status(), 200);
    assert_eq!(content_type(&r), "application/ld+json");
    let doc: Value = r.json().unwrap();
    assert!(isomorphic(&expand(&doc).unwrap(), &store.describe(&Term::iri(IND))));

    let r = client.get(format!("{}/indications/999999-00-00-000", server.url())).send().unwrap();
    assert_eq!(r.status(), 404);
    let r = client.get(format!("{}/indications/a%20b", server.url())).send().unwrap();
    assert_eq!(r.status(), 400);

    let r = client.get(format!("{}/healthz", server.url())).send().unwrap();
    let body: Value = r.json().unwrap();
    assert_eq!(body["status"], "ok");
    assert_eq!(body["triples"], 29);
}
