use std::path::Path;
use std::sync::Arc;

use pam_core::crawler::ApiModel;
use pam_server::{BackgroundServer, Fault, FixtureData, FixtureServer};
use reqwest::blocking::get;
use serde_json::Value;

fn fixture() -> (BackgroundServer, Arc<FixtureServer>) {
    let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/api"));
    let model = ApiModel::load(&dir.join("model.json")).unwrap();
    let data = FixtureData::load(dir, &model, "2022-10-01").unwrap();
    let fixture = FixtureServer::new(data);
    let server = BackgroundServer::local(fixture.router()).unwrap();
    (server, fixture)
}

fn json(url: &str) -> (u16, Option<Value>) {
    let r = get(url).unwrap();
    let status = r.status().as_u16();
    (status, r.json().ok())
}

#[test]
fn pages_follow_the_envelope() {
    let (server, fixture) = fixture();
    let (status, body) = json(&format!("{}/auflage?limit=100&offset=200", server.url()));
    assert_eq!(status, 200);
    let body = body.unwrap();
    assert_eq!(body["items"].as_array().unwrap().len(), 50);
    assert_eq!(body["hasMore"], false);
    assert_eq!(body["limit"], 100);
    assert_eq!(body["offset"], 200);

    let (_, body) = json(&format!("{}/awg?limit=1&offset=0", server.url()));
    let body = body.unwrap();
    assert_eq!(body["items"][0]["AWG_ID"], "034028-60/07-004");
    assert_eq!(body["items"][0]["ANWENDUNGEN_MAX"], 2);
    assert_eq!(body["hasMore"], true);

    let (_, body) = json(&format!("{}/stand", server.url()));
    assert_eq!(body.unwrap()["items"][0]["stand"], "2022-10-01");

    let (_, body) = json(&format!("{}/auflage?limit=500", server.url()));
    assert_eq!(body.unwrap()["items"].as_array().unwrap().len(), 100, "limit is capped");

    assert_eq!(json(&format!("{}/auflage?limit=0", server.url())).0, 400);
    assert_eq!(json(&format!("{}/auflage?offset=-1", server.url())).0, 400);
    assert_eq!(json(&format!("{}/nothing", server.url())).0, 404);

    let log = fixture.requests();
    assert_eq!(log.len(), 7);
    assert_eq!(log[0].path, "/auflage");
    assert_eq!((log[0].limit, log[0].offset), (Some(100), Some(200)));
    assert_eq!(log[6].status, 404);
}

#[test]
fn injected_faults_hit_the_chosen_request() {
    let (server, fixture) = fixture();
    fixture.inject(1, Fault::Status(503));
    fixture.inject(2, Fault::Truncated);
    let url = format!("{}/awg?limit=1&offset=0", server.url());
    assert_eq!(json(&url).0, 200);
    assert_eq!(json(&url).0, 503);
    let (status, body) = json(&url);
    assert_eq!((status, body), (200, None), "truncated body is not JSON");
    assert_eq!(json(&url).0, 200);
    let statuses: Vec<u16> = fixture.requests().iter().map(|r| r.status).collect();
    assert_eq!(statuses, [200, 503, 200, 200]);
    fixture.clear_log();
    assert!(fixture.requests().is_empty());
}
