use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pam_cli::{spawn_fixture_server, PipelineConfig};
use pam_core::rdf::parse_turtle;

const ROOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");

fn root(rel: &str) -> PathBuf {
    Path::new(ROOT).join(rel)
}

/// A config in `dir` pointing at the checked-in fixtures and mapping, with
/// all outputs inside `dir`.
fn write_config(dir: &Path) -> PathBuf {
    let config = serde_json::json!({
        "api_model": root("fixtures/api/model.json"),
        "fixtures_dir": root("fixtures/api"),
        "state_file": "work/state.json",
        "tables_dir": "work/tables",
        "mappings": [root("mappings/Map_Crop.ttl")],
        "output": "work/Res_Crop.nt",
        "output_format": "ntriples",
        "data_files": ["work/Res_Crop.nt"],
        "prefixes": {
            "psm": "http://srv.ktbl.de/data/psm/",
            "psmr": "http://srv.ktbl.de/data/psm/resources/"
        }
    });
    let path = dir.join("pam.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn pam(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pam"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("PAM_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn crawl_map_load_query() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_config(dir.path());
    let config = PipelineConfig::load(&config_path).unwrap();
    let (server, fixture) = spawn_fixture_server(&config).unwrap();
    let base = server.url();

    ok(pam(&config_path, &["crawl", "--base-url", &base]));
    let tables = dir.path().join("work/tables");
    let auflage = std::fs::read_to_string(tables.join("AUFLAGE.csv")).unwrap();
    assert_eq!(auflage.lines().count(), 251);
    let requests = fixture.requests().len();
    assert_eq!(requests, 1 + 3 + 1 + 1, "stand, three AUFLAGE pages, AWG, AWG_KULTUR");

    ok(pam(&config_path, &["crawl", "--base-url", &base]));
    assert_eq!(fixture.requests().len(), requests, "finished crawl repeats nothing");

    ok(pam(&config_path, &["map"]));
    let nt = std::fs::read_to_string(dir.path().join("work/Res_Crop.nt")).unwrap();
    assert_eq!(nt, std::fs::read_to_string(root("fixtures/golden/Res_Crop.nt")).unwrap());

    let stdout_turtle = ok(pam(&config_path, &["map", "-s", "turtle", "-o", dir.path().join("x.ttl").to_str().unwrap()]));
    assert!(stdout_turtle.is_empty());
    let ttl = std::fs::read_to_string(dir.path().join("x.ttl")).unwrap();
    assert!(ttl.contains("@prefix psmr: <http://srv.ktbl.de/data/psm/resources/>"));
    assert_eq!(parse_turtle(&ttl).unwrap().triples(), parse_turtle(&nt).unwrap().triples());

    let loaded = ok(pam(&config_path, &["load"]));
    assert!(loaded.contains('6'), "{loaded}");

    let described = ok(pam(
        &config_path,
        &["query", "-q", "DESCRIBE <http://srv.ktbl.de/data/psm/resources/ind_034028-60-07-004>"],
    ));
    assert_eq!(parse_turtle(&described).unwrap().len(), 2);

    let selected = ok(pam(
        &config_path,
        &["query", "-q", "SELECT ?c WHERE { ?i <http://srv.ktbl.de/data/psm/appliedOnCrop> ?c }"],
    ));
    let json: serde_json::Value = serde_json::from_str(&selected).unwrap();
    assert_eq!(json["results"]["bindings"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_config(dir.path());

    let out = pam(&config_path, &["map", "-s", "xml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = pam(&config_path, &["query", "-q", "ASK { ?s ?p ?o }"]);
    assert_eq!(out.status.code(), Some(1));

    // nothing listens on port 9 of localhost
    let out = pam(&config_path, &["crawl", "--base-url", "http://127.0.0.1:9"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("127.0.0.1:9"), "{stderr}");
}
