use pam_core::rdf::{parse_turtle, serialize_ntriples};
use pam_core::rml::{execute_mapping, parse_mapping};
use pam_core::table::{load_csv, ColumnDef, Table, TableStore, Value};
use pam_testkit::gen;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const ROOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
const RESOURCES: &str = "http://srv.ktbl.de/data/psm/resources/";

fn read(rel: &str) -> String {
    std::fs::read_to_string(format!("{ROOT}/{rel}")).unwrap()
}

fn fixture_tables() -> TableStore {
    let awg = load_csv(
        format!("{ROOT}/fixtures/api/AWG.csv").as_ref(),
        "AWG",
        &[ColumnDef::text("AWG_ID"), ColumnDef::text("KENNR"), ColumnDef::text("ANWENDUNGEN_MAX")],
    )
    .unwrap();
    let kultur = load_csv(
        format!("{ROOT}/fixtures/api/AWG_KULTUR.csv").as_ref(),
        "AWG_KULTUR",
        &[ColumnDef::text("AWG_ID"), ColumnDef::text("KULTUR"), ColumnDef::text("AUSGENOMMEN")],
    )
    .unwrap();
    [awg, kultur].into_iter().collect()
}

#[test]
fn crop_mapping_reproduces_the_golden_triples() {
    let doc = parse_mapping(&read("mappings/Map_Crop.ttl"), "file:///mappings/Map_Crop.ttl").unwrap();
    let graph = execute_mapping(&doc, &fixture_tables()).unwrap();
    let golden = parse_turtle(&read("fixtures/golden/Res_Crop.nt")).unwrap();
    assert_eq!(graph.triples(), golden.triples());
    assert_eq!(serialize_ntriples(&graph), read("fixtures/golden/Res_Crop.nt"));
}

fn subjects_for(ids: &[String]) -> Vec<String> {
    let mut awg = Table::new("AWG", vec![ColumnDef::text("AWG_ID")]).unwrap();
    for id in ids {
        awg.push_row(vec![Value::Text(id.clone())]).unwrap();
    }
    let mapping = r#"@prefix rr: <http://www.w3.org/ns/r2rml#>.
@prefix rml: <http://semweb.mmlab.be/ns/rml#>.
@prefix psm: <http://srv.ktbl.de/data/psm/>.
@prefix d2rq: <http://www.wiwiss.fu-berlin.de/suhl/bizer/D2RQ/0.1#>.
<#DB> a d2rq:Database; d2rq:jdbcDSN "jdbc:sqlite://db".
<#M> rml:logicalSource [ rml:source <#DB>;
    rml:query "SELECT AWG_ID, REPLACE(AWG_ID, '/', '-') AS URLID FROM AWG" ];
  rr:subjectMap [ rr:template "http://srv.ktbl.de/data/psm/resources/ind_{URLID}"; rr:class psm:Indication ]."#;
    let doc = parse_mapping(mapping, "file:///m.ttl").unwrap();
    let graph = execute_mapping(&doc, &[awg].into_iter().collect()).unwrap();
    graph
        .iter()
        .filter_map(|t| t.subject.as_iri().map(str::to_string))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slashes_never_reach_subject_iris(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let ids: Vec<String> = (0..16).map(|_| gen::awg_id(&mut rng)).collect();
        for s in subjects_for(&ids) {
            let local = s.strip_prefix(RESOURCES).unwrap();
            prop_assert!(!local.contains('/'), "{}", s);
        }
    }
}
