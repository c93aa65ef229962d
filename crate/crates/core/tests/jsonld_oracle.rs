use pam_core::jsonld::graph_to_jsonld;
use pam_core::rdf::parse_turtle;
use pam_core::store::TripleStore;
use pam_testkit::graph::{cbd, isomorphic};
use pam_testkit::{gen, jsonld};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn expansion_restores_the_description(seed in any::<u64>()) {
        let (root, g) = gen::cbd(&mut StdRng::seed_from_u64(seed));
        let described = TripleStore::from_graph(&g).describe(&root);
        prop_assert_eq!(described.triples(), &cbd(&g, &root));
        let doc = graph_to_jsonld(&described);
        let back = jsonld::expand(&doc).unwrap();
        prop_assert!(isomorphic(&back, &g), "{}", serde_json::to_string_pretty(&doc).unwrap());
    }
}

#[test]
fn extended_indication_round_trips() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/golden/indication_extended.ttl");
    let g = parse_turtle(&std::fs::read_to_string(path).unwrap()).unwrap();
    let doc = graph_to_jsonld(&g);
    let back = jsonld::expand(&doc).unwrap();
    assert!(isomorphic(&back, &g));
    let ind = doc["@graph"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["@id"].as_str().is_some_and(|id| id.ends_with("ind_034028-60-07-004")))
        .unwrap();
    assert_eq!(ind["constraint"].as_array().unwrap().len(), 5);
}
