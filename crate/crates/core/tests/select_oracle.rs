use std::collections::BTreeSet;

use pam_core::rdf::term_to_ntriples;
use pam_core::store::{parse_query, QueryForm, TripleStore};
use pam_testkit::{bgp, gen};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn select_matches_enumeration(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(0..=500);
        let graph = gen::dense_graph(&mut rng, n);
        let store = TripleStore::from_graph(&graph);
        let query = bgp::random_query(&mut rng, &graph);
        let solution = store.select(&query);
        prop_assert_eq!(&solution.vars, &query.vars);
        let rows: BTreeSet<_> = solution.rows.iter().cloned().collect();
        prop_assert_eq!(rows.len(), solution.rows.len(), "duplicate rows");
        prop_assert_eq!(rows, bgp::answer(&graph, &query));
        let keys: Vec<Vec<String>> = solution
            .rows
            .iter()
            .map(|r| r.iter().map(term_to_ntriples).collect())
            .collect();
        prop_assert!(keys.windows(2).all(|w| w[0] <= w[1]), "rows are not sorted");
    }
}

#[test]
fn parsed_query_matches_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    let graph = gen::dense_graph(&mut rng, 300);
    let store = TripleStore::from_graph(&graph);
    let text = "PREFIX ex: <http://example.org/> SELECT ?x ?y WHERE { ?x ex:p0 ?y . ?y ex:p1 ?z }";
    let QueryForm::Select(q) = parse_query(text).unwrap().form else {
        panic!("not a SELECT");
    };
    let rows: BTreeSet<_> = store.select(&q).rows.into_iter().collect();
    assert!(!rows.is_empty());
    assert_eq!(rows, bgp::answer(&graph, &q));
}
