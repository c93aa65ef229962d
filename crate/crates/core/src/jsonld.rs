//! Flattened JSON-LD output with a generated `@context`.
//!
//! Each subject becomes one node object. Predicate keys are bare local
//! names where that is unambiguous (`appliedOnCrop`, `label`), otherwise
//! compact IRIs, otherwise full IRIs; every key has a term definition so
//! IRI-valued properties can be written as plain strings.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value as Json};

use crate::rdf::{vocab, Graph, Literal, Term, Triple};

const GEN_DELIMS: &[char] = &[':', '/', '?', '#', '[', ']', '@'];

fn scheme(iri: &str) -> Option<&str> {
    iri.split_once(':').map(|(s, _)| s)
}

fn is_term_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn local_name(iri: &str) -> &str {
    match iri.rfind(['#', '/']) {
        Some(i) => &iri[i + 1..],
        None => "",
    }
}

struct Compactor {
    /// Usable prefixes: label → namespace.
    prefixes: BTreeMap<String, String>,
}

impl Compactor {
    fn new(graph: &Graph, schemes: &BTreeSet<String>) -> Self {
        let prefixes = graph
            .prefixes
            .iter()
            .filter(|(label, ns)| {
                !label.is_empty()
                    && !schemes.contains(&label.to_ascii_lowercase())
                    && ns.ends_with(GEN_DELIMS)
            })
            .map(|(l, n)| (l.to_string(), n.to_string()))
            .collect();
        Compactor { prefixes }
    }

    /// `label:local` for the longest matching namespace, if the result
    /// cannot be mistaken for an absolute IRI or a blank node.
    fn compact_iri(&self, iri: &str) -> Option<String> {
        self.prefixes
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()) && iri.len() > ns.len())
            .max_by_key(|(label, ns)| (ns.len(), std::cmp::Reverse(label.as_str())))
            .map(|(label, ns)| (label, &iri[ns.len()..]))
            .filter(|(_, local)| !local.starts_with("//"))
            .map(|(label, local)| format!("{label}:{local}"))
    }

    fn iri(&self, iri: &str) -> String {
        self.compact_iri(iri).unwrap_or_else(|| iri.to_string())
    }

    fn node_id(&self, term: &Term) -> String {
        match term {
            Term::Iri(iri) => self.iri(iri),
            Term::Blank(label) => format!("_:{label}"),
            Term::Literal(_) => unreachable!("literals are never node ids"),
        }
    }
}

fn is_rdf_type_iri(t: &Triple) -> bool {
    t.predicate.as_iri() == Some(vocab::RDF_TYPE) && t.object.is_iri()
}

/// Key for every predicate that needs one (all except `rdf:type` with IRI
/// objects, which goes to `@type`).
fn choose_keys(graph: &Graph, compactor: &Compactor, schemes: &BTreeSet<String>) -> BTreeMap<String, String> {
    let predicates: BTreeSet<&str> = graph
        .iter()
        .filter(|t| !is_rdf_type_iri(t))
        .filter_map(|t| t.predicate.as_iri())
        .collect();
    let mut local_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &predicates {
        *local_counts.entry(local_name(p)).or_default() += 1;
    }
    predicates
        .into_iter()
        .map(|p| {
            let local = local_name(p);
            let key = if is_term_name(local)
                && local_counts[local] == 1
                && !compactor.prefixes.contains_key(local)
                && !schemes.contains(&local.to_ascii_lowercase())
            {
                local.to_string()
            } else {
                compactor.iri(p)
            };
            (p.to_string(), key)
        })
        .collect()
}

fn literal_value(lit: &Literal, compactor: &Compactor) -> Json {
    if let Some(lang) = lit.language() {
        json!({"@value": lit.value(), "@language": lang})
    } else if let Some(dt) = lit.datatype() {
        json!({"@value": lit.value(), "@type": compactor.iri(dt)})
    } else {
        Json::String(lit.value().to_string())
    }
}

fn one_or_many(mut values: Vec<Json>) -> Json {
    if values.len() == 1 {
        values.pop().expect("one value")
    } else {
        Json::Array(values)
    }
}

/// Converts a graph to a flattened JSON-LD document
/// `{"@context": {...}, "@graph": [...]}`. Output is deterministic:
/// nodes in subject order, keys in predicate IRI order.
pub fn graph_to_jsonld(graph: &Graph) -> Json {
    let graph = &graph.with_canonical_blanks();
    let schemes: BTreeSet<String> = graph
        .iter()
        .flat_map(|t| [&t.subject, &t.predicate, &t.object])
        .filter_map(|t| match t {
            Term::Iri(i) => scheme(i),
            Term::Literal(l) => l.datatype().and_then(scheme),
            Term::Blank(_) => None,
        })
        .map(str::to_ascii_lowercase)
        .collect();
    let compactor = Compactor::new(graph, &schemes);
    let keys = choose_keys(graph, &compactor, &schemes);

    // a property is IRI-coerced when all its objects are IRIs or blank nodes
    let coerced: BTreeSet<&str> = keys
        .keys()
        .filter(|p| {
            graph
                .iter()
                .filter(|t| t.predicate.as_iri() == Some(p.as_str()) && !is_rdf_type_iri(t))
                .all(|t| !t.object.is_literal())
        })
        .map(String::as_str)
        .collect();

    let mut context = Map::new();
    for (label, ns) in &compactor.prefixes {
        context.insert(label.clone(), Json::String(ns.clone()));
    }
    let mut terms: Vec<(&String, &String)> = keys.iter().map(|(p, k)| (k, p)).collect();
    terms.sort();
    for (key, predicate) in terms {
        let def = if coerced.contains(predicate.as_str()) {
            json!({"@id": predicate, "@type": "@id"})
        } else {
            json!({"@id": predicate})
        };
        context.insert(key.clone(), def);
    }

    let mut nodes = Vec::new();
    let triples: Vec<&Triple> = graph.iter().collect();
    let mut start = 0;
    while start < triples.len() {
        let subject = &triples[start].subject;
        let end = start + triples[start..].iter().take_while(|t| &t.subject == subject).count();
        let block = &triples[start..end];
        start = end;

        let mut node = Map::new();
        node.insert("@id".into(), Json::String(compactor.node_id(subject)));
        let types: Vec<Json> = block
            .iter()
            .filter(|t| is_rdf_type_iri(t))
            .map(|t| Json::String(compactor.iri(t.object.as_iri().expect("IRI type"))))
            .collect();
        if !types.is_empty() {
            node.insert("@type".into(), one_or_many(types));
        }

        let mut by_predicate: BTreeMap<&str, Vec<&Term>> = BTreeMap::new();
        for t in block.iter().filter(|t| !is_rdf_type_iri(t)) {
            by_predicate
                .entry(t.predicate.as_iri().expect("IRI predicate"))
                .or_default()
                .push(&t.object);
        }
        for (predicate, objects) in by_predicate {
            let is_coerced = coerced.contains(predicate);
            let values = objects
                .into_iter()
                .map(|o| match o {
                    Term::Literal(lit) => literal_value(lit, &compactor),
                    other if is_coerced => Json::String(compactor.node_id(other)),
                    other => json!({"@id": compactor.node_id(other)}),
                })
                .collect();
            node.insert(keys[predicate].clone(), one_or_many(values));
        }
        nodes.push(Json::Object(node));
    }

    json!({"@context": context, "@graph": nodes})
}
