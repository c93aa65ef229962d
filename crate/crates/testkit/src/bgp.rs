//! Basic graph pattern oracle: tries every assignment of store terms to
//! the query variables.

use std::collections::{BTreeSet, HashSet};

use pam_core::store::{PatternTerm, SelectQuery, TriplePattern};
use pam_core::{Graph, Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

fn ground(p: &PatternTerm, vars: &[String], values: &[&Term]) -> Term {
    match p {
        PatternTerm::Term(t) => t.clone(),
        PatternTerm::Var(v) => values[vars.iter().position(|x| x == v).unwrap()].clone(),
    }
}

/// Projected rows under set semantics.
pub fn answer(graph: &Graph, query: &SelectQuery) -> BTreeSet<Vec<Term>> {
    let triples: HashSet<&Triple> = graph.iter().collect();
    let mut universe = BTreeSet::new();
    for t in graph.iter() {
        universe.extend([&t.subject, &t.predicate, &t.object]);
    }
    let universe: Vec<&Term> = universe.into_iter().collect();
    let mut vars: Vec<String> = Vec::new();
    for p in &query.patterns {
        for t in p.terms() {
            if let Some(v) = t.var() {
                if !vars.iter().any(|x| x == v) {
                    vars.push(v.to_string());
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut choice = vec![0usize; vars.len()];
    if universe.is_empty() && !vars.is_empty() {
        return out;
    }
    loop {
        let values: Vec<&Term> = choice.iter().map(|&i| universe[i]).collect();
        let all_hold = query.patterns.iter().all(|p| {
            let t = Triple {
                subject: ground(&p.subject, &vars, &values),
                predicate: ground(&p.predicate, &vars, &values),
                object: ground(&p.object, &vars, &values),
            };
            triples.contains(&t)
        });
        if all_hold {
            out.insert(
                query
                    .vars
                    .iter()
                    .map(|v| values[vars.iter().position(|x| x == v).unwrap()].clone())
                    .collect(),
            );
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == choice.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < universe.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// One to three patterns over at most three variables. Most queries are
/// cut from a walk over real triples, replacing terms with variables
/// consistently, so they have at least one answer; the rest mix in
/// random variables and an absent IRI.
pub fn random_query<R: Rng>(rng: &mut R, graph: &Graph) -> SelectQuery {
    let triples: Vec<&Triple> = graph.iter().collect();
    let names = ["a", "b", "c"];
    let grounded = !triples.is_empty() && rng.gen_bool(0.8);
    let mut as_var: Vec<(Term, String)> = Vec::new();
    let mut patterns: Vec<TriplePattern> = Vec::new();
    let mut previous: Option<&Triple> = None;
    for _ in 0..rng.gen_range(1..=3) {
        let pattern = if grounded {
            let linked: Vec<&&Triple> = match previous {
                Some(p) => triples
                    .iter()
                    .filter(|t| t.subject == p.object || t.subject == p.subject || t.object == p.subject)
                    .collect(),
                None => Vec::new(),
            };
            let t = *linked.choose(rng).copied().unwrap_or_else(|| triples.choose(rng).unwrap());
            previous = Some(t);
            let mut slot = |rng: &mut R, term: &Term| -> PatternTerm {
                if let Some((_, v)) = as_var.iter().find(|(x, _)| x == term) {
                    return PatternTerm::Var(v.clone());
                }
                if as_var.len() < names.len() && rng.gen_bool(0.6) {
                    let v = names[as_var.len()].to_string();
                    as_var.push((term.clone(), v.clone()));
                    PatternTerm::Var(v)
                } else {
                    PatternTerm::Term(term.clone())
                }
            };
            TriplePattern {
                subject: slot(rng, &t.subject),
                predicate: slot(rng, &t.predicate),
                object: slot(rng, &t.object),
            }
        } else {
            let nvars = rng.gen_range(1..=3);
            let pick = |rng: &mut R, position: usize| -> PatternTerm {
                if rng.gen_bool(0.55) || triples.is_empty() {
                    PatternTerm::Var(names[rng.gen_range(0..nvars)].to_string())
                } else if rng.gen_bool(0.1) {
                    PatternTerm::Term(Term::iri("http://example.org/absent"))
                } else {
                    let t = triples.choose(rng).unwrap();
                    PatternTerm::Term(match position {
                        0 => t.subject.clone(),
                        1 => t.predicate.clone(),
                        _ => t.object.clone(),
                    })
                }
            };
            TriplePattern {
                subject: pick(rng, 0),
                predicate: pick(rng, 1),
                object: pick(rng, 2),
            }
        };
        patterns.push(pattern);
    }
    let mut used: Vec<String> = Vec::new();
    for p in &patterns {
        for t in p.terms() {
            if let Some(v) = t.var() {
                if !used.iter().any(|x| x == v) {
                    used.push(v.to_string());
                }
            }
        }
    }
    used.shuffle(rng);
    let keep = rng.gen_range(0..=used.len());
    used.truncate(keep.max(usize::from(!used.is_empty())));
    SelectQuery { vars: used, patterns }
}
