//! Graph oracles: CBD by breadth-first walk over a triple list and
//! isomorphism by backtracking over blank-node bijections.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use pam_core::{Graph, Term, Triple};

/// Triples of `graph` reachable from `root` through blank-node objects.
pub fn cbd(graph: &Graph, root: &Term) -> BTreeSet<Triple> {
    let all: Vec<&Triple> = graph.iter().collect();
    let mut out = BTreeSet::new();
    let mut seen = HashSet::from([root.clone()]);
    let mut queue = VecDeque::from([root.clone()]);
    while let Some(node) = queue.pop_front() {
        for t in all.iter().filter(|t| t.subject == node) {
            out.insert((*t).clone());
            if t.object.is_blank() && seen.insert(t.object.clone()) {
                queue.push_back(t.object.clone());
            }
        }
    }
    out
}

fn blanks(g: &Graph) -> Vec<Term> {
    let mut set = BTreeSet::new();
    for t in g.iter() {
        for x in [&t.subject, &t.object] {
            if x.is_blank() {
                set.insert(x.clone());
            }
        }
    }
    set.into_iter().collect()
}

fn signature(g: &Graph, b: &Term) -> (usize, usize) {
    let out = g.iter().filter(|t| &t.subject == b).count();
    let inn = g.iter().filter(|t| &t.object == b).count();
    (out, inn)
}

fn map_term(t: &Term, m: &BTreeMap<Term, Term>) -> Option<Term> {
    if t.is_blank() {
        m.get(t).cloned()
    } else {
        Some(t.clone())
    }
}

fn consistent(a: &Graph, b: &Graph, m: &BTreeMap<Term, Term>) -> bool {
    a.iter().all(|t| match (map_term(&t.subject, m), map_term(&t.object, m)) {
        (Some(s), Some(o)) => b.contains(&Triple::new(s, t.predicate.clone(), o)),
        _ => true,
    })
}

fn search(a: &Graph, b: &Graph, from: &[Term], to: &[Term], used: &mut Vec<bool>, m: &mut BTreeMap<Term, Term>) -> bool {
    let Some(x) = from.get(m.len()) else {
        return consistent(a, b, m);
    };
    let sig = signature(a, x);
    for (i, y) in to.iter().enumerate() {
        if used[i] || signature(b, y) != sig {
            continue;
        }
        m.insert(x.clone(), y.clone());
        used[i] = true;
        if consistent(a, b, m) && search(a, b, from, to, used, m) {
            return true;
        }
        used[i] = false;
        m.remove(x);
    }
    false
}

/// True when some bijection of blank nodes maps `a` onto `b`.
pub fn isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (from, to) = (blanks(a), blanks(b));
    if from.len() != to.len() {
        return false;
    }
    let mut used = vec![false; to.len()];
    search(a, b, &from, &to, &mut used, &mut BTreeMap::new())
}
