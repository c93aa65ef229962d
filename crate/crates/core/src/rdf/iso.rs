//! Graph isomorphism modulo blank node labels: color refinement followed by
//! a backtracking search over same-colored candidates. The same refinement,
//! with individualization of tied nodes, yields canonical blank labels.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use super::{Term, Triple};

fn has_blank(t: &Triple) -> bool {
    t.subject.is_blank() || t.object.is_blank()
}

fn blank_label(term: &Term) -> Option<&str> {
    match term {
        Term::Blank(l) => Some(l),
        _ => None,
    }
}

fn hash_of<T: Hash>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

struct Side<'a> {
    triples: Vec<&'a Triple>,
    set: HashSet<&'a Triple>,
    by_blank: HashMap<&'a str, Vec<usize>>,
    colors: HashMap<&'a str, u64>,
}

impl<'a> Side<'a> {
    fn new(triples: Vec<&'a Triple>) -> Self {
        let mut by_blank: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            for term in [&t.subject, &t.object] {
                if let Some(l) = blank_label(term) {
                    let entry = by_blank.entry(l).or_default();
                    if entry.last() != Some(&i) {
                        entry.push(i);
                    }
                }
            }
        }
        let colors = by_blank.keys().map(|l| (*l, 0u64)).collect();
        Side {
            set: triples.iter().copied().collect(),
            triples,
            by_blank,
            colors,
        }
    }

    fn signature(&self, term: &Term) -> u64 {
        match blank_label(term) {
            Some(l) => self.colors[l],
            None => hash_of(term),
        }
    }

    fn refine(&mut self) {
        let mut next = HashMap::with_capacity(self.colors.len());
        for (label, indices) in &self.by_blank {
            let mut facts: Vec<(u8, u64, u64)> = indices
                .iter()
                .map(|&i| {
                    let t = self.triples[i];
                    let pred = hash_of(&t.predicate);
                    let s_is = blank_label(&t.subject) == Some(label);
                    let o_is = blank_label(&t.object) == Some(label);
                    match (s_is, o_is) {
                        (true, true) => (2, pred, 0),
                        (true, false) => (0, pred, self.signature(&t.object)),
                        _ => (1, pred, self.signature(&t.subject)),
                    }
                })
                .collect();
            facts.sort_unstable();
            next.insert(*label, hash_of(&(self.colors[label], facts)));
        }
        self.colors = next;
    }

    fn refine_until_stable(&mut self) {
        loop {
            let before = self.distinct_colors();
            self.refine();
            if self.distinct_colors() == before {
                break;
            }
        }
    }

    fn distinct_colors(&self) -> usize {
        self.colors.values().collect::<HashSet<_>>().len()
    }

    fn histogram(&self) -> HashMap<u64, usize> {
        let mut h = HashMap::new();
        for c in self.colors.values() {
            *h.entry(*c).or_insert(0) += 1;
        }
        h
    }
}

/// Maps every blank label to `b0`, `b1`, ... so that isomorphic graphs get
/// identical labelings whenever refinement separates their nodes; nodes
/// left tied are individualized one at a time.
pub(super) fn canonical_labels(triples: &BTreeSet<Triple>) -> HashMap<String, String> {
    let mut side = Side::new(triples.iter().filter(|t| has_blank(t)).collect());
    side.refine_until_stable();
    loop {
        let histogram = side.histogram();
        let tied = side
            .colors
            .iter()
            .filter(|(_, c)| histogram[*c] > 1)
            .min_by_key(|(l, c)| (**c, **l))
            .map(|(l, c)| (*l, *c));
        let Some((label, color)) = tied else {
            break;
        };
        side.colors.insert(label, hash_of(&(color, "individualized")));
        side.refine_until_stable();
    }
    let mut order: Vec<(u64, &str)> = side.colors.iter().map(|(l, c)| (*c, *l)).collect();
    order.sort_unstable();
    order
        .into_iter()
        .enumerate()
        .map(|(i, (_, l))| (l.to_string(), format!("b{i}")))
        .collect()
}

pub(super) fn isomorphic(a: &BTreeSet<Triple>, b: &BTreeSet<Triple>) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ground_a = a.iter().filter(|t| !has_blank(t));
    let ground_b: Vec<_> = b.iter().filter(|t| !has_blank(t)).collect();
    if !ground_a.clone().eq(ground_b.iter().copied()) {
        return false;
    }
    let mut left = Side::new(a.iter().filter(|t| has_blank(t)).collect());
    let mut right = Side::new(b.iter().filter(|t| has_blank(t)).collect());
    if left.triples.len() != right.triples.len() || left.colors.len() != right.colors.len() {
        return false;
    }

    loop {
        let before = (left.distinct_colors(), right.distinct_colors());
        left.refine();
        right.refine();
        if left.histogram() != right.histogram() {
            return false;
        }
        if (left.distinct_colors(), right.distinct_colors()) == before {
            break;
        }
    }

    let mut order: Vec<&str> = left.colors.keys().copied().collect();
    let histogram = left.histogram();
    order.sort_by_key(|l| (histogram[&left.colors[l]], *l));

    let mut candidates: HashMap<u64, Vec<&str>> = HashMap::new();
    for (l, c) in &right.colors {
        candidates.entry(*c).or_default().push(l);
    }
    for list in candidates.values_mut() {
        list.sort_unstable();
    }

    let mut mapping: HashMap<&str, &str> = HashMap::new();
    let mut used: HashSet<&str> = HashSet::new();
    search(&left, &right, &order, 0, &candidates, &mut mapping, &mut used)
}

fn map_term(term: &Term, mapping: &HashMap<&str, &str>) -> Option<Term> {
    match term {
        Term::Blank(l) => mapping.get(l.as_str()).map(|m| Term::Blank((*m).to_string())),
        other => Some(other.clone()),
    }
}

fn search<'a>(
    left: &Side<'a>,
    right: &Side<'a>,
    order: &[&'a str],
    depth: usize,
    candidates: &HashMap<u64, Vec<&'a str>>,
    mapping: &mut HashMap<&'a str, &'a str>,
    used: &mut HashSet<&'a str>,
) -> bool {
    let Some(&label) = order.get(depth) else {
        return true;
    };
    let color = left.colors[label];
    for &candidate in candidates.get(&color).map(Vec::as_slice).unwrap_or(&[]) {
        if used.contains(candidate) {
            continue;
        }
        mapping.insert(label, candidate);
        let consistent = left.by_blank[label].iter().all(|&i| {
            let t = left.triples[i];
            match (map_term(&t.subject, mapping), map_term(&t.object, mapping)) {
                (Some(s), Some(o)) => right.set.contains(&Triple {
                    subject: s,
                    predicate: t.predicate.clone(),
                    object: o,
                }),
                _ => true,
            }
        });
        if consistent {
            used.insert(candidate);
            if search(left, right, order, depth + 1, candidates, mapping, used) {
                return true;
            }
            used.remove(candidate);
        }
        mapping.remove(label);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::super::{Graph, Term, Triple};

    fn p(n: &str) -> Term {
        Term::iri(format!("http://e/{n}"))
    }

    fn g(triples: &[(Term, Term, Term)]) -> Graph {
        triples
            .iter()
            .cloned()
            .map(|(s, p, o)| Triple::new(s, p, o))
            .collect()
    }

    #[test]
    fn relabeled_chain_is_isomorphic() {
        let a = g(&[
            (p("s"), p("p"), Term::blank("x")),
            (Term::blank("x"), p("q"), Term::blank("y")),
            (Term::blank("y"), p("r"), Term::literal("v")),
        ]);
        let b = g(&[
            (p("s"), p("p"), Term::blank("b7")),
            (Term::blank("b7"), p("q"), Term::blank("b2")),
            (Term::blank("b2"), p("r"), Term::literal("v")),
        ]);
        assert!(a.is_isomorphic(&b));
        let c = g(&[
            (p("s"), p("p"), Term::blank("b7")),
            (Term::blank("b7"), p("q"), Term::blank("b2")),
            (Term::blank("b7"), p("r"), Term::literal("v")),
        ]);
        assert!(!a.is_isomorphic(&c));
    }

    #[test]
    fn symmetric_structures_need_search() {
        // Two 2-cycles vs. one 4-cycle: same local colors, different shape.
        let e = p("e");
        let two = g(&[
            (Term::blank("a"), e.clone(), Term::blank("b")),
            (Term::blank("b"), e.clone(), Term::blank("a")),
            (Term::blank("c"), e.clone(), Term::blank("d")),
            (Term::blank("d"), e.clone(), Term::blank("c")),
        ]);
        let four = g(&[
            (Term::blank("a"), e.clone(), Term::blank("b")),
            (Term::blank("b"), e.clone(), Term::blank("c")),
            (Term::blank("c"), e.clone(), Term::blank("d")),
            (Term::blank("d"), e.clone(), Term::blank("a")),
        ]);
        assert!(!two.is_isomorphic(&four));
        let two_relabeled = g(&[
            (Term::blank("w"), e.clone(), Term::blank("x")),
            (Term::blank("x"), e.clone(), Term::blank("w")),
            (Term::blank("y"), e.clone(), Term::blank("z")),
            (Term::blank("z"), e.clone(), Term::blank("y")),
        ]);
        assert!(two.is_isomorphic(&two_relabeled));
    }

    #[test]
    fn ground_difference_detected() {
        let a = g(&[(p("s"), p("p"), p("o"))]);
        let b = g(&[(p("s"), p("p"), p("x"))]);
        assert!(!a.is_isomorphic(&b));
        assert!(Graph::new().is_isomorphic(&Graph::new()));
    }
}
