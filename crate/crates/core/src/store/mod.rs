//! In-memory triple store with subject, predicate and object indexes,
//! answering DESCRIBE (concise bounded description) and basic graph
//! pattern SELECT queries.

mod query;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde_json::{json, Map, Value as Json};

use crate::rdf::{term_to_ntriples, Graph, PrefixMap, Term, Triple};

pub use query::{parse_query, PatternTerm, Query, QueryForm, SelectQuery, TriplePattern};

type Ids = [u32; 3];

/// Terms are interned to `u32` ids; each triple is kept in three sorted
/// sets keyed (s, p, o), (p, o, s) and (o, s, p).
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    terms: Vec<Term>,
    ids: HashMap<Term, u32>,
    spo: BTreeSet<Ids>,
    pos: BTreeSet<Ids>,
    osp: BTreeSet<Ids>,
    prefixes: PrefixMap,
}

/// Rows of a SELECT answer; each row binds every projected variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Graph(Graph),
    Bindings(Solution),
}

fn range(set: &BTreeSet<Ids>, a: u32, b: Option<u32>) -> impl Iterator<Item = &Ids> {
    let (lo, hi) = match b {
        Some(b) => ([a, b, 0], [a, b, u32::MAX]),
        None => ([a, 0, 0], [a, u32::MAX, u32::MAX]),
    };
    set.range(lo..=hi)
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_graph(graph: &Graph) -> Self {
        let mut store = Self::new();
        store.load_graph(graph);
        store
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    fn intern(&mut self, term: &Term) -> u32 {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = u32::try_from(self.terms.len()).expect("fewer than 2^32 distinct terms");
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }

    /// Returns false if the triple was already present.
    pub fn insert(&mut self, triple: &Triple) -> bool {
        let s = self.intern(&triple.subject);
        let p = self.intern(&triple.predicate);
        let o = self.intern(&triple.object);
        if !self.spo.insert([s, p, o]) {
            return false;
        }
        self.pos.insert([p, o, s]);
        self.osp.insert([o, s, p]);
        true
    }

    /// Adds all triples of `graph` and merges its prefixes; on a label
    /// conflict the graph's namespace wins.
    pub fn load_graph(&mut self, graph: &Graph) {
        for t in graph {
            self.insert(t);
        }
        self.prefixes.merge(&graph.prefixes);
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        match (
            self.ids.get(&triple.subject),
            self.ids.get(&triple.predicate),
            self.ids.get(&triple.object),
        ) {
            (Some(&s), Some(&p), Some(&o)) => self.spo.contains(&[s, p, o]),
            _ => false,
        }
    }

    fn triple(&self, [s, p, o]: Ids) -> Triple {
        Triple {
            subject: self.terms[s as usize].clone(),
            predicate: self.terms[p as usize].clone(),
            object: self.terms[o as usize].clone(),
        }
    }

    /// Id triples (s, p, o) matching the bound positions, using the index
    /// whose key prefix covers them.
    fn scan(&self, s: Option<u32>, p: Option<u32>, o: Option<u32>) -> Box<dyn Iterator<Item = Ids> + '_> {
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                Box::new(self.spo.contains(&[s, p, o]).then_some([s, p, o]).into_iter())
            }
            (Some(s), p, None) => Box::new(range(&self.spo, s, p).copied()),
            (Some(s), None, Some(o)) => Box::new(range(&self.osp, o, Some(s)).map(|&[o, s, p]| [s, p, o])),
            (None, Some(p), o) => Box::new(range(&self.pos, p, o).map(|&[p, o, s]| [s, p, o])),
            (None, None, Some(o)) => Box::new(range(&self.osp, o, None).map(|&[o, s, p]| [s, p, o])),
            (None, None, None) => Box::new(self.spo.iter().copied()),
        }
    }

    /// Triples matching a pattern where `None` is a wildcard.
    pub fn find(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let lookup = |t: Option<&Term>| match t {
            None => Some(None),
            Some(t) => self.ids.get(t).map(|&id| Some(id)),
        };
        let (Some(s), Some(p), Some(o)) = (lookup(s), lookup(p), lookup(o)) else {
            return Vec::new();
        };
        self.scan(s, p, o).map(|ids| self.triple(ids)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&ids| self.triple(ids))
    }

    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::with_prefixes(self.prefixes.clone());
        g.extend(self.iter());
        g
    }

    /// Concise bounded description of `target`: its outgoing triples plus,
    /// transitively, the outgoing triples of every blank node reached as an
    /// object. The result carries the store's prefixes.
    pub fn describe(&self, target: &Term) -> Graph {
        let mut out = Graph::with_prefixes(self.prefixes.clone());
        let Some(&start) = self.ids.get(target) else {
            return out;
        };
        let mut visited = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            for ids in self.scan(Some(node), None, None) {
                let o = ids[2];
                if self.terms[o as usize].is_blank() && visited.insert(o) {
                    queue.push_back(o);
                }
                out.insert(self.triple(ids));
            }
        }
        out
    }

    /// Basic graph pattern matching with set semantics. Rows are sorted by
    /// the N-Triples rendering of their bindings.
    pub fn select(&self, query: &SelectQuery) -> Solution {
        let empty = Solution {
            vars: query.vars.clone(),
            rows: Vec::new(),
        };
        let mut var_index: Vec<&str> = Vec::new();
        let mut compiled = Vec::with_capacity(query.patterns.len());
        for pattern in &query.patterns {
            let mut slots = [Slot::Var(0); 3];
            for (slot, term) in slots.iter_mut().zip(pattern.terms()) {
                *slot = match term {
                    PatternTerm::Term(t) => match self.ids.get(t) {
                        Some(&id) => Slot::Const(id),
                        None => return empty,
                    },
                    PatternTerm::Var(v) => Slot::Var(match var_index.iter().position(|x| x == v) {
                        Some(i) => i,
                        None => {
                            var_index.push(v);
                            var_index.len() - 1
                        }
                    }),
                };
            }
            compiled.push(slots);
        }
        let projection: Vec<usize> = query
            .vars
            .iter()
            .map(|v| {
                var_index
                    .iter()
                    .position(|x| x == v)
                    .expect("projected variables occur in the pattern")
            })
            .collect();

        let order = join_order(&compiled);
        let mut bindings = vec![None; var_index.len()];
        let mut found: HashSet<Vec<u32>> = HashSet::new();
        self.match_patterns(&order, &mut bindings, &mut |b| {
            found.insert(projection.iter().map(|&i| b[i].expect("all pattern variables bound")).collect());
        });

        let mut rows: Vec<(Vec<String>, Vec<Term>)> = found
            .into_iter()
            .map(|ids| {
                let terms: Vec<Term> = ids.iter().map(|&id| self.terms[id as usize].clone()).collect();
                (terms.iter().map(term_to_ntriples).collect(), terms)
            })
            .collect();
        rows.sort();
        Solution {
            vars: query.vars.clone(),
            rows: rows.into_iter().map(|(_, r)| r).collect(),
        }
    }

    fn match_patterns(&self, patterns: &[[Slot; 3]], bindings: &mut Vec<Option<u32>>, emit: &mut dyn FnMut(&[Option<u32>])) {
        let Some((first, rest)) = patterns.split_first() else {
            emit(bindings);
            return;
        };
        let bound = |slot: Slot, b: &[Option<u32>]| match slot {
            Slot::Const(id) => Some(id),
            Slot::Var(v) => b[v],
        };
        let (s, p, o) = (bound(first[0], bindings), bound(first[1], bindings), bound(first[2], bindings));
        for ids in self.scan(s, p, o) {
            let mut newly = Vec::new();
            let mut consistent = true;
            for (slot, id) in first.iter().zip(ids) {
                if let Slot::Var(v) = *slot {
                    match bindings[v] {
                        Some(existing) if existing != id => {
                            consistent = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            bindings[v] = Some(id);
                            newly.push(v);
                        }
                    }
                }
            }
            if consistent {
                self.match_patterns(rest, bindings, emit);
            }
            for v in newly {
                bindings[v] = None;
            }
        }
    }

    pub fn execute(&self, query: &Query) -> QueryResult {
        match &query.form {
            QueryForm::Describe(target) => QueryResult::Graph(self.describe(target)),
            QueryForm::Select(select) => QueryResult::Bindings(self.select(select)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Const(u32),
    Var(usize),
}

/// Greedy order: repeatedly take the pattern with the most positions bound
/// by constants or by variables of earlier patterns.
fn join_order(patterns: &[[Slot; 3]]) -> Vec<[Slot; 3]> {
    let mut remaining: Vec<[Slot; 3]> = patterns.to_vec();
    let mut bound_vars: HashSet<usize> = HashSet::new();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score = |p: &[Slot; 3]| {
            p.iter()
                .filter(|s| match s {
                    Slot::Const(_) => true,
                    Slot::Var(v) => bound_vars.contains(v),
                })
                .count()
        };
        let (best, _) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(i, p)| (score(p), std::cmp::Reverse(*i)))
            .expect("non-empty");
        let p = remaining.remove(best);
        for s in p {
            if let Slot::Var(v) = s {
                bound_vars.insert(v);
            }
        }
        order.push(p);
    }
    order
}

fn term_json(term: &Term) -> Json {
    match term {
        Term::Iri(iri) => json!({"type": "uri", "value": iri}),
        Term::Blank(label) => json!({"type": "bnode", "value": label}),
        Term::Literal(lit) => {
            let mut obj = Map::new();
            obj.insert("type".into(), "literal".into());
            obj.insert("value".into(), lit.value().into());
            if let Some(lang) = lit.language() {
                obj.insert("xml:lang".into(), lang.into());
            } else if let Some(dt) = lit.datatype() {
                obj.insert("datatype".into(), dt.into());
            }
            Json::Object(obj)
        }
    }
}

impl Solution {
    /// `{"head": {"vars": [...]}, "results": {"bindings": [...]}}`.
    pub fn to_json(&self) -> Json {
        let bindings: Vec<Json> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Json> = self
                    .vars
                    .iter()
                    .zip(row)
                    .map(|(v, t)| (v.clone(), term_json(t)))
                    .collect();
                Json::Object(obj)
            })
            .collect();
        json!({"head": {"vars": self.vars}, "results": {"bindings": bindings}})
    }
}
