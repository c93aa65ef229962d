//! Seeded random inputs.

use pam_core::rdf::vocab;
use pam_core::{Graph, Literal, Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EX: &str = "http://example.org/";

pub fn iri(local: &str) -> Term {
    Term::iri(format!("{EX}{local}"))
}

/// Text drawn from a pool that exercises escaping: quotes, backslashes,
/// control characters, non-ASCII and surrogate-range neighbours.
pub fn lexical<R: Rng>(rng: &mut R) -> String {
    const PIECES: &[&str] = &[
        "a", "Kultur", " ", "\"", "\\", "\n", "\r", "\t", "'", "ä", "€", "𝔘", "<", ">", "#", "0", "1.5",
        "@", ":", "_", "-", "\u{7f}", "\u{1}",
    ];
    let n = rng.gen_range(0..6);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

pub fn literal<R: Rng>(rng: &mut R) -> Literal {
    let value = lexical(rng);
    match rng.gen_range(0..4) {
        0 => Literal::plain(value),
        1 => Literal::with_language(value, ["de", "en", "de-de"].choose(rng).unwrap()).unwrap(),
        2 => Literal::typed(rng.gen_range(-50i64..50).to_string(), format!("{}integer", vocab::XSD)),
        _ => Literal::typed(value, format!("{EX}dt{}", rng.gen_range(0..3))),
    }
}

fn node<R: Rng>(rng: &mut R, subjects: usize, blanks: usize) -> Term {
    if blanks > 0 && rng.gen_bool(0.3) {
        Term::blank(format!("n{}", rng.gen_range(0..blanks)))
    } else {
        iri(&format!("s{}", rng.gen_range(0..subjects)))
    }
}

/// A graph of up to `n` triples mixing IRIs, blank nodes and literals.
pub fn graph<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let subjects = (n / 3).max(2);
    let blanks = rng.gen_range(0..=(n / 5).max(1));
    let mut g = Graph::new();
    for _ in 0..n {
        let s = node(rng, subjects, blanks);
        let p = if rng.gen_bool(0.1) {
            Term::iri(vocab::RDF_TYPE)
        } else {
            iri(&format!("p{}", rng.gen_range(0..6)))
        };
        let o = if rng.gen_bool(0.4) {
            Term::Literal(literal(rng))
        } else {
            node(rng, subjects, blanks)
        };
        g.insert(Triple::new(s, p, o));
    }
    g
}

/// A concise bounded description rooted at `ex:root`: multi-valued
/// predicates, nested blank-node chains, typed and tagged literals.
pub fn cbd<R: Rng>(rng: &mut R) -> (Term, Graph) {
    let root = iri("root");
    let mut g = Graph::new();
    let mut next_blank = 0usize;
    let mut frontier = vec![(root.clone(), 0usize)];
    while let Some((subject, depth)) = frontier.pop() {
        let props = rng.gen_range(1..5);
        for _ in 0..props {
            let p = iri(&format!("p{}", rng.gen_range(0..5)));
            let values = if rng.gen_bool(0.3) { rng.gen_range(2..5) } else { 1 };
            for _ in 0..values {
                let o = match rng.gen_range(0..10) {
                    0..=3 => Term::Literal(literal(rng)),
                    4..=5 => iri(&format!("o{}", rng.gen_range(0..8))),
                    6 => Term::iri(format!("urn:x-{}:{}", rng.gen_range(0..2), rng.gen_range(0..4))),
                    _ if depth < 3 => {
                        let b = Term::blank(format!("c{next_blank}"));
                        next_blank += 1;
                        frontier.push((b.clone(), depth + 1));
                        b
                    }
                    _ => Term::Literal(literal(rng)),
                };
                g.insert(Triple::new(subject.clone(), p.clone(), o));
            }
        }
        if rng.gen_bool(0.4) {
            let class = iri(&format!("C{}", rng.gen_range(0..3)));
            g.insert(Triple::new(subject, Term::iri(vocab::RDF_TYPE), class));
        }
    }
    (root, g)
}

/// A graph over a small vocabulary so that random patterns hit often.
pub fn dense_graph<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let mut g = Graph::new();
    for _ in 0..n {
        let s = if rng.gen_bool(0.15) {
            Term::blank(format!("b{}", rng.gen_range(0..4)))
        } else {
            iri(&format!("s{}", rng.gen_range(0..14)))
        };
        let p = iri(&format!("p{}", rng.gen_range(0..5)));
        let o = match rng.gen_range(0..10) {
            0..=5 => iri(&format!("s{}", rng.gen_range(0..14))),
            6 => Term::blank(format!("b{}", rng.gen_range(0..4))),
            _ => Term::literal(format!("v{}", rng.gen_range(0..5))),
        };
        g.insert(Triple::new(s, p, o));
    }
    g
}

/// Registration-style ids with one or more slashes, e.g. `034028-60/07-004`.
pub fn awg_id<R: Rng>(rng: &mut R) -> String {
    const ALPHABET: &[u8] = b"0123456789ABCDEFXYZ-/._ ";
    let mut id = String::new();
    let len = rng.gen_range(1..24);
    for _ in 0..len {
        id.push(*ALPHABET.choose(rng).unwrap() as char);
    }
    let slashes = rng.gen_range(1..4);
    for _ in 0..slashes {
        let at = rng.gen_range(0..=id.len());
        id.insert(at, '/');
    }
    id
}
