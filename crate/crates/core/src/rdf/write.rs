//! N-Triples and Turtle serializers. Output is a pure function of the
//! triple set and prefix map; blank nodes are written with canonical
//! labels, so their input labels do not matter.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{vocab, Graph, Literal, PrefixMap, Term, Triple};

fn escape_iri(iri: &str, out: &mut String) {
    for c in iri.chars() {
        if c <= ' ' || "<>\"{}|^`\\".contains(c) {
            let _ = write!(out, "\\u{:04X}", c as u32);
        } else {
            out.push(c);
        }
    }
}

fn escape_literal(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c < ' ' || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

fn write_iri(iri: &str, out: &mut String) {
    out.push('<');
    escape_iri(iri, out);
    out.push('>');
}

fn write_literal(lit: &Literal, out: &mut String, datatype: impl Fn(&str, &mut String)) {
    out.push('"');
    escape_literal(lit.value(), out);
    out.push('"');
    if let Some(lang) = lit.language() {
        out.push('@');
        out.push_str(lang);
    } else if let Some(dt) = lit.datatype() {
        out.push_str("^^");
        datatype(dt, out);
    }
}

/// N-Triples rendering of a single term.
pub fn term_to_ntriples(term: &Term) -> String {
    let mut out = String::new();
    match term {
        Term::Iri(iri) => write_iri(iri, &mut out),
        Term::Blank(label) => {
            out.push_str("_:");
            out.push_str(label);
        }
        Term::Literal(lit) => write_literal(lit, &mut out, write_iri),
    }
    out
}

fn triple_line(t: &Triple) -> String {
    format!(
        "{} {} {} .\n",
        term_to_ntriples(&t.subject),
        term_to_ntriples(&t.predicate),
        term_to_ntriples(&t.object)
    )
}

/// One triple per line, lines sorted lexicographically, LF endings.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let graph = &graph.with_canonical_blanks();
    let lines: BTreeSet<String> = graph.iter().map(triple_line).collect();
    lines.into_iter().collect()
}

fn is_local_start(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == ':' || c == '%' || (!c.is_ascii() && c.is_alphanumeric())
}

/// True if `local` can be written after `prefix:` and read back unchanged.
fn is_safe_local(local: &str) -> bool {
    let chars: Vec<char> = local.chars().collect();
    if chars.is_empty() {
        return true;
    }
    if !is_local_start(chars[0]) || chars[chars.len() - 1] == '.' {
        return false;
    }
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '%' {
            if !(chars.get(i + 1).is_some_and(|h| h.is_ascii_hexdigit())
                && chars.get(i + 2).is_some_and(|h| h.is_ascii_hexdigit()))
            {
                return false;
            }
            i += 3;
            continue;
        }
        let ok = c.is_ascii_alphanumeric()
            || matches!(c, '_' | '-' | '.' | ':')
            || (!c.is_ascii() && c.is_alphanumeric());
        if !ok {
            return false;
        }
        i += 1;
    }
    true
}

fn write_turtle_iri(iri: &str, prefixes: &PrefixMap, out: &mut String) {
    if let Some((label, local)) = prefixes.compact(iri) {
        if is_safe_local(local) {
            out.push_str(label);
            out.push(':');
            out.push_str(local);
            return;
        }
    }
    write_iri(iri, out);
}

fn write_turtle_term(term: &Term, prefixes: &PrefixMap, out: &mut String) {
    match term {
        Term::Iri(iri) => write_turtle_iri(iri, prefixes, out),
        Term::Blank(label) => {
            out.push_str("_:");
            out.push_str(label);
        }
        Term::Literal(lit) => {
            write_literal(lit, out, |dt, out| write_turtle_iri(dt, prefixes, out))
        }
    }
}

/// Turtle with an `@prefix` line per prefix entry and one block per
/// subject. `rdf:type` is written first, as `a`.
pub fn serialize_turtle(graph: &Graph) -> String {
    let graph = &graph.with_canonical_blanks();
    let prefixes = &graph.prefixes;
    let mut out = String::new();
    for (label, ns) in prefixes.iter() {
        out.push_str("@prefix ");
        out.push_str(label);
        out.push_str(": ");
        write_iri(ns, &mut out);
        out.push_str(" .\n");
    }

    let triples: Vec<&Triple> = graph.iter().collect();
    let mut start = 0;
    while start < triples.len() {
        let subject = &triples[start].subject;
        let end = start
            + triples[start..]
                .iter()
                .take_while(|t| &t.subject == subject)
                .count();
        let block = &triples[start..end];

        let mut predicates: Vec<&Term> = Vec::new();
        for t in block {
            if predicates.last() != Some(&&t.predicate) {
                predicates.push(&t.predicate);
            }
        }
        // rdf:type goes first; the remaining predicates keep canonical order.
        predicates.sort_by_key(|p| p.as_iri() != Some(vocab::RDF_TYPE));

        out.push('\n');
        write_turtle_term(subject, prefixes, &mut out);
        for (i, predicate) in predicates.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { " ;\n    " });
            if predicate.as_iri() == Some(vocab::RDF_TYPE) {
                out.push('a');
            } else {
                write_turtle_term(predicate, prefixes, &mut out);
            }
            let objects = block.iter().filter(|t| &&t.predicate == predicate);
            for (j, t) in objects.enumerate() {
                out.push_str(if j == 0 { " " } else { ", " });
                write_turtle_term(&t.object, prefixes, &mut out);
            }
        }
        out.push_str(" .\n");
        start = end;
    }
    out
}
