//! Minimal JSON-LD expansion to triples: enough of the algorithm to read
//! flattened documents with a local context, written without reference to
//! the serializer.

use std::collections::HashMap;

use pam_core::rdf::vocab;
use pam_core::{Graph, Literal, Term, Triple};
use serde_json::Value;

struct TermDef {
    id: String,
    coerce_id: bool,
}

struct Context {
    terms: HashMap<String, TermDef>,
}

impl Context {
    fn read(ctx: Option<&Value>) -> Result<Self, String> {
        let mut terms = HashMap::new();
        let Some(ctx) = ctx else {
            return Ok(Context { terms });
        };
        let obj = ctx.as_object().ok_or("@context must be an object")?;
        for (key, def) in obj {
            let def = match def {
                Value::String(id) => TermDef {
                    id: id.clone(),
                    coerce_id: false,
                },
                Value::Object(o) => TermDef {
                    id: o
                        .get("@id")
                        .and_then(Value::as_str)
                        .ok_or(format!("term {key} has no @id"))?
                        .to_string(),
                    coerce_id: o.get("@type").and_then(Value::as_str) == Some("@id"),
                },
                _ => return Err(format!("bad definition for {key}")),
            };
            terms.insert(key.clone(), def);
        }
        Ok(Context { terms })
    }

    /// Term lookup first, then `prefix:suffix`, then the value as-is.
    fn expand(&self, value: &str) -> String {
        if let Some(def) = self.terms.get(value) {
            return if def.id == value { def.id.clone() } else { self.expand(&def.id) };
        }
        if let Some((prefix, suffix)) = value.split_once(':') {
            if prefix != "_" && !suffix.starts_with("//") {
                if let Some(def) = self.terms.get(prefix) {
                    return format!("{}{suffix}", def.id);
                }
            }
        }
        value.to_string()
    }

    fn node(&self, value: &str) -> Result<Term, String> {
        match value.strip_prefix("_:") {
            Some(label) => Term::try_blank(label).map_err(|e| e.to_string()),
            None => Term::try_iri(self.expand(value)).map_err(|e| e.to_string()),
        }
    }
}

fn object(ctx: &Context, coerce_id: bool, v: &Value) -> Result<Term, String> {
    match v {
        Value::String(s) if coerce_id => ctx.node(s),
        Value::String(s) => Ok(Term::Literal(Literal::plain(s.clone()))),
        Value::Bool(b) => Ok(Term::typed_literal(b.to_string(), format!("{}boolean", vocab::XSD))),
        Value::Number(n) if n.is_i64() || n.is_u64() => {
            Ok(Term::typed_literal(n.to_string(), format!("{}integer", vocab::XSD)))
        }
        Value::Number(n) => Ok(Term::typed_literal(n.to_string(), format!("{}double", vocab::XSD))),
        Value::Object(o) => {
            if let Some(id) = o.get("@id") {
                return ctx.node(id.as_str().ok_or("@id must be a string")?);
            }
            let value = o.get("@value").ok_or("value object without @value")?;
            let text = match value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            if let Some(lang) = o.get("@language").and_then(Value::as_str) {
                return Literal::with_language(text, lang)
                    .map(Term::Literal)
                    .map_err(|e| e.to_string());
            }
            match o.get("@type").and_then(Value::as_str) {
                Some(dt) => Ok(Term::typed_literal(text, ctx.expand(dt))),
                None => object(ctx, false, value),
            }
        }
        _ => Err(format!("unsupported value {v}")),
    }
}

fn values(v: &Value) -> Vec<&Value> {
    match v {
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    }
}

/// Triples of a `{"@context", "@graph"}` document (or a single node).
pub fn expand(doc: &Value) -> Result<Graph, String> {
    let ctx = Context::read(doc.get("@context"))?;
    let nodes = match doc.get("@graph") {
        Some(g) => values(g),
        None => vec![doc],
    };
    let mut graph = Graph::new();
    for node in nodes {
        let obj = node.as_object().ok_or("node must be an object")?;
        let subject = ctx.node(obj.get("@id").and_then(Value::as_str).ok_or("node without @id")?)?;
        for (key, v) in obj {
            match key.as_str() {
                "@id" | "@context" => {}
                "@type" => {
                    for t in values(v) {
                        let class = ctx.node(t.as_str().ok_or("@type must be a string")?)?;
                        graph.insert(Triple::new(subject.clone(), Term::iri(vocab::RDF_TYPE), class));
                    }
                }
                _ => {
                    let predicate = Term::try_iri(ctx.expand(key)).map_err(|e| e.to_string())?;
                    let coerce = ctx.terms.get(key.as_str()).is_some_and(|d| d.coerce_id);
                    for item in values(v) {
                        let o = object(&ctx, coerce, item)?;
                        graph.insert(Triple::new(subject.clone(), predicate.clone(), o));
                    }
                }
            }
        }
    }
    Ok(graph)
}
