//! Query parser for the DESCRIBE and SELECT forms.
//!
//! ```text
//! PREFIX label: <ns>  ...
//! DESCRIBE <iri> | DESCRIBE prefixed:name
//! SELECT [DISTINCT] (?v ... | *) [WHERE] { s p o [; p o] [, o] . ... }
//! ```
//!
//! Blank nodes in patterns act as variables that cannot be projected.

use crate::rdf::lexer::{Dialect, Spanned, Tok};
use crate::rdf::turtle::{error_at, resolve_iri, syntax, TokenStream};
use crate::rdf::{is_absolute_iri, vocab, Literal, ParseError, ParseErrorKind, PrefixMap, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternTerm {
    Term(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    /// Projected variables without the leading `?`.
    pub vars: Vec<String>,
    pub patterns: Vec<TriplePattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryForm {
    Describe(Term),
    Select(SelectQuery),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub prologue: PrefixMap,
    pub form: QueryForm,
}

const UNSUPPORTED_FORMS: &[&str] = &[
    "CONSTRUCT", "ASK", "INSERT", "DELETE", "LOAD", "CLEAR", "DROP", "CREATE", "ADD", "MOVE", "COPY",
    "WITH",
];
const UNSUPPORTED_GROUP: &[&str] = &[
    "OPTIONAL", "FILTER", "UNION", "GRAPH", "MINUS", "BIND", "VALUES", "SERVICE",
];
const UNSUPPORTED_MODIFIERS: &[&str] = &["ORDER", "LIMIT", "OFFSET", "GROUP", "HAVING", "FROM"];

fn keyword_is(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
}

fn keyword_in(tok: &Tok, set: &[&str]) -> Option<String> {
    match tok {
        Tok::Word(w) if set.iter().any(|k| k.eq_ignore_ascii_case(w)) => Some(w.to_ascii_uppercase()),
        _ => None,
    }
}

struct QueryParser<'a> {
    tokens: TokenStream<'a>,
    prefixes: PrefixMap,
}

/// Parses a DESCRIBE or SELECT query.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let mut parser = QueryParser {
        tokens: TokenStream::new(text, Dialect::Sparql),
        prefixes: PrefixMap::new(),
    };
    parser.query()
}

impl QueryParser<'_> {
    fn unsupported(at: &Spanned, what: impl Into<String>) -> ParseError {
        error_at(at, ParseErrorKind::Unsupported(what.into()))
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        loop {
            let t = self.tokens.next()?;
            if keyword_is(&t.tok, "PREFIX") {
                self.prefix_decl()?;
                continue;
            }
            if keyword_is(&t.tok, "BASE") {
                return Err(Self::unsupported(&t, "BASE"));
            }
            let form = if keyword_is(&t.tok, "DESCRIBE") {
                self.describe()?
            } else if keyword_is(&t.tok, "SELECT") {
                self.select(&t)?
            } else if let Some(kw) = keyword_in(&t.tok, UNSUPPORTED_FORMS) {
                return Err(Self::unsupported(&t, format!("{kw} queries")));
            } else {
                return Err(syntax(
                    &t,
                    format!("expected PREFIX, DESCRIBE or SELECT, found {}", t.tok.describe()),
                ));
            };
            let end = self.tokens.next()?;
            if let Some(kw) = keyword_in(&end.tok, UNSUPPORTED_MODIFIERS) {
                return Err(Self::unsupported(&end, kw));
            }
            if end.tok != Tok::Eof {
                return Err(syntax(&end, format!("unexpected {}", end.tok.describe())));
            }
            return Ok(Query {
                prologue: std::mem::take(&mut self.prefixes),
                form,
            });
        }
    }

    fn prefix_decl(&mut self) -> Result<(), ParseError> {
        let t = self.tokens.next()?;
        let label = match &t.tok {
            Tok::PName { prefix, local } if local.is_empty() => prefix.clone(),
            _ => return Err(syntax(&t, "expected prefix label ending in ':'")),
        };
        let iri = self.tokens.next()?;
        let Tok::IriRef(ns) = &iri.tok else {
            return Err(syntax(&iri, "expected namespace IRI"));
        };
        if !is_absolute_iri(ns) {
            return Err(error_at(&iri, ParseErrorKind::RelativeIri(ns.clone())));
        }
        self.prefixes
            .insert(label, ns.clone())
            .map_err(|e| syntax(&t, e.to_string()))?;
        Ok(())
    }

    fn iri(&self, t: &Spanned) -> Result<Option<Term>, ParseError> {
        match &t.tok {
            Tok::IriRef(raw) => resolve_iri(raw, None)
                .map(|i| Some(Term::Iri(i)))
                .ok_or_else(|| error_at(t, ParseErrorKind::RelativeIri(raw.clone()))),
            Tok::PName { prefix, local } => match self.prefixes.expand(prefix, local) {
                Some(iri) => Ok(Some(Term::Iri(iri))),
                None => Err(error_at(t, ParseErrorKind::UndefinedPrefix(prefix.clone()))),
            },
            _ => Ok(None),
        }
    }

    fn describe(&mut self) -> Result<QueryForm, ParseError> {
        let t = self.tokens.next()?;
        match self.iri(&t)? {
            Some(target) => Ok(QueryForm::Describe(target)),
            None if matches!(t.tok, Tok::Var(_) | Tok::Star) => {
                Err(Self::unsupported(&t, "DESCRIBE with variables"))
            }
            None => Err(syntax(&t, format!("expected IRI after DESCRIBE, found {}", t.tok.describe()))),
        }
    }

    fn select(&mut self, select_tok: &Spanned) -> Result<QueryForm, ParseError> {
        let first = self.tokens.peek()?.clone();
        if keyword_is(&first.tok, "DISTINCT") || keyword_is(&first.tok, "REDUCED") {
            self.tokens.next()?;
        }
        let mut vars: Vec<String> = Vec::new();
        let mut star = false;
        loop {
            let t = self.tokens.peek()?.clone();
            match &t.tok {
                Tok::Var(v) => {
                    self.tokens.next()?;
                    if !vars.contains(v) {
                        vars.push(v.clone());
                    }
                }
                Tok::Star if vars.is_empty() && !star => {
                    self.tokens.next()?;
                    star = true;
                }
                Tok::LParen => return Err(Self::unsupported(&t, "projection expressions")),
                _ => break,
            }
        }
        if vars.is_empty() && !star {
            return Err(syntax(select_tok, "SELECT needs at least one variable or '*'"));
        }
        let t = self.tokens.peek()?.clone();
        if keyword_is(&t.tok, "WHERE") {
            self.tokens.next()?;
        } else if let Some(kw) = keyword_in(&t.tok, UNSUPPORTED_MODIFIERS) {
            return Err(Self::unsupported(&t, kw));
        }
        let open = self.tokens.expect(&Tok::LBrace, "'{'")?;
        let patterns = self.group()?;
        if patterns.is_empty() {
            return Err(syntax(&open, "empty graph pattern"));
        }

        let mut seen: Vec<String> = Vec::new();
        for p in &patterns {
            for v in p.terms().into_iter().filter_map(PatternTerm::var) {
                if !v.starts_with("_:") && !seen.iter().any(|s| s == v) {
                    seen.push(v.to_string());
                }
            }
        }
        if star {
            vars = seen;
        } else if let Some(missing) = vars.iter().find(|v| !seen.contains(v)) {
            return Err(syntax(select_tok, format!("?{missing} does not occur in the pattern")));
        }
        Ok(QueryForm::Select(SelectQuery { vars, patterns }))
    }

    /// Called after `{`; consumes up to and including `}`.
    fn group(&mut self) -> Result<Vec<TriplePattern>, ParseError> {
        let mut patterns = Vec::new();
        loop {
            let t = self.tokens.peek()?.clone();
            match &t.tok {
                Tok::RBrace => {
                    self.tokens.next()?;
                    return Ok(patterns);
                }
                Tok::LBrace => return Err(Self::unsupported(&t, "nested group patterns")),
                Tok::LBracket | Tok::LParen => {
                    return Err(Self::unsupported(&t, "blank node or collection syntax in patterns"))
                }
                _ => {}
            }
            if let Some(kw) = keyword_in(&t.tok, UNSUPPORTED_GROUP) {
                return Err(Self::unsupported(&t, kw));
            }
            self.tokens.next()?;
            let subject = self.pattern_term(&t, "subject")?;
            self.property_list(&subject, &mut patterns)?;
            let after = self.tokens.peek()?.clone();
            match after.tok {
                Tok::Dot => {
                    self.tokens.next()?;
                }
                Tok::RBrace => {}
                _ if keyword_in(&after.tok, UNSUPPORTED_GROUP).is_some() => {}
                _ => return Err(syntax(&after, format!("expected '.' or '}}', found {}", after.tok.describe()))),
            }
        }
    }

    fn property_list(&mut self, subject: &PatternTerm, out: &mut Vec<TriplePattern>) -> Result<(), ParseError> {
        loop {
            let t = self.tokens.next()?;
            let predicate = match &t.tok {
                Tok::A => PatternTerm::Term(Term::Iri(vocab::RDF_TYPE.to_string())),
                Tok::Str(_) | Tok::Blank(_) => {
                    return Err(syntax(&t, format!("expected predicate, found {}", t.tok.describe())))
                }
                _ => self.pattern_term(&t, "predicate")?,
            };
            loop {
                let o = self.tokens.next()?;
                let object = self.pattern_term(&o, "object")?;
                out.push(TriplePattern {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                });
                if self.tokens.peek()?.tok == Tok::Comma {
                    self.tokens.next()?;
                } else {
                    break;
                }
            }
            if self.tokens.peek()?.tok != Tok::Semi {
                return Ok(());
            }
            while self.tokens.peek()?.tok == Tok::Semi {
                self.tokens.next()?;
            }
            let next = &self.tokens.peek()?.tok;
            if matches!(next, Tok::Dot | Tok::RBrace) {
                return Ok(());
            }
        }
    }

    fn pattern_term(&mut self, t: &Spanned, position: &str) -> Result<PatternTerm, ParseError> {
        match &t.tok {
            Tok::Var(v) => Ok(PatternTerm::Var(v.clone())),
            Tok::Blank(label) => Ok(PatternTerm::Var(format!("_:{label}"))),
            Tok::Str(value) => Ok(PatternTerm::Term(self.literal_tail(value.clone())?)),
            Tok::Word(w) if position == "object" => Ok(PatternTerm::Term(shorthand_literal(t, w)?)),
            _ => match self.iri(t)? {
                Some(iri) => Ok(PatternTerm::Term(iri)),
                None => Err(syntax(t, format!("expected {position}, found {}", t.tok.describe()))),
            },
        }
    }

    fn literal_tail(&mut self, value: String) -> Result<Term, ParseError> {
        let t = self.tokens.peek()?.clone();
        match &t.tok {
            Tok::LangTag(tag) => {
                self.tokens.next()?;
                Literal::with_language(value, tag)
                    .map(Term::Literal)
                    .map_err(|e| syntax(&t, e.to_string()))
            }
            Tok::DoubleCaret => {
                self.tokens.next()?;
                let dt = self.tokens.next()?;
                match self.iri(&dt)? {
                    Some(Term::Iri(iri)) => Ok(Term::Literal(Literal::typed(value, iri))),
                    _ => Err(syntax(&dt, "expected datatype IRI")),
                }
            }
            _ => Ok(Term::literal(value)),
        }
    }
}

fn shorthand_literal(t: &Spanned, word: &str) -> Result<Term, ParseError> {
    let xsd = |local: &str| format!("{}{local}", vocab::XSD);
    let digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    let body = word.strip_prefix('+').unwrap_or(word);
    if digits(body) {
        return Ok(Term::typed_literal(word, xsd("integer")));
    }
    if let Some((int, frac)) = body.split_once('.') {
        if (int.is_empty() || digits(int)) && digits(frac) {
            return Ok(Term::typed_literal(word, xsd("decimal")));
        }
    }
    if word == "true" || word == "false" {
        return Ok(Term::typed_literal(word, xsd("boolean")));
    }
    Err(syntax(t, format!("unexpected {word:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG_QUERY: &str = "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n\
        PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n\
        PREFIX psm: <http://srv.ktbl.de/data/psm/>\n\
        PREFIX psmr: <http://srv.ktbl.de/data/psm/resources/>\n\
        \n\
        DESCRIBE psmr:ind_034028-60-07-004\n";

    #[test]
    fn describe_with_prologue() {
        let q = parse_query(FIG_QUERY).unwrap();
        assert_eq!(q.prologue.len(), 4);
        assert_eq!(
            q.form,
            QueryForm::Describe(Term::iri("http://srv.ktbl.de/data/psm/resources/ind_034028-60-07-004"))
        );
    }

    #[test]
    fn select_with_a_keyword() {
        let q = parse_query("PREFIX psm: <http://srv.ktbl.de/data/psm/> SELECT ?i WHERE { ?i a psm:Indication . }")
            .unwrap();
        let QueryForm::Select(s) = q.form else { panic!() };
        assert_eq!(s.vars, vec!["i"]);
        assert_eq!(s.patterns.len(), 1);
        assert_eq!(
            s.patterns[0].predicate,
            PatternTerm::Term(Term::iri(vocab::RDF_TYPE))
        );
    }

    #[test]
    fn iri_followed_by_a_word_is_a_syntax_error() {
        let err = parse_query("SELECT ?c WHERE { ?i <http://srv.ktbl.de/data/psm/>appliedOnCrop ?c . }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)), "{err}");
    }

    #[test]
    fn lists_star_and_literals() {
        let q = parse_query(
            "select * { ?s <http://e/p> ?o , \"x\"@de ; <http://e/q> 5, _:b . ?o ?p 'y'^^<http://e/t> }",
        )
        .unwrap();
        let QueryForm::Select(s) = q.form else { panic!() };
        assert_eq!(s.vars, vec!["s", "o", "p"]);
        assert_eq!(s.patterns.len(), 5);
        assert_eq!(
            s.patterns[2].object,
            PatternTerm::Term(Term::typed_literal("5", "http://www.w3.org/2001/XMLSchema#integer"))
        );
        assert_eq!(s.patterns[3].object, PatternTerm::Var("_:b".into()));
        assert_eq!(s.patterns[4].subject, PatternTerm::Var("o".into()));
    }

    #[test]
    fn unsupported_and_invalid_forms() {
        for (text, word) in [
            ("CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }", "CONSTRUCT"),
            ("ASK { ?s ?p ?o }", "ASK"),
            ("INSERT DATA { <http://e/a> <http://e/b> <http://e/c> }", "INSERT"),
            ("SELECT ?s { ?s ?p ?o OPTIONAL { ?s ?q ?r } }", "OPTIONAL"),
            ("SELECT ?s { ?s ?p ?o FILTER(?o) }", "FILTER"),
            ("SELECT ?s { ?s ?p ?o } LIMIT 5", "LIMIT"),
        ] {
            match parse_query(text) {
                Err(ParseError { kind: ParseErrorKind::Unsupported(m), .. }) => assert!(m.contains(word), "{m}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        for text in ["", "SELECT { ?s ?p ?o }", "SELECT ?x { ?s ?p ?o }", "SELECT ?s { }", "DESCRIBE", "SELECT ?s { ?s ?p }"] {
            assert!(matches!(parse_query(text), Err(ParseError { kind: ParseErrorKind::Syntax(_), .. })), "{text}");
        }
        assert!(matches!(
            parse_query("DESCRIBE psmr:x").unwrap_err().kind,
            ParseErrorKind::UndefinedPrefix(_)
        ));
    }
}
