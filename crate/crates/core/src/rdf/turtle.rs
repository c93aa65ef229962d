//! Turtle subset parser.
//!
//! Accepts `@prefix` directives, the `a` keyword, `;` and `,` lists,
//! blank node property lists, quoted and long strings with escapes,
//! prefixed names and IRIs in angle brackets. Collections, `@base`,
//! and numeric or boolean shorthand literals are rejected.
//!
//! Two spellings found in hand-written mapping files are tolerated:
//! `"" ... ""` is read as a long string, and a short string running into a
//! line end after a `;`, `,` or `.` is closed at that separator.
//!
//! Blank nodes are relabeled `b0`, `b1`, ... in order of first appearance.

use std::collections::HashMap;

use thiserror::Error;
use url::Url;

use super::lexer::{Dialect, Lexer, Spanned, Tok};
use super::{is_absolute_iri, vocab, Graph, Literal, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undefined prefix {0:?}")]
    UndefinedPrefix(String),
    #[error("relative IRI <{0}> with no base")]
    RelativeIri(String),
    #[error("unsupported syntax: {0}")]
    Unsupported(String),
}

/// Parses Turtle text. Relative IRIs are an error.
pub fn parse_turtle(input: &str) -> Result<Graph, ParseError> {
    TurtleParser::new(input, None).parse()
}

/// Parses Turtle text, resolving relative IRIs such as `<#TriplesMap1>`
/// against `base`.
pub fn parse_turtle_with_base(input: &str, base: &str) -> Result<Graph, ParseError> {
    TurtleParser::new(input, Some(base.to_string())).parse()
}

pub(crate) fn resolve_iri(reference: &str, base: Option<&str>) -> Option<String> {
    if is_absolute_iri(reference) {
        return Some(reference.to_string());
    }
    let base = Url::parse(base?).ok()?;
    base.join(reference).ok().map(String::from)
}

/// Token stream with one token of lookahead, shared with the query parser.
pub(crate) struct TokenStream<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<Spanned>,
}

impl<'a> TokenStream<'a> {
    pub(crate) fn new(input: &'a str, dialect: Dialect) -> Self {
        TokenStream {
            lexer: Lexer::new(input, dialect),
            lookahead: None,
        }
    }

    pub(crate) fn peek(&mut self) -> Result<&Spanned, ParseError> {
        if self.lookahead.is_none() {
            self.lookahead = Some(self.lexer.next_token()?);
        }
        Ok(self.lookahead.as_ref().unwrap())
    }

    pub(crate) fn next(&mut self) -> Result<Spanned, ParseError> {
        match self.lookahead.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    pub(crate) fn expect(&mut self, want: &Tok, what: &str) -> Result<Spanned, ParseError> {
        let t = self.next()?;
        if &t.tok == want {
            Ok(t)
        } else {
            Err(syntax(&t, format!("expected {what}, found {}", t.tok.describe())))
        }
    }
}

pub(crate) fn syntax(at: &Spanned, msg: impl Into<String>) -> ParseError {
    ParseError {
        line: at.line,
        column: at.column,
        kind: ParseErrorKind::Syntax(msg.into()),
    }
}

pub(crate) fn error_at(at: &Spanned, kind: ParseErrorKind) -> ParseError {
    ParseError {
        line: at.line,
        column: at.column,
        kind,
    }
}

struct TurtleParser<'a> {
    tokens: TokenStream<'a>,
    base: Option<String>,
    graph: Graph,
    blank_labels: HashMap<String, String>,
    next_blank: usize,
}

impl<'a> TurtleParser<'a> {
    fn new(input: &'a str, base: Option<String>) -> Self {
        TurtleParser {
            tokens: TokenStream::new(input, Dialect::Turtle),
            base,
            graph: Graph::new(),
            blank_labels: HashMap::new(),
            next_blank: 0,
        }
    }

    fn parse(mut self) -> Result<Graph, ParseError> {
        loop {
            let t = self.tokens.peek()?.clone();
            match &t.tok {
                Tok::Eof => return Ok(self.graph),
                Tok::PrefixDirective => self.prefix_directive()?,
                Tok::BaseDirective => {
                    return Err(error_at(&t, ParseErrorKind::Unsupported("@base".into())))
                }
                _ => {
                    self.triples()?;
                    self.tokens.expect(&Tok::Dot, "'.' after statement")?;
                }
            }
        }
    }

    fn prefix_directive(&mut self) -> Result<(), ParseError> {
        self.tokens.next()?;
        let t = self.tokens.next()?;
        let label = match t.tok {
            Tok::PName { ref prefix, ref local } if local.is_empty() => prefix.clone(),
            _ => return Err(syntax(&t, "expected prefix label ending in ':'")),
        };
        let iri_tok = self.tokens.next()?;
        let Tok::IriRef(ref raw) = iri_tok.tok else {
            return Err(syntax(&iri_tok, "expected namespace IRI"));
        };
        let ns = self.resolve(raw, &iri_tok)?;
        self.graph
            .prefixes
            .insert(label, ns)
            .map_err(|e| syntax(&t, e.to_string()))?;
        self.tokens.expect(&Tok::Dot, "'.' after @prefix")?;
        Ok(())
    }

    fn resolve(&self, raw: &str, at: &Spanned) -> Result<String, ParseError> {
        resolve_iri(raw, self.base.as_deref())
            .ok_or_else(|| error_at(at, ParseErrorKind::RelativeIri(raw.to_string())))
    }

    fn fresh_blank(&mut self) -> Term {
        let label = format!("b{}", self.next_blank);
        self.next_blank += 1;
        Term::Blank(label)
    }

    fn named_blank(&mut self, label: &str) -> Term {
        if let Some(existing) = self.blank_labels.get(label) {
            return Term::Blank(existing.clone());
        }
        let Term::Blank(fresh) = self.fresh_blank() else {
            unreachable!()
        };
        self.blank_labels.insert(label.to_string(), fresh.clone());
        Term::Blank(fresh)
    }

    fn iri_from(&self, t: &Spanned) -> Result<Option<Term>, ParseError> {
        match &t.tok {
            Tok::IriRef(raw) => Ok(Some(Term::Iri(self.resolve(raw, t)?))),
            Tok::PName { prefix, local } => match self.graph.prefixes.expand(prefix, local) {
                Some(iri) if is_absolute_iri(&iri) => Ok(Some(Term::Iri(iri))),
                Some(iri) => Err(error_at(t, ParseErrorKind::RelativeIri(iri))),
                None => Err(error_at(t, ParseErrorKind::UndefinedPrefix(prefix.clone()))),
            },
            _ => Ok(None),
        }
    }

    fn triples(&mut self) -> Result<(), ParseError> {
        let t = self.tokens.next()?;
        let subject = match &t.tok {
            Tok::LBracket => {
                let (node, had_properties) = self.blank_property_list()?;
                if had_properties && self.tokens.peek()?.tok == Tok::Dot {
                    return Ok(());
                }
                node
            }
            Tok::Blank(label) => self.named_blank(label),
            Tok::LParen => {
                return Err(error_at(&t, ParseErrorKind::Unsupported("collections".into())))
            }
            _ => match self.iri_from(&t)? {
                Some(iri) => iri,
                None => {
                    return Err(syntax(&t, format!("expected subject, found {}", t.tok.describe())))
                }
            },
        };
        self.predicate_object_list(&subject)
    }

    /// Called after `[`; returns the node and whether it had properties.
    fn blank_property_list(&mut self) -> Result<(Term, bool), ParseError> {
        let node = self.fresh_blank();
        if self.tokens.peek()?.tok == Tok::RBracket {
            self.tokens.next()?;
            return Ok((node, false));
        }
        self.predicate_object_list(&node)?;
        self.tokens.expect(&Tok::RBracket, "']'")?;
        Ok((node, true))
    }

    fn starts_verb(tok: &Tok) -> bool {
        matches!(tok, Tok::A | Tok::IriRef(_) | Tok::PName { .. })
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), ParseError> {
        loop {
            let t = self.tokens.next()?;
            let predicate = match &t.tok {
                Tok::A => Term::Iri(vocab::RDF_TYPE.to_string()),
                _ => match self.iri_from(&t)? {
                    Some(iri) => iri,
                    None => {
                        return Err(syntax(
                            &t,
                            format!("expected predicate, found {}", t.tok.describe()),
                        ))
                    }
                },
            };
            loop {
                let object = self.object()?;
                self.graph.insert(Triple {
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
            if !Self::starts_verb(&self.tokens.peek()?.tok) {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        let t = self.tokens.next()?;
        match &t.tok {
            Tok::Blank(label) => Ok(self.named_blank(label)),
            Tok::LBracket => Ok(self.blank_property_list()?.0),
            Tok::Str(value) => self.literal_tail(value.clone()),
            Tok::LParen => Err(error_at(&t, ParseErrorKind::Unsupported("collections".into()))),
            Tok::Word(w) => Err(error_at(
                &t,
                ParseErrorKind::Unsupported(format!("shorthand literal {w}")),
            )),
            _ => match self.iri_from(&t)? {
                Some(iri) => Ok(iri),
                None => Err(syntax(&t, format!("expected object, found {}", t.tok.describe()))),
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
                match self.iri_from(&dt)? {
                    Some(Term::Iri(iri)) => Ok(Term::Literal(Literal::typed(value, iri))),
                    _ => Err(syntax(&dt, "expected datatype IRI")),
                }
            }
            _ => Ok(Term::literal(value)),
        }
    }
}
