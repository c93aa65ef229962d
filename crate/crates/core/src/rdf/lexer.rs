//! Tokenizer shared by the Turtle parser and the SPARQL query parser.

use std::collections::VecDeque;

use super::turtle::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dialect {
    Turtle,
    Sparql,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Unescaped content of `<...>`, not yet resolved against a base.
    IriRef(String),
    PName {
        prefix: String,
        local: String,
    },
    Blank(String),
    Str(String),
    LangTag(String),
    PrefixDirective,
    BaseDirective,
    DoubleCaret,
    Dot,
    Semi,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Star,
    A,
    Var(String),
    /// Bare word: a keyword in SPARQL, a number or boolean in Turtle.
    Word(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::IriRef(i) => format!("<{i}>"),
            Tok::PName { prefix, local } => format!("{prefix}:{local}"),
            Tok::Blank(b) => format!("_:{b}"),
            Tok::Str(_) => "string literal".into(),
            Tok::LangTag(l) => format!("@{l}"),
            Tok::PrefixDirective => "@prefix".into(),
            Tok::BaseDirective => "@base".into(),
            Tok::DoubleCaret => "^^".into(),
            Tok::Dot => "'.'".into(),
            Tok::Semi => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Star => "'*'".into(),
            Tok::A => "'a'".into(),
            Tok::Var(v) => format!("?{v}"),
            Tok::Word(w) => format!("{w:?}"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    dialect: Dialect,
    pending: VecDeque<Spanned>,
    _input: std::marker::PhantomData<&'a str>,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || (!c.is_ascii() && c.is_alphanumeric())
}

fn is_local_char(c: char) -> bool {
    is_name_char(c) || c == ':' || c == '%' || c == '\\'
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(input: &'a str, dialect: Dialect) -> Self {
        let chars: Vec<char> = input.strip_prefix('\u{feff}').unwrap_or(input).chars().collect();
        Lexer {
            chars,
            pos: 0,
            line: 1,
            column: 1,
            dialect,
            pending: VecDeque::new(),
            _input: std::marker::PhantomData,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    pub(crate) fn next_token(&mut self) -> Result<Spanned, ParseError> {
        if let Some(tok) = self.pending.pop_front() {
            return Ok(tok);
        }
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let spanned = |tok| Spanned { tok, line, column };
        let Some(c) = self.peek() else {
            return Ok(spanned(Tok::Eof));
        };
        let tok = match c {
            '<' => {
                self.bump();
                Tok::IriRef(self.iri_body(line, column)?)
            }
            '"' | '\'' => return self.string(c, line, column),
            '@' => {
                self.bump();
                let mut word = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                match word.as_str() {
                    "" => return Err(self.error(line, column, "expected name after '@'")),
                    "prefix" => Tok::PrefixDirective,
                    "base" => Tok::BaseDirective,
                    _ => Tok::LangTag(word),
                }
            }
            '^' => {
                self.bump();
                if self.peek() == Some('^') {
                    self.bump();
                    Tok::DoubleCaret
                } else {
                    return Err(self.error(line, column, "expected '^^'"));
                }
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            ';' => {
                self.bump();
                Tok::Semi
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '[' => {
                self.bump();
                Tok::LBracket
            }
            ']' => {
                self.bump();
                Tok::RBracket
            }
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            '{' if self.dialect == Dialect::Sparql => {
                self.bump();
                Tok::LBrace
            }
            '}' if self.dialect == Dialect::Sparql => {
                self.bump();
                Tok::RBrace
            }
            '*' if self.dialect == Dialect::Sparql => {
                self.bump();
                Tok::Star
            }
            '?' | '$' if self.dialect == Dialect::Sparql => {
                self.bump();
                let mut name = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(self.error(line, column, "empty variable name"));
                }
                Tok::Var(name)
            }
            '_' if self.peek_at(1) == Some(':') => {
                self.bump();
                self.bump();
                let label = self.local_part()?;
                if label.is_empty() {
                    return Err(self.error(line, column, "empty blank node label"));
                }
                Tok::Blank(label)
            }
            ':' => {
                self.bump();
                Tok::PName {
                    prefix: String::new(),
                    local: self.local_part()?,
                }
            }
            c if is_name_char(c) || c == '+' => {
                let word = self.word();
                if self.peek() == Some(':') {
                    self.bump();
                    if !super::is_valid_prefix_label(&word) {
                        return Err(self.error(line, column, format!("invalid prefix {word:?}")));
                    }
                    Tok::PName {
                        prefix: word,
                        local: self.local_part()?,
                    }
                } else if word == "a" {
                    Tok::A
                } else {
                    Tok::Word(word)
                }
            }
            other => return Err(self.error(line, column, format!("unexpected character {other:?}"))),
        };
        Ok(spanned(tok))
    }

    fn word(&mut self) -> String {
        let mut word = String::new();
        while let Some(c) = self.peek() {
            let inner_dot = c == '.' && self.peek_at(1).is_some_and(|n| is_name_char(n) || n == ':');
            if is_name_char(c) || c == '+' || inner_dot {
                word.push(c);
                self.bump();
            } else {
                break;
            }
        }
        word
    }

    /// Local part of a prefixed name or blank label. A trailing run of dots
    /// is left for the statement terminator.
    fn local_part(&mut self) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            match self.peek() {
                Some('%') => {
                    let (line, column) = (self.line, self.column);
                    let hex: String = (1..=2).filter_map(|i| self.peek_at(i)).collect();
                    if hex.len() != 2 || !hex.chars().all(|h| h.is_ascii_hexdigit()) {
                        return Err(self.error(line, column, "invalid percent escape"));
                    }
                    out.push('%');
                    out.push_str(&hex);
                    for _ in 0..3 {
                        self.bump();
                    }
                }
                Some('\\') => {
                    let (line, column) = (self.line, self.column);
                    self.bump();
                    match self.bump() {
                        Some(c) if "_~.-!$&'()*+,;=/?#@%".contains(c) => out.push(c),
                        _ => return Err(self.error(line, column, "invalid local name escape")),
                    }
                }
                Some('.') => {
                    let mut n = 0;
                    while self.peek_at(n) == Some('.') {
                        n += 1;
                    }
                    if self.peek_at(n).is_some_and(is_local_char) && !out.is_empty() {
                        for _ in 0..n {
                            out.push('.');
                            self.bump();
                        }
                    } else {
                        break;
                    }
                }
                Some(c) if is_name_char(c) || c == ':' => {
                    out.push(c);
                    self.bump();
                }
                _ => break,
            }
        }
        Ok(out)
    }

    fn iri_body(&mut self, line: usize, column: usize) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated IRI")),
                Some('>') => return Ok(out),
                Some('\\') => out.push(self.unicode_escape(line, column)?),
                Some(c) if c <= ' ' || "<\"{}|^`".contains(c) => {
                    return Err(self.error(
                        line,
                        column,
                        format!("character {c:?} not allowed in IRI"),
                    ))
                }
                Some(c) => out.push(c),
            }
        }
    }

    /// Reads the part after a backslash: `uXXXX` or `UXXXXXXXX`.
    fn unicode_escape(&mut self, line: usize, column: usize) -> Result<char, ParseError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error(line, column, "invalid escape sequence")),
        };
        let mut hex = String::new();
        for _ in 0..width {
            match self.bump() {
                Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                _ => return Err(self.error(line, column, "invalid unicode escape")),
            }
        }
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error(line, column, "invalid code point"))
    }

    fn string_escape(&mut self, line: usize, column: usize) -> Result<char, ParseError> {
        match self.peek() {
            Some('u') | Some('U') => self.unicode_escape(line, column),
            Some(c) => {
                let mapped = match c {
                    't' => '\t',
                    'n' => '\n',
                    'r' => '\r',
                    'b' => '\u{8}',
                    'f' => '\u{c}',
                    '"' => '"',
                    '\'' => '\'',
                    '\\' => '\\',
                    _ => return Err(self.error(line, column, format!("invalid escape \\{c}"))),
                };
                self.bump();
                Ok(mapped)
            }
            None => Err(self.error(line, column, "unterminated escape")),
        }
    }

    fn string(&mut self, quote: char, line: usize, column: usize) -> Result<Spanned, ParseError> {
        let spanned = |tok| Spanned { tok, line, column };
        self.bump();
        if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
            self.bump();
            self.bump();
            let closing = [quote, quote, quote];
            return Ok(spanned(Tok::Str(self.long_string(&closing, line, column)?)));
        }
        if self.peek() == Some(quote) {
            self.bump();
            if self.dialect == Dialect::Turtle && quote == '"' && self.opens_irregular_long_string() {
                return Ok(spanned(Tok::Str(self.long_string(&[quote, quote], line, column)?)));
            }
            return Ok(spanned(Tok::Str(String::new())));
        }
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(line, column, "unterminated string")),
                Some('\n') | Some('\r') => return self.repair_unterminated(out, line, column),
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(spanned(Tok::Str(out)));
                }
                Some('\\') => {
                    self.bump();
                    out.push(self.string_escape(line, column)?);
                }
                Some(c) => {
                    out.push(c);
                    self.bump();
                }
            }
        }
    }

    /// After `""`: an empty string is followed (on the same line) by
    /// punctuation, a datatype/language marker, a comment or a line end.
    /// Anything else starts a long string closed by the next `""`.
    fn opens_irregular_long_string(&self) -> bool {
        let mut i = 0;
        while matches!(self.peek_at(i), Some(' ') | Some('\t')) {
            i += 1;
        }
        !matches!(
            self.peek_at(i),
            None | Some('\n')
                | Some('\r')
                | Some('.')
                | Some(';')
                | Some(',')
                | Some(']')
                | Some(')')
                | Some('}')
                | Some('#')
                | Some('^')
                | Some('@')
        )
    }

    fn long_string(
        &mut self,
        closing: &[char],
        line: usize,
        column: usize,
    ) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            if closing.iter().enumerate().all(|(i, q)| self.peek_at(i) == Some(*q)) {
                for _ in closing {
                    self.bump();
                }
                return Ok(out);
            }
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated long string")),
                Some('\\') => out.push(self.string_escape(line, column)?),
                Some(c) => out.push(c),
            }
        }
    }

    /// A short string running into a line break is closed at the line end
    /// when its text ends in a statement separator (`;`, `,` or `.`); the
    /// separator is returned as its own token. Any other unterminated
    /// string is an error.
    fn repair_unterminated(
        &mut self,
        text: String,
        line: usize,
        column: usize,
    ) -> Result<Spanned, ParseError> {
        if self.dialect != Dialect::Turtle {
            return Err(self.error(line, column, "unterminated string"));
        }
        let trimmed = text.trim_end();
        let sep = match trimmed.chars().last() {
            Some(';') => Tok::Semi,
            Some(',') => Tok::Comma,
            Some('.') => Tok::Dot,
            _ => return Err(self.error(line, column, "unterminated string")),
        };
        let value = trimmed[..trimmed.len() - 1].to_string();
        let sep_column = column + 1 + trimmed.chars().count() - 1;
        self.pending.push_back(Spanned {
            tok: sep,
            line,
            column: sep_column,
        });
        Ok(Spanned {
            tok: Tok::Str(value),
            line,
            column,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(input: &str, dialect: Dialect) -> Vec<Tok> {
        let mut lx = Lexer::new(input, dialect);
        let mut out = Vec::new();
        loop {
            let t = lx.next_token().unwrap();
            if t.tok == Tok::Eof {
                return out;
            }
            out.push(t.tok);
        }
    }

    #[test]
    fn prefixed_name_leaves_final_dot() {
        assert_eq!(
            toks("psm:Crop.", Dialect::Turtle),
            vec![
                Tok::PName {
                    prefix: "psm".into(),
                    local: "Crop".into()
                },
                Tok::Dot
            ]
        );
        assert_eq!(
            toks("psmr:ind_034028-60-07-004 a", Dialect::Turtle)[0],
            Tok::PName {
                prefix: "psmr".into(),
                local: "ind_034028-60-07-004".into()
            }
        );
    }

    #[test]
    fn percent_escapes_stay_verbatim() {
        assert_eq!(
            toks("ex:a%20b", Dialect::Turtle),
            vec![Tok::PName {
                prefix: "ex".into(),
                local: "a%20b".into()
            }]
        );
    }

    #[test]
    fn doubled_quote_spelling() {
        assert_eq!(
            toks(r#"d2rq:username "";"#, Dialect::Turtle)[1..],
            [Tok::Str(String::new()), Tok::Semi]
        );
        let t = toks("rml:query \"\" SELECT A FROM B\n  \"\"\n];", Dialect::Turtle);
        assert_eq!(t[1], Tok::Str(" SELECT A FROM B\n  ".into()));
        assert_eq!(t[2], Tok::RBracket);
    }

    #[test]
    fn unterminated_string_repair() {
        let t = toks("d2rq:jdbcDSN \"jdbc:sqlite://Pfad/Name;\n x:y \"z\".", Dialect::Turtle);
        assert_eq!(t[1], Tok::Str("jdbc:sqlite://Pfad/Name".into()));
        assert_eq!(t[2], Tok::Semi);
        assert!(Lexer::new("\"abc\n\"", Dialect::Turtle).next_token().is_err());
        assert!(Lexer::new("\"abc;\n", Dialect::Sparql).next_token().is_err());
    }

    #[test]
    fn escapes() {
        assert_eq!(
            toks(r#""a\"b\\c\né""#, Dialect::Turtle),
            vec![Tok::Str("a\"b\\c\né".into())]
        );
        assert_eq!(toks(r"<http://e/A>", Dialect::Turtle), vec![Tok::IriRef("http://e/A".into())]);
        assert!(Lexer::new("<http://e/a b>", Dialect::Turtle).next_token().is_err());
    }

    #[test]
    fn sparql_tokens() {
        assert_eq!(
            toks("SELECT ?c WHERE { ?i a ?c }", Dialect::Sparql),
            vec![
                Tok::Word("SELECT".into()),
                Tok::Var("c".into()),
                Tok::Word("WHERE".into()),
                Tok::LBrace,
                Tok::Var("i".into()),
                Tok::A,
                Tok::Var("c".into()),
                Tok::RBrace
            ]
        );
    }
}
