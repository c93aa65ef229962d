use super::{Condition, Expr, Function, SelectItem, SqlError, SqlQuery, Test};
use crate::table::Value;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Real(f64),
    Comma,
    LParen,
    RParen,
    Eq,
    Ne,
    Minus,
    Semi,
    Eof,
}

const KEYWORDS: &[&str] = &["SELECT", "FROM", "WHERE", "AS", "AND", "IS", "NOT", "NULL"];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

fn syntax(position: usize, message: impl Into<String>) -> SqlError {
    SqlError::Syntax {
        position,
        message: message.into(),
    }
}

/// Tokens paired with their 1-based character position.
fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, SqlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            ',' => Tok::Comma,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' => Tok::Eq,
            ';' => Tok::Semi,
            '-' => Tok::Minus,
            '<' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Ne
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                Tok::Ne
            }
            '\'' | '"' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(pos, "unterminated string literal")),
                        Some(&q) if q == quote => {
                            if chars.get(i + 1) == Some(&quote) {
                                s.push(quote);
                                i += 2;
                            } else {
                                break;
                            }
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i + 1 < chars.len() && (chars[i + 1].is_ascii_digit() || chars[i + 1] == '.') {
                    i += 1;
                }
                let lexeme: String = chars[start..=i].iter().collect();
                if lexeme.contains('.') {
                    Tok::Real(lexeme.parse().map_err(|_| syntax(pos, format!("bad number {lexeme}")))?)
                } else {
                    Tok::Int(lexeme.parse().map_err(|_| syntax(pos, format!("bad number {lexeme}")))?)
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i + 1 < chars.len() && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => return Err(syntax(pos, format!("unexpected character {other:?}"))),
        };
        out.push((tok, pos));
        i += 1;
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> usize {
        self.tokens[self.at].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.at].0.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {kw}")))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, SqlError> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_keyword(&w) => {
                self.advance();
                Ok(w)
            }
            _ => Err(syntax(self.pos(), format!("expected {what}"))),
        }
    }

    fn query(&mut self) -> Result<SqlQuery, SqlError> {
        self.keyword("SELECT")?;
        if self.at_keyword("FROM") {
            return Err(syntax(self.pos(), "empty select list"));
        }
        let mut items = vec![self.item()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            items.push(self.item()?);
        }
        self.keyword("FROM")?;
        let from = self.identifier("table name")?;
        let mut conditions = Vec::new();
        if self.at_keyword("WHERE") {
            self.advance();
            conditions.push(self.condition()?);
            while self.at_keyword("AND") {
                self.advance();
                conditions.push(self.condition()?);
            }
        }
        if *self.peek() == Tok::Semi {
            self.advance();
        }
        if *self.peek() != Tok::Eof {
            return Err(syntax(self.pos(), "unexpected trailing input"));
        }
        Ok(SqlQuery {
            items,
            from,
            conditions,
        })
    }

    fn item(&mut self) -> Result<SelectItem, SqlError> {
        let expr = self.expr()?;
        let alias = if self.at_keyword("AS") {
            self.advance();
            Some(self.identifier("alias")?)
        } else {
            match self.peek() {
                Tok::Ident(w) if !is_keyword(w) => Some(self.identifier("alias")?),
                _ => None,
            }
        };
        Ok(SelectItem { expr, alias })
    }

    fn number(&mut self, negative: bool) -> Result<Value, SqlError> {
        let pos = self.pos();
        match self.advance() {
            Tok::Int(i) => Ok(Value::Integer(if negative { -i } else { i })),
            Tok::Real(r) => Ok(Value::Real(if negative { -r } else { r })),
            _ => Err(syntax(pos, "expected number")),
        }
    }

    fn literal(&mut self) -> Result<Value, SqlError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Value::Text(s))
            }
            Tok::Minus => {
                self.advance();
                self.number(true)
            }
            Tok::Int(_) | Tok::Real(_) => self.number(false),
            _ => Err(syntax(self.pos(), "expected literal")),
        }
    }

    fn expr(&mut self) -> Result<Expr, SqlError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) if !is_keyword(&name) => {
                self.advance();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Column(name));
                }
                let func = Function::from_name(&name)
                    .ok_or_else(|| SqlError::UnknownFunction(name.clone()))?;
                self.advance();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    args.push(self.expr()?);
                    while *self.peek() == Tok::Comma {
                        self.advance();
                        args.push(self.expr()?);
                    }
                }
                if *self.peek() != Tok::RParen {
                    return Err(syntax(self.pos(), "expected ')'"));
                }
                self.advance();
                if !func.arity().contains(&args.len()) {
                    return Err(syntax(
                        pos,
                        format!("{} takes {:?} arguments, got {}", func.name(), func.arity(), args.len()),
                    ));
                }
                Ok(Expr::Call(func, args))
            }
            Tok::Str(_) | Tok::Int(_) | Tok::Real(_) | Tok::Minus => Ok(Expr::Literal(self.literal()?)),
            _ => Err(syntax(pos, "expected expression")),
        }
    }

    fn condition(&mut self) -> Result<Condition, SqlError> {
        let column = self.identifier("column name")?;
        let test = match self.peek() {
            Tok::Eq => {
                self.advance();
                Test::Eq(self.literal()?)
            }
            Tok::Ne => {
                self.advance();
                Test::Ne(self.literal()?)
            }
            _ if self.at_keyword("IS") => {
                self.advance();
                let negated = self.at_keyword("NOT");
                if negated {
                    self.advance();
                }
                self.keyword("NULL")?;
                if negated {
                    Test::IsNotNull
                } else {
                    Test::IsNull
                }
            }
            _ => return Err(syntax(self.pos(), "expected =, <> or IS")),
        };
        Ok(Condition { column, test })
    }
}

/// Parses one SELECT statement of the supported subset.
pub fn parse_sql(text: &str) -> Result<SqlQuery, SqlError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        at: 0,
    };
    parser.query()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_query_with_alias() {
        let q = parse_sql(r#"SELECT AWG_ID, REPLACE(AWG_ID, "/", "-") AS URLID FROM AWG"#).unwrap();
        assert_eq!(q.items.len(), 2);
        assert_eq!(q.items[0].expr, Expr::Column("AWG_ID".into()));
        assert_eq!(q.items[1].alias.as_deref(), Some("URLID"));
        assert_eq!(
            q.items[1].expr,
            Expr::Call(
                Function::Replace,
                vec![
                    Expr::Column("AWG_ID".into()),
                    Expr::Literal(Value::Text("/".into())),
                    Expr::Literal(Value::Text("-".into()))
                ]
            )
        );
        assert_eq!(q.from, "AWG");
        assert!(q.conditions.is_empty());
    }

    #[test]
    fn plain_columns() {
        let q = parse_sql(" SELECT AWG_ID, KULTUR FROM AWG_KULTUR \n   ").unwrap();
        assert_eq!(
            q.items,
            vec![
                SelectItem { expr: Expr::Column("AWG_ID".into()), alias: None },
                SelectItem { expr: Expr::Column("KULTUR".into()), alias: None },
            ]
        );
    }

    #[test]
    fn empty_select_list_is_an_error() {
        match parse_sql("SELECT FROM AWG") {
            Err(SqlError::Syntax { position, .. }) => assert_eq!(position, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn where_clause_forms() {
        let q = parse_sql(
            "select a from t where a = 'x' and b <> -3 AND c is null and d IS NOT NULL;",
        )
        .unwrap();
        assert_eq!(
            q.conditions.iter().map(|c| c.test.clone()).collect::<Vec<_>>(),
            vec![
                Test::Eq(Value::Text("x".into())),
                Test::Ne(Value::Integer(-3)),
                Test::IsNull,
                Test::IsNotNull
            ]
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_sql("SELECT LOWER(a) FROM t"),
            Err(SqlError::UnknownFunction("LOWER".into()))
        );
        assert!(matches!(parse_sql("SELECT REPLACE(a, 'x') FROM t"), Err(SqlError::Syntax { .. })));
        assert!(matches!(parse_sql("SELECT a FROM t JOIN u"), Err(SqlError::Syntax { .. })));
        assert!(matches!(parse_sql("SELECT 'abc FROM t"), Err(SqlError::Syntax { .. })));
        assert!(matches!(parse_sql("SELECT a FROM"), Err(SqlError::Syntax { .. })));
    }

    #[test]
    fn quoted_quotes_and_display() {
        let q = parse_sql("SELECT 'it''s', SUBSTR(a, 1, 2) FROM t").unwrap();
        assert_eq!(q.items[0].expr, Expr::Literal(Value::Text("it's".into())));
        assert_eq!(q.items[0].expr.to_string(), "'it''s'");
        assert_eq!(q.items[1].expr.to_string(), "SUBSTR(a, 1, 2)");
    }
}
