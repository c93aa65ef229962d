//! Brute-force evaluator for the SQL subset. Queries are generated as a
//! private AST, rendered to text for the engine, and evaluated here row
//! by row.

use pam_core::table::{ColumnDef, ColumnType, Table, TableStore, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

#[derive(Debug, Clone)]
pub enum Expr {
    Column(String),
    Text(String),
    Int(i64),
    Replace(Box<Expr>, String, String),
    Extract(Box<Expr>, &'static str, i64),
    Substr(Box<Expr>, i64, Option<i64>),
}

#[derive(Debug, Clone)]
pub enum Lit {
    Text(String),
    Int(i64),
    Real(f64),
}

#[derive(Debug, Clone)]
pub enum Test {
    Eq(Lit),
    Ne(Lit),
    IsNull,
    IsNotNull,
}

#[derive(Debug, Clone)]
pub struct Query {
    pub items: Vec<(Expr, Option<String>)>,
    pub conditions: Vec<(String, Test)>,
}

/// Patterns and their number of capture groups (group 0 included).
const PATTERNS: &[(&str, usize)] = &[
    ("([0-9]+)-([0-9]+)", 3),
    ("^([A-Z])", 2),
    ("/(.*)$", 2),
    ("[a-z]+", 1),
    ("(x)?y", 2),
];

const TABLE: &str = "T";

/// Columns `ID`, `A`, `B` (text), `N` (integer), `R` (real).
pub fn random_table<R: Rng>(rng: &mut R) -> Table {
    let mut t = Table::new(
        TABLE,
        vec![
            ColumnDef::text("ID"),
            ColumnDef::text("A"),
            ColumnDef::text("B"),
            ColumnDef::new("N", ColumnType::Integer),
            ColumnDef::new("R", ColumnType::Real),
        ],
    )
    .unwrap();
    const WORDS: &[&str] = &["", "a", "y", "xy", "RUBID", "034028-60/07-004", "12-7", "ä/ö", "b/c/d", "It's"];
    for i in 0..rng.gen_range(0..25) {
        let text = |rng: &mut R| {
            if rng.gen_bool(0.15) {
                Value::Null
            } else {
                Value::Text(WORDS.choose(rng).unwrap().to_string())
            }
        };
        let row = vec![
            Value::Text(format!("r{i}")),
            text(rng),
            text(rng),
            if rng.gen_bool(0.15) { Value::Null } else { Value::Integer(rng.gen_range(-3..12)) },
            if rng.gen_bool(0.15) { Value::Null } else { Value::Real(rng.gen_range(-4..8) as f64 / 2.0) },
        ];
        t.push_row(row).unwrap();
    }
    t
}

fn word<R: Rng>(rng: &mut R) -> String {
    ["", "/", "-", "a", "'", "\"", "RUB", "x"].choose(rng).unwrap().to_string()
}

fn input<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    match rng.gen_range(0..8) {
        0..=4 => Expr::Column(["ID", "A", "B", "N"].choose(rng).unwrap().to_string()),
        5 => Expr::Text(word(rng)),
        _ if depth < 2 => call(rng, depth + 1),
        _ => Expr::Int(rng.gen_range(-5..100)),
    }
}

fn call<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    let x = Box::new(input(rng, depth));
    match rng.gen_range(0..3) {
        0 => Expr::Replace(x, word(rng), word(rng)),
        1 => {
            let (p, groups) = *PATTERNS.choose(rng).unwrap();
            // occasionally one past the last group
            let g = rng.gen_range(0..=groups) as i64;
            Expr::Extract(x, p, g)
        }
        _ => Expr::Substr(
            x,
            rng.gen_range(-6..6),
            rng.gen_bool(0.6).then(|| rng.gen_range(-2..6)),
        ),
    }
}

fn lit<R: Rng>(rng: &mut R) -> Lit {
    match rng.gen_range(0..3) {
        0 => Lit::Text(["a", "y", "RUBID", "3", "", "b/c/d"].choose(rng).unwrap().to_string()),
        1 => Lit::Int(rng.gen_range(-3..12)),
        _ => Lit::Real(rng.gen_range(-4..8) as f64 / 2.0),
    }
}

pub fn random_query<R: Rng>(rng: &mut R) -> Query {
    let mut items = Vec::new();
    let mut plain_columns: Vec<&str> = Vec::new();
    for i in 0..rng.gen_range(1..5) {
        let alias = format!("x{i}");
        match rng.gen_range(0..4) {
            0 => {
                let c = *["ID", "A", "B", "N", "R"].choose(rng).unwrap();
                if plain_columns.contains(&c) || rng.gen_bool(0.3) {
                    items.push((Expr::Column(c.into()), Some(alias)));
                } else {
                    plain_columns.push(c);
                    items.push((Expr::Column(c.into()), None));
                }
            }
            1 => items.push((
                if rng.gen_bool(0.5) { Expr::Text(word(rng)) } else { Expr::Int(rng.gen_range(-9..9)) },
                Some(alias),
            )),
            _ => items.push((call(rng, 0), Some(alias))),
        }
    }
    let conditions = (0..rng.gen_range(0..3))
        .map(|_| {
            let c = ["ID", "A", "B", "N", "R"].choose(rng).unwrap().to_string();
            let t = match rng.gen_range(0..4) {
                0 => Test::Eq(lit(rng)),
                1 => Test::Ne(lit(rng)),
                2 => Test::IsNull,
                _ => Test::IsNotNull,
            };
            (c, t)
        })
        .collect();
    Query { items, conditions }
}

fn quote<R: Rng>(rng: &mut R, s: &str) -> String {
    if !s.contains('"') && rng.gen_bool(0.3) {
        format!("\"{s}\"")
    } else {
        format!("'{}'", s.replace('\'', "''"))
    }
}

/// Identifier with randomized letter case.
fn ident<R: Rng>(rng: &mut R, s: &str) -> String {
    s.chars()
        .map(|c| if rng.gen_bool(0.5) { c.to_ascii_lowercase() } else { c })
        .collect()
}

fn render_expr<R: Rng>(rng: &mut R, e: &Expr) -> String {
    match e {
        Expr::Column(c) => ident(rng, c),
        Expr::Text(s) => quote(rng, s),
        Expr::Int(i) => i.to_string(),
        Expr::Replace(x, a, b) => {
            let x = render_expr(rng, x);
            format!("REPLACE({x}, {}, {})", quote(rng, a), quote(rng, b))
        }
        Expr::Extract(x, p, g) => {
            let x = render_expr(rng, x);
            format!("regex_extract({x}, {}, {g})", quote(rng, p))
        }
        Expr::Substr(x, s, None) => format!("Substr({}, {s})", render_expr(rng, x)),
        Expr::Substr(x, s, Some(l)) => format!("SUBSTR({}, {s}, {l})", render_expr(rng, x)),
    }
}

fn render_lit<R: Rng>(rng: &mut R, l: &Lit) -> String {
    match l {
        Lit::Text(s) => quote(rng, s),
        Lit::Int(i) => i.to_string(),
        Lit::Real(r) => format!("{r:?}"),
    }
}

/// SQL text for the engine, with random keyword and identifier case.
pub fn render<R: Rng>(rng: &mut R, q: &Query) -> String {
    let items: Vec<String> = q
        .items
        .iter()
        .map(|(e, alias)| {
            let e = render_expr(rng, e);
            match alias {
                Some(a) => format!("{e} {} {a}", ident(rng, "AS")),
                None => e,
            }
        })
        .collect();
    let mut sql = format!("{} {} {} {TABLE}", ident(rng, "SELECT"), items.join(", "), ident(rng, "FROM"));
    for (i, (c, t)) in q.conditions.iter().enumerate() {
        let kw = if i == 0 { "WHERE" } else { "AND" };
        let c = ident(rng, c);
        let test = match t {
            Test::Eq(l) => format!("= {}", render_lit(rng, l)),
            Test::Ne(l) => format!("<> {}", render_lit(rng, l)),
            Test::IsNull => "IS NULL".into(),
            Test::IsNotNull => "IS NOT NULL".into(),
        };
        sql.push_str(&format!(" {} {c} {test}", ident(rng, kw)));
    }
    sql
}

fn text_of(v: &Value) -> Option<String> {
    match v {
        Value::Text(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        _ => None,
    }
}

/// SQLite rule: a window of `len` characters starting at 1-based `start`;
/// a negative start counts back from the end, and start 0 is one before
/// the first character.
fn substr(s: &str, start: i64, len: Option<i64>) -> String {
    let chars: Vec<char> = s.chars().collect();
    let n = chars.len() as i64;
    if matches!(len, Some(l) if l <= 0) {
        return String::new();
    }
    let first = if start < 0 { n + start + 1 } else { start };
    let last = len.map_or(n, |l| first + l - 1);
    let lo = first.max(1);
    let hi = last.min(n);
    if lo > hi {
        return String::new();
    }
    chars[(lo - 1) as usize..hi as usize].iter().collect()
}

fn eval(e: &Expr, table: &Table, row: &[Value]) -> Result<Value, String> {
    let col = |c: &str| row[table.columns().iter().position(|d| d.name == c).unwrap()].clone();
    Ok(match e {
        Expr::Column(c) => col(c),
        Expr::Text(s) => Value::Text(s.clone()),
        Expr::Int(i) => Value::Integer(*i),
        Expr::Replace(x, a, b) => match text_of(&eval(x, table, row)?) {
            None => Value::Null,
            Some(s) if a.is_empty() => Value::Text(s),
            Some(s) => Value::Text(s.replace(a.as_str(), b)),
        },
        Expr::Extract(x, p, g) => match text_of(&eval(x, table, row)?) {
            None => Value::Null,
            Some(s) => {
                let groups = PATTERNS.iter().find(|(q, _)| q == p).unwrap().1 as i64;
                if *g >= groups {
                    return Err(format!("group {g} out of range"));
                }
                let re = Regex::new(p).unwrap();
                match re.captures(&s).and_then(|c| c.get(*g as usize)) {
                    Some(m) => Value::Text(m.as_str().into()),
                    None => Value::Null,
                }
            }
        },
        Expr::Substr(x, s, l) => match text_of(&eval(x, table, row)?) {
            None => Value::Null,
            Some(text) => Value::Text(substr(&text, *s, *l)),
        },
    })
}

fn equal(v: &Value, l: &Lit) -> bool {
    match (v, l) {
        (Value::Text(a), Lit::Text(b)) => a == b,
        (Value::Integer(a), Lit::Int(b)) => a == b,
        (Value::Integer(a), Lit::Real(b)) => *a as f64 == *b,
        (Value::Real(a), Lit::Int(b)) => *a == *b as f64,
        (Value::Real(a), Lit::Real(b)) => a == b,
        _ => false,
    }
}

fn keep(v: &Value, t: &Test) -> bool {
    match t {
        Test::IsNull => v.is_null(),
        Test::IsNotNull => !v.is_null(),
        Test::Eq(l) => !v.is_null() && equal(v, l),
        Test::Ne(l) => !v.is_null() && !equal(v, l),
    }
}

/// Output column names and rows, or an error if any kept row fails.
pub fn evaluate(q: &Query, store: &TableStore) -> Result<(Vec<String>, Vec<Vec<Value>>), String> {
    let table = store.get(TABLE).ok_or("no table")?;
    let names = q
        .items
        .iter()
        .map(|(e, alias)| match (e, alias) {
            (_, Some(a)) => a.clone(),
            (Expr::Column(c), None) => c.clone(),
            _ => unreachable!("generated expressions are aliased"),
        })
        .collect();
    let mut rows = Vec::new();
    for row in table.rows() {
        let col = |c: &str| &row[table.columns().iter().position(|d| d.name == c).unwrap()];
        if !q.conditions.iter().all(|(c, t)| keep(col(c), t)) {
            continue;
        }
        rows.push(
            q.items
                .iter()
                .map(|(e, _)| eval(e, table, row))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok((names, rows))
}
