use std::collections::HashMap;

use regex::Regex;

use super::{Expr, Function, SqlError, SqlQuery, Test};
use crate::table::{ColumnDef, ColumnType, Table, TableStore, Value};

enum Compiled {
    Column(usize),
    Literal(Value),
    Call(Function, Vec<Compiled>),
}

struct Ctx {
    regexes: HashMap<String, Regex>,
}

impl Ctx {
    fn regex(&mut self, pattern: &str) -> Result<&Regex, SqlError> {
        if !self.regexes.contains_key(pattern) {
            let re = Regex::new(pattern).map_err(|e| SqlError::InvalidRegex {
                pattern: pattern.to_string(),
                message: e.to_string(),
            })?;
            self.regexes.insert(pattern.to_string(), re);
        }
        Ok(&self.regexes[pattern])
    }
}

fn resolve(table: &Table, name: &str) -> Result<usize, SqlError> {
    table.column_index(name).ok_or_else(|| SqlError::UnknownColumn {
        table: table.name().to_string(),
        column: name.to_string(),
    })
}

fn compile(expr: &Expr, table: &Table, ctx: &mut Ctx) -> Result<Compiled, SqlError> {
    Ok(match expr {
        Expr::Column(name) => Compiled::Column(resolve(table, name)?),
        Expr::Literal(v) => Compiled::Literal(v.clone()),
        Expr::Call(func, args) => {
            if *func == Function::RegexExtract {
                // literal patterns are checked before any row is read
                if let Expr::Literal(Value::Text(p)) = &args[1] {
                    ctx.regex(p)?;
                }
            }
            let args = args
                .iter()
                .map(|a| compile(a, table, ctx))
                .collect::<Result<_, _>>()?;
            Compiled::Call(*func, args)
        }
    })
}

fn integer_arg(function: Function, what: &str, v: &Value) -> Result<i64, SqlError> {
    match v {
        Value::Integer(i) => Ok(*i),
        Value::Real(r) if r.fract() == 0.0 => Ok(*r as i64),
        Value::Text(s) => s.trim().parse().map_err(|_| SqlError::InvalidArgument {
            function: function.name(),
            message: format!("{what} must be an integer, got {s:?}"),
        }),
        other => Err(SqlError::InvalidArgument {
            function: function.name(),
            message: format!("{what} must be an integer, got {other}"),
        }),
    }
}

/// Characters at 1-based positions `p` with `start' <= p < start' + len`,
/// where a negative start counts from the end and start 0 sits just
/// before the first character.
pub(crate) fn substr(s: &str, start: i64, len: Option<i64>) -> String {
    let n = s.chars().count() as i64;
    let from = if start < 0 { (n + start + 1).max(1) } else { start };
    let window_start = if start < 0 { n + start + 1 } else { start };
    let end = match len {
        Some(l) if l <= 0 => return String::new(),
        Some(l) => window_start + l,
        None => i64::MAX,
    };
    s.chars()
        .enumerate()
        .map(|(i, c)| (i as i64 + 1, c))
        .filter(|&(p, _)| p >= from && p < end)
        .map(|(_, c)| c)
        .collect()
}

fn call(func: Function, args: Vec<Value>, ctx: &mut Ctx) -> Result<Value, SqlError> {
    if args.iter().any(Value::is_null) {
        return Ok(Value::Null);
    }
    let text = |v: &Value| v.as_text().unwrap_or_default();
    Ok(match func {
        Function::Replace => {
            let input = text(&args[0]);
            let from = text(&args[1]);
            if from.is_empty() {
                Value::Text(input)
            } else {
                Value::Text(input.replace(&from, &text(&args[2])))
            }
        }
        Function::RegexExtract => {
            let input = text(&args[0]);
            let pattern = text(&args[1]);
            let group = integer_arg(func, "group", &args[2])?;
            let re = ctx.regex(&pattern)?;
            if group < 0 || group as usize >= re.captures_len() {
                return Err(SqlError::InvalidRegex {
                    pattern,
                    message: format!("no capture group {group}"),
                });
            }
            match re.captures(&input).and_then(|c| c.get(group as usize)) {
                Some(m) => Value::Text(m.as_str().to_string()),
                None => Value::Null,
            }
        }
        Function::Substr => {
            let start = integer_arg(func, "start", &args[1])?;
            let len = args.get(2).map(|v| integer_arg(func, "length", v)).transpose()?;
            Value::Text(substr(&text(&args[0]), start, len))
        }
    })
}

fn eval(expr: &Compiled, row: &[Value], ctx: &mut Ctx) -> Result<Value, SqlError> {
    match expr {
        Compiled::Column(i) => Ok(row[*i].clone()),
        Compiled::Literal(v) => Ok(v.clone()),
        Compiled::Call(func, args) => {
            let values = args
                .iter()
                .map(|a| eval(a, row, ctx))
                .collect::<Result<Vec<_>, _>>()?;
            call(*func, values, ctx)
        }
    }
}

/// Null-free equality: numbers compare numerically, text as strings, and
/// text never equals a number.
fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Text(x), Value::Text(y)) => x == y,
        (Value::Integer(x), Value::Integer(y)) => x == y,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

fn passes(test: &Test, v: &Value) -> bool {
    match test {
        Test::IsNull => v.is_null(),
        Test::IsNotNull => !v.is_null(),
        Test::Eq(lit) => !v.is_null() && values_equal(v, lit),
        Test::Ne(lit) => !v.is_null() && !values_equal(v, lit),
    }
}

/// Runs the query against `store`. The result table is named after the
/// source table; its columns are named by alias, else by the source column,
/// else by the expression text.
pub fn eval_sql(query: &SqlQuery, store: &TableStore) -> Result<Table, SqlError> {
    let table = store
        .get(&query.from)
        .ok_or_else(|| SqlError::UnknownTable(query.from.clone()))?;
    let mut ctx = Ctx {
        regexes: HashMap::new(),
    };

    let mut columns = Vec::with_capacity(query.items.len());
    let mut exprs = Vec::with_capacity(query.items.len());
    for item in &query.items {
        let compiled = compile(&item.expr, table, &mut ctx)?;
        let (name, column_type) = match (&item.alias, &compiled) {
            (Some(alias), Compiled::Column(i)) => (alias.clone(), table.columns()[*i].column_type),
            (None, Compiled::Column(i)) => {
                let c = &table.columns()[*i];
                (c.name.clone(), c.column_type)
            }
            (alias, Compiled::Literal(v)) => (
                alias.clone().unwrap_or_else(|| item.expr.to_string()),
                v.column_type().unwrap_or(ColumnType::Text),
            ),
            (alias, Compiled::Call(..)) => (
                alias.clone().unwrap_or_else(|| item.expr.to_string()),
                ColumnType::Text,
            ),
        };
        if columns
            .iter()
            .any(|c: &ColumnDef| c.name.eq_ignore_ascii_case(&name))
        {
            return Err(SqlError::DuplicateOutputColumn(name));
        }
        columns.push(ColumnDef::new(name, column_type));
        exprs.push(compiled);
    }
    let filters = query
        .conditions
        .iter()
        .map(|c| Ok((resolve(table, &c.column)?, &c.test)))
        .collect::<Result<Vec<_>, SqlError>>()?;

    let mut out = Table::new(table.name(), columns).expect("output columns checked for duplicates");
    for row in table.rows() {
        if !filters.iter().all(|(i, test)| passes(test, &row[*i])) {
            continue;
        }
        let values = exprs
            .iter()
            .map(|e| eval(e, row, &mut ctx))
            .collect::<Result<Vec<_>, _>>()?;
        out.push_row(values).expect("output row matches output schema");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::parse_sql;
    use super::*;

    fn store() -> TableStore {
        let mut awg = Table::new(
            "AWG",
            vec![ColumnDef::text("AWG_ID"), ColumnDef::new("N", ColumnType::Integer)],
        )
        .unwrap();
        awg.push_row(vec![Value::Text("034028-60/07-004".into()), Value::Integer(1)]).unwrap();
        awg.push_row(vec![Value::Text("034028-60/07-006".into()), Value::Null]).unwrap();
        awg.push_row(vec![Value::Null, Value::Integer(3)]).unwrap();
        [awg].into_iter().collect()
    }

    fn run(sql: &str) -> Result<Table, SqlError> {
        eval_sql(&parse_sql(sql)?, &store())
    }

    #[test]
    fn replace_slashes() {
        let t = run(r#"SELECT AWG_ID, REPLACE(AWG_ID, "/", "-") AS URLID FROM AWG"#).unwrap();
        assert_eq!(t.columns()[1].name, "URLID");
        assert_eq!(t.rows()[0][1], Value::Text("034028-60-07-004".into()));
        assert_eq!(t.rows()[1][1], Value::Text("034028-60-07-006".into()));
        assert_eq!(t.rows()[2][1], Value::Null);
    }

    #[test]
    fn where_filters_and_null_semantics() {
        assert_eq!(run("SELECT N FROM AWG WHERE N = 1").unwrap().len(), 1);
        assert_eq!(run("SELECT N FROM AWG WHERE N <> 1").unwrap().len(), 1);
        assert_eq!(run("SELECT N FROM AWG WHERE N IS NULL").unwrap().len(), 1);
        assert_eq!(run("SELECT N FROM AWG WHERE awg_id IS NOT NULL AND n = 1.0").unwrap().len(), 1);
        assert_eq!(run("SELECT N FROM AWG WHERE N = '1'").unwrap().len(), 0);
    }

    #[test]
    fn regex_extract_and_substr() {
        let t = run(r"SELECT REGEX_EXTRACT(AWG_ID, '^(\d+)-(\d+)', 2) AS G, SUBSTR(AWG_ID, -3) AS S FROM AWG")
            .unwrap();
        assert_eq!(t.rows()[0], vec![Value::Text("60".into()), Value::Text("004".into())]);
        assert!(matches!(
            run("SELECT REGEX_EXTRACT(AWG_ID, '(', 1) FROM AWG"),
            Err(SqlError::InvalidRegex { .. })
        ));
        assert!(matches!(
            run("SELECT REGEX_EXTRACT(AWG_ID, '(a)', 2) FROM AWG"),
            Err(SqlError::InvalidRegex { .. })
        ));
    }

    #[test]
    fn substr_windows() {
        assert_eq!(substr("abcde", 2, Some(2)), "bc");
        assert_eq!(substr("abcde", 0, Some(2)), "a");
        assert_eq!(substr("abcde", -2, None), "de");
        assert_eq!(substr("abcde", -7, Some(3)), "a");
        assert_eq!(substr("abcde", 9, None), "");
        assert_eq!(substr("äöü", 2, Some(1)), "ö");
    }

    #[test]
    fn lookup_errors() {
        assert!(matches!(run("SELECT X FROM AWG"), Err(SqlError::UnknownColumn { .. })));
        assert!(matches!(run("SELECT AWG_ID FROM NOPE"), Err(SqlError::UnknownTable(_))));
        assert!(matches!(
            run("SELECT AWG_ID, N AS awg_id FROM AWG"),
            Err(SqlError::DuplicateOutputColumn(_))
        ));
    }

    #[test]
    fn output_types_follow_sources() {
        let t = run("SELECT N, 'x', 7, SUBSTR(N, 1) FROM AWG").unwrap();
        let types: Vec<_> = t.columns().iter().map(|c| c.column_type).collect();
        assert_eq!(
            types,
            vec![ColumnType::Integer, ColumnType::Text, ColumnType::Integer, ColumnType::Text]
        );
        assert_eq!(t.columns()[1].name, "'x'");
    }
}
