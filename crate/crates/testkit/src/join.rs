//! Join oracle: every child row against every parent row.

use std::collections::BTreeSet;

use pam_core::table::{ColumnDef, ColumnType, Table, Value};
use pam_core::{Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::gen::EX;

/// Lexical form used for key comparison; nulls have none.
fn key_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::Text(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Real(r) => Some(r.to_string()),
    }
}

/// A child/parent pair keyed on `K1` (and `K2` when `two_keys`). Each
/// table has an `ID` column. Keys come from a pool whose size decides
/// whether rows match none, one or many partners.
pub struct JoinCase {
    pub child: Table,
    pub parent: Table,
    pub two_keys: bool,
}

pub fn join_case<R: Rng>(rng: &mut R) -> JoinCase {
    let two_keys = rng.gen_bool(0.3);
    let pool: Vec<String> = match rng.gen_range(0..3) {
        0 => (0..40).map(|i| format!("k{i}")).collect(),
        1 => (0..3).map(|i| format!("k{i}")).collect(),
        _ => (0..8).map(|i| format!("k{i}")).collect(),
    };
    let integer_parent = rng.gen_bool(0.2);
    let key = |rng: &mut R, integer: bool| -> Value {
        if rng.gen_bool(0.1) {
            return Value::Null;
        }
        let i = rng.gen_range(0..pool.len());
        if integer {
            Value::Integer(i as i64)
        } else if integer_parent {
            Value::Text(i.to_string())
        } else {
            Value::Text(pool.choose(rng).unwrap().clone())
        }
    };
    let columns = |integer: bool| {
        let kt = if integer { ColumnType::Integer } else { ColumnType::Text };
        let mut cols = vec![ColumnDef::text("ID"), ColumnDef::new("K1", kt)];
        if two_keys {
            cols.push(ColumnDef::new("K2", kt));
        }
        cols
    };
    let mut child = Table::new("CHILD", columns(false)).unwrap();
    let mut parent = Table::new("PARENT", columns(integer_parent)).unwrap();
    for i in 0..rng.gen_range(0..=50) {
        let mut row = vec![Value::Text(format!("c{i}")), key(rng, false)];
        if two_keys {
            row.push(key(rng, false));
        }
        child.push_row(row).unwrap();
    }
    for i in 0..rng.gen_range(0..=50) {
        let mut row = vec![Value::Text(format!("p{i}")), key(rng, integer_parent)];
        if two_keys {
            row.push(key(rng, integer_parent));
        }
        parent.push_row(row).unwrap();
    }
    JoinCase {
        child,
        parent,
        two_keys,
    }
}

impl JoinCase {
    pub fn mapping(&self) -> String {
        let second = if self.two_keys {
            r#"; rr:joinCondition [ rr:child "K2"; rr:parent "K2" ]"#
        } else {
            ""
        };
        let k2 = if self.two_keys { ", K2" } else { "" };
        format!(
            r#"@prefix rr: <http://www.w3.org/ns/r2rml#>.
@prefix rml: <http://semweb.mmlab.be/ns/rml#>.
@prefix d2rq: <http://www.wiwiss.fu-berlin.de/suhl/bizer/D2RQ/0.1#>.
@prefix ex: <{EX}>.
<#DB> a d2rq:Database; d2rq:jdbcDSN "jdbc:sqlite://mem".
<#Child> rml:logicalSource [ rml:source <#DB>; rml:query "SELECT ID, K1{k2} FROM CHILD" ];
  rr:subjectMap [ rr:template "{EX}child/{{ID}}" ];
  rr:predicateObjectMap [ rr:predicate ex:ref; rr:objectMap [
    rr:parentTriplesMap <#Parent>; rr:joinCondition [ rr:child "K1"; rr:parent "K1" ]{second} ] ].
<#Parent> rml:logicalSource [ rml:source <#DB>; rml:query "SELECT ID, K1{k2} FROM PARENT" ];
  rr:subjectMap [ rr:template "{EX}parent/{{ID}}"; rr:class ex:Parent ].
"#
        )
    }

    /// `ex:ref` triples the join must produce.
    pub fn expected(&self) -> BTreeSet<Triple> {
        let keys = if self.two_keys { 2 } else { 1 };
        let mut out = BTreeSet::new();
        for c in self.child.rows() {
            for p in self.parent.rows() {
                let matched = (1..=keys).all(|k| match (key_text(&c[k]), key_text(&p[k])) {
                    (Some(a), Some(b)) => a == b,
                    _ => false,
                });
                if matched {
                    out.insert(Triple::new(
                        Term::iri(format!("{EX}child/{}", c[0])),
                        Term::iri(format!("{EX}ref")),
                        Term::iri(format!("{EX}parent/{}", p[0])),
                    ));
                }
            }
        }
        out
    }
}
