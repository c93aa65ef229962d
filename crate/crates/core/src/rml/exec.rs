use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::{iri_safe_encode, MappingDocument, MappingError, ObjectMap, SourceKind, Template, TriplesMap};
use crate::rdf::{vocab, Graph, Literal, Term, Triple};
use crate::table::{eval_sql, parse_sql, Table, TableStore};

/// A triples map with its logical source evaluated and one subject per row
/// (`None` where a placeholder was null).
struct Prepared<'a> {
    map: &'a TriplesMap,
    rows: Cow<'a, Table>,
    subjects: Vec<Option<Term>>,
}

fn column(map: &TriplesMap, table: &Table, name: &str) -> Result<usize, MappingError> {
    table.column_index(name).ok_or_else(|| MappingError::UnknownColumn {
        map: map.id.clone(),
        column: name.to_string(),
    })
}

fn evaluate_source<'a>(map: &'a TriplesMap, store: &'a TableStore) -> Result<Cow<'a, Table>, MappingError> {
    let ls = &map.logical_source;
    match &ls.query {
        Some(sql) => {
            let query_error = |source| MappingError::Query {
                map: map.id.clone(),
                source,
            };
            let query = parse_sql(sql).map_err(query_error)?;
            Ok(Cow::Owned(eval_sql(&query, store).map_err(query_error)?))
        }
        None => {
            debug_assert_eq!(ls.source.kind, SourceKind::CsvFile);
            let name = ls.source.table_name();
            store
                .get(name)
                .map(Cow::Borrowed)
                .ok_or_else(|| MappingError::MissingTable {
                    map: map.id.clone(),
                    table: name.to_string(),
                })
        }
    }
}

fn expand_iri(map: &TriplesMap, template: &Template, table: &Table, row: &[crate::table::Value]) -> Result<Option<Term>, MappingError> {
    let value = |c: &str| table.column_index(c).and_then(|i| row[i].as_text());
    match template.expand(value, iri_safe_encode) {
        None => Ok(None),
        Some(iri) => Term::try_iri(iri.clone())
            .map(Some)
            .map_err(|_| MappingError::InvalidIri {
                map: map.id.clone(),
                iri,
            }),
    }
}

fn prepare<'a>(map: &'a TriplesMap, store: &'a TableStore) -> Result<Prepared<'a>, MappingError> {
    let rows = evaluate_source(map, store)?;
    let template = &map.subject_map.template;
    for c in template.columns() {
        column(map, &rows, c)?;
    }
    let subjects = rows
        .rows()
        .iter()
        .map(|row| expand_iri(map, template, &rows, row))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Prepared { map, rows, subjects })
}

enum JoinPlan<'p> {
    /// Same logical source and no conditions: the parent subject of the
    /// same row.
    SameRow(&'p Prepared<'p>),
    /// No conditions across different sources: every parent row.
    AllRows(&'p Prepared<'p>),
    Keyed {
        parent: &'p Prepared<'p>,
        child_columns: Vec<usize>,
        index: HashMap<Vec<String>, Vec<usize>>,
    },
}

fn join_key(row: &[crate::table::Value], columns: &[usize]) -> Option<Vec<String>> {
    columns.iter().map(|&i| row[i].as_text()).collect()
}

fn plan_join<'p>(
    child: &Prepared<'_>,
    parent_id: &str,
    conditions: &[super::JoinCondition],
    prepared: &'p BTreeMap<&str, Prepared<'p>>,
) -> Result<JoinPlan<'p>, MappingError> {
    let parent = prepared.get(parent_id).ok_or_else(|| MappingError::DanglingParent {
        map: child.map.id.clone(),
        parent: parent_id.to_string(),
    })?;
    if conditions.is_empty() {
        return Ok(if parent.map.logical_source == child.map.logical_source {
            JoinPlan::SameRow(parent)
        } else {
            JoinPlan::AllRows(parent)
        });
    }
    let child_columns = conditions
        .iter()
        .map(|c| column(child.map, &child.rows, &c.child))
        .collect::<Result<Vec<_>, _>>()?;
    let parent_columns = conditions
        .iter()
        .map(|c| column(parent.map, &parent.rows, &c.parent))
        .collect::<Result<Vec<_>, _>>()?;
    let mut index: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (i, row) in parent.rows.rows().iter().enumerate() {
        if let Some(key) = join_key(row, &parent_columns) {
            index.entry(key).or_default().push(i);
        }
    }
    Ok(JoinPlan::Keyed {
        parent,
        child_columns,
        index,
    })
}

enum ObjectPlan<'p> {
    Constant(Term),
    Reference {
        column: usize,
        datatype: Option<String>,
        language: Option<String>,
    },
    Template(&'p Template),
    Join(JoinPlan<'p>),
}

fn generate<'p>(child: &Prepared<'_>, prepared: &'p BTreeMap<&str, Prepared<'p>>) -> Result<Vec<Triple>, MappingError> {
    let map = child.map;
    let table = &child.rows;
    let mut plans = Vec::with_capacity(map.predicate_object_maps.len());
    for pom in &map.predicate_object_maps {
        let object = match &pom.object {
            ObjectMap::Constant(t) => ObjectPlan::Constant(t.clone()),
            ObjectMap::Reference {
                column: name,
                datatype,
                language,
            } => ObjectPlan::Reference {
                column: column(map, table, name)?,
                datatype: datatype.clone(),
                language: language.clone(),
            },
            ObjectMap::Template(t) => {
                for c in t.columns() {
                    column(map, table, c)?;
                }
                ObjectPlan::Template(t)
            }
            ObjectMap::Join { parent, conditions } => {
                ObjectPlan::Join(plan_join(child, parent, conditions, prepared)?)
            }
        };
        plans.push((Term::iri(pom.predicate.clone()), object));
    }
    let classes: Vec<Term> = map.subject_map.classes.iter().cloned().map(Term::iri).collect();
    let rdf_type = Term::iri(vocab::RDF_TYPE);

    let mut out = Vec::new();
    for (i, row) in table.rows().iter().enumerate() {
        let Some(subject) = &child.subjects[i] else {
            continue;
        };
        let mut emit = |p: &Term, o: Term| out.push(Triple::new(subject.clone(), p.clone(), o));
        for c in &classes {
            emit(&rdf_type, c.clone());
        }
        for (predicate, plan) in &plans {
            match plan {
                ObjectPlan::Constant(t) => emit(predicate, t.clone()),
                ObjectPlan::Reference {
                    column,
                    datatype,
                    language,
                } => {
                    let Some(text) = row[*column].as_text() else {
                        continue;
                    };
                    let literal = match (datatype, language) {
                        (_, Some(lang)) => Literal::with_language(text, lang)
                            .expect("language tag validated during extraction"),
                        (Some(dt), None) => Literal::typed(text, dt.clone()),
                        (None, None) => Literal::plain(text),
                    };
                    emit(predicate, Term::Literal(literal));
                }
                ObjectPlan::Template(t) => {
                    if let Some(o) = expand_iri(map, t, table, row)? {
                        emit(predicate, o);
                    }
                }
                ObjectPlan::Join(JoinPlan::SameRow(parent)) => {
                    if let Some(o) = &parent.subjects[i] {
                        emit(predicate, o.clone());
                    }
                }
                ObjectPlan::Join(JoinPlan::AllRows(parent)) => {
                    for o in parent.subjects.iter().flatten() {
                        emit(predicate, o.clone());
                    }
                }
                ObjectPlan::Join(JoinPlan::Keyed {
                    parent,
                    child_columns,
                    index,
                }) => {
                    let Some(key) = join_key(row, child_columns) else {
                        continue;
                    };
                    for &j in index.get(&key).into_iter().flatten() {
                        if let Some(o) = &parent.subjects[j] {
                            emit(predicate, o.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn first_error<T>(results: Vec<Result<T, MappingError>>) -> Result<Vec<T>, MappingError> {
    results.into_iter().collect()
}

/// Triples produced by one map. Parent maps referenced by joins have
/// their logical sources evaluated too; their own class triples are not
/// included.
pub fn execute_triples_map(
    map: &TriplesMap,
    doc: &MappingDocument,
    store: &TableStore,
) -> Result<BTreeSet<Triple>, MappingError> {
    let mut needed: BTreeSet<&str> = BTreeSet::new();
    needed.insert(&map.id);
    for pom in &map.predicate_object_maps {
        if let ObjectMap::Join { parent, .. } = &pom.object {
            needed.insert(parent);
        }
    }
    let mut prepared = BTreeMap::new();
    for id in needed {
        let m = if id == map.id {
            map
        } else {
            doc.triples_map(id).ok_or_else(|| MappingError::DanglingParent {
                map: map.id.clone(),
                parent: id.to_string(),
            })?
        };
        prepared.insert(m.id.as_str(), prepare(m, store)?);
    }
    let triples = generate(&prepared[map.id.as_str()], &prepared)?;
    Ok(triples.into_iter().collect())
}

/// Runs every triples map and returns the union of their triples, carrying
/// the document's prefixes. Logical sources are evaluated once each and
/// maps run in parallel; the result does not depend on scheduling.
pub fn execute_mapping(doc: &MappingDocument, store: &TableStore) -> Result<Graph, MappingError> {
    let prepared = first_error(
        doc.triples_maps
            .par_iter()
            .map(|m| prepare(m, store))
            .collect(),
    )?;
    let prepared: BTreeMap<&str, Prepared<'_>> = prepared
        .into_iter()
        .map(|p| (p.map.id.as_str(), p))
        .collect();
    let generated = first_error(
        doc.triples_maps
            .par_iter()
            .map(|m| generate(&prepared[m.id.as_str()], &prepared))
            .collect(),
    )?;
    let mut graph = Graph::with_prefixes(doc.prefixes.clone());
    for triples in generated {
        graph.extend(triples);
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::super::parse_mapping;
    use super::*;
    use crate::rdf::parse_turtle;
    use crate::table::{ColumnDef, Value};

    const MAP_CROP: &str = include_str!("../../../../mappings/Map_Crop.ttl");
    const BASE: &str = "file:///maps/Map_Crop.ttl";

    fn text_table(name: &str, columns: &[&str], rows: &[&[&str]]) -> Table {
        let mut t = Table::new(name, columns.iter().map(|c| ColumnDef::text(*c)).collect()).unwrap();
        for r in rows {
            t.push_row(
                r.iter()
                    .map(|v| if v.is_empty() { Value::Null } else { Value::Text(v.to_string()) })
                    .collect(),
            )
            .unwrap();
        }
        t
    }

    fn awg_store() -> TableStore {
        [
            text_table("AWG", &["AWG_ID"], &[&["034028-60/07-004"], &["034028-60/07-006"]]),
            text_table(
                "AWG_KULTUR",
                &["AWG_ID", "KULTUR"],
                &[&["034028-60/07-004", "RUBID"], &["034028-60/07-006", "RUBFR"]],
            ),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn map_crop_yields_the_six_listed_statements() {
        let doc = parse_mapping(MAP_CROP, BASE).unwrap();
        let g = execute_mapping(&doc, &awg_store()).unwrap();
        let expected = parse_turtle(
            "@prefix psm: <http://srv.ktbl.de/data/psm/> .\n\
             @prefix psmr: <http://srv.ktbl.de/data/psm/resources/> .\n\
             psmr:ind_034028-60-07-004 a psm:Indication;\n    psm:appliedOnCrop psmr:crop_RUBID .\n\
             psmr:ind_034028-60-07-006 a psm:Indication;\n    psm:appliedOnCrop psmr:crop_RUBFR .\n\
             psmr:crop_RUBFR a psm:Crop.\n\
             psmr:crop_RUBID a psm:Crop.\n",
        )
        .unwrap();
        assert_eq!(g.triples(), expected.triples());
        assert_eq!(g.prefixes.get("psm"), Some("http://srv.ktbl.de/data/psm/"));
    }

    #[test]
    fn empty_source_gives_no_triples() {
        let doc = parse_mapping(MAP_CROP, BASE).unwrap();
        let store: TableStore = [
            text_table("AWG", &["AWG_ID"], &[]),
            text_table("AWG_KULTUR", &["AWG_ID", "KULTUR"], &[&["x", "RUBID"]]),
        ]
        .into_iter()
        .collect();
        let tm1 = &doc.triples_maps[0];
        assert!(tm1.id.ends_with("#TriplesMap1"));
        assert!(execute_triples_map(tm1, &doc, &store).unwrap().is_empty());
    }

    #[test]
    fn duplicate_producing_maps_collapse() {
        let text = format!(
            "{MAP_CROP}\n<#TriplesMap3> a rr:TriplesMap;\n  rml:logicalSource [ rml:source <#DB_source>; rml:query \"SELECT KULTUR FROM AWG_KULTUR\" ];\n  rr:subjectMap [ rr:template \"http://srv.ktbl.de/data/psm/resources/crop_{{KULTUR}}\"; rr:class psm:Crop ].\n"
        );
        let doc = parse_mapping(&text, BASE).unwrap();
        assert_eq!(doc.triples_maps.len(), 3);
        assert_eq!(execute_mapping(&doc, &awg_store()).unwrap().len(), 6);
    }

    #[test]
    fn null_placeholders_suppress_subjects_and_objects() {
        let text = r#"@prefix rr: <http://www.w3.org/ns/r2rml#>. @prefix rml: <http://semweb.mmlab.be/ns/rml#>.
            @prefix ex: <http://e/>.
            <#M> rml:logicalSource [ rml:source "T.csv" ];
              rr:subjectMap [ rr:template "http://e/s/{A}"; rr:class ex:C ];
              rr:predicateObjectMap [ rr:predicate ex:b; rr:objectMap [ rml:reference "B" ] ].
            <#P> rml:logicalSource [ rml:source "T.csv" ];
              rr:subjectMap [ rr:template "http://e/p/{B}" ];
              rr:predicateObjectMap [ rr:predicate ex:c; rr:objectMap [ rr:constant "k" ] ].
            <#Q> rml:logicalSource [ rml:source "T.csv" ];
              rr:subjectMap [ rr:template "http://e/q/{A}" ];
              rr:predicateObjectMap [ rr:predicate ex:same; rr:objectMap [ rr:parentTriplesMap <#P> ] ]."#;
        let doc = parse_mapping(text, BASE).unwrap();
        let store: TableStore = [text_table("T", &["A", "B"], &[&["1", ""], &["", "x"], &["a b", "y"]])]
            .into_iter()
            .collect();
        let g = execute_mapping(&doc, &store).unwrap();
        let nt = crate::rdf::serialize_ntriples(&g);
        assert!(!nt.contains("null"));
        assert!(nt.contains("<http://e/s/a%20b> <http://e/b> \"y\" ."));
        assert!(nt.contains("<http://e/q/a%20b> <http://e/same> <http://e/p/y> ."));
        // row 1 has B null: no ex:b triple and no same-row join object
        assert!(!nt.contains("<http://e/s/1> <http://e/b>"));
        assert!(!nt.contains("<http://e/q/1> <http://e/same>"));
        assert_eq!(g.iter().filter(|t| t.predicate.as_iri() == Some(vocab::RDF_TYPE)).count(), 2);
    }

    #[test]
    fn unknown_columns_name_the_map() {
        let text = MAP_CROP.replace("crop_{KULTUR}", "crop_{CROP}");
        let doc = parse_mapping(&text, BASE).unwrap();
        match execute_mapping(&doc, &awg_store()) {
            Err(MappingError::UnknownColumn { map, column }) => {
                assert!(map.ends_with("#TriplesMap2"));
                assert_eq!(column, "CROP");
            }
            other => panic!("{other:?}"),
        }
        let text = MAP_CROP.replace("rr:child \"AWG_ID\"", "rr:child \"ID\"");
        let doc = parse_mapping(&text, BASE).unwrap();
        assert!(matches!(
            execute_mapping(&doc, &awg_store()),
            Err(MappingError::UnknownColumn { .. })
        ));
    }

    #[test]
    fn relative_template_is_rejected() {
        let text = MAP_CROP.replace("http://srv.ktbl.de/data/psm/resources/crop_", "crop_");
        let doc = parse_mapping(&text, BASE).unwrap();
        assert!(matches!(
            execute_mapping(&doc, &awg_store()),
            Err(MappingError::InvalidIri { .. })
        ));
    }
}
