use std::collections::{BTreeMap, BTreeSet};

use super::{
    JoinCondition, LogicalSource, MappingDocument, MappingError, ObjectMap, PredicateObjectMap,
    SourceDef, SourceKind, SubjectMap, Template, TriplesMap,
};
use crate::rdf::{parse_turtle_with_base, term_to_ntriples, vocab, Graph, Literal, Term};

const RR_TRIPLES_MAP: &str = "http://www.w3.org/ns/r2rml#TriplesMap";
const D2RQ_DATABASE: &str = "http://www.wiwiss.fu-berlin.de/suhl/bizer/D2RQ/0.1#Database";
const D2RQ_JDBC_DSN: &str = "http://www.wiwiss.fu-berlin.de/suhl/bizer/D2RQ/0.1#jdbcDSN";

const LOGICAL_SOURCE: &str = "http://semweb.mmlab.be/ns/rml#logicalSource";
const SOURCE: &str = "http://semweb.mmlab.be/ns/rml#source";
const QUERY: &str = "http://semweb.mmlab.be/ns/rml#query";
const REFERENCE_FORMULATION: &str = "http://semweb.mmlab.be/ns/rml#referenceFormulation";
const REFERENCE: &str = "http://semweb.mmlab.be/ns/rml#reference";
const SQL_VERSION: &str = "http://www.w3.org/ns/r2rml#sqlVersion";
const SUBJECT_MAP: &str = "http://www.w3.org/ns/r2rml#subjectMap";
const TEMPLATE: &str = "http://www.w3.org/ns/r2rml#template";
const CLASS: &str = "http://www.w3.org/ns/r2rml#class";
const PREDICATE_OBJECT_MAP: &str = "http://www.w3.org/ns/r2rml#predicateObjectMap";
const PREDICATE: &str = "http://www.w3.org/ns/r2rml#predicate";
const OBJECT_MAP: &str = "http://www.w3.org/ns/r2rml#objectMap";
const PARENT_TRIPLES_MAP: &str = "http://www.w3.org/ns/r2rml#parentTriplesMap";
const JOIN_CONDITION: &str = "http://www.w3.org/ns/r2rml#joinCondition";
const CHILD: &str = "http://www.w3.org/ns/r2rml#child";
const PARENT: &str = "http://www.w3.org/ns/r2rml#parent";
const CONSTANT: &str = "http://www.w3.org/ns/r2rml#constant";
const DATATYPE: &str = "http://www.w3.org/ns/r2rml#datatype";
const LANGUAGE: &str = "http://www.w3.org/ns/r2rml#language";

const KNOWN_PROPERTIES: &[&str] = &[
    LOGICAL_SOURCE,
    SOURCE,
    QUERY,
    REFERENCE_FORMULATION,
    REFERENCE,
    SQL_VERSION,
    SUBJECT_MAP,
    TEMPLATE,
    CLASS,
    PREDICATE_OBJECT_MAP,
    PREDICATE,
    OBJECT_MAP,
    PARENT_TRIPLES_MAP,
    JOIN_CONDITION,
    CHILD,
    PARENT,
    CONSTANT,
    DATATYPE,
    LANGUAGE,
];

fn show(term: &Term) -> String {
    match term {
        Term::Iri(iri) => iri.clone(),
        other => term_to_ntriples(other),
    }
}

/// Local name for messages, e.g. `rr:joinCondition`.
fn short(property: &str) -> String {
    if let Some(local) = property.strip_prefix(vocab::RR) {
        format!("rr:{local}")
    } else if let Some(local) = property.strip_prefix(vocab::RML) {
        format!("rml:{local}")
    } else {
        property.to_string()
    }
}

struct Reader<'g> {
    graph: &'g Graph,
}

impl<'g> Reader<'g> {
    fn objects(&self, subject: &'g Term, property: &'g str) -> Vec<&'g Term> {
        self.graph
            .triples_for_subject(subject)
            .filter(|t| t.predicate.as_iri() == Some(property))
            .map(|t| &t.object)
            .collect()
    }

    fn optional(&self, subject: &'g Term, property: &'g str) -> Result<Option<&'g Term>, MappingError> {
        let mut values = self.objects(subject, property);
        match values.len() {
            0 => Ok(None),
            1 => Ok(values.pop()),
            _ => Err(MappingError::MultipleValues {
                subject: show(subject),
                property: short(property),
            }),
        }
    }

    fn required(&self, subject: &'g Term, property: &'g str) -> Result<&'g Term, MappingError> {
        self.optional(subject, property)?
            .ok_or_else(|| MappingError::MissingProperty {
                subject: show(subject),
                property: short(property),
            })
    }
}

fn invalid(subject: &Term, property: &str, message: impl Into<String>) -> MappingError {
    MappingError::InvalidValue {
        subject: show(subject),
        property: short(property),
        message: message.into(),
    }
}

fn literal_text<'t>(subject: &Term, property: &str, value: &'t Term) -> Result<&'t str, MappingError> {
    match value {
        Term::Literal(lit) => Ok(lit.value()),
        _ => Err(invalid(subject, property, "expected a literal")),
    }
}

fn iri_text(subject: &Term, property: &str, value: &Term) -> Result<String, MappingError> {
    value
        .as_iri()
        .map(str::to_string)
        .ok_or_else(|| invalid(subject, property, "expected an IRI"))
}

/// Store locator from a JDBC URL: `jdbc:sqlite://Pfad/Name` → `Pfad/Name`.
fn jdbc_locator(dsn: &str) -> String {
    let rest = dsn.strip_prefix("jdbc:").unwrap_or(dsn);
    let rest = match rest.find(':') {
        Some(colon) => &rest[colon + 1..],
        None => rest,
    };
    let rest = rest.strip_prefix("//").unwrap_or(rest);
    let rest = rest.split(';').next().unwrap_or(rest);
    if rest.is_empty() {
        dsn.to_string()
    } else {
        rest.to_string()
    }
}

/// Parses mapping Turtle against `base` (usually the file's URL) and
/// extracts its triples maps.
pub fn parse_mapping(text: &str, base: &str) -> Result<MappingDocument, MappingError> {
    extract_mapping(&parse_turtle_with_base(text, base)?)
}

/// Reads the triples maps out of a parsed mapping graph. Subjects typed
/// `rr:TriplesMap` or carrying a logical source or subject map count as
/// triples maps. Any `rr:`/`rml:` property outside the supported set is
/// rejected.
pub fn extract_mapping(graph: &Graph) -> Result<MappingDocument, MappingError> {
    for t in graph {
        if let Some(p) = t.predicate.as_iri() {
            if (p.starts_with(vocab::RR) || p.starts_with(vocab::RML)) && !KNOWN_PROPERTIES.contains(&p) {
                return Err(MappingError::UnknownProperty {
                    property: short(p),
                    subject: show(&t.subject),
                });
            }
        }
    }

    let reader = Reader { graph };
    let map_ids: BTreeSet<&Term> = graph
        .iter()
        .filter(|t| {
            let p = t.predicate.as_iri();
            (p == Some(vocab::RDF_TYPE) && t.object.as_iri() == Some(RR_TRIPLES_MAP))
                || p == Some(LOGICAL_SOURCE)
                || p == Some(SUBJECT_MAP)
        })
        .map(|t| &t.subject)
        .collect();

    let mut doc = MappingDocument {
        prefixes: graph.prefixes.clone(),
        ..Default::default()
    };
    let known: BTreeSet<String> = map_ids.iter().map(|t| show(t)).collect();
    for id in map_ids {
        let map = read_triples_map(&reader, id, &known, &mut doc.sources)?;
        doc.triples_maps.push(map);
    }
    Ok(doc)
}

fn read_triples_map(
    reader: &Reader<'_>,
    node: &Term,
    known: &BTreeSet<String>,
    sources: &mut BTreeMap<String, SourceDef>,
) -> Result<TriplesMap, MappingError> {
    let id = show(node);

    let ls_node = reader.required(node, LOGICAL_SOURCE)?;
    let source_term = reader.required(ls_node, SOURCE)?;
    let source = match source_term {
        Term::Literal(lit) => SourceDef {
            kind: SourceKind::CsvFile,
            location: lit.value().to_string(),
        },
        other => {
            let is_db = reader
                .objects(other, vocab::RDF_TYPE)
                .iter()
                .any(|c| c.as_iri() == Some(D2RQ_DATABASE));
            if !is_db {
                return Err(MappingError::UnknownSource {
                    map: id,
                    source_id: show(other),
                });
            }
            let dsn = reader.required(other, D2RQ_JDBC_DSN)?;
            SourceDef {
                kind: SourceKind::TableStore,
                location: jdbc_locator(literal_text(other, D2RQ_JDBC_DSN, dsn)?),
            }
        }
    };
    sources.insert(show(source_term), source.clone());
    let query = reader
        .optional(ls_node, QUERY)?
        .map(|q| literal_text(ls_node, QUERY, q).map(|s| s.trim().to_string()))
        .transpose()?;
    if query.is_none() && source.kind == SourceKind::TableStore {
        return Err(MappingError::MissingQuery { map: id });
    }
    let logical_source = LogicalSource {
        source,
        query,
        reference_formulation: reader
            .optional(ls_node, REFERENCE_FORMULATION)?
            .map(show),
        sql_version: reader.optional(ls_node, SQL_VERSION)?.map(show),
    };

    let sm_node = reader
        .optional(node, SUBJECT_MAP)?
        .ok_or_else(|| MappingError::MissingSubjectMap { map: id.clone() })?;
    let template_text = reader.required(sm_node, TEMPLATE)?;
    let template = Template::parse(literal_text(sm_node, TEMPLATE, template_text)?)
        .map_err(|source| MappingError::Template {
            map: id.clone(),
            source,
        })?;
    let classes = reader
        .objects(sm_node, CLASS)
        .into_iter()
        .map(|c| iri_text(sm_node, CLASS, c))
        .collect::<Result<Vec<_>, _>>()?;
    let subject_map = SubjectMap { template, classes };

    let mut predicate_object_maps = Vec::new();
    for pom in reader.objects(node, PREDICATE_OBJECT_MAP) {
        let predicates = reader.objects(pom, PREDICATE);
        let objects = reader.objects(pom, OBJECT_MAP);
        if predicates.is_empty() {
            return Err(MappingError::MissingProperty {
                subject: show(pom),
                property: short(PREDICATE),
            });
        }
        if objects.is_empty() {
            return Err(MappingError::MissingProperty {
                subject: show(pom),
                property: short(OBJECT_MAP),
            });
        }
        let object_maps = objects
            .into_iter()
            .map(|om| read_object_map(reader, om, &id, known))
            .collect::<Result<Vec<_>, _>>()?;
        for p in predicates {
            let predicate = iri_text(pom, PREDICATE, p)?;
            for object in &object_maps {
                predicate_object_maps.push(PredicateObjectMap {
                    predicate: predicate.clone(),
                    object: object.clone(),
                });
            }
        }
    }

    if subject_map.classes.is_empty() && predicate_object_maps.is_empty() {
        return Err(MappingError::EmptyTriplesMap { map: id });
    }
    Ok(TriplesMap {
        id,
        logical_source,
        subject_map,
        predicate_object_maps,
    })
}

fn read_object_map(
    reader: &Reader<'_>,
    om: &Term,
    map: &str,
    known: &BTreeSet<String>,
) -> Result<ObjectMap, MappingError> {
    let constant = reader.optional(om, CONSTANT)?;
    let reference = reader.optional(om, REFERENCE)?;
    let template = reader.optional(om, TEMPLATE)?;
    let parent = reader.optional(om, PARENT_TRIPLES_MAP)?;
    let forms = [constant, reference, template, parent].iter().flatten().count();
    if forms != 1 {
        return Err(invalid(
            om,
            OBJECT_MAP,
            "needs exactly one of rr:constant, rml:reference, rr:template, rr:parentTriplesMap",
        ));
    }

    if let Some(c) = constant {
        if c.is_blank() {
            return Err(invalid(om, CONSTANT, "blank nodes are not valid constants"));
        }
        return Ok(ObjectMap::Constant(c.clone()));
    }
    if let Some(r) = reference {
        let column = literal_text(om, REFERENCE, r)?.to_string();
        let datatype = reader
            .optional(om, DATATYPE)?
            .map(|d| iri_text(om, DATATYPE, d))
            .transpose()?;
        let language = reader
            .optional(om, LANGUAGE)?
            .map(|l| literal_text(om, LANGUAGE, l).map(str::to_string))
            .transpose()?;
        if let Some(lang) = &language {
            if datatype.is_some() {
                return Err(invalid(om, LANGUAGE, "cannot be combined with rr:datatype"));
            }
            Literal::with_language("", lang).map_err(|e| invalid(om, LANGUAGE, e.to_string()))?;
        }
        return Ok(ObjectMap::Reference {
            column,
            datatype,
            language,
        });
    }
    if let Some(t) = template {
        let template = Template::parse(literal_text(om, TEMPLATE, t)?).map_err(|source| {
            MappingError::Template {
                map: map.to_string(),
                source,
            }
        })?;
        return Ok(ObjectMap::Template(template));
    }

    let parent = show(parent.expect("exactly one object form is present"));
    if !known.contains(&parent) {
        return Err(MappingError::DanglingParent {
            map: map.to_string(),
            parent,
        });
    }
    let mut conditions = Vec::new();
    for jc in reader.objects(om, JOIN_CONDITION) {
        let side = |property: &'static str, name: &str| -> Result<String, MappingError> {
            match reader.optional(jc, property)? {
                Some(v) => Ok(literal_text(jc, property, v)?.to_string()),
                None => Err(MappingError::DanglingJoin {
                    map: map.to_string(),
                    message: format!("{} has no {name} column", show(jc)),
                }),
            }
        };
        conditions.push(JoinCondition {
            child: side(CHILD, "rr:child")?,
            parent: side(PARENT, "rr:parent")?,
        });
    }
    conditions.sort_by(|a, b| (&a.child, &a.parent).cmp(&(&b.child, &b.parent)));
    Ok(ObjectMap::Join { parent, conditions })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP_CROP: &str = include_str!("../../../../mappings/Map_Crop.ttl");
    const BASE: &str = "file:///maps/Map_Crop.ttl";

    #[test]
    fn map_crop_parses_verbatim() {
        let doc = parse_mapping(MAP_CROP, BASE).unwrap();
        assert_eq!(doc.triples_maps.len(), 2);
        let tm1 = doc.triples_map("file:///maps/Map_Crop.ttl#TriplesMap1").unwrap();
        assert!(tm1.subject_map.template.as_str().ends_with("ind_{URLID}"));
        assert_eq!(tm1.subject_map.classes, vec!["http://srv.ktbl.de/data/psm/Indication"]);
        assert_eq!(tm1.predicate_object_maps.len(), 1);
        let pom = &tm1.predicate_object_maps[0];
        assert_eq!(pom.predicate, "http://srv.ktbl.de/data/psm/appliedOnCrop");
        assert_eq!(
            pom.object,
            ObjectMap::Join {
                parent: "file:///maps/Map_Crop.ttl#TriplesMap2".into(),
                conditions: vec![JoinCondition {
                    child: "AWG_ID".into(),
                    parent: "AWG_ID".into()
                }]
            }
        );
        assert_eq!(
            tm1.logical_source.query.as_deref(),
            Some(r#"SELECT AWG_ID, REPLACE(AWG_ID, "/", "-") AS URLID FROM AWG"#)
        );
        assert_eq!(tm1.logical_source.source.kind, SourceKind::TableStore);
        assert_eq!(tm1.logical_source.source.location, "Pfad/Name");
        assert_eq!(
            tm1.logical_source.reference_formulation.as_deref(),
            Some("http://semweb.mmlab.be/ns/ql#CSV")
        );
        let tm2 = doc.triples_map("file:///maps/Map_Crop.ttl#TriplesMap2").unwrap();
        assert!(tm2.predicate_object_maps.is_empty());
        assert_eq!(tm2.subject_map.classes, vec!["http://srv.ktbl.de/data/psm/Crop"]);
        assert_eq!(doc.sources.len(), 1);
    }

    #[test]
    fn subject_map_template_triple_present() {
        let g = parse_turtle_with_base(MAP_CROP, BASE).unwrap();
        let tm1 = Term::iri("file:///maps/Map_Crop.ttl#TriplesMap1");
        let sm = g
            .triples_for_subject(&tm1)
            .find(|t| t.predicate.as_iri() == Some(SUBJECT_MAP))
            .map(|t| t.object.clone())
            .unwrap();
        assert!(sm.is_blank());
        assert!(g.contains(&crate::rdf::Triple::new(
            sm,
            Term::iri(TEMPLATE),
            Term::literal("http://srv.ktbl.de/data/psm/resources/ind_{URLID}")
        )));
    }

    #[test]
    fn no_triples_maps_gives_empty_document() {
        let doc = parse_mapping("@prefix psm: <http://srv.ktbl.de/data/psm/> .", BASE).unwrap();
        assert!(doc.triples_maps.is_empty());
        assert_eq!(doc.prefixes.get("psm"), Some("http://srv.ktbl.de/data/psm/"));
    }

    #[test]
    fn removed_parent_column_is_a_dangling_join() {
        let text = MAP_CROP.replace("rr:parent \"AWG_ID\";", "");
        assert!(matches!(
            parse_mapping(&text, BASE),
            Err(MappingError::DanglingJoin { .. })
        ));
    }

    #[test]
    fn unknown_vocabulary_is_rejected_by_name() {
        let text = MAP_CROP.replace("rr:class psm:Crop;", "rr:klass psm:Crop;");
        match parse_mapping(&text, BASE) {
            Err(MappingError::UnknownProperty { property, subject }) => {
                assert_eq!(property, "rr:klass");
                assert!(subject.starts_with("_:"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let text = MAP_CROP.replace("<#TriplesMap2>;", "<#TriplesMap3>;");
        assert!(matches!(parse_mapping(&text, BASE), Err(MappingError::DanglingParent { .. })));

        let no_subject = "@prefix rr: <http://www.w3.org/ns/r2rml#>. @prefix rml: <http://semweb.mmlab.be/ns/rml#>.\n\
            <#M> a rr:TriplesMap; rml:logicalSource [ rml:source \"data/AWG.csv\" ].";
        assert!(matches!(
            parse_mapping(no_subject, BASE),
            Err(MappingError::MissingSubjectMap { .. })
        ));

        let no_query = MAP_CROP.replace("rml:query \"\" SELECT AWG_ID, KULTUR FROM AWG_KULTUR \"\"", "");
        assert!(matches!(parse_mapping(&no_query, BASE), Err(MappingError::MissingQuery { .. })));
    }

    #[test]
    fn object_map_forms_and_csv_source() {
        let text = r#"@prefix rr: <http://www.w3.org/ns/r2rml#>. @prefix rml: <http://semweb.mmlab.be/ns/rml#>.
            @prefix psm: <http://srv.ktbl.de/data/psm/>. @prefix xsd: <http://www.w3.org/2001/XMLSchema#>.
            <#M> rml:logicalSource [ rml:source "tables/AWG.csv" ];
              rr:subjectMap [ rr:template "http://e/{AWG_ID}" ];
              rr:predicateObjectMap [ rr:predicate psm:label, psm:name; rr:objectMap [ rml:reference "AWG_ID"; rr:language "de" ] ];
              rr:predicateObjectMap [ rr:predicate psm:n; rr:objectMap [ rml:reference "N"; rr:datatype xsd:integer ] ];
              rr:predicateObjectMap [ rr:predicate psm:k; rr:objectMap [ rr:constant psm:K ], [ rr:template "http://e/t/{N}" ] ]."#;
        let doc = parse_mapping(text, BASE).unwrap();
        let m = &doc.triples_maps[0];
        assert_eq!(m.logical_source.source.table_name(), "AWG");
        assert_eq!(m.predicate_object_maps.len(), 5);
        assert!(m.predicate_object_maps.iter().any(|p| p.object
            == ObjectMap::Reference {
                column: "N".into(),
                datatype: Some("http://www.w3.org/2001/XMLSchema#integer".into()),
                language: None
            }));
    }

    #[test]
    fn locator_from_jdbc_url() {
        assert_eq!(jdbc_locator("jdbc:sqlite://Pfad/Name"), "Pfad/Name");
        assert_eq!(jdbc_locator("jdbc:sqlite:/var/psm.db"), "/var/psm.db");
        assert_eq!(jdbc_locator("psm"), "psm");
    }
}
