use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use super::CrawlError;
use crate::table::{ColumnDef, ColumnType, Table};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    #[serde(rename = "type")]
    pub source_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointDef {
    pub path: String,
    pub table_name: String,
    pub fields: Vec<FieldDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiModel {
    pub base_url: String,
    pub endpoints: Vec<EndpointDef>,
}

impl ApiModel {
    pub fn from_json(text: &str) -> Result<Self, CrawlError> {
        let model: ApiModel =
            serde_json::from_str(text).map_err(|e| CrawlError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, CrawlError> {
        let text = std::fs::read_to_string(path).map_err(|e| CrawlError::Storage {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Checks the base URL, unique endpoint paths and table names, and
    /// unique field names per endpoint.
    pub fn validate(&self) -> Result<(), CrawlError> {
        let invalid = |m: String| Err(CrawlError::InvalidModel(m));
        match Url::parse(&self.base_url) {
            Ok(u) if matches!(u.scheme(), "http" | "https") => {}
            _ => return invalid(format!("base_url {:?} is not an absolute HTTP(S) URL", self.base_url)),
        }
        let mut paths = HashSet::new();
        let mut tables = HashSet::new();
        for ep in &self.endpoints {
            if ep.path.trim_matches('/').is_empty() {
                return invalid("empty endpoint path".into());
            }
            if !paths.insert(ep.path.trim_matches('/')) {
                return invalid(format!("duplicate endpoint path {:?}", ep.path));
            }
            let name_ok = !ep.table_name.is_empty()
                && ep
                    .table_name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !name_ok {
                return invalid(format!("table name {:?} must be [A-Za-z0-9_-]+", ep.table_name));
            }
            if !tables.insert(ep.table_name.to_ascii_uppercase()) {
                return invalid(format!("duplicate table name {:?}", ep.table_name));
            }
            let mut fields = HashSet::new();
            for f in &ep.fields {
                if !fields.insert(f.name.to_ascii_uppercase()) {
                    return invalid(format!("duplicate field {:?} in {}", f.name, ep.path));
                }
            }
        }
        Ok(())
    }
}

/// Maps an Oracle column type to a local storage class.
///
/// `VARCHAR2`, `NVARCHAR2`, `CHAR`, `NCHAR`, `CLOB`, `DATE` and
/// `TIMESTAMP` are text; `NUMBER(p)` and `NUMBER(p,0)` are integer;
/// `NUMBER`, `NUMBER(p,s)` with s > 0 and `FLOAT` are real.
pub fn map_source_type(source: &str) -> Result<ColumnType, String> {
    let unmapped = || format!("unmapped source type {source:?}");
    let spec = source.trim().to_ascii_uppercase();
    let (name, args) = match spec.split_once('(') {
        Some((name, rest)) => {
            let args = rest.strip_suffix(')').ok_or_else(unmapped)?;
            (name.trim(), Some(args.split(',').map(str::trim).collect::<Vec<_>>()))
        }
        None => (spec.as_str(), None),
    };
    let numeric = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    match name {
        "VARCHAR2" | "NVARCHAR2" | "CHAR" | "NCHAR" | "CLOB" => {
            // length with optional BYTE/CHAR semantics: VARCHAR2(100 CHAR)
            match args.as_deref() {
                None => Ok(ColumnType::Text),
                Some([len]) if len.split_whitespace().next().is_some_and(numeric) => {
                    Ok(ColumnType::Text)
                }
                _ => Err(unmapped()),
            }
        }
        "DATE" if args.is_none() => Ok(ColumnType::Text),
        "TIMESTAMP" => match args.as_deref() {
            None => Ok(ColumnType::Text),
            Some([p]) if numeric(p) => Ok(ColumnType::Text),
            _ => Err(unmapped()),
        },
        "FLOAT" => match args.as_deref() {
            None => Ok(ColumnType::Real),
            Some([p]) if numeric(p) => Ok(ColumnType::Real),
            _ => Err(unmapped()),
        },
        "NUMBER" => match args.as_deref() {
            None => Ok(ColumnType::Real),
            Some([p]) if numeric(p) || *p == "*" => Ok(ColumnType::Integer),
            Some([p, s]) if (numeric(p) || *p == "*") && numeric(s) => {
                if s.parse::<u32>().map_err(|_| unmapped())? == 0 {
                    Ok(ColumnType::Integer)
                } else {
                    Ok(ColumnType::Real)
                }
            }
            _ => Err(unmapped()),
        },
        _ => Err(unmapped()),
    }
}

/// Schema and URL for one endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchPlan {
    pub table_name: String,
    pub url: Url,
    pub columns: Vec<ColumnDef>,
}

impl FetchPlan {
    pub fn page_url(&self, limit: usize, offset: u64) -> String {
        let mut url = self.url.clone();
        url.query_pairs_mut()
            .append_pair("limit", &limit.to_string())
            .append_pair("offset", &offset.to_string());
        url.into()
    }

    pub fn empty_table(&self) -> Table {
        Table::new(&self.table_name, self.columns.clone()).expect("field names validated")
    }
}

pub(crate) fn join_url(base: &str, path: &str) -> Result<Url, CrawlError> {
    let joined = format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'));
    Url::parse(&joined).map_err(|e| CrawlError::InvalidModel(format!("{joined}: {e}")))
}

/// One fetch plan per endpoint, in model order.
pub fn compile_model(model: &ApiModel) -> Result<Vec<FetchPlan>, CrawlError> {
    model.validate()?;
    model
        .endpoints
        .iter()
        .map(|ep| {
            let columns = ep
                .fields
                .iter()
                .map(|f| {
                    map_source_type(&f.source_type)
                        .map(|t| ColumnDef::new(&f.name, t))
                        .map_err(|_| CrawlError::UnmappedType {
                            endpoint: ep.path.clone(),
                            field: f.name.clone(),
                            source_type: f.source_type.clone(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FetchPlan {
                table_name: ep.table_name.clone(),
                url: join_url(&model.base_url, &ep.path)?,
                columns,
            })
        })
        .collect()
}
