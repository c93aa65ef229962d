use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::model::join_url;
use super::{
    compile_model, ApiModel, CrawlError, CrawlState, CrawlStorage, FetchPlan, RetryPolicy,
    Transport,
};
use crate::table::{ColumnDef, ColumnType, Row, Table, TableStore, Value};

/// Page size used when none is configured; also the upstream maximum.
pub const DEFAULT_PAGE_LIMIT: usize = 100;

/// `{"items": [...], "hasMore": bool, "limit": n, "offset": n}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageEnvelope {
    pub items: Vec<Map<String, Json>>,
    #[serde(rename = "hasMore")]
    pub has_more: bool,
    pub limit: usize,
    pub offset: u64,
}

impl PageEnvelope {
    /// The page of `all` starting at `offset`.
    pub fn slice(all: &[Map<String, Json>], limit: usize, offset: u64) -> Self {
        let start = usize::try_from(offset).unwrap_or(usize::MAX).min(all.len());
        let end = start.saturating_add(limit).min(all.len());
        PageEnvelope {
            items: all[start..end].to_vec(),
            has_more: end < all.len(),
            limit,
            offset,
        }
    }
}

fn coerce(value: &Json, column_type: ColumnType) -> Result<Value, String> {
    let mismatch = || format!("cannot store {value} as {column_type}");
    Ok(match (value, column_type) {
        (Json::Null, _) => Value::Null,
        (Json::String(s), ColumnType::Text) => Value::Text(s.clone()),
        (Json::Number(n), ColumnType::Text) => Value::Text(n.to_string()),
        (Json::Bool(b), ColumnType::Text) => Value::Text(b.to_string()),
        (Json::Number(n), ColumnType::Integer) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => Value::Integer(i),
            (None, Some(f)) if f.fract() == 0.0 && f.abs() < 9.0e15 => Value::Integer(f as i64),
            _ => return Err(mismatch()),
        },
        (Json::String(s), ColumnType::Integer) => {
            Value::Integer(s.trim().parse().map_err(|_| mismatch())?)
        }
        (Json::Number(n), ColumnType::Real) => Value::Real(n.as_f64().ok_or_else(mismatch)?),
        (Json::String(s), ColumnType::Real) => {
            let f: f64 = s.trim().parse().map_err(|_| mismatch())?;
            if !f.is_finite() {
                return Err(mismatch());
            }
            Value::Real(f)
        }
        _ => return Err(mismatch()),
    })
}

/// Decodes one item into a row. Keys match column names ignoring case;
/// missing keys and JSON null become null.
pub fn decode_item(
    item: &Map<String, Json>,
    columns: &[ColumnDef],
    table: &str,
    offset: u64,
) -> Result<Row, CrawlError> {
    columns
        .iter()
        .map(|col| {
            let value = item.get(&col.name).or_else(|| {
                item.iter()
                    .find(|(k, _)| k.eq_ignore_ascii_case(&col.name))
                    .map(|(_, v)| v)
            });
            match value {
                None => Ok(Value::Null),
                Some(v) => coerce(v, col.column_type).map_err(|message| CrawlError::Decode {
                    table: table.to_string(),
                    offset,
                    field: col.name.clone(),
                    message,
                }),
            }
        })
        .collect()
}

pub struct Crawler<T> {
    transport: T,
    retry: RetryPolicy,
    limit: usize,
}

impl<T: Transport> Crawler<T> {
    pub fn new(transport: T) -> Self {
        Crawler {
            transport,
            retry: RetryPolicy::default(),
            limit: DEFAULT_PAGE_LIMIT,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Panics on a zero limit.
    pub fn with_limit(mut self, limit: usize) -> Self {
        assert!(limit > 0, "page limit must be positive");
        self.limit = limit;
        self
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    fn get_json<D: serde::de::DeserializeOwned>(&self, url: &str) -> Result<D, CrawlError> {
        let body = self
            .retry
            .run(|| self.transport.get(url))
            .map_err(|(error, attempts)| CrawlError::Transport { error, attempts })?;
        serde_json::from_str(&body).map_err(|e| CrawlError::Envelope {
            url: url.to_string(),
            message: e.to_string(),
        })
    }

    /// Reads `<base>/stand`, an envelope whose first item carries the
    /// release date under `stand`.
    pub fn fetch_release_stamp(&self, base_url: &str) -> Result<String, CrawlError> {
        let url = join_url(base_url, "stand")?.to_string();
        let body: Json = self.get_json(&url)?;
        let malformed = |message: &str| CrawlError::Envelope {
            url: url.clone(),
            message: message.to_string(),
        };
        let items = body
            .get("items")
            .and_then(Json::as_array)
            .ok_or_else(|| malformed("missing items array"))?;
        let first = match items.first() {
            None => return Err(CrawlError::NoReleaseStamp { url }),
            Some(first) => first.as_object().ok_or_else(|| malformed("item is not an object"))?,
        };
        first
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("stand"))
            .and_then(|(_, v)| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| malformed("item has no text field \"stand\""))
    }

    /// Fetches the remaining pages of one table, resuming at the state's
    /// `next_offset` and appending to the rows already in `storage`.
    pub fn fetch_table(
        &self,
        plan: &FetchPlan,
        state: &mut CrawlState,
        storage: &dyn CrawlStorage,
    ) -> Result<Table, CrawlError> {
        let mut table = storage.load_table(plan, state.table(&plan.table_name).row_count)?;
        let shared = Mutex::new(std::mem::take(state));
        let result = self.fetch_into(plan, &shared, &mut table, storage);
        *state = shared.into_inner().unwrap_or_else(|e| e.into_inner());
        result.map(|_| table)
    }

    fn fetch_into(
        &self,
        plan: &FetchPlan,
        state: &Mutex<CrawlState>,
        table: &mut Table,
        storage: &dyn CrawlStorage,
    ) -> Result<(), CrawlError> {
        let name = &plan.table_name;
        let lock = || state.lock().unwrap_or_else(|e| e.into_inner());
        let start = lock().table(name);
        if start.done {
            return Ok(());
        }
        let mut offset = start.next_offset;
        loop {
            let url = plan.page_url(self.limit, offset);
            let page: PageEnvelope = self.get_json(&url)?;
            let bad = |message: String| CrawlError::Envelope {
                url: url.clone(),
                message,
            };
            if page.offset != offset {
                return Err(bad(format!("asked for offset {offset}, got {}", page.offset)));
            }
            if page.items.len() > self.limit {
                return Err(bad(format!("{} items exceed limit {}", page.items.len(), self.limit)));
            }
            if page.has_more && page.items.is_empty() {
                return Err(bad("empty page claims more items".into()));
            }
            let rows = page
                .items
                .iter()
                .enumerate()
                .map(|(i, item)| decode_item(item, &plan.columns, name, offset + i as u64))
                .collect::<Result<Vec<_>, _>>()?;

            let n = rows.len() as u64;
            {
                let mut guard = lock();
                let mut next = guard.clone();
                let entry = next.tables.entry(name.clone()).or_default();
                entry.row_count += n;
                entry.next_offset = offset + n;
                entry.done = !page.has_more;
                storage.append_rows(plan, &rows)?;
                storage.save_state(&next)?;
                *guard = next;
            }
            for row in rows {
                table.push_row(row)?;
            }
            tracing::debug!(table = %name, offset, items = n, has_more = page.has_more, "page committed");
            offset += n;
            if !page.has_more {
                return Ok(());
            }
        }
    }

    /// Crawls every table not yet done, in parallel across tables, and
    /// returns all tables. The release stamp is checked first unless
    /// every table is already done, in which case nothing is requested.
    pub fn crawl_all(
        &self,
        model: &ApiModel,
        state: &mut CrawlState,
        storage: &dyn CrawlStorage,
    ) -> Result<TableStore, CrawlError> {
        let plans = compile_model(model)?;
        if plans.iter().any(|p| !state.is_done(&p.table_name)) {
            let current = self.fetch_release_stamp(&model.base_url)?;
            match &state.release_stamp {
                Some(saved) if *saved != current => {
                    return Err(CrawlError::ReleaseChanged {
                        saved: saved.clone(),
                        current,
                    })
                }
                Some(_) => {}
                None => {
                    state.release_stamp = Some(current);
                    storage.save_state(state)?;
                }
            }
        }

        let shared = Mutex::new(std::mem::take(state));
        let results: Vec<(String, Result<Table, CrawlError>)> = plans
            .par_iter()
            .map(|plan| {
                let committed = shared
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .table(&plan.table_name)
                    .row_count;
                let result = storage.load_table(plan, committed).and_then(|mut table| {
                    self.fetch_into(plan, &shared, &mut table, storage)?;
                    Ok(table)
                });
                (plan.table_name.clone(), result)
            })
            .collect();
        *state = shared.into_inner().unwrap_or_else(|e| e.into_inner());

        let mut store = TableStore::new();
        let mut errors = Vec::new();
        for (name, result) in results {
            match result {
                Ok(table) => {
                    store.insert(table);
                }
                Err(e) => errors.push((name, e)),
            }
        }
        if errors.is_empty() {
            Ok(store)
        } else {
            Err(CrawlError::Tables(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    use serde_json::json;

    use super::*;
    use crate::crawler::{MemoryStorage, TransportError};

    /// Serves envelopes from in-memory tables and records request URLs.
    struct FakeApi {
        tables: BTreeMap<String, Vec<Map<String, Json>>>,
        stand: String,
        log: Mutex<Vec<String>>,
        fail_at: Option<(usize, u16)>,
        calls: AtomicUsize,
    }

    impl FakeApi {
        fn new(sizes: &[(&str, usize)]) -> Self {
            let tables = sizes
                .iter()
                .map(|(name, n)| {
                    let items = (0..*n)
                        .map(|i| {
                            json!({"awg_id": format!("{name}-{i}"), "n": i})
                                .as_object()
                                .unwrap()
                                .clone()
                        })
                        .collect();
                    (name.to_string(), items)
                })
                .collect();
            FakeApi {
                tables,
                stand: "2022-10-01".into(),
                log: Mutex::new(Vec::new()),
                fail_at: None,
                calls: AtomicUsize::new(0),
            }
        }

        fn requests(&self) -> Vec<String> {
            self.log.lock().unwrap().clone()
        }
    }

    impl Transport for FakeApi {
        fn get(&self, url: &str) -> Result<String, TransportError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            if let Some((at, status)) = self.fail_at {
                if call >= at {
                    return Err(TransportError::Status {
                        url: url.into(),
                        status,
                    });
                }
            }
            self.log.lock().unwrap().push(url.to_string());
            let u = url::Url::parse(url).unwrap();
            let name = u.path().trim_start_matches('/');
            if name == "stand" {
                return Ok(json!({"items": [{"stand": self.stand}]}).to_string());
            }
            let q: BTreeMap<_, _> = u.query_pairs().into_owned().collect();
            let page = PageEnvelope::slice(
                &self.tables[name],
                q["limit"].parse().unwrap(),
                q["offset"].parse().unwrap(),
            );
            Ok(serde_json::to_string(&page).unwrap())
        }
    }

    fn model(names: &[&str]) -> ApiModel {
        ApiModel {
            base_url: "http://fake".into(),
            endpoints: names
                .iter()
                .map(|n| super::super::EndpointDef {
                    path: format!("/{n}"),
                    table_name: n.to_string(),
                    fields: vec![
                        super::super::FieldDef {
                            name: "AWG_ID".into(),
                            source_type: "VARCHAR2(50)".into(),
                        },
                        super::super::FieldDef {
                            name: "N".into(),
                            source_type: "NUMBER(10,0)".into(),
                        },
                    ],
                })
                .collect(),
        }
    }

    fn offsets(log: &[String]) -> Vec<u64> {
        log.iter()
            .filter_map(|u| u.split("offset=").nth(1))
            .map(|o| o.parse().unwrap())
            .collect()
    }

    #[test]
    fn envelope_slices() {
        let all: Vec<Map<String, Json>> = (0..250).map(|_| Map::new()).collect();
        let pages: Vec<_> = [0, 100, 200]
            .iter()
            .map(|&o| PageEnvelope::slice(&all, 100, o))
            .collect();
        assert_eq!(
            pages.iter().map(|p| (p.items.len(), p.has_more)).collect::<Vec<_>>(),
            [(100, true), (100, true), (50, false)]
        );
        let beyond = PageEnvelope::slice(&all, 100, 900);
        assert!(beyond.items.is_empty() && !beyond.has_more);
        assert_eq!(
            serde_json::to_value(PageEnvelope::slice(&[], 5, 0)).unwrap(),
            json!({"items": [], "hasMore": false, "limit": 5, "offset": 0})
        );
    }

    #[test]
    fn fetches_250_items_in_three_pages() {
        let api = FakeApi::new(&[("awg", 250)]);
        let crawler = Crawler::new(&api).with_retry(RetryPolicy::no_delay(1));
        let plan = &compile_model(&model(&["awg"])).unwrap()[0];
        let storage = MemoryStorage::new();
        let mut state = CrawlState::default();
        let table = crawler.fetch_table(plan, &mut state, &storage).unwrap();
        assert_eq!(table.len(), 250);
        assert_eq!(offsets(&api.requests()), [0, 100, 200]);
        assert_eq!(
            state.table("awg"),
            super::super::TableState {
                next_offset: 250,
                done: true,
                row_count: 250
            }
        );
        assert_eq!(storage.saved_state(), Some(state));
        assert_eq!(table.rows()[249][1], Value::Integer(249));
    }

    #[test]
    fn empty_table_takes_one_request() {
        let api = FakeApi::new(&[("awg", 0)]);
        let crawler = Crawler::new(&api);
        let plan = &compile_model(&model(&["awg"])).unwrap()[0];
        let mut state = CrawlState::default();
        let table = crawler
            .fetch_table(plan, &mut state, &MemoryStorage::new())
            .unwrap();
        assert!(table.is_empty());
        assert_eq!(api.requests().len(), 1);
        assert!(state.is_done("awg"));
    }

    #[test]
    fn resume_after_failure_refetches_only_the_missing_page() {
        let mut api = FakeApi::new(&[("awg", 250)]);
        api.fail_at = Some((2, 503));
        let plan = &compile_model(&model(&["awg"])).unwrap()[0];
        let storage = MemoryStorage::new();
        let mut state = CrawlState::default();
        let err = Crawler::new(&api)
            .with_retry(RetryPolicy::no_delay(3))
            .fetch_table(plan, &mut state, &storage)
            .unwrap_err();
        assert!(matches!(err, CrawlError::Transport { attempts: 3, .. }), "{err}");
        assert_eq!(state.table("awg").next_offset, 200);
        assert!(!state.is_done("awg"));

        api.fail_at = None;
        api.log.lock().unwrap().clear();
        let table = Crawler::new(&api)
            .fetch_table(plan, &mut state, &storage)
            .unwrap();
        assert_eq!(offsets(&api.requests()), [200]);
        assert_eq!(table.len(), 250);
        let ids: std::collections::BTreeSet<_> = table.rows().iter().map(|r| r[0].to_string()).collect();
        assert_eq!(ids.len(), 250);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let mut api = FakeApi::new(&[("awg", 5)]);
        api.fail_at = Some((0, 404));
        let plan = &compile_model(&model(&["awg"])).unwrap()[0];
        let err = Crawler::new(&api)
            .fetch_table(plan, &mut CrawlState::default(), &MemoryStorage::new())
            .unwrap_err();
        assert!(matches!(err, CrawlError::Transport { attempts: 1, .. }), "{err}");
    }

    #[test]
    fn crawl_all_checks_release_and_is_idempotent() {
        let api = FakeApi::new(&[("a", 3), ("b", 0), ("c", 120)]);
        let m = model(&["a", "b", "c"]);
        let storage = MemoryStorage::new();
        let mut state = CrawlState::default();
        let crawler = Crawler::new(&api);
        let store = crawler.crawl_all(&m, &mut state, &storage).unwrap();
        assert_eq!(
            ["a", "b", "c"].map(|t| store.get(t).unwrap().len()),
            [3, 0, 120]
        );
        assert_eq!(state.release_stamp.as_deref(), Some("2022-10-01"));
        let before = api.requests().len();
        assert_eq!(before, 1 + 1 + 1 + 2);

        let again = crawler.crawl_all(&m, &mut state, &storage).unwrap();
        assert_eq!(api.requests().len(), before);
        assert_eq!(again.get("c").unwrap().len(), 120);

        let mut stale = state.clone();
        stale.release_stamp = Some("2022-09-01".into());
        stale.tables.get_mut("a").unwrap().done = false;
        let err = crawler.crawl_all(&m, &mut stale, &storage).unwrap_err();
        assert!(matches!(err, CrawlError::ReleaseChanged { .. }), "{err}");
    }

    #[test]
    fn release_stamp_errors() {
        struct Body(&'static str);
        impl Transport for Body {
            fn get(&self, _: &str) -> Result<String, TransportError> {
                Ok(self.0.to_string())
            }
        }
        let stamp = |b| Crawler::new(Body(b)).fetch_release_stamp("http://x/api/");
        assert_eq!(stamp(r#"{"items":[{"stand":"2022-10-01"}]}"#).unwrap(), "2022-10-01");
        assert!(matches!(stamp(r#"{"items":[]}"#), Err(CrawlError::NoReleaseStamp { .. })));
        assert!(matches!(stamp("<html>"), Err(CrawlError::Envelope { .. })));
        assert!(matches!(stamp(r#"{"items":[{"x":1}]}"#), Err(CrawlError::Envelope { .. })));
    }

    #[test]
    fn decoding() {
        let cols = [
            ColumnDef::text("AWG_ID"),
            ColumnDef::new("N", ColumnType::Integer),
            ColumnDef::new("R", ColumnType::Real),
        ];
        let item = |v: Json| v.as_object().unwrap().clone();
        assert_eq!(
            decode_item(&item(json!({"awg_id": "x", "N": 4.0, "r": "2.5"})), &cols, "T", 0).unwrap(),
            vec![Value::Text("x".into()), Value::Integer(4), Value::Real(2.5)]
        );
        assert_eq!(
            decode_item(&item(json!({"N": null})), &cols, "T", 0).unwrap(),
            vec![Value::Null; 3]
        );
        let err = decode_item(&item(json!({"N": "abc"})), &cols, "T", 17).unwrap_err();
        assert!(
            matches!(&err, CrawlError::Decode { offset: 17, field, .. } if field == "N"),
            "{err}"
        );
        assert!(decode_item(&item(json!({"AWG_ID": [1]})), &cols, "T", 0).is_err());
    }
}
