use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CrawlError, FetchPlan};
use crate::table::{append_csv_rows, load_csv, write_csv, Row, Table};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableState {
    pub next_offset: u64,
    pub done: bool,
    pub row_count: u64,
}

/// Resume point per table plus the release the rows belong to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_stamp: Option<String>,
    #[serde(default)]
    pub tables: BTreeMap<String, TableState>,
}

impl CrawlState {
    pub fn table(&self, name: &str) -> TableState {
        self.tables.get(name).copied().unwrap_or_default()
    }

    pub fn is_done(&self, name: &str) -> bool {
        self.table(name).done
    }

    /// A missing file is a fresh state.
    pub fn load(path: &Path) -> Result<Self, CrawlError> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| storage_error(path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(storage_error(path, e)),
        }
    }

    /// Writes to a sibling temporary file, syncs it, then renames it over
    /// `path`, so readers see either the old or the new state.
    pub fn save(&self, path: &Path) -> Result<(), CrawlError> {
        let text = serde_json::to_string_pretty(self).expect("state serializes");
        write_atomically(path, text.as_bytes())
    }
}

fn storage_error(path: &Path, e: impl std::fmt::Display) -> CrawlError {
    CrawlError::Storage {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CrawlError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| storage_error(path, e))
}

/// Where committed pages go. The crawler appends a page's rows and then
/// saves the state, so stored rows may run ahead of the state by one page
/// but never behind it; `load_table` drops such unacknowledged rows.
pub trait CrawlStorage: Sync {
    /// Rows committed so far for the plan's table, cut to `committed`.
    fn load_table(&self, plan: &FetchPlan, committed: u64) -> Result<Table, CrawlError>;
    fn append_rows(&self, plan: &FetchPlan, rows: &[Row]) -> Result<(), CrawlError>;
    fn save_state(&self, state: &CrawlState) -> Result<(), CrawlError>;
}

/// Keeps everything in memory; used by tests and one-shot crawls.
#[derive(Debug, Default)]
pub struct MemoryStorage {
    rows: Mutex<BTreeMap<String, Vec<Row>>>,
    state: Mutex<Option<CrawlState>>,
}

impl MemoryStorage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn saved_state(&self) -> Option<CrawlState> {
        self.state.lock().expect("state lock").clone()
    }

    pub fn stored_rows(&self, table: &str) -> Vec<Row> {
        self.rows
            .lock()
            .expect("rows lock")
            .get(table)
            .cloned()
            .unwrap_or_default()
    }
}

impl CrawlStorage for MemoryStorage {
    fn load_table(&self, plan: &FetchPlan, committed: u64) -> Result<Table, CrawlError> {
        let mut all = self.rows.lock().expect("rows lock");
        let rows = all.entry(plan.table_name.clone()).or_default();
        if (rows.len() as u64) < committed {
            return Err(CrawlError::Storage {
                path: PathBuf::from(&plan.table_name),
                message: format!("state records {committed} rows, storage has {}", rows.len()),
            });
        }
        rows.truncate(committed as usize);
        let mut table = plan.empty_table();
        for row in rows.iter() {
            table.push_row(row.clone())?;
        }
        Ok(table)
    }

    fn append_rows(&self, plan: &FetchPlan, rows: &[Row]) -> Result<(), CrawlError> {
        self.rows
            .lock()
            .expect("rows lock")
            .entry(plan.table_name.clone())
            .or_default()
            .extend_from_slice(rows);
        Ok(())
    }

    fn save_state(&self, state: &CrawlState) -> Result<(), CrawlError> {
        *self.state.lock().expect("state lock") = Some(state.clone());
        Ok(())
    }
}

/// One CSV file per table in `tables_dir` plus a JSON state file.
#[derive(Debug, Clone)]
pub struct DirStorage {
    pub tables_dir: PathBuf,
    pub state_path: PathBuf,
}

impl DirStorage {
    pub fn new(tables_dir: impl Into<PathBuf>, state_path: impl Into<PathBuf>) -> Self {
        DirStorage {
            tables_dir: tables_dir.into(),
            state_path: state_path.into(),
        }
    }

    pub fn table_path(&self, table: &str) -> PathBuf {
        self.tables_dir.join(format!("{table}.csv"))
    }

    pub fn load_state(&self) -> Result<CrawlState, CrawlError> {
        CrawlState::load(&self.state_path)
    }

    fn rewrite(&self, table: &Table) -> Result<(), CrawlError> {
        let mut bytes = Vec::new();
        write_csv(table, &mut bytes)?;
        write_atomically(&self.table_path(table.name()), &bytes)
    }
}

impl CrawlStorage for DirStorage {
    fn load_table(&self, plan: &FetchPlan, committed: u64) -> Result<Table, CrawlError> {
        let path = self.table_path(&plan.table_name);
        if !path.exists() {
            if committed > 0 {
                return Err(storage_error(&path, format!("missing, state records {committed} rows")));
            }
            let table = plan.empty_table();
            self.rewrite(&table)?;
            return Ok(table);
        }
        let mut table = load_csv(&path, &plan.table_name, &plan.columns)?;
        match (table.len() as u64).cmp(&committed) {
            std::cmp::Ordering::Less => {
                return Err(storage_error(
                    &path,
                    format!("state records {committed} rows, file has {}", table.len()),
                ))
            }
            std::cmp::Ordering::Greater => {
                tracing::info!(table = %plan.table_name, dropped = table.len() as u64 - committed, "dropping unacknowledged rows");
                table.truncate(committed as usize);
                self.rewrite(&table)?;
            }
            std::cmp::Ordering::Equal => {}
        }
        Ok(table)
    }

    fn append_rows(&self, plan: &FetchPlan, rows: &[Row]) -> Result<(), CrawlError> {
        let path = self.table_path(&plan.table_name);
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| storage_error(&path, e))?;
        append_csv_rows(rows, &file, &plan.table_name)?;
        file.sync_data().map_err(|e| storage_error(&path, e))
    }

    fn save_state(&self, state: &CrawlState) -> Result<(), CrawlError> {
        state.save(&self.state_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnDef, ColumnType, Value};

    fn plan() -> FetchPlan {
        FetchPlan {
            table_name: "AWG".into(),
            url: "http://h/awg".parse().unwrap(),
            columns: vec![ColumnDef::text("AWG_ID"), ColumnDef::new("N", ColumnType::Integer)],
        }
    }

    fn row(i: i64) -> Row {
        vec![Value::Text(format!("id-{i}")), Value::Integer(i)]
    }

    #[test]
    fn state_file_round_trip_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/state.json");
        assert_eq!(CrawlState::load(&path).unwrap(), CrawlState::default());
        let mut s = CrawlState {
            release_stamp: Some("2022-10-01".into()),
            ..Default::default()
        };
        s.tables.insert(
            "AWG".into(),
            TableState {
                next_offset: 200,
                done: false,
                row_count: 200,
            },
        );
        s.save(&path).unwrap();
        assert_eq!(CrawlState::load(&path).unwrap(), s);
        assert!(!dir.path().join("sub/state.json.tmp").exists());
        fs::write(&path, "{not json").unwrap();
        assert!(CrawlState::load(&path).is_err());
    }

    #[test]
    fn dir_storage_drops_rows_beyond_the_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let st = DirStorage::new(dir.path().join("tables"), dir.path().join("state.json"));
        let p = plan();
        assert!(st.load_table(&p, 0).unwrap().is_empty());
        st.append_rows(&p, &[row(0), row(1)]).unwrap();
        st.append_rows(&p, &[row(2)]).unwrap();
        let t = st.load_table(&p, 2).unwrap();
        assert_eq!(t.rows(), &[row(0), row(1)]);
        // the file itself was cut back, so later appends continue cleanly
        st.append_rows(&p, &[row(9)]).unwrap();
        assert_eq!(st.load_table(&p, 3).unwrap().rows(), &[row(0), row(1), row(9)]);
        assert!(st.load_table(&p, 10).is_err());
    }

    #[test]
    fn missing_table_file_with_committed_rows_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let st = DirStorage::new(dir.path(), dir.path().join("state.json"));
        assert!(st.load_table(&plan(), 5).is_err());
    }

    #[test]
    fn memory_storage_truncates() {
        let st = MemoryStorage::new();
        let p = plan();
        st.append_rows(&p, &[row(0), row(1), row(2)]).unwrap();
        assert_eq!(st.load_table(&p, 1).unwrap().rows(), &[row(0)]);
        assert_eq!(st.stored_rows("AWG"), vec![row(0)]);
    }
}
