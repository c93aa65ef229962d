use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

/// Pipeline settings from one JSON file. Relative paths are resolved
/// against the directory holding the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub api_model: Option<PathBuf>,
    pub fixtures_dir: Option<PathBuf>,
    pub state_file: Option<PathBuf>,
    pub tables_dir: Option<PathBuf>,
    #[serde(default)]
    pub mappings: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub output_format: Option<String>,
    #[serde(default)]
    pub data_files: Vec<PathBuf>,
    pub bind: Option<SocketAddr>,
    pub fixture_bind: Option<SocketAddr>,
    pub resources_ns: Option<String>,
    pub page_limit: Option<usize>,
    /// Extra prefixes for Turtle output.
    #[serde(default)]
    pub prefixes: BTreeMap<String, String>,
}

pub const DEFAULT_RESOURCES_NS: &str = "http://srv.ktbl.de/data/psm/resources/";

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        config.resolve(dir);
        Ok(config)
    }

    fn resolve(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for p in [
            &mut self.api_model,
            &mut self.fixtures_dir,
            &mut self.state_file,
            &mut self.tables_dir,
            &mut self.output,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.mappings.iter_mut().for_each(fix);
        self.data_files.iter_mut().for_each(fix);
    }

    pub fn resources_ns(&self) -> &str {
        self.resources_ns.as_deref().unwrap_or(DEFAULT_RESOURCES_NS)
    }
}

pub(crate) fn required<'a, T>(value: &'a Option<T>, what: &str, flag: &str) -> Result<&'a T> {
    value
        .as_ref()
        .with_context(|| format!("no {what}: pass {flag} or set it in the config file"))
}
