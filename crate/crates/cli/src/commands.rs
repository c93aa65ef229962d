use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use pam_core::crawler::{
    compile_model, ApiModel, CrawlError, CrawlState, Crawler, DirStorage, HttpTransport,
    RetryPolicy,
};
use pam_core::rdf::{parse_turtle, serialize_ntriples, serialize_turtle};
use pam_core::rml::{execute_mapping, parse_mapping};
use pam_core::store::{parse_query, QueryResult, TripleStore};
use pam_core::table::{load_csv, read_csv_header, ColumnDef, TableStore};
use pam_core::Graph;
use pam_server::{BackgroundServer, FixtureData, FixtureServer, GraphFormat};

use crate::config::{required, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Turtle,
    NTriples,
}

impl OutputFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "turtle" | "ttl" => Ok(OutputFormat::Turtle),
            "ntriples" | "n-triples" | "nt" => Ok(OutputFormat::NTriples),
            other => bail!("unknown output format {other:?} (expected turtle or ntriples)"),
        }
    }

    pub fn render(self, graph: &Graph) -> String {
        match self {
            OutputFormat::Turtle => serialize_turtle(graph),
            OutputFormat::NTriples => serialize_ntriples(graph),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CrawlOptions {
    pub limit: Option<usize>,
    pub base_url: Option<String>,
    pub reset: bool,
    pub retry: Option<RetryPolicy>,
}

/// Crawls every endpoint of the API model into one CSV per table, keeping
/// a resumable state file. Returns the per-table row counts.
pub fn cmd_crawl(config: &PipelineConfig, options: &CrawlOptions) -> Result<Vec<(String, usize)>> {
    let model_path = required(&config.api_model, "API model", "api_model")?;
    let mut model = ApiModel::load(model_path)?;
    if let Some(base) = &options.base_url {
        model.base_url = base.clone();
        model.validate()?;
    }
    let storage = DirStorage::new(
        required(&config.tables_dir, "tables directory", "--tables")?,
        required(&config.state_file, "state file", "state_file")?,
    );
    if options.reset {
        reset(&storage, &model)?;
    }
    std::fs::create_dir_all(&storage.tables_dir)
        .with_context(|| format!("cannot create {}", storage.tables_dir.display()))?;
    let mut state = storage.load_state()?;
    let limit = options.limit.or(config.page_limit).unwrap_or(pam_core::crawler::DEFAULT_PAGE_LIMIT);
    if limit == 0 {
        bail!("page limit must be positive");
    }
    let crawler = Crawler::new(HttpTransport::new(Duration::from_secs(30)))
        .with_limit(limit)
        .with_retry(options.retry.unwrap_or_default());
    let result = crawler.crawl_all(&model, &mut state, &storage);
    match result {
        Ok(store) => {
            let counts: Vec<(String, usize)> =
                store.iter().map(|t| (t.name().to_string(), t.len())).collect();
            for (name, n) in &counts {
                tracing::info!(table = %name, rows = n, "table complete");
            }
            Ok(counts)
        }
        Err(CrawlError::Tables(errors)) => {
            let mut report = String::from("crawl incomplete:");
            for (table, e) in &errors {
                let st = state.table(table);
                report.push_str(&format!(
                    "\n  {table}: {e} (resume at offset {}, {} rows kept)",
                    st.next_offset, st.row_count
                ));
            }
            bail!(report)
        }
        Err(e) => Err(e.into()),
    }
}

fn reset(storage: &DirStorage, model: &ApiModel) -> Result<()> {
    for ep in &model.endpoints {
        remove_if_present(&storage.table_path(&ep.table_name))?;
    }
    remove_if_present(&storage.state_path)
}

fn remove_if_present(path: &Path) -> Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
            Err(e).with_context(|| format!("cannot remove {}", path.display()))
        }
        _ => Ok(()),
    }
}

/// Loads every `*.csv` in `dir` as a table named after the file stem.
/// Columns are typed from the API model when it declares the table and
/// are text otherwise.
pub fn load_tables(dir: &Path, model: Option<&ApiModel>) -> Result<TableStore> {
    let plans = match model {
        Some(m) => compile_model(m)?,
        None => Vec::new(),
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read tables directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    let mut store = TableStore::new();
    for path in paths {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .with_context(|| format!("bad table file name {}", path.display()))?
            .to_string();
        let schema = match plans.iter().find(|p| p.table_name.eq_ignore_ascii_case(&name)) {
            Some(plan) => plan.columns.clone(),
            None => read_csv_header(&path)?
                .into_iter()
                .map(ColumnDef::text)
                .collect(),
        };
        let table = load_csv(&path, &name, &schema)?;
        tracing::debug!(table = %name, rows = table.len(), "table loaded");
        store.insert(table);
    }
    Ok(store)
}

fn file_base(path: &Path) -> Result<String> {
    let abs = std::path::absolute(path).with_context(|| format!("bad path {}", path.display()))?;
    url::Url::from_file_path(&abs)
        .map(String::from)
        .map_err(|_| anyhow::anyhow!("cannot turn {} into a file URL", abs.display()))
}

/// Runs the mapping files over the tables and returns the union graph.
pub fn run_mappings(config: &PipelineConfig, mappings: &[PathBuf], tables_dir: &Path) -> Result<Graph> {
    if mappings.is_empty() {
        bail!("no mapping file: pass -m or set mappings in the config file");
    }
    let model = config.api_model.as_deref().map(ApiModel::load).transpose()?;
    let tables = load_tables(tables_dir, model.as_ref())?;
    let mut graph = Graph::new();
    for path in mappings {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read mapping {}", path.display()))?;
        let doc = parse_mapping(&text, &file_base(path)?)
            .with_context(|| format!("mapping {}", path.display()))?;
        let out = execute_mapping(&doc, &tables)
            .with_context(|| format!("executing mapping {}", path.display()))?;
        graph.prefixes.merge(&out.prefixes);
        graph.extend(out.iter().cloned());
    }
    for (label, ns) in &config.prefixes {
        graph
            .prefixes
            .insert(label.as_str(), ns.as_str())
            .with_context(|| format!("bad prefix {label} in config"))?;
    }
    Ok(graph)
}

pub struct MapArgs {
    pub mappings: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    pub tables_dir: Option<PathBuf>,
}

/// Maps tables to RDF and writes the serialized graph to the output file,
/// or to `out` when no file is given.
pub fn cmd_map(config: &PipelineConfig, args: &MapArgs, out: &mut dyn Write) -> Result<usize> {
    let format = OutputFormat::from_name(
        args.format.as_deref().or(config.output_format.as_deref()).unwrap_or("turtle"),
    )?;
    let mappings = if args.mappings.is_empty() { &config.mappings } else { &args.mappings };
    let tables_dir = match &args.tables_dir {
        Some(d) => d,
        None => required(&config.tables_dir, "tables directory", "--tables")?,
    };
    let graph = run_mappings(config, mappings, tables_dir)?;
    let text = format.render(&graph);
    match args.output.as_ref().or(config.output.as_ref()) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(graph.len())
}

/// Parses Turtle or N-Triples data files into one store.
pub fn load_store(files: &[PathBuf]) -> Result<TripleStore> {
    if files.is_empty() {
        bail!("no data files: pass them as arguments or set data_files in the config file");
    }
    let mut store = TripleStore::new();
    for path in files {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let graph = parse_turtle(&text).with_context(|| format!("cannot parse {}", path.display()))?;
        tracing::info!(file = %path.display(), triples = graph.len(), "loaded");
        store.load_graph(&graph);
    }
    Ok(store)
}

fn data_files<'a>(config: &'a PipelineConfig, files: &'a [PathBuf]) -> &'a [PathBuf] {
    if files.is_empty() {
        &config.data_files
    } else {
        files
    }
}

/// Validates data files and optionally writes their union as N-Triples.
pub fn cmd_load(config: &PipelineConfig, files: &[PathBuf], output: Option<&Path>) -> Result<usize> {
    let store = load_store(data_files(config, files))?;
    if let Some(path) = output {
        std::fs::write(path, serialize_ntriples(&store.to_graph()))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(store.len())
}

/// Answers one query over the data files, rendering graphs in `format`
/// and bindings as SPARQL results JSON.
pub fn cmd_query(config: &PipelineConfig, files: &[PathBuf], query: &str, format: &str) -> Result<String> {
    let graph_format = GraphFormat::from_name(format)
        .with_context(|| format!("unknown format {format:?} (expected turtle, ntriples or jsonld)"))?;
    let parsed = parse_query(query).context("query parse error")?;
    let store = load_store(data_files(config, files))?;
    Ok(match store.execute(&parsed) {
        QueryResult::Graph(g) => graph_format.render(&g),
        QueryResult::Bindings(s) => serde_json::to_string_pretty(&s.to_json())? + "\n",
    })
}

fn default_addr(port: u16) -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], port))
}

async fn wait_for_interrupt() {
    if let Err(e) = tokio::signal::ctrl_c().await {
        tracing::error!(error = %e, "cannot listen for interrupt");
        std::future::pending::<()>().await;
    }
    tracing::info!("interrupt received, shutting down");
}

async fn run_until_interrupt(app: axum::Router, addr: SocketAddr, what: &str) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot bind {addr}"))?;
    tracing::info!(addr = %listener.local_addr()?, "{what} ready");
    pam_server::serve(listener, app, wait_for_interrupt()).await?;
    Ok(())
}

/// Loads the data files and serves the publication endpoint until
/// interrupted. Unparsable data refuses startup.
pub async fn cmd_serve(config: &PipelineConfig, files: &[PathBuf], bind: Option<SocketAddr>) -> Result<()> {
    let files = data_files(config, files).to_vec();
    let store = tokio::task::spawn_blocking(move || load_store(&files)).await??;
    let app = pam_server::publish_router(store, config.resources_ns());
    run_until_interrupt(app, bind.or(config.bind).unwrap_or(default_addr(3030)), "publication endpoint").await
}

/// Fixture API from `<fixtures_dir>/<TABLE>.csv` and `stand.txt`.
pub fn fixture_app(config: &PipelineConfig) -> Result<std::sync::Arc<FixtureServer>> {
    let dir = required(&config.fixtures_dir, "fixtures directory", "fixtures_dir")?;
    let model = ApiModel::load(required(&config.api_model, "API model", "api_model")?)?;
    let stand_path = dir.join("stand.txt");
    let stand = std::fs::read_to_string(&stand_path)
        .with_context(|| format!("cannot read {}", stand_path.display()))?;
    let data = FixtureData::load(dir, &model, stand.trim())?;
    Ok(FixtureServer::new(data))
}

pub async fn cmd_fixture_server(config: &PipelineConfig, bind: Option<SocketAddr>) -> Result<()> {
    let server = fixture_app(config)?;
    let addr = bind.or(config.fixture_bind).unwrap_or(default_addr(8081));
    run_until_interrupt(server.router(), addr, "fixture API").await
}

/// Starts the fixture API on a free local port, for tests and scripts.
pub fn spawn_fixture_server(config: &PipelineConfig) -> Result<(BackgroundServer, std::sync::Arc<FixtureServer>)> {
    let server = fixture_app(config)?;
    let running = BackgroundServer::local(server.router())?;
    Ok((running, server))
}

/// Reads the state file without crawling.
pub fn read_state(config: &PipelineConfig) -> Result<CrawlState> {
    Ok(CrawlState::load(required(&config.state_file, "state file", "state_file")?)?)
}
