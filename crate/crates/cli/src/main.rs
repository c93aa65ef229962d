use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use pam_cli::{CrawlOptions, MapArgs, PipelineConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "pam", version, about = "Crawl, map, load, serve and query plant protection registration data")]
struct Cli {
    /// Pipeline config file (JSON).
    #[arg(long, global = true, env = "PAM_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download every API table into CSV files, resuming an interrupted run.
    Crawl {
        /// Page size.
        #[arg(long)]
        limit: Option<usize>,
        /// Override the API model's base URL.
        #[arg(long)]
        base_url: Option<String>,
        /// Directory for the table CSV files.
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Discard state and tables first, e.g. after a new release.
        #[arg(long)]
        reset: bool,
    },
    /// Run mapping files over the tables and write RDF.
    Map {
        /// Mapping file; repeatable.
        #[arg(short = 'm', long = "mapping")]
        mappings: Vec<PathBuf>,
        /// Output file; standard output if absent.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// turtle or ntriples.
        #[arg(short = 's', long = "serialization")]
        format: Option<String>,
        /// Directory with the table CSV files.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Parse data files and report the triple count.
    Load {
        files: Vec<PathBuf>,
        /// Write the union as sorted N-Triples.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Serve /sparql, /indications/{id} and /healthz over the data files.
    Serve {
        files: Vec<PathBuf>,
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
    /// Answer one DESCRIBE or SELECT query over the data files.
    Query {
        #[arg(short = 'q', long)]
        query: String,
        /// Graph format: turtle, ntriples or jsonld.
        #[arg(short = 'f', long, default_value = "turtle")]
        format: String,
        files: Vec<PathBuf>,
    },
    /// Serve the fixture tables through the paged API envelope.
    FixtureServer {
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Crawl { limit, base_url, tables, reset } => {
            if tables.is_some() {
                config.tables_dir = tables;
            }
            let counts = pam_cli::cmd_crawl(&config, &CrawlOptions { limit, base_url, reset, retry: None })?;
            for (table, rows) in counts {
                println!("{table}\t{rows}");
            }
        }
        Command::Map { mappings, output, format, tables } => {
            let args = MapArgs { mappings, output, format, tables_dir: tables };
            let n = pam_cli::cmd_map(&config, &args, &mut std::io::stdout().lock())?;
            tracing::info!(triples = n, "mapping done");
        }
        Command::Load { files, output } => {
            let n = pam_cli::cmd_load(&config, &files, output.as_deref())?;
            println!("{n} triples");
        }
        Command::Serve { files, bind } => runtime()?.block_on(pam_cli::cmd_serve(&config, &files, bind))?,
        Command::Query { query, format, files } => {
            print!("{}", pam_cli::cmd_query(&config, &files, &query, &format)?);
        }
        Command::FixtureServer { bind } => runtime()?.block_on(pam_cli::cmd_fixture_server(&config, bind))?,
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("PAM_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
