//! Pipeline commands behind the `pam` binary: crawl, map, load, serve,
//! query and the fixture API.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_crawl, cmd_fixture_server, cmd_load, cmd_map, cmd_query, cmd_serve, load_store,
    load_tables, run_mappings, spawn_fixture_server, CrawlOptions, MapArgs, OutputFormat,
};
pub use config::PipelineConfig;
