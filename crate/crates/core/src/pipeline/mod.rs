//! End-to-end pipeline steps behind the command-line tool. Every step reads
//! its inputs from the resolved [`RunConfig`], writes into the output
//! directory and records a manifest of content hashes.

mod analysis;
mod commands;
mod config;
mod manifest;

pub use commands::{run, Command, ModelKind};
pub use config::{
    DataPaths, EventSettings, MinutesSettings, PanelSettings, RunConfig, SepSettings, TuneSettings, ENV_PREFIX,
};
pub use manifest::{blob_hash, hash_file, write_manifest, FileHash};
