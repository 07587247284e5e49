//! Library surface of the `ganforge` binary: argument structs, config
//! handling, and command implementations (also linked by the fuzz
//! targets).

pub mod commands;
pub mod config;
pub mod errors;
pub mod extractors;

use std::path::PathBuf;

/// Shared flags every subcommand accepts.
#[derive(clap::Args, Clone)]
pub struct CommonArgs {
    /// Output directory for all artifacts of this run.
    #[arg(long)]
    pub out: PathBuf,
    /// Deterministic seed (falls back to config file, then GANFORGE_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
