//! `ganforge`: dataset preparation, adversarial training, metric
//! evaluation, embedding plots, and the downstream ablation protocol.

use clap::{Parser, Subcommand};
use ganforge_cli::commands;

#[derive(Parser)]
#[command(name = "ganforge", version, about = "Generative augmentation pipeline for desk-scale image tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset cache from a toy generator or an image directory.
    Dataset(commands::dataset::DatasetArgs),
    /// Train the generator/discriminator pair on a dataset cache.
    TrainGan(commands::train::TrainArgs),
    /// Score a checkpoint's samples against the real data.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Project real and synthetic features to 2-D (PCA / t-SNE).
    Embed(commands::embed::EmbedArgs),
    /// Run the downstream classifier protocol with the quality gate.
    Protocol(commands::protocol::ProtocolArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dataset(args) => commands::dataset::run(args),
        Command::TrainGan(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Embed(args) => commands::embed::run(args),
        Command::Protocol(args) => commands::protocol::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
