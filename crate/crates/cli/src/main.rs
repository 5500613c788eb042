use clap::{Parser, Subcommand};

use umcev_cli::commands::{self, ClusterArgs, EvalArgs, SweepArgs, SynthArgs};

/// Multi-view subspace clustering: solver, synthetic data, evaluation and
/// parameter sweeps.
#[derive(Parser)]
#[command(name = "umcev", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on a dataset and cluster the fused affinity.
    Cluster(ClusterArgs),
    /// Generate a synthetic multi-subspace dataset in manifest format.
    Synth(SynthArgs),
    /// Score a predicted label file against ground truth.
    Eval(EvalArgs),
    /// Tabulate metrics over a grid of one trade-off parameter.
    Sweep(SweepArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Cluster(args) => commands::cluster(args).map(|report| {
            print!("{}", report.to_text());
        }),
        Command::Synth(args) => commands::synth(args).map(|manifest| {
            println!("manifest = {}", manifest.display());
        }),
        Command::Eval(args) => commands::eval(args).map(|text| {
            print!("{text}");
        }),
        Command::Sweep(args) => commands::sweep(args).map(|rows| {
            for row in rows {
                let acc = row
                    .summary
                    .iter()
                    .find(|(name, _, _)| *name == "acc")
                    .map(|(_, mean, _)| *mean)
                    .unwrap_or(f64::NAN);
                println!("value = {:.6e}  acc_mean = {acc:.6}", row.value);
            }
        }),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
