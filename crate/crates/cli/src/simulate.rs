use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use boundfdr::montecarlo::run_monte_carlo;
use boundfdr::SimulationConfig;
use clap::Args;

#[derive(Args)]
pub struct SimulateArgs {
    /// JSON config: {generator, methods, alphas, trials, seed}.
    #[arg(long)]
    config: PathBuf,
    /// Destination of the summary CSV.
    #[arg(long)]
    output: PathBuf,
    /// Override the number of trials in the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(path: &PathBuf) -> Result<SimulationConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("{}: field `{field}`: {}", path.display(), e.into_inner())
    })
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let mut config = load(&args.config)?;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let summary = run_monte_carlo(&config)?;
    let file = File::create(&args.output)
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    summary.write_csv(BufWriter::new(file))?;
    println!(
        "{} rows written to {}",
        summary.rows.len(),
        args.output.display()
    );
    Ok(())
}
