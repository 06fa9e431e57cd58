use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use boundfdr::level::{format_decimal, parse_rational};
use boundfdr::montecarlo::evaluate_trial;
use boundfdr::{conformal_p_values, Labels, Level, Method, ProcedureSpec, ScoreSample, TiePolicy};
use clap::Args;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::input::{read_labels, read_scores};

#[derive(Args)]
pub struct DetectArgs {
    /// CSV with a `score` column of calibration (null) scores.
    #[arg(long)]
    calib: PathBuf,
    /// CSV with a `score` column of test scores.
    #[arg(long)]
    test: PathBuf,
    /// Optional CSV with a `label` column (1 = novelty) to report the realized FDP.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// bh, sl, slc, slg, asl, aslc, slc+, aslc+, slc++, aslc++, slc++/2, aslc++/2.
    #[arg(long)]
    method: Method,
    /// Target level in (0, 1), parsed exactly (e.g. 0.1 or 1/10).
    #[arg(long)]
    alpha: Level,
    /// Storey threshold index for the adaptive methods (default ⌊(n+1)/2⌋ - 1).
    #[arg(long)]
    s0: Option<usize>,
    /// Subsample size for the `+` / `++` methods (overrides the size rule).
    #[arg(long)]
    subsample_size: Option<usize>,
    /// ρ in the size rule max(s_min, min(m, ⌊ρα(n+1)⌋)).
    #[arg(long)]
    subsample_ratio: Option<String>,
    /// s_min in the size rule.
    #[arg(long)]
    s_min: Option<usize>,
    /// Number of subsamples for the `++` methods.
    #[arg(long = "B")]
    replicates: Option<usize>,
    /// Quantile of the subsample counts used by the `++` methods.
    #[arg(long)]
    gamma: Option<String>,
    /// Run the `++` method at α/2.
    #[arg(long)]
    halve: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail with exit code 3 on tied scores instead of breaking ties by index.
    #[arg(long)]
    strict_ties: bool,
    /// Where to write the JSON report.
    #[arg(long, required_unless_present = "verify")]
    output: Option<PathBuf>,
    /// Recompute and compare against an existing report instead of writing one.
    #[arg(long, conflicts_with = "output")]
    verify: Option<PathBuf>,
}

/// JSON report; indices are 0-based positions in the test file.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Report {
    method: String,
    alpha: Level,
    adjusted_level: String,
    n: usize,
    m: usize,
    k_hat: usize,
    threshold_score: Option<f64>,
    boundary_index: Option<usize>,
    rejected: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi0_hat: Option<String>,
    seed: u64,
    ties_broken: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fdp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_is_null: Option<bool>,
}

fn procedure(args: &DetectArgs) -> Result<ProcedureSpec> {
    let method = if args.halve {
        match args.method.halved() {
            Some(m) => m,
            None if args.method.is_halved() => args.method,
            None => bail!(
                "--halve applies only to slc++ and aslc++, not {}",
                args.method
            ),
        }
    } else {
        args.method
    };
    let mut spec = ProcedureSpec::new(method);
    spec.s0 = args.s0;
    spec.subsample_size = args.subsample_size;
    if let Some(rho) = &args.subsample_ratio {
        spec.rho = parse_rational(rho).context("--subsample-ratio")?;
    }
    if let Some(s_min) = args.s_min {
        spec.s_min = s_min;
    }
    if let Some(b) = args.replicates {
        spec.replicates = b;
    }
    if let Some(gamma) = &args.gamma {
        spec.gamma = parse_rational(gamma).context("--gamma")?;
    }
    spec.validate()?;
    Ok(spec)
}

fn build_report(args: &DetectArgs) -> Result<Report> {
    let spec = procedure(args)?;
    let policy = if args.strict_ties {
        TiePolicy::RejectInput
    } else {
        TiePolicy::BreakByIndex
    };
    let sample = ScoreSample::new(read_scores(&args.calib)?, read_scores(&args.test)?, policy)?;
    let labels = match &args.labels {
        Some(path) => {
            let labels = Labels::new(read_labels(path)?)?;
            if labels.len() != sample.m() {
                bail!("{} labels for {} test scores", labels.len(), sample.m());
            }
            Some(labels)
        }
        None => None,
    };
    let pv = conformal_p_values(&sample)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let result = spec.run(&pv, args.alpha, &mut rng)?;
    let outcome = labels.as_ref().map(|l| evaluate_trial(&result, l));
    Ok(Report {
        method: spec.method.name().to_string(),
        alpha: args.alpha,
        adjusted_level: format_decimal(&result.adjusted_level),
        n: sample.n(),
        m: sample.m(),
        k_hat: result.k_hat,
        threshold_score: result.boundary_index.map(|_| result.threshold_score),
        boundary_index: result.boundary_index,
        rejected: result.rejected,
        pi0_hat: result.pi0_hat.as_ref().map(format_decimal),
        seed: args.seed,
        ties_broken: pv.ties_broken(),
        fdp: outcome.map(|o| o.fdp),
        boundary_is_null: outcome.map(|o| o.boundary_is_null),
    })
}

fn verify(report: &Report, path: &PathBuf) -> Result<()> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let saved: Report = serde_json::from_str(&text)
        .with_context(|| format!("{}: not a detect report", path.display()))?;
    let same_run =
        saved.method == report.method && saved.alpha == report.alpha && saved.seed == report.seed;
    if !same_run {
        bail!(
            "report was produced by {} at alpha {} with seed {}, not {} at {} with seed {}",
            saved.method,
            saved.alpha,
            saved.seed,
            report.method,
            report.alpha,
            report.seed
        );
    }
    if saved.k_hat != report.k_hat || saved.rejected != report.rejected {
        bail!(
            "mismatch: report has k_hat = {}, recomputed {}",
            saved.k_hat,
            report.k_hat
        );
    }
    println!(
        "verified k_hat={} rejections={}",
        report.k_hat,
        report.rejected.len()
    );
    Ok(())
}

pub fn run(args: DetectArgs) -> Result<()> {
    let report = build_report(&args)?;
    if let Some(path) = &args.verify {
        return verify(&report, path);
    }
    let path = args
        .output
        .as_ref()
        .expect("clap requires --output without --verify");
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(path, json + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    println!(
        "k_hat={} rejections={}",
        report.k_hat,
        report.rejected.len()
    );
    Ok(())
}
