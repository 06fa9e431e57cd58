//! Synthetic score generators and a Monte Carlo engine for bFDR / FDR.
//!
//! Seeding: every random draw comes from ChaCha8 seeded with
//! `seed ^ lane·0x9E3779B97F4A7C15` on stream `trial`. Lane 0 generates the
//! scores of a trial; lane `1 + c` drives the subsampling of result cell `c`
//! (cells enumerate methods × alphas, alphas fastest). Trials run in parallel
//! and are reduced in trial order, so the summary does not depend on the
//! thread count.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Uniform};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::level::{to_f64, Level, Rational};
use crate::method::{Method, ProcedureSpec};
use crate::procedures::{slc_is_active, RejectionResult};
use crate::pvalues::{conformal_p_values, Labels, ScoreSample, TiePolicy};

const LANE_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// ChaCha8 generator for (`seed`, `trial`, `lane`).
pub fn stream_rng(seed: u64, trial: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lane.wrapping_mul(LANE_MIX));
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScoreDistribution {
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

enum Sampler {
    Uniform(Uniform<f64>),
    Beta(Beta<f64>),
}

impl Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Beta(d) => d.sample(rng),
        }
    }
}

impl ScoreDistribution {
    fn sampler(&self) -> Result<Sampler> {
        match *self {
            ScoreDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(Error::Config(format!(
                        "uniform needs low < high, got ({low}, {high})"
                    )));
                }
                Ok(Sampler::Uniform(
                    Uniform::new(low, high).map_err(|e| Error::Config(e.to_string()))?,
                ))
            }
            ScoreDistribution::Beta { alpha, beta } => Beta::new(alpha, beta)
                .map(Sampler::Beta)
                .map_err(|e| Error::Config(format!("beta({alpha}, {beta}): {e}"))),
        }
    }
}

/// `n` calibration and `m0` null test scores from `null`; `m - m0` novelties from `alt`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub null: ScoreDistribution,
    pub alt: ScoreDistribution,
    pub n: usize,
    pub m: usize,
    pub m0: usize,
}

impl GeneratorSpec {
    /// Nulls U(0,1), novelties U(0.8,1.8).
    pub fn uniform_shift(n: usize, m: usize, m0: usize) -> Self {
        Self {
            null: ScoreDistribution::Uniform {
                low: 0.0,
                high: 1.0,
            },
            alt: ScoreDistribution::Uniform {
                low: 0.8,
                high: 1.8,
            },
            n,
            m,
            m0,
        }
    }

    /// Nulls U(0,1), novelties Beta(30,1) on the same support.
    pub fn beta_alternative(n: usize, m: usize, m0: usize) -> Self {
        Self {
            alt: ScoreDistribution::Beta {
                alpha: 30.0,
                beta: 1.0,
            },
            ..Self::uniform_shift(n, m, m0)
        }
    }

    /// Nulls U(0,1), novelties U(1,2): every novelty beats every null score.
    pub fn disjoint_supports(n: usize, m: usize, m0: usize) -> Self {
        Self {
            alt: ScoreDistribution::Uniform {
                low: 1.0,
                high: 2.0,
            },
            ..Self::uniform_shift(n, m, m0)
        }
    }

    /// Setting (a): m = 2000, n = 4000, π0 = 0.8.
    pub fn setting_a() -> Self {
        Self::uniform_shift(4000, 2000, 1600)
    }

    /// Setting (b): as (a) with Beta(30,1) novelties.
    pub fn setting_b() -> Self {
        Self::beta_alternative(4000, 2000, 1600)
    }

    /// Setting (c): m = 200, n = 12000, π0 = 0.8.
    pub fn setting_c() -> Self {
        Self::uniform_shift(12000, 200, 160)
    }

    /// The small disjoint-support configuration where SL overshoots: n = 9, m = 40, m1 = 20.
    pub fn counterexample() -> Self {
        Self::disjoint_supports(9, 40, 20)
    }

    pub fn pi0(&self) -> f64 {
        self.m0 as f64 / self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("generator: n and m must be >= 1".into()));
        }
        if self.m0 > self.m {
            return Err(Error::Config(format!(
                "generator: m0 = {} exceeds m = {}",
                self.m0, self.m
            )));
        }
        self.null.sampler()?;
        self.alt.sampler()?;
        Ok(())
    }
}

/// Draws one trial. Null test points occupy indices `0..m0`, novelties `m0..m`.
pub fn generate_trial<R: Rng + ?Sized>(
    spec: &GeneratorSpec,
    rng: &mut R,
) -> Result<(ScoreSample, Labels)> {
    spec.validate()?;
    let null = spec.null.sampler()?;
    let alt = spec.alt.sampler()?;
    let calib = (0..spec.n).map(|_| null.sample(rng)).collect();
    let test = (0..spec.m)
        .map(|i| {
            if i < spec.m0 {
                null.sample(rng)
            } else {
                alt.sample(rng)
            }
        })
        .collect();
    let labels = (0..spec.m).map(|i| u8::from(i >= spec.m0)).collect();
    Ok((
        ScoreSample::new(calib, test, TiePolicy::BreakByIndex)?,
        Labels::new(labels)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub fdp: f64,
    pub boundary_is_null: bool,
    pub rejections: usize,
}

/// FDP and whether the last rejection is a null (no rejection counts as not null).
pub fn evaluate_trial(result: &RejectionResult, labels: &Labels) -> TrialOutcome {
    let false_rejections = result
        .rejected
        .iter()
        .filter(|&&i| labels.is_null(i))
        .count();
    TrialOutcome {
        fdp: false_rejections as f64 / result.rejected.len().max(1) as f64,
        boundary_is_null: result.boundary_index.is_some_and(|i| labels.is_null(i)),
        rejections: result.rejected.len(),
    }
}

/// Distribution-free bFDR bound for a method, when one exists.
///
/// BH has no bFDR guarantee and SL with gap needs `α/m >= 1/(n+1)`.
pub fn theoretical_bound(
    spec: &ProcedureSpec,
    alpha: Level,
    n: usize,
    m: usize,
    m0: usize,
) -> Option<f64> {
    let a = alpha.value();
    let null_share = Rational::new(m0 as i128, m as i128);
    let calib_term = Rational::new(m0 as i128, n as i128 + 1);
    let multi_level = if spec.method.is_halved() {
        alpha.halved().value()
    } else {
        a
    };
    let bound = match spec.method {
        Method::Bh => return None,
        Method::Sl => a * null_share + calib_term,
        Method::Slc | Method::SlcPlus => a * null_share,
        Method::Slg => {
            if !slc_is_active(alpha, n, m)
                && Rational::new(1, n as i128 + 1) != a / Rational::from_integer(m as i128)
            {
                return None;
            }
            a * null_share
        }
        Method::Asl => a + calib_term,
        Method::Aslc | Method::AslcPlus => a,
        Method::SlcPlusPlus | Method::SlcPlusPlusHalf => multi_level * null_share / spec.gamma,
        Method::AslcPlusPlus | Method::AslcPlusPlusHalf => multi_level / spec.gamma,
    };
    Some(to_f64(&bound))
}

/// Simulation input, as read from a JSON document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub generator: GeneratorSpec,
    pub methods: Vec<ProcedureSpec>,
    pub alphas: Vec<Level>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Config("alphas must not be empty".into()));
        }
        for method in &self.methods {
            method.validate()?;
            if let Some(s0) = method.s0 {
                crate::procedures::StoreyConfig { s0 }.validate(self.generator.n)?;
            }
            if let Some(size) = method.subsample_size {
                if size == 0 || size > self.generator.m {
                    return Err(Error::Config(format!(
                        "subsample_size must lie in [1, {}], got {size}",
                        self.generator.m
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellOutcome {
    trial: TrialOutcome,
    pi0_hat: Option<f64>,
}

/// Per-(method, α) estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub alpha: Level,
    pub trials: usize,
    pub bfdr: f64,
    pub bfdr_se: f64,
    pub fdr: f64,
    pub fdr_se: f64,
    pub mean_rej_frac: f64,
    pub sd_rej_frac: f64,
    pub mean_pi0_hat: Option<f64>,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub rows: Vec<SummaryRow>,
}

impl SimulationSummary {
    pub fn row(&self, method: Method, alpha: Level) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.method == method.name() && r.alpha == alpha)
    }

    pub const CSV_HEADER: &'static str =
        "method,alpha,trials,bfdr,bfdr_se,fdr,fdr_se,mean_rej_frac,sd_rej_frac,bound";

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.method,
                r.alpha,
                r.trials,
                r.bfdr,
                r.bfdr_se,
                r.fdr,
                r.fdr_se,
                r.mean_rej_frac,
                r.sd_rej_frac,
                bound
            )?;
        }
        Ok(())
    }
}

/// Mean and standard error (sample sd / √T) of a sequence.
pub fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mean, sd, count) = mean_and_sd(values);
    (
        mean,
        if count == 0 {
            0.0
        } else {
            sd / (count as f64).sqrt()
        },
    )
}

fn mean_and_sd(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let values: Vec<f64> = values.collect();
    let count = values.len();
    if count == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0, 1);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    (mean, var.sqrt(), count)
}

fn run_trial(config: &SimulationConfig, trial: u64) -> Result<Vec<CellOutcome>> {
    let (sample, labels) =
        generate_trial(&config.generator, &mut stream_rng(config.seed, trial, 0))?;
    let pv = conformal_p_values(&sample)?;
    let mut cells = Vec::with_capacity(config.methods.len() * config.alphas.len());
    for method in &config.methods {
        for &alpha in &config.alphas {
            let lane = 1 + cells.len() as u64;
            let result = method.run(&pv, alpha, &mut stream_rng(config.seed, trial, lane))?;
            cells.push(CellOutcome {
                trial: evaluate_trial(&result, &labels),
                pi0_hat: result.pi0_hat.as_ref().map(to_f64),
            });
        }
    }
    Ok(cells)
}

/// Runs `trials` independent trials; all cells of a trial share its scores.
pub fn run_monte_carlo(config: &SimulationConfig) -> Result<SimulationSummary> {
    config.validate()?;
    let outcomes: Vec<Vec<CellOutcome>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<_>>()?;

    let m = config.generator.m as f64;
    let mut rows = Vec::new();
    let mut cell = 0;
    for method in &config.methods {
        for &alpha in &config.alphas {
            let column = || outcomes.iter().map(move |trial| trial[cell]);
            let (bfdr, bfdr_se) =
                mean_and_se(column().map(|c| f64::from(u8::from(c.trial.boundary_is_null))));
            let (fdr, fdr_se) = mean_and_se(column().map(|c| c.trial.fdp));
            let (mean_rej_frac, sd_rej_frac, _) =
                mean_and_sd(column().map(|c| c.trial.rejections as f64 / m));
            let mean_pi0_hat = method
                .method
                .is_adaptive()
                .then(|| mean_and_se(column().filter_map(|c| c.pi0_hat)).0);
            rows.push(SummaryRow {
                method: method.method.name().to_string(),
                alpha,
                trials: config.trials,
                bfdr,
                bfdr_se,
                fdr,
                fdr_se,
                mean_rej_frac,
                sd_rej_frac,
                mean_pi0_hat,
                bound: theoretical_bound(
                    method,
                    alpha,
                    config.generator.n,
                    config.generator.m,
                    config.generator.m0,
                ),
            });
            cell += 1;
        }
    }
    Ok(SimulationSummary { rows })
}

/// `P(H_{σ(k)} = 0)` for every fixed `k`, estimated over `trials` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct NullRateProfile {
    /// Estimates for `k = 1..=m` (index `k - 1`).
    pub null_rate: Vec<f64>,
    pub se: Vec<f64>,
    /// Paired difference `rate(k+1) - rate(k)` and its standard error, `k = 1..m`.
    pub step: Vec<f64>,
    pub step_se: Vec<f64>,
}

pub fn null_rate_by_rank(
    spec: &GeneratorSpec,
    trials: usize,
    seed: u64,
) -> Result<NullRateProfile> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let rows: Vec<Vec<u8>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<u8>> {
            let (sample, labels) = generate_trial(spec, &mut stream_rng(seed, t, 0))?;
            let pv = conformal_p_values(&sample)?;
            Ok(pv
                .sigma()
                .iter()
                .map(|&i| u8::from(labels.is_null(i)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let column = |k: usize| rows.iter().map(move |r| f64::from(r[k]));
    let (null_rate, se) = (0..spec.m).map(|k| mean_and_se(column(k))).unzip();
    let (step, step_se) = (0..spec.m.saturating_sub(1))
        .map(|k| mean_and_se(rows.iter().map(|r| f64::from(r[k + 1]) - f64::from(r[k]))))
        .unzip();
    Ok(NullRateProfile {
        null_rate,
        se,
        step,
        step_se,
    })
}
