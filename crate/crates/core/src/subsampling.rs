//! Subsampled support-line procedures: SLC+, ASLC+ and the multi-subsample
//! SLC++ / ASLC++ (optionally at the halved level α/2).
//!
//! A single run draws `s` test points without replacement, solves the
//! support-line problem on that subset with the full-calibration p-values,
//! and extends the resulting score threshold to the whole test set. Because
//! every subset element keeps its position in the full ordering `σ`, the
//! extended rejection set is the top-`r` set with `r` = (position of the
//! subsample boundary in `σ`) + 1.
//!
//! Randomness: the `B` replicates of a multi-subsample call draw one `u64`
//! from the caller's generator and use ChaCha8 seeded with it, stream `b`
//! for replicate `b`. Replicates therefore run in parallel without changing
//! results.

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::level::{positive_part, Level, Rational};
use crate::procedures::{storey_pi0, support_line_khat, RejectionResult, StoreyConfig};
use crate::pvalues::PValueVector;

/// Default ratio `ρ` in the subsample-size rule.
pub const DEFAULT_RHO: (i128, i128) = (1, 5);
/// Default minimal subsample size.
pub const DEFAULT_S_MIN: usize = 100;
/// Default number of subsamples; odd so the median is an order statistic.
pub const DEFAULT_REPLICATES: usize = 51;

/// `max{s_min, min{m, ⌊ρα(n+1)⌋}}`, clamped to `[1, m]`.
pub fn recommended_subsample_size(
    n: usize,
    m: usize,
    alpha: Level,
    rho: Rational,
    s_min: usize,
) -> usize {
    let scaled = rho * alpha.value() * Rational::from_integer(n as i128 + 1);
    let floor = scaled.floor().to_integer().max(0) as usize;
    s_min.max(m.min(floor)).clamp(1, m.max(1))
}

/// Which single-subsample procedure a multi-subsample call aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseProcedure {
    Slc,
    Aslc(StoreyConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsampleSpec {
    pub size: usize,
    pub replicates: usize,
    /// Quantile of the decreasingly sorted counts; 1/2 is the median.
    pub gamma: Rational,
    /// Run every replicate at α/2.
    pub halve: bool,
}

impl SubsampleSpec {
    pub fn new(size: usize, replicates: usize, gamma: Rational, halve: bool) -> Self {
        Self {
            size,
            replicates,
            gamma,
            halve,
        }
    }

    pub fn median(size: usize) -> Self {
        Self::new(size, DEFAULT_REPLICATES, Rational::new(1, 2), false)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        check_size(self.size, m)?;
        if self.replicates == 0 {
            return Err(Error::Config("number of subsamples B must be >= 1".into()));
        }
        if self.gamma <= Rational::zero() || self.gamma > Rational::one() {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// `⌈γB⌉`, the 1-based order statistic taken from the decreasing counts.
    pub fn order_index(&self) -> usize {
        let b = self.replicates as i128;
        let (q, r) = (*self.gamma.numer() * b).div_rem(self.gamma.denom());
        (q + i128::from(r != 0)) as usize
    }
}

fn check_size(size: usize, m: usize) -> Result<()> {
    if size == 0 || size > m {
        return Err(Error::Config(format!(
            "subsample size must lie in [1, {m}], got {size}"
        )));
    }
    Ok(())
}

/// Slope and rank cap of one subsampled support-line problem.
#[derive(Debug, Clone, Copy)]
struct SubsampleProblem {
    slope: Rational,
    cap: Option<u64>,
    pi0: Option<Rational>,
    size: usize,
}

impl SubsampleProblem {
    fn new(pv: &PValueVector, alpha: Level, base: BaseProcedure, size: usize) -> Result<Self> {
        check_size(size, pv.m())?;
        let step = Rational::new(1, pv.n() as i128 + 1);
        let per_test = alpha.value() / Rational::from_integer(size as i128);
        Ok(match base {
            BaseProcedure::Slc => Self {
                slope: positive_part(per_test - step),
                cap: None,
                pi0: None,
                size,
            },
            BaseProcedure::Aslc(cfg) => {
                let pi0 = storey_pi0(pv, cfg)?;
                Self {
                    slope: positive_part(per_test / pi0 - step),
                    cap: Some(cfg.s0 as u64),
                    pi0: Some(pi0),
                    size,
                }
            }
        })
    }

    fn adjusted_level(&self) -> Rational {
        self.slope * Rational::from_integer(self.size as i128)
    }

    /// Full-set rejection count for the subsample given as test indices.
    fn count_on(&self, pv: &PValueVector, subset: &[usize]) -> usize {
        if self.slope.is_zero() {
            return 0;
        }
        let mut positions: Vec<usize> = subset.iter().map(|&i| pv.position()[i]).collect();
        positions.sort_unstable();
        let ranks: Vec<u64> = positions.iter().map(|&p| pv.sorted_ranks()[p]).collect();
        match support_line_khat(&ranks, pv.n(), self.slope, self.cap) {
            0 => 0,
            k => positions[k - 1] + 1,
        }
    }

    fn count_random<R: Rng + ?Sized>(&self, pv: &PValueVector, rng: &mut R) -> usize {
        let mut indices: Vec<usize> = (0..pv.m()).collect();
        let (chosen, _) = indices.partial_shuffle(rng, self.size);
        self.count_on(pv, chosen)
    }
}

/// Runs a single-subsample procedure on a given subset of test indices.
pub fn single_subsample_on(
    pv: &PValueVector,
    alpha: Level,
    base: BaseProcedure,
    subset: &[usize],
) -> Result<RejectionResult> {
    let problem = SubsampleProblem::new(pv, alpha, base, subset.len())?;
    let r = problem.count_on(pv, subset);
    Ok(RejectionResult::top_k(
        pv,
        r,
        problem.adjusted_level(),
        problem.pi0,
    ))
}

/// SLC+: SLC on a uniformly drawn subsample of size `size`, extended to all tests.
pub fn slc_plus<R: Rng + ?Sized>(
    pv: &PValueVector,
    alpha: Level,
    size: usize,
    rng: &mut R,
) -> Result<RejectionResult> {
    let problem = SubsampleProblem::new(pv, alpha, BaseProcedure::Slc, size)?;
    let r = problem.count_random(pv, rng);
    Ok(RejectionResult::top_k(
        pv,
        r,
        problem.adjusted_level(),
        None,
    ))
}

/// ASLC+: π̂0 from the full sample, then capped ASLC on a subsample.
pub fn aslc_plus<R: Rng + ?Sized>(
    pv: &PValueVector,
    alpha: Level,
    cfg: StoreyConfig,
    size: usize,
    rng: &mut R,
) -> Result<RejectionResult> {
    let problem = SubsampleProblem::new(pv, alpha, BaseProcedure::Aslc(cfg), size)?;
    let r = problem.count_random(pv, rng);
    Ok(RejectionResult::top_k(
        pv,
        r,
        problem.adjusted_level(),
        problem.pi0,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSubsampleResult {
    pub result: RejectionResult,
    /// `r_b`, the full-set rejection count of each replicate.
    pub counts: Vec<usize>,
    /// Smallest replicate index attaining the selected count.
    pub selected: usize,
}

/// `r_(⌈γB⌉)` of the decreasingly ordered counts, and the smallest `b` attaining it.
pub fn select_count(counts: &[usize], spec: &SubsampleSpec) -> (usize, usize) {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let r = sorted[spec.order_index() - 1];
    let selected = counts
        .iter()
        .position(|&c| c == r)
        .expect("value taken from counts");
    (r, selected)
}

/// SLC++ / ASLC++: `B` independent single-subsample runs aggregated by a quantile.
pub fn multi_subsample<R: Rng + ?Sized>(
    pv: &PValueVector,
    alpha: Level,
    spec: &SubsampleSpec,
    base: BaseProcedure,
    rng: &mut R,
) -> Result<MultiSubsampleResult> {
    spec.validate(pv.m())?;
    let level = if spec.halve { alpha.halved() } else { alpha };
    let problem = SubsampleProblem::new(pv, level, base, spec.size)?;
    let stream_seed: u64 = rng.random();
    let counts: Vec<usize> = (0..spec.replicates)
        .into_par_iter()
        .map(|b| {
            let mut replicate_rng = replicate_rng(stream_seed, b);
            problem.count_random(pv, &mut replicate_rng)
        })
        .collect();
    let (r, selected) = select_count(&counts, spec);
    Ok(MultiSubsampleResult {
        result: RejectionResult::top_k(pv, r, problem.adjusted_level(), problem.pi0),
        counts,
        selected,
    })
}

/// Generator for replicate `b` of a multi-subsample call.
pub fn replicate_rng(stream_seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    rng.set_stream(b as u64);
    rng
}
