//! BH and the support-line family: SL, SLC, ASL, ASLC and SL with gap.
//!
//! Each support-line variant picks the largest minimiser of
//! `p_{σ(k)} - k·slope` over `k = 0..=m` (with `p_{σ(0)} = 0`). The slope is
//! an exact rational, and the objective is scaled by `den(slope)·(n+1)` so
//! every comparison, including ties in the argmin, is integer arithmetic.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::level::{positive_part, Level, Rational};
use crate::pvalues::PValueVector;

/// Outcome of a top-k̂ procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionResult {
    pub k_hat: usize,
    /// Rejected test indices (0-based, ascending): the `k_hat` largest scores.
    pub rejected: Vec<usize>,
    /// `σ(k̂)`, the test index of the last rejection.
    pub boundary_index: Option<usize>,
    /// Score at the boundary; `+∞` when nothing is rejected.
    pub threshold_score: f64,
    /// Level actually plugged into the support-line objective.
    pub adjusted_level: Rational,
    pub pi0_hat: Option<Rational>,
}

impl RejectionResult {
    /// The top-`k` rejection set of `pv`.
    pub fn top_k(
        pv: &PValueVector,
        k: usize,
        adjusted_level: Rational,
        pi0_hat: Option<Rational>,
    ) -> Self {
        assert!(k <= pv.m(), "k = {k} exceeds m = {}", pv.m());
        let mut rejected = pv.sigma()[..k].to_vec();
        rejected.sort_unstable();
        let boundary_index = k.checked_sub(1).map(|pos| pv.sigma()[pos]);
        let threshold_score = boundary_index.map_or(f64::INFINITY, |i| pv.test_scores()[i]);
        Self {
            k_hat: k,
            rejected,
            boundary_index,
            threshold_score,
            adjusted_level,
            pi0_hat,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.k_hat == 0
    }
}

/// Largest minimiser of `l_k/(n+1) - k·slope` over the admissible prefix.
///
/// `sorted_ranks` holds `l_1 <= ... <= l_s`; `k = 0` (value 0) is always a
/// candidate, and `k >= 1` is admissible only when `l_k <= cap`.
pub fn support_line_khat(
    sorted_ranks: &[u64],
    n: usize,
    slope: Rational,
    cap: Option<u64>,
) -> usize {
    debug_assert!(slope >= Rational::zero());
    let den = *slope.denom();
    let step = *slope.numer() * (n as i128 + 1);
    let mut best = 0i128;
    let mut k_hat = 0;
    for (idx, &l) in sorted_ranks.iter().enumerate() {
        if cap.is_some_and(|c| l > c) {
            break;
        }
        let k = idx + 1;
        let value = l as i128 * den - k as i128 * step;
        if value <= best {
            best = value;
            k_hat = k;
        }
    }
    k_hat
}

fn per_test_slope(alpha: Rational, count: usize) -> Rational {
    alpha / Rational::from_integer(count as i128)
}

fn grid_step(n: usize) -> Rational {
    Rational::new(1, n as i128 + 1)
}

/// Benjamini–Hochberg on conformal p-values.
pub fn bh(pv: &PValueVector, alpha: Level) -> RejectionResult {
    let (a, b) = (alpha.numer(), alpha.denom());
    let m = pv.m() as i128;
    let n1 = pv.n() as i128 + 1;
    let k_hat = pv
        .sorted_ranks()
        .iter()
        .enumerate()
        .rev()
        .find(|(idx, &l)| l as i128 * b * m <= a * (*idx as i128 + 1) * n1)
        .map_or(0, |(idx, _)| idx + 1);
    RejectionResult::top_k(pv, k_hat, alpha.value(), None)
}

/// Support line: largest minimiser of `p_{σ(k)} - αk/m`.
pub fn sl(pv: &PValueVector, alpha: Level) -> RejectionResult {
    let slope = per_test_slope(alpha.value(), pv.m());
    let k_hat = support_line_khat(pv.sorted_ranks(), pv.n(), slope, None);
    RejectionResult::top_k(pv, k_hat, alpha.value(), None)
}

/// Support line conformal: slope `(α/m - 1/(n+1))₊`.
pub fn slc(pv: &PValueVector, alpha: Level) -> RejectionResult {
    let slope = positive_part(per_test_slope(alpha.value(), pv.m()) - grid_step(pv.n()));
    let k_hat = if slope.is_zero() {
        0
    } else {
        support_line_khat(pv.sorted_ranks(), pv.n(), slope, None)
    };
    let adjusted = slope * Rational::from_integer(pv.m() as i128);
    RejectionResult::top_k(pv, k_hat, adjusted, None)
}

/// Storey threshold parameter `s0`; the estimator counts p-values `>= (s0+1)/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreyConfig {
    pub s0: usize,
}

impl StoreyConfig {
    /// `s0 = ⌊(n+1)/2⌋ - 1`, a threshold near 1/2.
    pub fn default_for(n: usize) -> Self {
        Self {
            s0: n.div_ceil(2).saturating_sub(1),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 || self.s0 > n - 1 {
            return Err(Error::Config(format!(
                "s0 must lie in [0, n-1] = [0, {}], got {}",
                n.saturating_sub(1),
                self.s0
            )));
        }
        Ok(())
    }
}

/// Storey-type null proportion estimate. Not capped at 1.
pub fn storey_pi0(pv: &PValueVector, cfg: StoreyConfig) -> Result<Rational> {
    cfg.validate(pv.n())?;
    let threshold = cfg.s0 as u64 + 1;
    let count = pv.ranks().iter().filter(|&&l| l >= threshold).count() as i128;
    let n = pv.n() as i128;
    let m = pv.m() as i128;
    // 1 - (s0+1)/(n+1) = (n - s0)/(n+1)
    Ok(Rational::new(
        (1 + count) * (n + 1),
        m * (n - cfg.s0 as i128),
    ))
}

/// Adaptive support line: slope `α/(m π̂0)`, restricted to `p_{σ(k)} <= s0/(n+1)`.
pub fn asl(pv: &PValueVector, alpha: Level, cfg: StoreyConfig) -> Result<RejectionResult> {
    let pi0 = storey_pi0(pv, cfg)?;
    let slope = per_test_slope(alpha.value(), pv.m()) / pi0;
    let k_hat = support_line_khat(pv.sorted_ranks(), pv.n(), slope, Some(cfg.s0 as u64));
    Ok(RejectionResult::top_k(
        pv,
        k_hat,
        alpha.value() / pi0,
        Some(pi0),
    ))
}

/// Adaptive support line conformal: slope `(α/(m π̂0) - 1/(n+1))₊`.
pub fn aslc(pv: &PValueVector, alpha: Level, cfg: StoreyConfig) -> Result<RejectionResult> {
    let pi0 = storey_pi0(pv, cfg)?;
    let slope = positive_part(per_test_slope(alpha.value(), pv.m()) / pi0 - grid_step(pv.n()));
    let k_hat = if slope.is_zero() {
        0
    } else {
        support_line_khat(pv.sorted_ranks(), pv.n(), slope, None)
    };
    let adjusted = slope * Rational::from_integer(pv.m() as i128);
    Ok(RejectionResult::top_k(pv, k_hat, adjusted, Some(pi0)))
}

/// SL with gap: keeps SL's rejections only if its minimum is separated from
/// every other objective value by at least `1/(n+1)`.
pub fn slg(pv: &PValueVector, alpha: Level) -> RejectionResult {
    let base = sl(pv, alpha);
    if base.k_hat == 0 {
        return base;
    }
    // Objective scaled by b·m·(n+1): l_k·b·m - k·a·(n+1); the gap 1/(n+1) becomes b·m.
    let (a, b) = (alpha.numer(), alpha.denom());
    let m = pv.m() as i128;
    let n1 = pv.n() as i128 + 1;
    let objective = |k: usize| pv.rank_at(k) as i128 * b * m - k as i128 * a * n1;
    let at_min = objective(base.k_hat);
    let separated = (0..=pv.m())
        .filter(|&k| k != base.k_hat)
        .all(|k| at_min + b * m <= objective(k));
    if separated {
        base
    } else {
        RejectionResult::top_k(pv, 0, alpha.value(), None)
    }
}

/// True when the SLC adjusted slope is positive, i.e. `1/(n+1) < α/m`.
pub fn slc_is_active(alpha: Level, n: usize, m: usize) -> bool {
    per_test_slope(alpha.value(), m) > grid_step(n)
}
