//! Conformal p-values on the grid `l/(n+1)`.
//!
//! A test score `S` gets rank `l = 1 + #{j : calib_j >= S}` and p-value
//! `l/(n+1)`. Ranks are kept as integers; nothing downstream compares floats.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::Rational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Fail with [`Error::Ties`] when any two scores coincide.
    RejectInput,
    /// Order tied test scores by original index (smaller index first).
    #[default]
    BreakByIndex,
}

/// Calibration and test scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSample {
    calib: Vec<f64>,
    test: Vec<f64>,
    tie_policy: TiePolicy,
}

impl ScoreSample {
    pub fn new(calib: Vec<f64>, test: Vec<f64>, tie_policy: TiePolicy) -> Result<Self> {
        if calib.is_empty() {
            return Err(Error::EmptySample("calibration"));
        }
        if test.is_empty() {
            return Err(Error::EmptySample("test"));
        }
        for (set, values) in [("calib", &calib), ("test", &test)] {
            if let Some((index, value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidScore {
                    set,
                    index,
                    value: value.to_string(),
                });
            }
        }
        Ok(Self {
            calib,
            test,
            tie_policy,
        })
    }

    pub fn calib(&self) -> &[f64] {
        &self.calib
    }

    pub fn test(&self) -> &[f64] {
        &self.test
    }

    pub fn n(&self) -> usize {
        self.calib.len()
    }

    pub fn m(&self) -> usize {
        self.test.len()
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    /// Applies `f` to every score. Used to check invariance under increasing maps.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.calib.iter().map(|&x| f(x)).collect(),
            self.test.iter().map(|&x| f(x)).collect(),
            self.tie_policy,
        )
    }
}

/// Novelty indicators `h_i` (1 = novelty, 0 = null) for the test points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels(Vec<u8>);

impl Labels {
    pub fn new(h: Vec<u8>) -> Result<Self> {
        if let Some(bad) = h.iter().find(|&&v| v > 1) {
            return Err(Error::Config(format!("labels must be 0 or 1, got {bad}")));
        }
        Ok(Self(h))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.0[i] == 0
    }

    pub fn m0(&self) -> usize {
        self.0.iter().filter(|&&h| h == 0).count()
    }

    pub fn m1(&self) -> usize {
        self.len() - self.m0()
    }

    pub fn pi0(&self) -> f64 {
        self.m0() as f64 / self.len() as f64
    }
}

/// Conformal p-values with the decreasing-score ordering `σ`.
///
/// `sigma[k]` is the (0-based) test index with the `(k+1)`-th largest score;
/// `sorted_ranks[k]` is its rank, so p-values along `σ` are nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    n: usize,
    ranks: Vec<u64>,
    sigma: Vec<usize>,
    position: Vec<usize>,
    sorted_ranks: Vec<u64>,
    test_scores: Vec<f64>,
    ties_broken: bool,
}

impl PValueVector {
    fn assemble(
        n: usize,
        ranks: Vec<u64>,
        sigma: Vec<usize>,
        test_scores: Vec<f64>,
        ties_broken: bool,
    ) -> Self {
        let mut position = vec![0; sigma.len()];
        for (k, &i) in sigma.iter().enumerate() {
            position[i] = k;
        }
        let sorted_ranks = sigma.iter().map(|&i| ranks[i]).collect();
        Self {
            n,
            ranks,
            sigma,
            position,
            sorted_ranks,
            test_scores,
            ties_broken,
        }
    }

    /// Builds a vector directly from ranks already listed in `σ` order.
    ///
    /// `σ` is the identity and test scores are synthesised as `m, m-1, ..., 1`.
    pub fn from_sorted_ranks(n: usize, sorted_ranks: Vec<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySample("calibration"));
        }
        if sorted_ranks.is_empty() {
            return Err(Error::EmptySample("test"));
        }
        if sorted_ranks.iter().any(|&l| l == 0 || l > n as u64 + 1) {
            return Err(Error::Config(format!("ranks must lie in [1, {}]", n + 1)));
        }
        if sorted_ranks.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("ranks must be nondecreasing".into()));
        }
        let m = sorted_ranks.len();
        let scores = (0..m).map(|k| (m - k) as f64).collect();
        Ok(Self::assemble(
            n,
            sorted_ranks,
            (0..m).collect(),
            scores,
            false,
        ))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.ranks.len()
    }

    /// `l_i` for each test index, with `p_i = l_i/(n+1)`.
    pub fn ranks(&self) -> &[u64] {
        &self.ranks
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    /// Inverse of `σ`: position (0-based) of each test index in the ordering.
    pub fn position(&self) -> &[usize] {
        &self.position
    }

    /// Ranks along `σ`, i.e. `l_{σ(1)} <= ... <= l_{σ(m)}`.
    pub fn sorted_ranks(&self) -> &[u64] {
        &self.sorted_ranks
    }

    pub fn test_scores(&self) -> &[f64] {
        &self.test_scores
    }

    /// True when the input contained tied scores that were ordered by index.
    pub fn ties_broken(&self) -> bool {
        self.ties_broken
    }

    pub fn p_value(&self, i: usize) -> Rational {
        Rational::new(self.ranks[i] as i128, self.n as i128 + 1)
    }

    pub fn p_values_f64(&self) -> Vec<f64> {
        let denom = (self.n + 1) as f64;
        self.ranks.iter().map(|&l| l as f64 / denom).collect()
    }

    /// `l_{σ(k)}` with the convention `l_{σ(0)} = 0`; `k` is 1-based.
    pub fn rank_at(&self, k: usize) -> u64 {
        if k == 0 {
            0
        } else {
            self.sorted_ranks[k - 1]
        }
    }
}

fn cmp_scores(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).expect("scores are finite")
}

/// Computes conformal p-values in `O((n+m) log(n+m))`.
pub fn conformal_p_values(sample: &ScoreSample) -> Result<PValueVector> {
    let n = sample.n();
    let test = sample.test();

    let mut calib = sample.calib().to_vec();
    calib.sort_unstable_by(|a, b| cmp_scores(*a, *b));

    let mut sigma: Vec<usize> = (0..test.len()).collect();
    sigma.sort_by(|&a, &b| cmp_scores(test[b], test[a]).then(a.cmp(&b)));

    let calib_tie = calib.windows(2).any(|w| w[0] == w[1]);
    let test_tie = sigma.windows(2).any(|w| test[w[0]] == test[w[1]]);
    let cross_tie = test
        .iter()
        .any(|x| calib.binary_search_by(|c| cmp_scores(*c, *x)).is_ok());
    let has_ties = calib_tie || test_tie || cross_tie;
    if has_ties && sample.tie_policy() == TiePolicy::RejectInput {
        let which = [
            (calib_tie, "within calibration"),
            (test_tie, "within test"),
            (cross_tie, "between calibration and test"),
        ]
        .iter()
        .filter(|(hit, _)| *hit)
        .map(|(_, what)| *what)
        .collect::<Vec<_>>()
        .join("; ");
        return Err(Error::Ties(which));
    }

    let ranks = test
        .iter()
        .map(|&x| {
            let below = calib.partition_point(|&c| c < x);
            1 + (n - below) as u64
        })
        .collect();
    Ok(PValueVector::assemble(
        n,
        ranks,
        sigma,
        test.to_vec(),
        has_ties,
    ))
}

/// Shifted p-values `p_{σ(k)} + k/(n+1)` for `k = 0..=m`, starting at 0.
pub fn shifted_p_values(pv: &PValueVector) -> Vec<Rational> {
    let denom = pv.n() as i128 + 1;
    std::iter::once(Rational::zero())
        .chain(
            pv.sorted_ranks()
                .iter()
                .enumerate()
                .map(|(k, &l)| Rational::new(l as i128 + k as i128 + 1, denom)),
        )
        .collect()
}
