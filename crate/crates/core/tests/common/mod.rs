//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use boundfdr::{Level, Rational, ScoreSample, TiePolicy};
use rand::Rng;

/// `1 + #{j : calib_j >= x}` for every test score, by direct counting.
pub fn naive_ranks(calib: &[f64], test: &[f64]) -> Vec<u64> {
    test.iter()
        .map(|&x| 1 + calib.iter().filter(|&&c| c >= x).count() as u64)
        .collect()
}

/// Test indices by decreasing score, ties by smaller index, via selection.
pub fn naive_order(test: &[f64]) -> Vec<usize> {
    let mut left: Vec<usize> = (0..test.len()).collect();
    let mut order = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for pos in 1..left.len() {
            if test[left[pos]] > test[left[best]] {
                best = pos;
            }
        }
        order.push(left.remove(best));
    }
    order
}

/// Largest minimiser of `l_k/(n+1) - k·slope` by enumerating every `k` in rationals.
pub fn exhaustive_khat(sorted_ranks: &[u64], n: usize, slope: Rational, cap: Option<u64>) -> usize {
    let grid = Rational::from_integer(n as i128 + 1);
    let objective = |k: usize| -> Option<Rational> {
        if k == 0 {
            return Some(Rational::from_integer(0));
        }
        let l = sorted_ranks[k - 1];
        if cap.is_some_and(|c| sorted_ranks[..k].iter().any(|&x| x > c)) {
            return None;
        }
        Some(Rational::from_integer(l as i128) / grid - slope * Rational::from_integer(k as i128))
    };
    let values: Vec<(usize, Rational)> = (0..=sorted_ranks.len())
        .filter_map(|k| objective(k).map(|v| (k, v)))
        .collect();
    let min = values.iter().map(|(_, v)| *v).min().unwrap();
    values
        .iter()
        .filter(|(_, v)| *v == min)
        .map(|(k, _)| *k)
        .max()
        .unwrap()
}

/// `max{k : l_k/(n+1) <= αk/m}` by scanning all `k`.
pub fn exhaustive_bh(sorted_ranks: &[u64], n: usize, alpha: Level) -> usize {
    let m = sorted_ranks.len() as i128;
    (1..=sorted_ranks.len())
        .filter(|&k| {
            Rational::new(sorted_ranks[k - 1] as i128, n as i128 + 1)
                <= alpha.value() * Rational::new(k as i128, m)
        })
        .max()
        .unwrap_or(0)
}

pub fn slope(alpha: Level, m: usize) -> Rational {
    alpha.value() / Rational::from_integer(m as i128)
}

pub fn slc_slope(alpha: Level, n: usize, m: usize) -> Rational {
    let s = slope(alpha, m) - Rational::new(1, n as i128 + 1);
    if s > Rational::from_integer(0) {
        s
    } else {
        Rational::from_integer(0)
    }
}

/// Continuous scores: nulls U(0,1); a random share of test points shifted up by `shift`.
pub fn continuous_sample<R: Rng>(rng: &mut R, n: usize, m: usize, shift: f64) -> ScoreSample {
    let calib = (0..n).map(|_| rng.random::<f64>()).collect();
    let m1 = rng.random_range(0..=m);
    let test = (0..m)
        .map(|i| rng.random::<f64>() + if i < m1 { shift } else { 0.0 })
        .collect();
    ScoreSample::new(calib, test, TiePolicy::BreakByIndex).unwrap()
}

/// Integer-valued scores on `0..levels`, so ties of every kind are common.
pub fn grid_sample<R: Rng>(rng: &mut R, n: usize, m: usize, levels: u32) -> ScoreSample {
    let calib = (0..n)
        .map(|_| f64::from(rng.random_range(0..levels)))
        .collect();
    let test = (0..m)
        .map(|_| f64::from(rng.random_range(0..levels + 3)))
        .collect();
    ScoreSample::new(calib, test, TiePolicy::BreakByIndex).unwrap()
}

/// A level `j/100` drawn uniformly from `lo..=hi` hundredths.
pub fn random_level<R: Rng>(rng: &mut R, lo: i128, hi: i128) -> Level {
    Level::new(rng.random_range(lo..=hi), 100).unwrap()
}
