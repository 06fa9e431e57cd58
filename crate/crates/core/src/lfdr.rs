//! Local false discovery rate estimates on the conformal grid.
//!
//! Raw lfdr is `m` times the increment of the shifted p-values
//! `p~_(k) = p_{σ(k)} + k/(n+1)`. Its isotonic (PAVA) smoothing equals `m`
//! times the left slopes of the greatest convex minorant of
//! `{(k/m, p~_(k))}`. The Grenander estimate is computed separately from the
//! least concave majorant of the empirical cdf of the shifted values. Every
//! quantity is an exact rational.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::level::{Level, Rational};
use crate::procedures::{slc, slc_is_active};
use crate::pvalues::{shifted_p_values, PValueVector};

/// Pool-adjacent-violators with unit weights: the least-squares nondecreasing fit.
pub fn pava(values: &[Rational]) -> Vec<Rational> {
    // (sum, len) per block
    let mut blocks: Vec<(Rational, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (s1, l1) = blocks[blocks.len() - 1];
            let (s0, l0) = blocks[blocks.len() - 2];
            // mean0 > mean1  <=>  s0·l1 > s1·l0
            if s0 * Rational::from_integer(l1 as i128) > s1 * Rational::from_integer(l0 as i128) {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                *last = (s0 + s1, l0 + l1);
            } else {
                break;
            }
        }
    }
    blocks
        .into_iter()
        .flat_map(|(sum, len)| std::iter::repeat_n(sum / Rational::from_integer(len as i128), len))
        .collect()
}

/// `lfdr_raw(k) = m (p~_(k) - p~_(k-1))` for `k = 1..=m`.
pub fn lfdr_raw(pv: &PValueVector) -> Vec<Rational> {
    let m = Rational::from_integer(pv.m() as i128);
    shifted_p_values(pv)
        .windows(2)
        .map(|w| m * (w[1] - w[0]))
        .collect()
}

/// Isotonic lfdr: PAVA of the raw estimate.
pub fn lfdr_iso(pv: &PValueVector) -> Vec<Rational> {
    pava(&lfdr_raw(pv))
}

/// Greatest convex minorant of `k -> p~_(k)` evaluated at `k = 0..=m`.
pub fn gcm_from_iso(iso: &[Rational], m: usize) -> Vec<Rational> {
    let scale = Rational::from_integer(m as i128);
    let mut acc = Rational::zero();
    std::iter::once(Rational::zero())
        .chain(iso.iter().map(|&slope| {
            acc += slope / scale;
            acc
        }))
        .collect()
}

/// Vertices `(x, y)` of the least concave majorant of the points
/// `(x_k, k)`, `x_k = l_{σ(k)} + k` in grid units. Input must have strictly
/// increasing `x`.
fn upper_hull(points: &[(i128, i128)]) -> Vec<(i128, i128)> {
    let mut hull: Vec<(i128, i128)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let (x0, y0) = hull[hull.len() - 2];
            let (x1, y1) = hull[hull.len() - 1];
            // Drop the middle point when it lies on or below the chord.
            if (x1 - x0) * (p.1 - y0) - (y1 - y0) * (p.0 - x0) >= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Grenander pmf on the grid `j/(n+1)`, `j = 1..=m+n+1` (index `j - 1`).
///
/// The mass at a grid point is the left slope of the LCM of the empirical
/// cdf of the shifted p-values, times the grid spacing. It is nonincreasing
/// and sums to one; grid points beyond `p~_(m)` get zero.
pub fn grenander_pmf(pv: &PValueVector) -> Vec<Rational> {
    let m = pv.m() as i128;
    let grid_len = pv.m() + pv.n() + 1;
    let points: Vec<(i128, i128)> = std::iter::once((0, 0))
        .chain(
            pv.sorted_ranks()
                .iter()
                .enumerate()
                .map(|(idx, &l)| (l as i128 + idx as i128 + 1, idx as i128 + 1)),
        )
        .collect();
    let hull = upper_hull(&points);
    let mut pmf = vec![Rational::zero(); grid_len];
    for seg in hull.windows(2) {
        let ((xa, ya), (xb, yb)) = (seg[0], seg[1]);
        let mass = Rational::new(yb - ya, m * (xb - xa));
        for j in xa + 1..=xb {
            pmf[(j - 1) as usize] = mass;
        }
    }
    pmf
}

/// Grenander lfdr `(1/(n+1)) / g(p~_(k))` for `k = 1..=m`.
pub fn lfdr_gren_from_pmf(pv: &PValueVector, pmf: &[Rational]) -> Vec<Rational> {
    let spacing = Rational::new(1, pv.n() as i128 + 1);
    pv.sorted_ranks()
        .iter()
        .enumerate()
        .map(|(idx, &l)| {
            let j = l as usize + idx + 1;
            spacing / pmf[j - 1]
        })
        .collect()
}

pub fn lfdr_grenander(pv: &PValueVector) -> (Vec<Rational>, Vec<Rational>) {
    let pmf = grenander_pmf(pv);
    (lfdr_gren_from_pmf(pv, &pmf), pmf)
}

/// All lfdr curves for one p-value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LfdrCurve {
    /// `k = 0..=m`
    pub p_tilde: Vec<Rational>,
    /// `k = 1..=m`
    pub lfdr_raw: Vec<Rational>,
    pub lfdr_iso: Vec<Rational>,
    pub lfdr_gren: Vec<Rational>,
    /// GCM at `k = 0..=m`
    pub gcm: Vec<Rational>,
    /// Mass at grid point `j/(n+1)`, stored at index `j - 1`.
    pub grenander_pmf: Vec<Rational>,
}

impl LfdrCurve {
    pub fn compute(pv: &PValueVector) -> Self {
        let p_tilde = shifted_p_values(pv);
        let lfdr_raw = lfdr_raw(pv);
        let lfdr_iso = pava(&lfdr_raw);
        let gcm = gcm_from_iso(&lfdr_iso, pv.m());
        let (lfdr_gren, grenander_pmf) = lfdr_grenander(pv);
        Self {
            p_tilde,
            lfdr_raw,
            lfdr_iso,
            lfdr_gren,
            gcm,
            grenander_pmf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfdrKind {
    Iso,
    Gren,
}

fn check_precondition(pv: &PValueVector, alpha: Level) -> Result<()> {
    if !slc_is_active(alpha, pv.n(), pv.m()) {
        return Err(Error::Precondition(format!(
            "alpha/m = {}/{} must exceed 1/(n+1) = 1/{}",
            alpha,
            pv.m(),
            pv.n() + 1
        )));
    }
    Ok(())
}

/// `max{k in [0, m] : values(k) <= α}` with `values` indexed from `k = 1`.
fn last_at_most(values: &[Rational], alpha: Level) -> usize {
    let a = alpha.value();
    values
        .iter()
        .rposition(|&v| v <= a)
        .map_or(0, |idx| idx + 1)
}

/// SLC's rejection count read off an lfdr threshold.
pub fn slc_kmax_via_lfdr(pv: &PValueVector, alpha: Level, which: LfdrKind) -> Result<usize> {
    check_precondition(pv, alpha)?;
    Ok(match which {
        LfdrKind::Iso => last_at_most(&lfdr_iso(pv), alpha),
        LfdrKind::Gren => last_at_most(&lfdr_grenander(pv).0, alpha),
    })
}

/// Largest minimiser of `p~_(k) - αk/m`.
pub fn slc_kmax_shifted(pv: &PValueVector, alpha: Level) -> Result<usize> {
    check_precondition(pv, alpha)?;
    let slope = alpha.value() / Rational::from_integer(pv.m() as i128);
    let mut best = Rational::zero();
    let mut k_hat = 0;
    for (k, p) in shifted_p_values(pv).into_iter().enumerate().skip(1) {
        let value = p - slope * Rational::from_integer(k as i128);
        if value <= best {
            best = value;
            k_hat = k;
        }
    }
    Ok(k_hat)
}

/// SLC's `k̂` through its four representations: the conformal slope, the
/// shifted argmin, the isotonic threshold and the Grenander threshold.
pub fn slc_four_way(pv: &PValueVector, alpha: Level) -> Result<[usize; 4]> {
    check_precondition(pv, alpha)?;
    Ok([
        slc(pv, alpha).k_hat,
        slc_kmax_shifted(pv, alpha)?,
        slc_kmax_via_lfdr(pv, alpha, LfdrKind::Iso)?,
        slc_kmax_via_lfdr(pv, alpha, LfdrKind::Gren)?,
    ])
}
