//! End-to-end acceptance checks, one line of output per criterion.
//!
//! Run with `cargo test -p boundfdr --test acceptance`. The process exits
//! non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use boundfdr::lfdr::slc_four_way;
use boundfdr::montecarlo::{null_rate_by_rank, run_monte_carlo, SummaryRow};
use boundfdr::procedures::{asl, bh, sl, slc, storey_pi0, StoreyConfig};
use boundfdr::{
    conformal_p_values, GeneratorSpec, Level, Method, PValueVector, ProcedureSpec, Rational,
    SimulationConfig,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (u8, &'static str, fn() -> Check);

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
        }
    }

    fn record(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what);
        }
    }

    fn note(mut self, summary: String) -> Self {
        if self.pass {
            self.detail = summary;
        }
        self
    }

    fn within(mut self, elapsed: Duration, limit: Duration) -> Self {
        self.record(
            elapsed < limit,
            format!("took {elapsed:.2?}, limit {limit:?}"),
        );
        self
    }
}

fn lvl(s: &str) -> Level {
    s.parse().unwrap()
}

fn grid(values: &[&str]) -> Vec<Level> {
    values.iter().map(|s| lvl(s)).collect()
}

const ALPHA_GRID: [&str; 5] = ["0.1", "0.2", "0.3", "0.4", "0.5"];

/// Setting (a) at m = 500, n = 1000, π0 = 0.8.
fn scaled_a() -> GeneratorSpec {
    GeneratorSpec::uniform_shift(1000, 500, 400)
}

fn simulate(
    generator: GeneratorSpec,
    methods: Vec<ProcedureSpec>,
    alphas: Vec<Level>,
    trials: usize,
    seed: u64,
) -> Vec<SummaryRow> {
    let config = SimulationConfig {
        generator,
        methods,
        alphas,
        trials,
        seed,
    };
    run_monte_carlo(&config)
        .expect("valid simulation config")
        .rows
}

fn describe(rows: &[SummaryRow], value: impl Fn(&SummaryRow) -> f64) -> String {
    rows.iter()
        .map(|r| format!("{}@{}={:.4}", r.method, r.alpha, value(r)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn bfdr_at_most(check: &mut Check, row: &SummaryRow, bound: f64) {
    check.record(
        row.bfdr <= bound + 3.0 * row.bfdr_se,
        format!(
            "{} at {}: bfdr {:.4} > {:.4} + 3*{:.4}",
            row.method, row.alpha, row.bfdr, bound, row.bfdr_se
        ),
    );
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let rows = simulate(
        GeneratorSpec::counterexample(),
        vec![ProcedureSpec::new(Method::Sl)],
        grid(&["0.25", "0.4"]),
        10_000,
        1,
    );
    let elapsed = start.elapsed();
    let mut check = Check::new();
    let floor = 20.0 / 29.0;
    for r in &rows {
        let nominal = r.alpha.as_f64() * 20.0 / 40.0;
        check.record(
            r.bfdr >= floor - 3.0 * r.bfdr_se,
            format!("alpha {}: bfdr {:.4} below 20/29 - 3SE", r.alpha, r.bfdr),
        );
        check.record(
            r.bfdr > nominal,
            format!("alpha {}: bfdr {:.4} <= {nominal}", r.alpha, r.bfdr),
        );
    }
    check
        .note(format!(
            "SL bfdr {} (floor 20/29 = {floor:.4}) in {elapsed:.2?}",
            describe(&rows, |r| r.bfdr)
        ))
        .within(elapsed, Duration::from_secs(5))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut check = Check::new();
    let mut summary = Vec::new();
    for (generator, seed) in [(GeneratorSpec::counterexample(), 2), (scaled_a(), 3)] {
        let rows = simulate(
            generator,
            vec![ProcedureSpec::new(Method::Sl)],
            grid(&ALPHA_GRID),
            2000,
            seed,
        );
        let (n, m, m0) = (generator.n as f64, generator.m as f64, generator.m0 as f64);
        for r in &rows {
            bfdr_at_most(&mut check, r, r.alpha.as_f64() * m0 / m + m0 / (n + 1.0));
        }
        summary.push(format!(
            "n={}: {}",
            generator.n,
            describe(&rows, |r| r.bfdr)
        ));
    }
    let elapsed = start.elapsed();
    check
        .note(format!("SL bfdr {} in {elapsed:.2?}", summary.join(" | ")))
        .within(elapsed, Duration::from_secs(60))
}

fn criterion_3() -> Check {
    let generator = scaled_a();
    let pi0 = generator.pi0();
    let threshold = generator.m as f64 / (generator.n as f64 + 1.0);
    let slg_alphas: Vec<&str> = ALPHA_GRID
        .iter()
        .copied()
        .filter(|a| lvl(a).as_f64() >= threshold)
        .collect();
    let mut check = Check::new();
    check.record(
        !slg_alphas.is_empty(),
        "no alpha >= m/(n+1) on the grid".into(),
    );

    let rows = simulate(
        generator,
        vec![
            ProcedureSpec::new(Method::Slc),
            ProcedureSpec::new(Method::Aslc),
        ],
        grid(&ALPHA_GRID),
        2000,
        4,
    );
    let slg = simulate(
        generator,
        vec![ProcedureSpec::new(Method::Slg)],
        grid(&slg_alphas),
        2000,
        5,
    );
    for r in rows.iter().chain(&slg) {
        let a = r.alpha.as_f64();
        let bound = if r.method == "aslc" { a } else { pi0 * a };
        bfdr_at_most(&mut check, r, bound);
    }
    let all: Vec<SummaryRow> = rows.into_iter().chain(slg).collect();
    check.note(format!("bfdr {}", describe(&all, |r| r.bfdr)))
}

fn criterion_4() -> Check {
    let generator = GeneratorSpec::uniform_shift(400, 200, 160);
    let pi0 = generator.pi0();
    let methods = [
        Method::SlcPlus,
        Method::AslcPlus,
        Method::SlcPlusPlusHalf,
        Method::SlcPlusPlus,
    ]
    .map(|m| ProcedureSpec::new(m).with_s_min(20))
    .to_vec();
    let rows = simulate(generator, methods, grid(&ALPHA_GRID), 2000, 6);
    let mut check = Check::new();
    for r in &rows {
        let a = r.alpha.as_f64();
        let bound = match r.method.as_str() {
            "aslc+" => a,
            "slc++" => 2.0 * pi0 * a,
            _ => pi0 * a,
        };
        bfdr_at_most(&mut check, r, bound);
    }
    check.note(format!(
        "bfdr {} ; mean |R|/m {}",
        describe(&rows, |r| r.bfdr),
        describe(&rows, |r| r.mean_rej_frac)
    ))
}

fn criterion_5() -> Check {
    let generator = scaled_a();
    let rows = simulate(
        generator,
        vec![ProcedureSpec::new(Method::Bh)],
        grid(&ALPHA_GRID),
        2000,
        7,
    );
    let mut check = Check::new();
    for r in &rows {
        check.record(
            r.fdr <= generator.pi0() * r.alpha.as_f64() + 3.0 * r.fdr_se,
            format!("alpha {}: fdr {:.4} (se {:.4})", r.alpha, r.fdr, r.fdr_se),
        );
    }
    check.note(format!("BH fdr {}", describe(&rows, |r| r.fdr)))
}

/// `(n, m, α)` with `n in [20, 200]` and `m in [5, ⌊α(n+1)⌋ - 1]`.
fn four_way_dimensions<R: Rng>(rng: &mut R) -> (usize, usize, Level) {
    loop {
        let n = rng.random_range(20..=200usize);
        let alpha = random_level(rng, 5, 95);
        let top = alpha.floor_times(n as u64 + 1) as usize;
        if top >= 6 {
            return (n, rng.random_range(5..top), alpha);
        }
    }
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut check = Check::new();
    let mut nonzero = 0;
    for t in 0..1000 {
        let (n, m, alpha) = four_way_dimensions(&mut rng);
        let shift = rng.random_range(0.0..2.0);
        let pv = conformal_p_values(&continuous_sample(&mut rng, n, m, shift)).unwrap();
        match slc_four_way(&pv, alpha) {
            Ok(ks) => {
                nonzero += usize::from(ks[0] > 0);
                check.record(
                    ks.iter().all(|&k| k == ks[0]),
                    format!("instance {t}: {ks:?}"),
                );
            }
            Err(e) => check.record(false, format!("instance {t}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    check
        .note(format!(
            "1000 instances agree exactly ({nonzero} with k > 0) in {elapsed:.2?}"
        ))
        .within(elapsed, Duration::from_secs(5))
}

/// Largest minimiser of `l/(n+1) - slope·#{j : l_j <= l}` over `l in [0, top]`.
fn ell_hat(pv: &PValueVector, slope: Rational, top: u64) -> u64 {
    let grid = Rational::from_integer(pv.n() as i128 + 1);
    let value = |l: u64| {
        let count = pv.ranks().iter().filter(|&&r| r <= l).count() as i128;
        Rational::from_integer(l as i128) / grid - slope * Rational::from_integer(count)
    };
    let mut best = (0, value(0));
    for l in 1..=top {
        let v = value(l);
        if v <= best.1 {
            best = (l, v);
        }
    }
    best.0
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut check = Check::new();
    let (mut checked, mut checked_adaptive) = (0, 0);
    for t in 0..1000 {
        let n = rng.random_range(5..=200usize);
        let m = rng.random_range(1..=60usize);
        let alpha = random_level(&mut rng, 5, 95);
        let shift = rng.random_range(0.0..2.0);
        let pv = conformal_p_values(&continuous_sample(&mut rng, n, m, shift)).unwrap();

        let r = sl(&pv, alpha);
        if r.k_hat >= 1 {
            checked += 1;
            let l = ell_hat(&pv, slope(alpha, m), n as u64 + 1);
            let at_boundary = pv.ranks()[r.boundary_index.unwrap()];
            check.record(
                at_boundary == l,
                format!("instance {t}: p_boundary = {at_boundary}/(n+1), l_hat = {l}"),
            );
            check.record(
                l <= alpha.floor_times(n as u64 + 1),
                format!("instance {t}: l_hat = {l} > floor(alpha(n+1))"),
            );
        }

        let cfg = StoreyConfig::default_for(n);
        let a = asl(&pv, alpha, cfg).unwrap();
        if a.k_hat >= 1 {
            checked_adaptive += 1;
            let pi0 = storey_pi0(&pv, cfg).unwrap();
            let l = ell_hat(&pv, slope(alpha, m) / pi0, cfg.s0 as u64);
            let at_boundary = pv.ranks()[a.boundary_index.unwrap()];
            check.record(
                at_boundary == l,
                format!("instance {t} (adaptive): {at_boundary} vs {l}"),
            );
        }
    }
    check.record(
        checked >= 100,
        format!("only {checked} instances with k > 0"),
    );
    check.note(format!(
        "1000 instances, {checked} with SL k > 0 and {checked_adaptive} with ASL k > 0, all exact"
    ))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut check = Check::new();
    for t in 0..1000 {
        let (n, m) = (
            rng.random_range(1..=150usize),
            rng.random_range(1..=60usize),
        );
        let sample = mixed_sample(&mut rng, n, m, t % 2 == 0);
        let pv = conformal_p_values(&sample).unwrap();
        check.record(
            pv.ranks() == naive_ranks(sample.calib(), sample.test()).as_slice(),
            format!("p-value instance {t}"),
        );
    }

    let mut engineered_ties = 0;
    for t in 0..1000 {
        let n = rng.random_range(1..=150usize);
        let m = rng.random_range(1..=60usize);
        let engineered = t % 2 == 1;
        // α(n+1)/m = j integer puts every SL objective value on the 1/(n+1) grid.
        let j_max = n as i128 / m as i128;
        let alpha = if engineered && j_max >= 1 {
            let j = rng.random_range(1..=j_max);
            Level::new(j * m as i128, n as i128 + 1).unwrap()
        } else {
            random_level(&mut rng, 1, 99)
        };
        let sample = mixed_sample(&mut rng, n, m, t % 4 < 2);
        let pv = conformal_p_values(&sample).unwrap();
        let ranks = pv.sorted_ranks();
        let sl_slope = slope(alpha, m);
        if has_tied_minimum(ranks, n, sl_slope) {
            engineered_ties += 1;
        }
        let got = [
            sl(&pv, alpha).k_hat,
            slc(&pv, alpha).k_hat,
            bh(&pv, alpha).k_hat,
        ];
        let want = [
            exhaustive_khat(ranks, n, sl_slope, None),
            exhaustive_khat(ranks, n, slc_slope(alpha, n, m), None),
            exhaustive_bh(ranks, n, alpha),
        ];
        check.record(
            got == want,
            format!("procedure instance {t}: {got:?} vs {want:?}"),
        );
    }
    check.record(
        engineered_ties >= 50,
        format!("only {engineered_ties} instances with tied minima"),
    );
    check.note(format!(
        "1000 p-value instances and 1000 argmin instances exact; {engineered_ties} had several SL minimisers"
    ))
}

fn mixed_sample<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    continuous: bool,
) -> boundfdr::ScoreSample {
    if continuous {
        let shift = rng.random_range(0.0..2.0);
        continuous_sample(rng, n, m, shift)
    } else {
        let levels = rng.random_range(2..40);
        grid_sample(rng, n, m, levels)
    }
}

fn has_tied_minimum(ranks: &[u64], n: usize, slope: Rational) -> bool {
    let grid = Rational::from_integer(n as i128 + 1);
    let values: Vec<Rational> = std::iter::once(Rational::from_integer(0))
        .chain(ranks.iter().enumerate().map(|(k, &l)| {
            Rational::from_integer(l as i128) / grid - slope * Rational::from_integer(k as i128 + 1)
        }))
        .collect();
    let min = *values.iter().min().unwrap();
    values.iter().filter(|&&v| v == min).count() > 1
}

fn criterion_9() -> Check {
    let generator = GeneratorSpec::uniform_shift(100, 50, 40);
    let mut check = Check::new();
    let profile = null_rate_by_rank(&generator, 20_000, 11).unwrap();
    let mut worst = f64::INFINITY;
    for (k, (&step, &se)) in profile.step.iter().zip(&profile.step_se).enumerate() {
        let slack = step + 2.0 * se;
        worst = worst.min(slack);
        check.record(
            slack >= 0.0,
            format!("rank {} -> {}: step {step:.4}, se {se:.4}", k + 1, k + 2),
        );
    }

    let rows = simulate(
        generator,
        vec![ProcedureSpec::new(Method::Slc)],
        grid(&["0.5", "0.7", "0.9"]),
        20_000,
        12,
    );
    for r in &rows {
        let se = (r.fdr_se.powi(2) + r.bfdr_se.powi(2)).sqrt();
        check.record(
            r.fdr <= r.bfdr + 3.0 * se,
            format!(
                "alpha {}: fdr {:.4} > bfdr {:.4} + 3*{se:.4}",
                r.alpha, r.fdr, r.bfdr
            ),
        );
    }
    check.note(format!(
        "null rate by rank {:.3} -> {:.3}, min(step + 2SE) = {worst:.4}; SLC fdr {} vs bfdr {}",
        profile.null_rate[0],
        profile.null_rate[generator.m - 1],
        describe(&rows, |r| r.fdr),
        describe(&rows, |r| r.bfdr)
    ))
}

fn criterion_10() -> Check {
    let generator = scaled_a();
    let pi0 = generator.pi0();
    let small = ["0.1", "0.2", "0.3"];
    let mut check = Check::new();
    for a in small {
        check.record(
            lvl(a).as_f64() < generator.m as f64 / (generator.n as f64 + 1.0),
            format!("alpha {a} is not below m/(n+1)"),
        );
    }
    let rows = simulate(
        generator,
        vec![
            ProcedureSpec::new(Method::Slc),
            ProcedureSpec::new(Method::SlcPlus).with_s_min(20),
        ],
        grid(&small),
        2000,
        13,
    );
    for r in &rows {
        if r.method == "slc" {
            check.record(
                r.mean_rej_frac == 0.0,
                format!("SLC at {} rejects {:.4}", r.alpha, r.mean_rej_frac),
            );
        } else {
            check.record(
                r.mean_rej_frac > 0.0,
                format!("SLC+ at {} has no power", r.alpha),
            );
            bfdr_at_most(&mut check, r, pi0 * r.alpha.as_f64());
        }
    }
    check.note(format!(
        "mean |R|/m {} ; SLC+ bfdr {}",
        describe(&rows, |r| r.mean_rej_frac),
        describe(&rows[3..], |r| r.bfdr)
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "SL counterexample exceeds nominal bFDR", criterion_1),
        (2, "SL bFDR upper bound", criterion_2),
        (3, "SLC / ASLC / SLG bFDR control", criterion_3),
        (4, "subsampled bFDR control", criterion_4),
        (5, "BH FDR control", criterion_5),
        (6, "SLC four-way equivalence", criterion_6),
        (7, "SL boundary p-value correspondence", criterion_7),
        (8, "oracle equivalence", criterion_8),
        (9, "null rate monotone in rank, FDR <= bFDR", criterion_9),
        (10, "SLC+ power where SLC is empty", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let check = run();
        let tag = if check.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!check.pass);
        println!("criterion {id:>2} [{tag}] {name}: {}", check.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
