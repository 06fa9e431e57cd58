use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use boundfdr::level::to_f64;
use boundfdr::lfdr::slc_four_way;
use boundfdr::{conformal_p_values, Level, LfdrCurve, Rational, ScoreSample, TiePolicy};
use clap::Args;

use crate::input::read_scores;

#[derive(Args)]
pub struct LfdrArgs {
    #[arg(long)]
    calib: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Level used for the SLC equivalence footer.
    #[arg(long)]
    alpha: Level,
    #[arg(long)]
    output: PathBuf,
}

fn cell(values: &[Rational], idx: Option<usize>) -> String {
    idx.and_then(|i| values.get(i))
        .map(|v| to_f64(v).to_string())
        .unwrap_or_default()
}

pub fn run(args: LfdrArgs) -> Result<()> {
    let sample = ScoreSample::new(
        read_scores(&args.calib)?,
        read_scores(&args.test)?,
        TiePolicy::BreakByIndex,
    )?;
    let pv = conformal_p_values(&sample)?;
    let curve = LfdrCurve::compute(&pv);
    let sorted: Vec<Rational> = (1..=pv.m())
        .map(|k| Rational::new(pv.rank_at(k) as i128, pv.n() as i128 + 1))
        .collect();

    let file = File::create(&args.output)
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "k,p_sorted,p_tilde,lfdr_raw,lfdr_iso,lfdr_gren,gcm")?;
    for k in 0..=pv.m() {
        // Per-point columns are empty on the k = 0 anchor row.
        let point = k.checked_sub(1);
        writeln!(
            out,
            "{k},{},{},{},{},{},{}",
            cell(&sorted, point),
            cell(&curve.p_tilde, Some(k)),
            cell(&curve.lfdr_raw, point),
            cell(&curve.lfdr_iso, point),
            cell(&curve.lfdr_gren, point),
            cell(&curve.gcm, Some(k)),
        )?;
    }
    match slc_four_way(&pv, args.alpha) {
        Ok([slope, shifted, iso, gren]) => writeln!(
            out,
            "# slc_khat slope={slope} shifted={shifted} iso={iso} gren={gren}"
        )?,
        Err(boundfdr::Error::Precondition(why)) => writeln!(out, "# precondition unmet: {why}")?,
        Err(e) => return Err(e.into()),
    }
    out.flush()?;
    println!("{} rows written to {}", pv.m() + 1, args.output.display());
    Ok(())
}
