use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Reads the column named `column` from a headed CSV file.
fn read_column(path: &Path, column: &str) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .with_context(|| format!("{}: cannot read header", path.display()))?
        .clone();
    let Some(idx) = headers.iter().position(|h| h == column) else {
        bail!("{}: no `{column}` column in header", path.display());
    };
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.with_context(|| format!("{}: malformed row {}", path.display(), row + 2))?;
        let Some(value) = record.get(idx) else {
            bail!(
                "{}: row {} has no `{column}` field",
                path.display(),
                row + 2
            );
        };
        values.push(value.to_string());
    }
    Ok(values)
}

pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    read_column(path, "score")?
        .iter()
        .enumerate()
        .map(|(row, v)| {
            v.parse::<f64>().with_context(|| {
                format!("{}: row {}: `{v}` is not a number", path.display(), row + 2)
            })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    read_column(path, "label")?
        .iter()
        .enumerate()
        .map(|(row, v)| match v.as_str() {
            "0" => Ok(0),
            "1" => Ok(1),
            _ => bail!(
                "{}: row {}: label must be 0 or 1, got `{v}`",
                path.display(),
                row + 2
            ),
        })
        .collect()
}
