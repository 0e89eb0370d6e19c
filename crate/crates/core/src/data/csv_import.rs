use std::path::Path;

use super::trial::Trial;
use crate::error::{Error, Result};

/// Reads one trial from a CSV file: a header row of channel names, then one
/// row per time step with a column per channel.
pub fn import_csv_trial(
    path: impl AsRef<Path>,
    id: &str,
    subject: &str,
    label: usize,
    sample_rate_hz: f64,
) -> Result<(Vec<String>, Trial)> {
    let path = path.as_ref();
    let format = |detail: String| Error::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format(e.to_string()))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f32>> = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format(e.to_string()))?;
        for (c, field) in record.iter().enumerate() {
            let v: f32 = field
                .parse()
                .map_err(|_| format(format!("row {} column {}: {field:?} is not a number", row + 2, c + 1)))?;
            if !v.is_finite() {
                return Err(format(format!("row {} column {}: non-finite value", row + 2, c + 1)));
            }
            columns[c].push(v);
        }
    }
    let samples: Vec<f32> = columns.into_iter().flatten().collect();
    let trial = Trial::new(id, subject, label, sample_rate_hz, names.len(), samples).map_err(|e| format(e.to_string()))?;
    Ok((names, trial))
}
