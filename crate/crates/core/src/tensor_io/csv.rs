use std::path::Path;

use super::ActivationMatrix;
use crate::error::{Error, Result};

/// Reads a rectangular numeric CSV. A first row in which no cell parses as a
/// number is taken as the neuron labels.
pub fn read_csv(path: impl AsRef<Path>) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_csv(&text)?.with_source(path.display().to_string()))
}

pub fn parse_csv(text: &str) -> Result<ActivationMatrix> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut labels: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = idx + 1;
        if let Some(w) = width {
            if record.len() != w {
                return Err(Error::RaggedRows {
                    line,
                    expected: w,
                    found: record.len(),
                });
            }
        } else {
            width = Some(record.len());
            if idx == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
                labels = Some(record.iter().map(str::to_string).collect());
                continue;
            }
        }
        for cell in record.iter() {
            let v = cell.parse::<f64>().map_err(|_| Error::NonNumericCell {
                line,
                cell: cell.to_string(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    let m = ActivationMatrix::new(rows, cols, data)?;
    match labels {
        Some(l) => m.with_labels(l),
        None => Ok(m),
    }
}
