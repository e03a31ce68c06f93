//! CSV ingestion. Header row required, comma-delimited, `.` decimal separator.

use super::{ColumnKind, ColumnLayout, ColumnSpec, SurvivalDataset};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use std::collections::BTreeSet;
use std::path::Path;

/// Column roles for a survival CSV: exactly one time column, one event
/// column, and a set of categorical columns. Every remaining column is
/// treated as numeric.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub time_col: String,
    pub event_col: String,
    pub categorical: Vec<String>,
}

impl CsvSchema {
    pub fn new(time_col: impl Into<String>, event_col: impl Into<String>) -> Self {
        Self {
            time_col: time_col.into(),
            event_col: event_col.into(),
            categorical: Vec::new(),
        }
    }

    pub fn with_categorical<I, S>(mut self, cols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.categorical = cols.into_iter().map(Into::into).collect();
        self
    }
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows })
}

fn column_index(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{cell}` is not a number"),
    })
}

fn parse_event(cell: &str, row: usize, column: &str) -> Result<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{cell}` is not a valid event flag (0, 1, true, false)"),
        }),
    }
}

/// Builds the encoding layout for a file: categorical levels are the distinct
/// values observed, in lexicographic order, so the layout is deterministic.
fn infer_layout(table: &RawTable, schema: &CsvSchema) -> Result<ColumnLayout> {
    let time_idx = column_index(&table.header, &schema.time_col)?;
    let event_idx = column_index(&table.header, &schema.event_col)?;
    if time_idx == event_idx {
        return Err(Error::Schema("time and event columns must differ".into()));
    }
    for cat in &schema.categorical {
        let idx = column_index(&table.header, cat)?;
        if idx == time_idx || idx == event_idx {
            return Err(Error::Schema(format!(
                "column `{cat}` cannot be both categorical and time/event"
            )));
        }
    }

    let mut columns = Vec::new();
    for (idx, name) in table.header.iter().enumerate() {
        if idx == time_idx || idx == event_idx {
            continue;
        }
        if schema.categorical.iter().any(|c| c == name) {
            let levels: BTreeSet<String> = table.rows.iter().map(|row| row[idx].clone()).collect();
            columns.push(ColumnSpec {
                name: name.clone(),
                kind: ColumnKind::Categorical {
                    levels: levels.into_iter().collect(),
                },
            });
        } else {
            columns.push(ColumnSpec {
                name: name.clone(),
                kind: ColumnKind::Numeric,
            });
        }
    }
    Ok(ColumnLayout {
        time_col: schema.time_col.clone(),
        event_col: schema.event_col.clone(),
        columns,
    })
}

fn encode(table: &RawTable, layout: &ColumnLayout) -> Result<(SurvivalDataset, usize)> {
    let time_idx = column_index(&table.header, &layout.time_col)?;
    let event_idx = column_index(&table.header, &layout.event_col)?;
    let col_indices: Vec<usize> = layout
        .columns
        .iter()
        .map(|c| column_index(&table.header, &c.name))
        .collect::<Result<_>>()?;

    let n = table.rows.len();
    let d = layout.encoded_dim();
    let mut features = Array2::zeros((n, d));
    let mut times = Array1::zeros(n);
    let mut events = Vec::with_capacity(n);
    let mut unseen_levels = 0usize;

    for (r, row) in table.rows.iter().enumerate() {
        let row_no = r + 1;
        if row.len() != table.header.len() {
            return Err(Error::Parse {
                row: row_no,
                column: String::new(),
                message: format!("expected {} fields, got {}", table.header.len(), row.len()),
            });
        }
        let t = parse_number(&row[time_idx], row_no, &layout.time_col)?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Validation(format!(
                "time must be >= 0, got {t} in row {row_no}"
            )));
        }
        times[r] = t;
        events.push(parse_event(&row[event_idx], row_no, &layout.event_col)?);

        let mut out = 0usize;
        for (spec, &src) in layout.columns.iter().zip(&col_indices) {
            match &spec.kind {
                ColumnKind::Numeric => {
                    features[[r, out]] = parse_number(&row[src], row_no, &spec.name)?;
                    out += 1;
                }
                ColumnKind::Categorical { levels } => {
                    match levels.iter().position(|l| l == &row[src]) {
                        Some(hit) => features[[r, out + hit]] = 1.0,
                        // Level absent from the training layout: the whole
                        // block stays zero.
                        None => {
                            unseen_levels += 1;
                            log::warn!(
                                "row {row_no}: unseen level `{}` in column `{}`; one-hot block left at zero",
                                row[src],
                                spec.name
                            );
                        }
                    }
                    out += levels.len();
                }
            }
        }
    }

    let ds = SurvivalDataset::new(features, times, events, layout.feature_names())?
        .with_layout(layout.clone());
    Ok((ds, unseen_levels))
}

/// Loads a survival CSV, inferring categorical levels from the file itself.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SurvivalDataset> {
    let table = read_table(path.as_ref())?;
    let layout = infer_layout(&table, schema)?;
    let (ds, _) = encode(&table, &layout)?;
    Ok(ds)
}

/// Loads a survival CSV into the feature space of an existing layout
/// (typically captured from the training file). Returns the dataset and the
/// number of cells whose categorical level was not present in the layout;
/// those cells encode as an all-zero one-hot block.
pub fn load_csv_with_layout(
    path: impl AsRef<Path>,
    layout: &ColumnLayout,
) -> Result<(SurvivalDataset, usize)> {
    let table = read_table(path.as_ref())?;
    encode(&table, layout)
}

/// Writes a dataset back out as a CSV with one column per encoded feature
/// plus `time` and `event` columns.
pub fn write_csv(ds: &SurvivalDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = ds.feature_names().to_vec();
    header.push("time".into());
    header.push("event".into());
    writer.write_record(&header)?;
    for i in 0..ds.len() {
        let mut row: Vec<String> = ds.feature_row(i).iter().map(|v| format!("{v}")).collect();
        row.push(format!("{}", ds.times()[i]));
        row.push(if ds.events()[i] { "1".into() } else { "0".into() });
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
