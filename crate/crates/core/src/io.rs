//! CSV ingestion and emission.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::{ClassLabel, Dataset};
use crate::error::{FinderError, Result};

/// Raw table: numeric feature columns plus the label column as text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub values: DMatrix<f64>,
    pub missing_mask: DMatrix<bool>,
    pub feature_names: Vec<String>,
    pub label_column: String,
    pub labels: Vec<String>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Distinct labels in order of first appearance.
    pub fn distinct_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in &self.labels {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }

    /// Two-class dataset: rows labeled `positive` become class B, rows
    /// labeled `negative` class A. With no `negative`, the remaining label
    /// must be unique. Rows with other labels are dropped.
    pub fn to_dataset(&self, positive: &str, negative: Option<&str>) -> Result<Dataset> {
        let distinct = self.distinct_labels();
        if !distinct.iter().any(|l| l == positive) {
            return Err(FinderError::InvalidParameter(format!(
                "positive label '{positive}' does not occur in column '{}'",
                self.label_column
            )));
        }
        let negative = match negative {
            Some(n) => {
                if !distinct.iter().any(|l| l == n) {
                    return Err(FinderError::InvalidParameter(format!(
                        "negative label '{n}' does not occur in column '{}'",
                        self.label_column
                    )));
                }
                n.to_string()
            }
            None => {
                let others: Vec<&String> = distinct.iter().filter(|l| *l != positive).collect();
                match others.as_slice() {
                    [only] => (*only).clone(),
                    [] => return Err(FinderError::SingleClass),
                    _ => {
                        return Err(FinderError::InvalidParameter(format!(
                            "column '{}' has {} labels; set negative_label",
                            self.label_column,
                            distinct.len()
                        )))
                    }
                }
            }
        };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if l == positive {
                rows.push(i);
                labels.push(ClassLabel::B);
            } else if *l == negative {
                rows.push(i);
                labels.push(ClassLabel::A);
            }
        }
        Dataset::from_parts(
            self.values.select_rows(&rows),
            Some(labels),
            self.feature_names.clone(),
            self.missing_mask.select_rows(&rows),
        )
    }

    /// Replaces the numeric part after imputation.
    pub fn with_values(&self, values: DMatrix<f64>) -> Self {
        let (n, f) = values.shape();
        Self {
            values,
            missing_mask: DMatrix::from_element(n, f, false),
            ..self.clone()
        }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("nan")
}

/// Reads a headed CSV. Empty cells and `NaN` (any case) are missing; the
/// label column must be filled on every row. Lines starting with `#` are
/// comments.
pub fn read_table<R: Read>(reader: R, label_column: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            FinderError::Format(format!("label column '{label_column}' not found in header"))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let f = feature_names.len();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != headers.len() {
            return Err(FinderError::Format(format!(
                "row {row}: expected {} cells, found {}",
                headers.len(),
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                if cell.trim().is_empty() {
                    return Err(FinderError::MissingLabel { row });
                }
                labels.push(cell.trim().to_string());
            } else if is_missing(cell) {
                values.push(0.0);
                mask.push(true);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| FinderError::Parse {
                    row,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(FinderError::Parse {
                        row,
                        column: headers[j].clone(),
                        value: cell.to_string(),
                    });
                }
                values.push(v);
                mask.push(false);
            }
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(FinderError::Empty("CSV has no data rows"));
    }
    if f == 0 {
        return Err(FinderError::Empty("CSV has no feature columns"));
    }
    Ok(Table {
        values: DMatrix::from_row_slice(n, f, &values),
        missing_mask: DMatrix::from_row_slice(n, f, &mask),
        feature_names,
        label_column: label_column.to_string(),
        labels,
    })
}

pub fn load_table(path: &Path, label_column: &str) -> Result<Table> {
    let file = std::fs::File::open(path)?;
    read_table(std::io::BufReader::new(file), label_column)
}

/// Loads a two-class CSV where `B` is the positive label and every other
/// row is class A.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let table = load_table(path, label_column)?;
    table.to_dataset("B", None)
}

/// Writes a table with the label column last. Values use the shortest
/// representation that parses back to the same bits; missing cells are
/// left empty.
pub fn write_table<W: Write>(writer: W, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = table.feature_names.clone();
    header.push(table.label_column.clone());
    w.write_record(&header)?;
    for i in 0..table.n_rows() {
        let mut rec: Vec<String> = (0..table.values.ncols())
            .map(|j| {
                if table.missing_mask[(i, j)] {
                    String::new()
                } else {
                    table.values[(i, j)].to_string()
                }
            })
            .collect();
        rec.push(table.labels[i].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Labeled dataset to table, with labels written as `A` / `B`.
pub fn dataset_table(data: &Dataset, label_column: &str) -> Result<Table> {
    let labels = data
        .labels
        .as_ref()
        .ok_or(FinderError::Empty("dataset is unlabeled"))?
        .iter()
        .map(|l| match l {
            ClassLabel::A => "A".to_string(),
            ClassLabel::B => "B".to_string(),
        })
        .collect();
    Ok(Table {
        values: data.values.clone(),
        missing_mask: data.missing_mask.clone(),
        feature_names: data.feature_names.clone(),
        label_column: label_column.to_string(),
        labels,
    })
}

pub fn write_csv(path: &Path, data: &Dataset, label_column: &str) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_table(
        std::io::BufWriter::new(file),
        &dataset_table(data, label_column)?,
    )
}

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
