//! Sparse datasets and the LIBSVM text format (`label idx:val ...`, 1-based).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows stored in compressed sparse row form with labels in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dimension: usize,
    labels: Vec<f64>,
    row_ptr: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from sparse rows of `(column, value)` pairs (0-based).
    pub fn from_sparse_rows(dimension: usize, rows: Vec<(f64, Vec<(usize, f64)>)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig("dataset needs at least one row".into()));
        }
        let mut ds = Dataset {
            dimension,
            labels: Vec::with_capacity(rows.len()),
            row_ptr: vec![0],
            columns: Vec::new(),
            values: Vec::new(),
        };
        for (i, (label, mut entries)) in rows.into_iter().enumerate() {
            if label != 1.0 && label != -1.0 {
                return Err(Error::InvalidConfig(format!("row {i}: label {label} not in {{-1, +1}}")));
            }
            entries.sort_by_key(|e| e.0);
            for w in entries.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidConfig(format!("row {i}: repeated feature {}", w[0].0 + 1)));
                }
            }
            for (c, v) in entries {
                if c >= dimension {
                    return Err(Error::IndexOutOfRange { index: c, pool: dimension });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidConfig(format!("row {i}: nonfinite feature value")));
                }
                ds.columns.push(c);
                ds.values.push(v);
            }
            ds.labels.push(label);
            ds.row_ptr.push(ds.columns.len());
        }
        Ok(ds)
    }

    /// Builds a dataset from dense rows.
    pub fn from_dense(rows: &[Vec<f64>], labels: &[f64]) -> Result<Self> {
        let dimension = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() || rows.iter().any(|r| r.len() != dimension) {
            return Err(Error::InvalidConfig("ragged dense dataset".into()));
        }
        let sparse = rows
            .iter()
            .zip(labels)
            .map(|(r, &l)| (l, r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect()))
            .collect();
        Self::from_sparse_rows(dimension, sparse)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.columns[a..b], &self.values[a..b])
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        let (c, v) = self.row(i);
        for (&j, &x) in c.iter().zip(v) {
            out[j] = x;
        }
        out
    }

    /// `x^T y_i`
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &y)| x[j] * y).sum()
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Result<Self> {
        let rows = (0..n.min(self.num_rows()))
            .map(|i| {
                let (c, v) = self.row(i);
                (self.labels[i], c.iter().copied().zip(v.iter().copied()).collect())
            })
            .collect();
        Self::from_sparse_rows(self.dimension, rows)
    }
}

fn parse_label(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad label '{token}'"),
    })?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 || v == 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::Parse {
            line,
            message: format!("label {token} is not one of -1, 0, +1"),
        })
    }
}

/// Parses LIBSVM text. Labels `0` map to `-1`. The dimension is the largest
/// index seen unless `dimension` is given.
pub fn parse_libsvm(text: &str, dimension: Option<usize>) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut max_index = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or(""), line)?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected index:value, got '{tok}'"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad index '{idx}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    message: "indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad value '{val}'"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: "nonfinite value".into(),
                });
            }
            if entries.iter().any(|&(c, _)| c == idx - 1) {
                return Err(Error::Parse {
                    line,
                    message: format!("index {idx} repeated"),
                });
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no data rows".into()));
    }
    let d = match dimension {
        Some(d) if d < max_index => {
            return Err(Error::Parse {
                line: 0,
                message: format!("index {max_index} exceeds the declared dimension {d}"),
            })
        }
        Some(d) => d,
        None => max_index,
    };
    Dataset::from_sparse_rows(d, rows)
}

pub fn load_libsvm(path: &Path, dimension: Option<usize>) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    parse_libsvm(&text, dimension)
}

/// LIBSVM text with shortest round-tripping decimals.
pub fn to_libsvm_string(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.num_rows() {
        out.push_str(if data.label(i) > 0.0 { "+1" } else { "-1" });
        let (c, v) = data.row(i);
        for (&j, &x) in c.iter().zip(v) {
            let _ = write!(out, " {}:{}", j + 1, x);
        }
        out.push('\n');
    }
    out
}

pub fn write_libsvm(data: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, to_libsvm_string(data)).map_err(|e| Error::io(path, e))
}
