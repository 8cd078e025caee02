//! Numeric tabular data: a dense row-major matrix, the [`Dataset`] with named
//! columns and a target, CSV input/output, and index views used to address
//! training and test rows without copying.

use std::borrow::Cow;
use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidShape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Overwrite column `j` with `value` in every row.
    pub fn fill_column(&mut self, j: usize, value: f64) {
        for i in 0..self.rows {
            self.set(i, j, value);
        }
    }

    /// Overwrite column `j` with `values`.
    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Immutable numeric dataset with named features and a target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    feature_names: Vec<String>,
    target: Vec<f64>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        feature_names: Vec<String>,
        target: Vec<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let target_name = target_name.into();
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::InvalidShape("dataset needs n >= 1 and p >= 1".into()));
        }
        if features.rows() != target.len() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: target.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::InvalidShape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        let mut seen = HashSet::new();
        for name in feature_names.iter().chain(std::iter::once(&target_name)) {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let p = features.cols();
        for (k, v) in features.as_slice().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: k / p,
                    col: k % p,
                });
            }
        }
        for (i, v) in target.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: i, col: p });
            }
        }
        Ok(Self {
            features,
            feature_names,
            target,
            target_name,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.target.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn check_feature(&self, feature: usize) -> Result<()> {
        if feature < self.p() {
            Ok(())
        } else {
            Err(Error::InvalidFeature {
                index: feature,
                p: self.p(),
            })
        }
    }

    /// Row-selection view. Duplicate indices are kept.
    pub fn view<'a>(&'a self, indices: impl Into<Cow<'a, [usize]>>) -> Result<IndexView<'a>> {
        let indices = indices.into();
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::IndexOutOfBounds {
                index: bad,
                len: self.n(),
            });
        }
        Ok(IndexView {
            base: self,
            indices,
        })
    }

    pub fn view_all(&self) -> IndexView<'_> {
        IndexView {
            base: self,
            indices: Cow::Owned((0..self.n()).collect()),
        }
    }

    /// Concatenate datasets with identical column names.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidShape("nothing to concatenate".into()))?;
        let p = first.p();
        let mut data = Vec::new();
        let mut target = Vec::new();
        for d in parts {
            if d.feature_names != first.feature_names || d.target_name != first.target_name {
                return Err(Error::InvalidShape("column names differ".into()));
            }
            data.extend_from_slice(d.features.as_slice());
            target.extend_from_slice(&d.target);
        }
        let rows = target.len();
        Dataset::new(
            Matrix::new(rows, p, data)?,
            first.feature_names.clone(),
            target,
            first.target_name.clone(),
        )
    }

    /// Load a delimited file with a header row. The delimiter is `;` when the
    /// header line contains `;` but no `,`, otherwise `,`. The target column
    /// is removed from the features; remaining columns keep header order.
    pub fn load_csv(path: impl AsRef<Path>, target_name: &str) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file, target_name)
    }

    pub fn read_csv<R: Read>(mut reader: R, target_name: &str) -> Result<Dataset> {
        let mut text = Vec::new();
        reader.read_to_end(&mut text).map_err(|e| Error::Csv(e.to_string()))?;
        let first = text.split(|&b| b == b'\n').next().unwrap_or_default();
        let delimiter = if first.contains(&b';') && !first.contains(&b',') { b';' } else { b',' };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_reader(text.as_slice());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::EmptyFile);
        }
        let target_col = header
            .iter()
            .position(|h| h == target_name)
            .ok_or_else(|| Error::MissingTarget(target_name.to_owned()))?;
        let feature_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != target_col)
            .map(|(_, h)| h.clone())
            .collect();

        let mut data = Vec::new();
        let mut target = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            if record.len() != header.len() {
                return Err(Error::Csv(format!(
                    "row {row} has {} fields, header has {}",
                    record.len(),
                    header.len()
                )));
            }
            for (col, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::ParseError {
                    row,
                    col,
                    value: cell.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
                if col == target_col {
                    target.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        if target.is_empty() {
            return Err(Error::EmptyFile);
        }
        let rows = target.len();
        let features = Matrix::new(rows, feature_names.len(), data)?;
        Dataset::new(features, feature_names, target, target_name)
    }

    /// Write features followed by the target column. Values are written in
    /// shortest round-trip form, so reloading yields identical bits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.target_name);
        w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|&v| fmt_f64(v)).collect();
            rec.push(fmt_f64(self.target[i]));
            w.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Rows of a [`Dataset`] selected by index. Indices may repeat.
#[derive(Debug, Clone)]
pub struct IndexView<'a> {
    base: &'a Dataset,
    indices: Cow<'a, [usize]>,
}

impl<'a> IndexView<'a> {
    pub fn base(&self) -> &'a Dataset {
        self.base
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn row(&self, k: usize) -> &'a [f64] {
        self.base.features.row(self.indices[k])
    }

    #[inline]
    pub fn target_at(&self, k: usize) -> f64 {
        self.base.target[self.indices[k]]
    }

    pub fn features(&self) -> Matrix {
        let p = self.base.p();
        let mut data = Vec::with_capacity(self.len() * p);
        for &i in self.indices.iter() {
            data.extend_from_slice(self.base.features.row(i));
        }
        Matrix {
            rows: self.len(),
            cols: p,
            data,
        }
    }

    pub fn targets(&self) -> Vec<f64> {
        self.indices.iter().map(|&i| self.base.target[i]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.indices.iter().map(|&i| self.base.features.get(i, j)).collect()
    }

    pub fn distinct_count(&self) -> usize {
        self.indices.iter().collect::<HashSet<_>>().len()
    }

    /// Copy the selected rows, in order, into a new dataset.
    pub fn materialize(&self) -> Result<Dataset> {
        if self.is_empty() {
            return Err(Error::InvalidShape("cannot materialize an empty view".into()));
        }
        Ok(Dataset {
            features: self.features(),
            feature_names: self.base.feature_names.clone(),
            target: self.targets(),
            target_name: self.base.target_name.clone(),
        })
    }
}
