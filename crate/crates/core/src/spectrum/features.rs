use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::{fmt_real, write_csv_rows};

/// `n` samples by `d` features, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(DMatrix<f64>);

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "feature matrix must be at least 1x1, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite entry {v} at row {r}, column {c}"
            )));
        }
        Ok(Self(values))
    }

    /// Builds from a row-major slice.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(rows.len(), cols, &flat)
    }

    /// Wraps a matrix produced by arithmetic on already-validated inputs.
    /// Still rejects non-finite entries, which is how divergence surfaces.
    pub(crate) fn from_computed(values: DMatrix<f64>) -> Result<Self> {
        Self::new(values)
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column_means(&self) -> DVector<f64> {
        let n = self.0.nrows() as f64;
        DVector::from_iterator(self.0.ncols(), self.0.column_iter().map(|c| c.sum() / n))
    }

    /// Copy with every column shifted to zero mean.
    pub fn centered(&self) -> DMatrix<f64> {
        let means = self.column_means();
        let mut out = self.0.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(-means[j]);
        }
        out
    }

    /// Copy with every row scaled to unit l2 norm. Zero rows are rejected.
    pub fn row_normalized(&self) -> Result<DMatrix<f64>> {
        let mut out = self.0.clone();
        for i in 0..out.nrows() {
            let norm = out.row(i).norm();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!("row {i} has zero norm")));
            }
            out.row_mut(i).scale_mut(1.0 / norm);
        }
        Ok(out)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("row selection is empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.nrows()) {
            return Err(Error::Shape(format!(
                "row index {bad} out of range for {} rows",
                self.nrows()
            )));
        }
        Ok(Self(self.0.select_rows(indices)))
    }

    /// Reads a CSV with a header row of column names and one sample per line.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
            .map_err(|e| e.with_context(format!("reading {}", path.display())))
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let cols = rdr.headers()?.len();
        let mut flat = Vec::new();
        let mut rows = 0;
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != cols {
                return Err(Error::Shape(format!(
                    "data line {} has {} fields, header has {cols}",
                    line + 1,
                    record.len()
                )));
            }
            for field in record.iter() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidInput(format!("data line {}: `{field}` is not a real", line + 1))
                })?;
                flat.push(v);
            }
            rows += 1;
        }
        Self::from_row_slice(rows, cols, &flat)
    }

    /// Writes the matrix as CSV with columns `f0, f1, ...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header: Vec<String> = (0..self.ncols()).map(|j| format!("f{j}")).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = self
            .0
            .row_iter()
            .map(|r| r.iter().map(|&v| fmt_real(v)).collect())
            .collect();
        write_csv_rows(path, &header, &rows)
    }
}

impl TryFrom<DMatrix<f64>> for FeatureMatrix {
    type Error = Error;

    fn try_from(value: DMatrix<f64>) -> Result<Self> {
        Self::new(value)
    }
}
