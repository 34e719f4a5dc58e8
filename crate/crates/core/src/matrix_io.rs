//! Text serialization of coefficient matrices.
//!
//! Coefficient sets are stored as TOML arrays of tables named `a`, `b` and
//! (for two-sided runs) `c`. Each entry carries `rows`, `cols` and row-major
//! `re`/`im` arrays.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CSV writer with `\n` record terminators.
pub(crate) fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re,
            im,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Parse(format!(
                "matrix record {}x{} carries {} real and {} imaginary entries",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            Complex64::new(self.re[k], self.im[k])
        }))
    }

    pub fn to_matrices(records: &[Self]) -> Result<Vec<DMatrix<Complex64>>> {
        records.iter().map(Self::to_matrix).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub a: Vec<MatrixRecord>,
    #[serde(default)]
    pub b: Vec<MatrixRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<MatrixRecord>>,
}

impl CoefficientFile {
    pub fn from_matrices(
        a: &[DMatrix<Complex64>],
        b: &[DMatrix<Complex64>],
        c: Option<&[DMatrix<Complex64>]>,
    ) -> Self {
        let records = |ms: &[DMatrix<Complex64>]| ms.iter().map(MatrixRecord::from_matrix).collect();
        Self {
            a: records(a),
            b: records(b),
            c: c.map(records),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
