//! Turns dataset columns into a dense numeric design matrix.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, MISSING};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Binary,
    Continuous,
    /// One indicator per label, vocabulary frozen at fit time.
    Categorical { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub features: Vec<Feature>,
}

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Matrix {
        assert_eq!(data.len(), n_rows * n_cols, "matrix shape");
        Matrix {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        let n_cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::new(rows.len(), n_cols, data)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn take_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(idx.len(), self.n_cols, data)
    }
}

impl FeatureEncoder {
    /// Freezes the encoding of the named columns of `data`.
    pub fn fit<S: AsRef<str>>(data: &Dataset, names: &[S]) -> Result<FeatureEncoder> {
        let sel = data.select(names)?;
        let features = sel
            .columns()
            .iter()
            .map(|c| Feature {
                name: c.name.clone(),
                kind: match c.kind {
                    ColumnKind::Binary => FeatureKind::Binary,
                    ColumnKind::Continuous => FeatureKind::Continuous,
                    ColumnKind::Categorical => FeatureKind::Categorical {
                        labels: c.labels().unwrap_or(&[]).to_vec(),
                    },
                },
            })
            .collect();
        Ok(FeatureEncoder { features })
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Width of the encoded matrix.
    pub fn width(&self) -> usize {
        self.features
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Categorical { labels } => labels.len(),
                _ => 1,
            })
            .sum()
    }

    /// Encodes every row of `data`. Extra columns are ignored; any missing
    /// feature column is reported together with the others.
    pub fn transform(&self, data: &Dataset) -> Result<Matrix> {
        let missing: Vec<String> = self
            .features
            .iter()
            .filter(|f| !data.has_column(&f.name))
            .map(|f| f.name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingColumn(missing));
        }
        let n = data.n_rows();
        let w = self.width();
        let mut out = vec![0.0; n * w];
        let mut offset = 0;
        for f in &self.features {
            let col = data.column(&f.name)?;
            if col.has_missing() {
                return Err(Error::MissingValues(f.name.clone()));
            }
            match &f.kind {
                FeatureKind::Binary | FeatureKind::Continuous => {
                    for r in 0..n {
                        out[r * w + offset] = col.numeric(r);
                    }
                    offset += 1;
                }
                FeatureKind::Categorical { labels } => {
                    // map the column's own codes onto the frozen vocabulary
                    let own = col.labels().unwrap_or(&[]);
                    let map: Vec<Option<usize>> = own
                        .iter()
                        .map(|l| labels.iter().position(|k| k == l))
                        .collect();
                    let mut unseen = 0usize;
                    match col.codes() {
                        Some(codes) => {
                            for (r, &c) in codes.iter().enumerate() {
                                debug_assert_ne!(c, MISSING);
                                match map[c as usize] {
                                    Some(j) => out[r * w + offset + j] = 1.0,
                                    None => unseen += 1,
                                }
                            }
                        }
                        None => {
                            // continuous column where a categorical one was
                            // expected: match on the printed value
                            for r in 0..n {
                                let cell = col.cell(r);
                                match labels.iter().position(|k| *k == cell) {
                                    Some(j) => out[r * w + offset + j] = 1.0,
                                    None => unseen += 1,
                                }
                            }
                        }
                    }
                    if unseen > 0 {
                        log::warn!(
                            "{unseen} rows of `{}` hold categories unseen in training; encoded as all zeros",
                            f.name
                        );
                    }
                    offset += labels.len();
                }
            }
        }
        Ok(Matrix::new(n, w, out))
    }
}
