//! Discretization, contingency tables and the G² conditional independence
//! test.

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnData, ColumnKind, Dataset, MISSING};
use crate::error::{Error, Result};
use crate::special;

/// Upper-tail chi-square probability.
pub fn chi_square_sf(x: f64, dof: usize) -> Result<f64> {
    special::chi_square_sf(x, dof as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discretized {
    pub codes: Vec<u32>,
    pub arity: usize,
    /// Fewer than two distinct values: everything landed in one category.
    pub degenerate: bool,
}

/// Equal-frequency binning. Cut points sit at the ceil(b·n/bins)-th order
/// statistic; values equal to a cut point go to the lower bin, so ties never
/// straddle bins and the arity may come out below `bins`. NaN cells map to
/// [`MISSING`].
pub fn discretize(values: &[f64], bins: usize) -> Result<Discretized> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("bins must be >= 2, got {bins}")));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if sorted.is_empty() {
        return Err(Error::EmptyColumn(String::new()));
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..bins)
        .map(|b| sorted[(b * n).div_ceil(bins) - 1])
        .filter(|&c| c < sorted[n - 1])
        .collect();
    cuts.dedup();
    let codes = values
        .iter()
        .map(|&v| {
            if v.is_nan() {
                MISSING
            } else {
                cuts.partition_point(|&c| c < v) as u32
            }
        })
        .collect();
    let arity = cuts.len() + 1;
    Ok(Discretized {
        codes,
        arity,
        degenerate: arity == 1,
    })
}

impl Dataset {
    /// Replaces every continuous column by its equal-frequency binning.
    /// Returns the new dataset and the names of columns that collapsed to a
    /// single category.
    pub fn discretized(&self, bins: usize) -> Result<(Dataset, Vec<String>)> {
        let mut degenerate = Vec::new();
        let cols = self
            .columns()
            .iter()
            .map(|c| match &c.data {
                ColumnData::Values(v) => {
                    let d = discretize(v, bins).map_err(|e| match e {
                        Error::EmptyColumn(_) => Error::EmptyColumn(c.name.clone()),
                        e => e,
                    })?;
                    if d.degenerate {
                        degenerate.push(c.name.clone());
                    }
                    Ok(Column::categorical(
                        c.name.clone(),
                        c.role,
                        d.codes,
                        (0..d.arity).map(|i| format!("bin{i}")).collect(),
                    ))
                }
                ColumnData::Codes { .. } => Ok(c.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((Dataset::new(cols)?, degenerate))
    }
}

/// Dense joint counts over (X, Y, Z1, ..., Zk) with X varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub dims: Vec<usize>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn from_codes(columns: &[(&[u32], usize)]) -> ContingencyTable {
        let dims: Vec<usize> = columns.iter().map(|c| c.1.max(1)).collect();
        let mut strides = Vec::with_capacity(dims.len());
        let mut s = 1usize;
        for &d in &dims {
            strides.push(s);
            s *= d;
        }
        let mut counts = vec![0u64; s];
        let n = columns.first().map_or(0, |c| c.0.len());
        match columns.len() {
            2 => {
                let (x, y) = (columns[0].0, columns[1].0);
                for r in 0..n {
                    counts[x[r] as usize + strides[1] * y[r] as usize] += 1;
                }
            }
            _ => {
                let mut idx = vec![0usize; n];
                for ((codes, _), &st) in columns.iter().zip(&strides) {
                    for (i, &c) in idx.iter_mut().zip(codes.iter()) {
                        *i += c as usize * st;
                    }
                }
                for i in idx {
                    counts[i] += 1;
                }
            }
        }
        ContingencyTable {
            dims,
            counts,
            total: n as u64,
        }
    }

    /// Cell count at a full index (x, y, z1, ...).
    pub fn get(&self, index: &[usize]) -> u64 {
        let mut flat = 0;
        let mut stride = 1;
        for (i, d) in index.iter().zip(&self.dims) {
            flat += i * stride;
            stride *= d;
        }
        self.counts[flat]
    }

    pub fn n_strata(&self) -> usize {
        self.dims[2..].iter().product()
    }

    /// G² statistic and the effective degrees of freedom (empty strata
    /// removed).
    pub fn g2(&self) -> (f64, usize) {
        let (dx, dy) = (self.dims[0], self.dims[1]);
        let cell = dx * dy;
        let per_stratum = (dx - 1) * (dy - 1);
        let mut stat = 0.0;
        let mut dof = 0usize;
        let mut row = vec![0u64; dx];
        let mut col = vec![0u64; dy];
        for s in 0..self.n_strata() {
            let slice = &self.counts[s * cell..(s + 1) * cell];
            let total: u64 = slice.iter().sum();
            if total == 0 {
                continue;
            }
            dof += per_stratum;
            row.iter_mut().for_each(|v| *v = 0);
            col.iter_mut().for_each(|v| *v = 0);
            for y in 0..dy {
                for x in 0..dx {
                    let o = slice[x + dx * y];
                    row[x] += o;
                    col[y] += o;
                }
            }
            let t = total as f64;
            for y in 0..dy {
                for x in 0..dx {
                    let o = slice[x + dx * y];
                    if o > 0 {
                        let o = o as f64;
                        let e = row[x] as f64 * col[y] as f64 / t;
                        stat += o * (o / e).ln();
                    }
                }
            }
        }
        ((2.0 * stat).max(0.0), dof)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CITestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub independent: bool,
    /// Sample-size heuristic `total >= 5 * dof` passed (and dof > 0).
    pub reliable: bool,
}

impl CITestResult {
    /// Evaluates a table. Unreliable tests, including those with zero
    /// degrees of freedom, report independence.
    pub fn from_table(table: &ContingencyTable, alpha: f64) -> CITestResult {
        let (statistic, dof) = table.g2();
        if dof == 0 {
            return CITestResult {
                statistic,
                dof,
                p_value: 1.0,
                independent: true,
                reliable: false,
            };
        }
        let p_value = chi_square_sf(statistic, dof).expect("dof > 0");
        let reliable = table.total >= 5 * dof as u64;
        CITestResult {
            statistic,
            dof,
            p_value,
            independent: !reliable || p_value > alpha,
            reliable,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be in (0,1), got {alpha}")))
    }
}

fn coded<'a>(data: &'a Dataset, name: &str) -> Result<(&'a [u32], usize)> {
    let col = data.column(name)?;
    if col.kind == ColumnKind::Continuous {
        return Err(Error::ContinuousColumn(name.to_string()));
    }
    if col.has_missing() {
        return Err(Error::MissingValues(name.to_string()));
    }
    Ok((col.codes().expect("coded"), col.arity().expect("coded")))
}

pub fn contingency<S: AsRef<str>>(
    data: &Dataset,
    x: &str,
    y: &str,
    z: &[S],
) -> Result<ContingencyTable> {
    let mut cols = vec![coded(data, x)?, coded(data, y)?];
    for name in z {
        cols.push(coded(data, name.as_ref())?);
    }
    Ok(ContingencyTable::from_codes(&cols))
}

/// G² test of X ⊥ Y | Z at level `alpha`.
pub fn g2_test<S: AsRef<str>>(
    data: &Dataset,
    x: &str,
    y: &str,
    z: &[S],
    alpha: f64,
) -> Result<CITestResult> {
    check_alpha(alpha)?;
    let table = contingency(data, x, y, z)?;
    Ok(CITestResult::from_table(&table, alpha))
}

/// Column-indexed view over an all-categorical dataset; the hot path for
/// structure learning.
#[derive(Debug, Clone)]
pub struct CodedData<'a> {
    columns: Vec<(&'a [u32], usize)>,
}

impl<'a> CodedData<'a> {
    pub fn new(data: &'a Dataset) -> Result<CodedData<'a>> {
        let columns = data
            .columns()
            .iter()
            .map(|c| coded(data, &c.name))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodedData { columns })
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> CITestResult {
        let mut cols = Vec::with_capacity(2 + z.len());
        cols.push(self.columns[x]);
        cols.push(self.columns[y]);
        cols.extend(z.iter().map(|&i| self.columns[i]));
        CITestResult::from_table(&ContingencyTable::from_codes(&cols), alpha)
    }
}
