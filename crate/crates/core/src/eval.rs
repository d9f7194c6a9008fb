//! Evaluation: parent-set overlap, causal classification accuracy, Qini
//! coefficient and curve, paired t-test and k-fold splits.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{rank_by_effect, UpliftPrediction};
use crate::datagen::GroundTruth;
use crate::error::{Error, Result};
use crate::special::student_t_two_sided;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Overlap of a found set with the true set. An empty found set has
/// precision 1; an empty truth has recall 1.
pub fn prf<S: AsRef<str>>(found: &[S], truth: &[S]) -> PrfScore {
    let f: BTreeSet<&str> = found.iter().map(AsRef::as_ref).collect();
    let t: BTreeSet<&str> = truth.iter().map(AsRef::as_ref).collect();
    let hit = f.intersection(&t).count() as f64;
    let precision = if f.is_empty() { 1.0 } else { hit / f.len() as f64 };
    let recall = if t.is_empty() { 1.0 } else { hit / t.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrfScore {
        precision,
        recall,
        f1,
    }
}

/// Share of rows whose assignment matches `truth.effect > theta`.
pub fn causal_accuracy(preds: &[UpliftPrediction], truth: &GroundTruth, theta: f64) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch(preds.len(), truth.len()));
    }
    if preds.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let hits = preds
        .iter()
        .zip(&truth.rows)
        .filter(|(p, t)| p.assign == (t.effect > theta))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Running counts behind the Qini formula.
#[derive(Debug, Clone, Copy, Default)]
struct QiniCounts {
    y1t1: u64,
    y1t0: u64,
    t1: u64,
    t0: u64,
}

impl QiniCounts {
    fn add(&mut self, y: u8, t: u8) {
        match (y, t) {
            (1, 1) => {
                self.y1t1 += 1;
                self.t1 += 1;
            }
            (1, _) => {
                self.y1t0 += 1;
                self.t0 += 1;
            }
            (_, 1) => self.t1 += 1,
            _ => self.t0 += 1,
        }
    }

    fn value(&self) -> Option<f64> {
        (self.t0 > 0)
            .then(|| self.y1t1 as f64 - self.y1t0 as f64 * self.t1 as f64 / self.t0 as f64)
    }
}

fn check_binary(v: &[u8], what: &str) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(Error::NonBinary(what.to_string()));
    }
    Ok(())
}

/// `n(Y=1,T=1) - n(Y=1,T=0) * n(T=1) / n(T=0)` over the given rows.
pub fn qini_coefficient(outcomes: &[u8], treatments: &[u8]) -> Result<f64> {
    if outcomes.len() != treatments.len() {
        return Err(Error::LengthMismatch(outcomes.len(), treatments.len()));
    }
    check_binary(outcomes, "outcomes")?;
    check_binary(treatments, "treatments")?;
    let mut c = QiniCounts::default();
    for (&y, &t) in outcomes.iter().zip(treatments) {
        c.add(y, t);
    }
    c.value().ok_or(Error::EmptyControl)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QiniPoint {
    pub fraction: f64,
    /// `None` marks a gap: the slice had no control rows.
    pub uplift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiniCurve {
    pub points: Vec<QiniPoint>,
    /// Trapezoidal area between the curve and the line from (0,0) to the
    /// final point. Segments touching a gap are left out.
    pub coefficient_area: f64,
}

impl QiniCurve {
    pub fn n_gaps(&self) -> usize {
        self.points.iter().filter(|p| p.uplift.is_none()).count()
    }

    /// `fraction,uplift` rows; gaps have an empty uplift cell.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fraction", "uplift"])?;
        for p in &self.points {
            wr.write_record([
                p.fraction.to_string(),
                p.uplift.map(|u| u.to_string()).unwrap_or_default(),
            ])?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    /// Pointwise mean of curves sharing the same fractions. A point is a gap
    /// when every input curve has a gap there; otherwise gaps are skipped.
    pub fn mean(curves: &[QiniCurve]) -> Result<QiniCurve> {
        let first = curves.first().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
        let m = first.points.len();
        if let Some(c) = curves.iter().find(|c| c.points.len() != m) {
            return Err(Error::LengthMismatch(m, c.points.len()));
        }
        let points = (0..m)
            .map(|k| {
                let vals: Vec<f64> = curves.iter().filter_map(|c| c.points[k].uplift).collect();
                QiniPoint {
                    fraction: first.points[k].fraction,
                    uplift: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                }
            })
            .collect::<Vec<_>>();
        Ok(QiniCurve {
            coefficient_area: area(&points),
            points,
        })
    }
}

fn area(points: &[QiniPoint]) -> f64 {
    let last = points.last().and_then(|p| p.uplift).unwrap_or(0.0);
    let mut total = 0.0;
    for w in points.windows(2) {
        if let (Some(a), Some(b)) = (w[0].uplift, w[1].uplift) {
            let (x0, x1) = (w[0].fraction, w[1].fraction);
            let da = a - last * x0;
            let db = b - last * x1;
            total += 0.5 * (da + db) * (x1 - x0);
        }
    }
    total
}

/// Qini curve over `n_points` equal slices of the ranking by predicted
/// effect. The slice for point k holds the top `floor(k * n / n_points)`
/// rows. A point at fraction 0 with uplift 0 is prepended.
pub fn qini_curve(
    preds: &[UpliftPrediction],
    outcomes: &[u8],
    treatments: &[u8],
    n_points: usize,
) -> Result<QiniCurve> {
    let n = preds.len();
    if outcomes.len() != n {
        return Err(Error::LengthMismatch(n, outcomes.len()));
    }
    if treatments.len() != n {
        return Err(Error::LengthMismatch(n, treatments.len()));
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter("n_points must be >= 2".into()));
    }
    check_binary(outcomes, "outcomes")?;
    check_binary(treatments, "treatments")?;
    let order = rank_by_effect(preds);
    let mut points = vec![QiniPoint {
        fraction: 0.0,
        uplift: Some(0.0),
    }];
    let mut c = QiniCounts::default();
    let mut taken = 0;
    for k in 1..=n_points {
        let upto = k * n / n_points;
        for &i in &order[taken..upto] {
            c.add(outcomes[i], treatments[i]);
        }
        taken = upto;
        points.push(QiniPoint {
            fraction: k as f64 / n_points as f64,
            uplift: c.value(),
        });
    }
    if c.value().is_none() {
        return Err(Error::EmptyControl);
    }
    Ok(QiniCurve {
        coefficient_area: area(&points),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_stat: f64,
    pub p_value: f64,
    pub dof: usize,
    /// The differences had zero variance: t is 0 (all zero) or infinite.
    pub degenerate: bool,
}

/// Two-sided paired t-test of `a - b` against zero.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let dof = n - 1;
    // differences equal up to rounding count as constant
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if var.sqrt() <= 64.0 * f64::EPSILON * scale || var == 0.0 {
        let (t_stat, p_value) = if mean.abs() <= 64.0 * f64::EPSILON * scale {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(TTest {
            t_stat,
            p_value,
            dof,
            degenerate: true,
        });
    }
    let t_stat = mean / (var / n as f64).sqrt();
    Ok(TTest {
        t_stat,
        p_value: student_t_two_sided(t_stat, dof as f64),
        dof,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with `seed` and cuts it into `k` folds whose sizes
/// differ by at most one (the first `n % k` folds are larger). Indices in
/// each part are sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || k > n {
        return Err(Error::InvalidK { n, k });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut test = idx[start..start + len].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = idx[..start].iter().chain(&idx[start + len..]).copied().collect();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += len;
    }
    Ok(folds)
}
