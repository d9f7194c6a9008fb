//! L2-penalized logistic regression fitted by Newton's method (IRLS).

use serde::{Deserialize, Serialize};

use super::encode::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub max_iterations: usize,
    /// Ridge penalty on the non-intercept weights.
    pub l2_penalty: f64,
    /// Stop once the largest parameter change falls below this.
    pub convergence_tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            max_iterations: 100,
            l2_penalty: 1e-3,
            convergence_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first, then one weight per encoded column.
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(beta: &[f64], row: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}

/// Penalized negative log-likelihood
/// `sum_i [softplus(z_i) - y_i z_i] + l2/2 * |beta[1..]|^2`.
pub fn objective(beta: &[f64], x: &Matrix, y: &[u8], l2: f64) -> f64 {
    let nll: f64 = (0..x.n_rows)
        .map(|i| {
            let z = linear(beta, x.row(i));
            softplus(z) - f64::from(y[i]) * z
        })
        .sum();
    nll + 0.5 * l2 * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Analytic gradient of [`objective`].
pub fn gradient(beta: &[f64], x: &Matrix, y: &[u8], l2: f64) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for i in 0..x.n_rows {
        let row = x.row(i);
        let r = sigmoid(linear(beta, row)) - f64::from(y[i]);
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    for (gj, b) in g[1..].iter_mut().zip(&beta[1..]) {
        *gj += l2 * b;
    }
    g
}

fn hessian(beta: &[f64], x: &Matrix, l2: f64) -> Vec<f64> {
    let p = beta.len();
    let mut h = vec![0.0; p * p];
    let mut aug = vec![1.0; p];
    for i in 0..x.n_rows {
        let row = x.row(i);
        aug[1..].copy_from_slice(row);
        let pi = sigmoid(linear(beta, row));
        let w = pi * (1.0 - pi);
        if w == 0.0 {
            continue;
        }
        for a in 0..p {
            let wa = w * aug[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..p {
                h[a * p + b] += wa * aug[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[a * p + b] = h[b * p + a];
        }
    }
    for j in 1..p {
        h[j * p + j] += l2;
    }
    h
}

/// Solves `h x = g` for symmetric positive definite `h` by Cholesky,
/// adding diagonal jitter if the factorization breaks down.
fn solve_spd(h: &[f64], g: &[f64]) -> Vec<f64> {
    let p = g.len();
    let mut jitter = 0.0;
    loop {
        if let Some(l) = cholesky(h, p, jitter) {
            let mut z = g.to_vec();
            for i in 0..p {
                for k in 0..i {
                    z[i] -= l[i * p + k] * z[k];
                }
                z[i] /= l[i * p + i];
            }
            for i in (0..p).rev() {
                for k in i + 1..p {
                    z[i] -= l[k * p + i] * z[k];
                }
                z[i] /= l[i * p + i];
            }
            return z;
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
    }
}

fn cholesky(h: &[f64], p: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = h[i * p + j];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Some(l)
}

/// Newton iterations with step halving whenever the objective would rise.
pub fn fit(x: &Matrix, y: &[u8], params: &LogisticParams) -> LogisticModel {
    let p = x.n_cols + 1;
    let mut beta = vec![0.0; p];
    let l2 = params.l2_penalty;
    let mut obj = objective(&beta, x, y, l2);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        let g = gradient(&beta, x, y, l2);
        let h = hessian(&beta, x, l2);
        let step = solve_spd(&h, &g);
        let mut scale = 1.0;
        let mut next: Vec<f64>;
        let mut next_obj;
        loop {
            next = beta.iter().zip(&step).map(|(b, s)| b - scale * s).collect();
            next_obj = objective(&next, x, y, l2);
            if next_obj <= obj || scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        let delta = beta
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = next;
        obj = next_obj;
        if delta < params.convergence_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("logistic regression stopped after {iterations} iterations without converging");
    }
    LogisticModel {
        weights: beta,
        iterations,
        converged,
    }
}

impl LogisticModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(linear(&self.weights, row))
    }
}
