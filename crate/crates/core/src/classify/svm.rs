//! One-vs-rest support vector machine trained by SMO with second-order
//! working-set selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IrisError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: Kernel::Linear,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    /// `y_i α_i` per training sample.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    /// Sorted distinct labels; `machines[k]` separates `classes[k]` from the rest.
    pub classes: Vec<usize>,
    pub machines: Vec<BinarySvm>,
    /// Training samples with a nonzero coefficient in some machine.
    pub support: Vec<Vec<f64>>,
    support_coef: Vec<Vec<f64>>,
}

const TAU: f64 = 1e-12;
const MAX_ITER: usize = 10_000_000;

/// Binary SMO on a precomputed kernel matrix with labels `y ∈ {−1, +1}`.
fn smo(k: &[Vec<f64>], y: &[f64], c: f64, tol: f64) -> BinarySvm {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    while iterations < MAX_ITER.max(100 * n) {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if y[t] > 0.0 {
                if !upper(alpha[t]) && -g[t] >= gmax {
                    gmax = -g[t];
                    i = t;
                }
            } else if !lower(alpha[t]) && g[t] >= gmax {
                gmax = g[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let quad = k[i][i] + k[t][t] - 2.0 * k[i][t];
            let quad = if quad > 0.0 { quad } else { TAU };
            if y[t] > 0.0 {
                if !lower(alpha[t]) {
                    let diff = gmax + g[t];
                    gmax2 = gmax2.max(g[t]);
                    if diff > 0.0 && -(diff * diff) / quad <= best {
                        best = -(diff * diff) / quad;
                        j = t;
                    }
                }
            } else if !upper(alpha[t]) {
                let diff = gmax - g[t];
                gmax2 = gmax2.max(-g[t]);
                if diff > 0.0 && -(diff * diff) / quad <= best {
                    best = -(diff * diff) / quad;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            break;
        }
        iterations += 1;

        let qij = y[i] * y[j] * k[i][j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = k[i][i] + k[j][j] + 2.0 * qij;
            let delta = (-g[i] - g[j]) / if quad > 0.0 { quad } else { TAU };
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = k[i][i] + k[j][j] - 2.0 * qij;
            let delta = (g[i] - g[j]) / if quad > 0.0 { quad } else { TAU };
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += y[t] * (y[i] * k[t][i] * di + y[j] * k[t][j] * dj);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * g[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    BinarySvm {
        coef: alpha.iter().zip(y).map(|(a, y)| a * y).collect(),
        rho,
        iterations,
    }
}

/// Gram matrix `K[i][j] = kernel(x_i, x_j)`.
pub fn gram(x: &[Vec<f64>], kernel: Kernel) -> Vec<Vec<f64>> {
    (0..x.len())
        .into_par_iter()
        .map(|i| x.iter().map(|xj| kernel.eval(&x[i], xj)).collect())
        .collect()
}

pub fn svm_train(x: &[Vec<f64>], labels: &[usize], params: &SvmParams) -> Result<SvmModel> {
    if x.len() != labels.len() {
        return Err(IrisError::DimMismatch(format!(
            "{} samples, {} labels",
            x.len(),
            labels.len()
        )));
    }
    let d = x.first().map_or(0, Vec::len);
    if x.iter().any(|v| v.len() != d) {
        return Err(IrisError::DimMismatch(
            "training vectors differ in length".into(),
        ));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(IrisError::DegenerateLabels(format!(
            "{} distinct class(es)",
            classes.len()
        )));
    }
    if !(params.c > 0.0) {
        return Err(IrisError::InvalidArgument(format!(
            "C = {} must be positive",
            params.c
        )));
    }
    let k = gram(x, params.kernel);
    let machines: Vec<BinarySvm> = classes
        .iter()
        .map(|&cls| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == cls { 1.0 } else { -1.0 })
                .collect();
            smo(&k, &y, params.c, params.tol)
        })
        .collect();
    let keep: Vec<usize> = (0..x.len())
        .filter(|&i| machines.iter().any(|m| m.coef[i] != 0.0))
        .collect();
    Ok(SvmModel {
        kernel: params.kernel,
        support: keep.iter().map(|&i| x[i].clone()).collect(),
        support_coef: machines
            .iter()
            .map(|m| keep.iter().map(|&i| m.coef[i]).collect())
            .collect(),
        classes,
        machines,
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    /// One-vs-rest decision values, in `classes` order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.support.is_empty() && x.len() != self.dim() {
            return Err(IrisError::DimMismatch(format!(
                "input of {} for a model over {} dims",
                x.len(),
                self.dim()
            )));
        }
        let kx: Vec<f64> = self
            .support
            .iter()
            .map(|s| self.kernel.eval(s, x))
            .collect();
        Ok(self
            .machines
            .iter()
            .zip(&self.support_coef)
            .map(|(m, coef)| coef.iter().zip(&kx).map(|(a, k)| a * k).sum::<f64>() - m.rho)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.classes[argmax(&self.decision_values(x)?)])
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-dimension standardisation fitted on training data. Constant
/// dimensions keep unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for v in x {
            for (m, a) in mean.iter_mut().zip(v) {
                *m += a / n;
            }
        }
        let mut std = vec![0.0; d];
        for v in x {
            for ((s, a), m) in std.iter_mut().zip(v).zip(&mean) {
                *s += (a - m) * (a - m) / n;
            }
        }
        let std = std
            .into_iter()
            .map(|s| if s > 1e-24 { s.sqrt() } else { 1.0 })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..10).map(|i| (i >= 5) as usize).collect();
        let m = svm_train(
            &x,
            &y,
            &SvmParams {
                c: 100.0,
                ..Default::default()
            },
        )
        .unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), *yi);
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            svm_train(&x, &[3, 3], &SvmParams::default()),
            Err(IrisError::DegenerateLabels(_))
        ));
    }

    #[test]
    fn dim_mismatch_on_predict() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let m = svm_train(&x, &[0, 1], &SvmParams::default()).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(IrisError::DimMismatch(_))));
    }

    #[test]
    fn ties_pick_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }
}
