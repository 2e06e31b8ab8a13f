//! Linear projections fitted on training vectors: PCA and FastICA.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{IrisError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionKind {
    Pca,
    Ica,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    pub kind: ProjectionKind,
    pub mean: Vec<f64>,
    /// `k × d`, one component per row.
    pub components: Array2<f64>,
    /// PCA eigenvalues of the kept components (empty for ICA).
    pub eigenvalues: Vec<f64>,
    /// Number of components asked for before clipping to the data rank.
    pub requested_k: usize,
    /// False when the ICA iteration hit its cap.
    pub converged: bool,
}

impl ProjectionBasis {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(IrisError::DimMismatch(format!(
                "vector of {} for a basis over {} dims",
                x.len(),
                self.dim()
            )));
        }
        Ok(self
            .components
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (v, m))| c * (v - m))
                    .sum()
            })
            .collect())
    }

    /// `mean + componentsᵀ · y`; exact inverse of [`project`](Self::project)
    /// for a complete orthonormal (PCA) basis.
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.k() {
            return Err(IrisError::DimMismatch(format!(
                "{} coordinates for a {}-component basis",
                y.len(),
                self.k()
            )));
        }
        let mut out = self.mean.clone();
        for (row, &c) in self.components.rows().into_iter().zip(y) {
            for (o, &v) in out.iter_mut().zip(row.iter()) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

pub const ICA_MAX_ITER: usize = 400;
pub const ICA_TOL: f64 = 1e-6;
pub const ICA_SEED: u64 = 0x1CA;

fn centred(training: &[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if training.len() < 2 {
        return Err(IrisError::InsufficientData(format!(
            "{} training vectors (need at least 2)",
            training.len()
        )));
    }
    let d = training[0].len();
    if d == 0 || training.iter().any(|v| v.len() != d) {
        return Err(IrisError::InsufficientData(
            "training vectors differ in length".into(),
        ));
    }
    let n = training.len();
    let mut mean = vec![0.0; d];
    for v in training {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, d, |i, j| training[i][j] - mean[j]);
    Ok((mean, x))
}

/// Eigenpairs of the sample covariance, sorted by decreasing eigenvalue,
/// restricted to the numerically nonzero ones.
fn covariance_eigen(x: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let n = x.nrows();
    let cov = (x.transpose() * x) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let top = eig.eigenvalues[order[0]].max(0.0);
    let floor = top * 1e-10;
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for i in order {
        let l = eig.eigenvalues[i];
        if l <= floor || l <= 0.0 {
            break;
        }
        let mut v = eig.eigenvectors.column(i).into_owned();
        // fix the sign: largest-magnitude entry positive
        let (imax, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        if v[imax] < 0.0 {
            v = -v;
        }
        values.push(l);
        vectors.push(v);
    }
    (values, vectors)
}

/// Symmetric decorrelation `W ← (W Wᵀ)^{-1/2} W`.
fn decorrelate(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(1e-300).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose() * w
}

/// Fit a PCA or ICA basis of `k` components. `k` is clipped to the data
/// rank (at most `min(d, n - 1)`).
pub fn fit_projection(
    training: &[Vec<f64>],
    kind: ProjectionKind,
    k: usize,
) -> Result<ProjectionBasis> {
    let (mean, x) = centred(training)?;
    let (n, d) = x.shape();
    if k == 0 {
        return Err(IrisError::InvalidArgument("k must be positive".into()));
    }
    let (values, vectors) = covariance_eigen(&x);
    let k_eff = k.min(d).min(n - 1).min(values.len());
    if k_eff == 0 {
        return Err(IrisError::InsufficientData(
            "training data has zero variance".into(),
        ));
    }
    match kind {
        ProjectionKind::Pca => {
            let components = Array2::from_shape_fn((k_eff, d), |(i, j)| vectors[i][j]);
            Ok(ProjectionBasis {
                kind,
                mean,
                components,
                eigenvalues: values[..k_eff].to_vec(),
                requested_k: k,
                converged: true,
            })
        }
        ProjectionKind::Ica => {
            // whitening: K = diag(λ^-1/2) Eᵀ, Z = K Xᵀ (k × n)
            let whiten = DMatrix::from_fn(k_eff, d, |i, j| vectors[i][j] / values[i].sqrt());
            let z = &whiten * x.transpose();
            let mut rng = ChaCha8Rng::seed_from_u64(ICA_SEED);
            let init = DMatrix::from_fn(k_eff, k_eff, |_, _| StandardNormal.sample(&mut rng));
            let mut w = decorrelate(&init);
            let mut converged = false;
            for _ in 0..ICA_MAX_ITER {
                let wz = &w * &z;
                let g = wz.map(f64::tanh);
                let g_mean_deriv: Vec<f64> = (0..k_eff)
                    .map(|i| g.row(i).iter().map(|t| 1.0 - t * t).sum::<f64>() / n as f64)
                    .collect();
                let mut next = (&g * z.transpose()) / n as f64;
                for i in 0..k_eff {
                    for j in 0..k_eff {
                        next[(i, j)] -= g_mean_deriv[i] * w[(i, j)];
                    }
                }
                let next = decorrelate(&next);
                let change = (0..k_eff)
                    .map(|i| (1.0 - next.row(i).dot(&w.row(i)).abs()).abs())
                    .fold(0.0, f64::max);
                w = next;
                if change < ICA_TOL {
                    converged = true;
                    break;
                }
            }
            let unmix = &w * &whiten;
            let mut components = Array2::from_shape_fn((k_eff, d), |(i, j)| unmix[(i, j)]);
            for mut row in components.rows_mut() {
                let imax = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(i, _)| i)
                    .unwrap();
                if row[imax] < 0.0 {
                    row.mapv_inplace(|v| -v);
                }
            }
            Ok(ProjectionBasis {
                kind,
                mean,
                components,
                eigenvalues: Vec::new(),
                requested_k: k,
                converged,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn line_data_has_one_component() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let b = fit_projection(&pts, ProjectionKind::Pca, 2).unwrap();
        assert_eq!(b.k(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.components[[0, 0]] - s).abs() < 1e-9);
        assert!((b.components[[0, 1]] - s).abs() < 1e-9);
    }

    #[test]
    fn complete_basis_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let b = fit_projection(&pts, ProjectionKind::Pca, 6).unwrap();
        assert_eq!(b.k(), 6);
        let gram = b.components.dot(&b.components.t());
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - e).abs() < 1e-9);
            }
        }
        for p in &pts {
            let back = b.reconstruct(&b.project(p).unwrap()).unwrap();
            for (a, c) in back.iter().zip(p) {
                assert!((a - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn k_is_clipped_to_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let b = fit_projection(&pts, ProjectionKind::Pca, 1100).unwrap();
        assert_eq!(b.k(), 4);
        assert_eq!(b.requested_k, 1100);
    }

    #[test]
    fn too_little_data() {
        assert!(matches!(
            fit_projection(&[vec![1.0, 2.0]], ProjectionKind::Pca, 1),
            Err(IrisError::InsufficientData(_))
        ));
    }

    #[test]
    fn ica_unmixes_uniform_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 2000;
        let s: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let mix = [[1.0, 0.6], [0.4, 1.0]];
        let x: Vec<Vec<f64>> = s
            .iter()
            .map(|v| {
                vec![
                    mix[0][0] * v[0] + mix[0][1] * v[1],
                    mix[1][0] * v[0] + mix[1][1] * v[1],
                ]
            })
            .collect();
        let b = fit_projection(&x, ProjectionKind::Ica, 2).unwrap();
        assert!(b.converged);
        let y: Vec<Vec<f64>> = x.iter().map(|v| b.project(v).unwrap()).collect();
        let corr = |a: &dyn Fn(usize) -> f64, c: &dyn Fn(usize) -> f64| {
            let ma = (0..n).map(a).sum::<f64>() / n as f64;
            let mc = (0..n).map(c).sum::<f64>() / n as f64;
            let cov: f64 = (0..n).map(|i| (a(i) - ma) * (c(i) - mc)).sum();
            let va: f64 = (0..n).map(|i| (a(i) - ma).powi(2)).sum();
            let vc: f64 = (0..n).map(|i| (c(i) - mc).powi(2)).sum();
            cov / (va * vc).sqrt()
        };
        for src in 0..2 {
            let best = (0..2)
                .map(|k| corr(&|i| s[i][src], &|i| y[i][k]).abs())
                .fold(0.0, f64::max);
            assert!(best > 0.95, "source {src}: {best}");
        }
    }
}
