use irisct::features::glcm::{glcm_accumulate, haralick7, quantize8, OFFSETS_0_45_90};
use irisct::features::{fit_projection, ProjectionKind};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi eigenvalue iteration on a dense symmetric matrix.
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[i][i]).collect();
    let vecs = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (vals, vecs)
}

#[test]
fn pca_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, d) = (40, 6);
    let scales = [5.0, 3.0, 2.0, 1.0, 0.5, 0.2];
    let data: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|j| scales[j] * rng.gen_range(-1.0..1.0) + 0.3 * j as f64)
                .collect()
        })
        .collect();
    let b = fit_projection(&data, ProjectionKind::Pca, 4).unwrap();

    let mean: Vec<f64> = (0..d)
        .map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    data.iter()
                        .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                        .sum::<f64>()
                        / (n - 1) as f64
                })
                .collect()
        })
        .collect();
    let (vals, vecs) = jacobi(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    assert_eq!(b.k(), 4);
    for (k, &i) in order.iter().take(4).enumerate() {
        assert!(
            (b.eigenvalues[k] - vals[i]).abs() < 1e-9 * vals[i].max(1.0),
            "eigenvalue {k}"
        );
        let dot: f64 = b
            .components
            .row(k)
            .iter()
            .zip(&vecs[i])
            .map(|(a, b)| a * b)
            .sum();
        assert!(
            (dot.abs() - 1.0).abs() < 1e-8,
            "component {k}: |dot| = {}",
            dot.abs()
        );
    }
}

#[test]
fn pca_round_trip_when_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let b = fit_projection(&data, ProjectionKind::Pca, 5).unwrap();
    for x in &data {
        let y = b.reconstruct(&b.project(x).unwrap()).unwrap();
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}

#[test]
fn ica_components_are_unit_variance_and_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let data: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let (s1, s2): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            vec![s1 + 0.5 * s2, 0.3 * s1 - s2, 0.1 * s1]
        })
        .collect();
    let b = fit_projection(&data, ProjectionKind::Ica, 2).unwrap();
    let ys: Vec<Vec<f64>> = data.iter().map(|x| b.project(x).unwrap()).collect();
    let n = ys.len() as f64;
    for i in 0..2 {
        for j in 0..2 {
            let c = ys.iter().map(|y| y[i] * y[j]).sum::<f64>() / (n - 1.0);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-6, "cov[{i}][{j}] = {c}");
        }
    }
}

#[test]
fn accumulated_glcm_by_hand() {
    // 0° pairs: (0,1) (1,2) (3,3) (3,0); 45°: (3,1) (3,2); 90°: (3,0) (3,1) (0,2)
    let m = array![[0u8, 1, 2], [3, 3, 0]];
    let g = glcm_accumulate(&m, &OFFSETS_0_45_90).unwrap();
    let expect = [
        ((0, 1), 1),
        ((1, 2), 1),
        ((3, 3), 1),
        ((3, 0), 2),
        ((3, 1), 2),
        ((3, 2), 1),
        ((0, 2), 1),
    ];
    let total: usize = expect.iter().map(|e| e.1).sum();
    assert_eq!(total, 9);
    for ((i, j), c) in expect {
        assert_eq!(g.p[i][j], c as f64 / 9.0, "({i},{j})");
    }
    let h = haralick7(&g);
    assert!((h.iter().sum::<f64>()).is_finite());
}

#[test]
fn quantize_spreads_range() {
    let m = Array2::from_shape_fn((1, 16), |(_, j)| j as f64);
    let q = quantize8(&m);
    for j in 0..16 {
        assert_eq!(q[[0, j]] as usize, j / 2);
    }
}
