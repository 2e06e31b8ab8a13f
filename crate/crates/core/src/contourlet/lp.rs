//! Laplacian pyramid stage with the 9/7 filter pair.

use ndarray::{Array2, Axis};

use super::filters::{CDF97_ANALYSIS, CDF97_SYNTHESIS};
use super::Extension;
use crate::error::{IrisError, Result};

/// Whole-point symmetric index reflection into `0..n`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Convolve every lane along `axis` with a centred odd-length filter.
fn filter_axis(
    x: &Array2<f64>,
    taps: &[f64],
    gain: f64,
    axis: Axis,
    periodic: bool,
) -> Array2<f64> {
    let n = x.len_of(axis);
    let half = (taps.len() / 2) as isize;
    let mut out = Array2::<f64>::zeros(x.raw_dim());
    for (lane_in, mut lane_out) in x.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        for i in 0..n {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let j = i as isize + k as isize - half;
                let idx = if periodic { wrap(j, n) } else { reflect(j, n) };
                acc += t * lane_in[idx];
            }
            lane_out[i] = gain * acc;
        }
    }
    out
}

fn separable(x: &Array2<f64>, taps: &[f64], gain: f64, ext: Extension) -> Array2<f64> {
    let rows = filter_axis(x, taps, gain, Axis(0), false);
    filter_axis(
        &rows,
        taps,
        gain,
        Axis(1),
        ext == Extension::PeriodicColumns,
    )
}

/// Lowpass-filter and keep even rows/columns: `⌈r/2⌉ × ⌈c/2⌉`.
pub fn lp_reduce(x: &Array2<f64>, ext: Extension) -> Array2<f64> {
    let f = separable(x, &CDF97_ANALYSIS, 1.0, ext);
    let (r, c) = x.dim();
    Array2::from_shape_fn((r.div_ceil(2), c.div_ceil(2)), |(i, j)| f[[2 * i, 2 * j]])
}

/// Zero-insert `low` to `dims` and interpolate with the synthesis filter.
pub fn lp_expand(low: &Array2<f64>, dims: (usize, usize), ext: Extension) -> Result<Array2<f64>> {
    let (r, c) = dims;
    if low.dim() != (r.div_ceil(2), c.div_ceil(2)) {
        return Err(IrisError::DimMismatch(format!(
            "lowpass {:?} cannot expand to {:?}",
            low.dim(),
            dims
        )));
    }
    let mut up = Array2::<f64>::zeros(dims);
    for ((i, j), &v) in low.indexed_iter() {
        up[[2 * i, 2 * j]] = v;
    }
    Ok(separable(&up, &CDF97_SYNTHESIS, 2.0, ext))
}

/// One pyramid level: `(lowpass, bandpass)` with `bandpass = x − expand(lowpass)`.
pub fn lp_decompose(x: &Array2<f64>, ext: Extension) -> Result<(Array2<f64>, Array2<f64>)> {
    let (r, c) = x.dim();
    if r < 2 || c < 2 {
        return Err(IrisError::TooSmall(format!(
            "{r}x{c} input to the Laplacian pyramid"
        )));
    }
    let low = lp_reduce(x, ext);
    let band = x - &lp_expand(&low, (r, c), ext)?;
    Ok((low, band))
}

pub fn lp_reconstruct(
    low: &Array2<f64>,
    band: &Array2<f64>,
    ext: Extension,
) -> Result<Array2<f64>> {
    Ok(band + &lp_expand(low, band.dim(), ext)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0))
    }

    fn energy(x: &Array2<f64>) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn reflect_whole_point() {
        let got: Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect(-1, 2), 1);
        assert_eq!(reflect(5, 1), 0);
    }

    #[test]
    fn strip_level_shapes() {
        let x = random(8, 240, 1);
        let (low, band) = lp_decompose(&x, Extension::PeriodicColumns).unwrap();
        assert_eq!(low.dim(), (4, 120));
        assert_eq!(band.dim(), (8, 240));
    }

    #[test]
    fn odd_dims_use_ceil_lowpass() {
        let x = random(9, 13, 2);
        let (low, band) = lp_decompose(&x, Extension::Symmetric).unwrap();
        assert_eq!(low.dim(), (5, 7));
        let back = lp_reconstruct(&low, &band, Extension::Symmetric).unwrap();
        assert!((&back - &x).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn zero_in_zero_out() {
        let x = Array2::<f64>::zeros((8, 16));
        let (low, band) = lp_decompose(&x, Extension::Symmetric).unwrap();
        assert!(low.iter().chain(band.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn constant_has_no_bandpass() {
        let x = Array2::<f64>::from_elem((8, 240), 0.37);
        for ext in [Extension::Symmetric, Extension::PeriodicColumns] {
            let (low, band) = lp_decompose(&x, ext).unwrap();
            assert!(band.iter().all(|v| v.abs() < 1e-12));
            assert!(low.iter().all(|v| (v - 0.37).abs() < 1e-12));
        }
    }

    #[test]
    fn expanded_signal_has_negligible_bandpass() {
        // x = expand(y): reduce(expand(y)) = y by biorthogonality, so the
        // bandpass of x vanishes up to boundary effects.
        let y = random(16, 60, 3);
        for ext in [Extension::Symmetric, Extension::PeriodicColumns] {
            let x = lp_expand(&y, (32, 120), ext).unwrap();
            let (_, band) = lp_decompose(&x, ext).unwrap();
            assert!(energy(&band) < 1e-3 * energy(&x), "{ext:?}");
        }
    }

    #[test]
    fn dropping_bandpass_does_not_add_energy() {
        // smooth inputs consistent with the boundary extension: one
        // whole-point cosine down the rows, periodic harmonics along columns
        let (r, c) = (16, 48);
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = Array2::<f64>::zeros((r, c));
            let k: usize = rng.gen_range(0..3);
            for l in 0..4 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                for ((i, j), v) in x.indexed_iter_mut() {
                    let u = std::f64::consts::PI * (k * i) as f64 / (r - 1) as f64;
                    let w = std::f64::consts::TAU * (l * j) as f64 / c as f64;
                    *v += a * u.cos() * (w + ph).cos();
                }
            }
            let (low, band) = lp_decompose(&x, Extension::PeriodicColumns).unwrap();
            let zero = Array2::zeros(band.dim());
            let approx = lp_reconstruct(&low, &zero, Extension::PeriodicColumns).unwrap();
            assert!(energy(&approx) <= energy(&x), "seed {seed}");
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let low = Array2::<f64>::zeros((3, 3));
        let band = Array2::<f64>::zeros((8, 8));
        assert!(matches!(
            lp_reconstruct(&low, &band, Extension::Symmetric),
            Err(IrisError::DimMismatch(_))
        ));
    }
}
