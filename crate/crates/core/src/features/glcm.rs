//! Gray-level co-occurrence matrices and Haralick statistics.

use ndarray::Array2;

use crate::error::{IrisError, Result};

/// Gray levels.
pub const NG: usize = 8;

/// Distance-1 offsets `(dy, dx)` at 0°, 45° and 90°.
pub const OFFSETS_0_45_90: [(isize, isize); 3] = [(0, 1), (-1, 1), (-1, 0)];

#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    /// Joint probabilities, `p[i][j]` for gray levels `i, j` (0-based).
    pub p: [[f64; NG]; NG],
}

impl Glcm {
    /// Means and standard deviations of the row and column marginals, with
    /// gray levels numbered 1..=8.
    pub fn moments(&self) -> (f64, f64, f64, f64) {
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..NG {
            for j in 0..NG {
                mx += (i + 1) as f64 * self.p[i][j];
                my += (j + 1) as f64 * self.p[i][j];
            }
        }
        let (mut vx, mut vy) = (0.0, 0.0);
        for i in 0..NG {
            for j in 0..NG {
                vx += ((i + 1) as f64 - mx).powi(2) * self.p[i][j];
                vy += ((j + 1) as f64 - my).powi(2) * self.p[i][j];
            }
        }
        (mx, my, vx.sqrt(), vy.sqrt())
    }

    /// False when a marginal has zero spread, i.e. correlation is undefined.
    pub fn correlation_defined(&self) -> bool {
        let (_, _, sx, sy) = self.moments();
        sx * sy > 0.0
    }
}

/// Linear binning of `[min, max]` into 8 equal bins. Constant input → 0.
pub fn quantize8(m: &Array2<f64>) -> Array2<u8> {
    let (lo, hi) = m
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    if !(span > 0.0) {
        return Array2::zeros(m.dim());
    }
    m.mapv(|v| (((v - lo) / span * NG as f64).floor() as usize).min(NG - 1) as u8)
}

fn check_levels(m: &Array2<u8>) -> Result<()> {
    if let Some(&v) = m.iter().find(|&&v| v as usize >= NG) {
        return Err(IrisError::InvalidArgument(format!(
            "gray level {v} outside 0..=7"
        )));
    }
    Ok(())
}

fn count_pairs(m: &Array2<u8>, (dy, dx): (isize, isize), counts: &mut [[u64; NG]; NG]) -> u64 {
    let (rows, cols) = (m.nrows() as isize, m.ncols() as isize);
    let mut n = 0;
    for y in 0..rows {
        let y2 = y + dy;
        if !(0..rows).contains(&y2) {
            continue;
        }
        for x in 0..cols {
            let x2 = x + dx;
            if !(0..cols).contains(&x2) {
                continue;
            }
            let a = m[[y as usize, x as usize]] as usize;
            let b = m[[y2 as usize, x2 as usize]] as usize;
            counts[a][b] += 1;
            n += 1;
        }
    }
    n
}

/// GLCM of ordered pairs `(m[y][x], m[y+dy][x+dx])`, summed over all
/// offsets before normalising.
pub fn glcm_accumulate(m: &Array2<u8>, offsets: &[(isize, isize)]) -> Result<Glcm> {
    check_levels(m)?;
    let mut counts = [[0u64; NG]; NG];
    let mut total = 0;
    for &off in offsets {
        if off == (0, 0) {
            return Err(IrisError::InvalidArgument("zero GLCM offset".into()));
        }
        total += count_pairs(m, off, &mut counts);
    }
    if total == 0 {
        return Err(IrisError::EmptyOverlap);
    }
    let mut p = [[0.0; NG]; NG];
    for i in 0..NG {
        for j in 0..NG {
            p[i][j] = counts[i][j] as f64 / total as f64;
        }
    }
    Ok(Glcm { p })
}

pub fn glcm_compute(m: &Array2<u8>, offset: (isize, isize)) -> Result<Glcm> {
    glcm_accumulate(m, &[offset])
}

/// Energy, contrast, correlation, homogeneity, autocorrelation,
/// dissimilarity, inertia. Gray levels are numbered 1..=8; an undefined
/// correlation is reported as 0.
pub fn haralick7(g: &Glcm) -> [f64; 7] {
    let (mx, my, sx, sy) = g.moments();
    let mut energy = 0.0;
    let mut ij = 0.0;
    let mut homogeneity = 0.0;
    let mut dissimilarity = 0.0;
    let mut inertia = 0.0;
    let mut by_diff = [0.0; NG];
    for i in 0..NG {
        for j in 0..NG {
            let p = g.p[i][j];
            let (a, b) = ((i + 1) as f64, (j + 1) as f64);
            let d = a - b;
            energy += p * p;
            ij += a * b * p;
            homogeneity += p / (1.0 + d * d);
            dissimilarity += d.abs() * p;
            inertia += d * d * p;
            by_diff[i.abs_diff(j)] += p;
        }
    }
    let contrast = by_diff
        .iter()
        .enumerate()
        .map(|(n, &p)| (n * n) as f64 * p)
        .sum();
    let correlation = if sx * sy > 0.0 {
        (ij - mx * my) / (sx * sy)
    } else {
        0.0
    };
    [
        energy,
        contrast,
        correlation,
        homogeneity,
        ij,
        dissimilarity,
        inertia,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constant_matrix() {
        let m = Array2::from_elem((5, 5), 3u8);
        let g = glcm_compute(&m, (0, 1)).unwrap();
        assert_eq!(g.p[3][3], 1.0);
        let h = haralick7(&g);
        assert_eq!(h, [1.0, 0.0, 0.0, 1.0, 16.0, 0.0, 0.0]);
        assert!(!g.correlation_defined());
    }

    #[test]
    fn two_by_two_pairs() {
        let m = array![[0u8, 1], [2, 3]];
        let g = glcm_compute(&m, (0, 1)).unwrap();
        assert_eq!(g.p[0][1], 0.5);
        assert_eq!(g.p[2][3], 0.5);
        let total: f64 = g.p.iter().flatten().sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn no_overlap() {
        let m = array![[4u8]];
        assert!(matches!(
            glcm_compute(&m, (0, 1)),
            Err(IrisError::EmptyOverlap)
        ));
    }

    #[test]
    fn out_of_range_level() {
        let m = array![[8u8, 1]];
        assert!(glcm_compute(&m, (0, 1)).is_err());
    }

    #[test]
    fn uniform_energy() {
        let g = Glcm {
            p: [[1.0 / 64.0; NG]; NG],
        };
        assert!((haralick7(&g)[0] - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn quantize_rules() {
        assert_eq!(quantize8(&array![[0.0, 1.0]]), array![[0u8, 7]]);
        assert!(quantize8(&Array2::from_elem((3, 3), 2.5))
            .iter()
            .all(|&v| v == 0));
        let lin = Array2::from_shape_fn((1, 8), |(_, j)| j as f64 / 7.0);
        assert_eq!(
            quantize8(&lin).into_raw_vec_and_offset().0,
            (0..8).collect::<Vec<u8>>()
        );
    }
}
