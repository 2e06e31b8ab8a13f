//! Contourlet transform: a Laplacian pyramid for scale followed by a
//! directional filter bank on every bandpass level.

pub mod dfb;
pub mod filters;
pub mod lp;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use dfb::{dfb_components, dfb_decompose, dfb_reconstruct, DirectionalBands, Subband};
pub use filters::DfbFilter;
pub use lp::{lp_decompose, lp_expand, lp_reconstruct, lp_reduce};

use crate::error::{IrisError, Result};

/// Boundary handling. Rows always use whole-point symmetric extension;
/// columns either the same or periodic (iris strips wrap in angle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Extension {
    Symmetric,
    #[default]
    PeriodicColumns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidConfig {
    /// Direction count per level, finest first.
    pub dirs_per_level: Vec<usize>,
    pub filter: DfbFilter,
    pub extension: Extension,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self::new(vec![2, 4, 8])
    }
}

impl PyramidConfig {
    pub fn new(dirs_per_level: Vec<usize>) -> Self {
        Self {
            dirs_per_level,
            filter: DfbFilter::default(),
            extension: Extension::default(),
        }
    }

    pub fn two_level() -> Self {
        Self::new(vec![2, 4])
    }

    pub fn levels(&self) -> usize {
        self.dirs_per_level.len()
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    pub fn with_filter(mut self, filter: DfbFilter) -> Self {
        self.filter = filter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dirs_per_level.is_empty() {
            return Err(IrisError::InvalidArgument(
                "pyramid needs at least one level".into(),
            ));
        }
        for &n in &self.dirs_per_level {
            if !matches!(n, 2 | 4 | 8) {
                return Err(IrisError::UnsupportedDirectionCount(n));
            }
        }
        Ok(())
    }

    fn periodic(&self) -> bool {
        self.extension == Extension::PeriodicColumns
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourletPyramid {
    pub lowpass: Array2<f64>,
    /// `bands[l]` holds the directional subbands of level `l`, finest first.
    pub bands: Vec<Vec<Subband>>,
    /// Grid size of each level's bandpass image.
    pub band_dims: Vec<(usize, usize)>,
    pub config: PyramidConfig,
    pub source_dims: (usize, usize),
}

/// Where one block of the canonical coefficient vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    /// `None` for the lowpass residual.
    pub level: Option<usize>,
    pub direction: usize,
    pub start: usize,
    pub len: usize,
}

impl ContourletPyramid {
    pub fn levels(&self) -> usize {
        self.bands.len()
    }

    pub fn coefficient_count(&self) -> usize {
        self.lowpass.len()
            + self
                .bands
                .iter()
                .flat_map(|lv| lv.iter().map(Subband::len))
                .sum::<usize>()
    }

    /// Blocks of the canonical vector: lowpass, then levels coarse to fine,
    /// directions ascending.
    pub fn layout(&self) -> Vec<BlockInfo> {
        let mut out = vec![BlockInfo {
            level: None,
            direction: 0,
            start: 0,
            len: self.lowpass.len(),
        }];
        let mut start = self.lowpass.len();
        for l in (0..self.levels()).rev() {
            for (d, sb) in self.bands[l].iter().enumerate() {
                out.push(BlockInfo {
                    level: Some(l),
                    direction: d,
                    start,
                    len: sb.len(),
                });
                start += sb.len();
            }
        }
        out
    }

    /// All coefficients in canonical order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.coefficient_count());
        v.extend(self.lowpass.iter().copied());
        for l in (0..self.levels()).rev() {
            for sb in &self.bands[l] {
                v.extend_from_slice(&sb.values);
            }
        }
        v
    }

    /// Same structure, coefficients replaced from a canonical vector.
    pub fn with_coefficients(&self, coeffs: &[f64]) -> Result<ContourletPyramid> {
        if coeffs.len() != self.coefficient_count() {
            return Err(IrisError::DimMismatch(format!(
                "{} coefficients for a pyramid of {}",
                coeffs.len(),
                self.coefficient_count()
            )));
        }
        let mut out = self.clone();
        let n0 = out.lowpass.len();
        out.lowpass
            .iter_mut()
            .zip(&coeffs[..n0])
            .for_each(|(d, &s)| *d = s);
        let mut at = n0;
        for l in (0..out.levels()).rev() {
            for sb in out.bands[l].iter_mut() {
                let n = sb.len();
                sb.values.copy_from_slice(&coeffs[at..at + n]);
                at += n;
            }
        }
        Ok(out)
    }

    /// For each canonical coefficient, its `(scale, row, col)`: the grid
    /// position within its own level, with `scale = 2^level` the size of the
    /// source block it sits over.
    pub fn coefficient_sites(&self) -> Result<Vec<(usize, usize, usize)>> {
        let mut out = Vec::with_capacity(self.coefficient_count());
        let low_scale = 1usize << self.levels();
        for ((r, c), _) in self.lowpass.indexed_iter() {
            out.push((low_scale, r, c));
        }
        for l in (0..self.levels()).rev() {
            let sites = dfb::subband_sites(
                self.band_dims[l],
                self.bands[l].len(),
                self.config.periodic(),
                self.config.filter,
            )?;
            for s in sites {
                out.extend(s.into_iter().map(|(r, c)| (1usize << l, r, c)));
            }
        }
        Ok(out)
    }
}

/// Multiscale directional decomposition of `x`.
pub fn ct_decompose(x: &Array2<f64>, config: &PyramidConfig) -> Result<ContourletPyramid> {
    config.validate()?;
    let (r, c) = x.dim();
    let need = 1usize << config.levels();
    if r < need || c < need {
        return Err(IrisError::TooSmall(format!(
            "{r}x{c} input for a {}-level contourlet pyramid",
            config.levels()
        )));
    }
    let mut current = x.clone();
    let mut bands = Vec::with_capacity(config.levels());
    let mut band_dims = Vec::with_capacity(config.levels());
    for &n_dirs in &config.dirs_per_level {
        let (low, band) = lp_decompose(&current, config.extension)?;
        let dir = dfb_decompose(&band, n_dirs, config.periodic(), config.filter)?;
        band_dims.push(band.dim());
        bands.push(dir.subbands);
        current = low;
    }
    Ok(ContourletPyramid {
        lowpass: current,
        bands,
        band_dims,
        config: config.clone(),
        source_dims: (r, c),
    })
}

/// Inverse of [`ct_decompose`].
pub fn ct_reconstruct(p: &ContourletPyramid) -> Result<Array2<f64>> {
    let levels = p.config.levels();
    if p.bands.len() != levels || p.band_dims.len() != levels {
        return Err(IrisError::MalformedPyramid(format!(
            "{} band levels for a {levels}-level configuration",
            p.bands.len()
        )));
    }
    if p.band_dims.first() != Some(&p.source_dims) {
        return Err(IrisError::MalformedPyramid(
            "finest band does not match source dims".into(),
        ));
    }
    let mut current = p.lowpass.clone();
    for l in (0..levels).rev() {
        if p.bands[l].len() != p.config.dirs_per_level[l] {
            return Err(IrisError::MalformedPyramid(format!(
                "level {l} has {} subbands, expected {}",
                p.bands[l].len(),
                p.config.dirs_per_level[l]
            )));
        }
        let bands = DirectionalBands {
            dims: p.band_dims[l],
            periodic_cols: p.config.periodic(),
            filter: p.config.filter,
            subbands: p.bands[l].clone(),
        };
        let band =
            dfb_reconstruct(&bands).map_err(|e| IrisError::MalformedPyramid(e.to_string()))?;
        current = lp_reconstruct(&current, &band, p.config.extension)
            .map_err(|e| IrisError::MalformedPyramid(e.to_string()))?;
    }
    Ok(current)
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

    #[test]
    fn strip_budget_two_levels() {
        let p = ct_decompose(&random(8, 240, 1), &PyramidConfig::two_level()).unwrap();
        assert_eq!(p.coefficient_count(), 2520);
        assert_eq!(p.lowpass.dim(), (2, 60));
        assert_eq!(p.bands[0].len(), 2);
        assert_eq!(p.bands[1].len(), 4);
        let layout = p.layout();
        let coarse: usize = layout
            .iter()
            .filter(|b| b.level != Some(0))
            .map(|b| b.len)
            .sum();
        assert_eq!(coarse, 600);
    }

    #[test]
    fn strip_three_levels() {
        let p = ct_decompose(&random(8, 240, 2), &PyramidConfig::default()).unwrap();
        assert_eq!(p.bands[2].len(), 8);
        assert_eq!(p.band_dims[2], (2, 60));
        assert_eq!(p.lowpass.dim(), (1, 30));
        assert_eq!(p.coefficient_count(), 1920 + 480 + 120 + 30);
    }

    #[test]
    fn round_trip() {
        for cfg in [PyramidConfig::two_level(), PyramidConfig::default()] {
            let x = random(8, 240, 3);
            let p = ct_decompose(&x, &cfg).unwrap();
            let y = ct_reconstruct(&p).unwrap();
            let err = (&y - &x).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err < 1e-9 * x.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }

    #[test]
    fn canonical_vector_round_trip() {
        let p = ct_decompose(&random(8, 240, 4), &PyramidConfig::two_level()).unwrap();
        let v = p.to_vec();
        assert_eq!(p.with_coefficients(&v).unwrap(), p);
        assert_eq!(p.coefficient_sites().unwrap().len(), v.len());
    }

    #[test]
    fn too_small_and_malformed() {
        assert!(matches!(
            ct_decompose(&random(4, 240, 1), &PyramidConfig::default()),
            Err(IrisError::TooSmall(_))
        ));
        let mut p = ct_decompose(&random(8, 240, 1), &PyramidConfig::two_level()).unwrap();
        p.bands[1].pop();
        assert!(matches!(
            ct_reconstruct(&p),
            Err(IrisError::MalformedPyramid(_))
        ));
    }

    #[test]
    fn bad_direction_count() {
        let cfg = PyramidConfig::new(vec![2, 3]);
        assert!(matches!(
            ct_decompose(&random(8, 8, 1), &cfg),
            Err(IrisError::UnsupportedDirectionCount(3))
        ));
    }
}
