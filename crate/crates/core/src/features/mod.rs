//! Feature extractors over the normalised mid-strip.

pub mod glcm;
pub mod projection;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::contourlet::{
    ct_decompose, dfb_components, lp_decompose, lp_expand, ContourletPyramid, DfbFilter,
    PyramidConfig, Subband,
};
use crate::error::{IrisError, Result};
use crate::normalize::Strip;

pub use glcm::{glcm_accumulate, glcm_compute, haralick7, quantize8, Glcm, OFFSETS_0_45_90};
pub use projection::{fit_projection, ProjectionBasis, ProjectionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Glcm21,
    Glcm56,
    Local,
    Global,
    Combined,
    Binary,
    Nlac,
    Ga600,
    Aad,
    Pca,
    Ica,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Glcm21,
        Method::Glcm56,
        Method::Local,
        Method::Global,
        Method::Combined,
        Method::Binary,
        Method::Nlac,
        Method::Ga600,
        Method::Aad,
        Method::Pca,
        Method::Ica,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Glcm21 => "GLCM21",
            Method::Glcm56 => "GLCM56",
            Method::Local => "LOCAL",
            Method::Global => "GLOBAL",
            Method::Combined => "COMBINED",
            Method::Binary => "BINARY",
            Method::Nlac => "NLAC",
            Method::Ga600 => "GA600",
            Method::Aad => "AAD",
            Method::Pca => "PCA",
            Method::Ica => "ICA",
        }
    }

    /// Vector length for an 8×240 strip. PCA and ICA report the default
    /// component target; the fitted basis may keep fewer.
    pub fn nominal_length(self) -> usize {
        match self {
            Method::Glcm21 => 21,
            Method::Glcm56 => 56,
            Method::Local => 2520,
            Method::Global => 24,
            Method::Combined => 2544,
            Method::Binary => 2520,
            Method::Nlac => 48,
            Method::Ga600 => 600,
            Method::Aad => 1280,
            Method::Pca | Method::Ica => DEFAULT_PROJECTION_K,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = IrisError;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace(['-', '_'], "");
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == up || (up == "GA" && *m == Method::Ga600))
            .ok_or_else(|| IrisError::Parse(format!("unknown method '{s}'")))
    }
}

pub const DEFAULT_PROJECTION_K: usize = 1100;
pub const NLAC_PERCENT: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Reals(Vec<f64>),
    Bits(Vec<bool>),
    Trits(Vec<i8>),
    /// Trit prefix followed by a real suffix (the local/global cascade code).
    TritsReals(Vec<i8>, Vec<f64>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::Reals(v) => v.len(),
            Payload::Bits(v) => v.len(),
            Payload::Trits(v) => v.len(),
            Payload::TritsReals(t, r) => t.len() + r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real embedding: bits as 0/1, trits as −1/0/1.
    pub fn to_reals(&self) -> Vec<f64> {
        match self {
            Payload::Reals(v) => v.clone(),
            Payload::Bits(v) => v.iter().map(|&b| b as u8 as f64).collect(),
            Payload::Trits(v) => v.iter().map(|&t| t as f64).collect(),
            Payload::TritsReals(t, r) => t
                .iter()
                .map(|&t| t as f64)
                .chain(r.iter().copied())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub method: Method,
    pub payload: Payload,
    /// Validity per element (true = usable).
    pub mask: Option<Vec<bool>>,
    /// Template-local coefficient indices (NLAC).
    pub indices: Option<Vec<u16>>,
}

impl FeatureVector {
    pub fn new(method: Method, payload: Payload) -> Self {
        Self {
            method,
            payload,
            mask: None,
            indices: None,
        }
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

/// Settings shared by the extractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub filter: DfbFilter,
    pub nlac_percent: f64,
    pub pca_k: usize,
    pub ica_k: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            filter: DfbFilter::default(),
            nlac_percent: NLAC_PERCENT,
            pca_k: DEFAULT_PROJECTION_K,
            ica_k: DEFAULT_PROJECTION_K,
        }
    }
}

impl FeatureConfig {
    fn two_level(&self) -> PyramidConfig {
        PyramidConfig::two_level().with_filter(self.filter)
    }

    fn three_level(&self) -> PyramidConfig {
        PyramidConfig::default().with_filter(self.filter)
    }
}

/// `round(n_pixel · percent / 100)`, halves away from zero.
pub fn n_significant(n_pixel: usize, percent: f64) -> usize {
    (n_pixel as f64 * percent / 100.0).round() as usize
}

pub fn two_level_pyramid(strip: &Strip, cfg: &FeatureConfig) -> Result<ContourletPyramid> {
    ct_decompose(&strip.data, &cfg.two_level())
}

pub fn three_level_pyramid(strip: &Strip, cfg: &FeatureConfig) -> Result<ContourletPyramid> {
    ct_decompose(&strip.data, &cfg.three_level())
}

fn glcm_features(m: &Array2<f64>) -> Result<[f64; 7]> {
    let g = glcm_accumulate(&quantize8(m), &OFFSETS_0_45_90)?;
    Ok(haralick7(&g))
}

/// Subbands laid out as rows of `width` values, stacked in order.
fn stack_rows(subbands: &[Subband], width: usize) -> Array2<f64> {
    let values: Vec<f64> = subbands
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .collect();
    let rows = values.len() / width;
    Array2::from_shape_vec((rows, width), values)
        .expect("subband sizes are multiples of the row width")
}

/// Haralick statistics of the two-level decomposition: the coarse
/// directional subbands stacked as a 4×120 matrix, the fine ones as 16×120,
/// and both together as 20×120.
pub fn feat_glcm21(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let p = two_level_pyramid(strip, cfg)?;
    let width = p.bands[1][0].len();
    let m1 = stack_rows(&p.bands[1], width);
    let m2 = stack_rows(&p.bands[0], width);
    let m3 = ndarray::concatenate(Axis(0), &[m1.view(), m2.view()]).expect("equal widths");
    let mut out = Vec::with_capacity(21);
    for m in [&m1, &m2, &m3] {
        out.extend(glcm_features(m)?);
    }
    Ok(FeatureVector::new(Method::Glcm21, Payload::Reals(out)))
}

/// Haralick statistics of each level-3 directional subband.
pub fn feat_glcm56(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let p = three_level_pyramid(strip, cfg)?;
    let mut out = Vec::with_capacity(56);
    for sb in &p.bands[2] {
        out.extend(glcm_features(&sb.to_matrix())?);
    }
    Ok(FeatureVector::new(Method::Glcm56, Payload::Reals(out)))
}

/// +1 at strict positive local maxima, −1 at strict negative local minima
/// over the in-bounds 8-neighbourhood.
pub fn local_extrema(m: &Array2<f64>) -> Vec<i8> {
    let (rows, cols) = m.dim();
    let mut out = Vec::with_capacity(m.len());
    for r in 0..rows {
        for c in 0..cols {
            let v = m[[r, c]];
            let (mut is_max, mut is_min) = (true, true);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    let u = m[[rr as usize, cc as usize]];
                    is_max &= v > u;
                    is_min &= v < u;
                }
            }
            out.push(if is_max && v > 0.0 {
                1
            } else if is_min && v < 0.0 {
                -1
            } else {
                0
            });
        }
    }
    out
}

/// Trinary local-extremum code of a pyramid in canonical order.
pub fn local_code(p: &ContourletPyramid) -> Vec<i8> {
    let mut out = local_extrema(&p.lowpass);
    for l in (0..p.levels()).rev() {
        for sb in &p.bands[l] {
            out.extend(local_extrema(&sb.to_matrix()));
        }
    }
    out
}

pub fn feat_local(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let p = two_level_pyramid(strip, cfg)?;
    Ok(FeatureVector::new(
        Method::Local,
        Payload::Trits(local_code(&p)),
    ))
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

/// Mean and population variance of the level-3 and level-2 directional
/// subbands (coarse first, directions ascending).
pub fn feat_global(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let p = three_level_pyramid(strip, cfg)?;
    let mut out = Vec::with_capacity(24);
    for l in [2, 1] {
        for sb in &p.bands[l] {
            let (m, v) = mean_var(&sb.values);
            out.push(m);
            out.push(v);
        }
    }
    Ok(FeatureVector::new(Method::Global, Payload::Reals(out)))
}

pub fn feat_combined(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let local = feat_local(strip, cfg)?;
    let global = feat_global(strip, cfg)?;
    let (Payload::Trits(t), Payload::Reals(r)) = (local.payload, global.payload) else {
        unreachable!("local is trits, global is reals");
    };
    Ok(FeatureVector::new(
        Method::Combined,
        Payload::TritsReals(t, r),
    ))
}

/// Per canonical coefficient: true when every strip pixel under its
/// footprint is valid.
pub fn coefficient_mask(p: &ContourletPyramid, strip: &Strip) -> Result<Vec<bool>> {
    let (rows, cols) = strip.mask.dim();
    Ok(p.coefficient_sites()?
        .into_iter()
        .map(|(scale, r, c)| {
            let (r0, c0) = (r * scale, c * scale);
            let (r1, c1) = ((r0 + scale).min(rows), (c0 + scale).min(cols));
            (r0..r1).all(|i| (c0..c1).all(|j| strip.mask[[i, j]]))
        })
        .collect())
}

pub fn feat_binary(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let p = two_level_pyramid(strip, cfg)?;
    let bits = p.to_vec().into_iter().map(|c| c > 0.0).collect();
    let mut fv = FeatureVector::new(Method::Binary, Payload::Bits(bits));
    fv.mask = Some(coefficient_mask(&p, strip)?);
    Ok(fv)
}

/// Indices of the `n` largest-magnitude entries, ascending; ties go to the
/// lower index.
pub fn top_magnitude_indices(coeffs: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..coeffs.len()).collect();
    order.sort_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(a.cmp(&b)));
    order.truncate(n);
    order.sort_unstable();
    order
}

/// Sign bits of the most significant 2.5% of the two-level coefficients,
/// with their indices.
pub fn feat_nlac(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let p = two_level_pyramid(strip, cfg)?;
    let coeffs = p.to_vec();
    let n = n_significant(strip.n_pixel(), cfg.nlac_percent);
    let idx = top_magnitude_indices(&coeffs, n);
    let valid = coefficient_mask(&p, strip)?;
    let mut fv = FeatureVector::new(
        Method::Nlac,
        Payload::Bits(idx.iter().map(|&i| coeffs[i] > 0.0).collect()),
    );
    fv.mask = Some(idx.iter().map(|&i| valid[i]).collect());
    fv.indices = Some(idx.iter().map(|&i| i as u16).collect());
    Ok(fv)
}

/// NLAC template scattered into the full coefficient space: ±1 at its
/// indices by sign, 0 elsewhere.
pub fn nlac_embedding(fv: &FeatureVector, dim: usize) -> Result<Vec<f64>> {
    let (Payload::Bits(bits), Some(idx)) = (&fv.payload, &fv.indices) else {
        return Err(IrisError::InvalidArgument("not an NLAC template".into()));
    };
    let mut out = vec![0.0; dim];
    for (&b, &i) in bits.iter().zip(idx) {
        *out.get_mut(i as usize).ok_or_else(|| {
            IrisError::DimMismatch(format!("index {i} beyond {dim} coefficients"))
        })? = if b { 1.0 } else { -1.0 };
    }
    Ok(out)
}

/// The 600 level-2-scale coefficients (coarse directional subbands and
/// lowpass of the two-level pyramid) as sign bits.
pub fn ga_feature_source(strip: &Strip, cfg: &FeatureConfig) -> Result<Vec<bool>> {
    let p = two_level_pyramid(strip, cfg)?;
    let fine: usize = p.bands[0].iter().map(Subband::len).sum();
    let v = p.to_vec();
    Ok(v[..v.len() - fine].iter().map(|&c| c > 0.0).collect())
}

pub fn feat_ga600(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    Ok(FeatureVector::new(
        Method::Ga600,
        Payload::Bits(ga_feature_source(strip, cfg)?),
    ))
}

pub const AAD_BLOCK: usize = 12;

/// Mean absolute deviation from the block mean.
pub fn aad(block: &[f64]) -> f64 {
    let n = block.len() as f64;
    let m = block.iter().sum::<f64>() / n;
    block.iter().map(|v| (v - m).abs()).sum::<f64>() / n
}

/// Full-resolution directional components of the third bandpass level:
/// the level-3 band is interpolated back to strip size and split into 8
/// non-subsampled directional images.
pub fn level3_directional_images(strip: &Strip, cfg: &FeatureConfig) -> Result<Vec<Array2<f64>>> {
    let ext = cfg.three_level().extension;
    let mut dims = Vec::new();
    let mut current = strip.data.clone();
    let mut band = None;
    for _ in 0..3 {
        dims.push(current.dim());
        let (low, b) = lp_decompose(&current, ext)?;
        band = Some(b);
        current = low;
    }
    let mut up = band.expect("three levels");
    for &d in dims[..2].iter().rev() {
        up = lp_expand(&up, d, ext)?;
    }
    dfb_components(&up, 8, true, cfg.filter)
}

/// AAD of 12-sample row-major blocks of each level-3 directional image.
pub fn feat_aad(strip: &Strip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let comps = level3_directional_images(strip, cfg)?;
    let mut out = Vec::new();
    for c in &comps {
        let flat: Vec<f64> = c.iter().copied().collect();
        if flat.len() % AAD_BLOCK != 0 {
            return Err(IrisError::DimMismatch(format!(
                "{} samples do not tile into blocks of {AAD_BLOCK}",
                flat.len()
            )));
        }
        out.extend(flat.chunks(AAD_BLOCK).map(aad));
    }
    Ok(FeatureVector::new(Method::Aad, Payload::Reals(out)))
}

/// Flattened level-3 directional subbands of the three-level pyramid, the
/// input space of the PCA and ICA projections.
pub fn level3_vector(strip: &Strip, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    let p = three_level_pyramid(strip, cfg)?;
    Ok(p.bands[2]
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .collect())
}

pub fn feat_project(
    strip: &Strip,
    basis: &ProjectionBasis,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let method = match basis.kind {
        ProjectionKind::Pca => Method::Pca,
        ProjectionKind::Ica => Method::Ica,
    };
    let x = level3_vector(strip, cfg)?;
    Ok(FeatureVector::new(
        method,
        Payload::Reals(basis.project(&x)?),
    ))
}

/// Extractor dispatch with the projection bases it may need.
#[derive(Debug, Clone, Default)]
pub struct Extractor {
    pub config: FeatureConfig,
    pub pca: Option<ProjectionBasis>,
    pub ica: Option<ProjectionBasis>,
}

impl Extractor {
    pub fn new(config: FeatureConfig) -> Self {
        Self {
            config,
            pca: None,
            ica: None,
        }
    }

    pub fn extract(&self, strip: &Strip, method: Method) -> Result<FeatureVector> {
        let cfg = &self.config;
        match method {
            Method::Glcm21 => feat_glcm21(strip, cfg),
            Method::Glcm56 => feat_glcm56(strip, cfg),
            Method::Local => feat_local(strip, cfg),
            Method::Global => feat_global(strip, cfg),
            Method::Combined => feat_combined(strip, cfg),
            Method::Binary => feat_binary(strip, cfg),
            Method::Nlac => feat_nlac(strip, cfg),
            Method::Ga600 => feat_ga600(strip, cfg),
            Method::Aad => feat_aad(strip, cfg),
            Method::Pca | Method::Ica => {
                let basis = if method == Method::Pca {
                    &self.pca
                } else {
                    &self.ica
                };
                let basis = basis.as_ref().ok_or_else(|| {
                    IrisError::InvalidArgument(format!("{method} needs a fitted basis"))
                })?;
                feat_project(strip, basis, cfg)
            }
        }
    }

    /// Fit the PCA or ICA basis on training strips.
    pub fn fit(&mut self, strips: &[Strip], kind: ProjectionKind) -> Result<&ProjectionBasis> {
        let xs = strips
            .iter()
            .map(|s| level3_vector(s, &self.config))
            .collect::<Result<Vec<_>>>()?;
        let k = match kind {
            ProjectionKind::Pca => self.config.pca_k,
            ProjectionKind::Ica => self.config.ica_k,
        };
        let basis = fit_projection(&xs, kind, k)?;
        let slot = match kind {
            ProjectionKind::Pca => &mut self.pca,
            ProjectionKind::Ica => &mut self.ica,
        };
        Ok(slot.insert(basis))
    }
}
