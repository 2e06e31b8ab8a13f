//! Rubber-sheet normalisation of the collarette band and the mid-strip crop.

use std::f64::consts::TAU;

use ndarray::{s, Array2};

use crate::dataio::GrayImage;
use crate::error::{IrisError, Result};
use crate::segment::Segmentation;

pub const RADIAL_RES: usize = 20;
pub const ANGULAR_RES: usize = 240;
/// First and last (1-based, inclusive) rows of the mid-strip.
pub const STRIP_FIRST_ROW: usize = 5;
pub const STRIP_LAST_ROW: usize = 12;
pub const STRIP_ROWS: usize = STRIP_LAST_ROW - STRIP_FIRST_ROW + 1;

/// Polar iris image, intensities in [0, 1]. Masked entries hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIris {
    pub data: Array2<f64>,
    pub mask: Array2<bool>,
}

impl NormalizedIris {
    pub fn radial_res(&self) -> usize {
        self.data.nrows()
    }

    pub fn angular_res(&self) -> usize {
        self.data.ncols()
    }
}

/// Rows 5..=12 of a normalised iris.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub data: Array2<f64>,
    pub mask: Array2<bool>,
}

impl Strip {
    pub fn new(data: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        if data.dim() != mask.dim() {
            return Err(IrisError::DimMismatch(format!(
                "strip data {:?} vs mask {:?}",
                data.dim(),
                mask.dim()
            )));
        }
        Ok(Self { data, mask })
    }

    /// Fully valid strip.
    pub fn from_data(data: Array2<f64>) -> Self {
        let mask = Array2::from_elem(data.dim(), true);
        Self { data, mask }
    }

    pub fn n_pixel(&self) -> usize {
        self.data.len()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&b| b).count() as f64 / self.mask.len().max(1) as f64
    }
}

/// Image position of polar sample `(i, j)`: fraction `i / (radial_res - 1)`
/// of the way from the pupil boundary to the collarette boundary along the
/// ray from the pupil centre at angle `2πj / angular_res`.
pub fn polar_point(
    seg: &Segmentation,
    radial_res: usize,
    angular_res: usize,
    i: usize,
    j: usize,
) -> Result<(f64, f64)> {
    let p = &seg.pupil;
    let theta = TAU * j as f64 / angular_res as f64;
    let (sin, cos) = theta.sin_cos();
    let r_out = seg.collarette.ray_exit(p.cx, p.cy, theta);
    if !(r_out > p.r) {
        return Err(IrisError::DegenerateGeometry(format!(
            "collarette boundary at {r_out:.2} px does not clear the pupil ({:.2} px) at angle {theta:.3}",
            p.r
        )));
    }
    let rho = i as f64 / (radial_res - 1) as f64;
    let r = p.r + rho * (r_out - p.r);
    Ok((p.cx + r * cos, p.cy + r * sin))
}

/// Rubber-sheet sampling of the pupil-to-collarette band, bilinear. The
/// first and last rows lie on the boundaries and are always masked.
pub fn rubber_sheet(
    img: &GrayImage,
    seg: &Segmentation,
    radial_res: usize,
    angular_res: usize,
) -> Result<NormalizedIris> {
    if radial_res < 13 || angular_res < 8 {
        return Err(IrisError::InvalidArgument(format!(
            "resolution {radial_res}x{angular_res} (need at least 13x8)"
        )));
    }
    let mut data = Array2::<f64>::zeros((radial_res, angular_res));
    let mut mask = Array2::<bool>::from_elem((radial_res, angular_res), false);
    for j in 0..angular_res {
        for i in 1..radial_res - 1 {
            let (x, y) = polar_point(seg, radial_res, angular_res, i, j)?;
            let Some(v) = img.bilinear(x, y) else {
                continue;
            };
            if seg.noise_mask.at(x, y) {
                data[[i, j]] = v / 255.0;
                mask[[i, j]] = true;
            }
        }
    }
    Ok(NormalizedIris { data, mask })
}

/// Rows 5 through 12 (1-based) with their mask.
pub fn mid_strip(n: &NormalizedIris) -> Result<Strip> {
    if n.radial_res() < STRIP_LAST_ROW {
        return Err(IrisError::TooFewRows {
            needed: STRIP_LAST_ROW,
            have: n.radial_res(),
        });
    }
    let rows = s![STRIP_FIRST_ROW - 1..STRIP_LAST_ROW, ..];
    Ok(Strip {
        data: n.data.slice(rows).to_owned(),
        mask: n.mask.slice(rows).to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_eye, SynthEyeSpec};
    use crate::geometry::Circle;

    fn concentric() -> (SynthEyeSpec, GrayImage, Segmentation) {
        let spec = SynthEyeSpec::new(
            Circle::new(160.0, 140.0, 30.0),
            Circle::new(160.0, 140.0, 90.0),
            7,
        );
        let img = synth_eye(&spec, 320, 280).unwrap();
        let seg = Segmentation::from_circles(spec.pupil, spec.iris, 0.5, 320, 280).unwrap();
        (spec, img, seg)
    }

    #[test]
    fn default_shape_and_border_rows() {
        let (_, img, seg) = concentric();
        let n = rubber_sheet(&img, &seg, RADIAL_RES, ANGULAR_RES).unwrap();
        assert_eq!(n.data.dim(), (20, 240));
        assert!(n.mask.row(0).iter().all(|&b| !b));
        assert!(n.mask.row(19).iter().all(|&b| !b));
        assert!(n.mask.row(10).iter().all(|&b| b));
        for (v, m) in n.data.iter().zip(n.mask.iter()) {
            assert!((0.0..=1.0).contains(v));
            if !m {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn first_sample_sits_on_pupil_boundary() {
        let (spec, _, seg) = concentric();
        let (x, y) = polar_point(&seg, 20, 240, 0, 0).unwrap();
        assert!((x - (spec.pupil.cx + spec.pupil.r)).abs() < 1e-12);
        assert!((y - spec.pupil.cy).abs() < 1e-12);
        let (x, _) = polar_point(&seg, 20, 240, 19, 0).unwrap();
        assert!((x - (spec.pupil.cx + seg.collarette.r)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_collarette() {
        let (_, img, mut seg) = concentric();
        seg.collarette.r = seg.pupil.r;
        assert!(matches!(
            rubber_sheet(&img, &seg, 20, 240),
            Err(IrisError::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn strip_rows() {
        let n = NormalizedIris {
            data: Array2::from_shape_fn((20, 240), |(i, _)| i as f64),
            mask: Array2::from_elem((20, 240), true),
        };
        let s = mid_strip(&n).unwrap();
        assert_eq!(s.data.dim(), (8, 240));
        assert_eq!(s.n_pixel(), 1920);
        assert_eq!(s.data[[0, 0]], 4.0);
        assert_eq!(s.data[[7, 0]], 11.0);

        let n12 = NormalizedIris {
            data: Array2::from_shape_fn((12, 240), |(i, _)| i as f64),
            mask: Array2::from_elem((12, 240), true),
        };
        assert_eq!(mid_strip(&n12).unwrap().data[[0, 0]], 4.0);

        let n10 = NormalizedIris {
            data: Array2::zeros((10, 240)),
            mask: Array2::from_elem((10, 240), true),
        };
        assert!(matches!(
            mid_strip(&n10),
            Err(IrisError::TooFewRows {
                needed: 12,
                have: 10
            })
        ));
    }
}
