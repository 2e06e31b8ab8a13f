//! Pupil and iris localisation, eyelid and eyelash masking.

use std::f64::consts::{FRAC_PI_4, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::GrayImage;
use crate::error::{IrisError, Result};
use crate::geometry::{Circle, Line};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub r_min: f64,
    pub r_max: f64,
    /// Gaussian σ (in radius samples) applied to the radial derivative.
    pub id_sigma: f64,
    pub n_angles: usize,
    /// Peak radial-derivative response (gray levels / px) below which no
    /// boundary is reported.
    pub boundary_floor: f64,
    /// Maximum distance between pupil and iris centres.
    pub iris_center_tolerance: f64,
    pub collarette_fraction: f64,
    /// Minimum Hough votes for an eyelid, as a fraction of the iris radius.
    pub hough_vote_floor: f64,
    /// Minimum vertical gradient (gray levels / px) for an eyelid edge point.
    pub eyelid_edge_threshold: f64,
    pub gabor_threshold: f64,
    pub variance_threshold: f64,
    pub lash_window: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            r_min: 15.0,
            r_max: 130.0,
            id_sigma: 1.5,
            n_angles: 64,
            boundary_floor: 2.0,
            iris_center_tolerance: 15.0,
            collarette_fraction: 0.5,
            hough_vote_floor: 0.4,
            eyelid_edge_threshold: 15.0,
            gabor_threshold: 45.0,
            variance_threshold: 2.0,
            lash_window: 5,
        }
    }
}

/// Boolean image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    /// Nearest-pixel lookup; points off the image read as `false`.
    pub fn at(&self, x: f64, y: f64) -> bool {
        let (xi, yi) = (x.round(), y.round());
        if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
            return false;
        }
        self.get(xi as usize, yi as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Eyelid {
    Upper,
    Lower,
}

/// Fitted eyelid plus the horizontal clip through its iris intersection
/// nearest the pupil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyelidLine {
    pub kind: Eyelid,
    pub line: Line,
    pub clip_row: f64,
}

impl EyelidLine {
    pub fn occludes(&self, x: f64, y: f64) -> bool {
        let ly = self.line.y_at(x).unwrap_or(self.clip_row);
        match self.kind {
            Eyelid::Upper => y < ly.max(self.clip_row),
            Eyelid::Lower => y > ly.min(self.clip_row),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub pupil: Circle,
    pub iris: Circle,
    pub collarette: Circle,
    pub eyelid_lines: Vec<EyelidLine>,
    /// true = usable iris pixel.
    pub noise_mask: PixelMask,
}

impl Segmentation {
    /// Segmentation from known circles with no eyelids or lashes: the mask
    /// is the collarette annulus.
    pub fn from_circles(
        pupil: Circle,
        iris: Circle,
        fraction: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let collarette = isolate_collarette(&pupil, &iris, fraction)?;
        let mut mask = PixelMask::new(width, height, false);
        for y in 0..height {
            for x in 0..width {
                let d = pupil.distance_to_center(x as f64, y as f64);
                mask.set(x, y, d >= pupil.r && d <= collarette.r);
            }
        }
        Ok(Self {
            pupil,
            iris,
            collarette,
            eyelid_lines: Vec::new(),
            noise_mask: mask,
        })
    }
}

/// Float image with edge-clamped bilinear sampling.
#[derive(Debug, Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_image(img: &GrayImage) -> Self {
        Self {
            w: img.width(),
            h: img.height(),
            data: img.pixels().iter().map(|&p| p as f64).collect(),
        }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.at(x, y)
    }

    /// Bilinear sample, `None` outside the image.
    #[inline]
    fn sample(&self, x: f64, y: f64) -> Option<f64> {
        if x < 0.0 || y < 0.0 || x > (self.w - 1) as f64 || y > (self.h - 1) as f64 {
            return None;
        }
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.w - 1), (y0 + 1).min(self.h - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let a = self.at(x0, y0) * (1.0 - fx) + self.at(x1, y0) * fx;
        let b = self.at(x0, y1) * (1.0 - fx) + self.at(x1, y1) * fx;
        Some(a * (1.0 - fy) + b * fy)
    }

    fn blur(&self, sigma: f64) -> Plane {
        if sigma <= 0.0 {
            return self.clone();
        }
        let k = gaussian_kernel(sigma);
        let half = (k.len() / 2) as isize;
        let mut tmp = vec![0.0; self.data.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                tmp[y * self.w + x] = k
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| t * self.clamped(x as isize + i as isize - half, y as isize))
                    .sum();
            }
        }
        let t = Plane {
            w: self.w,
            h: self.h,
            data: tmp,
        };
        let mut out = vec![0.0; self.data.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                out[y * self.w + x] = k
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * t.clamped(x as isize, y as isize + i as isize - half))
                    .sum();
            }
        }
        Plane {
            w: self.w,
            h: self.h,
            data: out,
        }
    }

    /// Box-average downsampling by an integer factor.
    fn shrink(&self, s: usize) -> Plane {
        if s == 1 {
            return self.clone();
        }
        let (w, h) = (self.w / s, self.h / s);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in 0..s {
                    for dx in 0..s {
                        acc += self.at(x * s + dx, y * s + dy);
                    }
                }
                data.push(acc / (s * s) as f64);
            }
        }
        Plane { w, h, data }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil().max(1.0) as isize;
    let k: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn smooth_1d(x: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return x.to_vec();
    }
    let k = gaussian_kernel(sigma);
    let half = (k.len() / 2) as isize;
    (0..x.len() as isize)
        .map(|i| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (j, &t) in k.iter().enumerate() {
                let idx = i + j as isize - half;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += t * x[idx as usize];
                    wsum += t;
                }
            }
            acc / wsum
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Target {
    /// Full circle; response weighted by darkness just inside.
    Pupil,
    /// Lateral sectors only (eyelids sit above and below).
    Iris,
}

struct Probe {
    dirs: Vec<(f64, f64)>,
    target: Target,
    sigma: f64,
}

impl Probe {
    fn new(n_angles: usize, target: Target, sigma: f64) -> Self {
        let dirs = (0..n_angles)
            .map(|k| TAU * k as f64 / n_angles as f64)
            .filter(|&t| match target {
                Target::Pupil => true,
                Target::Iris => {
                    let d = t.sin().abs();
                    d <= FRAC_PI_4.sin() + 1e-12
                }
            })
            .map(|t| (t.cos(), t.sin()))
            .collect();
        Self {
            dirs,
            target,
            sigma,
        }
    }

    fn contour_mean(&self, plane: &Plane, cx: f64, cy: f64, r: f64) -> Option<f64> {
        let (mut acc, mut n) = (0.0, 0usize);
        for &(c, s) in &self.dirs {
            if let Some(v) = plane.sample(cx + r * c, cy + r * s) {
                acc += v;
                n += 1;
            }
        }
        (4 * n >= 3 * self.dirs.len()).then(|| acc / n as f64)
    }

    /// Best `(score, radius)` for a centre, radii in plane units.
    fn best_radius(
        &self,
        plane: &Plane,
        cx: f64,
        cy: f64,
        r_lo: f64,
        r_hi: f64,
        step: f64,
    ) -> Option<(f64, f64)> {
        if r_hi < r_lo {
            return None;
        }
        let pad = 3usize;
        let n = ((r_hi - r_lo) / step).floor() as usize + 1;
        let radii: Vec<f64> = (0..n + 2 * pad)
            .map(|k| r_lo + (k as f64 - pad as f64) * step)
            .collect();
        let mut means = Vec::with_capacity(radii.len());
        for &r in &radii {
            if r <= 0.5 {
                means.push(None);
                continue;
            }
            means.push(self.contour_mean(plane, cx, cy, r));
        }
        let deriv: Vec<f64> = (0..radii.len())
            .map(|k| {
                if k == 0 || k + 1 == radii.len() {
                    return 0.0;
                }
                match (means[k - 1], means[k + 1]) {
                    (Some(a), Some(b)) => (b - a) / (2.0 * step),
                    _ => 0.0,
                }
            })
            .collect();
        let smoothed = smooth_1d(&deriv, self.sigma);
        let mut best: Option<(f64, f64)> = None;
        let mut scores = vec![f64::NEG_INFINITY; radii.len()];
        for k in pad..pad + n {
            if means[k].is_none() {
                continue;
            }
            let weight = match self.target {
                Target::Iris => 1.0,
                Target::Pupil => match means[k - 2] {
                    Some(m) => (1.0 - m / 255.0).max(0.0),
                    None => 0.0,
                },
            };
            let score = smoothed[k] * weight;
            scores[k] = score;
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, radii[k]));
            }
        }
        let (score, r) = best?;
        // parabolic peak refinement
        let k = ((r - radii[0]) / step).round() as usize;
        let (a, b, c) = (scores[k - 1], scores[k], scores[k + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if a.is_finite() && c.is_finite() && denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        Some((score, r + shift * step))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    cx: f64,
    cy: f64,
    r: f64,
}

const SCALES: [usize; 3] = [4, 2, 1];
const KEEP: usize = 4;

fn centre_grid(lo: (f64, f64), hi: (f64, f64), step: f64) -> Vec<(f64, f64)> {
    let nx = ((hi.0 - lo.0) / step).floor().max(0.0) as usize + 1;
    let ny = ((hi.1 - lo.1) / step).floor().max(0.0) as usize + 1;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push((lo.0 + i as f64 * step, lo.1 + j as f64 * step));
        }
    }
    out
}

/// Coarse-to-fine search. All geometry in full-resolution pixels.
fn ido_search(
    planes: &[Plane],
    probe: &Probe,
    start: Vec<(f64, f64)>,
    admissible: &(dyn Fn(f64, f64) -> bool + Sync),
    r_range: (f64, f64),
) -> Option<Candidate> {
    let eval = |plane: &Plane, s: f64, cx: f64, cy: f64, r_lo: f64, r_hi: f64| {
        probe
            .best_radius(plane, cx / s, cy / s, r_lo / s, r_hi / s, 1.0)
            .map(|(score, r)| Candidate {
                score,
                cx,
                cy,
                r: r * s,
            })
    };
    let s0 = SCALES[0] as f64;
    let mut found: Vec<Candidate> = start
        .par_iter()
        .filter(|&&(x, y)| admissible(x, y))
        .filter_map(|&(x, y)| eval(&planes[0], s0, x, y, r_range.0, r_range.1))
        .collect();
    found.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in found {
        if kept.len() == KEEP {
            break;
        }
        if kept
            .iter()
            .all(|k| (k.cx - c.cx).hypot(k.cy - c.cy) > 2.0 * s0 || (k.r - c.r).abs() > 2.0 * s0)
        {
            kept.push(c);
        }
    }
    for (level, &s) in SCALES.iter().enumerate().skip(1) {
        let prev = SCALES[level - 1] as f64;
        let s = s as f64;
        kept = kept
            .iter()
            .filter_map(|c| {
                let grid = centre_grid((c.cx - prev, c.cy - prev), (c.cx + prev, c.cy + prev), s);
                let r_lo = (c.r - 2.0 * prev).max(r_range.0);
                let r_hi = (c.r + 2.0 * prev).min(r_range.1);
                grid.into_iter()
                    .filter(|&(x, y)| admissible(x, y))
                    .filter_map(|(x, y)| eval(&planes[level], s, x, y, r_lo, r_hi))
                    .max_by(|a, b| a.score.total_cmp(&b.score))
            })
            .collect();
    }
    // half-pixel centre polish at full resolution
    let best = kept
        .into_iter()
        .max_by(|a, b| a.score.total_cmp(&b.score))?;
    let plane = planes.last().unwrap();
    centre_grid(
        (best.cx - 0.5, best.cy - 0.5),
        (best.cx + 0.5, best.cy + 0.5),
        0.5,
    )
    .into_iter()
    .filter(|&(x, y)| admissible(x, y))
    .filter_map(|(x, y)| {
        eval(
            plane,
            1.0,
            x,
            y,
            (best.r - 2.0).max(r_range.0),
            (best.r + 2.0).min(r_range.1),
        )
    })
    .chain(std::iter::once(best))
    .max_by(|a, b| a.score.total_cmp(&b.score))
}

fn build_planes(img: &GrayImage) -> Vec<Plane> {
    let base = Plane::from_image(img).blur(0.8);
    SCALES.iter().map(|&s| base.shrink(s)).collect()
}

/// Integro-differential localisation of the pupil and iris boundaries with
/// default settings for everything except the radius range.
pub fn locate_pupil_iris(img: &GrayImage, r_min: f64, r_max: f64) -> Result<(Circle, Circle)> {
    let cfg = SegmentConfig {
        r_min,
        r_max,
        ..SegmentConfig::default()
    };
    locate_pupil_iris_with(img, &cfg)
}

pub fn locate_pupil_iris_with(img: &GrayImage, cfg: &SegmentConfig) -> Result<(Circle, Circle)> {
    if !(cfg.r_min > 0.0 && cfg.r_min < cfg.r_max) {
        return Err(IrisError::InvalidArgument(format!(
            "radius range [{}, {}]",
            cfg.r_min, cfg.r_max
        )));
    }
    img.check_segmentable()?;
    let planes = build_planes(img);
    let (w, h) = (img.width() as f64, img.height() as f64);

    let probe = Probe::new(cfg.n_angles, Target::Pupil, cfg.id_sigma);
    let s0 = SCALES[0] as f64;
    let start = centre_grid(
        (cfg.r_min, cfg.r_min),
        (w - 1.0 - cfg.r_min, h - 1.0 - cfg.r_min),
        s0,
    );
    let any = |_: f64, _: f64| true;
    let p = ido_search(&planes, &probe, start, &any, (cfg.r_min, cfg.r_max))
        .filter(|c| c.score >= cfg.boundary_floor)
        .ok_or_else(|| IrisError::NoBoundaryFound("pupil".into()))?;
    let pupil = Circle::new(p.cx, p.cy, p.r);

    let margin = (0.25 * pupil.r).max(6.0);
    let r_lo = pupil.r + margin;
    if r_lo >= cfg.r_max {
        return Err(IrisError::NoBoundaryFound(
            "iris radius range is empty".into(),
        ));
    }
    let tol = cfg.iris_center_tolerance;
    let probe = Probe::new(cfg.n_angles, Target::Iris, cfg.id_sigma);
    let start = centre_grid(
        (pupil.cx - tol, pupil.cy - tol),
        (pupil.cx + tol, pupil.cy + tol),
        s0,
    );
    let near = move |x: f64, y: f64| (x - pupil.cx).hypot(y - pupil.cy) <= tol;
    let i = ido_search(&planes, &probe, start, &near, (r_lo, cfg.r_max))
        .filter(|c| c.score >= cfg.boundary_floor)
        .ok_or_else(|| IrisError::NoBoundaryFound("iris".into()))?;
    let iris = Circle::new(i.cx, i.cy, i.r);
    if !iris.contains(pupil.cx, pupil.cy) {
        return Err(IrisError::NoBoundaryFound(
            "pupil centre outside the iris".into(),
        ));
    }
    Ok((pupil, iris))
}

pub fn isolate_collarette(pupil: &Circle, iris: &Circle, fraction: f64) -> Result<Circle> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(IrisError::InvalidArgument(format!(
            "collarette fraction {fraction} outside (0, 1]"
        )));
    }
    Ok(Circle::new(
        pupil.cx,
        pupil.cy,
        pupil.r + fraction * (iris.r - pupil.r),
    ))
}

/// Vertical Sobel gradient, scaled to gray levels per pixel.
fn sobel_y(p: &Plane) -> Vec<f64> {
    let mut out = vec![0.0; p.w * p.h];
    for y in 0..p.h as isize {
        for x in 0..p.w as isize {
            let below =
                p.clamped(x - 1, y + 1) + 2.0 * p.clamped(x, y + 1) + p.clamped(x + 1, y + 1);
            let above =
                p.clamped(x - 1, y - 1) + 2.0 * p.clamped(x, y - 1) + p.clamped(x + 1, y - 1);
            out[y as usize * p.w + x as usize] = (below - above) / 8.0;
        }
    }
    out
}

const HOUGH_THETA_DEG: (i32, i32) = (60, 120);

fn hough_line(points: &[(f64, f64)], floor: f64) -> Option<Line> {
    if points.is_empty() {
        return None;
    }
    let thetas: Vec<f64> = (HOUGH_THETA_DEG.0..=HOUGH_THETA_DEG.1)
        .map(|d| (d as f64).to_radians())
        .collect();
    let rho_max = points
        .iter()
        .map(|&(x, y)| x.hypot(y))
        .fold(0.0, f64::max)
        .ceil() as i64
        + 1;
    let n_rho = (2 * rho_max + 1) as usize;
    let mut acc = vec![0u32; thetas.len() * n_rho];
    for &(x, y) in points {
        for (t, &th) in thetas.iter().enumerate() {
            let rho = (x * th.cos() + y * th.sin()).round() as i64 + rho_max;
            acc[t * n_rho + rho as usize] += 1;
        }
    }
    let (best, &votes) = acc
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    if (votes as f64) < floor {
        return None;
    }
    let th = thetas[best / n_rho];
    let rho = (best % n_rho) as f64 - rho_max as f64;
    // least-squares polish of y = a + b·x on the supporting points
    let support: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| (x * th.cos() + y * th.sin() - rho).abs() <= 1.5)
        .collect();
    let n = support.len() as f64;
    let mx = support.iter().map(|p| p.0).sum::<f64>() / n;
    let my = support.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = support.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = support.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx < 1e-9 {
        return Some(Line::from_normal_angle(th, rho));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let norm = b.hypot(1.0);
    Some(Line {
        a: -b / norm,
        b: 1.0 / norm,
        c: a / norm,
    })
}

/// Upper and lower eyelid lines (each optional) by a linear Hough
/// transform on sign-constrained vertical edges inside the iris.
pub fn detect_eyelids(
    img: &GrayImage,
    pupil: &Circle,
    iris: &Circle,
    cfg: &SegmentConfig,
) -> Vec<EyelidLine> {
    let plane = Plane::from_image(img).blur(1.0);
    let gy = sobel_y(&plane);
    let (mut upper, mut lower) = (Vec::new(), Vec::new());
    for y in 0..plane.h {
        for x in 0..plane.w {
            let (fx, fy) = (x as f64, y as f64);
            if iris.distance_to_center(fx, fy) > iris.r - 3.0
                || pupil.distance_to_center(fx, fy) < pupil.r + 3.0
            {
                continue;
            }
            let g = gy[y * plane.w + x];
            if fy < pupil.cy && g < -cfg.eyelid_edge_threshold {
                upper.push((fx, fy));
            } else if fy > pupil.cy && g > cfg.eyelid_edge_threshold {
                lower.push((fx, fy));
            }
        }
    }
    let floor = cfg.hough_vote_floor * iris.r;
    let mut out = Vec::new();
    for (kind, pts) in [(Eyelid::Upper, upper), (Eyelid::Lower, lower)] {
        let Some(line) = hough_line(&pts, floor) else {
            continue;
        };
        let hits = line.intersect_circle(iris);
        let clip_row = hits
            .iter()
            .min_by(|a, b| {
                pupil
                    .distance_to_center(a.0, a.1)
                    .total_cmp(&pupil.distance_to_center(b.0, b.1))
            })
            .map(|p| p.1)
            .or_else(|| line.y_at(pupil.cx))
            .unwrap_or(pupil.cy);
        out.push(EyelidLine {
            kind,
            line,
            clip_row,
        });
    }
    out
}

const GABOR_SIGMA: f64 = 1.0;
const GABOR_WAVELENGTH: f64 = 3.0;

/// Zero-mean even Gabor kernel along a row, scaled to unit centre tap.
fn gabor_kernel() -> Vec<f64> {
    let half = (3.0 * GABOR_SIGMA).ceil() as isize;
    let env: Vec<f64> = (-half..=half)
        .map(|t| (-(t * t) as f64 / (2.0 * GABOR_SIGMA * GABOR_SIGMA)).exp())
        .collect();
    let carrier: Vec<f64> = (-half..=half)
        .map(|t| (TAU * t as f64 / GABOR_WAVELENGTH).cos())
        .collect();
    let raw: Vec<f64> = env.iter().zip(&carrier).map(|(e, c)| e * c).collect();
    let dc = raw.iter().sum::<f64>() / env.iter().sum::<f64>();
    let k: Vec<f64> = raw.iter().zip(&env).map(|(r, e)| r - dc * e).collect();
    let c = k[half as usize];
    k.into_iter().map(|v| v / c).collect()
}

/// Eyelash mask (true = eyelash). A pixel is flagged when the even Gabor
/// response along its row falls below `-gabor_threshold` (a thin dark
/// line), or when its `window × window` neighbourhood has variance below
/// `variance_threshold` and mean below the image median (clumped lashes).
pub fn detect_eyelashes(
    img: &GrayImage,
    gabor_threshold: f64,
    variance_threshold: f64,
    window: usize,
) -> Result<PixelMask> {
    if !(gabor_threshold > 0.0 && variance_threshold > 0.0) {
        return Err(IrisError::InvalidArgument(
            "eyelash thresholds must be positive".into(),
        ));
    }
    if window % 2 == 0 || window == 0 {
        return Err(IrisError::InvalidArgument(format!(
            "window {window} must be odd"
        )));
    }
    let plane = Plane::from_image(img);
    let (w, h) = (plane.w, plane.h);
    let mut sorted = plane.data.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];

    let k = gabor_kernel();
    let kh = (k.len() / 2) as isize;
    // integral images for windowed mean / variance
    let mut s1 = vec![0.0; (w + 1) * (h + 1)];
    let mut s2 = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            let v = plane.at(x, y);
            let i = (y + 1) * (w + 1) + x + 1;
            s1[i] = v + s1[i - 1] + s1[i - (w + 1)] - s1[i - (w + 1) - 1];
            s2[i] = v * v + s2[i - 1] + s2[i - (w + 1)] - s2[i - (w + 1) - 1];
        }
    }
    let rect = |s: &[f64], x0: usize, y0: usize, x1: usize, y1: usize| {
        s[y1 * (w + 1) + x1] - s[y0 * (w + 1) + x1] - s[y1 * (w + 1) + x0] + s[y0 * (w + 1) + x0]
    };
    let half = window / 2;
    let mut mask = PixelMask::new(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let resp: f64 = k
                .iter()
                .enumerate()
                .map(|(i, &t)| t * plane.clamped(x as isize + i as isize - kh, y as isize))
                .sum();
            let mut lash = resp < -gabor_threshold;
            if !lash {
                let (x0, y0) = (x.saturating_sub(half), y.saturating_sub(half));
                let (x1, y1) = ((x + half + 1).min(w), (y + half + 1).min(h));
                let n = ((x1 - x0) * (y1 - y0)) as f64;
                let mean = rect(&s1, x0, y0, x1, y1) / n;
                let var = (rect(&s2, x0, y0, x1, y1) / n - mean * mean).max(0.0);
                lash = var < variance_threshold && mean < median;
            }
            mask.set(x, y, lash);
        }
    }
    Ok(mask)
}

/// Full segmentation: boundaries, collarette, eyelids, eyelashes and the
/// usable-pixel mask.
pub fn segment(img: &GrayImage, cfg: &SegmentConfig) -> Result<Segmentation> {
    let (pupil, iris) = locate_pupil_iris_with(img, cfg)?;
    let collarette = isolate_collarette(&pupil, &iris, cfg.collarette_fraction)?;
    let eyelid_lines = detect_eyelids(img, &pupil, &iris, cfg);
    let lashes = detect_eyelashes(
        img,
        cfg.gabor_threshold,
        cfg.variance_threshold,
        cfg.lash_window,
    )?;
    let mut mask = PixelMask::new(img.width(), img.height(), false);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (fx, fy) = (x as f64, y as f64);
            let d = pupil.distance_to_center(fx, fy);
            let ok = d >= pupil.r
                && d <= collarette.r
                && iris.contains(fx, fy)
                && !eyelid_lines.iter().any(|l| l.occludes(fx, fy))
                && !lashes.get(x, y);
            mask.set(x, y, ok);
        }
    }
    Ok(Segmentation {
        pupil,
        iris,
        collarette,
        eyelid_lines,
        noise_mask: mask,
    })
}

/// Gray overlay for inspection: the source dimmed outside the usable mask,
/// boundaries drawn white.
pub fn overlay(img: &GrayImage, seg: &Segmentation) -> GrayImage {
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !seg.noise_mask.get(x, y) {
                out.set(x, y, img.get(x, y) / 3);
            }
        }
    }
    for c in [seg.pupil, seg.iris, seg.collarette] {
        let n = (TAU * c.r).ceil() as usize * 2;
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            let (x, y) = (
                (c.cx + c.r * t.cos()).round(),
                (c.cy + c.r * t.sin()).round(),
            );
            if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
                out.set(x as usize, y as usize, 255);
            }
        }
    }
    out
}
