//! Image ingestion, dataset indexing and the synthetic eye generator.
//!
//! The generator draws a dark pupil, a textured iris annulus and a bright
//! sclera. Iris texture is defined in pupil-relative polar coordinates
//! (normalized radius between the pupil and iris boundaries, angle about the
//! pupil center), so the same texture seed survives translation, scaling and
//! pupil dilation, and a rotation of the texture maps to a circular shift of
//! the normalized iris.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageError, ImageFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{IrisError, Result};
use crate::geometry::Circle;

pub const MIN_SEGMENT_DIM: usize = 64;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(IrisError::DimMismatch(format!(
                "{} pixels for a {}x{} image",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear sample at real coordinates; `None` outside the image.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if x < 0.0 || y < 0.0 || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p = |xx, yy| self.get(xx, yy) as f64;
        let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
        let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    pub fn check_segmentable(&self) -> Result<()> {
        if self.width < MIN_SEGMENT_DIM || self.height < MIN_SEGMENT_DIM {
            return Err(IrisError::TooSmall(format!(
                "{}x{} image; segmentation needs at least {}x{}",
                self.width, self.height, MIN_SEGMENT_DIM, MIN_SEGMENT_DIM
            )));
        }
        Ok(())
    }

    fn to_image(&self) -> image::GrayImage {
        image::GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("pixel buffer length checked at construction")
    }
}

fn format_from_path(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" | "pnm" => Ok(ImageFormat::Pnm),
        "bmp" => Ok(ImageFormat::Bmp),
        "png" => Ok(ImageFormat::Png),
        other => Err(IrisError::UnsupportedFormat(format!(
            "extension '{other}' (expected pgm, bmp or png)"
        ))),
    }
}

fn map_image_error(path: &Path, err: ImageError) -> IrisError {
    match err {
        ImageError::Unsupported(e) => {
            IrisError::UnsupportedFormat(format!("{}: {e}", path.display()))
        }
        ImageError::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => {
            IrisError::FileNotFound(path.to_path_buf())
        }
        other => IrisError::CorruptImage(format!("{}: {other}", path.display())),
    }
}

/// Load an 8-bit grayscale PGM, BMP or PNG. RGB images are accepted only
/// when all three channels are equal.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    if !path.exists() {
        return Err(IrisError::FileNotFound(path.to_path_buf()));
    }
    let format = format_from_path(path)?;
    let bytes = std::fs::read(path)?;
    let decoded = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| map_image_error(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageRgb8(buf) => {
            let raw = buf.into_raw();
            gray_from_channels(path, &raw, 3)?
        }
        DynamicImage::ImageRgba8(buf) => {
            let raw = buf.into_raw();
            gray_from_channels(path, &raw, 4)?
        }
        other => {
            return Err(IrisError::UnsupportedFormat(format!(
                "{}: pixel type {:?} is not 8-bit gray",
                path.display(),
                other.color()
            )))
        }
    };
    GrayImage::new(w, h, pixels)
}

fn gray_from_channels(path: &Path, raw: &[u8], stride: usize) -> Result<Vec<u8>> {
    raw.chunks_exact(stride)
        .map(|px| {
            if px[0] == px[1] && px[1] == px[2] {
                Ok(px[0])
            } else {
                Err(IrisError::UnsupportedFormat(format!(
                    "{}: color image with unequal channels",
                    path.display()
                )))
            }
        })
        .collect()
}

/// Save as PGM, BMP or PNG depending on the extension.
pub fn save_image(img: &GrayImage, path: &Path) -> Result<()> {
    let format = format_from_path(path)?;
    img.to_image()
        .save_with_format(path, format)
        .map_err(|e| match e {
            ImageError::IoError(io) => IrisError::Io(io),
            other => IrisError::UnsupportedFormat(other.to_string()),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub subject_id: String,
    pub sample_id: String,
    pub session: u32,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetIndex {
    pub entries: Vec<DatasetEntry>,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subject_count(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.subject_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }
}

/// CASIA v1 ships `001/1/001_1_1.bmp`: subject directory, session
/// directory, then `subject_session_sample`.
pub const CASIA_V1_LAYOUT: &str = "{subject}/{session}/{subject}_{session}_{sample}.bmp";

struct LayoutMatcher {
    regex: Regex,
    /// Placeholder name for each capture group, in group order.
    groups: Vec<&'static str>,
}

impl LayoutMatcher {
    fn compile(layout: &str) -> Result<Self> {
        let mut pattern = String::from("^");
        let mut groups = Vec::new();
        let mut rest = layout;
        while !rest.is_empty() {
            if let Some(stripped) = rest.strip_prefix('{') {
                let end = stripped.find('}').ok_or_else(|| {
                    IrisError::InvalidArgument(format!("unclosed placeholder in layout '{layout}'"))
                })?;
                let name = match &stripped[..end] {
                    "subject" => "subject",
                    "session" => "session",
                    "sample" => "sample",
                    other => {
                        return Err(IrisError::InvalidArgument(format!(
                            "unknown layout placeholder '{{{other}}}'"
                        )))
                    }
                };
                pattern.push_str("([^/]+?)");
                groups.push(name);
                rest = &stripped[end + 1..];
            } else {
                let c = rest.chars().next().unwrap();
                match c {
                    '*' => pattern.push_str("[^/]*"),
                    '?' => pattern.push_str("[^/]"),
                    _ => pattern.push_str(&regex::escape(&c.to_string())),
                }
                rest = &rest[c.len_utf8()..];
            }
        }
        pattern.push('$');
        if !groups.contains(&"subject") || !groups.contains(&"sample") {
            return Err(IrisError::InvalidArgument(format!(
                "layout '{layout}' needs both {{subject}} and {{sample}}"
            )));
        }
        let regex = Regex::new(&pattern).map_err(|e| IrisError::InvalidArgument(e.to_string()))?;
        Ok(Self { regex, groups })
    }

    /// Returns (subject, session, sample) when the path matches and repeated
    /// placeholders agree.
    fn match_path(&self, rel: &str) -> Option<(String, Option<String>, String)> {
        let caps = self.regex.captures(rel)?;
        let mut subject: Option<&str> = None;
        let mut session: Option<&str> = None;
        let mut sample: Option<&str> = None;
        for (i, name) in self.groups.iter().enumerate() {
            let value = caps.get(i + 1)?.as_str();
            let slot = match *name {
                "subject" => &mut subject,
                "session" => &mut session,
                _ => &mut sample,
            };
            match slot {
                Some(prev) if *prev != value => return None,
                _ => *slot = Some(value),
            }
        }
        Some((
            subject?.to_string(),
            session.map(str::to_string),
            sample?.to_string(),
        ))
    }
}

/// Index every file under `root` whose relative path matches `layout`.
///
/// When the layout carries a `{session}` placeholder the sample id is
/// `session_sample`, since CASIA restarts sample numbering per session.
pub fn scan_dataset(root: &Path, layout: &str) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(IrisError::FileNotFound(root.to_path_buf()));
    }
    let matcher = LayoutMatcher::compile(layout)?;
    let mut entries = Vec::new();
    for item in WalkDir::new(root).follow_links(true) {
        let item = item.map_err(|e| IrisError::Io(std::io::Error::other(e.to_string())))?;
        if !item.file_type().is_file() {
            continue;
        }
        let rel = match item.path().strip_prefix(root) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let rel_str: String = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        if let Some((subject, session, sample)) = matcher.match_path(&rel_str) {
            let session_no = match &session {
                Some(s) => s.parse::<u32>().map_err(|_| {
                    IrisError::Parse(format!("session '{s}' in {rel_str} is not a number"))
                })?,
                None => 1,
            };
            let sample_id = match &session {
                Some(s) => format!("{s}_{sample}"),
                None => sample,
            };
            entries.push(DatasetEntry {
                subject_id: subject,
                sample_id,
                session: session_no,
                path: item.path().to_path_buf(),
            });
        }
    }
    if entries.is_empty() {
        return Err(IrisError::EmptyDataset(root.to_path_buf()));
    }
    entries.sort_by(|a, b| {
        (&a.subject_id, a.session, &a.sample_id).cmp(&(&b.subject_id, b.session, &b.sample_id))
    });
    let mut seen = HashSet::new();
    for e in &entries {
        if !seen.insert((e.subject_id.clone(), e.sample_id.clone())) {
            return Err(IrisError::InvalidArgument(format!(
                "duplicate entry subject={} sample={}",
                e.subject_id, e.sample_id
            )));
        }
    }
    Ok(DatasetIndex { entries })
}

/// Parameters of one synthetic eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthEyeSpec {
    pub pupil: Circle,
    pub iris: Circle,
    pub texture_seed: u64,
    /// Sensor noise, 0..1 (σ = 30 gray levels at 1).
    pub noise_level: f64,
    /// Eyelid coverage, 0..1. At 1 the upper lid reaches the top of the
    /// pupil and the lower lid covers half the band below it.
    pub eyelid_occlusion: f64,
    /// Texture rotation about the pupil center, radians.
    pub rotation: f64,
    /// Seed for the sensor noise realisation.
    pub noise_seed: u64,
}

impl SynthEyeSpec {
    pub fn new(pupil: Circle, iris: Circle, texture_seed: u64) -> Self {
        Self {
            pupil,
            iris,
            texture_seed,
            noise_level: 0.0,
            eyelid_occlusion: 0.0,
            rotation: 0.0,
            noise_seed: 0,
        }
    }

    /// Row coordinates of the upper and lower eyelid chords, if drawn.
    pub fn eyelid_chords(&self) -> (Option<f64>, Option<f64>) {
        let e = self.eyelid_occlusion;
        if e <= 0.0 {
            return (None, None);
        }
        let iris_top = self.iris.cy - self.iris.r;
        let iris_bottom = self.iris.cy + self.iris.r;
        let pupil_top = self.pupil.cy - self.pupil.r;
        let pupil_bottom = self.pupil.cy + self.pupil.r;
        let upper = iris_top + e * (pupil_top - iris_top);
        let lower = iris_bottom - 0.5 * e * (iris_bottom - pupil_bottom);
        (Some(upper), Some(lower))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            pupil: self.pupil.scaled(s),
            iris: self.iris.scaled(s),
            ..*self
        }
    }

    fn validate(&self, width: usize, height: usize) -> Result<()> {
        let oob = |reason: String| IrisError::SpecOutOfBounds {
            width,
            height,
            reason,
        };
        for (name, v) in [
            ("noise_level", self.noise_level),
            ("eyelid_occlusion", self.eyelid_occlusion),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(oob(format!("{name}={v} outside [0,1]")));
            }
        }
        let c = &self.iris;
        if c.r <= 0.0 || self.pupil.r <= 0.0 {
            return Err(oob("non-positive radius".into()));
        }
        if c.cx - c.r < 0.0
            || c.cy - c.r < 0.0
            || c.cx + c.r > (width - 1) as f64
            || c.cy + c.r > (height - 1) as f64
        {
            return Err(oob(format!(
                "iris circle ({}, {}, r={}) leaves the image",
                c.cx, c.cy, c.r
            )));
        }
        if self.pupil.center_distance(&self.iris) + self.pupil.r >= self.iris.r {
            return Err(oob("pupil is not strictly inside the iris".into()));
        }
        Ok(())
    }
}

pub const PUPIL_LEVEL: f64 = 12.0;
pub const SCLERA_LEVEL: f64 = 215.0;
pub const LID_LEVEL: f64 = 175.0;
pub const IRIS_MEAN_LEVEL: f64 = 112.0;
pub const IRIS_TEXTURE_GAIN: f64 = 75.0;

/// (radial cells, angular cells, weight) per octave.
const OCTAVES: [(usize, usize, f64); 3] = [(4, 24, 1.0), (8, 48, 0.7), (16, 96, 0.45)];

/// Seeded multi-octave value noise on (normalized radius, angle); periodic
/// in angle. The coarsest (DC-like) octave is left out, which band-passes
/// the texture to mid frequencies.
#[derive(Debug, Clone)]
pub struct IrisTexture {
    octaves: Vec<NoiseGrid>,
    total_weight: f64,
}

#[derive(Debug, Clone)]
struct NoiseGrid {
    radial: usize,
    angular: usize,
    weight: f64,
    values: Vec<f64>,
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

impl NoiseGrid {
    fn sample(&self, rho: f64, theta: f64) -> f64 {
        let fr = rho.clamp(0.0, 1.0) * self.radial as f64;
        let r0 = (fr.floor() as usize).min(self.radial);
        let r1 = (r0 + 1).min(self.radial);
        let tr = smooth(fr - r0 as f64);
        let ft = theta.rem_euclid(TAU) / TAU * self.angular as f64;
        let t0 = (ft.floor() as usize) % self.angular;
        let t1 = (t0 + 1) % self.angular;
        let tt = smooth(ft - ft.floor());
        let v = |r: usize, t: usize| self.values[r * self.angular + t];
        let a = v(r0, t0) * (1.0 - tt) + v(r0, t1) * tt;
        let b = v(r1, t0) * (1.0 - tt) + v(r1, t1) * tt;
        a * (1.0 - tr) + b * tr
    }
}

impl IrisTexture {
    pub fn new(seed: u64) -> Self {
        let octaves: Vec<NoiseGrid> = OCTAVES
            .iter()
            .enumerate()
            .map(|(i, &(radial, angular, weight))| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64 + 1),
                );
                let values = (0..(radial + 1) * angular)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                NoiseGrid {
                    radial,
                    angular,
                    weight,
                    values,
                }
            })
            .collect();
        let total_weight = octaves.iter().map(|o| o.weight).sum();
        Self {
            octaves,
            total_weight,
        }
    }

    /// Texture value, roughly in [-1, 1].
    pub fn sample(&self, rho: f64, theta: f64) -> f64 {
        self.octaves
            .iter()
            .map(|o| o.weight * o.sample(rho, theta))
            .sum::<f64>()
            / self.total_weight
            * 1.6
    }
}

const SUPERSAMPLE: [f64; 3] = [-1.0 / 3.0, 0.0, 1.0 / 3.0];

/// Render a synthetic eye. Pure function of its arguments.
pub fn synth_eye(spec: &SynthEyeSpec, width: usize, height: usize) -> Result<GrayImage> {
    spec.validate(width, height)?;
    let texture = IrisTexture::new(spec.texture_seed);
    let (upper, lower) = spec.eyelid_chords();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed ^ 0xA5A5_5A5A_0F0F_F0F0);
    let sigma = 30.0 * spec.noise_level;
    let noise = Normal::new(0.0, sigma.max(1e-12)).expect("finite sigma");
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for dy in SUPERSAMPLE {
                for dx in SUPERSAMPLE {
                    acc +=
                        scene_intensity(spec, &texture, upper, lower, x as f64 + dx, y as f64 + dy);
                }
            }
            let mut v = acc / 9.0;
            if sigma > 0.0 {
                v += noise.sample(&mut rng);
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(width, height, pixels)
}

fn scene_intensity(
    spec: &SynthEyeSpec,
    texture: &IrisTexture,
    upper: Option<f64>,
    lower: Option<f64>,
    x: f64,
    y: f64,
) -> f64 {
    if upper.is_some_and(|u| y < u) || lower.is_some_and(|l| y > l) {
        return LID_LEVEL;
    }
    let p = &spec.pupil;
    let d = p.distance_to_center(x, y);
    if d < p.r {
        return PUPIL_LEVEL;
    }
    if !spec.iris.contains(x, y) {
        return SCLERA_LEVEL;
    }
    let theta = (y - p.cy).atan2(x - p.cx);
    let outer = spec.iris.ray_exit(p.cx, p.cy, theta);
    let rho = ((d - p.r) / (outer - p.r)).clamp(0.0, 1.0);
    IRIS_MEAN_LEVEL + IRIS_TEXTURE_GAIN * texture.sample(rho, theta - spec.rotation)
}

/// One rendered sample of a synthetic corpus.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub subject: usize,
    pub sample: usize,
    pub spec: SynthEyeSpec,
}

pub const SYNTH_WIDTH: usize = 320;
pub const SYNTH_HEIGHT: usize = 280;

/// Per-subject base geometry with per-sample jitter (translation, pupil
/// dilation, noise, eyelids). Texture seed = subject identity.
pub fn synth_corpus_specs(subjects: usize, samples: usize, seed: u64) -> Vec<SynthSample> {
    let mut out = Vec::with_capacity(subjects * samples);
    for s in 0..subjects {
        let mut subject_rng = ChaCha8Rng::seed_from_u64(seed ^ ((s as u64 + 1) << 20));
        let pupil_r = subject_rng.gen_range(26.0..36.0);
        let iris_r = subject_rng.gen_range(82.0..98.0);
        let texture_seed = seed
            .wrapping_mul(1_000_003)
            .wrapping_add(s as u64 * 7919 + 17);
        for k in 0..samples {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ ((s as u64 + 1) << 20) ^ ((k as u64 + 1) << 40));
            let cx = 160.0 + rng.gen_range(-6.0..6.0);
            let cy = 140.0 + rng.gen_range(-5.0..5.0);
            let pdx = rng.gen_range(-2.0..2.0);
            let pdy = rng.gen_range(-2.0..2.0);
            let dilation = rng.gen_range(-2.0..2.0);
            let spec = SynthEyeSpec {
                pupil: Circle::new(cx + pdx, cy + pdy, pupil_r + dilation),
                iris: Circle::new(cx, cy, iris_r),
                texture_seed,
                noise_level: rng.gen_range(0.02..0.08),
                eyelid_occlusion: if rng.gen_bool(0.5) {
                    rng.gen_range(0.1..0.35)
                } else {
                    0.0
                },
                rotation: 0.0,
                noise_seed: rng.gen(),
            };
            out.push(SynthSample {
                subject: s,
                sample: k,
                spec,
            });
        }
    }
    out
}

pub fn synth_subject_id(subject: usize) -> String {
    format!("S{:03}", subject + 1)
}

pub fn synth_sample_id(sample: usize) -> String {
    format!("{}", sample + 1)
}

/// Layout of trees written by [`write_synth_tree`].
pub const SYNTH_LAYOUT: &str = "{subject}/{subject}_{sample}.png";

/// Render a synthetic corpus to `root/<subject>/<subject>_<sample>.png`.
pub fn write_synth_tree(root: &Path, subjects: usize, samples: usize, seed: u64) -> Result<usize> {
    let specs = synth_corpus_specs(subjects, samples, seed);
    for s in &specs {
        let dir = root.join(synth_subject_id(s.subject));
        std::fs::create_dir_all(&dir)?;
        let img = synth_eye(&s.spec, SYNTH_WIDTH, SYNTH_HEIGHT)?;
        let name = format!(
            "{}_{}.png",
            synth_subject_id(s.subject),
            synth_sample_id(s.sample)
        );
        save_image(&img, &dir.join(name))?;
    }
    Ok(specs.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> SynthEyeSpec {
        SynthEyeSpec::new(
            Circle::new(160.0, 140.0, 30.0),
            Circle::new(160.0, 140.0, 90.0),
            7,
        )
    }

    #[test]
    fn pupil_center_is_dark() {
        let img = synth_eye(&base_spec(), 320, 280).unwrap();
        assert_eq!((img.width(), img.height()), (320, 280));
        assert!(img.get(160, 140) < 30);
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut spec = base_spec();
        spec.noise_level = 0.3;
        spec.noise_seed = 11;
        let a = synth_eye(&spec, 320, 280).unwrap();
        let b = synth_eye(&spec, 320, 280).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_decorrelate() {
        let tex_a = IrisTexture::new(1);
        let tex_b = IrisTexture::new(2);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..50 {
            for j in 0..200 {
                let (r, t) = (i as f64 / 50.0, j as f64 / 200.0 * TAU);
                let (a, b) = (tex_a.sample(r, t), tex_b.sample(r, t));
                sab += a * b;
                saa += a * a;
                sbb += b * b;
            }
        }
        assert!((sab / (saa * sbb).sqrt()).abs() < 0.3);
    }

    #[test]
    fn oversized_iris_is_rejected() {
        let mut spec = base_spec();
        spec.iris.r = 200.0;
        assert!(matches!(
            synth_eye(&spec, 320, 280),
            Err(IrisError::SpecOutOfBounds { .. })
        ));
    }

    #[test]
    fn layout_repeated_placeholder_must_agree() {
        let m = LayoutMatcher::compile(CASIA_V1_LAYOUT).unwrap();
        assert_eq!(
            m.match_path("001/1/001_1_3.bmp"),
            Some(("001".into(), Some("1".into()), "3".into()))
        );
        assert_eq!(m.match_path("001/1/002_1_3.bmp"), None);
        assert_eq!(m.match_path("001/1/001_1_3.png"), None);
    }

    #[test]
    fn bilinear_interpolates() {
        let img = GrayImage::new(2, 2, vec![0, 100, 100, 200]).unwrap();
        assert_eq!(img.bilinear(0.5, 0.5), Some(100.0));
        assert_eq!(img.bilinear(1.5, 0.0), None);
    }
}
