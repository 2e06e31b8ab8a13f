//! Image to strip to template.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::EvalSample;
use crate::dataio::{
    load_image, synth_corpus_specs, synth_eye, synth_sample_id, synth_subject_id, DatasetEntry,
    DatasetIndex, GrayImage, SYNTH_HEIGHT, SYNTH_WIDTH,
};
use crate::error::Result;
use crate::features::{Extractor, FeatureVector, Method};
use crate::normalize::{mid_strip, rubber_sheet, NormalizedIris, Strip, ANGULAR_RES, RADIAL_RES};
use crate::segment::{segment, SegmentConfig, Segmentation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub segment: SegmentConfig,
    pub radial_res: usize,
    pub angular_res: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segment: SegmentConfig::default(),
            radial_res: RADIAL_RES,
            angular_res: ANGULAR_RES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub segmentation: Segmentation,
    pub normalized: NormalizedIris,
    pub strip: Strip,
}

pub fn prepare(img: &GrayImage, cfg: &PipelineConfig) -> Result<Prepared> {
    img.check_segmentable()?;
    let segmentation = segment(img, &cfg.segment)?;
    let normalized = rubber_sheet(img, &segmentation, cfg.radial_res, cfg.angular_res)?;
    let strip = mid_strip(&normalized)?;
    Ok(Prepared {
        segmentation,
        normalized,
        strip,
    })
}

pub fn image_to_strip(img: &GrayImage, cfg: &PipelineConfig) -> Result<Strip> {
    Ok(prepare(img, cfg)?.strip)
}

pub fn image_to_template(
    img: &GrayImage,
    cfg: &PipelineConfig,
    ex: &Extractor,
    method: Method,
) -> Result<FeatureVector> {
    ex.extract(&image_to_strip(img, cfg)?, method)
}

/// Rank of a sample id for ordering: numeric ids by value, the rest after.
fn sample_key(id: &str) -> (u64, String) {
    let digits: String = id.chars().filter(|c| c.is_ascii_digit()).collect();
    (digits.parse().unwrap_or(u64::MAX), id.to_string())
}

/// Load an indexed dataset for evaluation. With sessions, session 1 trains;
/// otherwise the first `train_samples` samples of each subject do.
pub fn load_eval_samples(index: &DatasetIndex, train_samples: usize) -> Result<Vec<EvalSample>> {
    let has_sessions = index.entries.iter().any(|e| e.session != 1);
    let mut order: Vec<&DatasetEntry> = index.entries.iter().collect();
    order.sort_by(|a, b| {
        (&a.subject_id, a.session, sample_key(&a.sample_id)).cmp(&(
            &b.subject_id,
            b.session,
            sample_key(&b.sample_id),
        ))
    });
    let mut out = Vec::with_capacity(order.len());
    let mut rank = 0;
    for (i, e) in order.iter().enumerate() {
        if i == 0 || order[i - 1].subject_id != e.subject_id {
            rank = 0;
        }
        let train = if has_sessions {
            e.session == 1
        } else {
            rank < train_samples
        };
        rank += 1;
        out.push(EvalSample {
            subject: e.subject_id.clone(),
            sample: e.sample_id.clone(),
            train,
            image: load_image(&e.path)?,
        });
    }
    Ok(out)
}

/// Render the synthetic corpus in memory; samples `1..=train_samples` train.
pub fn synth_eval_samples(
    subjects: usize,
    samples: usize,
    seed: u64,
    train_samples: usize,
) -> Result<Vec<EvalSample>> {
    synth_corpus_specs(subjects, samples, seed)
        .par_iter()
        .map(|s| {
            Ok(EvalSample {
                subject: synth_subject_id(s.subject),
                sample: synth_sample_id(s.sample),
                train: s.sample < train_samples,
                image: synth_eye(&s.spec, SYNTH_WIDTH, SYNTH_HEIGHT)?,
            })
        })
        .collect()
}
