#![allow(dead_code)]

use irisct::dataio::{synth_corpus_specs, synth_eye, SYNTH_HEIGHT, SYNTH_WIDTH};
use irisct::gaselect::LabeledSet;
use irisct::normalize::Strip;
use irisct::pipeline::{prepare, PipelineConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn random_strip(seed: u64) -> Strip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Strip::from_data(Array2::from_shape_fn((8, 240), |_| {
        rng.gen_range(0.0..255.0)
    }))
}

/// Strips of rendered synthetic eyes, `(subject, strip)`.
pub fn synth_strips(subjects: usize, samples: usize, seed: u64) -> Vec<(usize, Strip)> {
    synth_corpus_specs(subjects, samples, seed)
        .par_iter()
        .map(|s| {
            let img = synth_eye(&s.spec, SYNTH_WIDTH, SYNTH_HEIGHT).unwrap();
            (
                s.subject,
                prepare(&img, &PipelineConfig::default()).unwrap().strip,
            )
        })
        .collect()
}

pub const PLANTED: [usize; 10] = [17, 75, 133, 191, 249, 307, 365, 423, 481, 539];

/// Two classes over 600 binary features. Only the planted columns carry the
/// label (each flipped with probability 0.2); the rest are coin flips.
pub fn planted_dataset(n: usize, seed: u64) -> LabeledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let c = i % 2;
        let row = (0..600)
            .map(|j| {
                let bit = if PLANTED.contains(&j) {
                    (c == 1) ^ rng.gen_bool(0.2)
                } else {
                    rng.gen_bool(0.5)
                };
                if bit {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        x.push(row);
        y.push(c);
    }
    LabeledSet::new(x, y).unwrap()
}
