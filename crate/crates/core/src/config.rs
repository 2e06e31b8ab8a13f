//! Run configuration: every tunable in one flat `key = value` file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{EvalConfig, Kernel};
use crate::contourlet::DfbFilter;
use crate::error::{IrisError, Result};
use crate::normalize::{ANGULAR_RES, RADIAL_RES};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub eval: EvalConfig,
    pub seed: u64,
    pub synth_subjects: usize,
    pub synth_samples: usize,
    /// Samples per subject (in sample order) used for training.
    pub train_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            eval: EvalConfig::default(),
            seed: 0,
            synth_subjects: 10,
            synth_samples: 6,
            train_samples: 3,
        }
    }
}

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed (GA, synthetic corpus)"),
    ("r_min", "smallest pupil radius searched, px"),
    ("r_max", "largest iris radius searched, px"),
    ("id_sigma", "smoothing of the radial derivative"),
    ("n_angles", "rays per circle in the boundary search"),
    ("boundary_floor", "weakest accepted boundary edge"),
    ("iris_center_tolerance", "max pupil/iris centre offset, px"),
    (
        "collarette_fraction",
        "collarette radius as a fraction of the pupil-iris gap",
    ),
    (
        "hough_vote_floor",
        "eyelid vote floor as a fraction of the iris radius",
    ),
    (
        "eyelid_edge_threshold",
        "minimum vertical gradient of an eyelid edge",
    ),
    ("gabor_threshold", "eyelash Gabor response threshold"),
    ("variance_threshold", "eyelash local variance threshold"),
    ("lash_window", "eyelash variance window (odd)"),
    ("radial_res", "normalised rows"),
    ("angular_res", "normalised columns"),
    ("dfb_filter", "pkva | cdf97"),
    ("nlac_percent", "share of coefficients kept by NLAC"),
    ("pca_k", "PCA component target"),
    ("ica_k", "ICA component target"),
    ("svm_c", "SVM box constraint"),
    ("svm_kernel", "linear | rbf"),
    ("svm_gamma", "rbf width"),
    ("svm_tol", "SMO stopping tolerance"),
    ("binary_threshold", "BINARY accept threshold"),
    ("cascade_lo", "local distance accepted outright"),
    ("cascade_hi", "local distance rejected outright"),
    ("hist_bins", "histogram bins over [0, 1]"),
    ("ga_pop_size", "GA population"),
    ("ga_p_crossover", "GA crossover probability"),
    ("ga_p_mutation", "GA per-bit mutation probability"),
    ("ga_generations", "GA generations"),
    ("ga_w_err", "weight of the error rate"),
    ("ga_w_count", "weight of the selected share"),
    ("ga_valid_fraction", "validation share of the GA split"),
    ("synth_subjects", "synthetic corpus subjects"),
    ("synth_samples", "synthetic corpus samples per subject"),
    ("train_samples", "training samples per subject"),
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| IrisError::Parse(format!("bad value '{v}' for {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let seg = &mut self.pipeline.segment;
        let ev = &mut self.eval;
        match key.trim() {
            "seed" => {
                self.seed = parse(key, v)?;
                ev.ga.rng_seed = self.seed;
            }
            "r_min" => seg.r_min = parse(key, v)?,
            "r_max" => seg.r_max = parse(key, v)?,
            "id_sigma" => seg.id_sigma = parse(key, v)?,
            "n_angles" => seg.n_angles = parse(key, v)?,
            "boundary_floor" => seg.boundary_floor = parse(key, v)?,
            "iris_center_tolerance" => seg.iris_center_tolerance = parse(key, v)?,
            "collarette_fraction" => seg.collarette_fraction = parse(key, v)?,
            "hough_vote_floor" => seg.hough_vote_floor = parse(key, v)?,
            "eyelid_edge_threshold" => seg.eyelid_edge_threshold = parse(key, v)?,
            "gabor_threshold" => seg.gabor_threshold = parse(key, v)?,
            "variance_threshold" => seg.variance_threshold = parse(key, v)?,
            "lash_window" => seg.lash_window = parse(key, v)?,
            "radial_res" => self.pipeline.radial_res = parse(key, v)?,
            "angular_res" => self.pipeline.angular_res = parse(key, v)?,
            "dfb_filter" => ev.features.filter = parse(key, v)?,
            "nlac_percent" => ev.features.nlac_percent = parse(key, v)?,
            "pca_k" => ev.features.pca_k = parse(key, v)?,
            "ica_k" => ev.features.ica_k = parse(key, v)?,
            "svm_c" => ev.svm.c = parse(key, v)?,
            "svm_kernel" => {
                ev.svm.kernel = match v.to_ascii_lowercase().as_str() {
                    "linear" => Kernel::Linear,
                    "rbf" => match ev.svm.kernel {
                        Kernel::Rbf { gamma } => Kernel::Rbf { gamma },
                        Kernel::Linear => Kernel::Rbf { gamma: 1.0 },
                    },
                    _ => return Err(IrisError::Parse(format!("unknown kernel '{v}'"))),
                }
            }
            "svm_gamma" => {
                ev.svm.kernel = Kernel::Rbf {
                    gamma: parse(key, v)?,
                }
            }
            "svm_tol" => ev.svm.tol = parse(key, v)?,
            "binary_threshold" => ev.binary_threshold = parse(key, v)?,
            "cascade_lo" => ev.cascade_lo = parse(key, v)?,
            "cascade_hi" => ev.cascade_hi = parse(key, v)?,
            "hist_bins" => ev.hist_bins = parse(key, v)?,
            "ga_pop_size" => ev.ga.pop_size = parse(key, v)?,
            "ga_p_crossover" => ev.ga.p_crossover = parse(key, v)?,
            "ga_p_mutation" => ev.ga.p_mutation = parse(key, v)?,
            "ga_generations" => ev.ga.n_generations = parse(key, v)?,
            "ga_w_err" => ev.ga.w_err = parse(key, v)?,
            "ga_w_count" => ev.ga.w_count = parse(key, v)?,
            "ga_valid_fraction" => ev.ga.valid_fraction = parse(key, v)?,
            "synth_subjects" => self.synth_subjects = parse(key, v)?,
            "synth_samples" => self.synth_samples = parse(key, v)?,
            "train_samples" => self.train_samples = parse(key, v)?,
            k => return Err(IrisError::Parse(format!("unknown config key '{k}'"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                IrisError::Parse(format!("line {}: expected key = value", no + 1))
            })?;
            self.set(k, v)
                .map_err(|e| IrisError::Parse(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(IrisError::FileNotFound(path.to_path_buf()));
        }
        let mut c = Self::default();
        c.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(c)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.eval.ga.rng_seed = seed;
        self
    }

    /// Settings that change the published vector lengths.
    pub fn length_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.pipeline.radial_res != RADIAL_RES || self.pipeline.angular_res != ANGULAR_RES {
            w.push(format!(
                "normalisation {}x{} differs from {RADIAL_RES}x{ANGULAR_RES}; vector lengths will not match the reference table",
                self.pipeline.radial_res, self.pipeline.angular_res
            ));
        }
        if self.eval.features.filter != DfbFilter::default() {
            w.push(format!(
                "directional filter {}",
                self.eval.features.filter.name()
            ));
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_reference_constants() {
        let c = RunConfig::default();
        assert_eq!(c.eval.ga.pop_size, 108);
        assert_eq!(c.eval.ga.n_generations, 110);
        assert_eq!(c.eval.ga.p_crossover, 0.65);
        assert_eq!(c.eval.ga.p_mutation, 0.002);
        assert_eq!(c.eval.binary_threshold, 0.42);
        assert_eq!((c.pipeline.radial_res, c.pipeline.angular_res), (20, 240));
        assert_eq!(c.eval.features.pca_k, 1100);
    }

    #[test]
    fn text_overrides() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# comment\nseed = 7\nsvm_kernel = rbf\nsvm_gamma=0.5 # inline\ndfb_filter = cdf97\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.eval.ga.rng_seed, 7);
        assert_eq!(c.eval.svm.kernel, Kernel::Rbf { gamma: 0.5 });
        assert_eq!(c.eval.features.filter, DfbFilter::Cdf97);
        assert!(c.apply_text("nope = 1").is_err());
        assert!(c.apply_text("seed").is_err());
        assert!(c.apply_text("seed = x").is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let probe = |k: &str| match k {
            "dfb_filter" => "pkva",
            "svm_kernel" => "linear",
            "collarette_fraction"
            | "hough_vote_floor"
            | "ga_p_crossover"
            | "ga_p_mutation"
            | "ga_w_err"
            | "ga_w_count"
            | "ga_valid_fraction"
            | "cascade_lo"
            | "cascade_hi"
            | "binary_threshold" => "0.5",
            _ => "3",
        };
        for (k, _) in KEYS {
            RunConfig::default().set(k, probe(k)).unwrap();
        }
    }
}
