//! Train/test evaluation over a labelled image set.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{svm_train, SvmParams, ZScore};
use super::{
    classifier_name, euclidean, template_distance, trit_distance, CascadeThresholds,
    BINARY_THRESHOLD,
};
use crate::dataio::GrayImage;
use crate::error::{IrisError, Result};
use crate::features::{
    nlac_embedding, two_level_pyramid, Extractor, FeatureConfig, FeatureVector, Method, Payload,
    ProjectionKind,
};
use crate::gaselect::{run_ga, GaParams, LabeledSet};
use crate::normalize::Strip;
use crate::pipeline::{image_to_strip, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub features: FeatureConfig,
    pub svm: SvmParams,
    pub cascade_lo: f64,
    pub cascade_hi: f64,
    pub binary_threshold: f64,
    pub hist_bins: usize,
    pub ga: GaParams,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let c = CascadeThresholds::default();
        Self {
            features: FeatureConfig::default(),
            svm: SvmParams::default(),
            cascade_lo: c.local_lo,
            cascade_hi: c.local_hi,
            binary_threshold: BINARY_THRESHOLD,
            hist_bins: 50,
            ga: GaParams::default(),
        }
    }
}

/// One labelled image of the evaluation set.
#[derive(Debug, Clone)]
pub struct EvalSample {
    pub subject: String,
    pub sample: String,
    pub train: bool,
    pub image: GrayImage,
}

#[derive(Debug, Clone)]
pub struct StripSample {
    pub label: usize,
    pub train: bool,
    pub strip: Strip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    /// Configured output length.
    pub vector_length: usize,
    /// Length actually produced (PCA/ICA after rank clipping, GA after selection).
    pub effective_length: usize,
    pub classifier: String,
    pub accuracy_pct: f64,
    pub extract_ms: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0; bins.max(1)];
        let n = counts.len();
        for &v in values {
            let t = ((v - lo) / (hi - lo) * n as f64).floor();
            let i = if t < 0.0 { 0 } else { (t as usize).min(n - 1) };
            counts[i] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn to_csv(&self) -> String {
        let n = self.counts.len();
        let w = (self.hi - self.lo) / n as f64;
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let a = self.lo + w * i as f64;
            s.push_str(&format!("{:.4},{:.4},{}\n", a, a + w, c));
        }
        s
    }
}

/// All-pairs distances split by ground-truth identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairDistances {
    pub intra: Vec<f64>,
    pub inter: Vec<f64>,
    /// Pairs skipped for lack of jointly valid bits.
    pub skipped: usize,
}

impl PairDistances {
    pub fn mean_intra(&self) -> f64 {
        mean(&self.intra)
    }

    pub fn mean_inter(&self) -> f64 {
        mean(&self.inter)
    }

    /// Share of pairs decided correctly by `distance <= t` meaning same eye.
    pub fn verification_accuracy(&self, t: f64) -> f64 {
        let ok = self.intra.iter().filter(|&&d| d <= t).count()
            + self.inter.iter().filter(|&&d| d > t).count();
        ok as f64 / (self.intra.len() + self.inter.len()).max(1) as f64
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn pair_distances(
    items: &[(usize, &FeatureVector)],
    dist: impl Fn(&FeatureVector, &FeatureVector) -> Result<f64> + Sync,
) -> PairDistances {
    let rows: Vec<Vec<(bool, Option<f64>)>> = (0..items.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..items.len())
                .map(|j| (items[i].0 == items[j].0, dist(items[i].1, items[j].1).ok()))
                .collect()
        })
        .collect();
    let mut out = PairDistances::default();
    for (same, d) in rows.into_iter().flatten() {
        match (same, d) {
            (true, Some(d)) => out.intra.push(d),
            (false, Some(d)) => out.inter.push(d),
            (_, None) => out.skipped += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub n_images: usize,
    pub segmentation_failures: usize,
    /// Binary-code all-pairs distances, when BINARY was evaluated.
    pub binary_pairs: Option<PairDistances>,
    pub hist_intra: Option<Histogram>,
    pub hist_inter: Option<Histogram>,
}

pub const REPORT_HEADER: &str =
    "method,vector_length,effective_length,classifier,accuracy_pct,extract_ms,failures";

impl EvalReport {
    /// Report CSV; `with_timing = false` drops the `extract_ms` column.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut s = String::new();
        if with_timing {
            s.push_str(REPORT_HEADER);
        } else {
            s.push_str("method,vector_length,effective_length,classifier,accuracy_pct,failures");
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.4},",
                r.method, r.vector_length, r.effective_length, r.classifier, r.accuracy_pct
            ));
            if with_timing {
                s.push_str(&format!("{:.3},", r.extract_ms));
            }
            s.push_str(&format!("{}\n", r.failures));
        }
        s
    }
}

/// Segment and normalise every image, then evaluate `methods`.
pub fn evaluate(
    samples: &[EvalSample],
    methods: &[Method],
    pipeline: &PipelineConfig,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let mut labels: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        let n = labels.len();
        labels.entry(s.subject.as_str()).or_insert(n);
    }
    let strips: Vec<Option<StripSample>> = samples
        .par_iter()
        .map(|s| {
            image_to_strip(&s.image, pipeline)
                .ok()
                .map(|strip| StripSample {
                    label: labels[s.subject.as_str()],
                    train: s.train,
                    strip,
                })
        })
        .collect();
    let failures = strips.iter().filter(|s| s.is_none()).count();
    let strips: Vec<StripSample> = strips.into_iter().flatten().collect();
    let mut report = evaluate_strips(&strips, methods, cfg)?;
    report.n_images = samples.len();
    report.segmentation_failures = failures;
    for r in &mut report.rows {
        r.failures += failures;
    }
    Ok(report)
}

struct Extracted {
    vectors: Vec<Option<FeatureVector>>,
    mean_ms: f64,
    failures: usize,
}

fn extract_all(ex: &Extractor, strips: &[StripSample], method: Method) -> Extracted {
    let timed: Vec<(Option<FeatureVector>, f64)> = strips
        .par_iter()
        .map(|s| {
            let t0 = Instant::now();
            let fv = ex.extract(&s.strip, method).ok();
            (fv, t0.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let ok: Vec<f64> = timed
        .iter()
        .filter(|(f, _)| f.is_some())
        .map(|(_, t)| *t)
        .collect();
    Extracted {
        failures: timed.len() - ok.len(),
        mean_ms: if ok.is_empty() { 0.0 } else { mean(&ok) },
        vectors: timed.into_iter().map(|(f, _)| f).collect(),
    }
}

type Labelled = Vec<(Vec<f64>, usize)>;

fn svm_accuracy(
    train: Labelled,
    test: Labelled,
    params: &SvmParams,
    standardise: bool,
) -> Result<f64> {
    if test.is_empty() {
        return Err(IrisError::InsufficientData("no test samples".into()));
    }
    let (mut xtr, ytr): (Vec<_>, Vec<_>) = train.into_iter().unzip();
    let (mut xte, yte): (Vec<_>, Vec<_>) = test.into_iter().unzip();
    if standardise {
        let z = ZScore::fit(&xtr);
        xtr = xtr.iter().map(|x| z.apply(x)).collect();
        xte = xte.iter().map(|x| z.apply(x)).collect();
    }
    let model = svm_train(&xtr, &ytr, params)?;
    let mut ok = 0;
    for (x, y) in xte.iter().zip(&yte) {
        ok += (model.predict(x)? == *y) as usize;
    }
    Ok(100.0 * ok as f64 / yte.len() as f64)
}

/// Rank-1 identification accuracy against the training gallery.
fn nn_accuracy(gallery: &[(usize, &FeatureVector)], probes: &[(usize, &FeatureVector)]) -> f64 {
    let ok: usize = probes
        .par_iter()
        .map(|(label, p)| {
            let mut best: Option<(f64, usize)> = None;
            for (gl, g) in gallery {
                if let Ok(d) = template_distance(p, g) {
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, *gl));
                    }
                }
            }
            best.is_some_and(|(_, gl)| gl == *label) as usize
        })
        .sum();
    100.0 * ok as f64 / probes.len().max(1) as f64
}

/// Threshold maximising the balanced verification accuracy.
pub fn tune_threshold(intra: &[f64], inter: &[f64], fallback: f64) -> f64 {
    if intra.is_empty() || inter.is_empty() {
        return fallback;
    }
    let mut all: Vec<f64> = intra.iter().chain(inter).copied().collect();
    all.sort_by(f64::total_cmp);
    let score = |t: f64| {
        let tpr = intra.iter().filter(|&&d| d <= t).count() as f64 / intra.len() as f64;
        let tnr = inter.iter().filter(|&&d| d > t).count() as f64 / inter.len() as f64;
        tpr + tnr
    };
    let mut best = (score(all[0]), all[0]);
    for w in all.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let s = score(t);
        if s > best.0 {
            best = (s, t);
        }
    }
    best.1
}

fn combined_parts(fv: &FeatureVector) -> (&[i8], &[f64]) {
    match &fv.payload {
        Payload::TritsReals(t, r) => (t, r),
        _ => unreachable!("combined templates hold trits and reals"),
    }
}

/// Cascade identification: the nearest local code below `lo` wins; failing
/// that, the nearest global code among gray-zone candidates within the
/// global threshold.
fn cascade_accuracy(
    gallery: &[(usize, &FeatureVector)],
    probes: &[(usize, &FeatureVector)],
    t: &CascadeThresholds,
) -> f64 {
    let ok: usize = probes
        .par_iter()
        .map(|(label, p)| {
            let (pt, pr) = combined_parts(p);
            let mut local: Option<(f64, usize)> = None;
            let mut global: Option<(f64, usize)> = None;
            for (gl, g) in gallery {
                let (gt, gr) = combined_parts(g);
                let (Ok(dl), Ok(dg)) = (trit_distance(pt, gt), euclidean(pr, gr)) else {
                    continue;
                };
                if dl <= t.local_lo {
                    if local.is_none_or(|(b, _)| dl < b) {
                        local = Some((dl, *gl));
                    }
                } else if dl < t.local_hi && dg <= t.global && global.is_none_or(|(b, _)| dg < b) {
                    global = Some((dg, *gl));
                }
            }
            local.or(global).is_some_and(|(_, gl)| gl == *label) as usize
        })
        .sum();
    100.0 * ok as f64 / probes.len().max(1) as f64
}

fn split<'a>(
    strips: &[StripSample],
    fvs: &'a [Option<FeatureVector>],
) -> (
    Vec<(usize, &'a FeatureVector)>,
    Vec<(usize, &'a FeatureVector)>,
) {
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for (s, f) in strips.iter().zip(fvs) {
        if let Some(f) = f {
            if s.train {
                tr.push((s.label, f));
            } else {
                te.push((s.label, f));
            }
        }
    }
    (tr, te)
}

fn reals(items: &[(usize, &FeatureVector)]) -> Labelled {
    items
        .iter()
        .map(|(l, f)| (f.payload.to_reals(), *l))
        .collect()
}

fn check_protocol(strips: &[StripSample]) -> Result<()> {
    let mut per: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for s in strips {
        let e = per.entry(s.label).or_default();
        if s.train {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    if per.len() < 2 || per.values().any(|&(a, b)| a + b < 2) {
        return Err(IrisError::InsufficientData(
            "evaluation needs at least 2 subjects with 2 samples each".into(),
        ));
    }
    if !per.values().any(|&(a, _)| a > 0) || !per.values().any(|&(_, b)| b > 0) {
        return Err(IrisError::DegenerateSplit(
            "train or test side is empty".into(),
        ));
    }
    Ok(())
}

/// Evaluate `methods` on already-normalised strips.
pub fn evaluate_strips(
    strips: &[StripSample],
    methods: &[Method],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    check_protocol(strips)?;
    let mut ex = Extractor::new(cfg.features.clone());
    let train_strips: Vec<_> = strips
        .iter()
        .filter(|s| s.train)
        .map(|s| s.strip.clone())
        .collect();
    let mut report = EvalReport {
        rows: Vec::new(),
        n_images: strips.len(),
        segmentation_failures: 0,
        binary_pairs: None,
        hist_intra: None,
        hist_inter: None,
    };

    for &method in methods {
        let mut vector_length = method.nominal_length();
        match method {
            Method::Pca => {
                ex.fit(&train_strips, ProjectionKind::Pca)?;
                vector_length = cfg.features.pca_k;
            }
            Method::Ica => {
                ex.fit(&train_strips, ProjectionKind::Ica)?;
                vector_length = cfg.features.ica_k;
            }
            _ => {}
        }
        let e = extract_all(&ex, strips, method);
        let (tr, te) = split(strips, &e.vectors);
        let mut effective_length = tr.first().map_or(0, |(_, f)| f.len());
        let accuracy = match method {
            Method::Local | Method::Global | Method::Binary => nn_accuracy(&tr, &te),
            Method::Combined => {
                let pd = pair_distances(&tr, |a, b| {
                    euclidean(combined_parts(a).1, combined_parts(b).1)
                });
                let t = CascadeThresholds {
                    local_lo: cfg.cascade_lo,
                    local_hi: cfg.cascade_hi,
                    global: tune_threshold(
                        &pd.intra,
                        &pd.inter,
                        CascadeThresholds::default().global,
                    ),
                };
                cascade_accuracy(&tr, &te, &t)
            }
            Method::Nlac => {
                let dim = two_level_pyramid(&strips[0].strip, &cfg.features)?.coefficient_count();
                let embed = |items: &[(usize, &FeatureVector)]| -> Result<Labelled> {
                    items
                        .iter()
                        .map(|(l, f)| Ok((nlac_embedding(f, dim)?, *l)))
                        .collect()
                };
                svm_accuracy(embed(&tr)?, embed(&te)?, &cfg.svm, false)?
            }
            Method::Ga600 => {
                let data = reals(&tr);
                let (x, y): (Vec<_>, Vec<_>) = data.into_iter().unzip();
                let ga = run_ga(&LabeledSet::new(x, y)?, &cfg.ga)?;
                let keep = |v: Vec<f64>| -> Vec<f64> {
                    v.into_iter()
                        .zip(&ga.best.genes)
                        .filter(|(_, &g)| g)
                        .map(|(x, _)| x)
                        .collect()
                };
                effective_length = ga.best.n_selected;
                let a = reals(&tr).into_iter().map(|(v, l)| (keep(v), l)).collect();
                let b = reals(&te).into_iter().map(|(v, l)| (keep(v), l)).collect();
                svm_accuracy(a, b, &cfg.svm, false)?
            }
            _ => svm_accuracy(reals(&tr), reals(&te), &cfg.svm, true)?,
        };
        report.rows.push(ReportRow {
            method,
            vector_length,
            effective_length,
            classifier: classifier_name(method).to_string(),
            accuracy_pct: accuracy,
            extract_ms: e.mean_ms,
            failures: e.failures,
        });

        if method == Method::Binary {
            let all: Vec<(usize, &FeatureVector)> = strips
                .iter()
                .zip(&e.vectors)
                .filter_map(|(s, f)| f.as_ref().map(|f| (s.label, f)))
                .collect();
            let pd = pair_distances(&all, template_distance);
            report.rows.push(ReportRow {
                method,
                vector_length,
                effective_length,
                classifier: format!("HD@{}", cfg.binary_threshold),
                accuracy_pct: 100.0 * pd.verification_accuracy(cfg.binary_threshold),
                extract_ms: e.mean_ms,
                failures: e.failures,
            });
            report.hist_intra = Some(Histogram::build(&pd.intra, 0.0, 1.0, cfg.hist_bins));
            report.hist_inter = Some(Histogram::build(&pd.inter, 0.0, 1.0, cfg.hist_bins));
            report.binary_pairs = Some(pd);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let h = Histogram::build(&[0.0, 0.5, 1.0, 0.999], 0.0, 1.0, 10);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[5], 1);
        assert_eq!(h.counts[9], 2);
        assert_eq!(h.counts.iter().sum::<usize>(), 4);
    }

    #[test]
    fn threshold_tuning_separates() {
        let t = tune_threshold(&[0.1, 0.2], &[0.6, 0.7], 9.0);
        assert!(t > 0.2 && t < 0.6);
        assert_eq!(tune_threshold(&[], &[1.0], 9.0), 9.0);
    }
}
