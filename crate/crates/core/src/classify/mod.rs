//! Template distances, threshold matching and the SVM.

pub mod eval;
pub mod svm;

use serde::{Deserialize, Serialize};

use crate::error::{IrisError, Result};
use crate::features::{FeatureVector, Method, Payload};

pub use eval::{
    evaluate, evaluate_strips, pair_distances, tune_threshold, EvalConfig, EvalReport, EvalSample,
    Histogram, PairDistances, ReportRow, StripSample, REPORT_HEADER,
};
pub use svm::{argmax, svm_train, Kernel, SvmModel, SvmParams, ZScore};

/// Separation point of the intra- and inter-class Hamming distributions.
pub const BINARY_THRESHOLD: f64 = 0.42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchStage {
    Single,
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub distance: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub stage: MatchStage,
}

impl MatchResult {
    pub fn thresholded(distance: f64, threshold: f64) -> Self {
        Self::at_stage(distance, threshold, MatchStage::Single)
    }

    fn at_stage(distance: f64, threshold: f64, stage: MatchStage) -> Self {
        Self {
            distance,
            threshold,
            decision: if distance <= threshold {
                Decision::Accept
            } else {
                Decision::Reject
            },
            stage,
        }
    }

    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(IrisError::DimMismatch(format!("lengths {a} and {b}")));
    }
    Ok(())
}

/// Fractional Hamming distance over jointly valid bits.
pub fn hamming(a: &[bool], b: &[bool], mask_a: &[bool], mask_b: &[bool]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    check_len(a.len(), mask_a.len())?;
    check_len(a.len(), mask_b.len())?;
    let (mut diff, mut valid) = (0usize, 0usize);
    for i in 0..a.len() {
        if mask_a[i] && mask_b[i] {
            valid += 1;
            diff += (a[i] != b[i]) as usize;
        }
    }
    if valid == 0 {
        return Err(IrisError::EmptyMask);
    }
    Ok(diff as f64 / valid as f64)
}

pub fn hamming_unmasked(a: &[bool], b: &[bool]) -> Result<f64> {
    let full = vec![true; a.len()];
    check_len(a.len(), b.len())?;
    hamming(a, b, &full, &full)
}

/// Fraction of positions where two trit codes differ.
pub fn trit_distance(a: &[i8], b: &[i8]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeThresholds {
    pub local_lo: f64,
    pub local_hi: f64,
    pub global: f64,
}

impl Default for CascadeThresholds {
    fn default() -> Self {
        Self {
            local_lo: 0.30,
            local_hi: 0.50,
            global: 1.0,
        }
    }
}

fn combined_parts(fv: &FeatureVector) -> Result<(&[i8], &[f64])> {
    match &fv.payload {
        Payload::TritsReals(t, r) => Ok((t, r)),
        _ => Err(IrisError::InvalidArgument(format!(
            "{} is not a combined template",
            fv.method
        ))),
    }
}

/// Local trit distance decides outside `(local_lo, local_hi)`; inside that
/// band the global Euclidean distance decides.
pub fn cascade_match(
    probe: &FeatureVector,
    gallery: &FeatureVector,
    t: &CascadeThresholds,
) -> Result<MatchResult> {
    let (pt, pr) = combined_parts(probe)?;
    let (gt, gr) = combined_parts(gallery)?;
    let d_local = trit_distance(pt, gt)?;
    if d_local <= t.local_lo || d_local >= t.local_hi {
        return Ok(MatchResult::at_stage(
            d_local,
            t.local_lo,
            MatchStage::Local,
        ));
    }
    Ok(MatchResult::at_stage(
        euclidean(pr, gr)?,
        t.global,
        MatchStage::Global,
    ))
}

fn full_mask(fv: &FeatureVector) -> Vec<bool> {
    fv.mask.clone().unwrap_or_else(|| vec![true; fv.len()])
}

fn bits(fv: &FeatureVector) -> Result<&[bool]> {
    match &fv.payload {
        Payload::Bits(b) => Ok(b),
        _ => Err(IrisError::InvalidArgument(format!(
            "{} template does not hold bits",
            fv.method
        ))),
    }
}

fn nlac_indices(fv: &FeatureVector) -> Result<&[u16]> {
    fv.indices
        .as_deref()
        .filter(|i| i.len() == fv.len())
        .ok_or_else(|| IrisError::InvalidArgument("NLAC template without matching indices".into()))
}

/// Hamming distance between an NLAC gallery template and a full binary
/// probe code, read at the gallery's coefficient positions.
pub fn nlac_distance(gallery: &FeatureVector, probe_binary: &FeatureVector) -> Result<f64> {
    let idx = nlac_indices(gallery)?;
    let g = bits(gallery)?;
    let p = bits(probe_binary)?;
    let gm = full_mask(gallery);
    let pm = full_mask(probe_binary);
    let (mut diff, mut valid) = (0usize, 0usize);
    for (k, &i) in idx.iter().enumerate() {
        let i = i as usize;
        if i >= p.len() {
            return Err(IrisError::DimMismatch(format!(
                "index {i} beyond a {}-bit probe",
                p.len()
            )));
        }
        if gm[k] && pm[i] {
            valid += 1;
            diff += (g[k] != p[i]) as usize;
        }
    }
    if valid == 0 {
        return Err(IrisError::EmptyMask);
    }
    Ok(diff as f64 / valid as f64)
}

/// Hamming distance of two NLAC templates over the coefficient positions
/// they share.
fn nlac_pair_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    let (ia, ib) = (nlac_indices(a)?, nlac_indices(b)?);
    let (ba, bb) = (bits(a)?, bits(b)?);
    let (ma, mb) = (full_mask(a), full_mask(b));
    let (mut diff, mut valid) = (0usize, 0usize);
    let (mut i, mut j) = (0, 0);
    while i < ia.len() && j < ib.len() {
        match ia[i].cmp(&ib[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if ma[i] && mb[j] {
                    valid += 1;
                    diff += (ba[i] != bb[j]) as usize;
                }
                i += 1;
                j += 1;
            }
        }
    }
    if valid == 0 {
        return Err(IrisError::EmptyMask);
    }
    Ok(diff as f64 / valid as f64)
}

/// Matcher distance for two templates: Hamming for bit codes, trit
/// distance for local codes (the local stage for combined ones), Euclidean
/// for real vectors. An NLAC template may be compared with a full binary
/// code.
pub fn template_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    match (a.method, b.method) {
        (Method::Nlac, Method::Binary) => return nlac_distance(a, b),
        (Method::Binary, Method::Nlac) => return nlac_distance(b, a),
        (x, y) if x != y => {
            return Err(IrisError::InvalidArgument(format!(
                "cannot compare {x} with {y}"
            )));
        }
        _ => {}
    }
    match a.method {
        Method::Nlac => nlac_pair_distance(a, b),
        Method::Binary | Method::Ga600 => {
            check_len(a.len(), b.len())?;
            hamming(bits(a)?, bits(b)?, &full_mask(a), &full_mask(b))
        }
        Method::Combined => {
            let (ta, _) = combined_parts(a)?;
            let (tb, _) = combined_parts(b)?;
            trit_distance(ta, tb)
        }
        Method::Local => match (&a.payload, &b.payload) {
            (Payload::Trits(x), Payload::Trits(y)) => trit_distance(x, y),
            _ => Err(IrisError::InvalidArgument(
                "LOCAL template does not hold trits".into(),
            )),
        },
        _ => match (&a.payload, &b.payload) {
            (Payload::Reals(x), Payload::Reals(y)) => euclidean(x, y),
            _ => Err(IrisError::InvalidArgument(format!(
                "{} template does not hold reals",
                a.method
            ))),
        },
    }
}

/// Short name of the matcher used for a method in reports.
pub fn classifier_name(method: Method) -> &'static str {
    match method {
        Method::Local | Method::Binary => "HD",
        Method::Global => "ED",
        Method::Combined => "HD+ED",
        _ => "SVM",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(
            hamming(&b("1010"), &b("1000"), &b("1110"), &b("1110")).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(hamming_unmasked(&b("1100"), &b("0011")).unwrap(), 1.0);
        assert!(matches!(
            hamming(&b("1"), &b("0"), &b("0"), &b("1")),
            Err(IrisError::EmptyMask)
        ));
    }

    #[test]
    fn trit_and_euclid() {
        assert_eq!(trit_distance(&[1, 0, -1], &[1, 1, -1]).unwrap(), 1.0 / 3.0);
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    fn combined(t: Vec<i8>, r: Vec<f64>) -> FeatureVector {
        FeatureVector::new(Method::Combined, Payload::TritsReals(t, r))
    }

    #[test]
    fn cascade_stages() {
        let th = CascadeThresholds {
            local_lo: 0.3,
            local_hi: 0.5,
            global: 1.0,
        };
        let a = combined(vec![1; 10], vec![0.0; 24]);
        let r = cascade_match(&a, &a, &th).unwrap();
        assert!(r.accepted());
        assert_eq!(r.stage, MatchStage::Local);

        let c = combined(vec![-1; 10], vec![0.0; 24]);
        let r = cascade_match(&a, &c, &th).unwrap();
        assert!(!r.accepted());
        assert_eq!(r.stage, MatchStage::Local);

        let mut t = vec![1i8; 10];
        t[..4].fill(0);
        let mut g = vec![0.0; 24];
        g[0] = 0.5;
        let r = cascade_match(&a, &combined(t, g), &th).unwrap();
        assert_eq!(r.stage, MatchStage::Global);
        assert!(r.accepted());
    }

    #[test]
    fn nlac_against_binary() {
        let mut g = FeatureVector::new(Method::Nlac, Payload::Bits(b("10")));
        g.indices = Some(vec![1, 3]);
        let p = FeatureVector::new(Method::Binary, Payload::Bits(b("0101")));
        assert_eq!(template_distance(&g, &p).unwrap(), 0.5);
        assert_eq!(template_distance(&p, &g).unwrap(), 0.5);
    }
}
