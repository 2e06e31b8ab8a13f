mod common;

use irisct::features::{
    feat_binary, feat_nlac, top_magnitude_indices, two_level_pyramid, FeatureConfig, Payload,
};
use irisct::normalize::Strip;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn negated_strip_complements_binary_code() {
    let cfg = FeatureConfig::default();
    let s = common::random_strip(42);
    let neg = Strip::from_data(s.data.mapv(|v| -v));
    let coeffs = two_level_pyramid(&s, &cfg).unwrap().to_vec();
    let (Payload::Bits(a), Payload::Bits(b)) = (
        feat_binary(&s, &cfg).unwrap().payload,
        feat_binary(&neg, &cfg).unwrap().payload,
    ) else {
        panic!("binary payload expected");
    };
    for ((x, y), c) in a.iter().zip(&b).zip(&coeffs) {
        if c.abs() > 1e-9 {
            assert_ne!(x, y);
        }
    }
}

#[test]
fn exactly_48_nonzero_coefficients_are_selected() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut planted = sample(&mut rng, 2520, 48).into_vec();
    let mut v = vec![0.0; 2520];
    for (k, &i) in planted.iter().enumerate() {
        v[i] = if k % 2 == 0 {
            0.5 + k as f64
        } else {
            -0.5 - k as f64
        };
    }
    let mut got = top_magnitude_indices(&v, 48);
    got.sort_unstable();
    planted.sort_unstable();
    assert_eq!(got, planted);
}

#[test]
fn nlac_reads_signs_of_the_largest_coefficients() {
    let cfg = FeatureConfig::default();
    let s = common::random_strip(5);
    let coeffs = two_level_pyramid(&s, &cfg).unwrap().to_vec();
    let fv = feat_nlac(&s, &cfg).unwrap();
    let idx: Vec<usize> = fv
        .indices
        .clone()
        .unwrap()
        .into_iter()
        .map(usize::from)
        .collect();
    let mut want = top_magnitude_indices(&coeffs, 48);
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    want.sort_unstable();
    assert_eq!(sorted, want);
    let Payload::Bits(bits) = &fv.payload else {
        panic!("bits expected")
    };
    for (&i, &b) in idx.iter().zip(bits) {
        assert_eq!(b, coeffs[i] > 0.0);
    }
    let smallest_kept = idx
        .iter()
        .map(|&i| coeffs[i].abs())
        .fold(f64::INFINITY, f64::min);
    let dropped = (0..coeffs.len())
        .filter(|i| !idx.contains(i))
        .map(|i| coeffs[i].abs())
        .fold(0.0, f64::max);
    assert!(smallest_kept >= dropped);
}

#[test]
fn extractors_are_deterministic() {
    let cfg = FeatureConfig::default();
    let s = common::random_strip(9);
    assert_eq!(feat_nlac(&s, &cfg).unwrap(), feat_nlac(&s, &cfg).unwrap());
    assert_eq!(
        feat_binary(&s, &cfg).unwrap(),
        feat_binary(&s, &cfg).unwrap()
    );
}
