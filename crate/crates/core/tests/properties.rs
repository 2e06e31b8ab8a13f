mod common;

use irisct::classify::{
    argmax, cascade_match, hamming, trit_distance, CascadeThresholds, MatchStage,
};
use irisct::contourlet::{ct_decompose, ct_reconstruct, PyramidConfig};
use irisct::features::{FeatureVector, Method, Payload};
use irisct::store::TemplateRecord;
use ndarray::Array2;
use proptest::prelude::*;

fn code(n: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (
        prop::collection::vec(any::<bool>(), n),
        prop::collection::vec(prop::bool::weighted(0.8), n),
    )
}

fn trits(n: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(-1i8..=1, n)
}

proptest! {
    #[test]
    fn hamming_is_a_pseudometric(
        (a, ma) in code(64), (b, mb) in code(64), c in prop::collection::vec(any::<bool>(), 64)
    ) {
        let all = vec![true; 64];
        prop_assert_eq!(hamming(&a, &a, &ma, &ma).unwrap_or(0.0), 0.0);
        if let (Ok(x), Ok(y)) = (hamming(&a, &b, &ma, &mb), hamming(&b, &a, &mb, &ma)) {
            prop_assert_eq!(x, y);
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let d = |p: &[bool], q: &[bool]| hamming(p, q, &all, &all).unwrap();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn collapsed_cascade_is_a_trit_threshold(
        t1 in trits(40), t2 in trits(40), t in 0.0f64..1.0
    ) {
        let fv = |tr: Vec<i8>| FeatureVector::new(Method::Combined, Payload::TritsReals(tr, vec![0.0; 24]));
        let th = CascadeThresholds { local_lo: t, local_hi: t, global: 5.0 };
        let r = cascade_match(&fv(t1.clone()), &fv(t2.clone()), &th).unwrap();
        let d = trit_distance(&t1, &t2).unwrap();
        prop_assert_eq!(r.stage, MatchStage::Local);
        prop_assert_eq!(r.distance, d);
        prop_assert_eq!(r.accepted(), d <= t);
    }

    #[test]
    fn argmax_ignores_positive_scale(v in prop::collection::vec(-1e3f64..1e3, 1..12), s in 1e-6f64..1e6) {
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        prop_assert_eq!(argmax(&v), argmax(&scaled));
    }

    #[test]
    fn records_round_trip(
        bits in prop::collection::vec(any::<bool>(), 1..300),
        tr in trits(37),
        reals in prop::collection::vec(-1e6f64..1e6, 1..30),
        subject in "[A-Za-z0-9_]{1,8}",
        sample in "[0-9]{1,3}",
    ) {
        let mut masked = FeatureVector::new(Method::Binary, Payload::Bits(bits.clone()));
        masked.mask = Some(bits.iter().map(|b| !b).collect());
        for fv in [
            masked,
            FeatureVector::new(Method::Local, Payload::Trits(tr.clone())),
            FeatureVector::new(Method::Global, Payload::Reals(reals.clone())),
            FeatureVector::new(Method::Combined, Payload::TritsReals(tr.clone(), reals.clone())),
        ] {
            let rec = TemplateRecord::new(subject.clone(), sample.clone(), fv);
            let back = TemplateRecord::from_line(&rec.to_line().unwrap()).unwrap();
            prop_assert_eq!(back, rec);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contourlet_is_linear_and_invertible(
        seed_a in any::<u64>(), seed_b in any::<u64>(), alpha in -3.0f64..3.0, three in any::<bool>()
    ) {
        let cfg = if three { PyramidConfig::default() } else { PyramidConfig::two_level() };
        let (a, b) = (common::random_strip(seed_a).data, common::random_strip(seed_b).data);
        let pa = ct_decompose(&a, &cfg).unwrap().to_vec();
        let pb = ct_decompose(&b, &cfg).unwrap().to_vec();
        let mix: Array2<f64> = &a * alpha + &b;
        let pm = ct_decompose(&mix, &cfg).unwrap();
        for ((m, x), y) in pm.to_vec().iter().zip(&pa).zip(&pb) {
            prop_assert!((m - (alpha * x + y)).abs() < 1e-8 * (1.0 + m.abs()));
        }
        let back = ct_reconstruct(&pm).unwrap();
        let err = (&back - &mix).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v));
        prop_assert!(err < 1e-8);
    }
}
