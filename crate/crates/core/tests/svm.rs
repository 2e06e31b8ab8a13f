use irisct::classify::{svm_train, Kernel, SvmParams, ZScore};
use irisct::IrisError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn xor(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![];
    let mut y = vec![];
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if a.abs() < 0.1 || b.abs() < 0.1 {
            continue;
        }
        x.push(vec![a, b]);
        y.push(usize::from(a * b < 0.0));
    }
    (x, y)
}

fn accuracy(
    params: &SvmParams,
    train: &(Vec<Vec<f64>>, Vec<usize>),
    test: &(Vec<Vec<f64>>, Vec<usize>),
) -> f64 {
    let m = svm_train(&train.0, &train.1, params).unwrap();
    let ok = test
        .0
        .iter()
        .zip(&test.1)
        .filter(|(v, &l)| m.predict(v).unwrap() == l)
        .count();
    ok as f64 / test.0.len() as f64
}

#[test]
fn rbf_solves_xor_linear_does_not() {
    let (train, test) = (xor(200, 1), xor(200, 2));
    let rbf = SvmParams {
        c: 10.0,
        kernel: Kernel::Rbf { gamma: 2.0 },
        ..Default::default()
    };
    assert!(accuracy(&rbf, &train, &test) >= 0.95);
    assert!(accuracy(&SvmParams::default(), &train, &test) <= 0.75);
}

#[test]
fn many_classes_separable() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut x, mut y) = (vec![], vec![]);
    for k in 0..6 {
        let angle = k as f64 * std::f64::consts::TAU / 6.0;
        for _ in 0..15 {
            x.push(vec![
                10.0 * angle.cos() + rng.gen_range(-1.0..1.0),
                10.0 * angle.sin() + rng.gen_range(-1.0..1.0),
                1.0,
            ]);
            y.push(k * 10);
        }
    }
    let m = svm_train(&x, &y, &SvmParams::default()).unwrap();
    assert_eq!(m.classes, vec![0, 10, 20, 30, 40, 50]);
    assert!(x.iter().zip(&y).all(|(v, &l)| m.predict(v).unwrap() == l));
}

#[test]
fn bad_inputs() {
    let x = vec![vec![0.0], vec![1.0]];
    assert!(matches!(
        svm_train(
            &x,
            &[1, 2],
            &SvmParams {
                c: 0.0,
                ..Default::default()
            }
        ),
        Err(IrisError::InvalidArgument(_))
    ));
    assert!(svm_train(&x, &[1], &SvmParams::default()).is_err());
}

#[test]
fn zscore_constant_column() {
    let z = ZScore::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]);
    let v = z.apply(&[2.0, 5.0]);
    assert_eq!(v[0], 0.0);
    assert!(v[1].is_finite());
}
