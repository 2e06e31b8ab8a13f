mod common;

use irisct::gaselect::{roulette_select, run_ga, stratified_split, Chromosome, GaParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn short_run() -> GaParams {
    GaParams {
        pop_size: 24,
        n_generations: 12,
        rng_seed: 3,
        ..Default::default()
    }
}

#[test]
fn same_seed_same_result() {
    let data = common::planted_dataset(80, 1);
    let (a, b) = (
        run_ga(&data, &short_run()).unwrap(),
        run_ga(&data, &short_run()).unwrap(),
    );
    assert_eq!(a.best, b.best);
    assert_eq!(a.history_csv(), b.history_csv());
    let other = run_ga(
        &data,
        &GaParams {
            rng_seed: 4,
            ..short_run()
        },
    )
    .unwrap();
    assert_ne!(a.history_csv(), other.history_csv());
}

#[test]
fn history_is_best_so_far() {
    let data = common::planted_dataset(80, 2);
    let r = run_ga(&data, &short_run()).unwrap();
    assert_eq!(r.history.len(), 12);
    assert!(r
        .history
        .windows(2)
        .all(|w| w[1].best_scalar <= w[0].best_scalar));
    assert_eq!(r.history.last().unwrap().best_scalar, r.best.scalar);
    let csv = r.history_csv();
    assert!(csv.starts_with("generation,best_scalar,best_error,best_count\n"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn wrong_dimension_rejected() {
    let data = common::planted_dataset(40, 3);
    assert!(run_ga(
        &data,
        &GaParams {
            gene_len: 500,
            ..short_run()
        }
    )
    .is_err());
}

#[test]
fn roulette_frequencies_follow_weights() {
    let scalars = [0.1, 0.2, 0.4, 0.8];
    let pop: Vec<Chromosome> = scalars
        .iter()
        .enumerate()
        .map(|(i, &s)| Chromosome {
            genes: vec![i == 0, i == 1, i == 2, i == 3],
            error_rate: s,
            n_selected: 1,
            scalar: s,
        })
        .collect();
    let weights: Vec<f64> = scalars.iter().map(|s| 0.8 + 1e-9 - s).collect();
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let draws = 60_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        let c = roulette_select(&pop, &mut rng);
        counts[c.genes.iter().position(|&g| g).unwrap()] += 1;
    }
    // the worst member has weight 1e-9 and should essentially never win
    assert!(counts[3] <= 1);
    let chi2: f64 = (0..3)
        .map(|i| {
            let e = draws as f64 * weights[i] / total;
            (counts[i] as f64 - e).powi(2) / e
        })
        .sum();
    // 2 degrees of freedom, p = 0.001
    assert!(chi2 < 13.82, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn split_is_stratified() {
    let y: Vec<usize> = (0..100).map(|i| i % 4).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (train, valid) = stratified_split(&y, 0.3, &mut rng);
    assert_eq!(train.len() + valid.len(), 100);
    for c in 0..4 {
        let v = valid.iter().filter(|&&i| y[i] == c).count();
        assert!((7..=8).contains(&v), "class {c}: {v} held out");
    }
}
