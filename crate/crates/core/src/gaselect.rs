//! Genetic search over feature-selection masks, trading wrapped-classifier
//! error against the number of selected features.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{svm_train, SvmParams};
use crate::error::{IrisError, Result};

pub const GENE_LEN: usize = 600;
/// Added to the inverted roulette weights so the worst member keeps a
/// nonzero share.
pub const ROULETTE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub pop_size: usize,
    pub gene_len: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub n_generations: usize,
    pub w_err: f64,
    pub w_count: f64,
    pub rng_seed: u64,
    /// Share of each class held out for validation.
    pub valid_fraction: f64,
    pub svm: SvmParams,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            pop_size: 108,
            gene_len: GENE_LEN,
            p_crossover: 0.65,
            p_mutation: 0.002,
            n_generations: 110,
            w_err: 0.9,
            w_count: 0.1,
            rng_seed: 0,
            valid_fraction: 0.3,
            svm: SvmParams::default(),
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(IrisError::InvalidArgument(m));
        if self.pop_size == 0 || self.gene_len == 0 || self.n_generations == 0 {
            return bad("population, gene length and generations must be positive".into());
        }
        if !(self.w_err > 0.0 && self.w_count > 0.0)
            || (self.w_err + self.w_count - 1.0).abs() > 1e-9
        {
            return bad(format!(
                "weights ({}, {}) must be positive and sum to 1",
                self.w_err, self.w_count
            ));
        }
        for (name, p) in [
            ("crossover", self.p_crossover),
            ("mutation", self.p_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} probability {p} outside [0, 1]"));
            }
        }
        if !(self.valid_fraction > 0.0 && self.valid_fraction < 1.0) {
            return bad(format!(
                "validation fraction {} outside (0, 1)",
                self.valid_fraction
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<bool>,
    pub error_rate: f64,
    pub n_selected: usize,
    pub scalar: f64,
}

impl Chromosome {
    /// Hex of the genes packed MSB-first.
    pub fn to_hex(&self) -> String {
        hex::encode(pack_bits(&self.genes))
    }
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
        })
        .collect()
}

/// Feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl LabeledSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(IrisError::DimMismatch(format!(
                "{} rows, {} labels",
                x.len(),
                y.len()
            )));
        }
        let d = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != d) {
            return Err(IrisError::DimMismatch("rows differ in length".into()));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    fn columns(&self, cols: &[usize]) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect()
    }
}

/// Per-class shuffle, then the first `round(n·fraction)` samples of each
/// class go to validation. Every class keeps at least one training sample.
pub fn stratified_split(
    y: &[usize],
    valid_fraction: f64,
    rng: &mut impl Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &c) in y.iter().enumerate() {
        match by_class.iter_mut().find(|(k, _)| *k == c) {
            Some((_, v)) => v.push(i),
            None => by_class.push((c, vec![i])),
        }
    }
    by_class.sort_by_key(|(c, _)| *c);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for (_, mut idx) in by_class {
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.gen_range(0..=i));
        }
        let n_valid = ((idx.len() as f64 * valid_fraction).round() as usize).min(idx.len() - 1);
        valid.extend_from_slice(&idx[..n_valid]);
        train.extend_from_slice(&idx[n_valid..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}

fn error_rate(
    genes: &[bool],
    train: &LabeledSet,
    valid: &LabeledSet,
    svm: &SvmParams,
) -> Result<f64> {
    let cols: Vec<usize> = genes
        .iter()
        .enumerate()
        .filter(|(_, &g)| g)
        .map(|(i, _)| i)
        .collect();
    let model = svm_train(&train.columns(&cols), &train.y, svm)?;
    let mut wrong = 0;
    for (x, &y) in valid.columns(&cols).iter().zip(&valid.y) {
        wrong += (model.predict(x)? != y) as usize;
    }
    Ok(wrong as f64 / valid.len() as f64)
}

fn check_split(train: &LabeledSet, valid: &LabeledSet) -> Result<()> {
    if valid.is_empty() {
        return Err(IrisError::DegenerateSplit("empty validation set".into()));
    }
    if let Some(c) = valid.y.iter().find(|c| !train.y.contains(c)) {
        return Err(IrisError::DegenerateSplit(format!(
            "class {c} absent from training"
        )));
    }
    Ok(())
}

/// Scalar fitness `w_err·error + w_count·selected/len`. The empty mask
/// scores 1 without training.
pub fn evaluate_fitness(
    genes: Vec<bool>,
    train: &LabeledSet,
    valid: &LabeledSet,
    params: &GaParams,
) -> Result<Chromosome> {
    if genes.len() != train.dim() || genes.len() != valid.dim() {
        return Err(IrisError::DimMismatch(format!(
            "{} genes for {}-dim data",
            genes.len(),
            train.dim()
        )));
    }
    check_split(train, valid)?;
    let n_selected = genes.iter().filter(|&&g| g).count();
    if n_selected == 0 {
        return Ok(Chromosome {
            genes,
            error_rate: 1.0,
            n_selected,
            scalar: 1.0,
        });
    }
    let err = error_rate(&genes, train, valid, &params.svm)?;
    let scalar = params.w_err * err + params.w_count * n_selected as f64 / genes.len() as f64;
    Ok(Chromosome {
        genes,
        error_rate: err,
        n_selected,
        scalar,
    })
}

/// Fitness-proportional draw for minimisation: weight
/// `max_scalar + ε − scalar`.
pub fn roulette_select<'a>(pop: &'a [Chromosome], rng: &mut impl Rng) -> &'a Chromosome {
    let worst = pop
        .iter()
        .map(|c| c.scalar)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = pop
        .iter()
        .map(|c| worst + ROULETTE_EPS - c.scalar)
        .collect();
    let total: f64 = weights.iter().sum();
    let mut t = rng.gen::<f64>() * total;
    for (c, w) in pop.iter().zip(&weights) {
        if t < *w {
            return c;
        }
        t -= w;
    }
    pop.last().expect("nonempty population")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_scalar: f64,
    pub best_error: f64,
    pub best_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Chromosome,
    /// Best-so-far per generation.
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

impl GaResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("generation,best_scalar,best_error,best_count\n");
        for h in &self.history {
            s.push_str(&format!(
                "{},{:.9},{:.9},{}\n",
                h.generation, h.best_scalar, h.best_error, h.best_count
            ));
        }
        s
    }
}

fn crossover_mutate(
    a: &[bool],
    b: &[bool],
    params: &GaParams,
    rng: &mut ChaCha8Rng,
) -> (Vec<bool>, Vec<bool>) {
    let (mut c1, mut c2) = (a.to_vec(), b.to_vec());
    if c1.len() > 1 && rng.gen::<f64>() < params.p_crossover {
        let cut = rng.gen_range(1..c1.len());
        c1[cut..].copy_from_slice(&b[cut..]);
        c2[cut..].copy_from_slice(&a[cut..]);
    }
    for c in [&mut c1, &mut c2] {
        for g in c.iter_mut() {
            if rng.gen::<f64>() < params.p_mutation {
                *g = !*g;
            }
        }
    }
    (c1, c2)
}

/// Generational GA with single elitism on a stratified train/validation
/// split of `data`.
pub fn run_ga(data: &LabeledSet, params: &GaParams) -> Result<GaResult> {
    params.validate()?;
    if data.dim() != params.gene_len {
        return Err(IrisError::DimMismatch(format!(
            "{}-dim data for {} genes",
            data.dim(),
            params.gene_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let (ti, vi) = stratified_split(&data.y, params.valid_fraction, &mut rng);
    let (train, valid) = (data.subset(&ti), data.subset(&vi));
    check_split(&train, &valid)?;

    let mut cache: HashMap<Vec<bool>, Chromosome> = HashMap::new();
    let mut genes: Vec<Vec<bool>> = (0..params.pop_size)
        .map(|_| (0..params.gene_len).map(|_| rng.gen_bool(0.5)).collect())
        .collect();
    let mut best: Option<Chromosome> = None;
    let mut history = Vec::with_capacity(params.n_generations);

    for generation in 0..params.n_generations {
        let mut fresh: Vec<Vec<bool>> = genes
            .iter()
            .filter(|g| !cache.contains_key(*g))
            .cloned()
            .collect();
        fresh.sort();
        fresh.dedup();
        let scored = fresh
            .into_par_iter()
            .map(|g| evaluate_fitness(g, &train, &valid, params))
            .collect::<Result<Vec<_>>>()?;
        for c in scored {
            cache.insert(c.genes.clone(), c);
        }
        let pop: Vec<Chromosome> = genes.iter().map(|g| cache[g].clone()).collect();

        // first minimum wins ties so the run stays reproducible
        let gen_best = pop
            .iter()
            .fold(&pop[0], |b, c| if c.scalar < b.scalar { c } else { b })
            .clone();
        if best.as_ref().is_none_or(|b| gen_best.scalar < b.scalar) {
            best = Some(gen_best.clone());
        }
        let b = best.as_ref().expect("set above");
        history.push(GenerationStats {
            generation,
            best_scalar: b.scalar,
            best_error: b.error_rate,
            best_count: b.n_selected,
        });
        if generation + 1 == params.n_generations {
            break;
        }

        let mut next = vec![gen_best.genes];
        while next.len() < params.pop_size {
            let p1 = roulette_select(&pop, &mut rng).genes.clone();
            let p2 = roulette_select(&pop, &mut rng).genes.clone();
            let (c1, c2) = crossover_mutate(&p1, &p2, params, &mut rng);
            next.push(c1);
            if next.len() < params.pop_size {
                next.push(c2);
            }
        }
        genes = next;
    }
    Ok(GaResult {
        best: best.expect("at least one generation"),
        history,
        evaluations: cache.len(),
    })
}
