#![allow(dead_code)]

use fastrates::decision::{DecisionProblem, DecisionSet, Distribution, Loss, Model, Outcome};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_probs<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let mut p: Vec<f64> = e.iter().map(|x| x / s).collect();
    // renormalise the last entry so the sum is 1 to rounding
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = (1.0 - head).max(0.0);
    p
}

/// Table loss with values in `[0, 1]`, `F = F_D`, finite outcomes `0..k`.
pub fn random_finite_problem(seed: u64) -> DecisionProblem {
    let mut r = rng(seed);
    let k = r.random_range(2..=4);
    let n = r.random_range(2..=5);
    let np = r.random_range(1..=3);
    let values: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.random::<f64>()).collect()).collect();
    let outcomes: Vec<Outcome> = (0..k).map(|z| Outcome::new(z as f64)).collect();
    let family = (0..np)
        .map(|_| Distribution::finite(outcomes.clone(), random_probs(&mut r, k)).unwrap())
        .collect();
    DecisionProblem::new(Loss::Table { values }, family, Model::indices(n).unwrap(), DecisionSet::Model).unwrap()
}

pub fn bernoulli_problem(ps: &[f64]) -> DecisionProblem {
    DecisionProblem::new(
        Loss::ZeroOne,
        ps.iter().map(|p| Distribution::bernoulli(*p).unwrap()).collect(),
        Model::scalar(&[0.0, 1.0]).unwrap(),
        DecisionSet::Model,
    )
    .unwrap()
}
