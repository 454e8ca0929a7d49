//! The aggregating algorithm on Brier loss over a grid of forecasts.

use fastrates::decision::{Outcome, PredictorMixture};
use fastrates::learners::{aggregating_algorithm, Substitution};
use fastrates::problems::brier;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fastrates::Result<()> {
    let r = brier(2, 10)?;
    let p = &r.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let stream: Vec<Outcome> = (0..500).map(|_| Outcome::new(if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 })).collect();
    let eta = r.expected("classical_mixable_eta").unwrap();
    let run = aggregating_algorithm(p, &stream, eta, &Substitution::grid_minimax(), &PredictorMixture::uniform(p.model.len()))?;
    println!("experts {}, rounds {}", p.model.len(), stream.len());
    println!("learner loss {:.4}, best expert {:.4}", run.cumulative_loss(), run.best_expert_loss());
    println!("regret {:.4} <= ln N / eta = {:.4}", run.regret(), (p.model.len() as f64).ln() / eta);
    Ok(())
}
