//! Excess risk of ERM against n, with and without a margin.

use fastrates::learners::{rate_experiment, Learner};
use fastrates::problems::{bernoulli_01, linspace, normal_location_logloss};

fn main() -> fastrates::Result<()> {
    let ns = [64, 128, 256, 512, 1024];
    let cases = [
        ("coin, no margin", bernoulli_01(0.0, 129)?.problem),
        ("normal location", normal_location_logloss(&[0.0], &linspace(-1.0, 1.0, 1001))?.problem),
    ];
    for (name, p) in cases {
        let c = rate_experiment(&p, &Learner::Erm, &ns, 500, 1)?;
        println!("{name}: slope {:.3}", c.slope);
        for ((n, e), s) in c.ns.iter().zip(&c.excess).zip(&c.stderr) {
            println!("  n {n:>5}  excess {e:.3e} +- {s:.1e}");
        }
    }
    Ok(())
}
