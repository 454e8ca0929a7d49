//! Largest central eta for 0/1 loss on Bernoulli(p) against ln(p / (1 - p)).

use fastrates::conditions::{max_eta, ConditionKind, SearchFamily};
use fastrates::problems::{bernoulli_01, bernoulli_01_at, bernoulli_eta_max};

fn main() -> fastrates::Result<()> {
    let search = SearchFamily::default();
    println!("{:>6} {:>12} {:>12}", "p", "eta_max", "closed form");
    for p in [0.55, 0.6, 0.75, 0.9, 0.99] {
        let e = max_eta(&bernoulli_01_at(p).problem, ConditionKind::Central, 0.0, 1e-9, &search)?;
        println!("{p:>6} {e:>12.8} {:>12.8}", bernoulli_eta_max(p));
    }
    // a family is only as good as its worst member
    for delta in [0.4, 0.25, 0.1] {
        let fam = bernoulli_01(delta, 6)?;
        let e = max_eta(&fam.problem, ConditionKind::Central, 0.0, 1e-9, &search)?;
        println!("p in [{:.2}, 1]: eta_max {e:.6}", 0.5 + delta);
    }
    Ok(())
}
