//! Lifting a conditional problem to (x, y) pairs keeps the worst conditional eta.

use fastrates::conditions::{max_eta, ConditionKind, SearchFamily};
use fastrates::problems::{bernoulli_eta_max, lifted_bernoulli_01};

fn main() -> fastrates::Result<()> {
    let px = [0.75, 0.85, 0.95];
    let r = lifted_bernoulli_01(0.25, 6, &px)?;
    let e = max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &SearchFamily::default())?;
    println!("{} predictors over {} marginals", r.problem.model.len(), r.problem.p_family.len());
    println!("lifted eta_max {e:.6}; worst conditional {:.6}", bernoulli_eta_max(0.75));
    Ok(())
}
