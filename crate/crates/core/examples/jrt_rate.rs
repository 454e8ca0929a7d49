//! JRT-II for well-specified log loss with gamma(f, g) = E_P[g / f], then the rate trade-off
//! for eps(eta) = eta^{s/2}.

use fastrates::conditions::{check_jrt2, SearchFamily};
use fastrates::decision::{DecisionProblem, DecisionSet, Distribution, Loss, Model, Outcome};
use fastrates::momentbounds::optimize_eta_rate;

fn main() -> fastrates::Result<()> {
    let z = [Outcome::new(0.0), Outcome::new(1.0)];
    let truth = Distribution::finite(z.to_vec(), vec![0.3, 0.7])?;
    let model = Model::new(vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.2, 0.8]])?;
    let p = DecisionProblem::new(Loss::Log, vec![truth], model, DecisionSet::Model)?;
    let gamma = |f: &[f64], g: &[f64]| [0.3, 0.7].iter().zip(f).zip(g).map(|((t, a), b)| t * b / a).sum::<f64>();
    let rep = check_jrt2(&p, &gamma, 1.0, &SearchFamily::default())?;
    println!("JRT-II at eta = 1: {:?}, worst margin {:.3e}", rep.verdict, rep.worst_margin);

    for s in [1.0f64, 2.0, 4.0] {
        print!("s = {s}:");
        for n in [100u64, 10_000, 1_000_000] {
            let (eta, rate) = optimize_eta_rate(|e| e.powf(s / 2.0), 10, n);
            print!("  n {n}: eta {eta:.3} rate {rate:.2e}");
        }
        println!();
    }
    Ok(())
}
