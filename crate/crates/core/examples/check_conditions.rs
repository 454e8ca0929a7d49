//! Check every condition on a biased coin under 0/1 loss.

use fastrates::conditions::{check_condition, ConditionKind, SearchFamily};
use fastrates::problems::bernoulli_01_at;

fn main() -> fastrates::Result<()> {
    let coin = bernoulli_01_at(0.75);
    let search = SearchFamily::default();
    for eta in [0.5, 1.0, 3f64.ln(), 1.5] {
        for kind in [ConditionKind::Central, ConditionKind::Ppc, ConditionKind::StochMix, ConditionKind::Predictor] {
            let r = check_condition(&coin.problem, kind, eta, 0.0, &search)?;
            println!("eta {eta:.4} {:>10}: {:?} (worst margin {:.3e})", kind.as_str(), r.verdict, r.worst_margin);
        }
    }
    Ok(())
}
