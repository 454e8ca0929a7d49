//! sup-inf against inf-sup of E[e^{eta (l_f - l_g)}] for a mixture of experts.

use fastrates::conditions::{minimax_gap, SearchFamily};
use fastrates::decision::PredictorMixture;
use fastrates::problems::{bounded_squared, linspace};

fn main() -> fastrates::Result<()> {
    let r = bounded_squared(1.0, &linspace(-1.0, 1.0, 9), &[-1.0, 0.0, 1.0])?;
    let pi = PredictorMixture::uniform(3);
    for eta in [0.25, 0.5, 1.0, 2.0] {
        let g = minimax_gap(&r.problem, &pi, eta, &SearchFamily::default())?;
        println!("eta {eta:<5} sup inf {:.6}  inf sup {:.6}  gap {:.2e}", g.supinf, g.infsup, g.gap());
    }
    Ok(())
}
