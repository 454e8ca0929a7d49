//! Largest E[e^{(eta/2) S}] under the moment constraints, against the closed
//! form bound and the dual certificate.

use fastrates::momentbounds::{cgf_half_eta_bound, dual_certificate_for, feasibility_threshold, moment_lp_oracle, MomentProblemInstance};

fn main() -> fastrates::Result<()> {
    for eta in [0.5, 1.0, 2.0, 5.0] {
        let cert = dual_certificate_for(eta)?;
        for frac in [0.1, 0.5, 0.9] {
            let a = frac * feasibility_threshold(eta);
            let sol = moment_lp_oracle(&MomentProblemInstance::new(eta, a), 2001)?;
            let closed = cgf_half_eta_bound(eta, a, 1.0)?.exp();
            println!(
                "eta {eta:<4} a/n {a:.4}: lp {:.6}  dual {:.6}  closed form {closed:.6}  atoms {:?}",
                sol.value,
                -cert.dual_value(a),
                sol.atoms
            );
        }
    }
    Ok(())
}
