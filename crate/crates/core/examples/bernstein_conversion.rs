//! Round trip between a Bernstein function u and the v-central function.
//! The trip back recovers u up to a constant factor.

use fastrates::conditions::{bernstein_to_v, check_bernstein, v_to_bernstein, BernsteinMoment, VFunction};
use fastrates::problems::heavy_tail_squared;

fn main() -> fastrates::Result<()> {
    let u = VFunction::power(2.0, 0.5);
    let a = 1.0;
    let v = bernstein_to_v(&u, a, 1.0)?;
    let back = v_to_bernstein(&v, a)?;
    for x in [0.01, 0.1, 0.5, 1.0] {
        println!("x {x:<5} u {:.4}  v {:.4}  back {:.4}  back / u {:.3}", u.eval(x), v.eval(x), back.eval(x), back.eval(x) / u.eval(x));
    }

    let r = heavy_tail_squared(1.0, 21)?;
    let slope = r.expected("bernstein_u_slope").unwrap();
    let rep = check_bernstein(&r.problem, &VFunction::power(slope, 1.0), BernsteinMoment::Variance)?;
    println!("heavy-tailed squared loss, u(x) = {slope:.3} x: {:?}", rep.verdict);
    Ok(())
}
