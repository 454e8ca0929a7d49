mod common;

use common::{random_finite_problem, random_probs, rng};
use fastrates::decision::{
    excess_loss_moments, lift_conditional, mix_loss, risk, DecisionProblem, DecisionSet, Distribution, Loss, Model,
    Outcome, PredictorMixture,
};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn finite_risk_two_ways(seed in any::<u64>()) {
        let p = random_finite_problem(seed);
        for (i, d) in p.p_family.iter().enumerate() {
            let (os, ps) = d.support().unwrap();
            for f in 0..p.model.len() {
                let a = p.model.action(f);
                let direct = risk(d, a, &p.loss).unwrap().value();
                let folded = os.iter().zip(ps).fold(0.0, |acc, (z, q)| acc + q * p.loss.eval(a, z));
                prop_assert!((direct - folded).abs() <= 1e-14, "P{i} f{f}: {direct} vs {folded}");
            }
        }
    }

    #[test]
    fn mix_loss_below_average_loss(seed in any::<u64>(), eta in 0.01f64..20.0) {
        let p = random_finite_problem(seed);
        let mut r = rng(seed ^ 0xabc);
        let pi = PredictorMixture::new(random_probs(&mut r, p.model.len())).unwrap();
        for z in p.outcome_space().unwrap() {
            let m = mix_loss(&pi, &z, eta, &p.loss, &p.model).unwrap().value();
            let avg: f64 = pi.weights().iter().enumerate().map(|(f, w)| w * p.loss.eval(p.model.action(f), &z)).sum();
            prop_assert!(m <= avg + 1e-12);
        }
    }

    #[test]
    fn mix_loss_nonincreasing_in_eta(seed in any::<u64>(), e1 in 0.01f64..10.0, e2 in 0.01f64..10.0) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let p = random_finite_problem(seed);
        let mut r = rng(seed ^ 0x5);
        let pi = PredictorMixture::new(random_probs(&mut r, p.model.len())).unwrap();
        for z in p.outcome_space().unwrap() {
            let a = mix_loss(&pi, &z, lo, &p.loss, &p.model).unwrap().value();
            let b = mix_loss(&pi, &z, hi, &p.loss, &p.model).unwrap().value();
            prop_assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn cgf_vanishes_at_zero_and_is_convex(seed in any::<u64>(), t in -5.0f64..5.0, h in 0.001f64..2.0) {
        let p = random_finite_problem(seed);
        let d = &p.p_family[0];
        let m = excess_loss_moments(d, p.model.action(0), p.model.action(1), &p.loss).unwrap();
        prop_assert_eq!(m.cgf_neg(0.0), 0.0);
        let mid = m.log_mgf(t);
        let avg = 0.5 * (m.log_mgf(t - h) + m.log_mgf(t + h));
        prop_assert!(mid <= avg + 1e-12);
    }

    #[test]
    fn lifted_risk_is_average_of_conditional_risks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..=3);
        let num_x = r.random_range(1..=3);
        let n = r.random_range(2..=3);
        let values: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.random::<f64>()).collect()).collect();
        let ys: Vec<Outcome> = (0..k).map(|z| Outcome::new(z as f64)).collect();
        // every point mass: the lifting then accepts any joint law on these labels
        let base = DecisionProblem::new(
            Loss::Table { values },
            ys.iter().map(|z| Distribution::point(*z)).collect(),
            Model::indices(n).unwrap(),
            DecisionSet::Model,
        )
        .unwrap();
        let px = random_probs(&mut r, num_x);
        let conds: Vec<Vec<f64>> = (0..num_x).map(|_| random_probs(&mut r, k)).collect();
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        for x in 0..num_x {
            for (y, q) in conds[x].iter().enumerate() {
                outcomes.push(Outcome::at(x, y as f64));
                probs.push(px[x] * q);
            }
        }
        let s: f64 = probs.iter().sum();
        let last = probs.len() - 1;
        probs[last] += 1.0 - s;
        let joint = Distribution::finite(outcomes, probs).unwrap();
        let lifted = lift_conditional(&base, num_x, vec![joint.clone()]).unwrap();
        for t in 0..lifted.model.len() {
            let a = lifted.model.action(t);
            let total = risk(&joint, a, &lifted.loss).unwrap().value();
            let mut expect = 0.0;
            for (x, (mass, cond)) in joint.conditionals(num_x).unwrap().into_iter().enumerate() {
                if let Some(c) = cond {
                    expect += mass * risk(&c, &a[x..x + 1], &base.loss).unwrap().value();
                }
            }
            prop_assert!((total - expect).abs() < 1e-12);
        }
    }
}
