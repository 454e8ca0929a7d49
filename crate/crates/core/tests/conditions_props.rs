mod common;

use common::{bernoulli_problem, random_finite_problem, random_probs, rng};
use fastrates::conditions::{
    bernstein_to_v, check_bernstein, check_condition, check_jrt2, max_eta, minimax_gap, v_to_bernstein, BernsteinMoment,
    ConditionKind, SearchFamily, VFunction,
};
use fastrates::decision::{DecisionProblem, DecisionSet, Distribution, Loss, Model, Outcome, PredictorMixture};
use fastrates::Error;
use fastrates::momentbounds::kappa;
use proptest::prelude::*;

fn search() -> SearchFamily {
    SearchFamily { dirichlet_draws: 8, ..SearchFamily::default() }
}

fn holds(p: &DecisionProblem, kind: ConditionKind, eta: f64, eps: f64) -> bool {
    check_condition(p, kind, eta, eps, &search()).unwrap().holds()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn central_and_ppc_are_monotone(seed in any::<u64>(), eta in 0.05f64..5.0, eps in 0.0f64..0.2, s in 0.0f64..1.0, de in 0.0f64..0.2) {
        let p = random_finite_problem(seed);
        for kind in [ConditionKind::Central, ConditionKind::Ppc] {
            if holds(&p, kind, eta, eps) {
                prop_assert!(holds(&p, kind, eta * s.max(1e-3), eps + de), "{kind} at eta={eta} eps={eps}");
            }
        }
    }

    #[test]
    fn central_implies_ppc(seed in any::<u64>(), eta in 0.05f64..5.0, eps in 0.0f64..0.1) {
        let p = random_finite_problem(seed);
        if holds(&p, ConditionKind::Central, eta, eps) {
            prop_assert!(holds(&p, ConditionKind::Ppc, eta, eps));
        }
    }

    #[test]
    fn predictor_implies_stoch_mix_implies_ppc(seed in any::<u64>(), eta in 0.05f64..5.0, eps in 0.0f64..0.1) {
        let p = random_finite_problem(seed);
        let pred = holds(&p, ConditionKind::Predictor, eta, eps);
        let sm = holds(&p, ConditionKind::StochMix, eta, eps);
        if pred {
            prop_assert!(sm);
        }
        if sm {
            prop_assert!(holds(&p, ConditionKind::Ppc, eta, eps));
        }
    }

    #[test]
    fn ppc_everywhere_gives_central_with_slack(seed in any::<u64>(), eta in 0.05f64..5.0) {
        let p = random_finite_problem(seed);
        if holds(&p, ConditionKind::Ppc, eta, 0.0) {
            for eps in [0.01, 0.05, 0.1] {
                prop_assert!(holds(&p, ConditionKind::Central, eta, eps), "eps' = {eps}");
            }
        }
    }

    #[test]
    fn max_eta_grows_when_family_shrinks(seed in any::<u64>()) {
        let p = random_finite_problem(seed);
        prop_assume!(p.p_family.len() > 1);
        let sub = DecisionProblem::new(p.loss.clone(), p.p_family[..1].to_vec(), p.model.clone(), DecisionSet::Model).unwrap();
        let tol = 1e-7;
        let full = max_eta(&p, ConditionKind::Central, 0.0, tol, &search()).unwrap();
        let part = max_eta(&sub, ConditionKind::Central, 0.0, tol, &search()).unwrap();
        prop_assert!(part >= full - 2.0 * tol, "{part} < {full}");
    }

    #[test]
    fn conversion_roundtrip_keeps_exponent(c in 0.1f64..10.0, alpha in 0.05f64..1.0, a in 0.25f64..4.0) {
        let v = VFunction::power(c, alpha);
        let u = v_to_bernstein(&v, a).unwrap();
        match &u {
            VFunction::Power { alpha: au, cap: None, .. } => prop_assert!((au - (1.0 - alpha)).abs() < 1e-12),
            other => prop_assert!(false, "unexpected {other:?}"),
        }
        let back = bernstein_to_v(&u, a, 1.0).unwrap();
        match back {
            VFunction::Power { c: cb, alpha: ab, cap } => {
                prop_assert!((ab - alpha).abs() < 1e-12);
                prop_assert_eq!(cap, Some(1.0));
                let ratio = kappa(-2.0 * sup_on(&v, a) * a) / (6.0 * kappa(2.0 * a));
                prop_assert!((cb / c - ratio).abs() <= 1e-9 * ratio, "{cb} vs {}", c * ratio);
            }
            other => prop_assert!(false, "unexpected {other:?}"),
        }
    }

    #[test]
    fn supinf_below_infsup(seed in any::<u64>(), eta in 0.05f64..5.0) {
        let p = random_finite_problem(seed);
        let mut r = rng(seed ^ 0x77);
        let pi = PredictorMixture::new(random_probs(&mut r, p.model.len())).unwrap();
        let g = minimax_gap(&p, &pi, eta, &search()).unwrap();
        prop_assert!(g.supinf <= g.infsup);
    }

    #[test]
    fn bounded_variance_satisfies_constant_bernstein(seed in any::<u64>()) {
        let p = random_finite_problem(seed);
        let r = check_bernstein(&p, &VFunction::Constant { value: 1.0 }, BernsteinMoment::Variance).unwrap();
        prop_assert!(r.holds());
    }
}

fn sup_on(v: &VFunction, a: f64) -> f64 {
    VFunction::check_grid(a).iter().map(|x| v.eval(*x)).fold(0.0, f64::max)
}

#[test]
fn power_bernstein_to_v() {
    let k2 = (2f64.exp() - 3.0) / 4.0;
    assert!((kappa(2.0) - k2).abs() < 1e-12);
    let v = bernstein_to_v(&VFunction::power(2.0, 0.5), 1.0, 1.0).unwrap();
    for x in [0.01f64, 0.1, 0.5, 1.0] {
        let want = (x.powf(0.5) / (2.0 * k2)).min(1.0);
        assert!((v.eval(x) - want).abs() < 1e-12);
    }
    let v = bernstein_to_v(&VFunction::power(1.0, 1.0), 1.0, 1.0).unwrap();
    let want = 4.0 / (2f64.exp() - 3.0);
    for x in [1e-6, 0.3, 1.0] {
        assert!((v.eval(x) - want).abs() < 1e-12);
    }
    // constant u gives a linear v
    let v = bernstein_to_v(&VFunction::Constant { value: 4.0 }, 1.0, 10.0).unwrap();
    assert!((v.eval(0.2) / v.eval(0.1) - 2.0).abs() < 1e-12);
}

#[test]
fn v_to_bernstein_examples() {
    let u = v_to_bernstein(&VFunction::Constant { value: 1.0 }, 1.0).unwrap();
    let want = 24.0 / (1.0 + (-2f64).exp());
    assert!((u.eval(1.0) - want).abs() < 1e-9);
    assert!((u.eval(0.5) - want / 2.0).abs() < 1e-9);
    let u = v_to_bernstein(&VFunction::power(1.0, 1.0), 1.0).unwrap();
    assert!((u.eval(0.1) - u.eval(0.9)).abs() < 1e-12);
}

#[test]
fn shape_violations_are_rejected() {
    let p = bernoulli_problem(&[0.75]);
    let bad = VFunction::power(1.0, 2.0);
    assert!(matches!(check_bernstein(&p, &bad, BernsteinMoment::Variance), Err(Error::ShapeViolation(_))));
    assert!(matches!(v_to_bernstein(&VFunction::power(1.0, 2.0), 1.0), Err(Error::ShapeViolation(_))));
}

#[test]
fn minimax_singletons_coincide() {
    let p = bernoulli_problem(&[0.3]);
    let single = DecisionProblem::new(p.loss.clone(), p.p_family.clone(), Model::scalar(&[1.0]).unwrap(), DecisionSet::Model).unwrap();
    let g = minimax_gap(&single, &PredictorMixture::point(1, 0), 0.7, &SearchFamily::default()).unwrap();
    assert_eq!(g.supinf, g.infsup);
}

#[test]
fn minimax_gap_small_for_convex_squared() {
    let laws: Vec<Distribution> = (0..=100)
        .map(|i| {
            let q = i as f64 / 100.0;
            Distribution::finite(vec![Outcome::new(-1.0), Outcome::new(1.0)], vec![1.0 - q, q]).unwrap()
        })
        .collect();
    let p = DecisionProblem::new(Loss::squared(), laws, Model::scalar(&[-1.0, 1.0]).unwrap(), DecisionSet::ConvexHull).unwrap();
    let search = SearchFamily { decision_grid: 201, ..SearchFamily::default() };
    for w in [0.5, 0.2, 0.9] {
        let pi = PredictorMixture::new(vec![1.0 - w, w]).unwrap();
        let g = minimax_gap(&p, &pi, 0.5, &search).unwrap();
        assert!(g.gap() >= 0.0 && g.gap() <= 1e-3, "gap {} at w = {w}", g.gap());
    }
}

#[test]
fn minimax_gap_positive_without_convexity() {
    let ps: Vec<f64> = (0..6).map(|i| 0.75 + 0.05 * i as f64).collect();
    let mut ps_all = ps.clone();
    ps_all.extend(ps.iter().map(|p| 1.0 - p));
    let p = bernoulli_problem(&ps_all);
    let g = minimax_gap(&p, &PredictorMixture::uniform(2), 1.0, &SearchFamily::default()).unwrap();
    assert!(g.gap() > 1e-3, "gap {}", g.gap());
}

#[test]
fn jrt_constant_gamma() {
    // two predictors with identical losses: every pairwise moment is one
    let p = DecisionProblem::new(
        Loss::Table { values: vec![vec![0.2, 0.4], vec![0.2, 0.4]] },
        vec![Distribution::bernoulli(0.3).unwrap()],
        Model::indices(2).unwrap(),
        DecisionSet::Model,
    )
    .unwrap();
    let r = check_jrt2(&p, &|_, _| 1.0, 1.0, &SearchFamily::default()).unwrap();
    assert!(r.holds());
    let err = check_jrt2(&p, &|f, g| if f == g { 0.9 } else { 1.0 }, 1.0, &SearchFamily::default());
    assert!(matches!(err, Err(Error::GammaShapeViolation(_))));
}

#[test]
fn jrt_log_loss_well_specified() {
    let truth = vec![0.2, 0.5, 0.3];
    let model = Model::new(vec![truth.clone(), vec![0.4, 0.4, 0.2], vec![0.1, 0.3, 0.6]]).unwrap();
    let outcomes: Vec<Outcome> = (0..3).map(|k| Outcome::new(k as f64)).collect();
    let p = DecisionProblem::new(
        Loss::Log,
        vec![Distribution::finite(outcomes, truth.clone()).unwrap()],
        model,
        DecisionSet::ConvexHull,
    )
    .unwrap();
    // at eta = 1, E[e^{l_f - l_g}] = E[g(Z) / f(Z)], linear in g
    let gamma = |f: &[f64], g: &[f64]| truth.iter().zip(f).zip(g).map(|((t, a), b)| t * b / a).sum::<f64>();
    let r = check_jrt2(&p, &gamma, 1.0, &SearchFamily::default()).unwrap();
    assert!(r.holds(), "margin {}", r.worst_margin);
    let implied = r.implied.expect("exp-concavity attached");
    assert_eq!(implied.kind, ConditionKind::StochExpConcave);
    assert!(implied.holds());
}

#[test]
fn well_specified_log_loss_is_one_central() {
    let outcomes: Vec<Outcome> = (0..3).map(|k| Outcome::new(k as f64)).collect();
    let actions = vec![vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2], vec![0.1, 0.3, 0.6]];
    let family = actions.iter().map(|a| Distribution::finite(outcomes.clone(), a.clone()).unwrap()).collect();
    let p = DecisionProblem::new(Loss::Log, family, Model::new(actions).unwrap(), DecisionSet::Model).unwrap();
    let r = check_condition(&p, ConditionKind::Central, 1.0, 0.0, &SearchFamily::default()).unwrap();
    assert!(r.holds() && r.worst_margin <= 1e-12);
}

#[test]
fn zero_one_with_half_is_not_stochastically_mixable() {
    let ps: Vec<f64> = (0..=5).map(|i| 0.5 + 0.1 * i as f64).collect();
    let p = bernoulli_problem(&ps);
    for eta in [0.1, 1.0, 10.0] {
        let r = check_condition(&p, ConditionKind::StochMix, eta, 0.0, &SearchFamily::default()).unwrap();
        assert!(r.refuted(), "eta {eta}");
        assert!(r.witness.is_some());
    }
}
