use std::collections::BTreeMap;

use fastrates::conditions::{check_bernstein, check_condition, max_eta, BernsteinMoment, ConditionKind, SearchFamily, VFunction};
use fastrates::problems::{
    bernoulli_01, bernoulli_01_at, bounded_squared, brier, heavy_tail_constants, heavy_tail_squared, lifted_bernoulli_01,
    linspace, normal_location_logloss, normloc_bernstein_threshold, recipe, subgaussian_location, subgaussian_mixture,
    ETA_CAP,
};

fn search() -> SearchFamily {
    SearchFamily::default()
}

#[test]
fn bernoulli_eta_max_matches_closed_form() {
    for (delta, want) in [(0.25, 3f64.ln()), (0.0, 0.0), (0.1, (0.6f64 / 0.4).ln())] {
        let r = bernoulli_01(delta, 6).unwrap();
        let got = max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap();
        assert!((got - want).abs() < 1e-6, "delta {delta}: {got} vs {want}");
        assert!((r.expected("eta_max").unwrap() - want).abs() < 1e-15);
    }
    let r = bernoulli_01(0.5, 2).unwrap();
    assert_eq!(max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap(), ETA_CAP);
    assert_eq!(r.expected("eta_max"), Some(ETA_CAP));
    // margins of order eta/2 stay inside the 1e-9 tolerance up to eta ~ 2e-9
    let half = bernoulli_01_at(0.5);
    let e = max_eta(&half.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap();
    assert!((0.0..=1e-8).contains(&e), "{e}");
}

#[test]
fn enlarging_the_family_never_raises_eta_max() {
    let mut prev = f64::INFINITY;
    for delta in [0.45, 0.4, 0.3, 0.25, 0.1, 0.0] {
        let r = bernoulli_01(delta, 6).unwrap();
        let e = max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap();
        assert!(e <= prev + 1e-9);
        prev = e;
    }
}

#[test]
fn lifted_bernoulli_keeps_the_worst_conditional() {
    let r = lifted_bernoulli_01(0.25, 6, &[0.75, 0.85, 0.95]).unwrap();
    assert_eq!(r.problem.model.len(), 8);
    let e = max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap();
    assert!((e - r.expected("family_eta_max").unwrap()).abs() < 1e-6, "{e}");
}

#[test]
fn bounded_squared_mixability_levels() {
    for b in [1.0, 2.0] {
        let zs = linspace(-b, b, 21);
        let r = bounded_squared(b, &zs, &[-b, b]).unwrap();
        let mix = r.expected("classical_mixable_eta").unwrap();
        assert!((mix - 1.0 / (b * b)).abs() < 1e-15);
        assert!(check_condition(&r.problem, ConditionKind::ClassicalMix, mix, 0.0, &search()).unwrap().holds());
        assert!(check_condition(&r.problem, ConditionKind::ClassicalMix, 1.5 * mix, 0.0, &search()).unwrap().refuted());
        let ec = r.expected("exp_concave_eta").unwrap();
        assert!(check_condition(&r.problem, ConditionKind::StochExpConcave, ec, 0.0, &search()).unwrap().holds());
        // between the two levels the mean fails somewhere on the grid
        assert!(check_condition(&r.problem, ConditionKind::StochExpConcave, mix, 0.0, &search()).unwrap().refuted());
    }
}

#[test]
fn subgaussian_central_level() {
    for sigma2 in [0.5, 1.0, 2.0] {
        let r = subgaussian_location(sigma2, (-1.0, 1.0), 21).unwrap();
        let want = r.expected("central_eta").unwrap();
        let e = max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap();
        assert!(e >= want - 1e-6, "sigma2 {sigma2}: {e}");
        assert!((e - want).abs() < 1e-6, "the Gaussian bound is tight: {e} vs {want}");
    }
    let r = subgaussian_mixture(1.0, (-1.0, 1.0), 11).unwrap();
    assert_eq!(r.expected("sigma2"), Some(2.0));
    let eta = r.expected("central_eta").unwrap();
    assert!(check_condition(&r.problem, ConditionKind::Central, eta, 0.0, &search()).unwrap().holds());
}

#[test]
fn normal_location_central_and_bernstein() {
    let r = normal_location_logloss(&[0.0], &linspace(-1.0, 1.0, 21)).unwrap();
    let e = max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap();
    assert!((e - r.expected("eta_max").unwrap()).abs() < 1e-6, "{e}");

    let wide = normal_location_logloss(&[0.0], &linspace(-30.0, 30.0, 601)).unwrap();
    let b = 1.0;
    let rep = check_bernstein(&wide.problem, &VFunction::power(b, 1.0), BernsteinMoment::SecondMoment).unwrap();
    assert!(rep.refuted());
    let w = rep.witness.unwrap();
    assert!(w.action[0].abs() >= normloc_bernstein_threshold(b));
}

#[test]
fn heavy_tail_recipe() {
    let a = 1.0;
    let (s, c1, c2) = heavy_tail_constants(a);
    assert!((25.0 * s.powi(4) - a).abs() < 1e-12);
    assert!((c1 - s * 5f64.sqrt()).abs() < 1e-15 && c2 > 0.0);
    let r = heavy_tail_squared(a, 21).unwrap();
    let rep = check_condition(&r.problem, ConditionKind::Central, 0.01, 0.0, &search()).unwrap();
    assert!(rep.refuted() && rep.infinite_moment);
    assert_eq!(max_eta(&r.problem, ConditionKind::Central, 0.0, 1e-9, &search()).unwrap(), r.expected("eta_max").unwrap());
    let u = VFunction::power(r.expected("bernstein_u_slope").unwrap(), 1.0);
    let rep = check_bernstein(&r.problem, &u, BernsteinMoment::Variance).unwrap();
    assert!(rep.holds(), "{rep:?}");
}

#[test]
fn brier_is_one_mixable() {
    let r = brier(2, 10).unwrap();
    let eta = r.expected("classical_mixable_eta").unwrap();
    assert!(check_condition(&r.problem, ConditionKind::ClassicalMix, eta, 0.0, &search()).unwrap().holds());
    assert!(check_condition(&r.problem, ConditionKind::ClassicalMix, 2.0 * eta, 0.0, &search()).unwrap().refuted());
    // point forecast on the realised label costs nothing; uniform costs 1/2
    let z = fastrates::decision::Outcome::new(1.0);
    assert_eq!(r.problem.loss.eval(&[0.0, 1.0], &z), 0.0);
    assert_eq!(r.problem.loss.eval(&[0.5, 0.5], &z), 0.5);
}

#[test]
fn recipes_by_name() {
    let none = BTreeMap::new();
    for name in fastrates::problems::RECIPES {
        let r = recipe(name, &none).unwrap();
        assert!(!r.problem.p_family.is_empty(), "{name}");
    }
    let mut bad = BTreeMap::new();
    bad.insert("bogus".to_string(), 1.0);
    assert!(recipe("bernoulli01", &bad).is_err());
    assert!(recipe("nope", &none).is_err());
    let mut p = BTreeMap::new();
    p.insert("p".to_string(), 0.75);
    let r = recipe("bernoulli01", &p).unwrap();
    assert_eq!(r.problem.p_family.len(), 1);
    assert!((r.expected("eta_max").unwrap() - 3f64.ln()).abs() < 1e-15);
}
