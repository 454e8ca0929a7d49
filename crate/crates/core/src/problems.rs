//! Ready-made decision problems with known constants.
//!
//! Each constructor returns a [`ProblemRecipe`]: the problem, the parameters
//! it was built from and an `expected` map of facts that the generic
//! checkers should reproduce. Keys used in `expected`:
//!
//! * `eta_max`: largest `eta` of the central condition (`1e6` stands for
//!   "every `eta`", matching the cap of [`crate::conditions::max_eta`]);
//! * `central_eta`: an `eta` at which the central condition holds;
//! * `classical_mixable_eta`, `exp_concave_eta`: pointwise mixability and
//!   exp-concavity levels;
//! * `erm_excess_times_n`: `n` times the expected excess risk of
//!   unrestricted ERM;
//! * `bernstein_u_slope`: `B` such that the Bernstein condition holds with
//!   `u(x) = B x`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decision::{lift_conditional, DecisionProblem, DecisionSet, Distribution, Loss, Model, Outcome, Sampler};
use crate::error::{Error, Result};

/// Stands in for an unbounded `eta`.
pub const ETA_CAP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecipe {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub problem: DecisionProblem,
    pub expected: BTreeMap<String, f64>,
}

impl ProblemRecipe {
    fn new(name: &str, params: &[(&str, f64)], problem: DecisionProblem, expected: &[(&str, f64)]) -> Self {
        ProblemRecipe {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            problem,
            expected: expected.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn expected(&self, key: &str) -> Option<f64> {
        self.expected.get(key).copied()
    }
}

/// Evenly spaced grid of `points` values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Largest central `eta` of a single Bernoulli(p) under 0/1 loss: the root
/// of `p e^{-eta} + (1 - p) e^{eta} = 1`, i.e. `ln(p / (1 - p))` for `p > 1/2`.
pub fn bernoulli_eta_max(p: f64) -> f64 {
    let q = p.max(1.0 - p);
    if q >= 1.0 {
        ETA_CAP
    } else {
        (q / (1.0 - q)).ln()
    }
}

fn zero_one_problem(ps: &[f64]) -> Result<DecisionProblem> {
    DecisionProblem::new(
        Loss::ZeroOne,
        ps.iter().map(|p| Distribution::bernoulli(*p)).collect::<Result<_>>()?,
        Model::scalar(&[0.0, 1.0])?,
        DecisionSet::Model,
    )
}

/// 0/1 loss with `F = {0, 1}` and Bernoulli labels `P(Z = 1) = p` for
/// `grid` values of `p` evenly spread over `[1/2 + delta, 1]`.
///
/// Reflected values `1 - p` give the same conditions, so only one side is
/// included.
pub fn bernoulli_01(delta: f64, grid: usize) -> Result<ProblemRecipe> {
    if !(0.0..=0.5).contains(&delta) || grid < 2 {
        return Err(Error::InvalidArgument("need delta in [0, 1/2] and grid >= 2".into()));
    }
    let ps = linspace(0.5 + delta, 1.0, grid);
    Ok(ProblemRecipe::new(
        "bernoulli01",
        &[("delta", delta), ("grid", grid as f64)],
        zero_one_problem(&ps)?,
        &[("eta_max", bernoulli_eta_max(0.5 + delta))],
    ))
}

/// A single Bernoulli(p) label distribution under 0/1 loss.
///
/// # Panics
/// If `p` is not in `[0, 1]`.
pub fn bernoulli_01_at(p: f64) -> ProblemRecipe {
    let problem = zero_one_problem(&[p]).expect("p must lie in [0, 1]");
    ProblemRecipe::new("bernoulli01", &[("p", p)], problem, &[("eta_max", bernoulli_eta_max(p))])
}

/// [`bernoulli_01`] lifted to covariates `x in 0..px.len()`: `x` is uniform
/// and `Y | X = x` is Bernoulli(`px[x]`). The model has `2^|X|` predictors.
pub fn lifted_bernoulli_01(delta: f64, grid: usize, px: &[f64]) -> Result<ProblemRecipe> {
    let base = bernoulli_01(delta, grid)?;
    let k = px.len();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one covariate".into()));
    }
    let mut outcomes = Vec::with_capacity(2 * k);
    let mut probs = Vec::with_capacity(2 * k);
    for (x, p) in px.iter().enumerate() {
        outcomes.push(Outcome::at(x, 0.0));
        probs.push((1.0 - p) / k as f64);
        outcomes.push(Outcome::at(x, 1.0));
        probs.push(p / k as f64);
    }
    let joint = Distribution::finite(outcomes, probs)?;
    let problem = lift_conditional(&base.problem, k, vec![joint])?;
    let params = [("delta", delta), ("grid", grid as f64), ("num_x", k as f64)];
    let mut r = ProblemRecipe::new("bernoulli01_lifted", &params, problem, &[("family_eta_max", bernoulli_eta_max(0.5 + delta))]);
    for (x, p) in px.iter().enumerate() {
        r.params.insert(format!("p_{x}"), *p);
    }
    Ok(r)
}

/// Squared loss `(z - f)^2 / 2` on `[-B, B]`: every point mass on `z_grid`
/// is a distribution, `F` is `f_grid` and decisions range over its hull.
pub fn bounded_squared(b: f64, z_grid: &[f64], f_grid: &[f64]) -> Result<ProblemRecipe> {
    if !(b > 0.0) || z_grid.is_empty() || f_grid.is_empty() {
        return Err(Error::InvalidArgument("need B > 0 and nonempty grids".into()));
    }
    if z_grid.iter().chain(f_grid).any(|v| v.abs() > b * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument("grids must lie in [-B, B]".into()));
    }
    let problem = DecisionProblem::new(
        Loss::Squared { range: Some([0.0, 2.0 * b * b]) },
        z_grid.iter().map(|z| Distribution::point(Outcome::new(*z))).collect(),
        Model::scalar(f_grid)?,
        DecisionSet::ConvexHull,
    )?;
    Ok(ProblemRecipe::new(
        "sqbounded",
        &[("B", b), ("z_points", z_grid.len() as f64), ("f_points", f_grid.len() as f64)],
        problem,
        &[("classical_mixable_eta", 1.0 / (b * b)), ("exp_concave_eta", 1.0 / (4.0 * b * b))],
    ))
}

/// Squared loss with Gaussian location family `N(m, sigma2)` for `points`
/// means `m` in `mean_range`; `F` is the same grid.
pub fn subgaussian_location(sigma2: f64, mean_range: (f64, f64), points: usize) -> Result<ProblemRecipe> {
    if !(sigma2 > 0.0) || points == 0 || !(mean_range.0 <= mean_range.1) {
        return Err(Error::InvalidArgument("need sigma2 > 0, points >= 1 and lo <= hi".into()));
    }
    let grid = linspace(mean_range.0, mean_range.1, points);
    let sd = sigma2.sqrt();
    let problem = DecisionProblem::new(
        Loss::squared(),
        grid.iter().map(|m| Distribution::sampler(Sampler::Gaussian { mean: *m, sd })).collect::<Result<_>>()?,
        Model::scalar(&grid)?,
        DecisionSet::Model,
    )?;
    Ok(ProblemRecipe::new(
        "subgauss",
        &[("sigma2", sigma2), ("lo", mean_range.0), ("hi", mean_range.1), ("points", points as f64)],
        problem,
        &[("central_eta", 1.0 / sigma2)],
    ))
}

/// Like [`subgaussian_location`] but each distribution is the mixture
/// `N(m - M, 1) / 2 + N(m + M, 1) / 2`, subgaussian with variance `1 + M^2`.
pub fn subgaussian_mixture(m_spread: f64, mean_range: (f64, f64), points: usize) -> Result<ProblemRecipe> {
    if !(m_spread >= 0.0) || points == 0 || !(mean_range.0 <= mean_range.1) {
        return Err(Error::InvalidArgument("need M >= 0, points >= 1 and lo <= hi".into()));
    }
    let grid = linspace(mean_range.0, mean_range.1, points);
    let family = grid
        .iter()
        .map(|m| {
            Distribution::sampler(Sampler::GaussianMixture {
                means: vec![m - m_spread, m + m_spread],
                weights: vec![0.5, 0.5],
                sd: 1.0,
            })
        })
        .collect::<Result<_>>()?;
    let problem = DecisionProblem::new(Loss::squared(), family, Model::scalar(&grid)?, DecisionSet::Model)?;
    let sigma2 = 1.0 + m_spread * m_spread;
    Ok(ProblemRecipe::new(
        "subgauss_mixture",
        &[("M", m_spread), ("lo", mean_range.0), ("hi", mean_range.1), ("points", points as f64)],
        problem,
        &[("sigma2", sigma2), ("central_eta", 1.0 / sigma2)],
    ))
}

/// Log loss of the densities `N(mu, 1)`, data from `N(nu, 1)`.
pub fn normal_location_logloss(nu_grid: &[f64], mu_grid: &[f64]) -> Result<ProblemRecipe> {
    if nu_grid.is_empty() || mu_grid.is_empty() {
        return Err(Error::InvalidArgument("grids must be nonempty".into()));
    }
    let problem = DecisionProblem::new(
        Loss::GaussianLog,
        nu_grid.iter().map(|nu| Distribution::sampler(Sampler::Gaussian { mean: *nu, sd: 1.0 })).collect::<Result<_>>()?,
        Model::scalar(mu_grid)?,
        DecisionSet::Model,
    )?;
    Ok(ProblemRecipe::new(
        "normloc",
        &[("nu_points", nu_grid.len() as f64), ("mu_points", mu_grid.len() as f64)],
        problem,
        &[("eta_max", 1.0), ("central_eta", 1.0), ("erm_excess_times_n", 0.5)],
    ))
}

/// `|mu|` beyond which the `(1, B)`-Bernstein condition must fail for
/// [`normal_location_logloss`].
pub fn normloc_bernstein_threshold(b: f64) -> f64 {
    (32.0 * b).sqrt()
}

/// Heavy-tail constants of a Student-t with 5 degrees of freedom scaled so
/// that `E[Z^4] = A`: returns `(s, c1, c2)` with density `>= c2 / z^6` for
/// `|z| > c1`.
pub fn heavy_tail_constants(a: f64) -> (f64, f64, f64) {
    let s = (a / 25.0).powf(0.25);
    (s, s * 5f64.sqrt(), 125.0 * s.powi(5) / (3.0 * PI * 5f64.sqrt()))
}

/// Squared loss, `F` a grid of `points` values in `[-1, 1]`, and the single
/// distribution `P*`: a centred Student-t(5) with fourth moment `A`.
///
/// All exponential moments of the excess loss diverge, while the Bernstein
/// condition holds with `u(x) = (4 sqrt(A) + 1) x`.
pub fn heavy_tail_squared(a: f64, points: usize) -> Result<ProblemRecipe> {
    if !(a > 0.0) || points < 2 {
        return Err(Error::InvalidArgument("need A > 0 and points >= 2".into()));
    }
    let (s, c1, c2) = heavy_tail_constants(a);
    let problem = DecisionProblem::new(
        Loss::squared(),
        vec![Distribution::sampler(Sampler::StudentT { dof: 5.0, loc: 0.0, scale: s })?],
        Model::scalar(&linspace(-1.0, 1.0, points))?,
        DecisionSet::Model,
    )?;
    Ok(ProblemRecipe::new(
        "heavytail",
        &[("A", a), ("s", s), ("c1", c1), ("c2", c2), ("points", points as f64)],
        problem,
        &[("eta_max", 0.0), ("bernstein_u_slope", 4.0 * a.sqrt() + 1.0)],
    ))
}

/// All probability vectors over `k` outcomes whose entries are multiples of `1/steps`.
pub fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left as f64 / steps as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i as f64 / steps as f64);
            rec(k - 1, left - i, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Brier score over `num_outcomes` labels; `F` is the simplex grid with
/// step `1/steps`, decisions range over its hull and the family holds every
/// point mass.
pub fn brier(num_outcomes: usize, steps: usize) -> Result<ProblemRecipe> {
    if num_outcomes < 2 || steps == 0 {
        return Err(Error::InvalidArgument("need at least two outcomes and one step".into()));
    }
    let problem = DecisionProblem::new(
        Loss::Brier,
        (0..num_outcomes).map(|k| Distribution::point(Outcome::new(k as f64))).collect(),
        Model::new(simplex_grid(num_outcomes, steps))?,
        DecisionSet::ConvexHull,
    )?;
    Ok(ProblemRecipe::new(
        "brier",
        &[("outcomes", num_outcomes as f64), ("steps", steps as f64)],
        problem,
        &[("classical_mixable_eta", 1.0)],
    ))
}

/// Names accepted by [`recipe`].
pub const RECIPES: [&str; 6] = ["bernoulli01", "sqbounded", "subgauss", "normloc", "heavytail", "brier"];

/// Build a recipe by name. Missing parameters take defaults; unknown ones
/// are rejected.
///
/// | name | parameters (defaults) |
/// |---|---|
/// | `bernoulli01` | `p` (single distribution) or `delta` (0.25), `grid` (6) |
/// | `sqbounded` | `B` (1), `points` (21) |
/// | `subgauss` | `sigma2` (1), `lo` (-1), `hi` (1), `points` (21), `M` (mixture spread, optional) |
/// | `normloc` | `nu_lo` (0), `nu_hi` (0), `nu_points` (1), `mu_lo` (-1), `mu_hi` (1), `mu_points` (201) |
/// | `heavytail` | `A` (1), `points` (41) |
/// | `brier` | `outcomes` (2), `steps` (10) |
pub fn recipe(name: &str, params: &BTreeMap<String, f64>) -> Result<ProblemRecipe> {
    let allowed: &[&str] = match name {
        "bernoulli01" => &["p", "delta", "grid"],
        "sqbounded" => &["B", "points"],
        "subgauss" => &["sigma2", "lo", "hi", "points", "M"],
        "normloc" => &["nu_lo", "nu_hi", "nu_points", "mu_lo", "mu_hi", "mu_points"],
        "heavytail" => &["A", "points"],
        "brier" => &["outcomes", "steps"],
        _ => return Err(Error::InvalidArgument(format!("unknown problem {name:?}; expected one of {RECIPES:?}"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidArgument(format!("unknown parameter {k:?} for {name}")));
    }
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    let count = |k: &str, d: usize| -> Result<usize> {
        let v = get(k, d as f64);
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::InvalidArgument(format!("{k} must be a nonnegative integer")))
        }
    };
    match name {
        "bernoulli01" => match params.get("p") {
            Some(p) if params.len() == 1 => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidArgument("p must lie in [0, 1]".into()));
                }
                Ok(bernoulli_01_at(*p))
            }
            Some(_) => Err(Error::InvalidArgument("p cannot be combined with delta or grid".into())),
            None => bernoulli_01(get("delta", 0.25), count("grid", 6)?),
        },
        "sqbounded" => {
            let b = get("B", 1.0);
            let g = linspace(-b, b, count("points", 21)?);
            bounded_squared(b, &g, &g)
        }
        "subgauss" => {
            let range = (get("lo", -1.0), get("hi", 1.0));
            match params.get("M") {
                Some(m) => subgaussian_mixture(*m, range, count("points", 21)?),
                None => subgaussian_location(get("sigma2", 1.0), range, count("points", 21)?),
            }
        }
        "normloc" => {
            let nu = linspace(get("nu_lo", 0.0), get("nu_hi", 0.0), count("nu_points", 1)?);
            let mu = linspace(get("mu_lo", -1.0), get("mu_hi", 1.0), count("mu_points", 201)?);
            normal_location_logloss(&nu, &mu)
        }
        "heavytail" => heavy_tail_squared(get("A", 1.0), count("points", 41)?),
        "brier" => brier(count("outcomes", 2)?, count("steps", 10)?),
        _ => unreachable!(),
    }
}
