//! Decision problems and the quantities every condition is built from.
//!
//! A problem is the tuple (loss, distribution family, model, decision set).
//! Actions are plain `Vec<f64>`: a scalar prediction, a probability vector,
//! or a table row index, depending on the loss. When the loss
//! [accepts mixtures](Loss::accepts_mixtures) the action vector doubles as
//! the embedding used for convex-hull decisions and mean substitution.
//!
//! Losses may be `+inf` (log loss of a zero-probability outcome) and follow
//! the convention `exp(-eta * inf) = 0`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Action = Vec<f64>;

/// Probabilities must sum to one within this tolerance.
pub const PROB_TOL: f64 = 1e-12;

/// Default absolute tolerance for exact margins.
pub const EXACT_TOL: f64 = 1e-9;

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

// ---------------------------------------------------------------------------
// Extended reals and outcomes

/// A real number or `+inf`. Never NaN, never `-inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("{value} is not an extended real")));
        }
        Ok(ExtReal(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

/// An observation. Unconditional problems use `x = 0`; conditional problems
/// carry the covariate index in `x` and the label in `y`.
///
/// In JSON an outcome is a bare number, an `[x, y]` pair or `{"x":.., "y":..}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "OutcomeRepr", into = "OutcomeRepr")]
pub struct Outcome {
    pub x: usize,
    pub y: f64,
}

impl Outcome {
    pub fn new(y: f64) -> Self {
        Outcome { x: 0, y }
    }

    pub fn at(x: usize, y: f64) -> Self {
        Outcome { x, y }
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OutcomeRepr {
    Plain(f64),
    Pair(usize, f64),
    Named { x: usize, y: f64 },
}

impl From<OutcomeRepr> for Outcome {
    fn from(r: OutcomeRepr) -> Self {
        match r {
            OutcomeRepr::Plain(y) => Outcome::new(y),
            OutcomeRepr::Pair(x, y) | OutcomeRepr::Named { x, y } => Outcome { x, y },
        }
    }
}

impl From<Outcome> for OutcomeRepr {
    fn from(o: Outcome) -> Self {
        if o.x == 0 {
            OutcomeRepr::Plain(o.y)
        } else {
            OutcomeRepr::Named { x: o.x, y: o.y }
        }
    }
}

// ---------------------------------------------------------------------------
// Losses

/// Loss functions `l(action, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Loss {
    /// 0/1 loss for a scalar label prediction.
    ZeroOne,
    /// `(z - f)^2 / 2`.
    Squared {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range: Option<[f64; 2]>,
    },
    /// Negative log density of `N(f, 1)` at `z`.
    GaussianLog,
    /// `-ln f[z]` for a probability vector `f` over outcomes `0..k`.
    Log,
    /// `sum_k (f[k] - [k == z])^2` for a probability vector `f`.
    Brier,
    /// `values[f][z]`: action `[i]` selects row `i`, outcome `z` a column.
    Table { values: Vec<Vec<f64>> },
    /// `l'((f_0, .., f_{X-1}), (x, y)) = base(f_x, y)`; each block has `width` entries.
    Lifted { base: Box<Loss>, width: usize, num_x: usize },
}

impl Loss {
    pub fn squared() -> Self {
        Loss::Squared { range: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Loss::ZeroOne => "zero_one",
            Loss::Squared { .. } => "squared",
            Loss::GaussianLog => "gaussian_log",
            Loss::Log => "log",
            Loss::Brier => "brier",
            Loss::Table { .. } => "table",
            Loss::Lifted { .. } => "lifted",
        }
    }

    /// Evaluate the loss. Returns `+inf` where the loss is infinite, never NaN.
    pub fn eval(&self, action: &[f64], z: &Outcome) -> f64 {
        match self {
            Loss::ZeroOne => {
                if (action[0] - z.y).abs() < 0.5 {
                    0.0
                } else {
                    1.0
                }
            }
            Loss::Squared { .. } => 0.5 * (z.y - action[0]).powi(2),
            Loss::GaussianLog => 0.5 * (2.0 * PI).ln() + 0.5 * (z.y - action[0]).powi(2),
            Loss::Log => match label_index(z.y, action.len()) {
                Some(k) if action[k] > 0.0 => -action[k].ln(),
                _ => f64::INFINITY,
            },
            Loss::Brier => {
                let k = label_index(z.y, action.len());
                action
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| {
                        let hit = if Some(j) == k { 1.0 } else { 0.0 };
                        (p - hit).powi(2)
                    })
                    .sum()
            }
            Loss::Table { values } => {
                let row = &values[action[0].round() as usize];
                match label_index(z.y, row.len()) {
                    Some(k) => row[k],
                    None => f64::INFINITY,
                }
            }
            Loss::Lifted { base, width, .. } => {
                let block = &action[z.x * width..(z.x + 1) * width];
                base.eval(block, &Outcome::new(z.y))
            }
        }
    }

    /// Whether convex combinations of actions are themselves valid actions.
    pub fn accepts_mixtures(&self) -> bool {
        match self {
            Loss::Squared { .. } | Loss::GaussianLog | Loss::Log | Loss::Brier => true,
            Loss::Lifted { base, .. } => base.accepts_mixtures(),
            Loss::ZeroOne | Loss::Table { .. } => false,
        }
    }

    /// `[q0, q1, q2]` with `l(action, z) = q0 + q1 z + q2 z^2` when the loss is
    /// quadratic in the outcome. Exact risks and excess-loss MGFs of samplers
    /// rely on this.
    pub fn quadratic_form(&self, action: &[f64]) -> Option<[f64; 3]> {
        match self {
            Loss::Squared { .. } => {
                let f = action[0];
                Some([0.5 * f * f, -f, 0.5])
            }
            Loss::GaussianLog => {
                let f = action[0];
                Some([0.5 * (2.0 * PI).ln() + 0.5 * f * f, -f, 0.5])
            }
            _ => None,
        }
    }

    /// Declared `[lo, hi]` range of the loss, if known.
    pub fn declared_range(&self) -> Option<(f64, f64)> {
        match self {
            Loss::ZeroOne => Some((0.0, 1.0)),
            Loss::Squared { range } => range.map(|[lo, hi]| (lo, hi)),
            Loss::GaussianLog => None,
            Loss::Log => Some((0.0, f64::INFINITY)),
            Loss::Brier => Some((0.0, 2.0)),
            Loss::Table { values } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for v in values.iter().flatten() {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
                Some((lo, hi))
            }
            Loss::Lifted { base, .. } => base.declared_range(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Loss::Table { values } => {
                if values.is_empty() || values.iter().any(|r| r.len() != values[0].len() || r.is_empty()) {
                    return Err(Error::InvalidArgument("table loss needs a nonempty rectangular table".into()));
                }
                if values.iter().flatten().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                    return Err(Error::InvalidArgument("table loss entries must be extended reals".into()));
                }
                Ok(())
            }
            Loss::Squared { range: Some([lo, hi]) } if !(lo <= hi) => {
                Err(Error::InvalidArgument("squared loss range must satisfy lo <= hi".into()))
            }
            Loss::Lifted { base, width, num_x } => {
                if *width == 0 || *num_x == 0 {
                    return Err(Error::InvalidArgument("lifted loss needs width, num_x >= 1".into()));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }
}

fn label_index(y: f64, len: usize) -> Option<usize> {
    let k = y.round();
    if k >= 0.0 && (y - k).abs() < 1e-9 && (k as usize) < len {
        Some(k as usize)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Distributions

/// Parametric samplers with exact moment oracles. All of them live on the
/// real line with `x = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    Gaussian { mean: f64, sd: f64 },
    /// Equal-`sd` Gaussian mixture.
    GaussianMixture { means: Vec<f64>, weights: Vec<f64>, sd: f64 },
    /// `loc + scale * T` with `T` Student-t with `dof > 2` degrees of freedom.
    StudentT { dof: f64, loc: f64, scale: f64 },
}

impl Sampler {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDistribution(m.into()));
        match self {
            Sampler::Gaussian { mean, sd } => {
                if !mean.is_finite() || !(*sd >= 0.0) || !sd.is_finite() {
                    return bad("gaussian needs finite mean and sd >= 0");
                }
            }
            Sampler::GaussianMixture { means, weights, sd } => {
                if means.is_empty() || means.len() != weights.len() {
                    return bad("mixture needs matching nonempty means and weights");
                }
                check_probs(weights)?;
                if !(*sd >= 0.0) || means.iter().any(|m| !m.is_finite()) {
                    return bad("mixture needs finite means and sd >= 0");
                }
            }
            Sampler::StudentT { dof, loc, scale } => {
                if !(*dof > 2.0) || !loc.is_finite() || !(*scale > 0.0) {
                    return bad("student-t needs dof > 2, finite loc and scale > 0");
                }
            }
        }
        Ok(())
    }

    /// `n` draws from stream `stream` of `seed`.
    pub fn sample(&self, seed: u64, stream: u64, n: usize) -> Vec<Outcome> {
        let mut rng = stream_rng(seed, stream);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: rand::Rng>(&self, rng: &mut R, n: usize) -> Vec<Outcome> {
        let mut out = Vec::with_capacity(n);
        match self {
            Sampler::Gaussian { mean, sd } => {
                let d = Normal::new(*mean, *sd).expect("validated");
                out.extend((0..n).map(|_| Outcome::new(d.sample(rng))));
            }
            Sampler::GaussianMixture { means, weights, sd } => {
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let k = pick(weights, u);
                    let g: f64 = StandardNormal.sample(rng);
                    out.push(Outcome::new(means[k] + sd * g));
                }
            }
            Sampler::StudentT { dof, loc, scale } => {
                let d = StudentT::new(*dof).expect("validated");
                out.extend((0..n).map(|_| Outcome::new(loc + scale * d.sample(rng))));
            }
        }
        out
    }

    /// The `index`-th draw for `seed`: deterministic and independent of any
    /// other call.
    pub fn draw(&self, seed: u64, index: u64) -> Outcome {
        self.sample(seed, index, 1)[0]
    }

    pub fn mean(&self) -> f64 {
        match self {
            Sampler::Gaussian { mean, .. } => *mean,
            Sampler::GaussianMixture { means, weights, .. } => dot(means, weights),
            Sampler::StudentT { loc, .. } => *loc,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Sampler::Gaussian { mean, sd } => mean * mean + sd * sd,
            Sampler::GaussianMixture { means, weights, sd } => {
                means.iter().zip(weights).map(|(m, w)| w * (m * m + sd * sd)).sum()
            }
            Sampler::StudentT { dof, loc, scale } => loc * loc + scale * scale * dof / (dof - 2.0),
        }
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment() - self.mean().powi(2)).max(0.0)
    }

    /// `ln E[exp(t Z)]`, `+inf` where the moment generating function diverges.
    pub fn log_mgf(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Sampler::Gaussian { mean, sd } => t * mean + 0.5 * t * t * sd * sd,
            Sampler::GaussianMixture { means, weights, sd } => {
                let terms: Vec<f64> = means
                    .iter()
                    .zip(weights)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(m, w)| w.ln() + t * m)
                    .collect();
                log_sum_exp(&terms) + 0.5 * t * t * sd * sd
            }
            Sampler::StudentT { .. } => f64::INFINITY,
        }
    }
}

pub(crate) fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Seeded ChaCha stream: `(seed, stream)` fully determines the draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Monte Carlo settings used whenever an expectation has no exact oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: 20_000, seed: 0x5eed }
    }
}

/// Stream reserved for moment estimation draws.
const MC_STREAM: u64 = u64::MAX - 1;

/// A value with a 95% confidence half-width (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_halfwidth: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, ci_halfwidth: 0.0 }
    }

    pub fn is_exact(&self) -> bool {
        self.ci_halfwidth == 0.0
    }

    /// Sample mean with a normal-approximation interval.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.contains(&f64::INFINITY) {
            return Estimate::exact(f64::INFINITY);
        }
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Estimate { value: mean, ci_halfwidth: f64::INFINITY };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate { value: mean, ci_halfwidth: Z95 * (var / n).sqrt() }
    }
}

/// A data distribution: exact finite support or a parametric sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Finite { outcomes: Vec<Outcome>, probs: Vec<f64> },
    Sampler(Sampler),
}

impl Distribution {
    pub fn finite(outcomes: Vec<Outcome>, probs: Vec<f64>) -> Result<Self> {
        let d = Distribution::Finite { outcomes, probs };
        d.validate()?;
        Ok(d)
    }

    /// `P(Z = 1) = p`, `P(Z = 0) = 1 - p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Distribution::finite(vec![Outcome::new(0.0), Outcome::new(1.0)], vec![1.0 - p, p])
    }

    pub fn point(z: Outcome) -> Self {
        Distribution::Finite { outcomes: vec![z], probs: vec![1.0] }
    }

    pub fn sampler(s: Sampler) -> Result<Self> {
        s.validate()?;
        Ok(Distribution::Sampler(s))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Finite { outcomes, probs } => {
                if outcomes.is_empty() || outcomes.len() != probs.len() {
                    return Err(Error::InvalidDistribution(
                        "finite distribution needs matching nonempty outcomes and probs".into(),
                    ));
                }
                if outcomes.iter().any(|o| !o.y.is_finite()) {
                    return Err(Error::InvalidDistribution("outcomes must be finite".into()));
                }
                check_probs(probs)
            }
            Distribution::Sampler(s) => s.validate(),
        }
    }

    pub fn support(&self) -> Option<(&[Outcome], &[f64])> {
        match self {
            Distribution::Finite { outcomes, probs } => Some((outcomes, probs)),
            Distribution::Sampler(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Distribution::Finite { .. })
    }

    /// Draws used for Monte Carlo estimates under `mc`.
    pub fn mc_draws(&self, mc: &McConfig) -> Vec<Outcome> {
        match self {
            Distribution::Finite { outcomes, probs } => {
                use rand::Rng;
                let mut rng = stream_rng(mc.seed, MC_STREAM);
                (0..mc.samples).map(|_| outcomes[pick(probs, rng.random())]).collect()
            }
            Distribution::Sampler(s) => s.sample(mc.seed, MC_STREAM, mc.samples),
        }
    }

    /// `E[h(Z)]`: exact on finite support, Monte Carlo for samplers.
    pub fn expect(&self, h: impl Fn(&Outcome) -> f64, mc: &McConfig) -> Result<Estimate> {
        match self {
            Distribution::Finite { outcomes, probs } => {
                let vals: Vec<f64> = outcomes.iter().map(&h).collect();
                finite_expectation(&vals, probs).map(Estimate::exact)
            }
            Distribution::Sampler(_) => {
                let vals: Vec<f64> = self.mc_draws(mc).iter().map(&h).collect();
                if vals.iter().any(|v| v.is_nan()) {
                    return Err(Error::UndefinedExpectation("integrand is NaN".into()));
                }
                Ok(Estimate::from_samples(&vals))
            }
        }
    }

    /// Marginal of `x` and the conditional laws `P(y | x)` of a finite joint
    /// distribution on `0..num_x`.
    pub fn conditionals(&self, num_x: usize) -> Result<Vec<(f64, Option<Distribution>)>> {
        let (outcomes, probs) = self
            .support()
            .ok_or_else(|| Error::InvalidDistribution("conditioning needs finite support".into()))?;
        let mut out = Vec::with_capacity(num_x);
        for x in 0..num_x {
            let mut ys = Vec::new();
            let mut ps = Vec::new();
            for (o, p) in outcomes.iter().zip(probs) {
                if o.x == x && *p > 0.0 {
                    ys.push(Outcome::new(o.y));
                    ps.push(*p);
                }
            }
            let mass: f64 = ps.iter().sum();
            if mass > 0.0 {
                ps.iter_mut().for_each(|p| *p /= mass);
                out.push((mass, Some(Distribution::Finite { outcomes: ys, probs: ps })));
            } else {
                out.push((0.0, None));
            }
        }
        if outcomes.iter().any(|o| o.x >= num_x) {
            return Err(Error::InvalidDistribution(format!("covariate index outside 0..{num_x}")));
        }
        Ok(out)
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution("probabilities must be nonnegative".into()));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// `sum_i p_i v_i` with the extended-real conventions: zero-probability
/// terms are skipped and `+inf` on positive mass gives `+inf`.
pub fn finite_expectation(values: &[f64], probs: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for (v, p) in values.iter().zip(probs) {
        if *p == 0.0 {
            continue;
        }
        if v.is_nan() {
            return Err(Error::UndefinedExpectation("integrand is NaN".into()));
        }
        if *v == f64::INFINITY {
            pos_inf = true;
        } else if *v == f64::NEG_INFINITY {
            neg_inf = true;
        } else {
            acc += p * v;
        }
    }
    match (pos_inf, neg_inf) {
        (true, true) => Err(Error::UndefinedExpectation("integrand has +inf and -inf mass".into())),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        _ => Ok(acc),
    }
}

/// Numerically stable `ln sum_i exp(t_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Models, decision sets, problems

/// A finite model: predictor `i` plays `predictors[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model {
    predictors: Vec<Action>,
}

impl Model {
    pub fn new(predictors: Vec<Action>) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one predictor".into()));
        }
        let d = predictors[0].len();
        if d == 0 || predictors.iter().any(|a| a.len() != d || a.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument("predictor actions must be finite vectors of one length".into()));
        }
        Ok(Model { predictors })
    }

    /// One scalar action per predictor.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Model::new(values.iter().map(|v| vec![*v]).collect())
    }

    /// Predictors `0..n` of a [`Loss::Table`].
    pub fn indices(n: usize) -> Result<Self> {
        Model::new((0..n).map(|i| vec![i as f64]).collect())
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn action(&self, id: usize) -> &[f64] {
        &self.predictors[id]
    }

    pub fn actions(&self) -> &[Action] {
        &self.predictors
    }

    pub fn dim(&self) -> usize {
        self.predictors[0].len()
    }

    /// `sum_f w_f a_f`.
    pub fn mean_action(&self, weights: &[f64]) -> Action {
        let mut out = vec![0.0; self.dim()];
        for (a, w) in self.predictors.iter().zip(weights) {
            if *w > 0.0 {
                for (o, v) in out.iter_mut().zip(a) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

/// Where the learner may play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSet {
    /// `F_D = F`.
    Model,
    /// Convex hull of the model's actions; needs a loss that accepts mixtures.
    ConvexHull,
    /// An explicit finite grid, typically a discretisation of all decisions.
    Grid(Vec<Action>),
}

/// The tuple (loss, distribution family, model, decision set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub struct DecisionProblem {
    pub loss: Loss,
    pub p_family: Vec<Distribution>,
    pub model: Model,
    pub decision_set: DecisionSet,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    loss: Loss,
    #[serde(rename = "P")]
    p: Vec<Distribution>,
    #[serde(rename = "F")]
    f: Model,
    #[serde(rename = "F_D", default = "default_decision_set")]
    f_d: DecisionSet,
}

fn default_decision_set() -> DecisionSet {
    DecisionSet::Model
}

impl TryFrom<RawProblem> for DecisionProblem {
    type Error = Error;
    fn try_from(r: RawProblem) -> Result<Self> {
        Model::new(r.f.predictors.clone())?;
        DecisionProblem::new(r.loss, r.p, r.f, r.f_d)
    }
}

impl From<DecisionProblem> for RawProblem {
    fn from(p: DecisionProblem) -> Self {
        RawProblem { loss: p.loss, p: p.p_family, f: p.model, f_d: p.decision_set }
    }
}

impl DecisionProblem {
    /// Validates every component and that each distribution admits a
    /// finite-risk predictor.
    pub fn new(loss: Loss, p_family: Vec<Distribution>, model: Model, decision_set: DecisionSet) -> Result<Self> {
        loss.validate()?;
        if p_family.is_empty() {
            return Err(Error::InvalidArgument("distribution family is empty".into()));
        }
        for p in &p_family {
            p.validate()?;
        }
        match &decision_set {
            DecisionSet::ConvexHull if !loss.accepts_mixtures() => return Err(Error::EmbeddingMissing),
            DecisionSet::Grid(g) if g.is_empty() || g.iter().any(|a| a.len() != model.dim()) => {
                return Err(Error::InvalidArgument("decision grid must be nonempty with the model's dimension".into()))
            }
            _ => {}
        }
        let problem = DecisionProblem { loss, p_family, model, decision_set };
        for i in 0..problem.p_family.len() {
            problem.best_predictor(i)?;
        }
        Ok(problem)
    }

    /// Exact (or Monte Carlo) risks of every model predictor under `P_i`.
    pub fn risks(&self, p_index: usize) -> Result<Vec<f64>> {
        let p = &self.p_family[p_index];
        self.model
            .actions()
            .iter()
            .map(|a| risk(p, a, &self.loss).map(ExtReal::value))
            .collect()
    }

    /// `(f*, R(P_i, f*))` with ties broken towards the lowest id.
    pub fn best_predictor(&self, p_index: usize) -> Result<(usize, f64)> {
        best_predictor(&self.p_family[p_index], &self.model, &self.loss)
    }

    /// Finite outcome space: the union of all supports, if every member of
    /// the family is finite.
    pub fn outcome_space(&self) -> Option<Vec<Outcome>> {
        let mut out: Vec<Outcome> = Vec::new();
        for p in &self.p_family {
            let (os, _) = p.support()?;
            for o in os {
                if !out.contains(o) {
                    out.push(*o);
                }
            }
        }
        Some(out)
    }

    /// Loss matrix `L[f][k] = l(f, z_k)` over the model.
    pub fn loss_matrix(&self, outcomes: &[Outcome]) -> Vec<Vec<f64>> {
        self.model
            .actions()
            .iter()
            .map(|a| outcomes.iter().map(|z| self.loss.eval(a, z)).collect())
            .collect()
    }
}

/// `R(P, f) = E_{Z ~ P}[l_f(Z)]`.
///
/// Exact on finite support and for samplers with losses quadratic in the
/// outcome; otherwise a Monte Carlo mean under the default [`McConfig`].
pub fn risk(p: &Distribution, action: &[f64], loss: &Loss) -> Result<ExtReal> {
    risk_estimate(p, action, loss, &McConfig::default()).and_then(|e| ExtReal::new(e.value))
}

/// [`risk`] together with its Monte Carlo half-width.
pub fn risk_estimate(p: &Distribution, action: &[f64], loss: &Loss, mc: &McConfig) -> Result<Estimate> {
    if let (Distribution::Sampler(s), Some([q0, q1, q2])) = (p, loss.quadratic_form(action)) {
        return Ok(Estimate::exact(q0 + q1 * s.mean() + q2 * s.second_moment()));
    }
    p.expect(|z| loss.eval(action, z), mc)
}

/// Risk minimiser over the model, ties to the lowest id.
pub fn best_predictor(p: &Distribution, model: &Model, loss: &Loss) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in model.actions().iter().enumerate() {
        let r = risk(p, a, loss)?.value();
        if r.is_finite() && best.is_none_or(|(_, b)| r < b) {
            best = Some((i, r));
        }
    }
    best.ok_or(Error::AllInfiniteRisk)
}

// ---------------------------------------------------------------------------
// Mixtures and mix loss

/// A probability vector over model ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictorMixture {
    weights: Vec<f64>,
}

impl PredictorMixture {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMixture("empty weight vector".into()));
        }
        check_probs(&weights).map_err(|e| Error::InvalidMixture(e.to_string()))?;
        Ok(PredictorMixture { weights })
    }

    pub fn uniform(n: usize) -> Self {
        PredictorMixture { weights: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, id: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[id] = 1.0;
        PredictorMixture { weights }
    }

    /// `(1 - lambda) delta_i + lambda delta_j`.
    pub fn pair(n: usize, i: usize, j: usize, lambda: f64) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] += 1.0 - lambda;
        weights[j] += lambda;
        PredictorMixture { weights }
    }

    /// Normalise `exp(log_weights)`.
    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        let z = log_sum_exp(log_weights);
        PredictorMixture { weights: log_weights.iter().map(|l| (l - z).exp()).collect() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `m(Pi) = -(1/eta) ln sum_f Pi(f) exp(-eta l_f)` from the individual losses.
pub fn mix_loss_of(weights: &[f64], losses: &[f64], eta: f64) -> f64 {
    let terms: Vec<f64> = weights
        .iter()
        .zip(losses)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, l)| w.ln() - eta * l)
        .collect();
    -log_sum_exp(&terms) / eta
}

/// Mix loss of `pi` at outcome `z`.
pub fn mix_loss(pi: &PredictorMixture, z: &Outcome, eta: f64, loss: &Loss, model: &Model) -> Result<ExtReal> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let losses: Vec<f64> = model.actions().iter().map(|a| loss.eval(a, z)).collect();
    ExtReal::new(mix_loss_of(pi.weights(), &losses, eta))
}

// ---------------------------------------------------------------------------
// Excess-loss moments

/// Law of the excess loss `W = l_f - l_{f*}`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExcessLaw {
    Finite { values: Vec<f64>, probs: Vec<f64> },
    /// `W = c0 + c1 Z` with `Z` drawn from the sampler.
    Affine { c0: f64, c1: f64, sampler: Sampler },
    Sampled { values: Vec<f64> },
}

/// Mean, variance and exponential moments of an excess loss.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub second_moment: f64,
    pub ci_halfwidth: f64,
    pub law: ExcessLaw,
}

impl MomentSummary {
    /// `ln E[exp(t W)]`, possibly `+inf`. Exactly zero at `t = 0`.
    pub fn log_mgf(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match &self.law {
            ExcessLaw::Finite { values, probs } => {
                if values.iter().all(|v| (t * v).abs() <= 0.5) {
                    // ln(1 + x) form keeps tiny cumulants exact
                    let total: f64 = probs.iter().sum();
                    let x: f64 = values.iter().zip(probs).map(|(v, p)| p * (t * v).exp_m1()).sum();
                    return (x + (total - 1.0)).ln_1p();
                }
                let terms: Vec<f64> = values
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(v, p)| p.ln() + t * v)
                    .collect();
                log_sum_exp(&terms)
            }
            ExcessLaw::Affine { c0, c1, sampler } => t * c0 + sampler.log_mgf(t * c1),
            ExcessLaw::Sampled { values } => {
                if values.iter().all(|v| (t * v).abs() <= 0.5) {
                    let x: f64 = values.iter().map(|v| (t * v).exp_m1()).sum::<f64>() / values.len() as f64;
                    return x.ln_1p();
                }
                let terms: Vec<f64> = values.iter().map(|v| t * v).collect();
                log_sum_exp(&terms) - (values.len() as f64).ln()
            }
        }
    }

    /// `E[exp(t W)]`; equals 1 at `t = 0`.
    pub fn mgf(&self, t: f64) -> ExtReal {
        ExtReal(self.log_mgf(t).exp())
    }

    /// The cumulant generating function `Lambda_{-W}(eta) = ln E[exp(-eta W)]`.
    pub fn cgf_neg(&self, eta: f64) -> f64 {
        self.log_mgf(-eta)
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.law, ExcessLaw::Sampled { .. })
    }
}

/// Moments of `l_f - l_{f*}` under `P`; exact on finite support and for
/// samplers with quadratic losses (where the excess loss is affine in `Z`).
pub fn excess_loss_moments(p: &Distribution, f: &[f64], fstar: &[f64], loss: &Loss) -> Result<MomentSummary> {
    excess_loss_moments_mc(p, f, fstar, loss, &McConfig::default())
}

pub fn excess_loss_moments_mc(
    p: &Distribution,
    f: &[f64],
    fstar: &[f64],
    loss: &Loss,
    mc: &McConfig,
) -> Result<MomentSummary> {
    match p {
        Distribution::Finite { outcomes, probs } => {
            let mut values = Vec::with_capacity(outcomes.len());
            let mut ps = Vec::with_capacity(outcomes.len());
            for (z, pr) in outcomes.iter().zip(probs) {
                if *pr == 0.0 {
                    continue;
                }
                let w = loss.eval(f, z) - loss.eval(fstar, z);
                if !w.is_finite() {
                    return Err(Error::UndefinedExpectation("excess loss is infinite on positive mass".into()));
                }
                values.push(w);
                ps.push(*pr);
            }
            let mean = dot(&values, &ps);
            let second_moment: f64 = values.iter().zip(&ps).map(|(v, p)| p * v * v).sum();
            let variance: f64 = values.iter().zip(&ps).map(|(v, p)| p * (v - mean).powi(2)).sum();
            Ok(MomentSummary {
                mean,
                variance,
                second_moment,
                ci_halfwidth: 0.0,
                law: ExcessLaw::Finite { values, probs: ps },
            })
        }
        Distribution::Sampler(s) => {
            if let (Some(qf), Some(qs)) = (loss.quadratic_form(f), loss.quadratic_form(fstar)) {
                if (qf[2] - qs[2]).abs() < 1e-15 {
                    let c0 = qf[0] - qs[0];
                    let c1 = qf[1] - qs[1];
                    let mean = c0 + c1 * s.mean();
                    let variance = c1 * c1 * s.variance();
                    return Ok(MomentSummary {
                        mean,
                        variance,
                        second_moment: variance + mean * mean,
                        ci_halfwidth: 0.0,
                        law: ExcessLaw::Affine { c0, c1, sampler: s.clone() },
                    });
                }
            }
            let values: Vec<f64> = p.mc_draws(mc).iter().map(|z| loss.eval(f, z) - loss.eval(fstar, z)).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::UndefinedExpectation("excess loss is infinite on sampled mass".into()));
            }
            let est = Estimate::from_samples(&values);
            let second: Vec<f64> = values.iter().map(|v| v * v).collect();
            let second_moment = second.iter().sum::<f64>() / values.len() as f64;
            Ok(MomentSummary {
                mean: est.value,
                variance: (second_moment - est.value * est.value).max(0.0),
                second_moment,
                ci_halfwidth: est.ci_halfwidth,
                law: ExcessLaw::Sampled { values },
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Conditional lifting

/// Largest model the lifting will enumerate (`N^|X|` predictors).
pub const MAX_LIFTED_MODEL: usize = 1 << 20;

/// Lift an unconditional problem to covariates `x in 0..num_x`.
///
/// The lifted model contains every map `x -> f(x)` from covariates to
/// predictors, encoded as the concatenation of the per-`x` actions, and the
/// lifted loss is `l'(f, (x, y)) = l(f(x), y)`. Each conditional `P(y | x)`
/// of every joint distribution must match a member of the unconditional
/// family (total variation below `1e-9`); when every member is a point mass
/// the family is read as all distributions on those points.
pub fn lift_conditional(
    unconditional: &DecisionProblem,
    num_x: usize,
    joint_family: Vec<Distribution>,
) -> Result<DecisionProblem> {
    if num_x == 0 {
        return Err(Error::InvalidArgument("covariate space is empty".into()));
    }
    let all_points = unconditional
        .p_family
        .iter()
        .all(|p| p.support().is_some_and(|(os, ps)| os.len() == 1 && ps[0] == 1.0));
    for joint in &joint_family {
        joint.validate()?;
        for (x, (_, cond)) in joint.conditionals(num_x)?.into_iter().enumerate() {
            let Some(cond) = cond else { continue };
            let ok = if all_points {
                let points: Vec<f64> = unconditional.p_family.iter().map(|p| p.support().unwrap().0[0].y).collect();
                cond.support().unwrap().0.iter().all(|o| points.iter().any(|y| (y - o.y).abs() < 1e-12))
            } else {
                unconditional
                    .p_family
                    .iter()
                    .any(|member| total_variation(&cond, member).is_some_and(|tv| tv <= EXACT_TOL))
            };
            if !ok {
                return Err(Error::ConditionalNotInFamily { x });
            }
        }
    }
    let base = &unconditional.model;
    let n = base.len();
    let size = n.checked_pow(num_x as u32).filter(|s| *s <= MAX_LIFTED_MODEL).ok_or_else(|| {
        Error::InvalidArgument(format!("lifted model would have {n}^{num_x} predictors"))
    })?;
    let lifted_actions = product_actions(base.actions(), num_x, size);
    let decision_set = match &unconditional.decision_set {
        DecisionSet::Model => DecisionSet::Model,
        DecisionSet::ConvexHull => DecisionSet::ConvexHull,
        DecisionSet::Grid(g) => {
            let gs = g.len().checked_pow(num_x as u32).filter(|s| *s <= MAX_LIFTED_MODEL).ok_or_else(|| {
                Error::InvalidArgument("lifted decision grid too large".into())
            })?;
            DecisionSet::Grid(product_actions(g, num_x, gs))
        }
    };
    let loss = Loss::Lifted { base: Box::new(unconditional.loss.clone()), width: base.dim(), num_x };
    DecisionProblem::new(loss, joint_family, Model::new(lifted_actions)?, decision_set)
}

/// Tuple `t` maps covariate `x` to `actions[digit_x(t)]`, with `x = 0` the
/// least significant digit.
fn product_actions(actions: &[Action], num_x: usize, size: usize) -> Vec<Action> {
    let n = actions.len();
    (0..size)
        .map(|mut t| {
            let mut a = Vec::with_capacity(num_x * actions[0].len());
            for _ in 0..num_x {
                a.extend_from_slice(&actions[t % n]);
                t /= n;
            }
            a
        })
        .collect()
}

/// Total variation distance between two finite distributions, `None` if
/// either is a sampler.
pub fn total_variation(a: &Distribution, b: &Distribution) -> Option<f64> {
    let (oa, pa) = a.support()?;
    let (ob, pb) = b.support()?;
    let mut pts: Vec<Outcome> = Vec::new();
    for o in oa.iter().chain(ob) {
        if !pts.contains(o) {
            pts.push(*o);
        }
    }
    let mass = |os: &[Outcome], ps: &[f64], z: &Outcome| -> f64 {
        os.iter().zip(ps).filter(|(o, _)| *o == z).map(|(_, p)| p).sum()
    };
    Some(0.5 * pts.iter().map(|z| (mass(oa, pa, z) - mass(ob, pb, z)).abs()).sum::<f64>())
}
