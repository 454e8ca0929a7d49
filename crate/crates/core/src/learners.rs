//! ERM, the Aggregating Algorithm, online-to-batch conversion and seeded
//! rate experiments.

use rand::Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{collinear, line_point};
use crate::decision::{
    log_sum_exp, mix_loss_of, pick, risk_estimate, stream_rng, Action, DecisionProblem, DecisionSet, Distribution,
    Loss, McConfig, Model, Outcome, PredictorMixture, Z95,
};
use crate::error::{Error, Result};

/// Outcomes `Z_1..Z_n` together with the stream that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub outcomes: Vec<Outcome>,
    pub seed: u64,
    pub stream: u64,
    /// Index of the generating distribution in the problem's family.
    pub distribution: usize,
}

impl Sample {
    /// Draw `n` i.i.d. outcomes; `(seed, stream)` determines them completely.
    pub fn draw(problem: &DecisionProblem, p_index: usize, n: usize, seed: u64, stream: u64) -> Sample {
        let mut rng = stream_rng(seed, stream);
        let outcomes = match &problem.p_family[p_index] {
            Distribution::Finite { outcomes, probs } => (0..n).map(|_| outcomes[pick(probs, rng.random())]).collect(),
            Distribution::Sampler(s) => s.sample_with(&mut rng, n),
        };
        Sample { outcomes, seed, stream, distribution: p_index }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Multinomial counts drawn as a chain of binomials.
fn multinomial<R: Rng>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (k, p) in probs.iter().enumerate() {
        if k + 1 == probs.len() || left == 0 {
            out.push(if k + 1 == probs.len() { left } else { 0 });
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q).expect("valid binomial").sample(rng);
        out.push(c);
        left -= c;
        mass -= p;
    }
    out
}

fn argmin_finite(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|b| b.0)
}

/// Empirical risk minimiser over the model, ties to the lowest id.
///
/// Losses that are quadratic in the outcome are minimised through the
/// sufficient statistics `sum z` and `sum z^2`.
pub fn erm(outcomes: &[Outcome], model: &Model, loss: &Loss) -> Result<usize> {
    if outcomes.is_empty() || model.is_empty() {
        return Err(Error::InvalidArgument("ERM needs a nonempty sample and model".into()));
    }
    let quad: Option<Vec<[f64; 3]>> = model.actions().iter().map(|a| loss.quadratic_form(a)).collect();
    let risks: Vec<f64> = match quad {
        Some(q) => {
            let n = outcomes.len() as f64;
            let s1: f64 = outcomes.iter().map(|z| z.y).sum();
            let s2: f64 = outcomes.iter().map(|z| z.y * z.y).sum();
            q.iter().map(|[a, b, c]| n * a + b * s1 + c * s2).collect()
        }
        None => model
            .actions()
            .iter()
            .map(|a| outcomes.iter().map(|z| loss.eval(a, z)).sum())
            .collect(),
    };
    argmin_finite(risks.into_iter()).ok_or(Error::AllInfiniteEmpiricalRisk)
}

/// ERM from outcome counts (the sufficient statistic on finite support).
pub fn erm_counts(outcomes: &[Outcome], counts: &[u64], model: &Model, loss: &Loss) -> Result<usize> {
    if counts.iter().all(|c| *c == 0) || model.is_empty() {
        return Err(Error::InvalidArgument("ERM needs a nonempty sample and model".into()));
    }
    let risks = model.actions().iter().map(|a| {
        outcomes
            .iter()
            .zip(counts)
            .filter(|(_, c)| **c > 0)
            .map(|(z, c)| *c as f64 * loss.eval(a, z))
            .sum::<f64>()
    });
    argmin_finite(risks).ok_or(Error::AllInfiniteEmpiricalRisk)
}

// ---------------------------------------------------------------------------
// Substitution functions

/// Maps a mixture over predictors to a single decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Substitution {
    /// `E_{f~Pi}[f]` in the action embedding.
    Mean,
    /// The Bayes mixture of probability vectors; only for log loss, where
    /// its loss equals the mix loss at `eta = 1`.
    LogLossMean,
    /// The decision minimising `max_z (l_f(z) - m_Pi(z))` over a grid of the
    /// decision set. `resolution` is the grid step as a fraction of the
    /// decision range when the decision set is a segment.
    GridMinimax {
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
}

fn default_resolution() -> f64 {
    1e-3
}

impl Substitution {
    pub fn grid_minimax() -> Self {
        Substitution::GridMinimax { resolution: default_resolution() }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Substitution::Mean => "mean",
            Substitution::LogLossMean => "log_loss_mean",
            Substitution::GridMinimax { .. } => "grid_minimax",
        }
    }

    /// Check that this substitution can be used on `problem`.
    pub fn validate(&self, problem: &DecisionProblem) -> Result<()> {
        match self {
            Substitution::Mean if !problem.loss.accepts_mixtures() => Err(Error::EmbeddingMissing),
            Substitution::LogLossMean if !is_log_loss(&problem.loss) => Err(Error::EmbeddingMissing),
            Substitution::GridMinimax { resolution } => {
                if !(*resolution > 0.0 && *resolution <= 1.0) {
                    return Err(Error::InvalidArgument("resolution must be in (0, 1]".into()));
                }
                if problem.outcome_space().is_none() {
                    return Err(Error::PreconditionViolated("grid minimax needs a finite outcome space".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `psi(Pi)`.
    pub fn apply(&self, problem: &DecisionProblem, pi: &PredictorMixture, eta: f64) -> Result<Action> {
        if pi.len() != problem.model.len() {
            return Err(Error::InvalidMixture("mixture size differs from the model".into()));
        }
        self.validate(problem)?;
        if let Some(f) = pi.weights().iter().position(|w| *w == 1.0) {
            return Ok(problem.model.action(f).to_vec());
        }
        let action = match self {
            Substitution::Mean | Substitution::LogLossMean => problem.model.mean_action(pi.weights()),
            Substitution::GridMinimax { resolution } => {
                let space = problem.outcome_space().expect("validated");
                let mix: Vec<f64> = space
                    .iter()
                    .map(|z| {
                        let ls: Vec<f64> = problem.model.actions().iter().map(|a| problem.loss.eval(a, z)).collect();
                        mix_loss_of(pi.weights(), &ls, eta)
                    })
                    .collect();
                let cands = decision_grid(problem, *resolution, pi);
                let score = |a: &Action| {
                    space
                        .iter()
                        .zip(&mix)
                        .map(|(z, m)| problem.loss.eval(a, z) - m)
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let mut best = (f64::INFINITY, 0);
                for (i, a) in cands.iter().enumerate() {
                    let s = score(a);
                    if s < best.0 {
                        best = (s, i);
                    }
                }
                cands[best.1].clone()
            }
        };
        if !in_decision_set(problem, &action) {
            return Err(Error::SubstitutionOutsideDecisionSet);
        }
        Ok(action)
    }
}

fn is_log_loss(loss: &Loss) -> bool {
    match loss {
        Loss::Log => true,
        Loss::Lifted { base, .. } => is_log_loss(base),
        _ => false,
    }
}

/// Candidate decisions for the grid substitution.
fn decision_grid(problem: &DecisionProblem, resolution: f64, pi: &PredictorMixture) -> Vec<Action> {
    match &problem.decision_set {
        DecisionSet::Model => problem.model.actions().to_vec(),
        DecisionSet::Grid(g) => g.clone(),
        DecisionSet::ConvexHull => match collinear(problem.model.actions()) {
            Some((a0, d, tmin, tmax)) => {
                let k = ((1.0 / resolution).ceil() as usize).clamp(1, 100_000);
                (0..=k).map(|i| line_point(&a0, &d, tmin + (tmax - tmin) * i as f64 / k as f64)).collect()
            }
            None => {
                let mut c = problem.model.actions().to_vec();
                c.push(problem.model.mean_action(pi.weights()));
                c
            }
        },
    }
}

fn in_decision_set(problem: &DecisionProblem, a: &[f64]) -> bool {
    let close = |b: &Action| b.len() == a.len() && b.iter().zip(a).all(|(x, y)| (x - y).abs() <= 1e-12);
    match &problem.decision_set {
        DecisionSet::Model => problem.model.actions().iter().any(close),
        DecisionSet::Grid(g) => g.iter().any(close),
        DecisionSet::ConvexHull => problem.loss.accepts_mixtures() || problem.model.actions().iter().any(close),
    }
}

// ---------------------------------------------------------------------------
// Aggregating Algorithm

/// One run of the Aggregating Algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AARun {
    pub eta: f64,
    /// `Pi_0` (the prior) through `Pi_n`.
    pub weights: Vec<PredictorMixture>,
    /// `psi(Pi_{t-1})` played in round `t`.
    pub predictions: Vec<Action>,
    pub losses: Vec<f64>,
    pub mix_losses: Vec<f64>,
    /// Cumulative loss of every expert after the last round.
    pub expert_losses: Vec<f64>,
    pub accepts_mixtures: bool,
}

impl AARun {
    pub fn cumulative_loss(&self) -> f64 {
        self.losses.iter().sum()
    }

    pub fn cumulative_mix_loss(&self) -> f64 {
        self.mix_losses.iter().sum()
    }

    pub fn best_expert_loss(&self) -> f64 {
        self.expert_losses.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn regret(&self) -> f64 {
        self.cumulative_loss() - self.best_expert_loss()
    }

    pub fn mix_regret(&self) -> f64 {
        self.cumulative_mix_loss() - self.best_expert_loss()
    }

    /// The telescoped cumulative mix loss `-(1/eta) ln sum_f Pi_0(f) e^{-eta L_f}`.
    pub fn telescoped_mix_loss(&self) -> f64 {
        let terms: Vec<f64> = self.weights[0]
            .weights()
            .iter()
            .zip(&self.expert_losses)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, l)| w.ln() - self.eta * l)
            .collect();
        -log_sum_exp(&terms) / self.eta
    }
}

/// Run the Aggregating Algorithm on a stream.
///
/// Round `t` plays `psi(Pi_{t-1})` and then updates
/// `Pi_t(f) ∝ Pi_{t-1}(f) e^{-eta l_f(z_t)}`.
pub fn aggregating_algorithm(
    problem: &DecisionProblem,
    stream: &[Outcome],
    eta: f64,
    substitution: &Substitution,
    prior: &PredictorMixture,
) -> Result<AARun> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let n = problem.model.len();
    if prior.len() != n {
        return Err(Error::InvalidMixture("prior size differs from the model".into()));
    }
    substitution.validate(problem)?;
    let mut log_w: Vec<f64> = prior.weights().iter().map(|w| w.ln()).collect();
    let mut run = AARun {
        eta,
        weights: vec![prior.clone()],
        predictions: Vec::with_capacity(stream.len()),
        losses: Vec::with_capacity(stream.len()),
        mix_losses: Vec::with_capacity(stream.len()),
        expert_losses: vec![0.0; n],
        accepts_mixtures: problem.loss.accepts_mixtures(),
    };
    for z in stream {
        let pi = run.weights.last().expect("nonempty").clone();
        let pred = substitution.apply(problem, &pi, eta)?;
        let ls: Vec<f64> = problem.model.actions().iter().map(|a| problem.loss.eval(a, z)).collect();
        run.losses.push(problem.loss.eval(&pred, z));
        run.mix_losses.push(mix_loss_of(pi.weights(), &ls, eta));
        run.predictions.push(pred);
        for f in 0..n {
            log_w[f] -= eta * ls[f];
            run.expert_losses[f] += ls[f];
        }
        if log_w.iter().all(|l| *l == f64::NEG_INFINITY) {
            return Err(Error::AllInfiniteEmpiricalRisk);
        }
        run.weights.push(PredictorMixture::from_log_weights(&log_w));
    }
    debug_assert!(run.cumulative_mix_loss() <= run.telescoped_mix_loss() + 1e-9 * (1.0 + run.telescoped_mix_loss().abs()));
    Ok(run)
}

/// Exact expected regret of the AA against a fixed schedule of distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRegret {
    /// `E[sum_t l_{f_t}(Z_t)]`.
    pub expected_loss: f64,
    /// `min_f sum_t E[l_f(Z_t)]`.
    pub best_expert_loss: f64,
    pub regret: f64,
    /// Largest stochastic-mixability slack `max_P E_P[l_psi(Pi) - m_Pi]`
    /// over the mixtures the algorithm visits (clamped at 0).
    pub max_margin: f64,
    /// `ln(1 / min_f Pi_0(f)) / eta + n max_margin`.
    pub bound: f64,
}

/// Enumerate every outcome sequence of the schedule (finite supports only,
/// at most `10^6` sequences) and compute the expected regret exactly.
pub fn aa_expected_regret(
    problem: &DecisionProblem,
    schedule: &[usize],
    eta: f64,
    substitution: &Substitution,
    prior: &PredictorMixture,
) -> Result<ExpectedRegret> {
    let supports: Vec<(&[Outcome], &[f64])> = schedule
        .iter()
        .map(|i| {
            problem
                .p_family
                .get(*i)
                .and_then(|p| p.support())
                .ok_or_else(|| Error::PreconditionViolated("exact expected regret needs finite-support distributions".into()))
        })
        .collect::<Result<_>>()?;
    let paths: f64 = supports.iter().map(|s| s.0.len() as f64).product();
    if paths > 1e6 {
        return Err(Error::PreconditionViolated(format!("{paths} outcome sequences is too many to enumerate")));
    }
    if prior.len() != problem.model.len() || !(eta > 0.0) {
        return Err(Error::InvalidArgument("need eta > 0 and a prior over the model".into()));
    }
    substitution.validate(problem)?;
    let family_supports: Vec<(&[Outcome], &[f64])> = problem
        .p_family
        .iter()
        .map(|p| p.support().ok_or_else(|| Error::PreconditionViolated("finite supports required".into())))
        .collect::<Result<_>>()?;

    struct Walk<'a> {
        problem: &'a DecisionProblem,
        supports: &'a [(&'a [Outcome], &'a [f64])],
        family: &'a [(&'a [Outcome], &'a [f64])],
        eta: f64,
        subst: &'a Substitution,
        expected_loss: f64,
        max_margin: f64,
    }
    impl Walk<'_> {
        fn go(&mut self, t: usize, log_w: &[f64], prob: f64) -> Result<()> {
            if t == self.supports.len() || prob == 0.0 {
                return Ok(());
            }
            let pi = PredictorMixture::from_log_weights(log_w);
            let pred = self.subst.apply(self.problem, &pi, self.eta)?;
            let loss = &self.problem.loss;
            let acts = self.problem.model.actions();
            for (os, ps) in self.family {
                let mut margin = 0.0;
                for (z, p) in os.iter().zip(*ps) {
                    if *p > 0.0 {
                        let ls: Vec<f64> = acts.iter().map(|a| loss.eval(a, z)).collect();
                        margin += p * (loss.eval(&pred, z) - mix_loss_of(pi.weights(), &ls, self.eta));
                    }
                }
                self.max_margin = self.max_margin.max(margin);
            }
            let (os, ps) = self.supports[t];
            for (z, p) in os.iter().zip(ps) {
                if *p == 0.0 {
                    continue;
                }
                self.expected_loss += prob * p * loss.eval(&pred, z);
                let next: Vec<f64> = log_w.iter().zip(acts).map(|(l, a)| l - self.eta * loss.eval(a, z)).collect();
                if next.iter().all(|l| *l == f64::NEG_INFINITY) {
                    return Err(Error::AllInfiniteEmpiricalRisk);
                }
                self.go(t + 1, &next, prob * p)?;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        problem,
        supports: &supports,
        family: &family_supports,
        eta,
        subst: substitution,
        expected_loss: 0.0,
        max_margin: 0.0,
    };
    let log_w: Vec<f64> = prior.weights().iter().map(|w| w.ln()).collect();
    walk.go(0, &log_w, 1.0)?;
    let mut best = f64::INFINITY;
    for a in problem.model.actions() {
        let total: f64 = supports
            .iter()
            .map(|(os, ps)| os.iter().zip(*ps).filter(|(_, p)| **p > 0.0).map(|(z, p)| p * problem.loss.eval(a, z)).sum::<f64>())
            .sum();
        best = best.min(total);
    }
    let min_prior = prior.weights().iter().cloned().filter(|w| *w > 0.0).fold(1.0, f64::min);
    Ok(ExpectedRegret {
        expected_loss: walk.expected_loss,
        best_expert_loss: best,
        regret: walk.expected_loss - best,
        max_margin: walk.max_margin,
        bound: (1.0 / min_prior).ln() / eta + schedule.len() as f64 * walk.max_margin,
    })
}

// ---------------------------------------------------------------------------
// Online-to-batch

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtbMode {
    /// Play the prediction of a uniformly random round.
    #[default]
    UniformRound,
    /// Play the average of all predictions (needs convex losses).
    AverageDecision,
}

/// Output of online-to-batch conversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Uniform over these decisions.
    Randomized(Vec<Action>),
    Single(Action),
}

impl Estimator {
    /// Risk under `p`, averaged over the randomisation.
    pub fn expected_risk(&self, p: &Distribution, loss: &Loss, mc: &McConfig) -> Result<f64> {
        match self {
            Estimator::Single(a) => Ok(risk_estimate(p, a, loss, mc)?.value),
            Estimator::Randomized(acts) => {
                let mut total = 0.0;
                for a in acts {
                    total += risk_estimate(p, a, loss, mc)?.value;
                }
                Ok(total / acts.len() as f64)
            }
        }
    }
}

pub fn online_to_batch(run: &AARun, mode: OtbMode) -> Result<Estimator> {
    if run.predictions.is_empty() {
        return Err(Error::InvalidArgument("empty run".into()));
    }
    match mode {
        OtbMode::UniformRound => Ok(Estimator::Randomized(run.predictions.clone())),
        OtbMode::AverageDecision => {
            if !run.accepts_mixtures {
                return Err(Error::EmbeddingMissing);
            }
            let k = run.predictions.len() as f64;
            let mut avg = vec![0.0; run.predictions[0].len()];
            for p in &run.predictions {
                for (o, v) in avg.iter_mut().zip(p) {
                    *o += v / k;
                }
            }
            Ok(Estimator::Single(avg))
        }
    }
}

// ---------------------------------------------------------------------------
// Rate experiments

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Learner {
    Erm,
    /// AA with a uniform prior followed by online-to-batch conversion.
    Aa {
        eta: f64,
        substitution: Substitution,
        #[serde(default)]
        mode: OtbMode,
    },
}

impl Learner {
    pub fn label(&self) -> String {
        match self {
            Learner::Erm => "erm".into(),
            Learner::Aa { eta, substitution, .. } => format!("aa[eta={eta},{}]", substitution.label()),
        }
    }
}

/// Mean excess risk against sample size, worst-cased over the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub ns: Vec<usize>,
    pub excess: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Distribution attaining the worst mean excess at each `n`.
    pub worst_p: Vec<usize>,
    /// Least-squares slope of `ln excess` on `ln n` over positive points;
    /// NaN (`null` in JSON) with fewer than two.
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub learner: String,
    pub problem: String,
    pub seed: u64,
    pub reps: usize,
}

impl RateCurve {
    /// CSV with columns `n, excess, stderr, learner, problem, seed`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        out.write_record(["n", "excess", "stderr", "learner", "problem", "seed"]).map_err(io)?;
        for i in 0..self.ns.len() {
            out.write_record([
                self.ns[i].to_string(),
                fmt17(self.excess[i]),
                fmt17(self.stderr[i]),
                self.learner.clone(),
                self.problem.clone(),
                self.seed.to_string(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }
}

/// 17 significant digits, `.` as decimal separator.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Stream id of replication `rep` at `(p_index, n_index)`.
pub fn stream_id(p_index: usize, n_index: usize, num_ns: usize, rep: usize, reps: usize) -> u64 {
    ((p_index * num_ns + n_index) * reps + rep) as u64
}

struct Prepared {
    risks: Vec<Vec<f64>>,
    best: Vec<f64>,
}

fn prepare(problem: &DecisionProblem) -> Result<Prepared> {
    let mut risks = Vec::new();
    let mut best = Vec::new();
    for i in 0..problem.p_family.len() {
        risks.push(problem.risks(i)?);
        best.push(problem.best_predictor(i)?.1);
    }
    Ok(Prepared { risks, best })
}

fn one_excess(
    problem: &DecisionProblem,
    prep: &Prepared,
    learner: &Learner,
    p_index: usize,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<f64> {
    let p = &problem.p_family[p_index];
    match learner {
        Learner::Erm => {
            let f = match p {
                Distribution::Finite { outcomes, probs } => {
                    let mut rng = stream_rng(seed, stream);
                    let counts = multinomial(probs, n as u64, &mut rng);
                    erm_counts(outcomes, &counts, &problem.model, &problem.loss)?
                }
                Distribution::Sampler(_) => {
                    let s = Sample::draw(problem, p_index, n, seed, stream);
                    erm(&s.outcomes, &problem.model, &problem.loss)?
                }
            };
            Ok(prep.risks[p_index][f] - prep.best[p_index])
        }
        Learner::Aa { eta, substitution, mode } => {
            let s = Sample::draw(problem, p_index, n, seed, stream);
            let prior = PredictorMixture::uniform(problem.model.len());
            let run = aggregating_algorithm(problem, &s.outcomes, *eta, substitution, &prior)?;
            let est = online_to_batch(&run, *mode)?;
            Ok(est.expected_risk(p, &problem.loss, &McConfig::default())? - prep.best[p_index])
        }
    }
}

/// Excess risks of `reps` independent replications for one distribution and
/// sample size, on streams `stream_id(p_index, n_index, num_ns, rep, reps)`.
#[allow(clippy::too_many_arguments)]
pub fn excess_draws(
    problem: &DecisionProblem,
    learner: &Learner,
    p_index: usize,
    n: usize,
    n_index: usize,
    num_ns: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let prep = prepare(problem)?;
    (0..reps)
        .into_par_iter()
        .map(|rep| one_excess(problem, &prep, learner, p_index, n, seed, stream_id(p_index, n_index, num_ns, rep, reps)))
        .collect()
}

/// Estimate `sup_P E[R(P, f_n) - R(P, f*)]` for each `n`.
///
/// Results are bitwise reproducible for a given seed regardless of the
/// number of threads: each replication owns its stream and reductions run
/// in a fixed order.
pub fn rate_experiment(
    problem: &DecisionProblem,
    learner: &Learner,
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<RateCurve> {
    if reps < 100 {
        return Err(Error::PreconditionViolated("rate experiments need reps >= 100".into()));
    }
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("ns must be positive and strictly increasing".into()));
    }
    if let Learner::Aa { eta, substitution, .. } = learner {
        if !(*eta > 0.0) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        substitution.validate(problem)?;
    }
    let prep = prepare(problem)?;
    let np = problem.p_family.len();
    let tasks: Vec<(usize, usize, usize)> = (0..np)
        .flat_map(|p| (0..ns.len()).flat_map(move |ni| (0..reps).map(move |r| (p, ni, r))))
        .collect();
    let values: Vec<f64> = tasks
        .par_iter()
        .map(|&(p, ni, r)| one_excess(problem, &prep, learner, p, ns[ni], seed, stream_id(p, ni, ns.len(), r, reps)))
        .collect::<Result<_>>()?;

    let mut excess = Vec::with_capacity(ns.len());
    let mut stderr = Vec::with_capacity(ns.len());
    let mut worst_p = Vec::with_capacity(ns.len());
    for ni in 0..ns.len() {
        let mut best: Option<(f64, f64, usize)> = None;
        for p in 0..np {
            let start = (p * ns.len() + ni) * reps;
            let xs = &values[start..start + reps];
            let mean = xs.iter().sum::<f64>() / reps as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            if best.is_none_or(|b| mean > b.0) {
                best = Some((mean, (var / reps as f64).sqrt(), p));
            }
        }
        let (m, s, p) = best.expect("family nonempty");
        excess.push(m);
        stderr.push(s);
        worst_p.push(p);
    }
    let (slope, slope_ci) = fit_slope(ns, &excess);
    Ok(RateCurve {
        ns: ns.to_vec(),
        excess,
        stderr,
        worst_p,
        slope,
        slope_ci,
        learner: learner.label(),
        problem: "custom".into(),
        seed,
        reps,
    })
}

/// OLS slope of `ln y` on `ln x` over points with `y > 0`, with a 95%
/// normal interval (NaN when fewer than three points).
pub fn fit_slope(xs: &[usize], ys: &[f64]) -> (f64, (f64, f64)) {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| ((*x as f64).ln(), y.ln())).collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, (f64::NAN, f64::NAN));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if pts.len() < 3 {
        return (slope, (f64::NAN, f64::NAN));
    }
    let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = (resid / (k - 2.0) / sxx).sqrt();
    (slope, (slope - Z95 * se, slope + Z95 * se))
}
