//! Numeric checkers for the fast-rate conditions.
//!
//! Quantifiers over mixtures are replaced by a finite [`SearchFamily`] of
//! mixtures (vertices, two-point mixtures, Dirichlet draws) and existential
//! quantifiers over decisions by a search over the decision set. A
//! `RefutedOnTestedFamily` verdict comes with an exact witness; `Holds`
//! only means that no tested mixture violated the condition.
//!
//! All margins are reported on the loss scale: for the exponential-moment
//! conditions the margin is `(1/eta) ln E[..] - eps`, so a margin `<= 0`
//! means the inequality `E[..] <= e^{eta eps}` holds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{
    dot, excess_loss_moments_mc, log_sum_exp, mix_loss_of, stream_rng, Action, DecisionProblem, DecisionSet,
    Distribution, Estimate, McConfig, Outcome, PredictorMixture, EXACT_TOL,
};
use crate::error::{Error, Result};
use crate::momentbounds::kappa;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `E_P E_Pi[e^{eta (l_{f*} - l_f)}] <= e^{eta eps}`.
    Central,
    /// Pseudoprobability convexity: `E[l_{f*}] <= E[m_Pi] + eps`.
    Ppc,
    /// `forall Pi exists f forall P: E_P E_{g~Pi}[e^{eta (l_f - l_g)}] <= e^{eta eps}`.
    Predictor,
    /// Stochastic mixability: `forall Pi exists f forall P: E[l_f] <= E[m_Pi] + eps`.
    StochMix,
    /// Stochastic mixability with the mean substitution `f = E_Pi[f]`.
    StochExpConcave,
    /// Pointwise mixability: `forall Pi exists f forall z: l_f(z) <= m_Pi(z) + eps`.
    ClassicalMix,
    Jrt2,
    Bernstein,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 8] = [
        ConditionKind::Central,
        ConditionKind::Ppc,
        ConditionKind::Predictor,
        ConditionKind::StochMix,
        ConditionKind::StochExpConcave,
        ConditionKind::ClassicalMix,
        ConditionKind::Jrt2,
        ConditionKind::Bernstein,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKind::Central => "central",
            ConditionKind::Ppc => "ppc",
            ConditionKind::Predictor => "predictor",
            ConditionKind::StochMix => "stoch_mix",
            ConditionKind::StochExpConcave => "stoch_exp_concave",
            ConditionKind::ClassicalMix => "classical_mix",
            ConditionKind::Jrt2 => "jrt2",
            ConditionKind::Bernstein => "bernstein",
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        ConditionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown condition kind {s:?}")))
    }
}

/// The finite family standing in for "all mixtures" and "all decisions".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchFamily {
    /// Point masses on every predictor.
    pub vertex_mixtures: bool,
    /// Interior points `lambda = i/(k+1)` of two-point mixtures, plus
    /// `lambda` within `1e-6..1e-2` of either end when `tiny_lambdas` is set.
    pub pair_grid: usize,
    pub tiny_lambdas: bool,
    pub dirichlet_draws: usize,
    pub dirichlet_seed: u64,
    /// Points per line when searching a one-dimensional convex hull.
    pub decision_grid: usize,
    /// Monte Carlo settings for samplers without exact oracles.
    pub mc: McConfig,
}

impl Default for SearchFamily {
    fn default() -> Self {
        SearchFamily {
            vertex_mixtures: true,
            pair_grid: 9,
            tiny_lambdas: true,
            dirichlet_draws: 32,
            dirichlet_seed: 7,
            decision_grid: 101,
            mc: McConfig::default(),
        }
    }
}

impl SearchFamily {
    fn validate(&self) -> Result<()> {
        if !self.vertex_mixtures && self.pair_grid == 0 && !self.tiny_lambdas && self.dirichlet_draws == 0 {
            return Err(Error::InvalidArgument("search family is empty".into()));
        }
        if self.decision_grid < 2 {
            return Err(Error::InvalidArgument("decision grid needs at least two points".into()));
        }
        Ok(())
    }

    fn lambdas(&self) -> Vec<f64> {
        let mut l: Vec<f64> = (1..=self.pair_grid).map(|i| i as f64 / (self.pair_grid + 1) as f64).collect();
        if self.tiny_lambdas {
            for t in [1e-6, 1e-4, 1e-2] {
                l.push(t);
                l.push(1.0 - t);
            }
        }
        l
    }

    /// The tested mixtures over `n` predictors. Pairs use every couple when
    /// `n <= 12` and otherwise couples involving one of `anchors`.
    pub fn mixtures(&self, n: usize, anchors: &[usize]) -> Vec<PredictorMixture> {
        self.sparse_mixtures(n, anchors).into_iter().map(|m| m.dense(n)).collect()
    }

    fn sparse_mixtures(&self, n: usize, anchors: &[usize]) -> Vec<SparseMix> {
        let mut out = Vec::new();
        if self.vertex_mixtures || n == 1 {
            out.extend((0..n).map(|i| SparseMix { idx: vec![i], w: vec![1.0] }));
        }
        if n > 1 {
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            if n <= 12 {
                for i in 0..n {
                    for j in i + 1..n {
                        pairs.push((i, j));
                    }
                }
            } else {
                for &a in anchors {
                    for j in 0..n {
                        let p = (a.min(j), a.max(j));
                        if j != a && !pairs.contains(&p) {
                            pairs.push(p);
                        }
                    }
                }
            }
            let lambdas = self.lambdas();
            for (i, j) in pairs {
                for &l in &lambdas {
                    out.push(SparseMix { idx: vec![i, j], w: vec![1.0 - l, l] });
                }
            }
            let mut rng = stream_rng(self.dirichlet_seed, 0xd1);
            for _ in 0..self.dirichlet_draws {
                let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                out.push(SparseMix { idx: (0..n).collect(), w: e.iter().map(|x| x / s).collect() });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
struct SparseMix {
    idx: Vec<usize>,
    w: Vec<f64>,
}

impl SparseMix {
    fn dense(&self, n: usize) -> PredictorMixture {
        let mut v = vec![0.0; n];
        for (i, w) in self.idx.iter().zip(&self.w) {
            v[*i] += w;
        }
        PredictorMixture::new(v).expect("normalised by construction")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    RefutedOnTestedFamily,
    Inconclusive,
}

/// Where the worst margin was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p_index: usize,
    pub pi: Vec<f64>,
    /// Model id (central, PPC, Bernstein, JRT) or candidate index (searches over decisions).
    pub f: usize,
    pub action: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub eta: f64,
    pub eps: f64,
    pub verdict: Verdict,
    /// Largest tested margin; `null` in JSON when infinite.
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    /// Monte Carlo half-width of the worst margin, if estimated.
    pub ci: Option<f64>,
    /// Refuted exactly when `worst_margin > tolerance`.
    pub tolerance: f64,
    pub infinite_moment: bool,
    /// Number of (distribution, mixture) pairs evaluated.
    pub tested: usize,
    /// Conditions checked as a consequence (JRT-II implies exp-concavity).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied: Option<Box<ConditionReport>>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn refuted(&self) -> bool {
        self.verdict == Verdict::RefutedOnTestedFamily
    }

    fn from_worst(kind: ConditionKind, eta: f64, eps: f64, worst: Option<Scored>, tested: usize) -> Self {
        let (margin, ci, witness, inf) = match worst {
            Some(s) => (s.margin.value, s.margin.ci_halfwidth, Some(s.witness), s.margin.value == f64::INFINITY),
            None => (f64::NEG_INFINITY, 0.0, None, false),
        };
        let tolerance = EXACT_TOL + ci;
        let verdict = if margin > tolerance {
            Verdict::RefutedOnTestedFamily
        } else if ci > 0.0 && margin + ci > EXACT_TOL {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        };
        ConditionReport {
            kind,
            eta,
            eps,
            verdict,
            worst_margin: margin,
            witness,
            ci: (ci > 0.0).then_some(ci),
            tolerance,
            infinite_moment: inf,
            tested,
            implied: None,
        }
    }
}

#[derive(Clone, Debug)]
struct Scored {
    margin: Estimate,
    witness: Witness,
}

fn worse(a: Option<Scored>, b: Option<Scored>) -> Option<Scored> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.margin.value > a.margin.value { b } else { a }),
    }
}

// ---------------------------------------------------------------------------
// Per-distribution preparation

/// Evaluation points for one distribution: the exact support, or Monte Carlo
/// draws with uniform weights.
struct Points {
    outcomes: Vec<Outcome>,
    weights: Vec<f64>,
    mc: bool,
}

impl Points {
    fn of(p: &Distribution, mc: &McConfig) -> Self {
        match p.support() {
            Some((os, ps)) => {
                let keep: Vec<usize> = (0..os.len()).filter(|k| ps[*k] > 0.0).collect();
                Points { outcomes: keep.iter().map(|k| os[*k]).collect(), weights: keep.iter().map(|k| ps[*k]).collect(), mc: false }
            }
            None => {
                let outcomes = p.mc_draws(mc);
                let w = 1.0 / outcomes.len() as f64;
                Points { weights: vec![w; outcomes.len()], outcomes, mc: true }
            }
        }
    }

    /// `E[h]` over the points; with Monte Carlo points also a 95% half-width.
    fn expect(&self, vals: &[f64]) -> Estimate {
        if self.mc {
            Estimate::from_samples(vals)
        } else {
            let mut acc = 0.0;
            for (v, w) in vals.iter().zip(&self.weights) {
                if *v == f64::INFINITY {
                    return Estimate::exact(f64::INFINITY);
                }
                acc += w * v;
            }
            Estimate::exact(acc)
        }
    }

    /// `ln E[e^{eta h}] / eta` with infinities handled.
    fn log_exp_moment(&self, vals: &[f64], eta: f64) -> Estimate {
        let terms: Vec<f64> = vals.iter().zip(&self.weights).map(|(v, w)| w.ln() + eta * v).collect();
        let lse = log_sum_exp(&terms);
        let value = lse / eta;
        if !self.mc || !value.is_finite() {
            return Estimate::exact(value);
        }
        // delta method on the mean of e^{eta h}
        let m = lse.exp();
        let ex: Vec<f64> = vals.iter().map(|v| (eta * v).exp()).collect();
        let est = Estimate::from_samples(&ex);
        Estimate { value, ci_halfwidth: est.ci_halfwidth / (eta * m) }
    }
}

struct Prep<'a> {
    problem: &'a DecisionProblem,
    points: Vec<Points>,
    fstar: Vec<usize>,
}

impl<'a> Prep<'a> {
    fn new(problem: &'a DecisionProblem, search: &SearchFamily, need_points: bool) -> Result<Self> {
        let fstar = (0..problem.p_family.len())
            .map(|i| problem.best_predictor(i).map(|b| b.0))
            .collect::<Result<Vec<_>>>()?;
        let points = if need_points {
            problem.p_family.iter().map(|p| Points::of(p, &search.mc)).collect()
        } else {
            Vec::new()
        };
        Ok(Prep { problem, points, fstar })
    }

    fn losses(&self, i: usize, action: &[f64]) -> Vec<f64> {
        self.points[i].outcomes.iter().map(|z| self.problem.loss.eval(action, z)).collect()
    }

    fn mix_losses(&self, i: usize, mix: &SparseMix, eta: f64) -> Vec<f64> {
        let model = &self.problem.model;
        let rows: Vec<Vec<f64>> = mix.idx.iter().map(|f| self.losses(i, model.action(*f))).collect();
        (0..self.points[i].outcomes.len())
            .map(|k| {
                let ls: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                mix_loss_of(&mix.w, &ls, eta)
            })
            .collect()
    }

    /// Whether `E_P[e^{eta (l_c - l_g)}]` has a closed form for this distribution.
    fn exact_exp_moments(&self, i: usize, c: &[f64]) -> bool {
        !self.problem.p_family[i].is_finite() && self.problem.loss.quadratic_form(c).is_some()
    }

    /// `(1/eta) ln E_P sum_g Pi(g) e^{eta (l_c - l_g)}`.
    fn predictor_term(&self, i: usize, c: &[f64], mix: &SparseMix, m: &[f64], eta: f64, mc: &McConfig) -> Result<Estimate> {
        if self.exact_exp_moments(i, c) {
            let p = &self.problem.p_family[i];
            let mut terms = Vec::with_capacity(mix.idx.len());
            for (g, w) in mix.idx.iter().zip(&mix.w) {
                let ms = excess_loss_moments_mc(p, c, self.problem.model.action(*g), &self.problem.loss, mc)?;
                terms.push(w.ln() + ms.log_mgf(eta));
            }
            return Ok(Estimate::exact(log_sum_exp(&terms) / eta));
        }
        let lc = self.losses(i, c);
        let diff: Vec<f64> = lc.iter().zip(m).map(|(a, b)| exp_diff(*a, *b)).collect();
        Ok(self.points[i].log_exp_moment(&diff, eta))
    }
}

/// `a - b` with `inf - inf := inf` (conservative for upper bounds).
fn exp_diff(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY {
        f64::INFINITY
    } else {
        a - b
    }
}

// ---------------------------------------------------------------------------
// Decision search

enum Candidates {
    List(Vec<Action>),
    /// `a0 + t d` for `t` in `[tmin, tmax]`, searched by golden section.
    Line { a0: Action, d: Action, tmin: f64, tmax: f64, grid: usize },
    /// Model actions plus the mixture mean.
    HullFallback(Vec<Action>),
}

fn candidates(problem: &DecisionProblem, search: &SearchFamily) -> Candidates {
    match &problem.decision_set {
        DecisionSet::Model => Candidates::List(problem.model.actions().to_vec()),
        DecisionSet::Grid(g) => Candidates::List(g.clone()),
        DecisionSet::ConvexHull => match collinear(problem.model.actions()) {
            Some((a0, d, tmin, tmax)) => Candidates::Line { a0, d, tmin, tmax, grid: search.decision_grid },
            None => Candidates::HullFallback(problem.model.actions().to_vec()),
        },
    }
}

/// If all actions lie on one line, return `(a0, d, tmin, tmax)`.
pub(crate) fn collinear(actions: &[Action]) -> Option<(Action, Action, f64, f64)> {
    let a0 = actions[0].clone();
    let far = actions
        .iter()
        .max_by(|a, b| dist2(a, &a0).partial_cmp(&dist2(b, &a0)).unwrap())
        .unwrap();
    let d: Action = far.iter().zip(&a0).map(|(x, y)| x - y).collect();
    let dd = dot(&d, &d);
    if dd == 0.0 {
        return Some((a0.clone(), vec![0.0; a0.len()], 0.0, 0.0));
    }
    let mut tmin: f64 = 0.0;
    let mut tmax: f64 = 0.0;
    for a in actions {
        let diff: Vec<f64> = a.iter().zip(&a0).map(|(x, y)| x - y).collect();
        let t = dot(&diff, &d) / dd;
        let resid: f64 = diff.iter().zip(&d).map(|(x, y)| (x - t * y).powi(2)).sum();
        if resid > 1e-18 * (1.0 + dd) {
            return None;
        }
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    }
    Some((a0, d, tmin, tmax))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

pub(crate) fn line_point(a0: &[f64], d: &[f64], t: f64) -> Action {
    a0.iter().zip(d).map(|(x, y)| x + t * y).collect()
}

/// Minimise a score over the decision set. Returns (score, candidate index, action).
fn minimise(
    cands: &Candidates,
    mean: Option<Action>,
    score: &dyn Fn(&[f64]) -> Result<Estimate>,
) -> Result<(Estimate, usize, Action)> {
    let mut best: Option<(Estimate, usize, Action)> = None;
    let mut consider = |e: Estimate, i: usize, a: Action| {
        if best.as_ref().is_none_or(|b| e.value < b.0.value) {
            best = Some((e, i, a));
        }
    };
    match cands {
        Candidates::List(list) => {
            for (i, a) in list.iter().enumerate() {
                consider(score(a)?, i, a.clone());
            }
        }
        Candidates::HullFallback(list) => {
            for (i, a) in list.iter().enumerate() {
                consider(score(a)?, i, a.clone());
            }
            if let Some(m) = mean {
                consider(score(&m)?, list.len(), m);
            }
        }
        Candidates::Line { a0, d, tmin, tmax, grid } => {
            let ts: Vec<f64> = (0..*grid).map(|k| tmin + (tmax - tmin) * k as f64 / (*grid - 1) as f64).collect();
            let mut vals = Vec::with_capacity(ts.len());
            for (k, t) in ts.iter().enumerate() {
                let a = line_point(a0, d, *t);
                let e = score(&a)?;
                vals.push(e.value);
                consider(e, k, a);
            }
            // golden section inside the bracket around the best grid point
            let k = (0..vals.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
            let (mut lo, mut hi) = (ts[k.saturating_sub(1)], ts[(k + 1).min(ts.len() - 1)]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let f = |t: f64| score(&line_point(a0, d, t));
            let mut x1 = hi - g * (hi - lo);
            let mut x2 = lo + g * (hi - lo);
            let mut f1 = f(x1)?;
            let mut f2 = f(x2)?;
            for _ in 0..90 {
                if f1.value <= f2.value {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = f(x1)?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = f(x2)?;
                }
            }
            let t = 0.5 * (lo + hi);
            consider(f(t)?, ts.len(), line_point(a0, d, t));
        }
    }
    Ok(best.expect("candidate set is nonempty"))
}

// ---------------------------------------------------------------------------
// The checker

/// Check one condition on the tested family.
///
/// The comparator for central and PPC checks is the risk minimiser of each
/// distribution. Exponential moments that diverge count as refutations of
/// central and predictor conditions and set `infinite_moment`.
pub fn check_condition(
    problem: &DecisionProblem,
    kind: ConditionKind,
    eta: f64,
    eps: f64,
    search: &SearchFamily,
) -> Result<ConditionReport> {
    if !(eta > 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidArgument("need eta > 0 and eps >= 0".into()));
    }
    search.validate()?;
    match kind {
        ConditionKind::Central => check_central(problem, eta, eps, search),
        ConditionKind::Ppc => check_ppc(problem, eta, eps, search),
        ConditionKind::Predictor | ConditionKind::StochMix | ConditionKind::StochExpConcave | ConditionKind::ClassicalMix => {
            check_exists(problem, kind, eta, eps, search)
        }
        ConditionKind::Jrt2 | ConditionKind::Bernstein => Err(Error::UnsupportedKind(
            kind.to_string(),
            "use check_jrt2 or check_bernstein, which need extra inputs".into(),
        )),
    }
}

fn check_central(problem: &DecisionProblem, eta: f64, eps: f64, search: &SearchFamily) -> Result<ConditionReport> {
    let prep = Prep::new(problem, search, false)?;
    let n = problem.model.len();
    let mixes = search.sparse_mixtures(n, &anchors(&prep.fstar));
    // The central condition is linear in Pi, so its maximum over any family
    // containing the vertices is attained at a vertex.
    let mixes: Vec<SparseMix> = if search.vertex_mixtures {
        mixes.into_iter().filter(|m| m.idx.len() == 1).collect()
    } else {
        mixes
    };
    let per_p: Vec<Vec<Estimate>> = (0..problem.p_family.len())
        .into_par_iter()
        .map(|i| {
            let p = &problem.p_family[i];
            let star = problem.model.action(prep.fstar[i]);
            (0..n)
                .map(|f| {
                    let m = excess_loss_moments_mc(p, problem.model.action(f), star, &problem.loss, &search.mc)?;
                    let value = m.cgf_neg(eta);
                    let ci = if m.is_exact() || !value.is_finite() {
                        0.0
                    } else {
                        let ex: Vec<f64> = match &m.law {
                            crate::decision::ExcessLaw::Sampled { values } => values.iter().map(|w| (-eta * w).exp()).collect(),
                            _ => unreachable!(),
                        };
                        Estimate::from_samples(&ex).ci_halfwidth / value.exp()
                    };
                    Ok(Estimate { value, ci_halfwidth: ci })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst = None;
    for (i, cgfs) in per_p.iter().enumerate() {
        for mix in &mixes {
            let terms: Vec<f64> = mix.idx.iter().zip(&mix.w).map(|(f, w)| w.ln() + cgfs[*f].value).collect();
            let value = log_sum_exp(&terms) / eta - eps;
            let ci = mix.idx.iter().map(|f| cgfs[*f].ci_halfwidth).fold(0.0, f64::max) / eta;
            let f = *mix
                .idx
                .iter()
                .max_by(|a, b| cgfs[**a].value.partial_cmp(&cgfs[**b].value).unwrap())
                .unwrap();
            let s = Scored {
                margin: Estimate { value, ci_halfwidth: ci },
                witness: Witness { p_index: i, pi: mix.dense(n).weights().to_vec(), f, action: problem.model.action(f).to_vec() },
            };
            worst = worse(worst, Some(s));
        }
    }
    Ok(ConditionReport::from_worst(ConditionKind::Central, eta, eps, worst, per_p.len() * mixes.len()))
}

fn anchors(fstar: &[usize]) -> Vec<usize> {
    let mut a: Vec<usize> = fstar.to_vec();
    a.sort_unstable();
    a.dedup();
    a
}

fn check_ppc(problem: &DecisionProblem, eta: f64, eps: f64, search: &SearchFamily) -> Result<ConditionReport> {
    let prep = Prep::new(problem, search, true)?;
    let n = problem.model.len();
    let mixes = search.sparse_mixtures(n, &anchors(&prep.fstar));
    let star_losses: Vec<Vec<f64>> =
        (0..problem.p_family.len()).map(|i| prep.losses(i, problem.model.action(prep.fstar[i]))).collect();
    let worst = mixes
        .par_iter()
        .map(|mix| {
            let mut worst = None;
            for i in 0..problem.p_family.len() {
                let m = prep.mix_losses(i, mix, eta);
                let diff: Vec<f64> = star_losses[i].iter().zip(&m).map(|(a, b)| exp_diff(*a, *b)).collect();
                let mut e = prep.points[i].expect(&diff);
                e.value -= eps;
                let f = prep.fstar[i];
                let w = Witness { p_index: i, pi: mix.dense(n).weights().to_vec(), f, action: problem.model.action(f).to_vec() };
                worst = worse(worst, Some(Scored { margin: e, witness: w }));
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, worse);
    Ok(ConditionReport::from_worst(ConditionKind::Ppc, eta, eps, worst, mixes.len() * problem.p_family.len()))
}

fn check_exists(
    problem: &DecisionProblem,
    kind: ConditionKind,
    eta: f64,
    eps: f64,
    search: &SearchFamily,
) -> Result<ConditionReport> {
    let n = problem.model.len();
    if kind == ConditionKind::StochExpConcave && !problem.loss.accepts_mixtures() {
        return Err(Error::EmbeddingMissing);
    }
    let outcome_space = if kind == ConditionKind::ClassicalMix {
        Some(problem.outcome_space().ok_or_else(|| {
            Error::UnsupportedKind(kind.to_string(), "pointwise mixability needs a finite outcome space".into())
        })?)
    } else {
        None
    };
    let prep = Prep::new(problem, search, true)?;
    let mixes = search.sparse_mixtures(n, &anchors(&prep.fstar));
    let cands = candidates(problem, search);
    let np = problem.p_family.len();

    let results: Vec<Result<Option<Scored>>> = mixes
        .par_iter()
        .map(|mix| -> Result<Option<Scored>> {
            let dense = mix.dense(n);
            let mean = problem.loss.accepts_mixtures().then(|| problem.model.mean_action(dense.weights()));
            if let Some(space) = &outcome_space {
                // pointwise: max over outcomes of l_c(z) - m_Pi(z)
                let ls: Vec<Vec<f64>> = mix.idx.iter().map(|f| space.iter().map(|z| problem.loss.eval(problem.model.action(*f), z)).collect()).collect();
                let m: Vec<f64> = (0..space.len())
                    .map(|k| mix_loss_of(&mix.w, &ls.iter().map(|r| r[k]).collect::<Vec<_>>(), eta))
                    .collect();
                let score = |c: &[f64]| -> Result<Estimate> {
                    let worst = space
                        .iter()
                        .zip(&m)
                        .map(|(z, mk)| exp_diff(problem.loss.eval(c, z), *mk))
                        .fold(f64::NEG_INFINITY, f64::max);
                    Ok(Estimate::exact(worst - eps))
                };
                let (e, ci, a) = minimise(&cands, mean, &score)?;
                let w = Witness { p_index: 0, pi: dense.weights().to_vec(), f: ci, action: a };
                return Ok(Some(Scored { margin: e, witness: w }));
            }
            let ms: Vec<Vec<f64>> = (0..np).map(|i| prep.mix_losses(i, mix, eta)).collect();
            // max over P of the per-distribution term, remembering which P
            let per_p = |c: &[f64]| -> Result<(Estimate, usize)> {
                let mut best: Option<(Estimate, usize)> = None;
                for i in 0..np {
                    let e = match kind {
                        ConditionKind::Predictor => prep.predictor_term(i, c, mix, &ms[i], eta, &search.mc)?,
                        _ => {
                            let lc = prep.losses(i, c);
                            let diff: Vec<f64> = lc.iter().zip(&ms[i]).map(|(a, b)| exp_diff(*a, *b)).collect();
                            prep.points[i].expect(&diff)
                        }
                    };
                    if best.as_ref().is_none_or(|b| e.value > b.0.value) {
                        best = Some((e, i));
                    }
                }
                let (mut e, i) = best.expect("family nonempty");
                e.value -= eps;
                Ok((e, i))
            };
            let (e, ci, a) = if kind == ConditionKind::StochExpConcave {
                let a = mean.clone().expect("checked above");
                (per_p(&a)?.0, usize::MAX, a)
            } else {
                minimise(&cands, mean, &|c| per_p(c).map(|x| x.0))?
            };
            let p_index = per_p(&a)?.1;
            let f = if ci == usize::MAX { 0 } else { ci };
            let w = Witness { p_index, pi: dense.weights().to_vec(), f, action: a };
            Ok(Some(Scored { margin: e, witness: w }))
        })
        .collect();
    let mut worst = None;
    for r in results {
        worst = worse(worst, r?);
    }
    Ok(ConditionReport::from_worst(kind, eta, eps, worst, mixes.len() * np))
}

/// Largest `eta` (to within `tol`) at which the condition holds on the tested
/// family; 0 if it fails already at `eta = tol`, `1e6` if it never fails.
///
/// Bisection is valid because the set of `eta` satisfying the central,
/// PPC and mixability conditions is an interval starting at 0.
pub fn max_eta(problem: &DecisionProblem, kind: ConditionKind, eps: f64, tol: f64, search: &SearchFamily) -> Result<f64> {
    const CAP: f64 = 1e6;
    let holds = |eta: f64| -> Result<bool> { Ok(check_condition(problem, kind, eta, eps, search)?.holds()) };
    if !holds(tol)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (tol, 1.0f64.max(2.0 * tol));
    while holds(hi)? {
        lo = hi;
        if hi >= CAP {
            return Ok(CAP);
        }
        hi = (hi * 2.0).min(CAP);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

// ---------------------------------------------------------------------------
// v- and u-functions, Bernstein conditions

/// Nondecreasing, nonnegative functions used both as `v` (v-central
/// condition) and as `u` (generalised Bernstein condition).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum VFunction {
    Constant { value: f64 },
    /// `min(c x^alpha, cap)`.
    Power {
        c: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    /// Piecewise-linear through `(xs[i], ys[i])`, constant outside.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl VFunction {
    pub fn power(c: f64, alpha: f64) -> Self {
        VFunction::Power { c, alpha, cap: None }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            VFunction::Constant { value } => *value,
            VFunction::Power { c, alpha, cap } => {
                let v = if *alpha == 0.0 { *c } else { c * x.max(0.0).powf(*alpha) };
                cap.map_or(v, |b| v.min(b))
            }
            VFunction::Tabulated { xs, ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let k = xs.partition_point(|t| *t <= x) - 1;
                let s = (x - xs[k]) / (xs[k + 1] - xs[k]);
                ys[k] + s * (ys[k + 1] - ys[k])
            }
        }
    }

    /// Log-spaced grid on `(0, hi]` used by the shape checks.
    pub fn check_grid(hi: f64) -> Vec<f64> {
        let lo = hi * 1e-9;
        (0..400).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 399.0).exp()).collect()
    }

    pub fn is_nondecreasing_on(&self, grid: &[f64]) -> bool {
        grid.windows(2).all(|w| self.eval(w[1]) >= self.eval(w[0]) * (1.0 - 1e-12) - 1e-300)
    }

    fn validate(&self) -> Result<()> {
        match self {
            VFunction::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::ShapeViolation("tabulated function needs >= 2 increasing knots".into()));
                }
                Ok(())
            }
            VFunction::Constant { value } if !(*value >= 0.0) => Err(Error::ShapeViolation("negative constant".into())),
            VFunction::Power { c, .. } if !(*c >= 0.0) => Err(Error::ShapeViolation("negative coefficient".into())),
            _ => Ok(()),
        }
    }

    fn tabulate(hi: f64, g: impl Fn(f64) -> f64) -> VFunction {
        let xs = VFunction::check_grid(hi);
        let ys = xs.iter().map(|x| g(*x)).collect();
        VFunction::Tabulated { xs, ys }
    }
}

/// Which moment the Bernstein check bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BernsteinMoment {
    /// `Var(l_f - l_{f*}) <= u(E[l_f - l_{f*}])`.
    #[default]
    Variance,
    /// `E[(l_f - l_{f*})^2] <= B E[l_f - l_{f*}]^beta`, the `(beta, B)` form.
    SecondMoment,
}

/// Check the `u`-Bernstein condition for every distribution and predictor.
///
/// `u` must be nondecreasing with `u(x)/x` nonincreasing; both are verified
/// on a grid up to the largest mean excess loss in the problem.
pub fn check_bernstein(problem: &DecisionProblem, u: &VFunction, moment: BernsteinMoment) -> Result<ConditionReport> {
    u.validate()?;
    let mc = McConfig::default();
    let n = problem.model.len();
    let mut rows = Vec::new();
    let mut max_mean: f64 = 0.0;
    for (i, p) in problem.p_family.iter().enumerate() {
        let (star, _) = problem.best_predictor(i)?;
        for f in 0..n {
            let m = excess_loss_moments_mc(p, problem.model.action(f), problem.model.action(star), &problem.loss, &mc)?;
            max_mean = max_mean.max(m.mean);
            rows.push((i, f, m));
        }
    }
    let grid = VFunction::check_grid(if max_mean > 0.0 { max_mean } else { 1.0 });
    if !u.is_nondecreasing_on(&grid) {
        return Err(Error::ShapeViolation("u must be nondecreasing".into()));
    }
    if grid.windows(2).any(|w| u.eval(w[1]) / w[1] > u.eval(w[0]) / w[0] * (1.0 + 1e-12)) {
        return Err(Error::ShapeViolation("u(x)/x must be nonincreasing".into()));
    }
    let mut worst = None;
    let tested = rows.len();
    for (i, f, m) in rows {
        let lhs = match moment {
            BernsteinMoment::Variance => m.variance,
            BernsteinMoment::SecondMoment => m.second_moment,
        };
        let value = lhs - u.eval(m.mean.max(0.0));
        let ci = if m.is_exact() { 0.0 } else { 2.0 * m.ci_halfwidth * (1.0 + m.mean.abs()) };
        let w = Witness { p_index: i, pi: PredictorMixture::point(n, f).weights().to_vec(), f, action: problem.model.action(f).to_vec() };
        worst = worse(worst, Some(Scored { margin: Estimate { value, ci_halfwidth: ci }, witness: w }));
    }
    Ok(ConditionReport::from_worst(ConditionKind::Bernstein, 0.0, 0.0, worst, tested))
}

/// `v(x) = min(c1 x / u(x), b)` with `c1 = 1 / kappa(2 b a)`, for losses in `[0, a]`.
pub fn bernstein_to_v(u: &VFunction, a: f64, b: f64) -> Result<VFunction> {
    u.validate()?;
    if !(a > 0.0 && b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument("need a > 0 and finite b > 0".into()));
    }
    let c1 = 1.0 / kappa(2.0 * b * a);
    Ok(match u {
        VFunction::Constant { value } => VFunction::Power { c: c1 / value, alpha: 1.0, cap: Some(b) },
        VFunction::Power { c, alpha, cap: None } => VFunction::Power { c: c1 / c, alpha: 1.0 - alpha, cap: Some(b) },
        _ => VFunction::tabulate(a, |x| (c1 * x / u.eval(x)).min(b)),
    })
}

/// `u(x) = c2 x / v(x)` with `c2 = 6 / kappa(-2 b a)` and `b = sup v` on `[0, a]`.
pub fn v_to_bernstein(v: &VFunction, a: f64) -> Result<VFunction> {
    v.validate()?;
    if !(a > 0.0) {
        return Err(Error::InvalidArgument("need a > 0".into()));
    }
    let grid = VFunction::check_grid(a);
    if grid.windows(2).any(|w| w[1] / v.eval(w[1]) < w[0] / v.eval(w[0]) * (1.0 - 1e-12)) {
        return Err(Error::ShapeViolation("x / v(x) must be nondecreasing".into()));
    }
    let b = grid.iter().map(|x| v.eval(*x)).fold(0.0, f64::max);
    let c2 = 6.0 / kappa(-2.0 * b * a);
    Ok(match v {
        VFunction::Constant { value } => VFunction::power(c2 / value, 1.0),
        VFunction::Power { c, alpha, cap } if cap.is_none_or(|cap| cap >= c * a.powf(*alpha)) => {
            VFunction::power(c2 / c, 1.0 - alpha)
        }
        _ => VFunction::tabulate(a, |x| c2 * x / v.eval(x)),
    })
}

// ---------------------------------------------------------------------------
// Minimax gap, uniqueness, JRT-II

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxGap {
    pub supinf: f64,
    pub infsup: f64,
}

impl MinimaxGap {
    pub fn gap(&self) -> f64 {
        self.infsup - self.supinf
    }
}

/// `sup_P inf_f S(P, f)` and `inf_f sup_P S(P, f)` over the distribution
/// family and the decision grid, with
/// `S(P, f) = E_P E_{g~Pi}[e^{eta (l_f - l_g)}]`.
pub fn minimax_gap(problem: &DecisionProblem, pi: &PredictorMixture, eta: f64, search: &SearchFamily) -> Result<MinimaxGap> {
    if pi.len() != problem.model.len() {
        return Err(Error::InvalidMixture("mixture size differs from the model".into()));
    }
    let prep = Prep::new(problem, search, true)?;
    let mix = SparseMix {
        idx: (0..pi.len()).filter(|i| pi.weights()[*i] > 0.0).collect(),
        w: pi.weights().iter().cloned().filter(|w| *w > 0.0).collect(),
    };
    let decisions: Vec<Action> = match candidates(problem, search) {
        Candidates::List(l) | Candidates::HullFallback(l) => l,
        Candidates::Line { a0, d, tmin, tmax, grid } => {
            (0..grid).map(|k| line_point(&a0, &d, tmin + (tmax - tmin) * k as f64 / (grid - 1) as f64)).collect()
        }
    };
    let np = problem.p_family.len();
    let ms: Vec<Vec<f64>> = (0..np).map(|i| prep.mix_losses(i, &mix, eta)).collect();
    let table: Vec<Vec<f64>> = decisions
        .par_iter()
        .map(|c| {
            (0..np)
                .map(|i| prep.predictor_term(i, c, &mix, &ms[i], eta, &search.mc).map(|e| (eta * e.value).exp()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if table.iter().flatten().any(|s| !s.is_finite()) {
        return Err(Error::InfiniteMoment("S(P, f) diverges on the grid".into()));
    }
    let supinf = (0..np)
        .map(|i| table.iter().map(|row| row[i]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let infsup = table
        .iter()
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    Ok(MinimaxGap { supinf, infsup })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessWitness {
    pub f: usize,
    pub fstar: usize,
    pub risk_gap: f64,
    pub variance: f64,
}

/// A predictor other than `f*` whose risk is within `delta` of the optimum
/// yet whose excess loss has variance at least `eps`.
pub fn uniqueness_probe(problem: &DecisionProblem, p_index: usize, eps: f64, delta: f64) -> Result<Option<UniquenessWitness>> {
    let p = &problem.p_family[p_index];
    let (star, rstar) = problem.best_predictor(p_index)?;
    let risks = problem.risks(p_index)?;
    for (f, r) in risks.iter().enumerate() {
        if f == star || !(r - rstar <= delta) {
            continue;
        }
        let m = excess_loss_moments_mc(p, problem.model.action(f), problem.model.action(star), &problem.loss, &McConfig::default())?;
        if m.variance >= eps {
            return Ok(Some(UniquenessWitness { f, fstar: star, risk_gap: r - rstar, variance: m.variance }));
        }
    }
    Ok(None)
}

/// Check the JRT-II condition with a user-supplied `gamma(f, g)` on actions.
///
/// Verifies `gamma(f, f) = 1`, midpoint concavity of `g -> gamma(f, g)` when
/// actions can be mixed, and `E_P[e^{eta (l_f - l_g)}] <= gamma(f, g)` for
/// all model pairs. The report's margin is
/// `(1/eta) (ln E[e^{eta (l_f - l_g)}] - ln gamma(f, g))`. When the condition
/// holds, the stochastic exp-concavity check at `(eta, 0)` is attached as
/// `implied`.
pub fn check_jrt2(
    problem: &DecisionProblem,
    gamma: &dyn Fn(&[f64], &[f64]) -> f64,
    eta: f64,
    search: &SearchFamily,
) -> Result<ConditionReport> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let acts = problem.model.actions();
    for f in acts {
        let g = gamma(f, f);
        if (g - 1.0).abs() > 1e-12 {
            return Err(Error::GammaShapeViolation(format!("gamma(f, f) = {g} at f = {f:?}")));
        }
    }
    if problem.loss.accepts_mixtures() {
        for f in acts {
            for (i, g1) in acts.iter().enumerate() {
                for g2 in &acts[i + 1..] {
                    let mid: Vec<f64> = g1.iter().zip(g2).map(|(a, b)| 0.5 * (a + b)).collect();
                    let lhs = gamma(f, &mid);
                    let rhs = 0.5 * (gamma(f, g1) + gamma(f, g2));
                    if lhs < rhs - 1e-12 * (1.0 + rhs.abs()) {
                        return Err(Error::GammaShapeViolation(format!("not concave at f = {f:?}")));
                    }
                }
            }
        }
    }
    let n = acts.len();
    let mut worst = None;
    let mut tested = 0;
    for (i, p) in problem.p_family.iter().enumerate() {
        for (fi, f) in acts.iter().enumerate() {
            for g in acts {
                let gm = gamma(f, g);
                if !(gm > 0.0) {
                    return Err(Error::GammaShapeViolation(format!("gamma must be positive, got {gm}")));
                }
                let m = excess_loss_moments_mc(p, f, g, &problem.loss, &search.mc)?;
                let value = (m.log_mgf(eta) - gm.ln()) / eta;
                let w = Witness { p_index: i, pi: PredictorMixture::point(n, fi).weights().to_vec(), f: fi, action: f.clone() };
                worst = worse(worst, Some(Scored { margin: Estimate::exact(value), witness: w }));
                tested += 1;
            }
        }
    }
    let mut report = ConditionReport::from_worst(ConditionKind::Jrt2, eta, 0.0, worst, tested);
    if report.holds() && problem.loss.accepts_mixtures() {
        let sec = check_condition(problem, ConditionKind::StochExpConcave, eta, 0.0, search)?;
        report.implied = Some(Box::new(sec));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{Loss, Model};

    fn bern(ps: &[f64]) -> DecisionProblem {
        DecisionProblem::new(
            Loss::ZeroOne,
            ps.iter().map(|p| Distribution::bernoulli(*p).unwrap()).collect(),
            Model::scalar(&[0.0, 1.0]).unwrap(),
            DecisionSet::Model,
        )
        .unwrap()
    }

    #[test]
    fn central_bernoulli_at_ln3() {
        let r = check_condition(&bern(&[0.75]), ConditionKind::Central, 3f64.ln(), 0.0, &SearchFamily::default()).unwrap();
        assert!(r.holds());
        assert!(r.worst_margin.abs() < 1e-12);
        let r = check_condition(&bern(&[0.75]), ConditionKind::Central, 1.2, 0.0, &SearchFamily::default()).unwrap();
        assert!(r.refuted());
        assert_eq!(r.witness.unwrap().f, 0);
    }

    #[test]
    fn max_eta_bernoulli() {
        let s = SearchFamily::default();
        let e = max_eta(&bern(&[0.75]), ConditionKind::Central, 0.0, 1e-9, &s).unwrap();
        assert!((e - 3f64.ln()).abs() < 1e-6, "{e}");
        assert_eq!(max_eta(&bern(&[0.5]), ConditionKind::Central, 0.0, 1e-7, &s).unwrap(), 0.0);
        assert_eq!(max_eta(&bern(&[1.0]), ConditionKind::Central, 0.0, 1e-7, &s).unwrap(), 1e6);
    }

    #[test]
    fn stoch_mix_refuted_at_half() {
        let p = bern(&[0.5, 0.75, 0.25]);
        for eta in [0.1, 1.0, 5.0] {
            let r = check_condition(&p, ConditionKind::StochMix, eta, 0.0, &SearchFamily::default()).unwrap();
            assert!(r.refuted(), "eta {eta}");
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("stoch-mix".parse::<ConditionKind>().unwrap(), ConditionKind::StochMix);
        assert_eq!("Central".parse::<ConditionKind>().unwrap(), ConditionKind::Central);
        assert!("bogus".parse::<ConditionKind>().is_err());
    }

    #[test]
    fn conversions() {
        let k2 = (std::f64::consts::E.powi(2) - 3.0) / 4.0;
        let v = bernstein_to_v(&VFunction::power(1.0, 1.0), 1.0, 1.0).unwrap();
        assert!((v.eval(0.3) - 4.0 / (std::f64::consts::E.powi(2) - 3.0)).abs() < 1e-12);
        let v = bernstein_to_v(&VFunction::power(2.0, 0.5), 1.0, 1.0).unwrap();
        assert!((v.eval(0.04) - (0.2 / (2.0 * k2)).min(1.0)).abs() < 1e-12);
        let v = bernstein_to_v(&VFunction::Constant { value: 4.0 }, 1.0, 1.0).unwrap();
        assert!((v.eval(0.01) / v.eval(0.02) - 0.5).abs() < 1e-12);
        let u = v_to_bernstein(&VFunction::Constant { value: 1.0 }, 1.0).unwrap();
        assert!((u.eval(1.0) - 24.0 / (1.0 + (-2f64).exp())).abs() < 1e-12);
        assert!((u.eval(1.0) - 21.14).abs() < 0.01);
        let u = v_to_bernstein(&VFunction::power(1.0, 1.0), 1.0).unwrap();
        assert!((u.eval(0.1) - u.eval(0.9)).abs() < 1e-12);
        assert!(v_to_bernstein(&VFunction::power(1.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn uniqueness_examples() {
        let w = uniqueness_probe(&bern(&[0.5]), 0, 0.5, 0.0).unwrap().unwrap();
        assert_eq!((w.f, w.fstar), (1, 0));
        assert_eq!(w.risk_gap, 0.0);
        assert!((w.variance - 1.0).abs() < 1e-15);
        assert!(uniqueness_probe(&bern(&[0.75]), 0, 1e-3, 0.49).unwrap().is_none());
        let dup = DecisionProblem::new(
            Loss::ZeroOne,
            vec![Distribution::bernoulli(0.5).unwrap()],
            Model::scalar(&[1.0, 1.0]).unwrap(),
            DecisionSet::Model,
        )
        .unwrap();
        assert!(uniqueness_probe(&dup, 0, 1e-9, 1.0).unwrap().is_none());
    }
}
