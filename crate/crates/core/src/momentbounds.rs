//! Exponential-moment machinery behind the fast-rate bounds.
//!
//! * [`kappa`] and the [`moment_taylor_gap`] sandwich relating the CGF gap
//!   `E[X] + ln E[e^{-X}]` to the variance;
//! * [`cramer_chernoff`] tail bounds for ERM misranking;
//! * the moment problem: maximise `E[e^{(eta/2) S}]` over laws on `[-V, V]`
//!   with `E[S] = -a/n` and `E[e^{eta S}] = 1`, solved on a grid by
//!   [`moment_lp_oracle`] and bounded in closed form by
//!   [`cgf_half_eta_bound`], with explicit [`dual_certificate_for`];
//! * finite-class, intermediate and VC-type rate formulas and the
//!   learning-rate trade-off [`optimize_eta_rate`].

use serde::{Deserialize, Serialize};

use crate::conditions::VFunction;
use crate::decision::{excess_loss_moments, DecisionProblem};
use crate::error::{Error, Result};

/// Constant in the CGF bound `Lambda(eta/2) <= -0.21 (eta ^ 1) a/n`.
pub const CGF_CONSTANT: f64 = 0.21;

/// `(sqrt(e) - 1)^2 / 2 = 0.2104..`, the exact value the constant rounds down.
pub fn half_sqrt_e_minus_one_sq() -> f64 {
    0.5 * (0.5f64.exp() - 1.0).powi(2)
}

/// `kappa(x) = (e^x - x - 1) / x^2`, with `kappa(0) = 1/2`.
///
/// Uses the Taylor series `1/2 + x/6 + x^2/24 + x^3/120` for `|x| <= 1e-4`.
pub fn kappa(x: f64) -> f64 {
    if x.abs() <= 1e-4 {
        0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTaylorGap {
    /// `E[X] + ln E[e^{-X}]`.
    pub gap: f64,
    /// `kappa(-2a) Var(X)`.
    pub lower: f64,
    /// `kappa(2a) Var(X)`.
    pub upper: f64,
}

impl MomentTaylorGap {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower <= self.gap + slack && self.gap <= self.upper + slack
    }
}

/// The variance sandwich for a finite-support `X` in `[-a, a]`.
pub fn moment_taylor_gap(values: &[f64], probs: &[f64], a: f64) -> Result<MomentTaylorGap> {
    if values.len() != probs.len() || values.is_empty() {
        return Err(Error::InvalidArgument("values and probs must match".into()));
    }
    if let Some(v) = values.iter().find(|v| !(v.abs() <= a)) {
        return Err(Error::SupportViolation { a, value: *v });
    }
    let total: f64 = probs.iter().sum();
    let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum::<f64>() / total;
    let var: f64 = values.iter().zip(probs).map(|(v, p)| p * (v - mean).powi(2)).sum::<f64>() / total;
    // ln E[e^{-X}] = -mean + ln E[e^{-(X - mean)}], which keeps the gap accurate
    // when it is tiny compared with the mean.
    let centred: f64 = values.iter().zip(probs).map(|(v, p)| p * (-(v - mean)).exp_m1()).sum::<f64>() / total;
    let gap = centred.ln_1p();
    Ok(MomentTaylorGap { gap, lower: kappa(-2.0 * a) * var, upper: kappa(2.0 * a) * var })
}

/// `exp(eta n t + n Lambda_{-W}(eta))`, the Chernoff bound on the probability
/// that predictor `f` looks at most `t` worse than `fstar` on `n` draws from
/// `P_{p_index}`.
pub fn cramer_chernoff(
    problem: &DecisionProblem,
    p_index: usize,
    f: usize,
    fstar: usize,
    eta: f64,
    t: f64,
    n: usize,
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let m = excess_loss_moments(
        &problem.p_family[p_index],
        problem.model.action(f),
        problem.model.action(fstar),
        &problem.loss,
    )?;
    let cgf = m.cgf_neg(eta);
    if cgf == f64::INFINITY {
        return Err(Error::InfiniteMoment(format!("Lambda_(-W)({eta}) diverges")));
    }
    let n = n as f64;
    Ok((eta * n * t + n * cgf).exp())
}

/// Where `(-a/n, 1)` sits relative to the feasible moment region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Interior,
    Boundary,
    Infeasible,
}

/// `(cosh(eta) - 1) / sinh(eta)`, which equals `tanh(eta / 2)`.
pub fn feasibility_threshold(eta_star: f64) -> f64 {
    (eta_star / 2.0).tanh()
}

/// Classify the moment constraints `E[S] = -a/n`, `E[e^{eta S}] = 1` on `[-1, 1]`.
pub fn feasible_moment(eta_star: f64, a_over_n: f64) -> Feasibility {
    let th = feasibility_threshold(eta_star);
    if (a_over_n - th).abs() <= 1e-12 {
        Feasibility::Boundary
    } else if a_over_n < th {
        Feasibility::Interior
    } else {
        Feasibility::Infeasible
    }
}

/// Upper bound `-0.21 (V eta* ^ 1) (a / V) / n` on `Lambda_{-W}(eta*/2)` for
/// any `W` on `[-V, V]` with mean `a/n` and `Lambda_{-W}(eta*) = 0`.
pub fn cgf_half_eta_bound(eta_star: f64, a_over_n: f64, v: f64) -> Result<f64> {
    if !(eta_star > 0.0 && a_over_n > 0.0 && v > 0.0) {
        return Err(Error::InvalidArgument("eta*, a/n and V must be positive".into()));
    }
    let eta = v * eta_star;
    let scaled = a_over_n / v;
    if feasible_moment(eta, scaled) == Feasibility::Infeasible {
        return Err(Error::InfeasibleInstance { a_over_n: scaled, threshold: feasibility_threshold(eta) });
    }
    Ok(-CGF_CONSTANT * eta.min(1.0) * scaled)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentProblemInstance {
    pub eta_star: f64,
    pub a_over_n: f64,
    #[serde(default = "one")]
    pub range_v: f64,
}

fn one() -> f64 {
    1.0
}

impl MomentProblemInstance {
    pub fn new(eta_star: f64, a_over_n: f64) -> Self {
        MomentProblemInstance { eta_star, a_over_n, range_v: 1.0 }
    }

    pub fn feasibility(&self) -> Feasibility {
        feasible_moment(self.range_v * self.eta_star, self.a_over_n / self.range_v)
    }

    fn grid(&self, size: usize) -> Vec<f64> {
        let v = self.range_v;
        (0..size).map(|i| -v + 2.0 * v * i as f64 / (size - 1) as f64).collect()
    }
}

/// Optimal grid law of the moment problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSolution {
    /// `max E[e^{(eta*/2) S}]`.
    pub value: f64,
    /// Support points and probabilities (at most three atoms).
    pub atoms: Vec<(f64, f64)>,
}

/// Maximise `E[e^{(eta*/2) S}]` over laws supported on a uniform grid of
/// `[-V, V]` subject to `E[S] = -a/n` and `E[e^{eta* S}] = 1`.
///
/// With three equality rows every basic feasible solution has at most three
/// atoms, so the simplex method searches exactly the extreme points of the
/// feasible set.
pub fn moment_lp_oracle(inst: &MomentProblemInstance, grid_size: usize) -> Result<MomentSolution> {
    check_instance(inst, grid_size)?;
    let s = inst.grid(grid_size);
    let eta = inst.eta_star;
    let a = vec![
        vec![1.0; grid_size],
        s.clone(),
        s.iter().map(|x| (eta * x).exp()).collect(),
    ];
    let b = [1.0, -inst.a_over_n, 1.0];
    let c: Vec<f64> = s.iter().map(|x| (0.5 * eta * x).exp()).collect();
    let (value, p) = simplex_max(&a, &b, &c).ok_or(Error::NoFeasibleAtomTriple)?;
    let atoms = s.iter().zip(&p).filter(|(_, w)| **w > 0.0).map(|(x, w)| (*x, *w)).collect();
    Ok(MomentSolution { value, atoms })
}

/// The same optimum by brute force over every atom triple of the grid.
/// Cubic in `grid_size`; meant for cross-checking on coarse grids.
pub fn moment_lp_bruteforce(inst: &MomentProblemInstance, grid_size: usize) -> Result<MomentSolution> {
    check_instance(inst, grid_size.max(100))?;
    let s = inst.grid(grid_size);
    let eta = inst.eta_star;
    let g = |x: f64| [1.0, x, (eta * x).exp()];
    let b = [1.0, -inst.a_over_n, 1.0];
    let mut best: Option<MomentSolution> = None;
    for i in 0..grid_size {
        for j in i + 1..grid_size {
            for k in j + 1..grid_size {
                let cols = [g(s[i]), g(s[j]), g(s[k])];
                let Some(w) = solve3(&cols, &b) else { continue };
                if w.iter().any(|x| *x < -1e-12) {
                    continue;
                }
                let value: f64 = [s[i], s[j], s[k]].iter().zip(&w).map(|(x, p)| p * (0.5 * eta * x).exp()).sum();
                if best.as_ref().is_none_or(|b| value > b.value) {
                    let atoms = vec![(s[i], w[0]), (s[j], w[1]), (s[k], w[2])];
                    best = Some(MomentSolution { value, atoms });
                }
            }
        }
    }
    best.ok_or(Error::NoFeasibleAtomTriple)
}

fn check_instance(inst: &MomentProblemInstance, grid_size: usize) -> Result<()> {
    if grid_size < 100 {
        return Err(Error::PreconditionViolated("grid_size must be at least 100".into()));
    }
    if !(inst.eta_star > 0.0 && inst.a_over_n > 0.0 && inst.range_v > 0.0) {
        return Err(Error::InvalidArgument("eta*, a/n and V must be positive".into()));
    }
    if inst.feasibility() != Feasibility::Interior {
        let eta = inst.range_v * inst.eta_star;
        return Err(Error::InfeasibleInstance {
            a_over_n: inst.a_over_n / inst.range_v,
            threshold: feasibility_threshold(eta),
        });
    }
    Ok(())
}

/// Solve `sum_j w_j cols[j] = b` by Cramer's rule.
fn solve3(cols: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[2][1] * m[1][2]) - m[1][0] * (m[0][1] * m[2][2] - m[2][1] * m[0][2])
            + m[2][0] * (m[0][1] * m[1][2] - m[1][1] * m[0][2])
    };
    let d = det(*cols);
    let scale = cols.iter().flatten().fold(0f64, |a, x| a.max(x.abs()));
    if d.abs() <= 1e-13 * scale.powi(3) {
        return None;
    }
    let mut w = [0.0; 3];
    for (j, wj) in w.iter_mut().enumerate() {
        let mut m = *cols;
        m[j] = *b;
        *wj = det(m) / d;
    }
    Some(w)
}

/// Dense two-phase simplex for `max c.x` s.t. `A x = b`, `x >= 0`, with
/// Bland's rule. Returns `None` if infeasible.
fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    // Tableau rows: constraints with artificial columns n..n+m, rhs last.
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row: Vec<f64> = a[i].iter().map(|v| sign * v).collect();
            row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            row.push(sign * b[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        for _ in 0..50_000 {
            // reduced costs r_j = cost_j - cost_B B^{-1} A_j (maximisation)
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let r = cost[j] - (0..t.len()).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                if r > 1e-12 * (1.0 + cost[j].abs()) {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..t.len() {
                if t[i][j] > 1e-12 {
                    let ratio = t[i][cols] / t[i][j];
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            pivot(t, r, j);
            basis[r] = j;
        }
        false
    };

    // Phase one: maximise -sum(artificials).
    let mut cost1 = vec![0.0; cols];
    cost1[n..].iter_mut().for_each(|c| *c = -1.0);
    if !run(&mut t, &mut basis, &cost1, cols) {
        return None;
    }
    let infeas: f64 = (0..m).filter(|i| basis[*i] >= n).map(|i| t[i][cols]).sum();
    let scale = b.iter().fold(1f64, |a, x| a.max(x.abs()));
    if infeas > 1e-9 * scale {
        return None;
    }
    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|j| !basis.contains(j) && t[i][*j].abs() > 1e-9) {
                pivot(&mut t, i, j);
                basis[i] = j;
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let mut cost2 = c.to_vec();
    cost2.extend(std::iter::repeat_n(0.0, m));
    if !run(&mut t, &mut basis, &cost2, n) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        x[bi] = t[i][cols].max(0.0);
    }
    let value = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Some((value, x))
}

fn pivot(t: &mut [Vec<f64>], r: usize, j: usize) {
    let p = t[r][j];
    t[r].iter_mut().for_each(|v| *v /= p);
    let row = t[r].clone();
    for (i, ti) in t.iter_mut().enumerate() {
        if i != r && ti[j] != 0.0 {
            let f = ti[j];
            ti.iter_mut().zip(&row).for_each(|(v, rv)| *v -= f * rv);
        }
    }
}

/// Dual certificate `(d0, d1, d2)` for the moment problem at learning rate
/// `eta`: `-e^{(eta/2)s} >= d0 + d1 s + d2 e^{eta s}` on `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub eta: f64,
    pub c2: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    /// Smallest value of [`DualCertificate::slack`] on the check grid.
    pub min_slack: f64,
}

/// Number of grid points used to validate certificates.
pub const CERTIFICATE_GRID: usize = 10_000;

impl DualCertificate {
    /// `u(s) = 1 + c2 (e^{eta s} - 1) - e^{eta s / 2} + eta (1/2 - c2) s`,
    /// which is the certificate's slack `-e^{(eta/2)s} - d0 - d1 s - d2 e^{eta s}`.
    pub fn slack(&self, s: f64) -> f64 {
        let e = self.eta;
        1.0 + self.c2 * (e * s).exp_m1() - (0.5 * e * s).exp() + e * (0.5 - self.c2) * s
    }

    /// Dual objective `d0 - (a/n) d1 + d2`, a lower bound on `-max E[e^{(eta/2)S}]`.
    pub fn dual_value(&self, a_over_n: f64) -> f64 {
        self.d0 - a_over_n * self.d1 + self.d2
    }
}

/// `c2(eta)`: `sqrt(e) - e/2` for `eta <= 1`, else `1/2 - (sqrt(e) - 1)^2 / (2 eta)`.
pub fn certificate_c2(eta: f64) -> f64 {
    if eta <= 1.0 {
        0.5f64.exp() - std::f64::consts::E / 2.0
    } else {
        0.5 - half_sqrt_e_minus_one_sq() / eta
    }
}

/// Build and grid-check the certificate for `eta > 0`.
pub fn dual_certificate_for(eta: f64) -> Result<DualCertificate> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let c2 = certificate_c2(eta);
    let d2 = -c2;
    let mut cert = DualCertificate { eta, c2, d0: -d2 - 1.0, d1: -eta * (0.5 - c2), d2, min_slack: f64::INFINITY };
    let mut at = 0.0;
    for i in 0..CERTIFICATE_GRID {
        let s = -1.0 + 2.0 * i as f64 / (CERTIFICATE_GRID - 1) as f64;
        let u = cert.slack(s);
        if u < cert.min_slack {
            cert.min_slack = u;
            at = s;
        }
    }
    if cert.min_slack < -1e-9 {
        return Err(Error::CertificateInvalid { min_u: cert.min_slack, at });
    }
    Ok(cert)
}

/// Inputs of the rate-bound formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBoundInputs {
    /// Loss range `V`.
    pub v_range: f64,
    pub eta_star: f64,
    /// Model size `N`.
    pub n_models: u64,
    pub delta: f64,
    /// Sample size.
    pub n: u64,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
}

impl RateBoundInputs {
    fn check(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument("delta must lie in (0, 1)".into()));
        }
        if self.n == 0 || self.n_models == 0 {
            return Err(Error::InvalidArgument("n and N must be at least 1".into()));
        }
        if !(self.v_range > 0.0 && self.eta_star > 0.0) {
            return Err(Error::InvalidArgument("V and eta* must be positive".into()));
        }
        Ok(())
    }
}

/// `5 max(V, 1/eta*) (ln(1/delta) + ln N) / n`.
pub fn finite_class_bound(inp: &RateBoundInputs) -> Result<f64> {
    inp.check()?;
    let scale = inp.v_range.max(1.0 / inp.eta_star);
    Ok(5.0 * scale * ((1.0 / inp.delta).ln() + (inp.n_models as f64).ln()) / inp.n as f64)
}

/// The VC-type bound, evaluated exactly as a formula:
/// `(1/n) max{8 max(V, 1/eta*) (C ln(Kn) + ln(2/delta)),
///  2V (1080 C ln(2Kn) + 90 sqrt(ln(2/delta) C ln(2Kn)) + ln(2e/delta))} + 1/n`.
pub fn vc_type_bound(inp: &RateBoundInputs) -> Result<f64> {
    inp.check()?;
    let (Some(k), Some(c)) = (inp.k, inp.c) else {
        return Err(Error::PreconditionViolated("K and C are required".into()));
    };
    if inp.n < 5 || inp.delta > 0.5 || inp.v_range < 1.0 || k < 1.0 || !(c > 0.0) {
        return Err(Error::PreconditionViolated("need n >= 5, delta <= 1/2, V >= 1, K >= 1, C > 0".into()));
    }
    let n = inp.n as f64;
    let v = inp.v_range;
    let l2d = (2.0 / inp.delta).ln();
    let first = 8.0 * v.max(1.0 / inp.eta_star) * (c * (k * n).ln() + l2d);
    let lk = c * (2.0 * k * n).ln();
    let second = 2.0 * v * (1080.0 * lk + 90.0 * (l2d * lk).sqrt() + (2.0 * std::f64::consts::E / inp.delta).ln());
    Ok(first.max(second) / n + 1.0 / n)
}

/// Which branch of the VC-type maximum is active.
pub fn vc_type_branch(inp: &RateBoundInputs) -> Result<usize> {
    let total = vc_type_bound(inp)?;
    let n = inp.n as f64;
    let first = 8.0 * inp.v_range.max(1.0 / inp.eta_star) * (inp.c.unwrap() * (inp.k.unwrap() * n).ln() + (2.0 / inp.delta).ln());
    Ok(if ((total - 1.0 / n) * n - first).abs() <= 1e-9 * first { 0 } else { 1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntermediateRate {
    Rate(f64),
    NotApplicable,
}

/// Inverse of `x -> x v(x)` by bisection.
pub fn invert_x_v(v: &VFunction, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let g = |x: f64| x * v.eval(x);
    let mut hi = 1.0;
    let mut guard = 0;
    while g(hi) < y && guard < 2000 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `w(5 (ln(1/delta) + ln N) / (c n))` with `w` the inverse of `x -> x v(x)`,
/// provided `v(w(.)) <= 1 / (c V)` at that point.
pub fn intermediate_rate_bound(v: &VFunction, n_models: u64, delta: f64, n: u64, c: f64, v_range: f64) -> Result<IntermediateRate> {
    if !(delta > 0.0 && delta < 1.0) || n == 0 || n_models == 0 || !(c > 0.0) || !(v_range > 0.0) {
        return Err(Error::InvalidArgument("need delta in (0,1), n, N >= 1, c, V > 0".into()));
    }
    let y = 5.0 * ((1.0 / delta).ln() + (n_models as f64).ln()) / (c * n as f64);
    let w = invert_x_v(v, y);
    if v.eval(w) <= 1.0 / (c * v_range) {
        Ok(IntermediateRate::Rate(w))
    } else {
        Ok(IntermediateRate::NotApplicable)
    }
}

/// Log-spaced search range for [`optimize_eta_rate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for EtaGrid {
    fn default() -> Self {
        EtaGrid { lo: 1e-6, hi: 1e3, points: 400 }
    }
}

/// Minimise `ln N / (eta n) + eps(eta)` over a log grid, then refine by
/// golden-section search between the neighbours of the best grid point.
pub fn optimize_eta_rate(eps_of_eta: impl Fn(f64) -> f64, n_models: u64, n: u64) -> (f64, f64) {
    optimize_eta_rate_on(eps_of_eta, n_models, n, EtaGrid::default())
}

pub fn optimize_eta_rate_on(eps_of_eta: impl Fn(f64) -> f64, n_models: u64, n: u64, grid: EtaGrid) -> (f64, f64) {
    let ln_n = (n_models as f64).ln();
    let obj = |eta: f64| ln_n / (eta * n as f64) + eps_of_eta(eta);
    let (llo, lhi) = (grid.lo.ln(), grid.hi.ln());
    let etas: Vec<f64> = (0..grid.points)
        .map(|i| (llo + (lhi - llo) * i as f64 / (grid.points - 1) as f64).exp())
        .collect();
    let vals: Vec<f64> = etas.iter().map(|e| obj(*e)).collect();
    let best = (0..etas.len()).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let (mut a, mut b) = (etas[best.saturating_sub(1)].ln(), etas[(best + 1).min(etas.len() - 1)].ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |l: f64| obj(l.exp());
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let mut eta = (0.5 * (a + b)).exp();
    let mut rate = obj(eta);
    if vals[best] < rate {
        eta = etas[best];
        rate = vals[best];
    }
    (eta, rate)
}
