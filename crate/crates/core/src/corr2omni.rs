//! corr2Omni: choose WOMNI weights whose induced correlation matches a
//! target, by stress majorization with a constrained QP at every step.
//!
//! The configuration is `Ã = 𝓐L` with `LLᵀ = R'`. Rows of `Ã` are at squared
//! distance `2m²(1 - 𝔯_ij)`, so matching the target correlation is a
//! constrained MDS problem. WOMNI row sums are parametrized by the pair weights
//! `x_(i,j) = α(i, j)`, `i < j`, which makes the row-sum and pair-sum
//! identities hold by construction; the QP only carries bounds and dominance.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corr_theory::{induced_correlation, CorrRole, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::omni::{
    classical_omni, alpha_matrix, pair_index, pairs_from_alpha, validate_with_slack, womni_alpha_from_pairs,
    womni_from_alpha, OmniWeights, WeightRowSums,
};
use crate::qp::{self, QpInstance, QpOptions};
use crate::rng;

pub const DEFAULT_RIDGE_SCHEDULE: [f64; 6] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2];
const PIVOT_TOL: f64 = 1e-14;
const OUTPUT_SLACK: f64 = 1e-9;

/// Cholesky factor of `R' = (1 - ε)R + εI` for the first `ε` in the schedule
/// that factors. Returns `(L, ε)`.
pub fn cholesky_regularized(r: &CorrelationMatrix, schedule: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let m = r.m();
    for &eps in schedule {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidArgument(format!("ridge value {eps} outside [0, 1]")));
        }
        let rr = ridge(r.values(), eps);
        if let Some(l) = cholesky(&rr) {
            if eps > 0.0 {
                log::warn!("inherent correlation is not positive definite; using ridge {eps:e}");
            }
            debug_assert_eq!(l.nrows(), m);
            return Ok((l, eps));
        }
    }
    Err(Error::RidgeScheduleExhausted(schedule.to_vec()))
}

fn ridge(r: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let m = r.nrows();
    r * (1.0 - eps) + DMatrix::identity(m, m) * eps
}

fn cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = a.nrows();
    let mut l = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= PIVOT_TOL {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..m {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Target dissimilarities, pair weights and the (regularized) inherent factor.
#[derive(Debug, Clone)]
pub struct StressProblem {
    delta: DMatrix<f64>,
    w: DMatrix<f64>,
    l: DMatrix<f64>,
    r_reg: DMatrix<f64>,
    ridge: f64,
}

impl StressProblem {
    /// `w = None` weighs every pair by one.
    pub fn new(
        inherent: &CorrelationMatrix,
        target: &CorrelationMatrix,
        w: Option<&DMatrix<f64>>,
        ridge_schedule: &[f64],
    ) -> Result<Self> {
        let m = inherent.m();
        if target.m() != m {
            return Err(Error::Dimension(format!("R is {m}x{m}, target is {0}x{0}", target.m())));
        }
        if m < 2 {
            return Err(Error::InvalidArgument("corr2omni needs at least two graphs".into()));
        }
        let w = match w {
            Some(w) => {
                if w.nrows() != m || w.ncols() != m {
                    return Err(Error::Dimension(format!("W is {}x{}, expected {m}x{m}", w.nrows(), w.ncols())));
                }
                for i in 0..m {
                    for j in 0..m {
                        if !w[(i, j)].is_finite() || w[(i, j)] < 0.0 {
                            return Err(Error::InvalidArgument(format!("W({}, {}) must be finite and >= 0", i + 1, j + 1)));
                        }
                        if (w[(i, j)] - w[(j, i)]).abs() > 1e-12 * w.amax().max(1.0) {
                            return Err(Error::Asymmetric {
                                i: i + 1,
                                j: j + 1,
                                upper: w[(i, j)],
                                lower: w[(j, i)],
                            });
                        }
                    }
                }
                let mut w = (w + w.transpose()) * 0.5;
                w.fill_diagonal(0.0);
                w
            }
            None => DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { 1.0 }),
        };
        let scale = 2.0 * (m * m) as f64;
        let delta = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                0.0
            } else {
                (scale * (1.0 - target.get(i, j))).max(0.0).sqrt()
            }
        });
        let (l, ridge_used) = cholesky_regularized(inherent, ridge_schedule)?;
        Ok(Self {
            delta,
            w,
            r_reg: ridge(inherent.values(), ridge_used),
            l,
            ridge: ridge_used,
        })
    }

    pub fn m(&self) -> usize {
        self.delta.nrows()
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Lower-triangular factor of `R'`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `R'`, the inherent correlation after the ridge.
    pub fn inherent(&self) -> &DMatrix<f64> {
        &self.r_reg
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// `V_ij = -w_ij`, `V_ii = Σ_j w_ij`.
    pub fn weight_laplacian(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut v = -&self.w;
        for i in 0..m {
            v[(i, i)] = self.w.row(i).sum();
        }
        v
    }
}

/// `σ(Ã) = Σ_{i<j} w_ij (δ_ij - ‖Ã_i - Ã_j‖)²`.
pub fn stress(config: &DMatrix<f64>, prob: &StressProblem) -> Result<f64> {
    let m = prob.m();
    if config.nrows() != m {
        return Err(Error::Dimension(format!("configuration has {} rows, expected {m}", config.nrows())));
    }
    let mut s = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let d = (config.row(i) - config.row(j)).norm();
            s += prob.w[(i, j)] * (prob.delta[(i, j)] - d).powi(2);
        }
    }
    Ok(s)
}

/// Stress of a row-sum matrix, evaluated through `R'` without forming `Ã`.
pub fn alpha_stress(alpha: &DMatrix<f64>, prob: &StressProblem) -> f64 {
    let d = alpha_distances(alpha, &prob.r_reg);
    let m = prob.m();
    let mut s = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            s += prob.w[(i, j)] * (prob.delta[(i, j)] - d[(i, j)]).powi(2);
        }
    }
    s
}

fn alpha_distances(alpha: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let m = alpha.nrows();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let b = (alpha.row(i) - alpha.row(j)).transpose();
            let v = b.dot(&(r * &b)).max(0.0).sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn b_from_distances(d: &DMatrix<f64>, prob: &StressProblem) -> DMatrix<f64> {
    let m = prob.m();
    let mut b = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j && d[(i, j)] > 0.0 {
                b[(i, j)] = -prob.w[(i, j)] * prob.delta[(i, j)] / d[(i, j)];
            }
        }
    }
    for i in 0..m {
        b[(i, i)] = -b.row(i).sum();
    }
    b
}

/// Majorization matrix at `Ã_prev`: `-w δ / d` off the diagonal (zero for
/// coincident rows), minus the row sum on it.
pub fn b_matrix(config: &DMatrix<f64>, prob: &StressProblem) -> DMatrix<f64> {
    let m = prob.m();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = (config.row(i) - config.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    b_from_distances(&d, prob)
}

/// One SMACOF iterate.
#[derive(Debug, Clone)]
pub struct MajorizationState {
    /// Pair weights `α(i, j)`, `i < j`.
    pub x: DVector<f64>,
    pub iter: usize,
    pub sigma: f64,
    /// `B` evaluated at this iterate.
    pub b: DMatrix<f64>,
}

impl MajorizationState {
    pub fn alpha(&self, m: usize) -> DMatrix<f64> {
        womni_alpha_from_pairs(m, self.x.as_slice())
    }

    /// `Ã = 𝓐L`.
    pub fn config(&self, prob: &StressProblem) -> DMatrix<f64> {
        self.alpha(prob.m()) * &prob.l
    }
}

/// The WOMNI-constrained majorizer QP for one problem. The quadratic part
/// does not depend on the iterate, so it is assembled once.
#[derive(Debug, Clone)]
pub struct WomniQp {
    inst: QpInstance,
    a0: DMatrix<f64>,
    pairs: Vec<(usize, usize)>,
    v: DMatrix<f64>,
    eps_dom: f64,
    opts: QpOptions,
}

impl WomniQp {
    pub fn new(prob: &StressProblem, eps_dom: f64, opts: QpOptions) -> Result<Self> {
        let m = prob.m();
        if !(eps_dom >= 0.0 && eps_dom.is_finite()) {
            return Err(Error::InvalidArgument(format!("dominance margin {eps_dom} must be >= 0")));
        }
        let pairs = pair_index(m);
        let p = pairs.len();
        let v = prob.weight_laplacian();
        let r = &prob.r_reg;
        let mut pm = DMatrix::zeros(p, p);
        for (a, &(i, j)) in pairs.iter().enumerate() {
            for (b, &(k, l)) in pairs.iter().enumerate().skip(a) {
                let uvu = v[(i, k)] + v[(i, l)] + v[(j, k)] + v[(j, l)];
                let vrv = r[(l, j)] - r[(l, i)] - r[(k, j)] + r[(k, i)];
                let val = 2.0 * uvu * vrv;
                pm[(a, b)] = val;
                pm[(b, a)] = val;
            }
        }
        let a0 = womni_alpha_from_pairs(m, &vec![0.0; p]);

        // 0 <= x <= 1, then α(k, q) - α(k, k) <= -ε_dom for q != k
        let rows = 2 * p + m * (m - 1);
        let mut g = DMatrix::zeros(rows, p);
        let mut h = DVector::zeros(rows);
        for a in 0..p {
            g[(a, a)] = -1.0;
            g[(p + a, a)] = 1.0;
            h[p + a] = 1.0;
        }
        let mut row = 2 * p;
        for k in 0..m {
            for q in (0..m).filter(|&q| q != k) {
                for (a, &(i, j)) in pairs.iter().enumerate() {
                    g[(row, a)] = pair_derivative(i, j, k, q) - pair_derivative(i, j, k, k);
                }
                h[row] = -eps_dom - (a0[(k, q)] - a0[(k, k)]);
                row += 1;
            }
        }
        let inst = QpInstance::new(pm, DVector::zeros(p))?.with_inequalities(g, h)?;
        Ok(Self {
            inst,
            a0,
            pairs,
            v,
            eps_dom,
            opts,
        })
    }

    pub fn eps_dom(&self) -> f64 {
        self.eps_dom
    }

    pub fn instance(&self) -> &QpInstance {
        &self.inst
    }

    /// Largest violation of bounds, dominance, row sums and pair sums.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let m = self.a0.nrows();
        let a = womni_alpha_from_pairs(m, x.as_slice());
        let mut worst = 0.0f64;
        for &v in x.iter() {
            worst = worst.max(-v).max(v - 1.0);
        }
        for k in 0..m {
            worst = worst.max((a.row(k).sum() - m as f64).abs());
            for q in 0..m {
                worst = worst.max(-a[(k, q)]);
                if q != k {
                    worst = worst.max(a[(k, q)] - a[(k, k)] + self.eps_dom);
                    worst = worst.max((a[(k, q)] + a[(q, k)] - 1.0).abs());
                }
            }
        }
        worst
    }

    fn linear_term(&self, prob: &StressProblem, alpha_prev: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
        let mm = (&self.v * &self.a0 - b * alpha_prev) * &prob.r_reg;
        DVector::from_iterator(
            self.pairs.len(),
            self.pairs
                .iter()
                .map(|&(i, j)| 2.0 * (mm[(i, j)] - mm[(i, i)] + mm[(j, j)] - mm[(j, i)])),
        )
    }
}

/// `∂α(k, q) / ∂x_(i,j)` under the pair parametrization.
fn pair_derivative(i: usize, j: usize, k: usize, q: usize) -> f64 {
    // D = (e_i + e_j)(e_j - e_i)ᵀ
    let u = if k == i || k == j { 1.0 } else { 0.0 };
    let v = if q == j {
        1.0
    } else if q == i {
        -1.0
    } else {
        0.0
    };
    u * v
}

/// Evaluates the stress and `B` at pair weights `x`.
pub fn state_at(x: DVector<f64>, iter: usize, prob: &StressProblem) -> MajorizationState {
    let alpha = womni_alpha_from_pairs(prob.m(), x.as_slice());
    let d = alpha_distances(&alpha, &prob.r_reg);
    let b = b_from_distances(&d, prob);
    let sigma = alpha_stress(&alpha, prob);
    MajorizationState { x, iter, sigma, b }
}

/// Minimizes the majorizer at `state` over the WOMNI constraint set.
pub fn majorize_step(state: &MajorizationState, prob: &StressProblem, qp_: &mut WomniQp) -> Result<MajorizationState> {
    let m = prob.m();
    let alpha_prev = state.alpha(m);
    let q = qp_.linear_term(prob, &alpha_prev, &state.b);
    qp_.inst.set_q(q)?;
    let sol = qp::solve_from(&qp_.inst, &qp_.opts, Some(&state.x))?;
    let sol = sol.into_result().map_err(|e| match e {
        Error::Infeasible(v) => {
            log::error!(
                "majorizer QP infeasible at iteration {}: dominance margin {} cannot be met (phase-1 value {v:e})",
                state.iter + 1,
                qp_.eps_dom
            );
            Error::Infeasible(v)
        }
        other => other,
    })?;
    let x = sol.x.map(|v| v.clamp(0.0, 1.0));
    Ok(state_at(x, state.iter + 1, prob))
}

/// Starting point of the iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Init {
    #[default]
    Classical,
    /// A WOMNI row-sum matrix, e.g. the solution of a smaller problem.
    Alpha(WeightRowSums),
}

#[derive(Debug, Clone)]
pub struct Corr2OmniOptions {
    /// Pair weights; `None` weighs all pairs by one.
    pub weights: Option<DMatrix<f64>>,
    pub max_iter: usize,
    /// Stop once `|σ_t - σ_{t-1}| <= eps_stress`.
    pub eps_stress: f64,
    /// Dominance margin; `None` means `1e-3 · m`.
    pub eps_dom: Option<f64>,
    pub ridge_schedule: Vec<f64>,
    pub init: Init,
    /// Random starts tried in addition to `init`.
    pub restarts: usize,
    pub seed: u64,
    pub qp: QpOptions,
}

impl Default for Corr2OmniOptions {
    fn default() -> Self {
        Self {
            weights: None,
            max_iter: 5000,
            eps_stress: 0.0,
            eps_dom: None,
            ridge_schedule: DEFAULT_RIDGE_SCHEDULE.to_vec(),
            init: Init::Classical,
            restarts: 8,
            seed: 0,
            qp: QpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressLogEntry {
    pub iter: usize,
    pub sigma: f64,
    pub max_constraint_violation: f64,
}

#[derive(Debug, Clone)]
pub struct Corr2OmniResult {
    pub alpha: WeightRowSums,
    pub weights: OmniWeights,
    /// Induced correlation under `R'`.
    pub induced: CorrelationMatrix,
    pub stress: f64,
    pub stress_log: Vec<StressLogEntry>,
    /// Ridge applied to the inherent correlation.
    pub ridge: f64,
    /// 0 for `init`, `r` for the `r`-th random start.
    pub start: usize,
}

/// Runs constrained SMACOF from `x0` and returns the final state and log.
pub fn run_smacof(
    x0: DVector<f64>,
    prob: &StressProblem,
    qp_: &mut WomniQp,
    max_iter: usize,
    eps_stress: f64,
) -> Result<(MajorizationState, Vec<StressLogEntry>)> {
    let mut state = state_at(x0, 0, prob);
    let mut log_ = vec![StressLogEntry {
        iter: 0,
        sigma: state.sigma,
        max_constraint_violation: qp_.max_violation(&state.x),
    }];
    for _ in 0..max_iter {
        let next = majorize_step(&state, prob, qp_)?;
        if next.sigma > state.sigma + 1e-10 * (1.0 + state.sigma) {
            log::debug!(
                "stress rose from {} to {} at iteration {}; keeping the previous iterate",
                state.sigma,
                next.sigma,
                next.iter
            );
            break;
        }
        let delta = (state.sigma - next.sigma).abs();
        log_.push(StressLogEntry {
            iter: next.iter,
            sigma: next.sigma,
            max_constraint_violation: qp_.max_violation(&next.x),
        });
        state = next;
        if delta <= eps_stress {
            break;
        }
    }
    Ok((state, log_))
}

/// Adds one graph to a WOMNI row-sum matrix, joined to every existing graph
/// with pair weight ½.
pub fn extend_alpha(alpha: &WeightRowSums) -> Result<WeightRowSums> {
    let m = alpha.m();
    let x: Vec<f64> = pair_index(m + 1)
        .into_iter()
        .map(|(i, j)| if j < m { alpha.get(i, j) } else { 0.5 })
        .collect();
    WeightRowSums::new(womni_alpha_from_pairs(m + 1, &x))
}

/// Random feasible pair weights: `x = ½ + λ(u - ½)` with `λ` halved until
/// dominance holds with margin `eps_dom`.
fn random_start(m: usize, eps_dom: f64, rng: &mut impl RngCore) -> DVector<f64> {
    let p = m * (m - 1) / 2;
    let u: Vec<f64> = (0..p).map(|_| rng::uniform(rng)).collect();
    let mut lambda = 1.0;
    loop {
        let x: Vec<f64> = u.iter().map(|&v| 0.5 + lambda * (v - 0.5)).collect();
        let a = womni_alpha_from_pairs(m, &x);
        let ok = (0..m).all(|k| (0..m).all(|q| q == k || a[(k, q)] - a[(k, k)] <= -eps_dom));
        if ok || lambda < 1e-12 {
            return DVector::from_vec(x);
        }
        lambda *= 0.5;
    }
}

/// Finds WOMNI weights whose induced correlation under `R_inherent` is as
/// close as possible, in stress, to `R_target`.
pub fn corr2omni(inherent: &CorrelationMatrix, target: &CorrelationMatrix, opts: &Corr2OmniOptions) -> Result<Corr2OmniResult> {
    let prob = StressProblem::new(inherent, target, opts.weights.as_ref(), &opts.ridge_schedule)?;
    let m = prob.m();
    let eps_dom = opts.eps_dom.unwrap_or(1e-3 * m as f64);
    let qp_ = WomniQp::new(&prob, eps_dom, opts.qp)?;

    let first = match &opts.init {
        Init::Classical => pairs_from_alpha(alpha_matrix(&classical_omni(m)).matrix()),
        Init::Alpha(a) => {
            if a.m() != m {
                return Err(Error::Dimension(format!("initial 𝓐 is {0}x{0}, expected {m}x{m}", a.m())));
            }
            let x = pairs_from_alpha(a.matrix());
            let viol = qp_.max_violation(&DVector::from_column_slice(&x));
            if viol > OUTPUT_SLACK {
                return Err(Error::InvalidWeights(format!(
                    "initial 𝓐 is not a WOMNI row-sum matrix with dominance margin {eps_dom} (violation {viol:e})"
                )));
            }
            x
        }
    };
    let mut starts = vec![DVector::from_vec(first)];
    for r in 0..opts.restarts {
        let mut g = rng::stream(opts.seed, r as u64 + 1);
        starts.push(random_start(m, eps_dom, &mut g));
    }

    let runs: Vec<Result<(MajorizationState, Vec<StressLogEntry>)>> = starts
        .into_par_iter()
        .map(|x0| {
            let mut local = qp_.clone();
            run_smacof(x0, &prob, &mut local, opts.max_iter, opts.eps_stress)
        })
        .collect();

    let mut best: Option<(usize, MajorizationState, Vec<StressLogEntry>)> = None;
    let mut last_err = None;
    for (idx, run) in runs.into_iter().enumerate() {
        match run {
            Ok((state, log_)) => {
                log::debug!("start {idx}: final stress {}", state.sigma);
                if best.as_ref().is_none_or(|(_, b, _)| state.sigma < b.sigma) {
                    best = Some((idx, state, log_));
                }
            }
            Err(e) => {
                log::warn!("start {idx} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    let Some((start, state, stress_log)) = best else {
        return Err(last_err.unwrap_or(Error::Infeasible(f64::NAN)));
    };

    let alpha = WeightRowSums::new(state.alpha(m))?;
    let weights = womni_from_alpha(&alpha)?;
    let report = validate_with_slack(&weights, OUTPUT_SLACK);
    if !report.is_ok() {
        return Err(Error::InvalidWeights(report.to_string()));
    }
    let r_reg = CorrelationMatrix::new(prob.r_reg.clone(), CorrRole::Inherent)?;
    let induced = induced_correlation(&alpha, &r_reg)?;
    Ok(Corr2OmniResult {
        alpha,
        weights,
        induced,
        stress: state.sigma,
        stress_log,
        ridge: prob.ridge,
        start,
    })
}

/// Rounds entries within 5e-5 of a four-decimal value to that value; for
/// reports only.
pub fn snap_for_report(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.map(|v| {
        let r = (v * 1e4).round() / 1e4;
        if (v - r).abs() <= 5e-5 {
            r
        } else {
            v
        }
    })
}

/// Whether `a` equals `b` after relabeling graphs, i.e. `a = PbPᵀ` for some
/// permutation `P`, entrywise within `tol`.
pub fn equal_up_to_relabeling(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    let m = a.nrows();
    if b.nrows() != m || a.ncols() != m || b.ncols() != m {
        return false;
    }
    let mut perm: Vec<usize> = (0..m).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        let m = perm.len();
        if k == m {
            return true;
        }
        for s in k..m {
            perm.swap(k, s);
            let ok = (0..=k).all(|i| {
                (a[(perm[i], perm[k])] - b[(i, k)]).abs() <= tol && (a[(perm[k], perm[i])] - b[(k, i)]).abs() <= tol
            });
            if ok && rec(k + 1, perm, a, b, tol) {
                return true;
            }
            perm.swap(k, s);
        }
        false
    }
    rec(0, &mut perm, a, b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(m: usize, v: f64) -> CorrelationMatrix {
        CorrelationMatrix::flat(m, v, CorrRole::Target).unwrap()
    }

    fn ident(m: usize) -> CorrelationMatrix {
        CorrelationMatrix::identity(m, CorrRole::Inherent)
    }

    #[test]
    fn cholesky_cases() {
        let (l, e) = cholesky_regularized(&ident(3), &DEFAULT_RIDGE_SCHEDULE).unwrap();
        assert_eq!(e, 0.0);
        assert_relative_eq!(l, DMatrix::identity(3, 3));

        let r = CorrelationMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]), CorrRole::Inherent).unwrap();
        let (l, _) = cholesky_regularized(&r, &DEFAULT_RIDGE_SCHEDULE).unwrap();
        assert_relative_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]), epsilon = 1e-15);

        let j = CorrelationMatrix::new(DMatrix::from_element(3, 3, 1.0), CorrRole::Inherent).unwrap();
        let (l, e) = cholesky_regularized(&j, &DEFAULT_RIDGE_SCHEDULE).unwrap();
        assert_eq!(e, 1e-10);
        let rr = ridge(j.values(), e);
        assert!((&l * l.transpose() - rr).amax() <= 1e-10);

        assert!(matches!(
            cholesky_regularized(&j, &[0.0]),
            Err(Error::RidgeScheduleExhausted(_))
        ));
    }

    #[test]
    fn stress_basics() {
        let prob = StressProblem::new(&ident(3), &flat(3, 0.5), None, &[0.0]).unwrap();
        // equilateral triangle with side δ = √(2·9·0.5) = 3
        let s3 = 3.0f64;
        let cfg = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, s3, 0.0, s3 / 2.0, s3 * 0.75f64.sqrt()]);
        assert!(stress(&cfg, &prob).unwrap() < 1e-24);

        let moved = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 4.0, 0.0, 2.0, 1.0]);
        let s = stress(&moved, &prob).unwrap();
        let w2 = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 2.0 });
        let prob2 = StressProblem::new(&ident(3), &flat(3, 0.5), Some(&w2), &[0.0]).unwrap();
        assert_relative_eq!(stress(&moved, &prob2).unwrap(), 2.0 * s, epsilon = 1e-12);
    }

    #[test]
    fn classical_stress_matches_known_value() {
        let prob = StressProblem::new(&ident(30), &flat(30, 0.54), None, &[0.0]).unwrap();
        let a = alpha_matrix(&classical_omni(30));
        let s = alpha_stress(a.matrix(), &prob);
        assert!((s - 24873.56).abs() < 0.005, "{s}");
        let cfg = a.matrix() * prob.factor();
        assert_relative_eq!(stress(&cfg, &prob).unwrap(), s, max_relative = 1e-12);
    }

    #[test]
    fn b_matrix_cases() {
        let prob = StressProblem::new(&ident(3), &flat(3, 0.5), None, &[0.0]).unwrap();
        let s3 = 3.0f64;
        let cfg = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, s3, 0.0, s3 / 2.0, s3 * 0.75f64.sqrt()]);
        let b = b_matrix(&cfg, &prob);
        let expect = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { -1.0 });
        assert_relative_eq!(b, expect, epsilon = 1e-12);

        let coincident = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let b = b_matrix(&coincident, &prob);
        assert_eq!(b[(0, 1)], 0.0);
        for i in 0..3 {
            assert!(b.row(i).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_with_unit_weights() {
        let prob = StressProblem::new(&ident(4), &flat(4, 0.7), None, &[0.0]).unwrap();
        let v = prob.weight_laplacian();
        assert_relative_eq!(v, DMatrix::identity(4, 4) * 4.0 - DMatrix::from_element(4, 4, 1.0));
        // Σ_{i<j} d²_ij = tr(ÃᵀVÃ)
        let cfg = DMatrix::from_fn(4, 3, |i, j| ((i * 3 + j) as f64).sin());
        let direct: f64 = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| (cfg.row(i) - cfg.row(j)).norm_squared())
            .sum();
        assert_relative_eq!((cfg.transpose() * &v * &cfg).trace(), direct, epsilon = 1e-12);
    }

    #[test]
    fn qp_objective_is_the_majorizer() {
        // ½xᵀPx + qᵀx + const = tr(ÃᵀVÃ) - 2tr(ÃᵀBÃ_prev)
        let r = CorrelationMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]),
            CorrRole::Inherent,
        )
        .unwrap();
        let prob = StressProblem::new(&r, &flat(3, 0.7), None, &[0.0]).unwrap();
        let mut w = WomniQp::new(&prob, 0.003, QpOptions::default()).unwrap();
        let prev = state_at(DVector::from_vec(vec![0.2, 0.7, 0.4]), 0, &prob);
        let q = w.linear_term(&prob, &prev.alpha(3), &prev.b);
        w.inst.set_q(q).unwrap();
        let v = prob.weight_laplacian();
        let cfg_prev = prev.config(&prob);
        let tau = |x: &DVector<f64>| {
            let c = womni_alpha_from_pairs(3, x.as_slice()) * prob.factor();
            (c.transpose() * &v * &c).trace() - 2.0 * (c.transpose() * &prev.b * &cfg_prev).trace()
        };
        let xs = [
            DVector::from_vec(vec![0.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.5, 0.1, 0.9]),
            DVector::from_vec(vec![1.0, 0.3, 0.6]),
        ];
        let c0 = tau(&xs[0]) - w.inst.objective(&xs[0]);
        for x in &xs[1..] {
            assert_relative_eq!(tau(x) - w.inst.objective(x), c0, epsilon = 1e-10);
        }
    }

    #[test]
    fn configuration_distance_is_induced_correlation() {
        let r = CorrelationMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]),
            CorrRole::Inherent,
        )
        .unwrap();
        let prob = StressProblem::new(&r, &flat(3, 0.7), None, &[0.0]).unwrap();
        let st = state_at(DVector::from_vec(vec![0.2, 0.7, 0.4]), 0, &prob);
        let cfg = st.config(&prob);
        let ind = induced_correlation(&WeightRowSums::new(st.alpha(3)).unwrap(), &r).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let v = 1.0 - (cfg.row(i) - cfg.row(j)).norm_squared() / 18.0;
                assert!((v - ind.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_step_from_classical_decreases_stress_when_asymmetric() {
        // flat targets leave the classical start fixed; a non-flat one moves it
        let t = CorrelationMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.7, 0.67, 0.7, 1.0, 0.69, 0.67, 0.69, 1.0]),
            CorrRole::Target,
        )
        .unwrap();
        let prob = StressProblem::new(&ident(3), &t, None, &[0.0]).unwrap();
        let mut w = WomniQp::new(&prob, 0.003, QpOptions::default()).unwrap();
        let s0 = state_at(DVector::from_element(3, 0.5), 0, &prob);
        let s1 = majorize_step(&s0, &prob, &mut w).unwrap();
        assert!(s1.sigma < s0.sigma - 1e-6, "{} {}", s0.sigma, s1.sigma);
        assert!(w.max_violation(&s1.x) <= 1e-8);
    }

    #[test]
    fn self_target_is_a_fixed_point() {
        let x = DVector::from_vec(vec![0.2, 0.7, 0.4, 0.35, 0.6, 0.45]);
        let a = WeightRowSums::new(womni_alpha_from_pairs(4, x.as_slice())).unwrap();
        let r = ident(4);
        let t = induced_correlation(&a, &r).unwrap().with_role(CorrRole::Target);
        let opts = Corr2OmniOptions {
            max_iter: 50,
            restarts: 0,
            init: Init::Alpha(a.clone()),
            ..Default::default()
        };
        let res = corr2omni(&r, &t, &opts).unwrap();
        assert!(res.stress <= 1e-10, "{}", res.stress);
    }

    #[test]
    fn m3_recovers_circulant() {
        let opts = Corr2OmniOptions {
            max_iter: 500,
            ..Default::default()
        };
        let res = corr2omni(&ident(3), &flat(3, 2.0 / 3.0), &opts).unwrap();
        for v in res.induced.off_diagonal() {
            assert!((v - 2.0 / 3.0).abs() < 1e-3, "{v}");
        }
        let target = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 1.0, 0.0, 2.0]);
        assert!(equal_up_to_relabeling(res.alpha.matrix(), &target, 1e-3), "{}", res.alpha.matrix());
    }

    #[test]
    fn two_graphs_are_fixed() {
        let res = corr2omni(
            &ident(2),
            &flat(2, 0.9),
            &Corr2OmniOptions {
                max_iter: 5,
                restarts: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(res.induced.get(0, 1), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn extend_and_relabel() {
        let a = WeightRowSums::new(DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 1.0, 0.0, 2.0])).unwrap();
        let e = extend_alpha(&a).unwrap();
        assert_eq!(e.m(), 4);
        assert_relative_eq!(e.get(0, 0), 2.5);
        assert_relative_eq!(e.get(3, 3), 2.5);
        assert_relative_eq!(e.get(0, 1), 1.0);
        let p = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 1.0, 2.0, 0.0, 0.0, 1.0, 2.0]);
        assert!(equal_up_to_relabeling(a.matrix(), &p, 1e-12));
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0, 2.0]);
        assert!(!equal_up_to_relabeling(a.matrix(), &q, 1e-12));
    }

    #[test]
    fn snapping() {
        let a = DMatrix::from_row_slice(1, 3, &[2.42594, 0.1, 0.123456]);
        let s = snap_for_report(&a);
        assert_eq!(s[(0, 0)], 2.4259);
        assert_eq!(s[(0, 1)], 0.1);
        assert_relative_eq!(s[(0, 2)], 0.1235);
    }
}
