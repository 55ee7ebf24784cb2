//! Correlation induced by Omnibus weightings, flat-correlation bounds and
//! the closed-form optimality systems behind them.
//!
//! For row sums `𝓐` and inherent correlation `R`, the embeddings of graphs
//! `s₁` and `s₂` are asymptotically correlated at
//!
//! ```text
//! 𝔯(s₁, s₂) = 1 - βᵀRβ / (2m²),   β_q = α(s₁, q) - α(s₂, q).
//! ```

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::omni::{check_womni_alpha, pair_index, womni_alpha_from_pairs, WeightRowSums};
use crate::rng;

const CORR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrRole {
    Inherent,
    Target,
    Induced,
}

/// Symmetric `m x m` matrix with unit diagonal and entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
    role: CorrRole,
}

impl CorrelationMatrix {
    /// Validates the matrix. Asymmetry below 1e-12 is averaged away.
    pub fn new(values: DMatrix<f64>, role: CorrRole) -> Result<Self> {
        let m = values.nrows();
        if values.ncols() != m || m == 0 {
            return Err(Error::Dimension(format!(
                "correlation matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let mut v = values;
        for i in 0..m {
            for j in 0..m {
                if !v[(i, j)].is_finite() {
                    return Err(Error::NonFinite { i: i + 1, j: j + 1 });
                }
            }
            if (v[(i, i)] - 1.0).abs() > CORR_TOL {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry {} is {}, expected 1",
                    i + 1,
                    v[(i, i)]
                )));
            }
            v[(i, i)] = 1.0;
            for j in (i + 1)..m {
                let (a, b) = (v[(i, j)], v[(j, i)]);
                if (a - b).abs() > CORR_TOL {
                    return Err(Error::Asymmetric {
                        i: i + 1,
                        j: j + 1,
                        upper: a,
                        lower: b,
                    });
                }
                let avg = 0.5 * (a + b);
                if avg.abs() > 1.0 + CORR_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "correlation ({}, {}) = {avg} outside [-1, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                let avg = avg.clamp(-1.0, 1.0);
                v[(i, j)] = avg;
                v[(j, i)] = avg;
            }
        }
        Ok(Self { values: v, role })
    }

    pub fn identity(m: usize, role: CorrRole) -> Self {
        Self {
            values: DMatrix::identity(m, m),
            role,
        }
    }

    /// `ρJ + (1 - ρ)I`.
    pub fn flat(m: usize, rho: f64, role: CorrRole) -> Result<Self> {
        Self::new(
            DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho }),
            role,
        )
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn role(&self) -> CorrRole {
        self.role
    }

    pub fn with_role(mut self, role: CorrRole) -> Self {
        self.role = role;
        self
    }

    /// Off-diagonal entries of the upper triangle, row by row.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let m = self.m();
        (0..m)
            .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
            .map(|(i, j)| self.values[(i, j)])
            .collect()
    }
}

/// `β_q = α(s₁, q) - α(s₂, q)`.
pub fn beta_vector(alpha: &WeightRowSums, s1: usize, s2: usize) -> DVector<f64> {
    let a = alpha.matrix();
    (a.row(s1) - a.row(s2)).transpose()
}

/// Induced correlation of every graph pair.
pub fn induced_correlation(alpha: &WeightRowSums, r: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    let m = alpha.m();
    if r.m() != m {
        return Err(Error::Dimension(format!("𝓐 is {m}x{m}, R is {}x{}", r.m(), r.m())));
    }
    let scale = 2.0 * (m * m) as f64;
    let mut out = DMatrix::identity(m, m);
    for s1 in 0..m {
        for s2 in (s1 + 1)..m {
            let beta = beta_vector(alpha, s1, s2);
            let v = 1.0 - beta.dot(&(r.values() * &beta)) / scale;
            out[(s1, s2)] = v;
            out[(s2, s1)] = v;
        }
    }
    // the quadratic form can leave [-1, 1] for non-WOMNI inputs; report as is
    Ok(CorrelationMatrix {
        values: out,
        role: CorrRole::Induced,
    })
}

/// Flat-`ρ` shortcut: `1 - (1 - ρ)‖β‖² / (2m²)`.
pub fn flat_induced(alpha: &WeightRowSums, rho: f64, s1: usize, s2: usize) -> f64 {
    let m = alpha.m() as f64;
    1.0 - (1.0 - rho) * beta_vector(alpha, s1, s2).norm_squared() / (2.0 * m * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatCheck {
    pub is_flat: bool,
    /// Mean off-diagonal value.
    pub value: f64,
    /// Largest deviation of an off-diagonal entry from `value`.
    pub max_dev: f64,
}

pub fn flat_check(r: &CorrelationMatrix, tol: f64) -> FlatCheck {
    let off = r.off_diagonal();
    if off.is_empty() {
        return FlatCheck {
            is_flat: true,
            value: 1.0,
            max_dev: 0.0,
        };
    }
    let value = off.iter().sum::<f64>() / off.len() as f64;
    let max_dev = off.iter().fold(0.0f64, |m, v| m.max((v - value).abs()));
    FlatCheck {
        is_flat: max_dev <= tol,
        value,
        max_dev,
    }
}

fn need_m(m: usize, min: usize) -> Result<()> {
    if m < min {
        Err(Error::InvalidArgument(format!("m must be at least {min}, got {m}")))
    } else {
        Ok(())
    }
}

/// Lower bound on any attainable flat correlation:
/// `3/4 + ρ/4 - (1 - ρ)(11/(2m) + 24/m²)`.
pub fn flat_lower_bound(m: usize, rho: f64) -> Result<f64> {
    need_m(m, 3)?;
    let mf = m as f64;
    Ok(0.75 + rho / 4.0 - (1.0 - rho) * (11.0 / (2.0 * mf) + 24.0 / (mf * mf)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    /// The bound's derivation needs `m ≥ 10`.
    pub valid: bool,
}

/// `3/4 + ρ/4 + (1 - ρ)(5/m - 16/m²)`.
pub fn flat_upper_bound(m: usize, rho: f64) -> Result<UpperBound> {
    need_m(m, 3)?;
    let mf = m as f64;
    Ok(UpperBound {
        value: 0.75 + rho / 4.0 + (1.0 - rho) * (5.0 / mf - 16.0 / (mf * mf)),
        valid: m >= 10,
    })
}

/// `1 - (1 - ρ)(2α_max² + m - 2) / (2m²)`, for `α_max ≥ (m + 1)/2`.
pub fn naive_lower_bound(m: usize, rho: f64, alpha_max: f64) -> Result<f64> {
    need_m(m, 2)?;
    let mf = m as f64;
    if alpha_max < (mf + 1.0) / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "α_max = {alpha_max} is below the forced minimum (m + 1)/2 = {}",
            (mf + 1.0) / 2.0
        )));
    }
    Ok(1.0 - (1.0 - rho) * (2.0 * alpha_max * alpha_max + mf - 2.0) / (2.0 * mf * mf))
}

/// `Σ_q α(q, q) = m(m + 1)/2` within 1e-10.
pub fn diag_sum_check(alpha: &WeightRowSums) -> bool {
    let m = alpha.m() as f64;
    let trace: f64 = alpha.matrix().diagonal().sum();
    (trace - m * (m + 1.0) / 2.0).abs() <= 1e-10
}

/// An equality-constrained quadratic program `min ½xᵀBx + qᵀx + r, Ax = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSystem {
    pub quad: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl KktSystem {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.quad * x)) + self.linear.dot(x) + self.constant
    }
}

/// Stage one: with the diagonal weights `a_i = α(i, i)` fixed, minimize
/// `Σ_{s₁<s₂} ‖β‖²` over `c = (c⁽¹⁾₁,₂, …, c⁽¹⁾₁,ₘ, c⁽²⁾₂,₁, …)`.
pub fn kkt_stage1_system(m: usize, a: &[f64]) -> Result<KktSystem> {
    need_m(m, 3)?;
    if a.len() != m {
        return Err(Error::Dimension(format!("a has length {}, expected {m}", a.len())));
    }
    let mf = m as f64;
    let k = m - 1;
    let block = DMatrix::from_element(k, k, 2.0 * (mf - 4.0)) + DMatrix::identity(k, k) * (2.0 * mf);
    let mut quad = DMatrix::zeros(m * k, m * k);
    let mut amat = DMatrix::zeros(m, m * k);
    for i in 0..m {
        quad.view_mut((i * k, i * k), (k, k)).copy_from(&block);
        for j in 0..k {
            amat[(i, i * k + j)] = 1.0;
        }
    }
    Ok(KktSystem {
        quad,
        linear: DVector::from_element(m * k, 4.0 * (mf - 2.0)),
        constant: -(mf * (mf - 1.0) / 2.0) * 2.0 * (mf - 3.0),
        a: amat,
        b: DVector::from_iterator(m, a.iter().map(|v| v - 1.0)),
    })
}

/// `c* = ((a - 1) ⊗ 1_{m-1}) / (m - 1)`.
pub fn kkt_stage1_closed_form(m: usize, a: &[f64]) -> Result<DVector<f64>> {
    need_m(m, 2)?;
    if a.len() != m {
        return Err(Error::Dimension(format!("a has length {}, expected {m}", a.len())));
    }
    let k = m - 1;
    Ok(DVector::from_iterator(
        m * k,
        a.iter().flat_map(|ai| std::iter::repeat_n((ai - 1.0) / k as f64, k)),
    ))
}

/// Stage two: minimize over the diagonal weights subject to
/// `Σ a_i = m(m + 1)/2`.
pub fn kkt_stage2_system(m: usize) -> Result<KktSystem> {
    need_m(m, 2)?;
    let mf = m as f64;
    let quad = (DMatrix::identity(m, m) * (mf * mf - 2.0 * mf + 2.0) - DMatrix::from_element(m, m, 1.0)) * 2.0;
    Ok(KktSystem {
        quad,
        linear: DVector::from_element(m, 2.0 * (mf - 1.0)),
        constant: 0.0,
        a: DMatrix::from_element(1, m, 1.0),
        b: DVector::from_element(1, mf * (mf + 1.0) / 2.0),
    })
}

/// `a* = (m + 1)/2 · 1`.
pub fn kkt_stage2_closed_form(m: usize) -> Result<DVector<f64>> {
    need_m(m, 2)?;
    Ok(DVector::from_element(m, (m as f64 + 1.0) / 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    /// Largest flat value found.
    pub best_r: f64,
    pub best_alpha: DMatrix<f64>,
    /// Smallest flat value found.
    pub min_r: f64,
    pub flat_found: usize,
    pub trials: usize,
}

/// Squared row distances `‖β‖²` of every pair, in [`pair_index`] order.
fn pair_sq_dists(a: &DMatrix<f64>) -> Vec<f64> {
    pair_index(a.nrows())
        .into_iter()
        .map(|(i, j)| (a.row(i) - a.row(j)).norm_squared())
        .collect()
}

/// Pulls a WOMNI parameter vector towards equal pair distances with
/// minimum-norm Gauss–Newton steps. Returns the final max relative
/// deviation of the induced correlation at `ρ = 0`.
fn project_flat(m: usize, x: &mut [f64], steps: usize) -> f64 {
    let pairs = pair_index(m);
    let p = pairs.len();
    let scale = 2.0 * (m * m) as f64;
    let mut dev = f64::INFINITY;
    for step in 0..=steps {
        let a = womni_alpha_from_pairs(m, x);
        let d = pair_sq_dists(&a);
        let mean = d.iter().sum::<f64>() / p as f64;
        dev = d.iter().fold(0.0f64, |acc, v| acc.max((v - mean).abs())) / scale;
        if step == steps || dev < 1e-13 {
            break;
        }
        // ∂‖a_s - a_t‖² / ∂x_(i,j) with a = A0 + Σ x D, D = (e_i + e_j)(e_j - e_i)ᵀ
        let mut jac = DMatrix::zeros(p, p);
        for (row, &(s, t)) in pairs.iter().enumerate() {
            let beta = a.row(s) - a.row(t);
            for (col, &(i, j)) in pairs.iter().enumerate() {
                let u = |r: usize| if r == i || r == j { 1.0 } else { 0.0 };
                let coef = u(s) - u(t);
                if coef != 0.0 {
                    jac[(row, col)] = 2.0 * coef * (beta[j] - beta[i]);
                }
            }
        }
        // residual relative to the mean: project out the all-ones direction
        let centre = |mat: &mut DMatrix<f64>| {
            for c in 0..mat.ncols() {
                let mu = mat.column(c).mean();
                mat.column_mut(c).add_scalar_mut(-mu);
            }
        };
        centre(&mut jac);
        let resid = DVector::from_iterator(p, d.iter().map(|v| v - mean));
        let svd = jac.svd(true, true);
        let Ok(dx) = svd.solve(&resid, 1e-10) else { break };
        for (xi, di) in x.iter_mut().zip(dx.iter()) {
            *xi -= di;
        }
    }
    dev
}

/// Samples random WOMNI weightings, projects each towards flatness and
/// reports the extreme flat correlations among those that end up flat
/// (deviation ≤ 1e-3) and valid.
pub fn random_search_flat_max(m: usize, rho: f64, trials: usize, seed: u64) -> Result<SearchReport> {
    need_m(m, 2)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let p = m * (m - 1) / 2;
    let chunk = 1024usize;
    let chunks = trials.div_ceil(chunk);
    let found: Vec<(f64, f64, DMatrix<f64>, usize)> = (0..chunks)
        .into_par_iter()
        .filter_map(|c| {
            let mut r = rng::stream(seed, c as u64);
            let mut best: Option<(f64, f64, DMatrix<f64>, usize)> = None;
            let lo = c * chunk;
            let hi = (lo + chunk).min(trials);
            for _ in lo..hi {
                let mut x: Vec<f64> = (0..p).map(|_| rng::uniform(&mut r)).collect();
                let dev = project_flat(m, &mut x, 8);
                if dev > 1e-3 {
                    continue;
                }
                let a = womni_alpha_from_pairs(m, &x);
                let Ok(alpha) = WeightRowSums::new(a.clone()) else { continue };
                if check_womni_alpha(&alpha, 1e-9).is_err() {
                    continue;
                }
                let d = pair_sq_dists(&a);
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                let v = 1.0 - (1.0 - rho) * mean / (2.0 * (m * m) as f64);
                best = Some(match best {
                    None => (v, v, a, 1),
                    Some((hi_v, lo_v, ha, n)) => {
                        if v > hi_v {
                            (v, lo_v.min(v), a, n + 1)
                        } else {
                            (hi_v, lo_v.min(v), ha, n + 1)
                        }
                    }
                });
            }
            best
        })
        .collect();
    let total: usize = found.iter().map(|f| f.3).sum();
    let Some(best) = found.iter().max_by(|a, b| a.0.total_cmp(&b.0)) else {
        return Err(Error::Empty(format!("no flat configuration among {trials} trials")));
    };
    let min_r = found.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    Ok(SearchReport {
        best_r: best.0,
        best_alpha: best.2.clone(),
        min_r,
        flat_found: total,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGapRow {
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub gap_times_m: f64,
    /// Closed form of the gap, `(1 - ρ)(21/(2m) + 8/m²)`.
    pub gap_closed_form: f64,
    /// Whether `gap ≤ (1 - ρ)·21/(2m)`; fails by the `8/m²` term whenever `ρ < 1`.
    pub within_leading_term: bool,
}

/// Width of the flat-correlation band `[lower, upper]` over a grid of `m`.
pub fn theta_gap_check(m_grid: &[usize], rho: f64) -> Result<Vec<ThetaGapRow>> {
    m_grid
        .iter()
        .map(|&m| {
            need_m(m, 10)?;
            let mf = m as f64;
            let lower = flat_lower_bound(m, rho)?;
            let upper = flat_upper_bound(m, rho)?.value;
            let gap = upper - lower;
            Ok(ThetaGapRow {
                m,
                lower,
                upper,
                gap,
                gap_times_m: gap * mf,
                gap_closed_form: (1.0 - rho) * (21.0 / (2.0 * mf) + 8.0 / (mf * mf)),
                within_leading_term: gap <= (1.0 - rho) * 21.0 / (2.0 * mf) + 1e-15,
            })
        })
        .collect()
}
