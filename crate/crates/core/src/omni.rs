//! Omnibus weightings and the Omnibus matrix.
//!
//! A weighting is a tensor `C[k][l][q]`: the weight of graph `q` in block
//! `(k, l)` of the Omnibus matrix. Its row sums `α(k, q) = Σ_l C[k][l][q]`
//! determine the correlation the embedding induces between graphs.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_store::GraphCollection;

/// Tolerance on the row-sum and pair-sum identities accepted by
/// [`womni_from_alpha`].
pub const ALPHA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OmniWeights {
    m: usize,
    c: Vec<f64>,
    is_womni: bool,
}

impl OmniWeights {
    fn zeros(m: usize) -> Self {
        Self {
            m,
            c: vec![0.0; m * m * m],
            is_womni: false,
        }
    }

    #[inline]
    fn idx(&self, k: usize, l: usize, q: usize) -> usize {
        (k * self.m + l) * self.m + q
    }

    /// Weight of graph `q` in block `(k, l)`, 0-based.
    #[inline]
    pub fn c(&self, k: usize, l: usize, q: usize) -> f64 {
        self.c[self.idx(k, l, q)]
    }

    fn set_pair(&mut self, k: usize, l: usize, q: usize, v: f64) {
        let a = self.idx(k, l, q);
        let b = self.idx(l, k, q);
        self.c[a] = v;
        self.c[b] = v;
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_womni(&self) -> bool {
        self.is_womni
    }

    /// Builds weights from nested arrays with axis order `[k][l][q]`.
    pub fn from_tensor(t: &[Vec<Vec<f64>>]) -> Result<Self> {
        let m = t.len();
        if m == 0 {
            return Err(Error::InvalidArgument("empty weight tensor".into()));
        }
        let mut w = Self::zeros(m);
        for (k, plane) in t.iter().enumerate() {
            if plane.len() != m {
                return Err(Error::Dimension(format!("C[{}] has {} rows, expected {m}", k + 1, plane.len())));
            }
            for (l, fiber) in plane.iter().enumerate() {
                if fiber.len() != m {
                    return Err(Error::Dimension(format!(
                        "C[{}][{}] has length {}, expected {m}",
                        k + 1,
                        l + 1,
                        fiber.len()
                    )));
                }
                for (q, &v) in fiber.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::InvalidWeights(format!(
                            "non-finite weight at ({}, {}, {})",
                            k + 1,
                            l + 1,
                            q + 1
                        )));
                    }
                    let i = w.idx(k, l, q);
                    w.c[i] = v;
                }
            }
        }
        w.is_womni = w.womni_structure();
        Ok(w)
    }

    pub fn to_tensor(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.m)
            .map(|k| (0..self.m).map(|l| (0..self.m).map(|q| self.c(k, l, q)).collect()).collect())
            .collect()
    }

    fn womni_structure(&self) -> bool {
        let m = self.m;
        (0..m).all(|k| (0..m).all(|l| (0..m).all(|q| q == k || q == l || self.c(k, l, q) == 0.0)))
    }
}

/// Row-sum matrix `𝓐` with entries `α(k, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRowSums(DMatrix<f64>);

impl WeightRowSums {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::Dimension(format!("𝓐 must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeights("𝓐 has non-finite entries".into()));
        }
        Ok(Self(a))
    }

    pub fn m(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, k: usize, q: usize) -> f64 {
        self.0[(k, q)]
    }
}

/// One broken invariant, with 1-based indices when displayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Range { k: usize, l: usize, q: usize, value: f64 },
    CccSum { k: usize, l: usize, sum: f64 },
    PartialSymmetry { k: usize, l: usize, q: usize },
    Dominance { k: usize, q: usize, alpha_kq: f64, alpha_kk: f64 },
    NotWomni { k: usize, l: usize, q: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Range { k, l, q, value } => {
                write!(f, "C[{}][{}][{}] = {value} outside [0, 1]", k + 1, l + 1, q + 1)
            }
            Violation::CccSum { k, l, sum } => {
                write!(f, "CCC sum of block ({}, {}) is {sum}, expected 1", k + 1, l + 1)
            }
            Violation::PartialSymmetry { k, l, q } => write!(
                f,
                "C[{0}][{1}][{2}] != C[{1}][{0}][{2}]",
                k + 1,
                l + 1,
                q + 1
            ),
            Violation::Dominance { k, q, alpha_kq, alpha_kk } => write!(
                f,
                "dominance: α({0},{1}) = {alpha_kq} is not below α({0},{0}) = {alpha_kk}",
                k + 1,
                q + 1
            ),
            Violation::NotWomni { k, l, q } => write!(
                f,
                "WOMNI block ({}, {}) uses graph {}",
                k + 1,
                l + 1,
                q + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every invariant exactly.
pub fn validate(w: &OmniWeights) -> ValidationReport {
    validate_with_slack(w, 0.0)
}

/// Checks every invariant, allowing each to be missed by `slack`.
pub fn validate_with_slack(w: &OmniWeights, slack: f64) -> ValidationReport {
    let m = w.m();
    let mut violations = Vec::new();
    for k in 0..m {
        for l in 0..m {
            for q in 0..m {
                let v = w.c(k, l, q);
                if v < -slack || v > 1.0 + slack {
                    violations.push(Violation::Range { k, l, q, value: v });
                }
                if l > k && (v - w.c(l, k, q)).abs() > slack {
                    violations.push(Violation::PartialSymmetry { k, l, q });
                }
                if w.is_womni() && l >= k && q != k && q != l && v.abs() > slack {
                    violations.push(Violation::NotWomni { k, l, q });
                }
            }
            if l >= k {
                let sum: f64 = (0..m).map(|q| w.c(k, l, q)).sum();
                if (sum - 1.0).abs() > slack.max(4.0 * f64::EPSILON * m as f64) {
                    violations.push(Violation::CccSum { k, l, sum });
                }
            }
        }
    }
    let alpha = alpha_matrix(w);
    for k in 0..m {
        let kk = alpha.get(k, k);
        for q in 0..m {
            if q != k && alpha.get(k, q) >= kk + slack {
                violations.push(Violation::Dominance {
                    k,
                    q,
                    alpha_kq: alpha.get(k, q),
                    alpha_kk: kk,
                });
            }
        }
    }
    ValidationReport { violations }
}

/// `α(k, q) = Σ_l C[k][l][q]`.
pub fn alpha_matrix(w: &OmniWeights) -> WeightRowSums {
    let m = w.m();
    WeightRowSums(DMatrix::from_fn(m, m, |k, q| (0..m).map(|l| w.c(k, l, q)).sum()))
}

/// Classical Omnibus weights: block `(k, l)` is `(A⁽ᵏ⁾ + A⁽ˡ⁾) / 2`.
pub fn classical_omni(m: usize) -> OmniWeights {
    let mut w = OmniWeights::zeros(m);
    for k in 0..m {
        for l in 0..m {
            if k == l {
                w.set_pair(k, k, k, 1.0);
            } else {
                w.set_pair(k, l, k, 0.5);
                w.set_pair(k, l, l, 0.5);
            }
        }
    }
    w.is_womni = true;
    w
}

/// Checks the row-sum and pair-sum identities a WOMNI `𝓐` must satisfy.
pub fn check_womni_alpha(alpha: &WeightRowSums, tol: f64) -> Result<()> {
    let m = alpha.m();
    let a = alpha.matrix();
    for k in 0..m {
        let row: f64 = a.row(k).sum();
        if (row - m as f64).abs() > tol * m as f64 {
            return Err(Error::InvalidWeights(format!("row {} of 𝓐 sums to {row}, expected {m}", k + 1)));
        }
        for q in 0..m {
            if a[(k, q)] < -tol {
                return Err(Error::InvalidWeights(format!(
                    "α({}, {}) = {} is negative",
                    k + 1,
                    q + 1,
                    a[(k, q)]
                )));
            }
            if q != k && a[(k, q)] >= a[(k, k)] {
                return Err(Error::InvalidWeights(format!(
                    "dominance fails: α({0}, {1}) = {2} >= α({0}, {0}) = {3}",
                    k + 1,
                    q + 1,
                    a[(k, q)],
                    a[(k, k)]
                )));
            }
            if q > k {
                let s = a[(k, q)] + a[(q, k)];
                if (s - 1.0).abs() > tol {
                    return Err(Error::InvalidWeights(format!(
                        "α({0}, {1}) + α({1}, {0}) = {s}, expected 1",
                        k + 1,
                        q + 1
                    )));
                }
                if a[(k, q)] > 1.0 + tol {
                    return Err(Error::InvalidWeights(format!("α({}, {}) exceeds 1", k + 1, q + 1)));
                }
            }
        }
    }
    Ok(())
}

/// Inverts [`alpha_matrix`] on WOMNI weightings: block `(i, k)` puts weight
/// `α(i, k)` on graph `k` and `1 - α(i, k)` on graph `i`.
///
/// Pair weights are read from the upper triangle of `𝓐`.
pub fn womni_from_alpha(alpha: &WeightRowSums) -> Result<OmniWeights> {
    check_womni_alpha(alpha, ALPHA_TOL)?;
    let m = alpha.m();
    let mut w = OmniWeights::zeros(m);
    for i in 0..m {
        w.set_pair(i, i, i, 1.0);
        for k in (i + 1)..m {
            let x = alpha.get(i, k).clamp(0.0, 1.0);
            w.set_pair(i, k, k, x);
            w.set_pair(i, k, i, 1.0 - x);
        }
    }
    w.is_womni = true;
    Ok(w)
}

/// Upper-triangle pairs `(i, j)`, `i < j`, in row-major order; the
/// parametrization used by [`womni_alpha_from_pairs`].
pub fn pair_index(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect()
}

/// WOMNI row sums from the pair weights `x_(i,j) = α(i, j)`, `i < j`:
/// `α(j, i) = 1 - x` and each diagonal entry completes its row to `m`.
pub fn womni_alpha_from_pairs(m: usize, x: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for (&(i, j), &v) in pair_index(m).iter().zip(x) {
        a[(i, j)] = v;
        a[(j, i)] = 1.0 - v;
    }
    for i in 0..m {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = m as f64 - off;
    }
    a
}

/// Inverse of [`womni_alpha_from_pairs`] (reads the upper triangle).
pub fn pairs_from_alpha(a: &DMatrix<f64>) -> Vec<f64> {
    pair_index(a.nrows()).into_iter().map(|(i, j)| a[(i, j)]).collect()
}

/// Named constructions with known flat correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SpecialConstruction {
    Classical,
    M3Minus,
    M3Plus,
    M4Plus,
    M5Plus { a: f64, b: f64, c: f64, d: f64 },
}

impl SpecialConstruction {
    /// `a = (5 - √17)/2` used by `M4+` (and `M5+` blocks 1..4).
    pub fn m4_a() -> f64 {
        (5.0 - 17f64.sqrt()) / 2.0
    }

    pub fn m4_b() -> f64 {
        (17f64.sqrt() - 3.0) / 2.0
    }
}

impl std::str::FromStr for SpecialConstruction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(Self::Classical),
            "m3minus" | "m3-" => Ok(Self::M3Minus),
            "m3plus" | "m3+" => Ok(Self::M3Plus),
            "m4plus" | "m4+" => Ok(Self::M4Plus),
            "m5plus" | "m5+" => Err(Error::InvalidArgument("M5plus needs explicit (a, b, c, d)".into())),
            _ => Err(Error::InvalidArgument(format!("unknown construction '{s}'"))),
        }
    }
}

/// Block layout: for each `k < l`, the list of `(graph, weight)` terms.
fn from_blocks(m: usize, blocks: &[((usize, usize), &[(usize, f64)])]) -> OmniWeights {
    let mut w = OmniWeights::zeros(m);
    for k in 0..m {
        w.set_pair(k, k, k, 1.0);
    }
    for &((k, l), terms) in blocks {
        for &(q, v) in terms {
            w.set_pair(k, l, q, v);
        }
    }
    w.is_womni = w.womni_structure();
    w
}

fn m3_plus_blocks() -> Vec<((usize, usize), Vec<(usize, f64)>)> {
    vec![
        ((0, 1), vec![(1, 1.0)]),
        ((0, 2), vec![(0, 1.0)]),
        ((1, 2), vec![(2, 1.0)]),
    ]
}

pub fn special(name: &SpecialConstruction, m: usize) -> Result<OmniWeights> {
    let need = |want: usize| {
        if m == want {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name:?} is defined for m = {want}, got m = {m}")))
        }
    };
    let mut blocks: Vec<((usize, usize), Vec<(usize, f64)>)> = match *name {
        SpecialConstruction::Classical => {
            if m == 0 {
                return Err(Error::InvalidArgument("m must be at least 1".into()));
            }
            return Ok(classical_omni(m));
        }
        SpecialConstruction::M3Minus => {
            need(3)?;
            vec![
                ((0, 1), vec![(0, 1.0)]),
                ((0, 2), vec![(2, 1.0)]),
                ((1, 2), vec![(1, 1.0)]),
            ]
        }
        SpecialConstruction::M3Plus => {
            need(3)?;
            m3_plus_blocks()
        }
        SpecialConstruction::M4Plus => {
            need(4)?;
            let (a, b) = (SpecialConstruction::m4_a(), SpecialConstruction::m4_b());
            let mut v = m3_plus_blocks();
            v.extend((0..3).map(|i| ((i, 3), vec![(i, a), (3, b)])));
            v
        }
        SpecialConstruction::M5Plus { a, b, c, d } => {
            need(5)?;
            let mut v = m3_plus_blocks();
            v.extend((0..3).map(|i| ((i, 3), vec![(i, a), (3, b)])));
            v.extend((0..4).map(|i| ((i, 4), vec![(i, c), (4, d)])));
            v
        }
    };
    blocks.sort_by_key(|b| b.0);
    let refs: Vec<((usize, usize), &[(usize, f64)])> = blocks.iter().map(|(k, t)| (*k, t.as_slice())).collect();
    Ok(from_blocks(m, &refs))
}

/// Assembles the `mn x mn` Omnibus matrix with block `(k, l)` equal to
/// `Σ_q C[k][l][q] A⁽q⁾`.
pub fn build_omnibus(c: &GraphCollection, w: &OmniWeights) -> Result<DMatrix<f64>> {
    let (m, n) = (c.m(), c.n());
    if w.m() != m {
        return Err(Error::Dimension(format!("weights are for m = {}, collection has m = {m}", w.m())));
    }
    let mut out = DMatrix::zeros(m * n, m * n);
    for k in 0..m {
        for l in k..m {
            let mut block: DMatrix<f64> = DMatrix::zeros(n, n);
            for q in 0..m {
                let cq = w.c(k, l, q);
                if cq != 0.0 {
                    block += c.graph(q) * cq;
                }
            }
            out.view_mut((k * n, l * n), (n, n)).copy_from(&block);
            if l != k {
                out.view_mut((l * n, k * n), (n, n)).copy_from(&block.transpose());
            }
        }
    }
    Ok(out)
}
