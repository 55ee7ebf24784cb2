//! Adjacency spectral embedding and scree-based dimension selection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Matrices up to this size always use the dense eigensolver.
const DENSE_LIMIT: usize = 400;
const LANCZOS_MAX_DIM: usize = 600;

/// Singular values (eigenvalue magnitudes) in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("spectrum values must be finite and nonnegative".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `X̂ = U |S|^{1/2}` for the `d` largest-magnitude eigenpairs, stacked as
/// `m` blocks of `n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    xhat: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    n: usize,
    m: usize,
    degenerate: bool,
}

impl Embedding {
    pub fn xhat(&self) -> &DMatrix<f64> {
        &self.xhat
    }

    pub fn d(&self) -> usize {
        self.xhat.ncols()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Signed eigenvalues, ordered by magnitude.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Whether `|λ_d|` and `|λ_{d+1}|` coincided, making the subspace
    /// ill-defined.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Reinterprets the rows as `m` blocks of `n`.
    pub fn with_blocks(mut self, m: usize, n: usize) -> Result<Self> {
        if m * n != self.xhat.nrows() {
            return Err(Error::Dimension(format!(
                "{} rows cannot be split into {m} blocks of {n}",
                self.xhat.nrows()
            )));
        }
        self.m = m;
        self.n = n;
        Ok(self)
    }

    pub fn block(&self, s: usize) -> DMatrix<f64> {
        self.xhat.rows(s * self.n, self.n).into_owned()
    }
}

/// Eigenpairs ordered by decreasing `|λ|`, with each eigenvector's
/// largest-magnitude entry made positive.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn sorted_pairs(eig: SymmetricEigen<f64, nalgebra::Dyn>, k: usize) -> EigenPairs {
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
            .then(eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]))
    });
    order.truncate(k);
    let vectors = eig.eigenvectors.select_columns(&order);
    EigenPairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors,
    }
}

fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lanczos with full reorthogonalization. The first `vectors` Ritz pairs
/// must have residual at most `1e-10 |λ₁|`; the remaining values only
/// `1e-6 |λ₁|`. Returns `None` if the Krylov space fills up first.
fn lanczos_pairs(mat: &DMatrix<f64>, k: usize, vectors: usize) -> Option<EigenPairs> {
    let n = mat.nrows();
    let max_dim = n.min(LANCZOS_MAX_DIM);
    let mut r = rng::stream(0x5ca1ab1e, 0);
    let mut v = DVector::from_fn(n, |_, _| rng::uniform(&mut r) - 0.5);
    v /= v.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_dim);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let scale = mat.amax().max(f64::MIN_POSITIVE);
    let mut next_check = (2 * k + 20).min(max_dim);
    loop {
        let mut w = mat * &v;
        let a = v.dot(&w);
        w.axpy(-a, &v, 1.0);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            w.axpy(-b, prev, 1.0);
        }
        basis.push(v);
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        let j = basis.len();
        let exhausted = b <= 1e-14 * scale || j == max_dim;
        if j >= next_check || exhausted {
            let t = DMatrix::from_fn(j, j, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..j).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].abs().total_cmp(&eig.eigenvalues[x].abs()));
            if j >= k {
                let lead = eig.eigenvalues[order[0]].abs().max(scale * 1e-300);
                let ok = order.iter().take(k).enumerate().all(|(i, &c)| {
                    let res = b * eig.eigenvectors[(j - 1, c)].abs();
                    res <= if i < vectors { 1e-10 } else { 1e-6 } * lead
                });
                if ok || b <= 1e-14 * scale {
                    let mut vecs = DMatrix::zeros(n, k);
                    for (i, &c) in order.iter().take(k).enumerate() {
                        let mut col = DVector::zeros(n);
                        for (l, q) in basis.iter().enumerate() {
                            col.axpy(eig.eigenvectors[(l, c)], q, 1.0);
                        }
                        vecs.set_column(i, &col);
                    }
                    fix_signs(&mut vecs);
                    return Some(EigenPairs {
                        values: order.iter().take(k).map(|&c| eig.eigenvalues[c]).collect(),
                        vectors: vecs,
                    });
                }
            }
            if exhausted {
                return None;
            }
            next_check = (j + j / 2).min(max_dim);
        }
        beta.push(b);
        v = w / b;
    }
}

/// The `k` largest-magnitude eigenpairs of a symmetric matrix.
pub fn top_eigenpairs(mat: &DMatrix<f64>, k: usize) -> Result<EigenPairs> {
    top_pairs(mat, k, k)
}

/// As [`top_eigenpairs`], with only the first `vectors` eigenvectors
/// required to be accurate.
fn top_pairs(mat: &DMatrix<f64>, k: usize, vectors: usize) -> Result<EigenPairs> {
    let n = mat.nrows();
    if mat.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {}x{}", n, mat.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot take {k} eigenpairs of a {n}x{n} matrix")));
    }
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    if n > DENSE_LIMIT && 4 * (k + 10) < n {
        if let Some(p) = lanczos_pairs(mat, k, vectors) {
            return Ok(p);
        }
        log::debug!("Lanczos did not converge, using the dense solver");
    }
    let mut p = sorted_pairs(SymmetricEigen::new(symmetric_part(mat)), k);
    fix_signs(&mut p.vectors);
    Ok(p)
}

/// Top-`k` singular values of a symmetric matrix.
pub fn spectrum(mat: &DMatrix<f64>, k: usize) -> Result<Spectrum> {
    let p = top_eigenpairs(mat, k)?;
    Spectrum::new(p.values.iter().map(|v| v.abs()).collect())
}

/// Adjacency spectral embedding into `d` dimensions.
pub fn ase(mat: &DMatrix<f64>, d: usize) -> Result<Embedding> {
    let n = mat.nrows();
    if mat.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {}x{}", n, mat.ncols())));
    }
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!("d = {d} is outside 1..={n}")));
    }
    let tol = 1e-12 * mat.amax().max(1.0);
    for j in 0..n {
        for i in 0..j {
            if (mat[(i, j)] - mat[(j, i)]).abs() > tol {
                return Err(Error::Asymmetric {
                    i: i + 1,
                    j: j + 1,
                    upper: mat[(i, j)],
                    lower: mat[(j, i)],
                });
            }
        }
    }
    let k = (d + 1).min(n);
    let pairs = top_pairs(mat, k, d)?;
    let degenerate = k > d && (pairs.values[d - 1].abs() - pairs.values[d].abs()).abs() <= 1e-12 * pairs.values[0].abs().max(1.0);
    if degenerate {
        log::warn!(
            "singular values {} and {} coincide ({:e}); the {d}-dimensional embedding is not unique",
            d,
            d + 1,
            pairs.values[d - 1].abs()
        );
    }
    let mut xhat = pairs.vectors.columns(0, d).into_owned();
    for (c, v) in pairs.values.iter().take(d).enumerate() {
        let s = v.abs().sqrt();
        xhat.column_mut(c).scale_mut(s);
    }
    Ok(Embedding {
        xhat,
        eigenvalues: pairs.values[..d].to_vec(),
        n,
        m: 1,
        degenerate,
    })
}

/// Zhu–Ghodsi profile-likelihood elbow over the first `max_d` values.
///
/// Each split `q` models the two groups as Gaussians with their own means
/// and a pooled variance (denominator `p - 2`). Ties go to the smaller `q`.
pub fn select_dim(spec: &Spectrum, max_d: usize) -> Result<usize> {
    let p = spec.len().min(max_d);
    if p < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 values to select a dimension, got {p}"
        )));
    }
    let v = &spec.values()[..p];
    let top = v[0].max(f64::MIN_POSITIVE);
    let floor = 1e-12 * top * top;
    let mut best = (1, f64::NEG_INFINITY);
    for q in 1..p {
        let (a, b) = v.split_at(q);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (ma, mb) = (mean(a), mean(b));
        let ss: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
        let var = (ss / (p as f64 - 2.0)).max(floor);
        let ll = -0.5 * p as f64 * (2.0 * std::f64::consts::PI * var).ln() - ss / (2.0 * var);
        if ll > best.1 + 1e-12 * ll.abs() {
            best = (q, ll);
        }
    }
    Ok(best.0)
}

/// Default search range for [`select_dim`].
pub fn default_max_d(dim: usize, rank_hint: Option<usize>) -> usize {
    let mut d = dim.min(50);
    if let Some(h) = rank_hint {
        d = d.min(3 * h);
    }
    d.max(3.min(dim))
}

/// Splits the rows of `e` into `m` consecutive `n`-row blocks.
pub fn extract_blocks(e: &Embedding, m: usize, n: usize) -> Result<Vec<DMatrix<f64>>> {
    if e.xhat.nrows() != m * n {
        return Err(Error::Dimension(format!(
            "embedding has {} rows, expected m·n = {}",
            e.xhat.nrows(),
            m * n
        )));
    }
    Ok((0..m).map(|s| e.xhat.rows(s * n, n).into_owned()).collect())
}
