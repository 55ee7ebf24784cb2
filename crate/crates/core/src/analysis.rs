//! Downstream inference on embeddings: alignment strength, graph distances,
//! Ward clustering, ARI, classical MDS and correlation estimates.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::corr_theory::{CorrRole, CorrelationMatrix};
use crate::error::{Error, Result};

/// Alignment strength of two graphs on the same vertex set:
/// `1 - ‖A - B‖²_F / E_P ‖A - PBPᵀ‖²_F`, the expectation taken over uniform
/// vertex permutations. The expectation has the closed form
/// `‖A‖² + ‖B‖² - 2 tr(A)tr(B)/n - S_A S_B / C(n, 2)` with `S` the sum of the
/// off-diagonal entries.
pub fn alignment_strength(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Dimension(format!(
            "graphs are {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("alignment strength needs at least two vertices".into()));
    }
    let den = permutation_mean_distance(a, b);
    if den.abs() <= f64::EPSILON * (a.norm_squared() + b.norm_squared()).max(1.0) {
        return Err(Error::InvalidArgument("alignment strength is undefined: the permutation average is zero".into()));
    }
    Ok(1.0 - (a - b).norm_squared() / den)
}

/// `E_P ‖A - PBPᵀ‖²_F` over uniform permutations, in closed form.
pub fn permutation_mean_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows() as f64;
    let (ta, tb) = (a.trace(), b.trace());
    let (sa, sb) = (a.sum() - ta, b.sum() - tb);
    a.norm_squared() + b.norm_squared() - 2.0 * ta * tb / n - sa * sb / (n * (n - 1.0) / 2.0)
}

/// `D_ij = ‖X̂⁽ⁱ⁾ - X̂⁽ʲ⁾‖_F`.
pub fn pairwise_graph_distances(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    check_blocks(blocks)?;
    let m = blocks.len();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = (&blocks[i] - &blocks[j]).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

fn check_blocks(blocks: &[DMatrix<f64>]) -> Result<()> {
    let Some(first) = blocks.first() else {
        return Err(Error::Empty("no embedding blocks".into()));
    };
    for (k, b) in blocks.iter().enumerate() {
        if b.shape() != first.shape() {
            return Err(Error::Dimension(format!(
                "block {} is {}x{}, block 1 is {}x{}",
                k + 1,
                b.nrows(),
                b.ncols(),
                first.nrows(),
                first.ncols()
            )));
        }
    }
    Ok(())
}

fn check_distance(d: &DMatrix<f64>) -> Result<()> {
    let m = d.nrows();
    if d.ncols() != m {
        return Err(Error::Dimension(format!("distance matrix is {}x{}", d.nrows(), d.ncols())));
    }
    let tol = 1e-12 * d.amax().max(1.0);
    for i in 0..m {
        for j in 0..m {
            let v = d[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { i: i + 1, j: j + 1 });
            }
            if v < 0.0 || (i == j && v.abs() > tol) {
                return Err(Error::InvalidArgument(format!("D({}, {}) = {v} is not a distance", i + 1, j + 1)));
            }
            if (v - d[(j, i)]).abs() > tol {
                return Err(Error::Asymmetric {
                    i: i + 1,
                    j: j + 1,
                    upper: v,
                    lower: d[(j, i)],
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    WardD2,
}

/// One agglomeration step. Clusters `0..m` are the input points; the
/// cluster formed by merge `t` has id `m + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    m: usize,
    merges: Vec<Merge>,
    linkage: Linkage,
}

impl Dendrogram {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn linkage(&self) -> Linkage {
        self.linkage
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|mg| mg.height).collect()
    }
}

/// Ward clustering in the `ward.D2` convention: Lance–Williams updates on
/// squared distances, merge heights reported as square roots. Ties go to
/// the lexicographically first pair of active clusters.
pub fn ward_cluster(d: &DMatrix<f64>) -> Result<Dendrogram> {
    check_distance(d)?;
    let m = d.nrows();
    if m == 0 {
        return Err(Error::Empty("no points to cluster".into()));
    }
    let mut d2 = d.map(|v| v * v);
    let mut size = vec![1usize; m];
    let mut id: Vec<usize> = (0..m).collect();
    let mut active = vec![true; m];
    let mut merges = Vec::with_capacity(m - 1);
    for t in 0..m.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in (0..m).filter(|&i| active[i]) {
            for j in ((i + 1)..m).filter(|&j| active[j]) {
                if d2[(i, j)] < best.2 {
                    best = (i, j, d2[(i, j)]);
                }
            }
        }
        let (i, j, dij) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in (0..m).filter(|&k| active[k] && k != i && k != j) {
            let nk = size[k] as f64;
            let v = ((ni + nk) * d2[(k, i)] + (nj + nk) * d2[(k, j)] - nk * dij) / (ni + nj + nk);
            d2[(k, i)] = v;
            d2[(i, k)] = v;
        }
        let (a, b) = (id[i].min(id[j]), id[i].max(id[j]));
        size[i] += size[j];
        active[j] = false;
        id[i] = m + t;
        merges.push(Merge {
            a,
            b,
            height: dij.max(0.0).sqrt(),
            size: size[i],
        });
    }
    Ok(Dendrogram {
        m,
        merges,
        linkage: Linkage::WardD2,
    })
}

/// Cluster labels in `1..=k`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionLabels(Vec<usize>);

impl PartitionLabels {
    /// Relabels arbitrary integer labels to `1..=k` by first appearance.
    pub fn new(labels: &[i64]) -> Self {
        let mut map = HashMap::new();
        let out = labels
            .iter()
            .map(|l| {
                let next = map.len() + 1;
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self(out)
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn k(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

/// Undoes the last `m - k` merges.
pub fn cut_tree(dend: &Dendrogram, k: usize) -> Result<PartitionLabels> {
    let m = dend.m;
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("cannot cut {m} points into {k} clusters")));
    }
    let mut parent: Vec<usize> = (0..2 * m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (t, mg) in dend.merges.iter().take(m - k).enumerate() {
        let ra = find(&mut parent, mg.a);
        let rb = find(&mut parent, mg.b);
        parent[ra] = m + t;
        parent[rb] = m + t;
    }
    let roots: Vec<i64> = (0..m).map(|i| find(&mut parent, i) as i64).collect();
    Ok(PartitionLabels::new(&roots))
}

/// Hubert–Arabie adjusted Rand index.
pub fn ari(a: &PartitionLabels, b: &PartitionLabels) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("partitions have {} and {} elements", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument("ARI needs at least two elements".into()));
    }
    let (ka, kb) = (a.k(), b.k());
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.0.iter().zip(&b.0) {
        table[x - 1][y - 1] += 1;
    }
    let c2 = |v: u64| (v * v.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < 1e-15 {
        // both partitions trivial in the same way
        return Ok(if (index - expected).abs() < 1e-15 { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cmds {
    /// `m x k` coordinates.
    pub coords: DMatrix<f64>,
    /// All eigenvalues of the double-centred matrix, descending.
    pub scree: Vec<f64>,
}

/// Classical multidimensional scaling of a distance matrix into `k`
/// dimensions.
pub fn cmds(d: &DMatrix<f64>, k: usize) -> Result<Cmds> {
    check_distance(d)?;
    let m = d.nrows();
    if k > m {
        return Err(Error::InvalidArgument(format!("cannot scale {m} points into {k} dimensions")));
    }
    let j = DMatrix::identity(m, m) - DMatrix::from_element(m, m, 1.0 / m as f64);
    let b = &j * d.map(|v| -0.5 * v * v) * &j;
    let eig = SymmetricEigen::new((&b + b.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let scree: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut coords = DMatrix::zeros(m, k);
    let mut short = 0;
    // round-off on a rank-deficient exact configuration is not a dimension
    let floor = 1e-12 * scree.first().copied().unwrap_or(0.0).abs();
    for (c, &i) in order.iter().take(k).enumerate() {
        let lam = eig.eigenvalues[i];
        if lam <= floor {
            short += 1;
            continue;
        }
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(p) = v.iamax().into() {
            if v[p] < 0.0 {
                v.neg_mut();
            }
        }
        coords.set_column(c, &(v * lam.sqrt()));
    }
    if short > 0 {
        log::warn!("only {} positive eigenvalues; padding {short} CMDS coordinates with zeros", k - short);
    }
    Ok(Cmds { coords, scree })
}

fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c
}

/// Pearson correlation between the flattened blocks after centring each
/// embedding dimension. With `reference`, the blocks are first replaced by
/// their residuals `X̂⁽ⁱ⁾ - reference`, which estimates the correlation of
/// the estimation errors rather than of the embedded positions.
pub fn empirical_block_correlation(blocks: &[DMatrix<f64>], reference: Option<&DMatrix<f64>>) -> Result<CorrelationMatrix> {
    check_blocks(blocks)?;
    let m = blocks.len();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two blocks".into()));
    }
    if let Some(r) = reference {
        if r.shape() != blocks[0].shape() {
            return Err(Error::Dimension(format!(
                "reference is {}x{}, blocks are {}x{}",
                r.nrows(),
                r.ncols(),
                blocks[0].nrows(),
                blocks[0].ncols()
            )));
        }
    }
    let centred: Vec<DMatrix<f64>> = blocks
        .iter()
        .map(|b| match reference {
            Some(r) => center_columns(&(b - r)),
            None => center_columns(b),
        })
        .collect();
    let norms: Vec<f64> = centred.iter().map(|c| c.norm()).collect();
    if let Some(k) = norms.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroVariance(format!("block {} is constant", k + 1)));
    }
    let mut out = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = (centred[i].dot(&centred[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    CorrelationMatrix::new(out, CorrRole::Induced)
}

/// Orthogonal `Q` minimizing `‖XQ - Y‖_F`.
pub fn procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.shape() != y.shape() {
        return Err(Error::Dimension(format!(
            "procrustes inputs are {}x{} and {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let svd = (x.transpose() * y).svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(Error::InvalidArgument("SVD failed".into()));
    };
    Ok(u * vt)
}

/// Rows `√n (X̂⁽ˢ¹⁾_i - X̂⁽ˢ²⁾_i)`.
pub fn scaled_differences(blocks: &[DMatrix<f64>], s1: usize, s2: usize, n: usize) -> Result<DMatrix<f64>> {
    check_blocks(blocks)?;
    let m = blocks.len();
    if s1 >= m || s2 >= m || s1 == s2 {
        return Err(Error::InvalidArgument(format!("invalid graph pair ({}, {}) for {m} graphs", s1 + 1, s2 + 1)));
    }
    Ok((&blocks[s1] - &blocks[s2]) * (n as f64).sqrt())
}

/// Per-coordinate sample variance (denominator `N - 1`) of the rows.
pub fn diagonal_covariance(samples: &DMatrix<f64>) -> Result<Vec<f64>> {
    let r = samples.nrows();
    if r < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    Ok(samples
        .column_iter()
        .map(|c| {
            let mean = c.mean();
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64
        })
        .collect())
}

/// Diagonal covariance of `√n (X̂⁽ˢ¹⁾_i - X̂⁽ˢ²⁾_i)` over the rows `i`.
pub fn scaled_difference_covariance(blocks: &[DMatrix<f64>], s1: usize, s2: usize, n: usize) -> Result<Vec<f64>> {
    diagonal_covariance(&scaled_differences(blocks, s1, s2, n)?)
}

/// As [`scaled_difference_covariance`], pooling rows over replicates.
pub fn pooled_scaled_difference_covariance(replicates: &[Vec<DMatrix<f64>>], s1: usize, s2: usize, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<DMatrix<f64>> = replicates
        .iter()
        .map(|blocks| scaled_differences(blocks, s1, s2, n))
        .collect::<Result<_>>()?;
    let Some(first) = parts.first() else {
        return Err(Error::Empty("no replicates".into()));
    };
    let d = first.ncols();
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut all = DMatrix::zeros(rows, d);
    let mut at = 0;
    for p in &parts {
        if p.ncols() != d {
            return Err(Error::Dimension("replicates have different embedding dimensions".into()));
        }
        all.rows_mut(at, p.nrows()).copy_from(p);
        at += p.nrows();
    }
    diagonal_covariance(&all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..j {
                if rng.random::<f64>() < p {
                    a[(i, j)] = 1.0;
                    a[(j, i)] = 1.0;
                }
            }
        }
        a
    }

    fn brute_mean(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        let mut count = 0usize;
        loop {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += (a[(i, j)] - b[(perm[i], perm[j])]).powi(2);
                }
            }
            total += s;
            count += 1;
            // next lexicographic permutation
            let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| perm[k] < perm[k + 1]) else {
                break;
            };
            let l = (k + 1..n).rev().find(|&l| perm[k] < perm[l]).unwrap();
            perm.swap(k, l);
            perm[k + 1..].reverse();
        }
        total / count as f64
    }

    #[test]
    fn alignment_self_and_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = random_graph(4, 0.5, &mut rng);
        assert_relative_eq!(alignment_strength(&a, &a).unwrap(), 1.0);
        for _ in 0..20 {
            let a = random_graph(4, 0.5, &mut rng);
            let b = random_graph(4, 0.5, &mut rng);
            if a.sum() + b.sum() == 0.0 {
                continue;
            }
            assert!((permutation_mean_distance(&a, &b) - brute_mean(&a, &b)).abs() < 1e-12);
        }
        // weighted, with loops
        let a = DMatrix::from_fn(4, 4, |i, j| ((i + j) as f64).cos() + if i == j { 2.0 } else { 0.0 });
        let b = DMatrix::from_fn(4, 4, |i, j| ((i * j) as f64).sin().abs());
        assert!((permutation_mean_distance(&a, &b) - brute_mean(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn complementary_pair_is_negative() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let a = loop {
            let a = random_graph(6, 0.5, &mut rng);
            if a.sum() == 14.0 {
                break a;
            }
        };
        let b = DMatrix::from_fn(6, 6, |i, j| if i == j { 0.0 } else { 1.0 - a[(i, j)] });
        let s = alignment_strength(&a, &b).unwrap();
        assert!(s < 0.0, "{s}");
        assert!((permutation_mean_distance(&a, &b) - brute_mean(&a, &b)).abs() < 1e-12);
        assert!(alignment_strength(&DMatrix::zeros(3, 3), &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn distances() {
        let x = DMatrix::from_element(3, 2, 1.0);
        let mut y = x.clone();
        y[(1, 1)] += 3.0;
        let d = pairwise_graph_distances(&[x.clone(), x.clone(), y]).unwrap();
        assert_eq!(d[(0, 1)], 0.0);
        assert_relative_eq!(d[(0, 2)], 3.0);
        assert!(pairwise_graph_distances(&[x, DMatrix::zeros(2, 2)]).is_err());
    }

    fn points_distance(p: &[(f64, f64)]) -> DMatrix<f64> {
        DMatrix::from_fn(p.len(), p.len(), |i, j| ((p[i].0 - p[j].0).powi(2) + (p[i].1 - p[j].1).powi(2)).sqrt())
    }

    #[test]
    fn ward_on_separated_pairs() {
        let d = points_distance(&[(0.0, 0.0), (10.0, 0.0), (0.0, 1.0), (10.0, 1.5)]);
        let dend = ward_cluster(&d).unwrap();
        let mg = dend.merges();
        assert_eq!((mg[0].a, mg[0].b), (0, 2));
        assert_eq!((mg[1].a, mg[1].b), (1, 3));
        assert_eq!((mg[2].a, mg[2].b), (4, 5));
        assert_relative_eq!(mg[0].height, 1.0);
        assert_relative_eq!(mg[1].height, 1.5);
        // ward.D2 height of the last merge: √(2 · ESS increase) = √((2·2/4)·‖c₁-c₂‖² · 2)
        let c1: (f64, f64) = (0.0, 0.5);
        let c2: (f64, f64) = (10.0, 0.75);
        let sq = (c1.0 - c2.0).powi(2) + (c1.1 - c2.1).powi(2);
        assert_relative_eq!(mg[2].height, (2.0 * 2.0 * 2.0 / 4.0 * sq).sqrt(), epsilon = 1e-12);
        let labels = cut_tree(&dend, 2).unwrap();
        assert_eq!(labels.labels(), &[1, 2, 1, 2]);
        assert_eq!(cut_tree(&dend, 4).unwrap().labels(), &[1, 2, 3, 4]);
        assert_eq!(cut_tree(&dend, 1).unwrap().labels(), &[1, 1, 1, 1]);
        assert!(cut_tree(&dend, 5).is_err());
    }

    #[test]
    fn ward_hand_recurrence() {
        // 1-D points 0, 1, 3, 7
        let d = points_distance(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0), (7.0, 0.0)]);
        let dend = ward_cluster(&d).unwrap();
        let h = dend.heights();
        // merge {0,1} at 1; d²({0,1},2) = (2·9 + 2·4 - 1)/3 = 25/3,
        // d²({0,1},3) = (2·49 + 2·36 - 1)/3 = 169/3, d²(2,3) = 16
        assert_relative_eq!(h[0], 1.0);
        assert_relative_eq!(h[1], (25.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        // d²({0,1,2},3) = ((2+1)·169/3 + (1+1)·16 - 1·25/3)/4
        let last = ((3.0 * 169.0 / 3.0) + 2.0 * 16.0 - 25.0 / 3.0) / 4.0;
        assert_relative_eq!(h[2], f64::sqrt(last), epsilon = 1e-12);
        let two = ward_cluster(&points_distance(&[(0.0, 0.0), (2.0, 0.0)])).unwrap();
        assert_eq!(two.merges().len(), 1);
        assert_relative_eq!(two.merges()[0].height, 2.0);
    }

    #[test]
    fn ari_cases() {
        let a = PartitionLabels::new(&[1, 1, 2, 2, 3, 3]);
        let b = PartitionLabels::new(&[7, 7, 4, 4, 9, 9]);
        assert_relative_eq!(ari(&a, &b).unwrap(), 1.0);
        // contingency table rows {1,1,2,2,3,3} vs {1,1,1,2,2,2}:
        // n_ij = [[2,0],[1,1],[0,2]], Σ C(n_ij,2) = 2, rows 3, cols 6, total 15
        let c = PartitionLabels::new(&[1, 1, 1, 2, 2, 2]);
        let expected = 3.0 * 6.0 / 15.0;
        let want = (2.0 - expected) / (0.5 * (3.0 + 6.0) - expected);
        assert_relative_eq!(ari(&a, &c).unwrap(), want, epsilon = 1e-15);
        assert!(ari(&a, &PartitionLabels::new(&[1, 2])).is_err());
    }

    #[test]
    fn cmds_recovers_configurations() {
        let line: [f64; 4] = [0.0, 1.0, 4.0, 6.0];
        let d = DMatrix::from_fn(4, 4, |i, j| (line[i] - line[j]).abs());
        let c = cmds(&d, 1).unwrap();
        let mean = line.iter().sum::<f64>() / 4.0;
        let s = c.coords[(0, 0)].signum() * (line[0] - mean).signum();
        for i in 0..4 {
            assert_relative_eq!(c.coords[(i, 0)] * s, line[i] - mean, epsilon = 1e-10);
        }
        let pts = [(0.0, 0.0), (3.0, 1.0), (-1.0, 2.0), (2.0, -2.0), (0.5, 0.5)];
        let d = points_distance(&pts);
        let c = cmds(&d, 2).unwrap();
        let back = pairwise_graph_distances(&(0..5).map(|i| c.coords.rows(i, 1).into_owned()).collect::<Vec<_>>()).unwrap();
        assert!((back - &d).amax() <= 1e-10);
        assert!(c.scree.windows(2).all(|w| w[0] >= w[1]));
        let padded = cmds(&d, 4).unwrap();
        assert_eq!(padded.coords.column(3).amax(), 0.0);
    }

    #[test]
    fn block_correlation() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let normal = rand_distr::StandardNormal;
        let x = DMatrix::from_fn(5000, 2, |_, _| rng.sample::<f64, _>(normal));
        let y = DMatrix::from_fn(5000, 2, |_, _| rng.sample::<f64, _>(normal));
        let r = empirical_block_correlation(&[x.clone(), x.clone(), y], None).unwrap();
        assert_relative_eq!(r.get(0, 1), 1.0, epsilon = 1e-12);
        assert!(r.get(0, 2).abs() < 0.05);
        let c = DMatrix::from_element(4, 2, 1.0);
        assert!(matches!(empirical_block_correlation(&[c.clone(), c], None), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn difference_covariance() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i * j) as f64);
        assert_eq!(scaled_difference_covariance(&[x.clone(), x], 0, 1, 10).unwrap(), vec![0.0, 0.0]);

        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let normal = rand_distr::StandardNormal;
        let n = 100_000;
        let (v1, v2) = (0.5f64, 2.0f64);
        let a = DMatrix::from_fn(n, 2, |_, j| rng.sample::<f64, _>(normal) * if j == 0 { v1.sqrt() } else { v2.sqrt() } / (n as f64).sqrt());
        let b = DMatrix::zeros(n, 2);
        let cov = scaled_difference_covariance(&[a, b], 0, 1, n).unwrap();
        assert!((cov[0] / v1 - 1.0).abs() < 0.05);
        assert!((cov[1] / v2 - 1.0).abs() < 0.05);
    }

    #[test]
    fn procrustes_recovers_rotation() {
        let x = DMatrix::from_fn(20, 2, |i, j| ((i + 3 * j) as f64).sin());
        let t = 0.7f64;
        let q = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let got = procrustes(&x, &(&x * &q)).unwrap();
        assert_relative_eq!(got, q, epsilon = 1e-12);
    }
}
