//! Latent positions and correlated random dot product graphs.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corr_theory::{CorrRole, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::graph_store::GraphCollection;
use crate::rng;

/// Slack allowed on edge probabilities before they count as out of range.
const PROB_TOL: f64 = 1e-12;

/// `n x d` latent positions whose pairwise dot products are probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPositions {
    x: DMatrix<f64>,
    distribution: String,
}

impl LatentPositions {
    pub fn new(x: DMatrix<f64>, distribution: impl Into<String>) -> Result<Self> {
        let n = x.nrows();
        for j in 0..n {
            for i in 0..j {
                let v = x.row(i).dot(&x.row(j));
                if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "edge probability X_{}·X_{} = {v} is outside [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            x,
            distribution: distribution.into(),
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn distribution(&self) -> &str {
        &self.distribution
    }

    /// Edge probability matrix `X Xᵀ`.
    pub fn probabilities(&self) -> DMatrix<f64> {
        &self.x * self.x.transpose()
    }
}

fn check_probabilities(p: &DMatrix<f64>) -> Result<()> {
    for j in 0..p.ncols() {
        for i in 0..j {
            let v = p[(i, j)];
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "edge probability X_{}·X_{} = {v} is outside [0, 1]",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Single-generator model parameters: graph `k` is `nu[k]`-correlated with a
/// shared generator graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub nu: Vec<f64>,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Constant `nu` giving pairwise correlation `rho` between all graphs.
    pub fn flat(m: usize, rho: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Unsupported(format!(
                "pairwise correlation {rho} has no single-generator construction"
            )));
        }
        Ok(Self {
            nu: vec![rho.sqrt(); m],
            seed,
        })
    }

    /// The implied inherent correlation `ν νᵀ` with unit diagonal.
    pub fn inherent_correlation(&self) -> CorrelationMatrix {
        let m = self.nu.len();
        let r = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { self.nu[i] * self.nu[j] });
        CorrelationMatrix::new(r, CorrRole::Inherent).expect("ν in [0, 1] gives a valid matrix")
    }
}

/// First two coordinates of `n` Dirichlet(1, 1, 1) draws.
pub fn sample_dirichlet_latents(n: usize, seed: u64) -> Result<LatentPositions> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut r = rng::stream(seed, rng::LATENT_STREAM);
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        // 1 - U lies in (0, 1], so the logarithm is finite
        let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng::uniform(&mut r)).ln());
        let s = e[0] + e[1] + e[2];
        x[(i, 0)] = e[0] / s;
        x[(i, 1)] = e[1] / s;
    }
    // rows lie in the unit simplex, so every dot product is in [0, 1]
    Ok(LatentPositions {
        x,
        distribution: "dirichlet(1,1,1)[1:2]".into(),
    })
}

/// Visits the strict upper triangle column by column: `(0,1), (0,2), (1,2), ...`.
fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..n).flat_map(|j| (0..j).map(move |i| (i, j)))
}

fn sample_rdpg_stream(p: &DMatrix<f64>, seed: u64, stream: u64) -> DMatrix<f64> {
    let n = p.nrows();
    let mut r = rng::stream(seed, stream);
    let mut a = DMatrix::zeros(n, n);
    for (i, j) in upper_pairs(n) {
        if rng::uniform(&mut r) < p[(i, j)] {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
    }
    a
}

/// One RDPG draw: independent Bernoulli(XᵢᵀXⱼ) edges above the diagonal.
pub fn sample_rdpg(latents: &LatentPositions, seed: u64) -> Result<DMatrix<f64>> {
    let p = latents.probabilities();
    check_probabilities(&p)?;
    Ok(sample_rdpg_stream(&p, seed, rng::GENERATOR_STREAM))
}

/// Samples `m` graphs from the single-generator model.
///
/// The generator `A⁽⁰⁾` is `sample_rdpg(latents, spec.seed)`. Given generator
/// bit `a` and marginal `p`, graph `k` has an edge with probability
/// `p + ϱ_k(1 - p)` if `a = 1` and `p(1 - ϱ_k)` otherwise.
pub fn sample_jrdpg_gen(latents: &LatentPositions, spec: &GeneratorSpec, m: usize) -> Result<GraphCollection> {
    if spec.nu.len() != m {
        return Err(Error::Dimension(format!("ν has length {}, expected m = {m}", spec.nu.len())));
    }
    if let Some(v) = spec.nu.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Unsupported(format!(
            "generator correlation {v} outside [0, 1]"
        )));
    }
    let p = latents.probabilities();
    check_probabilities(&p)?;
    let a0 = sample_rdpg_stream(&p, spec.seed, rng::GENERATOR_STREAM);
    let n = p.nrows();
    let graphs: Vec<DMatrix<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let nu = spec.nu[k];
            let mut r = rng::stream(spec.seed, k as u64 + 1);
            let mut a = DMatrix::zeros(n, n);
            for (i, j) in upper_pairs(n) {
                let pij = p[(i, j)].clamp(0.0, 1.0);
                let prob = if a0[(i, j)] == 1.0 {
                    pij + nu * (1.0 - pij)
                } else {
                    pij * (1.0 - nu)
                };
                if rng::uniform(&mut r) < prob {
                    a[(i, j)] = 1.0;
                    a[(j, i)] = 1.0;
                }
            }
            a
        })
        .collect();
    GraphCollection::from_matrices(graphs)
}

/// Pearson correlation of the above-diagonal entries of every graph pair.
///
/// With `p` given, entries are centred at their edge probabilities instead
/// of each graph's mean, which removes the spurious correlation that shared
/// heterogeneous probabilities would otherwise create.
pub fn empirical_edge_correlation(c: &GraphCollection, p: Option<&DMatrix<f64>>) -> Result<CorrelationMatrix> {
    let m = c.m();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two graphs".into()));
    }
    let n = c.n();
    if let Some(p) = p {
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::Dimension("probability matrix does not match the graphs".into()));
        }
    }
    let centred: Vec<Vec<f64>> = c
        .graphs()
        .iter()
        .map(|g| {
            let v: Vec<f64> = upper_pairs(n).map(|(i, j)| g[(i, j)]).collect();
            match p {
                Some(p) => v.iter().zip(upper_pairs(n)).map(|(x, (i, j))| x - p[(i, j)]).collect(),
                None => {
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    v.iter().map(|x| x - mean).collect()
                }
            }
        })
        .collect();
    let norms: Vec<f64> = centred.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if let Some(k) = norms.iter().position(|&s| s == 0.0) {
        return Err(Error::ZeroVariance(format!("graph {} has constant edges", k + 1)));
    }
    let mut r = DMatrix::identity(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let dot: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            let v = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    CorrelationMatrix::new(r, CorrRole::Inherent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_latents(n: usize, p: f64) -> LatentPositions {
        LatentPositions::new(DMatrix::from_element(n, 1, p.sqrt()), "constant").unwrap()
    }

    #[test]
    fn dirichlet_rows_on_simplex_and_deterministic() {
        let a = sample_dirichlet_latents(1000, 3).unwrap();
        for i in 0..a.n() {
            let (x, y) = (a.x()[(i, 0)], a.x()[(i, 1)]);
            assert!(x >= 0.0 && y >= 0.0 && x + y <= 1.0);
        }
        assert_eq!(a, sample_dirichlet_latents(1000, 3).unwrap());
        assert_ne!(a, sample_dirichlet_latents(1000, 4).unwrap());
    }

    #[test]
    fn dirichlet_mean() {
        let a = sample_dirichlet_latents(100_000, 11).unwrap();
        let mean = a.x().row_mean();
        assert!((mean[0] - 1.0 / 3.0).abs() < 0.01);
        assert!((mean[1] - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn extra_vertices_do_not_perturb_earlier_draws() {
        let small = sample_dirichlet_latents(50, 9).unwrap();
        let big = sample_dirichlet_latents(80, 9).unwrap();
        assert_eq!(small.x(), &big.x().rows(0, 50).into_owned());
        let a = sample_rdpg(&constant_latents(50, 0.4), 2).unwrap();
        let b = sample_rdpg(&constant_latents(80, 0.4), 2).unwrap();
        assert_eq!(a, b.view((0, 0), (50, 50)).into_owned());
    }

    #[test]
    fn rdpg_extremes() {
        let zero = LatentPositions::new(DMatrix::zeros(5, 2), "zero").unwrap();
        assert_eq!(sample_rdpg(&zero, 1).unwrap(), DMatrix::zeros(5, 5));
        let full = sample_rdpg(&constant_latents(5, 1.0), 1).unwrap();
        assert_eq!(full, DMatrix::from_element(5, 5, 1.0) - DMatrix::identity(5, 5));
    }

    #[test]
    fn rdpg_density() {
        let n = 500;
        let a = sample_rdpg(&constant_latents(n, 0.3), 5).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let density = a.sum() / 2.0 / pairs;
        let sd = (0.3 * 0.7 / pairs).sqrt();
        assert!((density - 0.3).abs() < 3.0 * sd, "{density}");
    }

    #[test]
    fn out_of_range_probabilities() {
        let x = DMatrix::from_element(3, 1, 1.2);
        assert!(LatentPositions::new(x, "bad").is_err());
    }

    #[test]
    fn perfect_generator_correlation_copies_the_generator() {
        let lat = sample_dirichlet_latents(60, 1).unwrap();
        let spec = GeneratorSpec { nu: vec![1.0; 3], seed: 4 };
        let c = sample_jrdpg_gen(&lat, &spec, 3).unwrap();
        let a0 = sample_rdpg(&lat, 4).unwrap();
        for g in c.graphs() {
            assert_eq!(g, &a0);
        }
    }

    #[test]
    fn independent_graphs_are_uncorrelated() {
        let n = 300;
        let lat = sample_dirichlet_latents(n, 2).unwrap();
        let spec = GeneratorSpec { nu: vec![0.0; 3], seed: 8 };
        let c = sample_jrdpg_gen(&lat, &spec, 3).unwrap();
        let r = empirical_edge_correlation(&c, Some(&lat.probabilities())).unwrap();
        let sd = 1.0 / ((n * (n - 1) / 2) as f64).sqrt();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(r.get(i, j).abs() < 3.0 * sd, "{}", r.get(i, j));
            }
        }
    }

    #[test]
    fn generator_correlation_half() {
        let lat = sample_dirichlet_latents(500, 21).unwrap();
        let spec = GeneratorSpec::flat(3, 0.5, 22).unwrap();
        let c = sample_jrdpg_gen(&lat, &spec, 3).unwrap();
        let r = empirical_edge_correlation(&c, Some(&lat.probabilities())).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((r.get(i, j) - 0.5).abs() < 0.05, "{}", r.get(i, j));
            }
        }
    }

    #[test]
    fn negative_correlation_is_unsupported() {
        assert!(matches!(GeneratorSpec::flat(3, -0.2, 0), Err(Error::Unsupported(_))));
        let lat = sample_dirichlet_latents(10, 1).unwrap();
        let spec = GeneratorSpec { nu: vec![0.5, -0.1], seed: 0 };
        assert!(matches!(sample_jrdpg_gen(&lat, &spec, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn edge_correlation_oracles() {
        let n = 40;
        let lat = constant_latents(n, 0.5);
        let a = sample_rdpg(&lat, 3).unwrap();
        let comp = DMatrix::from_element(n, n, 1.0) - DMatrix::identity(n, n) - &a;
        let c = GraphCollection::from_matrices(vec![a.clone(), a.clone(), comp]).unwrap();
        let r = empirical_edge_correlation(&c, None).unwrap();
        assert!((r.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((r.get(0, 2) + 1.0).abs() < 1e-12);
        let empty = GraphCollection::from_matrices(vec![a, DMatrix::zeros(n, n)]).unwrap();
        assert!(matches!(empirical_edge_correlation(&empty, None), Err(Error::ZeroVariance(_))));
    }
}
