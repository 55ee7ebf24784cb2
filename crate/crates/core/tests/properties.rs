use nalgebra::{DMatrix, DVector};
use omnikit_core::analysis::{self, ari, cut_tree, ward_cluster, PartitionLabels};
use omnikit_core::corr2omni::{self, StressProblem, WomniQp};
use omnikit_core::corr_theory::{flat_induced, induced_correlation, CorrRole, CorrelationMatrix};
use omnikit_core::graph_store::{load_matrix, preprocess, save_matrix, GraphCollection, MatrixFormat, PreprocessOptions};
use omnikit_core::omni::{
    alpha_matrix, build_omnibus, pairs_from_alpha, validate, womni_alpha_from_pairs, womni_from_alpha, WeightRowSums,
};
use omnikit_core::qp::{self, QpInstance, QpOptions};
use omnikit_core::spectral::{ase, select_dim, Spectrum};
use proptest::prelude::*;

/// Random WOMNI pair weights that satisfy dominance: `x = ½ + λ(u - ½)`.
fn womni_alpha(m: usize, u: &[f64]) -> DMatrix<f64> {
    let mut lambda = 1.0;
    loop {
        let x: Vec<f64> = u.iter().map(|v| 0.5 + lambda * (v - 0.5)).collect();
        let a = womni_alpha_from_pairs(m, &x);
        if (0..m).all(|k| (0..m).all(|q| q == k || a[(k, q)] < a[(k, k)])) {
            return a;
        }
        lambda *= 0.5;
    }
}

fn pair_weights(max_m: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2..=max_m).prop_flat_map(|m| (Just(m), prop::collection::vec(0.0..1.0f64, m * (m - 1) / 2)))
}

fn symmetric_graph(n: usize, bits: &[bool]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut e = 0;
    for j in 0..n {
        for i in 0..j {
            if bits[e] {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
            e += 1;
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_csv_round_trip(vals in prop::collection::vec(-1e6..1e6f64, 9)) {
        let mut x = DMatrix::from_row_slice(3, 3, &vals);
        x = (&x + x.transpose()) * 0.5;
        x.fill_diagonal(0.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        save_matrix(&x, &path, MatrixFormat::DenseCsv).unwrap();
        let y = load_matrix(&path, MatrixFormat::DenseCsv).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn preprocess_idempotent_and_shrinking(
        n in 3usize..9,
        bits in prop::collection::vec(prop::bool::weighted(0.25), 3 * 36),
        binarize: bool,
        drop_isolated: bool,
    ) {
        let e = n * (n - 1) / 2;
        let graphs: Vec<DMatrix<f64>> = (0..3).map(|k| symmetric_graph(n, &bits[k * e..(k + 1) * e])).collect();
        let c = GraphCollection::from_matrices(graphs).unwrap();
        let opts = PreprocessOptions { binarize, symmetrize: true, drop_isolated, intersect_vertices: true };
        if let Ok(once) = preprocess(&c, &opts) {
            prop_assert!(once.n() <= c.n());
            prop_assert_eq!(once.m(), c.m());
            let twice = preprocess(&once, &opts).unwrap();
            prop_assert_eq!(once.graphs(), twice.graphs());
            prop_assert_eq!(once.vertex_ids(), twice.vertex_ids());
        }
    }

    #[test]
    fn womni_round_trip_and_mode_sums((m, u) in pair_weights(6)) {
        let a = WeightRowSums::new(womni_alpha(m, &u)).unwrap();
        let w = womni_from_alpha(&a).unwrap();
        prop_assert!(validate(&w).is_ok(), "{}", validate(&w));
        let back = alpha_matrix(&w);
        prop_assert!((back.matrix() - a.matrix()).amax() <= 1e-12);
        // summing over the graph index gives the all-ones matrix
        for k in 0..m {
            for l in 0..m {
                let s: f64 = (0..m).map(|q| w.c(k, l, q)).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
        let x = pairs_from_alpha(a.matrix());
        prop_assert!((womni_alpha_from_pairs(m, &x) - a.matrix()).amax() <= 1e-12);
    }

    #[test]
    fn omnibus_is_linear_in_each_graph(
        (m, u) in pair_weights(4),
        g1 in prop::collection::vec(0.0..1.0f64, 6),
        g2 in prop::collection::vec(0.0..1.0f64, 6),
        s in -2.0..2.0f64,
    ) {
        let a = WeightRowSums::new(womni_alpha(m, &u)).unwrap();
        let w = womni_from_alpha(&a).unwrap();
        let sym = |v: &[f64]| {
            let mut x = DMatrix::zeros(4, 4);
            let mut e = 0;
            for j in 0..4 {
                for i in 0..j {
                    x[(i, j)] = v[e];
                    x[(j, i)] = v[e];
                    e += 1;
                }
            }
            x
        };
        let base: Vec<DMatrix<f64>> = (0..m).map(|k| sym(&g1) * (k as f64 + 1.0)).collect();
        let mut shifted = base.clone();
        shifted[0] = &base[0] + sym(&g2) * s;
        let mut only = vec![DMatrix::zeros(4, 4); m];
        only[0] = sym(&g2) * s;
        let omni = |gs: Vec<DMatrix<f64>>| build_omnibus(&GraphCollection::from_matrices(gs).unwrap(), &w).unwrap();
        let lhs = omni(shifted);
        let rhs = omni(base) + omni(only);
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn induced_correlation_properties((m, u) in pair_weights(6), rho in 0.0..1.0f64, perm_seed: u64) {
        let a = WeightRowSums::new(womni_alpha(m, &u)).unwrap();
        let ones = CorrelationMatrix::new(DMatrix::from_element(m, m, 1.0), CorrRole::Inherent).unwrap();
        for v in induced_correlation(&a, &ones).unwrap().off_diagonal() {
            prop_assert!((v - 1.0).abs() <= 1e-12);
        }
        let r = CorrelationMatrix::flat(m, rho, CorrRole::Inherent).unwrap();
        let ind = induced_correlation(&a, &r).unwrap();
        for i in 0..m {
            for j in (i + 1)..m {
                prop_assert!(ind.get(i, j) >= rho - 1e-12);
                prop_assert!((ind.get(i, j) - flat_induced(&a, rho, i, j)).abs() <= 1e-14);
            }
        }
        // relabel graphs: conjugate 𝓐 and a non-flat R by the same permutation
        let mut perm: Vec<usize> = (0..m).collect();
        let mut s = perm_seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let rr = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.1 + 0.05 * ((i + j) % 3) as f64 });
        let r0 = CorrelationMatrix::new(rr.clone(), CorrRole::Inherent).unwrap();
        let rp = CorrelationMatrix::new(DMatrix::from_fn(m, m, |i, j| rr[(perm[i], perm[j])]), CorrRole::Inherent).unwrap();
        let ap = WeightRowSums::new(DMatrix::from_fn(m, m, |i, j| a.get(perm[i], perm[j]))).unwrap();
        let i0 = induced_correlation(&a, &r0).unwrap();
        let ip = induced_correlation(&ap, &rp).unwrap();
        for i in 0..m {
            for j in 0..m {
                prop_assert!((ip.get(i, j) - i0.get(perm[i], perm[j])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn qp_optimality_and_scaling(
        pvals in prop::collection::vec(-1.0..1.0f64, 16),
        q in prop::collection::vec(-2.0..2.0f64, 4),
        probes in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 4), 100),
    ) {
        let b = DMatrix::from_row_slice(4, 4, &pvals);
        let p = &b * b.transpose() + DMatrix::identity(4, 4) * 0.1;
        let q = DVector::from_vec(q);
        // box 0 ≤ x ≤ 1 and Σx ≤ 2
        let mut g = DMatrix::zeros(9, 4);
        let mut h = DVector::zeros(9);
        for i in 0..4 {
            g[(i, i)] = -1.0;
            g[(4 + i, i)] = 1.0;
            h[4 + i] = 1.0;
            g[(8, i)] = 1.0;
        }
        h[8] = 2.0;
        let opts = QpOptions::default();
        let inst = QpInstance::new(p.clone(), q.clone()).unwrap().with_inequalities(g.clone(), h.clone()).unwrap();
        let sol = qp::solve(&inst, &opts).unwrap().into_result().unwrap();
        let f = inst.objective(&sol.x);
        for pr in &probes {
            let mut x = DVector::from_vec(pr.clone());
            let s = x.sum();
            if s > 2.0 {
                x *= 2.0 / s;
            }
            prop_assert!(f <= inst.objective(&x) + 1e-9);
        }
        let slack = &h - &g * &sol.x;
        for i in 0..9 {
            prop_assert!(sol.z[i] >= -1e-12);
            prop_assert!((sol.z[i] * slack[i]).abs() <= 1e-8);
        }
        for c in [1e-3, 1e3] {
            let scaled = QpInstance::new(&p * c, &q * c).unwrap().with_inequalities(g.clone(), h.clone()).unwrap();
            let s2 = qp::solve(&scaled, &opts).unwrap().into_result().unwrap();
            prop_assert!((&s2.x - &sol.x).amax() <= 1e-6, "c = {c}: {} vs {}", s2.x, sol.x);
        }
    }

    #[test]
    fn ase_gram_is_diagonal(vals in prop::collection::vec(0.0..1.0f64, 30 * 3)) {
        let x = DMatrix::from_row_slice(30, 3, &vals);
        let m = &x * x.transpose();
        let e = ase(&m, 2).unwrap();
        let gram = e.xhat().transpose() * e.xhat();
        prop_assert!(gram[(0, 1)].abs() <= 1e-9 * gram[(0, 0)]);
    }

    #[test]
    fn select_dim_scale_invariant(mut vals in prop::collection::vec(0.01..100.0f64, 3..12), c in 1e-3..1e3f64) {
        vals.sort_by(|a, b| b.total_cmp(a));
        let s = Spectrum::new(vals.clone()).unwrap();
        let t = Spectrum::new(vals.iter().map(|v| v * c).collect()).unwrap();
        let k = vals.len();
        prop_assert_eq!(select_dim(&s, k).unwrap(), select_dim(&t, k).unwrap());
    }

    #[test]
    fn smacof_contract((m, u) in pair_weights(6), tvals in prop::collection::vec(0.4..0.95f64, 15)) {
        let t = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { tvals[(i.min(j) * 6 + i.max(j)) % 15] });
        let target = CorrelationMatrix::new(t, CorrRole::Target).unwrap();
        let inherent = CorrelationMatrix::identity(m, CorrRole::Inherent);
        let prob = StressProblem::new(&inherent, &target, None, &corr2omni::DEFAULT_RIDGE_SCHEDULE).unwrap();
        let eps = 1e-3 * m as f64;
        let mut w = WomniQp::new(&prob, eps, QpOptions::default()).unwrap();
        let a0 = womni_alpha(m, &u);
        let x0 = DVector::from_vec(pairs_from_alpha(&a0));
        prop_assume!(w.max_violation(&x0) <= 0.0);
        let mut state = corr2omni::state_at(x0, 0, &prob);
        for _ in 0..15 {
            let next = corr2omni::majorize_step(&state, &prob, &mut w).unwrap();
            prop_assert!(next.sigma <= state.sigma + 1e-8);
            prop_assert!(w.max_violation(&next.x) <= 1e-8);
            // the configuration distance reproduces the induced correlation
            let cfg = next.config(&prob);
            let ind = induced_correlation(&WeightRowSums::new(next.alpha(m)).unwrap(), &inherent).unwrap();
            for i in 0..m {
                for j in (i + 1)..m {
                    let v = 1.0 - (cfg.row(i) - cfg.row(j)).norm_squared() / (2.0 * (m * m) as f64);
                    prop_assert!((v - ind.get(i, j)).abs() <= 1e-12);
                }
            }
            let b = corr2omni::b_matrix(&cfg, &prob);
            for i in 0..m {
                prop_assert!(b.row(i).sum().abs() <= 1e-9 * b.amax().max(1.0));
            }
            state = next;
        }
    }

    #[test]
    fn ari_label_invariance(labels in prop::collection::vec(0i64..4, 2..30), shift in 1i64..50) {
        let a = PartitionLabels::new(&labels);
        let renamed: Vec<i64> = labels.iter().map(|l| (l * 7 + shift) % 97).collect();
        let b = PartitionLabels::new(&renamed);
        prop_assert!((ari(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!((ari(&a, &b).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ward_and_cut(points in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..15), k_frac in 0.0..1.0f64) {
        let m = points.len();
        let d = DMatrix::from_fn(m, m, |i, j| ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt());
        let dend = ward_cluster(&d).unwrap();
        prop_assert_eq!(dend.merges().len(), m - 1);
        let h = dend.heights();
        prop_assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let k = 1 + ((m - 1) as f64 * k_frac) as usize;
        let labels = cut_tree(&dend, k).unwrap();
        let mut seen: Vec<usize> = labels.labels().to_vec();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), k);
    }

    #[test]
    fn distances_obey_triangle_inequality(vals in prop::collection::vec(-5.0..5.0f64, 3 * 8)) {
        let blocks: Vec<DMatrix<f64>> = (0..3).map(|k| DMatrix::from_row_slice(4, 2, &vals[k * 8..(k + 1) * 8])).collect();
        let d = analysis::pairwise_graph_distances(&blocks).unwrap();
        for i in 0..3 {
            prop_assert_eq!(d[(i, i)], 0.0);
            for j in 0..3 {
                prop_assert_eq!(d[(i, j)], d[(j, i)]);
                for l in 0..3 {
                    prop_assert!(d[(i, j)] <= d[(i, l)] + d[(l, j)] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn cmds_reconstructs_planar_points(points in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..12)) {
        let m = points.len();
        let d = DMatrix::from_fn(m, m, |i, j| ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt());
        let c = analysis::cmds(&d, 2).unwrap();
        prop_assert!(c.scree.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..m {
            for j in 0..m {
                let e = (c.coords.row(i) - c.coords.row(j)).norm();
                prop_assert!((e - d[(i, j)]).abs() <= 1e-8 * (1.0 + d.amax()));
            }
        }
    }

    #[test]
    fn alignment_matches_brute_force(n in 2usize..6, bits in prop::collection::vec(any::<bool>(), 2 * 15)) {
        let e = n * (n - 1) / 2;
        let a = symmetric_graph(n, &bits[..e]);
        let b = symmetric_graph(n, &bits[15..15 + e]);
        prop_assume!(a.sum() + b.sum() > 0.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        let mut count = 0.0;
        loop {
            total += DMatrix::from_fn(n, n, |i, j| a[(i, j)] - b[(perm[i], perm[j])]).norm_squared();
            count += 1.0;
            let Some(k) = (0..n - 1).rev().find(|&k| perm[k] < perm[k + 1]) else { break };
            let l = (k + 1..n).rev().find(|&l| perm[k] < perm[l]).unwrap();
            perm.swap(k, l);
            perm[k + 1..].reverse();
        }
        let den = total / count;
        if den > 0.0 {
            let s = analysis::alignment_strength(&a, &b).unwrap();
            prop_assert!((s - (1.0 - (&a - &b).norm_squared() / den)).abs() <= 1e-12);
        }
    }
}

#[test]
fn ari_of_independent_partitions_averages_zero() {
    use rand::Rng;
    let mut g = omnikit_core::rng::stream(44, 0);
    let draws = 1000;
    let mut sum = 0.0;
    for _ in 0..draws {
        let a: Vec<i64> = (0..30).map(|_| g.random_range(0..3)).collect();
        let b: Vec<i64> = (0..30).map(|_| g.random_range(0..3)).collect();
        sum += ari(&PartitionLabels::new(&a), &PartitionLabels::new(&b)).unwrap();
    }
    assert!((sum / draws as f64).abs() <= 0.02, "{}", sum / draws as f64);
}
