use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use omnikit_core::analysis::{self, PartitionLabels};
use omnikit_core::corr2omni::{self, Corr2OmniOptions, Init};
use omnikit_core::corr_theory::{
    flat_check, flat_lower_bound, flat_upper_bound, induced_correlation, random_search_flat_max, CorrRole,
    CorrelationMatrix,
};
use omnikit_core::graph_store::{format_f64, preprocess, GraphCollection, PreprocessOptions};
use omnikit_core::jrdpg::{empirical_edge_correlation, sample_dirichlet_latents, sample_jrdpg_gen, GeneratorSpec};
use omnikit_core::omni::{
    alpha_matrix, build_omnibus, check_womni_alpha, classical_omni, special, validate, womni_from_alpha, OmniWeights,
    SpecialConstruction, WeightRowSums, ALPHA_TOL,
};
use omnikit_core::rng::child_seed;
use omnikit_core::spectral::{ase, default_max_d, select_dim, spectrum};
use serde::Serialize;

use crate::args::*;
use crate::manifest::{tidy_csv, Ctx, Failed};

/// `out.csv` → `out.csv.manifest.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn print_matrix(x: &DMatrix<f64>) {
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|j| format!("{:.6}", x[(i, j)])).collect();
        println!("{}", row.join(","));
    }
}

fn load_graphs(ctx: &mut Ctx, input: &GraphInput) -> Result<GraphCollection> {
    let c = ctx.read_collection(&input.graphs, input.format.into())?;
    if input.preprocess.is_empty() {
        return Ok(c);
    }
    let has = |s| input.preprocess.contains(&s);
    let opts = PreprocessOptions {
        binarize: has(PreprocessStep::Binarize),
        symmetrize: has(PreprocessStep::Symmetrize),
        drop_isolated: has(PreprocessStep::DropIsolated),
        intersect_vertices: has(PreprocessStep::Intersect),
    };
    let out = preprocess(&c, &opts)?;
    log::info!("preprocessing kept {} of {} vertices", out.n(), c.n());
    Ok(out)
}

fn resolve_weights(ctx: &mut Ctx, src: &WeightsSource, m: Option<usize>) -> Result<OmniWeights> {
    let w = match src {
        WeightsSource::Named(SpecialConstruction::Classical) => {
            let m = m.context("classical weights need the number of graphs (--m)")?;
            classical_omni(m)
        }
        WeightsSource::Named(c) => {
            let own = match c {
                SpecialConstruction::M3Minus | SpecialConstruction::M3Plus => 3,
                _ => 4,
            };
            special(c, m.unwrap_or(own))?
        }
        WeightsSource::Alpha(p) => womni_from_alpha(&WeightRowSums::new(ctx.read_matrix(p)?)?)?,
        WeightsSource::Tensor(p) => {
            let t = omnikit_core::graph_store::load_tensor(p)?;
            ctx.input(p)?;
            OmniWeights::from_tensor(&t)?
        }
    };
    if let Some(m) = m {
        if w.m() != m {
            bail!("weights are for {} graphs, expected {m}", w.m());
        }
    }
    Ok(w)
}

fn resolve_corr(ctx: &mut Ctx, src: &MatrixSource, role: CorrRole) -> Result<CorrelationMatrix> {
    Ok(match src {
        MatrixSource::Identity(m) => CorrelationMatrix::identity(*m, role),
        MatrixSource::Flat(m, v) => CorrelationMatrix::flat(*m, *v, role)?,
        MatrixSource::File(p) => CorrelationMatrix::new(ctx.read_matrix(p)?, role)?,
    })
}

pub fn sample(a: &SampleArgs, seed: u64, ctx: &mut Ctx) -> Result<()> {
    let latent_seed = child_seed(seed, 0);
    let graph_seed = child_seed(seed, 1);
    ctx.seed("latents", latent_seed);
    ctx.seed("graphs", graph_seed);
    let latents = sample_dirichlet_latents(a.n, latent_seed)?;
    let spec = match &a.nu {
        Some(nu) => GeneratorSpec {
            nu: nu.clone(),
            seed: graph_seed,
        },
        None => GeneratorSpec::flat(a.m, a.rho, graph_seed)?,
    };
    let c = sample_jrdpg_gen(&latents, &spec, a.m)?;
    ctx.write_collection(&c, &a.out.join("graphs"))?;
    ctx.write_matrix(latents.x(), &a.out.join("latents.csv"))?;
    ctx.write_matrix(spec.inherent_correlation().values(), &a.out.join("R.csv"))?;
    if a.write_probabilities {
        ctx.write_matrix(&latents.probabilities(), &a.out.join("P.csv"))?;
    }
    println!("sampled {} graphs on {} vertices into {}", a.m, a.n, a.out.display());
    ctx.manifest_at(a.out.join("manifest.json"));
    Ok(())
}

pub fn omni_build(a: &OmniBuildArgs, ctx: &mut Ctx) -> Result<()> {
    let c = load_graphs(ctx, &a.input)?;
    let w = resolve_weights(ctx, &a.weights, Some(c.m()))?;
    let mat = build_omnibus(&c, &w)?;
    ctx.write_matrix(&mat, &a.out)?;
    println!("wrote {}×{} Omnibus matrix to {}", mat.nrows(), mat.ncols(), a.out.display());
    ctx.manifest_at(sidecar(&a.out));
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport {
    ok: bool,
    womni: bool,
    violations: Vec<String>,
}

pub fn omni_validate(a: &OmniValidateArgs, ctx: &mut Ctx) -> Result<()> {
    let report = match &a.weights {
        WeightsSource::Alpha(p) => {
            let alpha = WeightRowSums::new(ctx.read_matrix(p)?)?;
            match check_womni_alpha(&alpha, ALPHA_TOL) {
                Ok(()) => ValidateReport {
                    ok: true,
                    womni: true,
                    violations: vec![],
                },
                Err(e) => ValidateReport {
                    ok: false,
                    womni: true,
                    violations: vec![e.to_string()],
                },
            }
        }
        src => {
            let w = resolve_weights(ctx, src, a.m)?;
            let v = validate(&w);
            ValidateReport {
                ok: v.is_ok(),
                womni: w.is_womni(),
                violations: v.violations.iter().map(|v| v.to_string()).collect(),
            }
        }
    };
    if let Some(out) = &a.out {
        ctx.write_json(out, &report)?;
    }
    if report.ok {
        println!("ok");
    } else {
        for v in &report.violations {
            println!("{v}");
        }
    }
    if let Some(out) = &a.out {
        ctx.manifest_at(sidecar(out));
    }
    if !report.ok {
        return Err(Failed(format!("{} constraint violation(s)", report.violations.len())).into());
    }
    Ok(())
}

pub fn omni_special(a: &OmniSpecialArgs, ctx: &mut Ctx) -> Result<()> {
    if !matches!(a.name, WeightsSource::Named(_)) {
        bail!("--name must be classical, m3-, m3+ or m4+");
    }
    let w = resolve_weights(ctx, &a.name, a.m)?;
    ctx.write_tensor(&w.to_tensor(), &a.out)?;
    if let Some(p) = &a.out_alpha {
        ctx.write_matrix(alpha_matrix(&w).matrix(), p)?;
    }
    ctx.manifest_at(sidecar(&a.out));
    Ok(())
}

pub fn embed(a: &EmbedArgs, ctx: &mut Ctx) -> Result<()> {
    let mat = match (&a.omni, &a.graphs) {
        (Some(p), _) => ctx.read_matrix(p)?,
        (None, Some(dir)) => {
            let input = GraphInput {
                graphs: dir.clone(),
                format: a.format,
                preprocess: a.preprocess.clone(),
            };
            let c = load_graphs(ctx, &input)?;
            let src = a.weights.clone().unwrap_or(WeightsSource::Named(SpecialConstruction::Classical));
            let w = resolve_weights(ctx, &src, Some(c.m()))?;
            build_omnibus(&c, &w)?
        }
        (None, None) => bail!("either --omni or --graphs is required"),
    };
    let dim = mat.nrows();
    let max_d = a.max_d.unwrap_or_else(|| default_max_d(dim, None)).min(dim);
    let needs_scree = a.d == Dim::Auto || a.out_scree.is_some();
    let scree = if needs_scree { Some(spectrum(&mat, max_d)?) } else { None };
    let d = match a.d {
        Dim::Fixed(d) => d,
        Dim::Auto => select_dim(scree.as_ref().expect("computed above"), max_d)?,
    };
    let e = ase(&mat, d)?;
    if e.is_degenerate() {
        log::warn!("embedding is degenerate: some of the top {d} eigenvalues are not positive");
    }
    ctx.write_matrix(e.xhat(), &a.out)?;
    if let (Some(p), Some(s)) = (&a.out_scree, &scree) {
        let rows = s.values().iter().enumerate().map(|(i, v)| [(i + 1).to_string(), format_f64(*v)]);
        ctx.write_text(p, &tidy_csv(["index", "eigenvalue"], rows))?;
    }
    println!("embedded {dim} rows in dimension {d}");
    ctx.manifest_at(sidecar(&a.out));
    Ok(())
}

fn emit_matrix(ctx: &mut Ctx, x: &DMatrix<f64>, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => {
            ctx.write_matrix(x, p)?;
            ctx.manifest_at(sidecar(p));
    Ok(())
        }
        None => {
            print_matrix(x);
            Ok(())
        }
    }
}

pub fn corr_induced(a: &CorrInducedArgs, ctx: &mut Ctx) -> Result<()> {
    let r = resolve_corr(ctx, &a.r, CorrRole::Inherent)?;
    let w = resolve_weights(ctx, &a.weights, Some(r.m()))?;
    let ind = induced_correlation(&alpha_matrix(&w), &r)?;
    let fc = flat_check(&ind, 1e-9);
    if fc.is_flat {
        eprintln!("flat at {:.6}", fc.value);
    }
    emit_matrix(ctx, ind.values(), &a.out)
}

pub fn corr_edges(a: &CorrEdgesArgs, ctx: &mut Ctx) -> Result<()> {
    let c = load_graphs(ctx, &a.input)?;
    let p = a.probabilities.as_deref().map(|p| ctx.read_matrix(p)).transpose()?;
    let r = empirical_edge_correlation(&c, p.as_ref())?;
    emit_matrix(ctx, r.values(), &a.out)
}

pub fn corr_alignment(a: &CorrAlignmentArgs, ctx: &mut Ctx) -> Result<()> {
    let c = load_graphs(ctx, &a.input)?;
    let m = c.m();
    let mut r = DMatrix::identity(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let s = analysis::alignment_strength(c.graph(i), c.graph(j))?;
            r[(i, j)] = s;
            r[(j, i)] = s;
        }
    }
    emit_matrix(ctx, &r, &a.out)
}

fn split_blocks(xhat: &DMatrix<f64>, m: usize, n: Option<usize>) -> Result<(usize, Vec<DMatrix<f64>>)> {
    if m == 0 || xhat.nrows() % m != 0 {
        bail!("embedding has {} rows, not divisible by m = {m}", xhat.nrows());
    }
    let n = n.unwrap_or(xhat.nrows() / m);
    if n * m != xhat.nrows() {
        bail!("embedding has {} rows, expected m·n = {}", xhat.nrows(), m * n);
    }
    Ok((n, (0..m).map(|s| xhat.rows(s * n, n).into_owned()).collect()))
}

pub fn corr_blocks(a: &CorrBlocksArgs, ctx: &mut Ctx) -> Result<()> {
    let xhat = ctx.read_matrix(&a.embedding)?;
    let (_, blocks) = split_blocks(&xhat, a.m, None)?;
    let reference = a.reference.as_deref().map(|p| ctx.read_matrix(p)).transpose()?;
    let r = analysis::empirical_block_correlation(&blocks, reference.as_ref())?;
    emit_matrix(ctx, r.values(), &a.out)
}

/// Each search trial solves a dense system in m(m-1)/2 unknowns.
const SEARCH_MAX_M: usize = 10;

#[derive(Serialize)]
struct BoundsRow {
    m: usize,
    rho: f64,
    lower: f64,
    upper: f64,
    upper_valid: bool,
    classical: f64,
    search_max: Option<f64>,
    search_min: Option<f64>,
    search_flat: Option<usize>,
}

pub fn bounds(a: &BoundsArgs, seed: u64, ctx: &mut Ctx) -> Result<()> {
    let mut rows = Vec::new();
    for &m in &a.m {
        let ub = flat_upper_bound(m, a.rho)?;
        let search = if a.trials > 0 && m > SEARCH_MAX_M {
            log::warn!("skipping the random search at m = {m}: it is limited to m ≤ {SEARCH_MAX_M}");
            None
        } else if a.trials > 0 {
            let s = child_seed(seed, m as u64);
            ctx.seed(&format!("search_m{m}"), s);
            Some(random_search_flat_max(m, a.rho, a.trials, s)?)
        } else {
            None
        };
        rows.push(BoundsRow {
            m,
            rho: a.rho,
            lower: flat_lower_bound(m, a.rho)?,
            upper: ub.value,
            upper_valid: ub.valid,
            classical: 0.75 + a.rho / 4.0,
            search_max: search.as_ref().filter(|s| s.flat_found > 0).map(|s| s.best_r),
            search_min: search.as_ref().filter(|s| s.flat_found > 0).map(|s| s.min_r),
            search_flat: search.as_ref().map(|s| s.flat_found),
        });
    }
    println!("m\tlower\tupper\tclassical\tsearch max");
    for r in &rows {
        let upper = if r.upper_valid { format!("{:.4}", r.upper) } else { format!("({:.4})", r.upper) };
        let search = r.search_max.map_or("-".into(), |v| format!("{v:.4}"));
        println!("{}\t{:.4}\t{upper}\t{:.4}\t{search}", r.m, r.lower, r.classical);
    }
    let opt = |v: Option<f64>| v.map_or(String::new(), format_f64);
    match &a.out {
        Some(p) => {
            let csv = tidy_csv(
                ["m", "rho", "lower", "upper", "upper_valid", "classical", "search_max", "search_min", "search_flat"],
                rows.iter().map(|r| {
                    [
                        r.m.to_string(),
                        format_f64(r.rho),
                        format_f64(r.lower),
                        format_f64(r.upper),
                        r.upper_valid.to_string(),
                        format_f64(r.classical),
                        opt(r.search_max),
                        opt(r.search_min),
                        r.search_flat.map_or(String::new(), |v| v.to_string()),
                    ]
                }),
            );
            ctx.write_text(p, &csv)?;
            ctx.manifest_at(sidecar(p));
    Ok(())
        }
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct Corr2OmniReport {
    m: usize,
    stress: f64,
    ridge: f64,
    start: usize,
    iterations: usize,
    induced: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
}

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
}

pub fn corr2omni(a: &Corr2OmniArgs, seed: u64, ctx: &mut Ctx) -> Result<()> {
    let r = resolve_corr(ctx, &a.r, CorrRole::Inherent)?;
    let target = resolve_corr(ctx, &a.target, CorrRole::Target)?;
    let weights = a.pair_weights.as_deref().map(|p| ctx.read_matrix(p)).transpose()?;
    let init = match &a.init {
        Some(p) => Init::Alpha(WeightRowSums::new(ctx.read_matrix(p)?)?),
        None => Init::Classical,
    };
    ctx.seed("restarts", seed);
    let opts = Corr2OmniOptions {
        weights,
        max_iter: a.iters,
        eps_stress: a.eps_stress,
        eps_dom: a.eps_dom,
        init,
        restarts: a.restarts,
        seed,
        ..Default::default()
    };
    let res = corr2omni::corr2omni(&r, &target, &opts)?;
    let m = r.m();
    if let Some(p) = &a.out_alpha {
        ctx.write_matrix(res.alpha.matrix(), p)?;
    }
    if let Some(p) = &a.out_c {
        ctx.write_tensor(&res.weights.to_tensor(), p)?;
    }
    if let Some(p) = &a.out_induced {
        ctx.write_matrix(res.induced.values(), p)?;
    }
    if let Some(p) = &a.out_log {
        let rows = res.stress_log.iter().map(|e| {
            [
                e.iter.to_string(),
                format_f64(e.sigma),
                format_f64(e.max_constraint_violation),
            ]
        });
        ctx.write_text(p, &tidy_csv(["iter", "sigma", "max_constraint_violation"], rows))?;
    }
    let report = Corr2OmniReport {
        m,
        stress: res.stress,
        ridge: res.ridge,
        start: res.start,
        iterations: res.stress_log.last().map_or(0, |e| e.iter),
        induced: rows_of(res.induced.values()),
        alpha: rows_of(res.alpha.matrix()),
    };
    if let Some(p) = &a.out {
        ctx.write_json(p, &report)?;
    }
    println!("stress {:.6} after {} iterations (start {}, ridge {:e})", res.stress, report.iterations, res.start, res.ridge);
    let fc = flat_check(&res.induced, 1e-6);
    if fc.is_flat {
        println!("induced correlation flat at {:.6}", fc.value);
    }
    let primary = [&a.out, &a.out_alpha, &a.out_c, &a.out_induced, &a.out_log]
        .into_iter()
        .flatten()
        .next()
        .map(|p| sidecar(p));
    match primary {
        Some(p) => ctx.manifest_at(p),
        None => print_matrix(res.alpha.matrix()),
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    m: usize,
    n: usize,
    d: usize,
    distances: Vec<Vec<f64>>,
    merges: Vec<analysis::Merge>,
    labels: Option<Vec<usize>>,
    ari: Option<f64>,
    cmds: Vec<Vec<f64>>,
    scree: Vec<f64>,
}

fn parse_labels(text: &str) -> Result<Vec<i64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().with_context(|| format!("bad label '{t}'")))
        .collect()
}

pub fn analyze(a: &AnalyzeArgs, ctx: &mut Ctx) -> Result<()> {
    let xhat = ctx.read_matrix(&a.embedding)?;
    let (n, blocks) = split_blocks(&xhat, a.m, a.n)?;
    let d = analysis::pairwise_graph_distances(&blocks)?;
    let dend = analysis::ward_cluster(&d)?;
    let labels = a.cluster.map(|k| analysis::cut_tree(&dend, k)).transpose()?;
    let ari = match (&a.truth, &labels) {
        (Some(p), Some(labels)) => {
            let truth = parse_labels(&ctx.read_text(p)?)?;
            if truth.len() != a.m {
                bail!("{} has {} labels, expected one per graph ({})", p.display(), truth.len(), a.m);
            }
            Some(analysis::ari(labels, &PartitionLabels::new(&truth))?)
        }
        _ => None,
    };
    let k = a.cmds_dim.min(a.m);
    let c = analysis::cmds(&d, k)?;
    let report = AnalyzeReport {
        m: a.m,
        n,
        d: xhat.ncols(),
        distances: rows_of(&d),
        merges: dend.merges().to_vec(),
        labels: labels.as_ref().map(|l| l.labels().to_vec()),
        ari,
        cmds: rows_of(&c.coords),
        scree: c.scree.clone(),
    };
    ctx.write_json(&a.out, &report)?;
    if let Some(p) = &a.out_cmds {
        let mut rows = Vec::new();
        for g in 0..a.m {
            for j in 0..c.coords.ncols() {
                rows.push([(g + 1).to_string(), (j + 1).to_string(), format_f64(c.coords[(g, j)])]);
            }
        }
        ctx.write_text(p, &tidy_csv(["graph", "dim", "value"], rows))?;
    }
    if let Some(ari) = ari {
        println!("ARI {ari:.4}");
    }
    ctx.manifest_at(sidecar(&a.out));
    Ok(())
}
