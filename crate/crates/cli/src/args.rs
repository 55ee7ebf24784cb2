use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omnikit_core::graph_store::MatrixFormat;
use omnikit_core::omni::SpecialConstruction;
use serde::{Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "omnikit", version, about = "Generalized Omnibus embeddings and corr2Omni")]
pub struct Cli {
    /// Master seed; recorded in the manifest of every command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Where to write the run manifest (defaults next to the main output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample graphs from the single-generator JRDPG model.
    Sample(SampleArgs),
    /// Build, validate or construct Omnibus weightings.
    #[command(subcommand)]
    Omni(OmniCommand),
    /// Adjacency spectral embedding of an Omnibus matrix.
    Embed(EmbedArgs),
    /// Induced, empirical and alignment-based correlation matrices.
    #[command(subcommand)]
    Corr(CorrCommand),
    /// Bounds on attainable flat induced correlation.
    Bounds(BoundsArgs),
    /// Find WOMNI weights whose induced correlation matches a target.
    Corr2omni(Corr2OmniArgs),
    /// Graph distances, clustering and CMDS from an Omnibus embedding.
    Analyze(AnalyzeArgs),
    /// Run a sequence of commands from a toml or json config.
    Pipeline(PipelineArgs),
    /// Re-run a reference experiment and compare with published values.
    Repro(ReproArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Omni(OmniCommand::Build(_)) => "omni build",
            Command::Omni(OmniCommand::Validate(_)) => "omni validate",
            Command::Omni(OmniCommand::Special(_)) => "omni special",
            Command::Embed(_) => "embed",
            Command::Corr(CorrCommand::Induced(_)) => "corr induced",
            Command::Corr(CorrCommand::Edges(_)) => "corr edges",
            Command::Corr(CorrCommand::Alignment(_)) => "corr alignment",
            Command::Corr(CorrCommand::Blocks(_)) => "corr blocks",
            Command::Bounds(_) => "bounds",
            Command::Corr2omni(_) => "corr2omni",
            Command::Analyze(_) => "analyze",
            Command::Pipeline(_) => "pipeline",
            Command::Repro(_) => "repro",
        }
    }
}

fn serialize_display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn serialize_display_opt<T: fmt::Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

/// A correlation matrix given inline or as a dense csv file.
///
/// `identity:M`, `flat:M:VALUE`, or a path.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Identity(usize),
    Flat(usize, f64),
    File(PathBuf),
}

impl FromStr for MatrixSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let int = |v: &str| v.parse::<usize>().map_err(|e| format!("bad size '{v}': {e}"));
        match parts.as_slice() {
            ["identity", m] => Ok(Self::Identity(int(m)?)),
            ["flat", m, v] => Ok(Self::Flat(int(m)?, v.parse().map_err(|e| format!("bad value '{v}': {e}"))?)),
            ["identity" | "flat", ..] => Err(format!("expected identity:M or flat:M:VALUE, got '{s}'")),
            _ => Ok(Self::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity(m) => write!(f, "identity:{m}"),
            Self::Flat(m, v) => write!(f, "flat:{m}:{v}"),
            Self::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// An Omnibus weighting: `classical`, a named construction (`m3-`, `m3+`,
/// `m4+`), a WOMNI row-sum matrix (`*.csv`) or a weight tensor (`*.json`).
#[derive(Debug, Clone, PartialEq)]
pub enum WeightsSource {
    Named(SpecialConstruction),
    Alpha(PathBuf),
    Tensor(PathBuf),
}

impl FromStr for WeightsSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(p) = s.strip_prefix("alpha:") {
            return Ok(Self::Alpha(p.into()));
        }
        if let Some(p) = s.strip_prefix("tensor:") {
            return Ok(Self::Tensor(p.into()));
        }
        let lower = s.to_ascii_lowercase();
        if lower.ends_with(".json") {
            return Ok(Self::Tensor(s.into()));
        }
        if lower.ends_with(".csv") {
            return Ok(Self::Alpha(s.into()));
        }
        s.parse().map(Self::Named).map_err(|e| e.to_string())
    }
}

impl fmt::Display for WeightsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Named(c) => write!(f, "{}", special_name(c)),
            Self::Alpha(p) => write!(f, "alpha:{}", p.display()),
            Self::Tensor(p) => write!(f, "tensor:{}", p.display()),
        }
    }
}

pub fn special_name(c: &SpecialConstruction) -> &'static str {
    match c {
        SpecialConstruction::Classical => "classical",
        SpecialConstruction::M3Minus => "m3-",
        SpecialConstruction::M3Plus => "m3+",
        SpecialConstruction::M4Plus => "m4+",
        SpecialConstruction::M5Plus { .. } => "m5+",
    }
}

/// Embedding dimension: a number or `auto` (profile-likelihood elbow).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Auto,
    Fixed(usize),
}

impl FromStr for Dim {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(Dim::Auto)
        } else {
            match s.parse::<usize>() {
                Ok(0) | Err(_) => Err(format!("expected a positive integer or 'auto', got '{s}'")),
                Ok(d) => Ok(Dim::Fixed(d)),
            }
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Auto => f.write_str("auto"),
            Dim::Fixed(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    DenseCsv,
    EdgeList,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::DenseCsv => MatrixFormat::DenseCsv,
            FormatArg::EdgeList => MatrixFormat::EdgeList,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreprocessStep {
    Binarize,
    Symmetrize,
    DropIsolated,
    Intersect,
}

/// Where and how to read a graph collection.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphInput {
    /// Directory holding one matrix file per graph (read in file-name order).
    #[arg(long)]
    pub graphs: PathBuf,

    #[arg(long, value_enum, default_value_t = FormatArg::DenseCsv)]
    pub format: FormatArg,

    /// Preprocessing steps, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub preprocess: Vec<PreprocessStep>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub m: usize,

    /// Pairwise inherent edge correlation; every graph gets ν = √ρ.
    #[arg(long, default_value_t = 0.0, conflicts_with = "nu")]
    pub rho: f64,

    /// Per-graph correlation with the generator, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<f64>>,

    /// Output directory for graph_NNN.csv, latents.csv and R.csv.
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the edge-probability matrix P.csv.
    #[arg(long)]
    pub write_probabilities: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmniCommand {
    /// Assemble the mn×mn Omnibus matrix.
    Build(OmniBuildArgs),
    /// Check a weighting against every constraint; exit 1 on violations.
    Validate(OmniValidateArgs),
    /// Write a named construction as a weight tensor.
    Special(OmniSpecialArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OmniBuildArgs {
    #[command(flatten)]
    pub input: GraphInput,

    #[arg(long, default_value = "classical")]
    #[serde(serialize_with = "serialize_display")]
    pub weights: WeightsSource,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OmniValidateArgs {
    #[arg(long)]
    #[serde(serialize_with = "serialize_display")]
    pub weights: WeightsSource,

    /// Number of graphs, needed for `classical`.
    #[arg(long)]
    pub m: Option<usize>,

    /// Write the violation report as json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OmniSpecialArgs {
    /// classical, m3-, m3+ or m4+.
    #[arg(long)]
    #[serde(serialize_with = "serialize_display")]
    pub name: WeightsSource,

    #[arg(long)]
    pub m: Option<usize>,

    /// Weight tensor (json, axis order [k][l][q]).
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the row-sum matrix.
    #[arg(long)]
    pub out_alpha: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    /// A prebuilt Omnibus matrix (dense csv).
    #[arg(long, conflicts_with_all = ["graphs", "weights"], required_unless_present = "graphs")]
    pub omni: Option<PathBuf>,

    /// Build the Omnibus matrix from this graph directory instead.
    #[arg(long)]
    pub graphs: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::DenseCsv)]
    pub format: FormatArg,

    #[arg(long, value_enum, value_delimiter = ',')]
    pub preprocess: Vec<PreprocessStep>,

    #[arg(long)]
    #[serde(serialize_with = "serialize_display_opt")]
    pub weights: Option<WeightsSource>,

    #[arg(long, default_value = "auto")]
    #[serde(serialize_with = "serialize_display")]
    pub d: Dim,

    /// Largest dimension considered by `--d auto`.
    #[arg(long)]
    pub max_d: Option<usize>,

    /// Stacked embedding, one row per (graph, vertex).
    #[arg(long)]
    pub out: PathBuf,

    /// Scree data as tidy csv (index, eigenvalue).
    #[arg(long)]
    pub out_scree: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrCommand {
    /// Correlation induced by a weighting under an inherent correlation.
    Induced(CorrInducedArgs),
    /// Pearson correlation of edge indicators across graphs.
    Edges(CorrEdgesArgs),
    /// Pairwise alignment strength, an estimate of inherent correlation.
    Alignment(CorrAlignmentArgs),
    /// Correlation of embedded positions across graph blocks.
    Blocks(CorrBlocksArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrInducedArgs {
    #[arg(long)]
    #[serde(serialize_with = "serialize_display")]
    pub weights: WeightsSource,

    /// Inherent correlation: identity:M, flat:M:VALUE or a csv file.
    #[arg(long = "R", alias = "r")]
    #[serde(serialize_with = "serialize_display")]
    pub r: MatrixSource,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrEdgesArgs {
    #[command(flatten)]
    pub input: GraphInput,

    /// Edge-probability matrix to center at instead of per-graph means.
    #[arg(long)]
    pub probabilities: Option<PathBuf>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrAlignmentArgs {
    #[command(flatten)]
    pub input: GraphInput,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorrBlocksArgs {
    /// Stacked embedding from `embed`.
    #[arg(long)]
    pub embedding: PathBuf,

    #[arg(long)]
    pub m: usize,

    /// Reference positions to center at (n×d csv).
    #[arg(long)]
    pub reference: Option<PathBuf>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,

    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,

    /// Random WOMNI trials per m for the empirical maximum (0 skips it;
    /// only run for m ≤ 10).
    #[arg(long, default_value_t = 0)]
    pub trials: usize,

    /// Tidy csv, one row per m.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Corr2OmniArgs {
    /// Inherent correlation: identity:M, flat:M:VALUE or a csv file.
    #[arg(long = "R", alias = "r")]
    #[serde(serialize_with = "serialize_display")]
    pub r: MatrixSource,

    /// Target induced correlation, same forms as --R.
    #[arg(long)]
    #[serde(serialize_with = "serialize_display")]
    pub target: MatrixSource,

    /// Nonnegative symmetric pair weights (csv).
    #[arg(long)]
    pub pair_weights: Option<PathBuf>,

    /// Starting WOMNI row-sum matrix (csv); defaults to classical OMNI.
    #[arg(long, alias = "womni")]
    pub init: Option<PathBuf>,

    #[arg(long, default_value_t = 5000)]
    pub iters: usize,

    #[arg(long, default_value_t = 8)]
    pub restarts: usize,

    #[arg(long, default_value_t = 0.0)]
    pub eps_stress: f64,

    /// Dominance margin (default 1e-3·m).
    #[arg(long)]
    pub eps_dom: Option<f64>,

    /// Row-sum matrix of the solution.
    #[arg(long)]
    pub out_alpha: Option<PathBuf>,

    /// Full weight tensor of the solution (json).
    #[arg(long)]
    pub out_c: Option<PathBuf>,

    /// Stress trace as tidy csv (iter, sigma, max_constraint_violation).
    #[arg(long)]
    pub out_log: Option<PathBuf>,

    /// Induced correlation of the solution.
    #[arg(long)]
    pub out_induced: Option<PathBuf>,

    /// Summary report (json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Stacked embedding from `embed`.
    #[arg(long)]
    pub embedding: PathBuf,

    #[arg(long)]
    pub m: usize,

    /// Vertices per graph (default: rows / m).
    #[arg(long)]
    pub n: Option<usize>,

    /// Cut the ward.D2 dendrogram into this many clusters.
    #[arg(long)]
    pub cluster: Option<usize>,

    /// Known graph labels (one integer per graph) for ARI.
    #[arg(long, requires = "cluster")]
    pub truth: Option<PathBuf>,

    /// CMDS dimension.
    #[arg(long, default_value_t = 2)]
    pub cmds_dim: usize,

    #[arg(long)]
    pub out: PathBuf,

    /// CMDS coordinates as tidy csv (graph, dim, value).
    #[arg(long)]
    pub out_cmds: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    /// toml or json config.
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    FlatM3,
    FlatM4,
    FlatM5,
    CovarianceSim,
    FlatBounds,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,

    /// SMACOF iteration cap.
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,

    /// Simulation replicates.
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,

    /// Simulation vertex count.
    #[arg(long, default_value_t = 500)]
    pub n: usize,

    /// Graph counts for flat_bounds.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5, 10, 20, 30, 50, 100])]
    pub m: Vec<usize>,

    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,

    /// Report (json).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Plot data as tidy csv.
    #[arg(long)]
    pub out_data: Option<PathBuf>,
}
