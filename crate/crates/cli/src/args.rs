use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "corrgeom",
    version,
    about = "Correlation geometries of sampled effective models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the correlation geometry of a model file or a built-in model.
    Build(BuildArgs),
    /// Decide whether two geometries are unitarily equivalent.
    Compare(CompareArgs),
    /// Compare a model with its gauge transform.
    GaugeCheck(GaugeArgs),
    /// Compare a model with its transport along a point map.
    DiffeoCheck(DiffeoArgs),
    /// Test whether a unitary leaves a geometry invariant.
    SymmetryCheck(SymmetryArgs),
    /// Convex combination of two geometries.
    Mix(MixArgs),
    /// Dimension of the regular stratum, by formula and numerically.
    DimCheck(DimArgs),
    /// Atom counts of a built-in family over a range of sample sizes.
    Resolution(ResolutionArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Relative tolerance for verdicts.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Aggregation tolerance (`inf` merges everything mergeable, 0 nothing).
    #[arg(long = "agg-tol", default_value_t = 1e-8)]
    pub agg_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the primary output here instead of stdout.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    /// Write the run report here instead of stderr.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    CirclePlaneWaves,
    CircleTrigPair,
    TorusTetrads,
    LatticeDiracSea,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Boundary {
    Periodic,
    Antiperiodic,
}

#[derive(Debug, Clone, Args)]
pub struct BuiltinArgs {
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Sample points (points per dimension for torus-tetrads).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 16)]
    pub sites: usize,
    /// Sea size; half the sites by default.
    #[arg(long = "m-fields")]
    pub m_fields: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub charge: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long, value_enum, default_value = "antiperiodic")]
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Model file (JSON).
    #[arg(conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub builtin: BuiltinArgs,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChiKind {
    Const,
    Sin,
    Random,
}

#[derive(Debug, Args)]
pub struct GaugeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value = "sin")]
    pub chi: ChiKind,
    /// Value of a constant gauge function.
    #[arg(long = "chi-value", default_value_t = 1.0)]
    pub chi_value: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DiffeoArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Rotate a one-dimensional point chain by this many points.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub shift: i64,
    /// Reflect the chain `k -> -k` (applied after the shift).
    #[arg(long)]
    pub reflect: bool,
    /// JSON file `{"perm": [...], "jacobians": [[[...]]]}` with `perm[new] = old`.
    #[arg(long, conflicts_with_all = ["shift", "reflect"])]
    pub map: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    /// Geometry file; used together with --unitary.
    #[arg(conflicts_with = "builtin", requires = "unitary")]
    pub geometry: Option<PathBuf>,
    /// Unitary as a verdict file with a witness or a row-major `[re, im]` list.
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    #[command(flatten)]
    pub builtin: BuiltinArgs,
    /// Lattice translation by this many points (circle-plane-waves).
    #[arg(long, allow_negative_numbers = true, conflicts_with = "all_shifts")]
    pub shift: Option<i64>,
    /// Check every lattice translation.
    #[arg(long = "all-shifts")]
    pub all_shifts: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[arg(long)]
    pub tau: f64,
    /// Verdict file whose witness aligns the first geometry with the second.
    #[arg(long = "aligner-from")]
    pub aligner_from: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[arg(long)]
    pub f: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub q: usize,
    /// Random draws allowed before giving up.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    #[command(flatten)]
    pub builtin: BuiltinArgs,
    /// Sample sizes (sites for lattice-dirac-sea).
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[command(flatten)]
    pub common: Common,
}
