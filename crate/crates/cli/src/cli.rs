use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "subfrac", version, about = "Fractional powers of the sub-Laplacian on the Heisenberg group")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Group parameter of H^n.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// key=value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Monte-Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Time steps per path.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Ignore the cache for this run.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Any configuration key, e.g. --set lambda_nodes=24.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Also write the report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Allow n > 2 for expensive commands.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PsiRoute {
    Spatial,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentsArg {
    Reference,
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Moments,
    Kernel,
    Spectral,
    Limits,
    Routes,
    Semigroup,
    Decay,
    Conv,
    Commutator,
    Collapse,
}

/// Comma-separated list taken as one value.
pub type Reals = Vec<f64>;
pub type Index = Vec<u32>;

fn parse_reals(s: &str) -> Result<Reals, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}")))
        .collect()
}

fn parse_index(s: &str) -> Result<Index, String> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| format!("not a nonnegative integer: {p:?}")))
        .collect()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heat kernel.
    Hk {
        #[command(subcommand)]
        cmd: HkCmd,
    },
    /// Carnot–Carathéodory norm.
    Ccnorm {
        #[command(subcommand)]
        cmd: CcCmd,
    },
    /// Riesz-type kernels and their spectral constants.
    Riesz {
        #[command(subcommand)]
        cmd: RieszCmd,
    },
    /// The continued map psi(x, alpha).
    Psi {
        #[command(subcommand)]
        cmd: PsiCmd,
    },
    /// L^s applied to a test function.
    Fraclap {
        #[command(subcommand)]
        cmd: FraclapCmd,
    },
    /// Run a verification suite; exits with 2 when a check fails.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// CSV tables.
    Table {
        #[command(subcommand)]
        kind: TableCmd,
    },
    /// Re-run a JSON report under its embedded configuration and compare.
    Replay { report: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum HkCmd {
    /// h(t, x).
    Eval {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
    },
    /// ∫ x^γ h(t, x) dx.
    Moment {
        #[arg(long, value_parser = parse_index)]
        gamma: Index,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Defaults to quadrature for n = 1 and Monte Carlo otherwise.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CcCmd {
    Eval {
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
    },
}

#[derive(Debug, Subcommand)]
pub enum RieszCmd {
    /// P_alpha(x).
    Palpha {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
    },
    /// sigma(alpha).
    Sigma {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// d(alpha) for a horizontal index.
    Dalpha {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        index: usize,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Boundary moment 2 ∫ y^γ h(1,y) ‖y‖_c^{-alpha-w(γ)} dy.
    Bmoment {
        #[arg(long, value_parser = parse_index)]
        gamma: Index,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Monte-Carlo P_alpha ⋆ P_beta against P_{alpha+beta} (n = 1).
    Conv {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
    },
}

#[derive(Debug, Subcommand)]
pub enum PsiCmd {
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Test function, e.g. "gaussian(a=1)".
        #[arg(long)]
        phi: String,
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
        #[arg(long, value_enum, default_value = "spatial")]
        route: PsiRoute,
        /// Heat-kernel moments for pole values and the time route.
        #[arg(long, value_enum)]
        moments: Option<MomentsArg>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FraclapCmd {
    Apply {
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        phi: String,
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
        #[arg(long, value_enum)]
        moments: Option<MomentsArg>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TableCmd {
    /// psi(x, alpha) over a range of alpha.
    Psi {
        #[arg(long)]
        phi: String,
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        point: Reals,
        #[arg(long, allow_hyphen_values = true, default_value_t = -5.5)]
        alpha_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 3.5)]
        alpha_max: f64,
        #[arg(long, default_value_t = 19)]
        count: usize,
    },
    /// h(1, δ_r ω) along a ray.
    Hk {
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        direction: Reals,
        #[arg(long, default_value_t = 4.0)]
        r_max: f64,
        #[arg(long, default_value_t = 41)]
        count: usize,
    },
    /// sigma(alpha) over a range of alpha.
    Sigma {
        #[arg(long, allow_hyphen_values = true, default_value_t = -6.0)]
        alpha_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 19)]
        count: usize,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
}
