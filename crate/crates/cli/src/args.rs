use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "autores", version, about = "Phase locking under chirped external and parametric driving")]
pub struct Cli {
    /// Flat key=value file; keys are long flag names, flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for data files.
    #[arg(long, global = true, env = "AUTORES_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of data files; printed reports are always json.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Roots of the phase function with multiplicities.
    Roots(RootsArgs),
    /// Region of the (delta, nu) plane by root count.
    Region(PhaseArgs),
    /// Traced bifurcation curves s-, s0, s+ at fixed kappa.
    Curves(CurvesArgs),
    /// Mask of the (delta, kappa) set where multiple roots exist.
    Domain(DomainArgs),
    /// Locked-solution series evaluated on a tau grid.
    Series(SeriesArgs),
    /// Residual of the truncated series in the averaged system.
    Residual(ResidualArgs),
    /// Stability verdict, exponents and an optional Lyapunov decrease check.
    Stability(StabilityArgs),
    /// Integrate the averaged system.
    Simulate(SimulateArgs),
    /// Integrate the full chirped oscillator.
    Oscillator(OscillatorArgs),
    /// Capture mask over a grid of initial data.
    Basin(BasinArgs),
    /// Choose (delta, nu) for a prescribed locked phase.
    Design(DesignArgs),
    /// Datasets behind the figures.
    Figure(FigureArgs),
}

fn angle(s: &str) -> Result<f64, String> {
    crate::config::parse_angle(s)
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    /// Radians; `pi` expressions such as `5pi/6` are accepted.
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub nu: f64,
    #[arg(long)]
    pub kappa: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RootsArgs {
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Derivatives below this count as zero when deciding multiplicity.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_root: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_sep: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 2000)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DomainArgs {
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub kappa_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa_max: f64,
    #[arg(long, default_value_t = 301)]
    pub nx: usize,
    #[arg(long, default_value_t = 201)]
    pub ny: usize,
}

/// The averaged model: `δ = β₀√λ`, `κ = γ₀√λ` plus optional tails.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub nu: f64,
    #[arg(long)]
    pub kappa: f64,
    /// Comma-separated alpha_1, alpha_2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha_tail: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta_tail: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma_tail: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Plus,
    Minus,
}

/// A root of the phase function, picked as the one nearest `--sigma`.
#[derive(Debug, Clone, Args)]
pub struct RootPick {
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = BranchArg::Plus)]
    pub branch: BranchArg,
    /// Truncation order; the case maximum when omitted.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_root: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_sep: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub root: RootPick,
    #[arg(long, default_value_t = 20.0)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 2000.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub root: RootPick,
    #[arg(long, default_value_t = 1e3)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub tau_max: f64,
    /// Log-spaced points in [tau-min, tau-max].
    #[arg(long, default_value_t = 13)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub root: RootPick,
    /// Also integrate a perturbed solution and check the Lyapunov decrease.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 0.5)]
    pub kappa_margin: f64,
    #[arg(long, default_value_t = 20.0)]
    pub tau0: f64,
    #[arg(long, default_value_t = 300.0)]
    pub tau_end: f64,
    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    pub kick: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Polar,
    Cartesian,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub psi0: Option<f64>,
    /// Start on the stable series at this root instead of (rho0, psi0).
    #[arg(long, value_parser = angle, allow_hyphen_values = true, conflicts_with_all = ["rho0", "psi0"])]
    pub from_series: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub tau0: f64,
    #[arg(long, default_value_t = 500.0)]
    pub tau_end: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Polar)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-11)]
    pub atol: f64,
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OscillatorArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Start on the series at this root (lifted to the oscillator) instead of rest.
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub from_series: Option<f64>,
    /// Slow start time; the oscillator starts at t0 = 4 tau0 / epsilon.
    #[arg(long, default_value_t = 20.0)]
    pub tau0: f64,
    #[arg(long, default_value_t = 50.0)]
    pub tau_end: f64,
    #[arg(long, default_value_t = 0.25)]
    pub dt: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-11)]
    pub atol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BasinArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub rho_min: f64,
    #[arg(long)]
    pub rho_max: f64,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub psi_min: f64,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub psi_max: f64,
    #[arg(long, default_value_t = 16)]
    pub n_rho: usize,
    #[arg(long, default_value_t = 16)]
    pub n_psi: usize,
    /// Jitter each sample within its cell using this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 20.0)]
    pub tau0: f64,
    #[arg(long, default_value_t = 500.0)]
    pub tau_end: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub sigma: f64,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig33,
    Fig34,
    Fig35,
    Fig6,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub name: FigureName,
}
