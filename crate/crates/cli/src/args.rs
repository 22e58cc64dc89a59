use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rhokit",
    version,
    about = "Weighted Poincaré workbench for warped-product model manifolds"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory receiving the artifacts.
    #[arg(long = "out", short = 'o', global = true, default_value = ".")]
    pub out: PathBuf,
    /// Format of tabular artifacts. The JSON summary is always written.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write an SVG plot of the table.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Tolerance override, for commands that take one.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Node count of the working grid.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Outer radius or horizon of the sweep.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndArg {
    Upper,
    Lower,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curvature sweep of a warped model.
    Curvature {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
    },
    /// Tabulates a weight. `--weight` is a spec path or hardy, cartan_hadamard, green, natural.
    Weight {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
    },
    /// ρ-distance table, completeness of both ends and the sup-growth criterion.
    RhoMetric {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        /// Outer table node; by default the table grows until it covers the horizon.
        #[arg(long)]
        to: Option<f64>,
        /// The criterion counts as satisfied on the horizon once the running
        /// minimum of S(R)/F(R) drops below this fraction of its first value.
        #[arg(long, default_value_t = rhokit::rho_metric::DEFAULT_CRITERION_THRESHOLD)]
        threshold: f64,
    },
    /// Principal Dirichlet eigenvalue, weighted Poincaré check, bottom of the spectrum.
    Spectral {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weight: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        /// Exhaustion radii for the bottom of the spectrum, e.g. `10,20,30`.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Decaying solution, annulus series and fitted decay rate.
    Decay {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weight: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        /// CSV samples of a potential `V`.
        #[arg(long)]
        potential: Option<PathBuf>,
    },
    /// Parabolicity of an end, optionally with weight-integral bounds.
    Classify {
        #[arg(long)]
        end: PathBuf,
        #[arg(long)]
        weight: Option<String>,
    },
    /// Warping ODE, cosh-power family and the rigidity checks.
    Rigidity {
        #[command(subcommand)]
        command: RigidityCommand,
    },
    /// Runs the bundled acceptance checks.
    Report {
        /// Check ids to run; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RigidityCommand {
    /// Integrates `η″ = τη`. `--tau` is a number or a CSV of samples.
    Ode {
        #[arg(long)]
        tau: String,
        #[arg(long, default_value_t = 1.0)]
        eta0: f64,
        #[arg(long, default_value_t = 0.0)]
        deta0: f64,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 5.0)]
        to: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Even model `η = cosh u` with `u ~ t^α`.
    CoshPower {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        /// Lower Ricci bound of the fiber is `−c`.
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Convexity and Ricci conditions of a model.
    Conditions {
        #[arg(long)]
        model: PathBuf,
    },
    /// Lower bound of a weight along one end of a full-line model.
    Liminf {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weight: String,
        #[arg(long, value_enum, default_value_t = EndArg::Upper)]
        end: EndArg,
    },
    /// Comparison function for a weight in dimension `n`.
    Comparison {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
    },
    /// Residual of the rigid case for a model and weight.
    Residual {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        weight: String,
    },
}
