use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "psge",
    version,
    about = "Perturbed sine-Gordon lab: kernel, waves, remainder solver, estimates"
)]
pub struct Cli {
    /// `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Run the command's checks and fail on any violation.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Treat flagged rows and soft warnings as failures.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
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
    /// Tabulate the fundamental solution K(x, t).
    Kernel(Overrides),
    /// Tabulate a travelling wave of the reduced equation.
    Wave(Overrides),
    /// Solve for the remainder v = u − w by Picard iteration.
    Solve(Overrides),
    /// Sweep ε and check the boundary-layer estimates.
    Sweep(Overrides),
    /// Cross-validate against the finite-difference solver.
    Oracle(Overrides),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Kernel(_) => "kernel",
            Command::Wave(_) => "wave",
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn overrides(&self) -> &Overrides {
        match self {
            Command::Kernel(o)
            | Command::Wave(o)
            | Command::Solve(o)
            | Command::Sweep(o)
            | Command::Oracle(o) => o,
        }
    }
}

/// Per-key overrides; each maps onto the config key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long = "eps", allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Travelling-wave integration constant.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<String>,
    #[arg(long)]
    pub nx: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<String>,
    #[arg(long)]
    pub nt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_exp: Option<String>,
    /// Comma-separated, descending.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon_list: Option<String>,
    #[arg(long)]
    pub max_iters: Option<String>,
    #[arg(long)]
    pub fix_tol: Option<String>,
    #[arg(long)]
    pub window_len: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
}

impl Overrides {
    pub fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 18] = [
            ("epsilon", &self.epsilon),
            ("a", &self.a),
            ("c", &self.c),
            ("gamma", &self.gamma),
            ("k", &self.k),
            ("x_min", &self.x_min),
            ("x_max", &self.x_max),
            ("nx", &self.nx),
            ("t_max", &self.t_max),
            ("nt", &self.nt),
            ("k_exp", &self.k_exp),
            ("epsilon_list", &self.epsilon_list),
            ("max_iters", &self.max_iters),
            ("fix_tol", &self.fix_tol),
            ("window_len", &self.window_len),
            ("theta", &self.theta),
            ("seed", &self.seed),
            ("samples", &self.samples),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}
