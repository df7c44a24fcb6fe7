//! Command-line flags, JSON config files and their merge into one run configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "pam", version, about = "Lyapunov exponents, Green functions and phase diagrams for the catalytic parabolic Anderson model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lattice Green function quantities G_d(0), ‖G_d‖₂², G_d(x), α_d
    Green(Flags),
    /// Top of the spectrum μ(κ) of κΔ + δ₀
    Mu(Flags),
    /// Box eigenvalue estimates of λ_p^{(n)}(κ, ρ) over increasing radii
    LambdaSpectral(Flags),
    /// Feynman–Kac Monte Carlo estimate of the finite-time exponent
    LambdaMc(Flags),
    /// Critical-κ bounds and regime labels over a parameter grid
    Phase(Flags),
    /// Discrete Gagliardo–Nirenberg inequality on random fields
    CheckGn(Flags),
    /// Tensor-square certificate of a gap between λ₂ and λ₁
    TensorGap(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Green(_) => "green",
            Command::Mu(_) => "mu",
            Command::LambdaSpectral(_) => "lambda-spectral",
            Command::LambdaMc(_) => "lambda-mc",
            Command::Phase(_) => "phase",
            Command::CheckGn(_) => "check-gn",
            Command::TensorGap(_) => "tensor-gap",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Green(f)
            | Command::Mu(f)
            | Command::LambdaSpectral(f)
            | Command::LambdaMc(f)
            | Command::Phase(f)
            | Command::CheckGn(f)
            | Command::TensorGap(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Zero,
    L2,
    At,
    Alpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Time,
    Fourier,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Forward,
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Kappa,
    Rho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaColumn {
    Spectral,
    ClosedForm,
    None,
}

/// Every flag of the command grammar; each command reads the ones it needs.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// JSON run configuration, or a previous JSON output; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, conflicts_with = "radii")]
    pub radius: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<usize>>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// green: which quantity to compute
    #[arg(long, value_enum)]
    pub quantity: Option<Quantity>,
    /// green: lattice site for --quantity at
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub site: Option<Vec<i64>>,
    /// green: evaluation method
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// green --method fourier: nodes per axis
    #[arg(long)]
    pub nodes: Option<usize>,
    /// lambda-mc: collision kernel
    #[arg(long, value_enum)]
    pub kernel: Option<Kernel>,
    /// mu, phase: list of values for the varied parameter
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// phase: varied parameter
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// phase: list of moment orders
    #[arg(long, value_delimiter = ',')]
    pub ps: Option<Vec<usize>>,
    /// phase: how the λ column is filled
    #[arg(long, value_enum)]
    pub lambda: Option<LambdaColumn>,
    /// phase --out: rows computed between cursor updates
    #[arg(long)]
    pub batch: Option<usize>,
}

/// The merged configuration of one run; recorded verbatim in the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub radii: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quantity: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub site: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel: Option<Kernel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ps: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<LambdaColumn>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub batch: Option<usize>,
}

macro_rules! overlay {
    ($cfg:ident, $flags:ident, $($field:ident),*) => {
        $( if $flags.$field.is_some() { $cfg.$field = $flags.$field.clone(); } )*
    };
}

impl RunConfig {
    /// Config file (if any) overlaid with the explicit flags.
    pub fn resolve(command: &Command) -> Result<Self, CliError> {
        let flags = command.flags();
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => RunConfig::default(),
        };
        if !cfg.command.is_empty() && cfg.command != command.name() {
            return Err(CliError::Usage(format!(
                "config is for command '{}', not '{}'",
                cfg.command,
                command.name()
            )));
        }
        cfg.command = command.name().to_string();
        overlay!(
            cfg, flags, d, n, p, kappa, rho, tol, radius, radii, t, samples, seed, workers, out, format, quantity,
            site, method, nodes, kernel, grid, axis, ps, lambda, batch
        );
        if flags.radius.is_some() {
            cfg.radii = None;
        }
        if flags.radii.is_some() {
            cfg.radius = None;
        }
        Ok(cfg)
    }

    /// Reads a config object, or the `manifest.config` of an earlier JSON output.
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let inner = match value.get("manifest").and_then(|m| m.get("config")) {
            Some(c) => c.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn require<T: Clone>(&self, value: &Option<T>, flag: &str) -> Result<T, CliError> {
        value.clone().ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", self.command)))
    }
}
