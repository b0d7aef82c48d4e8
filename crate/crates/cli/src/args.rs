use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use horoflow::Density;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "horoflow", version, about = "Symbolic suspension flows: pressure, measures, orbits and preimage sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the standing hypotheses of a model and report n0, mixing and
    /// periodic-orbit diagnostics.
    Validate(ValidateArgs),
    /// Solve the pressure equation at `--u`.
    Pressure(PointArgs),
    /// Asymptotic cycle Ξ(u) = ∇P(u).
    Cycle(PointArgs),
    /// Rate function H(Ξ) and its minimizer.
    Legendre(LegendreArgs),
    /// Sample Ξ(t e) along directions e to probe the cycle domain.
    Probe(ProbeArgs),
    /// Measure of a basic set and of its base cylinder.
    Measure(MeasureArgs),
    /// Flow a Gibbs-distributed orbit and record ξ_T on a geometric grid.
    Simulate(SimulateArgs),
    /// Preimage sum J for a single target window.
    Jsum(JsumArgs),
    /// Ratio of preimage sums against the ratio of basic-set masses.
    RatioTest(RatioArgs),
    /// Growth fit of ln J over a T# grid.
    LocalLimit(LocalLimitArgs),
    /// Weighted fraction of sampled paths whose n-th block ratio is far from Ξ.
    KeyLemma(KeyLemmaArgs),
    /// Compare the pressure before and after roof refinement.
    RefineCheck(RefineArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Model description (JSON).
    pub model: PathBuf,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving CSV output and `manifest.json`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent grid points (default: all cores).
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// Right-hand side of the pressure equation `ln λ(-P r + <u,f>) = rhs`.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub rhs: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Longest period enumerated for the nonarithmeticity diagnostic.
    #[arg(long, default_value_t = 8)]
    pub max_period: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tilt parameter, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Recode the model on blocks of this length first.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LegendreArgs {
    #[command(flatten)]
    pub common: Common,
    /// Target asymptotic cycle, comma separated.
    #[arg(long = "Xi", value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Probe direction; the coordinate axes in both orientations if omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Largest probe parameter t.
    #[arg(long = "T", default_value_t = horoflow::pressure::PROBE_T_MAX)]
    pub t_max: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BasicSetArgs {
    /// Base cylinder word of the basic set, e.g. `ab`.
    #[arg(long)]
    pub word: String,
    /// ξ coordinate of the basic set, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub xi: Vec<i64>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    #[command(flatten)]
    pub set: BasicSetArgs,
    /// Stable-length density: `psi0` or `psi_u`.
    #[arg(long, default_value = "psi0")]
    pub density: Density,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tilt of the Gibbs measure the orbit is drawn from.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Flow horizon.
    #[arg(long = "T")]
    pub horizon: f64,
    /// First grid time.
    #[arg(long, default_value_t = 1.0)]
    pub t_min: f64,
    /// Number of grid times.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JsumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Target window x*.
    #[arg(long)]
    pub x_star: String,
    /// Target displacement ξ*, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub xi_star: Vec<i64>,
    /// Single T#; use `--T-grid` for several.
    #[arg(long = "T", conflicts_with = "t_grid")]
    pub t_sharp: Option<f64>,
    /// T# grid `a:b:step`.
    #[arg(long = "T-grid")]
    pub t_grid: Option<Grid>,
    #[command(flatten)]
    pub set: BasicSetArgs,
    /// Longest preimage; derived from T# and the roof if omitted.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Use the Monte-Carlo estimator with this many paths.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value = "psi0")]
    pub density: Density,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatioArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// First basic set as `word:xi:alpha:beta` (xi comma separated).
    #[arg(long)]
    pub e1: SetSpec,
    /// Second basic set, same format.
    #[arg(long)]
    pub e2: SetSpec,
    #[arg(long = "T")]
    pub t_sharp: f64,
    /// Number of sampled target windows.
    #[arg(long, default_value_t = 32)]
    pub manifolds: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LocalLimitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    #[arg(long)]
    pub x_star: String,
    /// T# grid `a:b:step`.
    #[arg(long = "T-grid")]
    pub t_grid: Grid,
    #[command(flatten)]
    pub set: BasicSetArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KeyLemmaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Block length.
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long)]
    pub eps0: f64,
    /// Index of the inspected block.
    #[arg(long)]
    pub n: usize,
    #[arg(long = "T", conflicts_with = "t_grid")]
    pub t_sharp: Option<f64>,
    #[arg(long = "T-grid")]
    pub t_grid: Option<Grid>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RefineArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u: Vec<f64>,
    /// Refinement mesh sizes, comma separated.
    #[arg(long = "eps-star", value_delimiter = ',', required = true)]
    pub eps_star: Vec<f64>,
}

/// Inclusive arithmetic grid `a:b:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("expected a:b:step, got `{s}`"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let grid = Grid {
            start: num(a)?,
            end: num(b)?,
            step: num(step)?,
        };
        if !(grid.step > 0.0) || !(grid.end >= grid.start) || !grid.start.is_finite() || !grid.end.is_finite() {
            return Err(format!("grid `{s}` needs a <= b and step > 0"));
        }
        Ok(grid)
    }
}

/// Basic set given on the command line as `word:xi:alpha:beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSpec {
    pub word: String,
    pub xi: Vec<i64>,
    pub alpha: f64,
    pub beta: f64,
}

impl FromStr for SetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [word, xi, alpha, beta] = parts[..] else {
            return Err(format!("expected word:xi:alpha:beta, got `{s}`"));
        };
        let xi = xi
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<_, _>>()?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        Ok(SetSpec {
            word: word.to_string(),
            xi,
            alpha: num(alpha)?,
            beta: num(beta)?,
        })
    }
}

impl From<&BasicSetArgs> for SetSpec {
    fn from(a: &BasicSetArgs) -> Self {
        SetSpec {
            word: a.word.clone(),
            xi: a.xi.clone(),
            alpha: a.alpha,
            beta: a.beta,
        }
    }
}
