use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use bellgap::lhv::DEFAULT_ENUMERATION_CAP;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bellgap", version, about = "Bell-operator bounds for N-qubit systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format; csv is only produced by `ghz`.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate deterministic local assignments and check the MRS bounds.
    Bounds(BoundsArgs),
    /// Bell values and violation factors of GHZ-family states.
    Ghz(GhzArgs),
    /// Maximize the Bell values over product states.
    Optimize(OptimizeArgs),
    /// Check the local-hidden-variable form of a separable state.
    VerifyLhv(VerifyLhvArgs),
    /// Schmidt decomposition of a pure state across a cut.
    Schmidt(SchmidtArgs),
    /// Run every check over a range of N and summarize.
    Report(ReportArgs),
}

/// A single N or an inclusive range.
#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct QubitSelection {
    /// Number of qubits.
    #[arg(long)]
    pub n: Option<usize>,

    /// Inclusive range of qubit counts, `A:B`.
    #[arg(long, value_parser = parse_range)]
    pub n_range: Option<RangeInclusive<usize>>,
}

impl QubitSelection {
    /// Selected qubit counts, or `None` when neither flag was given.
    pub fn values(&self) -> Option<Vec<usize>> {
        match (self.n, &self.n_range) {
            (Some(n), _) => Some(vec![n]),
            (None, Some(r)) => Some(r.clone().collect()),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub qubits: QubitSelection,

    /// Largest N scanned exhaustively.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,

    /// Scan one assignment per global sign-flip orbit.
    #[arg(long)]
    pub reduce: bool,
}

#[derive(Debug, Args)]
pub struct GhzArgs {
    #[command(flatten)]
    pub qubits: QubitSelection,

    /// Relative phase θ; accepts numbers and `pi`, `pi/4`, `3pi/4`.
    #[arg(long, value_parser = parse_theta, conflicts_with = "theta_grid")]
    pub theta: Option<f64>,

    /// Comma-separated list of θ values.
    #[arg(long, value_parser = parse_theta, value_delimiter = ',')]
    pub theta_grid: Option<Vec<f64>>,

    /// Largest N whose LHV bounds are enumerated; closed form above.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
}

impl GhzArgs {
    pub fn thetas(&self) -> Vec<f64> {
        match (self.theta, &self.theta_grid) {
            (Some(t), _) => vec![t],
            (None, Some(g)) => g.clone(),
            (None, None) => DEFAULT_THETAS.to_vec(),
        }
    }
}

pub const DEFAULT_THETAS: [f64; 3] = [0.0, PI / 2.0, PI / 4.0];

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 64)]
    pub restarts: usize,

    /// Coordinate sweeps per restart.
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub n: usize,

    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct VerifyLhvArgs {
    /// JSON file holding the separable state; a random one is drawn if omitted.
    pub input: Option<PathBuf>,

    #[arg(long, default_value_t = 3)]
    pub n: usize,

    #[arg(long, default_value_t = 5)]
    pub terms: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SchmidtArgs {
    /// JSON file holding the pure state.
    pub input: PathBuf,

    /// Qubits of each side, e.g. `1,2|3,4`; `1,3` takes the rest as side two.
    #[arg(long)]
    pub cut: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub qubits: QubitSelection,

    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,

    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a == 0 || a > b {
        return Err(format!("range {s:?} must satisfy 1 <= A <= B"));
    }
    Ok(a..=b)
}

/// A finite real, or a multiple of π written `pi`, `pi/d`, `kpi` or `kpi/d`.
pub fn parse_theta(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let value = match t.find("pi") {
        None => t.parse::<f64>().map_err(|_| format!("cannot parse angle {s:?}"))?,
        Some(at) => {
            let k = match t[..at].trim_end_matches('*') {
                "" => 1.0,
                "-" => -1.0,
                k => k.parse::<f64>().map_err(|_| format!("cannot parse angle {s:?}"))?,
            };
            let d = match t[at + 2..].strip_prefix('/') {
                None if t.len() == at + 2 => 1.0,
                None => return Err(format!("cannot parse angle {s:?}")),
                Some(d) => d.parse::<f64>().map_err(|_| format!("cannot parse angle {s:?}"))?,
            };
            k * PI / d
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("angle {s:?} is not finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_forms() {
        assert_eq!(parse_theta("0.5"), Ok(0.5));
        assert_eq!(parse_theta("pi"), Ok(PI));
        assert_eq!(parse_theta("pi/4"), Ok(PI / 4.0));
        assert_eq!(parse_theta("3pi/4"), Ok(3.0 * PI / 4.0));
        assert_eq!(parse_theta("-pi/2"), Ok(-PI / 2.0));
        assert!(parse_theta("abc").is_err());
        assert!(parse_theta("pix").is_err());
        assert!(parse_theta("pi/0").is_err());
        assert!(parse_theta("inf").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2:8"), Ok(2..=8));
        assert!(parse_range("8:2").is_err());
        assert!(parse_range("0:3").is_err());
        assert!(parse_range("3").is_err());
    }
}
