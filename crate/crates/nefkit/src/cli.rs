use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nefkit_core::family::Family;
use nefkit_core::Complex64;

use crate::output::Format;

/// Reduction functions, variance-function checks, residue scans and
/// latent-space simulations for natural exponential families.
///
/// Exit codes: 0 success, 1 validation failure, 2 usage error,
/// 3 a closed form failed its oracle. NEF_TOOLKIT_THREADS caps the
/// worker pool; output never depends on it.
#[derive(Debug, Parser)]
#[command(name = "nefkit", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the reduction function φ, with β, c, ρ, α for families on ℕ.
    RfTable(RfTableArgs),
    /// Coefficient pipeline β → c → ρ → α → φ for a family on ℕ.
    Coeffs(CoeffsArgs),
    /// Run the master identity, variance-function and invariant suites.
    Validate(ValidateArgs),
    /// Scan the residue quantity τ over n and a grid of poles u1.
    Conjecture(ConjectureArgs),
    /// Latent-space recovery ladder with the variance-adjusted Gram matrix.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file [default: stdout].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::from_str(s).map_err(|e| e.to_string())
}

/// `lo:hi:count`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl XGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 }).collect()
    }
}

impl FromStr for XGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("expected lo:hi:count, got {s:?}"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower end {lo:?}"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper end {hi:?}"))?;
        let count: usize = count.trim().parse().map_err(|_| format!("bad count {count:?}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || count == 0 || (count > 1 && lo == hi) {
            return Err(format!("degenerate grid {s:?}"));
        }
        Ok(Self { lo, hi, count })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IgFormula {
    Corrected,
    /// The unverified closed form; rejected by the Laplace oracle.
    Printed,
}

#[derive(Debug, Args)]
pub struct RfTableArgs {
    /// Family name, e.g. poisson, negbin(2), pvf(2.5).
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Largest support point for families on ℕ [default: 20].
    #[arg(long, conflicts_with = "x_grid")]
    pub n_max: Option<usize>,
    /// Evaluation grid lo:hi:count for continuous families [default: 0:10:101, or -5:5:101 on ℝ].
    #[arg(long, allow_hyphen_values = true)]
    pub x_grid: Option<XGrid>,
    /// Closed form behind the inverse Gaussian φ.
    #[arg(long, value_enum, default_value_t = IgFormula::Corrected)]
    pub formula: IgFormula,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Family on ℕ, e.g. abel, takacs, large-arcsine, negbin(2).
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Truncation order N; coefficients 0..=N are exact.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..=100))]
    pub order: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Families to validate (repeatable).
    #[arg(long, value_parser = parse_family, required_unless_present = "all", conflicts_with = "all")]
    pub family: Vec<Family>,
    /// Every registered default family.
    #[arg(long)]
    pub all: bool,
    /// Override the master-identity tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON report file [default: stdout].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// `default`, or `re:im` pairs separated by commas.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleGrid(pub Vec<Complex64>);

impl FromStr for PoleGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "default" {
            return Ok(Self(nefkit_core::residue::default_u1_grid()));
        }
        let mut out = Vec::new();
        for pair in s.split(',') {
            let (re, im) = pair.split_once(':').ok_or_else(|| format!("expected re:im, got {pair:?}"))?;
            let re: f64 = re.trim().parse().map_err(|_| format!("bad real part {re:?}"))?;
            let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part {im:?}"))?;
            if !(re.is_finite() && im.is_finite() && im > 0.0) {
                return Err(format!("pole {pair:?} needs finite parts and Im > 0"));
            }
            out.push(Complex64::new(re, im));
        }
        Ok(Self(out))
    }
}

#[derive(Debug, Args)]
pub struct ConjectureArgs {
    /// Largest n (degree of v is 2n + 1).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=60))]
    pub n_max: u32,
    /// Pole grid: `default` (Re ∈ {-2,-0.3,0,0.3,2} × Im ∈ {0.5,1,3}) or `re:im,re:im,...`.
    #[arg(long, default_value = "default", allow_hyphen_values = true)]
    pub grid: PoleGrid,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// key = value file (family, ks, n, r, seeds, output, summary); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Observation family [default: poisson].
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Comma-separated k ladder [default: 200,2000,20000].
    #[arg(long)]
    pub ks: Option<String>,
    /// Columns [default: 10].
    #[arg(long)]
    pub n: Option<usize>,
    /// Latent rank [default: 2].
    #[arg(long)]
    pub r: Option<usize>,
    /// Seeds as a..=b, a-b or a comma list [default: 1..=20].
    #[arg(long)]
    pub seeds: Option<String>,
    /// Per-replicate CSV [default: stdout].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// JSON summary [default: stderr].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grids_parse() {
        let g: XGrid = "0:1:3".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.5, 1.0]);
        assert!("1:0:3".parse::<XGrid>().is_err());
        assert!("0:1".parse::<XGrid>().is_err());
        let p: PoleGrid = "-2:0.5, 0.3:1".parse().unwrap();
        assert_eq!(p.0, vec![Complex64::new(-2.0, 0.5), Complex64::new(0.3, 1.0)]);
        assert!("1:-1".parse::<PoleGrid>().is_err());
        assert_eq!("default".parse::<PoleGrid>().unwrap().0.len(), 15);
    }
}
