use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gasket_slices::exactgeom::{make_slope, SlopeSpec};
use gasket_slices::Error;

/// Environment variable naming the default directory for result files.
pub const OUT_DIR_ENV: &str = "GASKET_SLICES_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(
    name = "gasket-slices",
    version,
    about = "Slices of the Sierpinski gasket by rational-slope lines"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    pub format: Format,

    /// Output file. Without it results go to $GASKET_SLICES_OUT_DIR when
    /// set, otherwise to stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads (default: available parallelism). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Leave the wall-time field out of the metadata so reruns are
    /// byte-identical.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SlopeArgs {
    /// Numerator of the right-angle slope p/q.
    #[arg(long)]
    pub p: Option<i64>,
    /// Denominator of the right-angle slope p/q.
    #[arg(long)]
    pub q: Option<i64>,
    /// Equilateral-gasket tangent √3·m/n, given as `m n`.
    #[arg(long, num_args = 2, value_names = ["M", "N"], conflicts_with_all = ["p", "q"])]
    pub gasket_tan: Option<Vec<i64>>,
}

impl SlopeArgs {
    pub fn slope(&self) -> Result<SlopeSpec, Error> {
        match (&self.gasket_tan, self.p, self.q) {
            (Some(mn), None, None) => SlopeSpec::from_gasket_tangent(mn[0], mn[1]),
            (None, Some(p), Some(q)) => make_slope(p, q),
            _ => Err(Error::Validation(
                "give the slope either as --p P --q Q or as --gasket-tan M N".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    Geometric,
    Congruence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Gamma,
    Chi,
    Box,
    Localdim,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub slope: SlopeArgs,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Word length (default 20 exact, 10000 Monte Carlo).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the extrapolation from depths n and n/2 (exact mode).
    #[arg(long)]
    pub extrapolate: bool,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Transition matrices A0, A1.
    Matrices {
        #[command(flatten)]
        slope: SlopeArgs,
        #[arg(long, value_enum, default_value_t = Builder::Congruence)]
        builder: Builder,
    },
    /// Structural checks and builder agreement.
    Validate {
        #[command(flatten)]
        slope: SlopeArgs,
    },
    /// Shortest primitive word and degenerate-word counts.
    Primitive {
        #[command(flatten)]
        slope: SlopeArgs,
        /// Largest word length for degenerate counts.
        #[arg(long, default_value_t = 14)]
        n: usize,
    },
    /// Lebesgue-typical slice dimension.
    Alpha(ExponentArgs),
    /// Slice dimension typical for the natural measure.
    Beta(ExponentArgs),
    /// Extreme growth exponents over all words of length n.
    Envelope {
        #[command(flatten)]
        slope: SlopeArgs,
        #[arg(long, default_value_t = 20)]
        n: usize,
    },
    /// Finite-depth pressure P_n(t).
    Pressure {
        #[command(flatten)]
        slope: SlopeArgs,
        /// Comma-separated t values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Vec<f64>,
        /// Grid `start:stop:count`, used when --t is absent.
        #[arg(long, allow_hyphen_values = true, default_value = "-5:5:41")]
        t_range: String,
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
    /// Spectrum curve (gamma, chi, box or localdim).
    Spectrum {
        #[command(flatten)]
        slope: SlopeArgs,
        #[arg(long, value_enum, default_value_t = KindArg::Gamma)]
        kind: KindArg,
        /// Number of equally spaced arguments across the domain.
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Fine depth (even); the coarse depth is n/2.
        #[arg(long, default_value_t = 24)]
        n: usize,
        #[arg(long, default_value_t = 40.0)]
        t_max: f64,
    },
    /// Good-set counts and dimension estimates for one offset.
    Slice {
        #[command(flatten)]
        slope: SlopeArgs,
        /// Offset a as `u/v`, integer or decimal.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// Comma-separated depths.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        n: Vec<usize>,
        /// Also count cells geometrically up to this depth.
        #[arg(long, default_value_t = 0)]
        geometric: usize,
    },
    /// Local dimension + box dimension − s at one offset.
    Conserve {
        #[command(flatten)]
        slope: SlopeArgs,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, default_value_t = 32)]
        n: usize,
    },
    /// Runs the invariant suite.
    Selftest,
}

/// `start:stop:count` into `count` equally spaced values.
pub fn parse_range(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Validation(format!("range must look like start:stop:count, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) || n == 0 {
        return Err(bad());
    }
    Ok(gasket_slices::pressure::linspace(a, b, n))
}
