//! Command line front end for `biconserv-core`: seed catalog, profile builds,
//! verification suites, graph residual tables and SVG profile plots.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or parse error,
//! 3 numerical failure.

pub mod commands;
pub mod formats;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use biconserv_core::Error as CoreError;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::usage(format!("schema mismatch: {}", message.into()))
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    pub fn io(e: csv::Error) -> Self {
        Self::usage(format!("io: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("io: {e}"))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let usage = matches!(
            e,
            CoreError::InvalidParameter(_)
                | CoreError::OutsideDomain { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::OrderTooHigh(_)
                | CoreError::NotHypersurface { .. }
                | CoreError::NotClosedForm
                | CoreError::LevelOutOfRange { .. }
                | CoreError::MultiplicityTooLow(_)
        );
        let code = if usage { EXIT_USAGE } else { EXIT_NUMERIC };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "biconserv", version, about = "Biconservative hypersurfaces by normal evolution of isoparametric seeds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in seeds with their curvature data.
    Catalog(CatalogArgs),
    /// Integrate a seed's profile and write it as CSV plus a metadata file.
    Build(BuildArgs),
    /// Run verification suites on a seed, a chart, or a profile written by `build`.
    Verify(VerifyArgs),
    /// Minimal and biharmonic residuals of a graph x -> (x, u(x)) on a grid.
    Graph(GraphArgs),
    /// Plot a profile CSV as SVG.
    ExportSvg(ExportArgs),
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ode,
    ClosedForm,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Seed spec, e.g. sphere:n=2,r=1
    #[arg(long)]
    pub seed: String,
    /// Half-width of the requested x_n interval.
    #[arg(long = "xmax", default_value_t = 1.0)]
    pub x_max: f64,
    #[arg(long, value_enum, default_value_t = Method::Ode)]
    pub method: Method,
    /// Tolerance override NAME=VALUE; also written --tol.NAME VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// CSV path; the metadata goes next to it with extension `.meta`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Seed or chart spec (see `catalog`; charts: chart-sphere, chart-cylinder,
    /// chart-plane, catenoid, torus).
    #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
    pub seed: Option<String>,
    /// Profile CSV written by `build` (its `.meta` file must sit next to it).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long = "xmax", default_value_t = 1.0)]
    pub x_max: f64,
    /// Suite to run; repeat for several. Default: all that apply.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// Negative control: add SLOPE·(x1 − p1) to curvature INDEX (1 or more)
    /// in the Codazzi check, which must then fail.
    #[arg(long, value_name = "INDEX:SLOPE")]
    pub perturb: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Height function over x1..xn, e.g. "x1^2 - x2^2".
    #[arg(long)]
    pub expr: String,
    /// Domain dimension; defaults to the highest variable index (at least 2).
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated axes, each a number or lo:hi:count; one axis is
    /// repeated for all dimensions.
    #[arg(long, default_value = "-0.5:0.5:5", allow_hyphen_values = true)]
    pub grid: String,
    /// Parameter values, e.g. a=1,b=2
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Profile CSV.
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rewrite `--tol.NAME VALUE` and `--tol.NAME=VALUE` as `--tol NAME=VALUE`.
pub fn normalize_args<I, T>(args: I) -> Vec<OsString>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut out = Vec::new();
    let mut it = args.into_iter().map(Into::into).peekable();
    while let Some(a) = it.next() {
        let Some(rest) = a.to_str().and_then(|s| s.strip_prefix("--tol.")).map(str::to_owned) else {
            out.push(a);
            continue;
        };
        out.push("--tol".into());
        if rest.contains('=') {
            out.push(rest.into());
        } else {
            let v = it.next().map(|v| v.to_string_lossy().into_owned()).unwrap_or_default();
            out.push(format!("{rest}={v}").into());
        }
    }
    out
}

/// Parse and run one command, writing results to `stdout` and diagnostics to
/// `stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let cli = match Cli::try_parse_from(normalize_args(args)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            if code == EXIT_PASS {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Catalog(a) => commands::catalog(&a, stdout),
        Command::Build(a) => commands::build(&a, stdout, stderr),
        Command::Verify(a) => commands::verify(&a, stdout, stderr),
        Command::Graph(a) => commands::graph(&a, stdout),
        Command::ExportSvg(a) => commands::export_svg(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_flags_are_rewritten() {
        let a = normalize_args(["x", "--tol.codazzi", "1e-6", "--tol.symmetry=2", "--seed", "s"]);
        let a: Vec<String> = a.into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(a, ["x", "--tol", "codazzi=1e-6", "--tol", "symmetry=2", "--seed", "s"]);
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(CoreError::Focal { x: 0.1, beta: 1e-4 }).code, EXIT_NUMERIC);
        assert_eq!(CliError::from(CoreError::MinimalSeed { sum: 0.0 }).code, EXIT_NUMERIC);
        assert_eq!(CliError::from(CoreError::InvalidParameter("x".into())).code, EXIT_USAGE);
    }
}
