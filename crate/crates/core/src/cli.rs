//! Command-line interface of the `sgp` binary.
//!
//! Exit codes: 0 success, 2 usage or invalid input, 3 numerical failure,
//! 4 file or parse failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fem::{correlation_error_curve, BasisFamily};
use crate::inference::{excess_summary, fit, forecast, FitOptions};
use crate::io::{format_number, load_dataset, write_csv, write_forecast, write_results, ModelConfig};
use crate::kernel::{covariance_matrix, psd, SgpParams};
use crate::prior::{median_psd, to_sigma_rate, PsdPrior};
use crate::statespace::{sample_paths, LocationGrid, StateSpaceChain};
use crate::{kernel, oracle};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SGP_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "sgp", version, about = "Seasonal Gaussian processes: simulation, approximation and fitting")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Run the built-in numerical self-check and exit.
    #[arg(long, hide = true)]
    self_check: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample paths on a regular grid and the covariance with a reference point.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Covariance matrix at a list of points.
    #[command(allow_negative_numbers = true)]
    Cov(CovArgs),
    /// Predictive standard deviation σ(h) and the PSD prior it induces.
    #[command(allow_negative_numbers = true)]
    Psd(PsdArgs),
    /// Fit a model to a dataset and write fit.csv, hyper.csv and summary.json.
    Fit(FitArgs),
    /// Fit, then predict η at the horizon points (forecast.csv).
    Forecast(ForecastArgs),
    /// Maximum correlation error of the FEM approximations against k.
    ApproxDiag(ApproxArgs),
}

/// α is in radians per unit of x; `--period c` sets α = 2π/c.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct FrequencyArgs {
    /// Frequency α (radians per unit of x).
    #[arg(long)]
    alpha: Option<f64>,
    /// Period c in units of x; α = 2π/c.
    #[arg(long)]
    period: Option<f64>,
}

impl FrequencyArgs {
    fn alpha(&self) -> Result<f64> {
        match (self.alpha, self.period) {
            (Some(a), None) => Ok(a),
            (None, Some(c)) if c > 0.0 => Ok(std::f64::consts::TAU / c),
            (None, Some(c)) => Err(Error::domain(format!("period must be positive, got {c}"))),
            _ => Err(Error::domain("give exactly one of --alpha or --period")),
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    frequency: FrequencyArgs,
    /// Scale σ of the driving white noise.
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    grid_start: f64,
    #[arg(long)]
    grid_end: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 101)]
    n: usize,
    /// Number of paths; 0 writes the covariance only.
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference point of covariance.csv (default: grid midpoint).
    #[arg(long)]
    reference: Option<f64>,
    /// Output directory (default: $SGP_OUTPUT_DIR or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CovArgs {
    #[command(flatten)]
    frequency: FrequencyArgs,
    #[arg(long)]
    sigma: f64,
    /// Comma-separated nonnegative locations.
    #[arg(long, value_delimiter = ',', required = true)]
    points: Vec<f64>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PsdArgs {
    #[command(flatten)]
    frequency: FrequencyArgs,
    /// Prediction step h (units of x).
    #[arg(long)]
    h: f64,
    /// Scale σ; prints σ(h).
    #[arg(long)]
    sigma: Option<f64>,
    /// Prior threshold u in P(σ(h) > u) = p.
    #[arg(long, requires = "p")]
    u: Option<f64>,
    /// Prior tail probability p.
    #[arg(long, requires = "u")]
    p: Option<f64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// JSON model configuration.
    #[arg(long)]
    config: PathBuf,
    /// CSV dataset with columns x, y and optional holdout/covariates.
    #[arg(long)]
    data: PathBuf,
    /// Output directory (default: config output_dir, then $SGP_OUTPUT_DIR, then .).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the grid.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Comma-separated horizon points (default: the config's horizon).
    #[arg(long, value_delimiter = ',')]
    horizon: Vec<f64>,
}

#[derive(Debug, Args)]
struct ApproxArgs {
    /// Frequency α (radians per unit of x).
    #[arg(long, default_value_t = std::f64::consts::TAU, conflicts_with = "period")]
    alpha: f64,
    /// Period c; α = 2π/c.
    #[arg(long)]
    period: Option<f64>,
    /// Basis domain a,b.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 10.0])]
    domain: Vec<f64>,
    /// cubic, sb or both.
    #[arg(long, default_value = "both")]
    family: String,
    /// Comma-separated nominal basis sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [12, 21, 30, 60, 90])]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 5.0)]
    ref_point: f64,
    /// Interval lo,hi over which the error is maximized.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.0, 9.0])]
    eval_range: Vec<f64>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Parse { .. } => 4,
        e if e.is_numeric() => 3,
        _ => 2,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if cli.self_check {
        return self_check();
    }
    match cli.command {
        Some(Command::Simulate(a)) => simulate(a),
        Some(Command::Cov(a)) => cov(a),
        Some(Command::Psd(a)) => psd_tool(a),
        Some(Command::Fit(a)) => fit_cmd(a, None),
        Some(Command::Forecast(a)) => fit_cmd(a.fit, Some(a.horizon)),
        Some(Command::ApproxDiag(a)) => approx_diag(a),
        None => Err(Error::Config("no subcommand given".into())),
    }
}

fn self_check() -> Result<()> {
    let outcomes = oracle::self_check();
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(Error::Numeric(format!("{failed} self-check(s) failed")));
    }
    Ok(())
}

fn default_dir(flag: Option<PathBuf>, config: Option<&Path>) -> PathBuf {
    flag.or_else(|| config.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let params = SgpParams::new(a.frequency.alpha()?, a.sigma)?;
    if a.n < 2 {
        return Err(Error::domain("--n must be at least 2"));
    }
    if !(a.grid_start >= 0.0 && a.grid_end > a.grid_start) {
        return Err(Error::domain(format!(
            "need 0 <= grid-start < grid-end, got {} and {}",
            a.grid_start, a.grid_end
        )));
    }
    let xs = crate::fem::linspace(a.grid_start, a.grid_end, a.n);
    let reference = a.reference.unwrap_or(0.5 * (a.grid_start + a.grid_end));
    let dir = default_dir(a.out, None);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let cov_rows: Vec<Vec<String>> = xs
        .iter()
        .map(|&x| Ok(vec![format_number(x), format_number(kernel::covariance(&params, reference, x)?)]))
        .collect::<Result<_>>()?;
    write_csv(&dir.join("covariance.csv"), &strings(&["x", "covariance"]), cov_rows)?;

    if a.samples > 0 {
        let (grid, map) = LocationGrid::from_unsorted(&xs)?;
        let grid = grid.ok_or_else(|| Error::domain("the grid has no positive location"))?;
        let chain = StateSpaceChain::new(params, grid);
        let paths = sample_paths(&chain, a.samples, a.seed)?;
        let mut header = vec!["x".to_string()];
        header.extend((1..=a.samples).map(|k| format!("path_{k}")));
        let rows = xs.iter().zip(&map).map(|(&x, m)| {
            let mut row = vec![format_number(x)];
            row.extend((0..a.samples).map(|k| format_number(m.map_or(0.0, |i| paths[(k, i)]))));
            row
        });
        write_csv(&dir.join("paths.csv"), &header, rows)?;
    }
    Ok(())
}

fn emit(out: Option<PathBuf>, header: &[String], rows: Vec<Vec<String>>) -> Result<()> {
    match out {
        Some(p) => write_csv(&p, header, rows),
        None => {
            println!("{}", header.join(","));
            for r in rows {
                println!("{}", r.join(","));
            }
            Ok(())
        }
    }
}

fn cov(a: CovArgs) -> Result<()> {
    let params = SgpParams::new(a.frequency.alpha()?, a.sigma)?;
    let k = covariance_matrix(&params, &a.points)?;
    let mut header = vec!["x".to_string()];
    header.extend(a.points.iter().map(|&p| format_number(p)));
    let rows = (0..a.points.len())
        .map(|i| {
            let mut row = vec![format_number(a.points[i])];
            row.extend((0..a.points.len()).map(|j| format_number(k[(i, j)])));
            row
        })
        .collect();
    emit(a.out, &header, rows)
}

fn psd_tool(a: PsdArgs) -> Result<()> {
    let alpha = a.frequency.alpha()?;
    if a.sigma.is_none() && a.u.is_none() {
        return Err(Error::domain("give --sigma, or --u and --p"));
    }
    if let Some(sigma) = a.sigma {
        let v = psd(&SgpParams::new(alpha, sigma)?, a.h)?;
        println!("psd {}", format_number(v));
    }
    if let (Some(u), Some(p)) = (a.u, a.p) {
        let prior = PsdPrior::new(a.h, u, p)?;
        println!("psd_rate {}", format_number(prior.rate()));
        println!("sigma_rate {}", format_number(to_sigma_rate(&prior, alpha)?));
        println!("median_psd {}", format_number(median_psd(&prior)));
    }
    Ok(())
}

fn fit_cmd(a: FitArgs, horizon: Option<Vec<f64>>) -> Result<()> {
    let config = ModelConfig::load(&a.config)?;
    let data = load_dataset(&a.data)?;
    let spec = config.to_spec(data)?;
    let options = FitOptions { threads: a.threads };
    let dir = default_dir(a.out, config.output_dir.as_deref());
    let result = fit(&spec, &options)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let paths = write_results(&result, &spec, config.seed, &dir)?;
    println!("wrote {}", paths.fit.display());
    println!("wrote {}", paths.hyper.display());
    println!("wrote {}", paths.summary.display());
    if let Some(c) = result.period_mode() {
        println!("period mode {c}");
    }
    let (hx, hy) = spec.data.holdout_rows();
    if config.excess_samples > 0 && !hx.is_empty() {
        let draws = excess_summary(&result, &spec, &hx, &hy, config.excess_samples, config.seed)?;
        let path = dir.join("excess.csv");
        write_csv(&path, &strings(&["draw", "excess"]), draws.iter().enumerate().map(|(k, v)| vec![k.to_string(), format_number(*v)]))?;
        println!("wrote {}", path.display());
    }
    if let Some(h) = horizon {
        let points = if h.is_empty() { config.horizon.clone() } else { h };
        if points.is_empty() {
            return Err(Error::Config("no horizon points (use --horizon or the config's horizon)".into()));
        }
        let table = forecast(&result, &spec, &points, &options)?;
        let path = dir.join("forecast.csv");
        write_forecast(&table, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn approx_diag(a: ApproxArgs) -> Result<()> {
    let alpha = match a.period {
        Some(c) if c > 0.0 => std::f64::consts::TAU / c,
        Some(c) => return Err(Error::domain(format!("period must be positive, got {c}"))),
        None => a.alpha,
    };
    let families = match a.family.to_ascii_lowercase().as_str() {
        "both" => vec![BasisFamily::CubicBSpline, BasisFamily::SeasonalBSpline],
        other => vec![other.parse::<BasisFamily>()?],
    };
    let domain = (a.domain[0], a.domain[1]);
    let range = (a.eval_range[0], a.eval_range[1]);
    let mut rows = Vec::new();
    for family in families {
        for p in correlation_error_curve(family, alpha, domain, &a.k_list, a.ref_point, range)? {
            rows.push(vec![
                family.name().to_string(),
                p.k.to_string(),
                p.size.to_string(),
                format_number(p.max_error),
            ]);
        }
    }
    emit(a.out, &strings(&["family", "k", "size", "max_corr_error"]), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::domain("x")), 2);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        assert_eq!(exit_code(&Error::Parse { row: 1, column: "x".into(), message: "m".into() }), 4);
        assert_eq!(run(["sgp", "psd", "--alpha", "1", "--period", "2", "--h", "1", "--sigma", "1"]), 2);
        assert_eq!(run(["sgp", "psd", "--h", "1", "--sigma", "1"]), 2);
        assert_eq!(run(["sgp", "cov", "--alpha", "1", "--sigma", "-1", "--points", "1,2"]), 2);
        assert_eq!(run(["sgp", "fit", "--config", "/nonexistent.json", "--data", "/nonexistent.csv"]), 4);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
