//! Command-line interface for the bGEV library.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 data validation
//! error, 4 numerical failure.

mod config;

use std::fmt;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bgev::io::{
    emit_forecast_plot_data, forecast_plot_data, render_plot_svg, write_records, write_series_to,
    write_sweep,
};
use bgev::{
    bgev_cdf, bgev_logpdf, bgev_quantile, bgev_sample, build_bgev, fit_mle, generate_synthetic,
    read_series, rolling_forecast_all, summarize, sweep_blend_quantiles, BlendSpec, GevParams,
    Model, TrainingSet,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{FileSettings, RunFlags, Settings};

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "bgev",
    version,
    about = "Blended GEV fitting and rolling forecast evaluation"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// TOML file with default values for the run flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one series and print the estimates.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Rolling one-step-ahead forecasts for every series.
    Forecast {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Total forecast NLL for each blend quantile a.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Evaluate the blended distribution at given points.
    Eval(EvalArgs),
    /// Draw a seeded sample from the blended distribution.
    Sample {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic series file.
    Synth {
        #[arg(long, default_value_t = 1)]
        locations: usize,
        #[arg(long, default_value_t = 84)]
        years: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        trend: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Histogram and forecast densities for one target year.
    Plot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunFlags,
        /// Year to forecast; defaults to the last year of the series.
        #[arg(long)]
        target_year: Option<i32>,
        #[arg(long, short)]
        output: PathBuf,
        /// Also render an SVG figure.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Series CSV with header location_id,year,annual_max,covariate.
    #[arg(long, short)]
    input: PathBuf,
    /// Location to use; required when the file holds several.
    #[arg(long)]
    location: Option<String>,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long, allow_negative_numbers = true)]
    xi: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Blend quantile a for the tail implied by the sign of xi.
    #[arg(long)]
    a: Option<f64>,
    /// Blend quantile b for the tail implied by the sign of xi.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    cdf: Vec<f64>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pdf: Vec<f64>,
    #[arg(long, num_args = 1..)]
    quantile: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<bgev::Error>() {
        Some(err) if err.is_data_error() => 3,
        Some(bgev::Error::Io(_)) => 1,
        Some(_) => 4,
        None if e.downcast_ref::<io::Error>().is_some() => 1,
        None => 4,
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = FileSettings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fit { input, run } => cmd_fit(&input, &run.resolve(&file)?),
        Command::Forecast { input, run, output } => {
            cmd_forecast(&input, &run.resolve(&file)?, output.as_deref())
        }
        Command::Sweep { input, run, output } => {
            cmd_sweep(&input, &run.resolve(&file)?, output.as_deref())
        }
        Command::Eval(args) => cmd_eval(&args),
        Command::Sample { dist, n, seed } => {
            let d = build_dist(&dist)?;
            let mut out = BufWriter::new(io::stdout().lock());
            for x in bgev_sample(n, &d, seed)? {
                writeln!(out, "{x}")?;
            }
            Ok(out.flush()?)
        }
        Command::Synth {
            locations,
            years,
            trend,
            xi,
            seed,
            output,
        } => {
            let data = generate_synthetic(locations, years, trend, xi, seed)?;
            with_output(output.as_deref(), |w| Ok(write_series_to(w, &data)?))
        }
        Command::Plot {
            input,
            run,
            target_year,
            output,
            svg,
        } => cmd_plot(
            &input,
            &run.resolve(&file)?,
            target_year,
            &output,
            svg.as_deref(),
        ),
    }
}

fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            Ok(w.flush()?)
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            body(&mut w)?;
            Ok(w.flush()?)
        }
    }
}

fn load(input: &InputArgs) -> Result<Vec<TrainingSet>> {
    if !input.input.is_file() {
        return Err(UsageError(format!("input file {} not found", input.input.display())).into());
    }
    let data = read_series(&input.input)?;
    match &input.location {
        Some(id) => {
            let series = data
                .into_iter()
                .find(|s| s.location_id() == id)
                .ok_or_else(|| {
                    UsageError(format!("location '{id}' not in {}", input.input.display()))
                })?;
            Ok(vec![series])
        }
        None => Ok(data),
    }
}

fn load_one(input: &InputArgs) -> Result<TrainingSet> {
    let mut data = load(input)?;
    match data.len() {
        1 => Ok(data.remove(0)),
        0 => Err(bgev::Error::Validation("input holds no series".into()).into()),
        n => Err(UsageError(format!(
            "input holds {n} locations; choose one with --location"
        ))
        .into()),
    }
}

/// Rounds to six significant digits for human-facing summaries.
fn sig6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.5e}")
            .parse::<f64>()
            .map_or_else(|_| x.to_string(), |v| v.to_string())
    } else {
        x.to_string()
    }
}

#[derive(Serialize)]
struct FitReport<'a> {
    location_id: &'a str,
    model: String,
    n: usize,
    mu0: f64,
    mu_t: f64,
    sigma: f64,
    xi: f64,
    t_bar: f64,
    nll: f64,
    converged: bool,
    n_evals: usize,
}

fn cmd_fit(input: &InputArgs, s: &Settings) -> Result<()> {
    let series = load_one(input)?;
    let fit = fit_mle(
        &series,
        s.run.model,
        &s.run.spec_pos,
        &s.run.spec_neg,
        &s.fit,
    )?;
    if !fit.converged {
        log::warn!(
            "{}: optimizer stopped at its evaluation cap",
            series.location_id()
        );
    }
    let report = FitReport {
        location_id: series.location_id(),
        model: fit.model.to_string(),
        n: series.len(),
        mu0: fit.params.mu0,
        mu_t: fit.params.mu_t,
        sigma: fit.params.sigma,
        xi: fit.params.xi,
        t_bar: fit.t_bar,
        nll: fit.nll,
        converged: fit.converged,
        n_evals: fit.n_evals,
    };
    print!("{}", toml::to_string(&report)?);
    Ok(())
}

fn cmd_forecast(input: &InputArgs, s: &Settings, output: Option<&Path>) -> Result<()> {
    let data = load(input)?;
    let runs = rolling_forecast_all(
        &data,
        s.run.model,
        &s.run.spec_pos,
        &s.run.spec_neg,
        s.run.min_window,
        &s.fit,
    )?;
    let records: Vec<_> = runs
        .iter()
        .flat_map(|r| r.records.iter().cloned())
        .collect();
    with_output(output, |w| Ok(write_records(w, &records)?))?;
    let summary = summarize(s.run.model, &runs);
    eprintln!(
        "{}: total NLL {} over {} forecasts ({} infinite, {} excluded), median xi {}",
        summary.model,
        sig6(summary.total_nll),
        summary.n_forecasts,
        summary.n_infinite,
        summary.n_excluded,
        sig6(summary.median_xi),
    );
    Ok(())
}

fn cmd_sweep(input: &InputArgs, s: &Settings, output: Option<&Path>) -> Result<()> {
    let data = load(input)?;
    let rows = sweep_blend_quantiles(
        &data,
        &s.run.a_grid,
        s.run.delta,
        &s.run.spec_pos,
        s.run.min_window,
        &s.fit,
    )?;
    with_output(output, |w| Ok(write_sweep(w, &rows)?))?;
    if let Some(best) = rows
        .iter()
        .filter(|r| r.total_nll.is_finite())
        .min_by(|x, y| x.total_nll.total_cmp(&y.total_nll))
    {
        eprintln!(
            "lowest total NLL {} at a = {}",
            sig6(best.total_nll),
            best.a
        );
    }
    Ok(())
}

/// Distribution from command-line parameters; invalid values are usage errors.
fn build_dist(args: &DistArgs) -> Result<bgev::BgevDistribution> {
    let usage = |e: bgev::Error| UsageError(e.to_string());
    let gev = GevParams::new(args.mu, args.sigma, args.xi).map_err(usage)?;
    let shape = bgev::BetaShape::new(args.alpha, args.beta).map_err(usage)?;
    let defaults = bgev::RunConfig::default();
    let mut spec_pos = BlendSpec {
        shape,
        ..defaults.spec_pos
    };
    let mut spec_neg = BlendSpec {
        shape,
        ..defaults.spec_neg
    };
    let target = if args.xi < 0.0 {
        &mut spec_neg
    } else {
        &mut spec_pos
    };
    target.a = args.a.unwrap_or(target.a);
    target.b = args.b.unwrap_or(target.b);
    Ok(build_bgev(gev, spec_pos, spec_neg).map_err(usage)?)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    if args.cdf.is_empty() && args.pdf.is_empty() && args.quantile.is_empty() {
        return Err(
            UsageError("eval needs at least one of --cdf, --pdf, --quantile".into()).into(),
        );
    }
    if let Some(q) = args.quantile.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(UsageError(format!("quantile level {q} is outside (0, 1)")).into());
    }
    let d = build_dist(&args.dist)?;
    let mut out = io::stdout().lock();
    for &x in &args.cdf {
        writeln!(out, "{}", bgev_cdf(x, &d)?)?;
    }
    for &x in &args.pdf {
        writeln!(out, "{}", bgev_logpdf(x, &d)?.exp())?;
    }
    for &q in &args.quantile {
        writeln!(out, "{}", bgev_quantile(q, &d)?)?;
    }
    Ok(())
}

fn cmd_plot(
    input: &InputArgs,
    s: &Settings,
    target_year: Option<i32>,
    output: &Path,
    svg: Option<&Path>,
) -> Result<()> {
    let series = load_one(input)?;
    let target = match target_year {
        Some(y) => series
            .years()
            .iter()
            .position(|&v| v == y)
            .ok_or_else(|| UsageError(format!("year {y} not in {}", series.location_id())))?,
        None => series.len() - 1,
    };
    let history = series.prefix(target)?;
    let covariate = series.covariate()[target];
    let fits = [Model::Gev, Model::Bgev]
        .map(|m| fit_mle(&history, m, &s.run.spec_pos, &s.run.spec_neg, &s.fit));
    let [gev_fit, bgev_fit] = fits;
    let gev = gev_fit?.gev_at(covariate)?;
    let blended = bgev_fit?.bgev_at(covariate, s.run.spec_pos, s.run.spec_neg)?;
    let data = forecast_plot_data(
        history.maxima(),
        &gev,
        &blended,
        Some(series.maxima()[target]),
    )?;
    emit_forecast_plot_data(output, &data)?;
    if let Some(path) = svg {
        std::fs::write(path, render_plot_svg(&data))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    eprintln!(
        "year {}: observed {}, GEV upper bound {}, bGEV mass on grid {}",
        series.years()[target],
        sig6(series.maxima()[target]),
        sig6(data.gev_support.1),
        sig6(data.bgev_mass()),
    );
    Ok(())
}
