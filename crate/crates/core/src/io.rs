//! Series files, synthetic data, result tables and forecast plot data.
//!
//! Series files are UTF-8 CSV with the header
//! `location_id,year,annual_max,covariate`, one row per location and year.
//! Machine-facing numbers are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::bgev::{BgevDistribution, BlendSpec};
use crate::distributions::GevParams;
use crate::error::{Error, Result};
use crate::fitting::{Model, TrainingSet};
use crate::forecast::{default_a_grid, ForecastRecord, SweepResult, MIN_WINDOW};
use crate::special_functions::BetaShape;

pub const SERIES_HEADER: [&str; 4] = ["location_id", "year", "annual_max", "covariate"];
pub const RECORDS_HEADER: [&str; 9] = [
    "location_id",
    "train_len",
    "target_year",
    "observed",
    "model",
    "a",
    "b",
    "nll",
    "fitted_xi",
];
pub const SWEEP_HEADER: [&str; 5] = ["a", "b", "total_nll", "n_forecasts", "n_infinite"];
/// Points in the emitted forecast density curves.
pub const PLOT_GRID_POINTS: usize = 500;

/// Settings shared by the command-line subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub spec_pos: BlendSpec,
    pub spec_neg: BlendSpec,
    pub min_window: usize,
    pub a_grid: Vec<f64>,
    pub delta: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::Bgev,
            spec_pos: BlendSpec::positive_default(),
            spec_neg: BlendSpec {
                a: 0.85,
                b: 0.84,
                shape: BetaShape::default(),
            },
            min_window: MIN_WINDOW,
            a_grid: default_a_grid(),
            delta: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    location_id: String,
    year: i32,
    annual_max: f64,
    covariate: f64,
}

/// Reads a series file, grouping rows by `location_id` in order of first appearance.
pub fn read_series(path: impl AsRef<Path>) -> Result<Vec<TrainingSet>> {
    read_series_from(File::open(path)?)
}

pub fn read_series_from<R: Read>(reader: R) -> Result<Vec<TrainingSet>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SERIES_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            detail: format!(
                "expected header '{}', found '{}'",
                SERIES_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut groups: Vec<(String, Vec<SeriesRow>)> = Vec::new();
    for result in rdr.deserialize::<SeriesRow>() {
        let row = result.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            detail: e.to_string(),
        })?;
        match groups.iter_mut().find(|(id, _)| *id == row.location_id) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((row.location_id.clone(), vec![row])),
        }
    }

    groups
        .into_iter()
        .map(|(id, rows)| {
            let years = rows.iter().map(|r| r.year).collect();
            let maxima = rows.iter().map(|r| r.annual_max).collect();
            let covariate = rows.iter().map(|r| r.covariate).collect();
            TrainingSet::new(id, years, maxima, covariate)
        })
        .collect()
}

pub fn write_series(path: impl AsRef<Path>, dataset: &[TrainingSet]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_series_to(&mut w, dataset)?;
    w.flush()?;
    Ok(())
}

pub fn write_series_to<W: Write>(writer: W, dataset: &[TrainingSet]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for series in dataset {
        for i in 0..series.len() {
            wtr.serialize(SeriesRow {
                location_id: series.location_id().to_string(),
                year: series.years()[i],
                annual_max: series.maxima()[i],
                covariate: series.covariate()[i],
            })?;
        }
    }
    if dataset.is_empty() {
        wtr.write_record(SERIES_HEADER)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parameters of the synthetic stand-in for reanalysis block maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n_locations: usize,
    pub n_years: usize,
    /// Location change per unit of covariate.
    pub trend: f64,
    pub xi: f64,
    pub sigma: f64,
    pub mu0: f64,
    pub first_year: i32,
    /// Covariate rise over the record.
    pub warming: f64,
    /// Standard deviation of year-to-year covariate noise.
    pub covariate_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_locations: 1,
            n_years: 84,
            trend: 0.0,
            xi: 0.0,
            sigma: 1.0,
            mu0: 305.0,
            first_year: 1940,
            warming: 1.2,
            covariate_noise: 0.1,
            seed: 0,
        }
    }
}

/// Synthetic dataset with the default location, scale and warming curve.
pub fn generate_synthetic(
    n_locations: usize,
    n_years: usize,
    trend: f64,
    xi: f64,
    seed: u64,
) -> Result<Vec<TrainingSet>> {
    generate_synthetic_with(&SyntheticConfig {
        n_locations,
        n_years,
        trend,
        xi,
        seed,
        ..Default::default()
    })
}

/// Draws block maxima from `GEV(mu0 + trend (T - T_bar), sigma, xi)`, where
/// the covariate `T` is a shared quadratic warming curve plus Gaussian noise.
pub fn generate_synthetic_with(cfg: &SyntheticConfig) -> Result<Vec<TrainingSet>> {
    if cfg.n_years <= MIN_WINDOW {
        return Err(Error::Validation(format!(
            "synthetic series need more than {MIN_WINDOW} years, got {}",
            cfg.n_years
        )));
    }
    GevParams::new(cfg.mu0, cfg.sigma, cfg.xi)?;
    let noise = Normal::new(0.0, cfg.covariate_noise)
        .map_err(|e| Error::InvalidParams(format!("covariate noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let last = (cfg.n_years - 1) as f64;
    let covariate: Vec<f64> = (0..cfg.n_years)
        .map(|i| {
            let frac = i as f64 / last;
            14.0 + cfg.warming * frac * frac + rng.sample(noise)
        })
        .collect();
    let t_bar = covariate.iter().sum::<f64>() / covariate.len() as f64;
    let years: Vec<i32> = (0..cfg.n_years as i32)
        .map(|i| cfg.first_year + i)
        .collect();

    (0..cfg.n_locations)
        .map(|loc| {
            let maxima = covariate
                .iter()
                .map(|t| {
                    let gev = GevParams {
                        mu: cfg.mu0 + cfg.trend * (t - t_bar),
                        sigma: cfg.sigma,
                        xi: cfg.xi,
                    };
                    gev.quantile(rng.sample(Open01))
                })
                .collect();
            TrainingSet::new(
                format!("loc{loc:03}"),
                years.clone(),
                maxima,
                covariate.clone(),
            )
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_records<W: Write>(writer: W, records: &[ForecastRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(RECORDS_HEADER)?;
    for r in records {
        wtr.write_record([
            r.location_id.clone(),
            r.train_len.to_string(),
            r.target_year.to_string(),
            r.observed.to_string(),
            r.model.to_string(),
            fmt_opt(r.blend.map(|(a, _)| a)),
            fmt_opt(r.blend.map(|(_, b)| b)),
            r.nll.to_string(),
            r.fitted_xi.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(writer: W, results: &[SweepResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SWEEP_HEADER)?;
    for r in results {
        wtr.write_record([
            r.a.to_string(),
            r.b.to_string(),
            r.total_nll.to_string(),
            r.n_forecasts.to_string(),
            r.n_infinite.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Historical histogram plus GEV and blended forecast densities on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub bins: Vec<HistogramBin>,
    pub grid: Vec<f64>,
    pub gev_density: Vec<f64>,
    pub bgev_density: Vec<f64>,
    pub observed: Option<f64>,
    pub n_history: usize,
    pub gev_support: (f64, f64),
}

impl PlotData {
    /// Trapezoid integral of the blended density over the grid.
    pub fn bgev_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.bgev_density)
    }

    pub fn gev_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.gev_density)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Samples both forecast densities on `[min(history) - 2 sigma, max(history) + 4 sigma]`,
/// with `sigma` the forecast GEV scale, and bins the history.
pub fn forecast_plot_data(
    history: &[f64],
    gev: &GevParams,
    bgev: &BgevDistribution,
    observed: Option<f64>,
) -> Result<PlotData> {
    if history.is_empty() {
        return Err(Error::Validation("plot history is empty".into()));
    }
    let lo = history.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x0 = lo - 2.0 * gev.sigma;
    let x1 = hi + 4.0 * gev.sigma;
    let step = (x1 - x0) / (PLOT_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..PLOT_GRID_POINTS)
        .map(|i| x0 + step * i as f64)
        .collect();
    let gev_density = grid.iter().map(|&x| gev.ln_pdf(x).exp()).collect();
    let bgev_density = grid
        .iter()
        .map(|&x| bgev.ln_pdf(x).map(f64::exp))
        .collect::<Result<_>>()?;

    let n_bins = ((history.len() as f64).sqrt().ceil() as usize).max(1);
    let width = if hi > lo {
        (hi - lo) / n_bins as f64
    } else {
        1.0
    };
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lo: lo + width * i as f64,
            hi: lo + width * (i + 1) as f64,
            count: 0,
        })
        .collect();
    for &x in history {
        let idx = (((x - lo) / width) as usize).min(n_bins - 1);
        bins[idx].count += 1;
    }

    Ok(PlotData {
        bins,
        grid,
        gev_density,
        bgev_density,
        observed,
        n_history: history.len(),
        gev_support: gev.support(),
    })
}

/// Writes `# observed` and `# gev_support` lines, then the `# histogram` and
/// `# density` sections as comma-separated tables.
pub fn write_plot_data<W: Write>(mut w: W, data: &PlotData) -> Result<()> {
    writeln!(w, "# observed,{}", fmt_opt(data.observed))?;
    writeln!(
        w,
        "# gev_support,{},{}",
        data.gev_support.0, data.gev_support.1
    )?;
    writeln!(w, "# histogram")?;
    writeln!(w, "bin_lo,bin_hi,count")?;
    for b in &data.bins {
        writeln!(w, "{},{},{}", b.lo, b.hi, b.count)?;
    }
    writeln!(w, "# density")?;
    writeln!(w, "x,gev_density,bgev_density")?;
    for ((x, g), b) in data
        .grid
        .iter()
        .zip(&data.gev_density)
        .zip(&data.bgev_density)
    {
        writeln!(w, "{x},{g},{b}")?;
    }
    Ok(())
}

pub fn emit_forecast_plot_data(path: impl AsRef<Path>, data: &PlotData) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_plot_data(&mut w, data)?;
    w.flush()?;
    Ok(())
}

/// Minimal SVG: histogram as density bars, both forecast curves, observed marker.
pub fn render_plot_svg(data: &PlotData) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const PAD: f64 = 40.0;
    let x0 = data.grid[0];
    let x1 = data.grid[data.grid.len() - 1];
    let hist_density = |b: &HistogramBin| b.count as f64 / (data.n_history as f64 * (b.hi - b.lo));
    let y_max = data
        .gev_density
        .iter()
        .chain(&data.bgev_density)
        .copied()
        .chain(data.bins.iter().map(hist_density))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.05;
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y.min(y_max) / y_max * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for b in &data.bins {
        let (left, right) = (px(b.lo), px(b.hi));
        let top = py(hist_density(b));
        let _ = writeln!(
            svg,
            r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#cccccc" stroke="#888888"/>"##,
            right - left,
            H - PAD - top
        );
    }
    for (ys, colour, dash) in [
        (&data.gev_density, "#1f77b4", ""),
        (&data.bgev_density, "#d62728", r#" stroke-dasharray="6,3""#),
    ] {
        let points: Vec<String> = data
            .grid
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2"{dash} points="{}"/>"#,
            points.join(" ")
        );
    }
    if let Some(obs) = data.observed {
        let x = px(obs.clamp(x0, x1));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            H - PAD
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="{:.2}" font-size="12">{x0:.1}</text>"#,
        H - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{x1:.1}</text>"#,
        W - PAD,
        H - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}
