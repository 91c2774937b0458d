//! Rolling-origin one-step-ahead forecast evaluation.
//!
//! For each training length `s` from `min_window` to `n - 1`, the model is
//! fitted to the first `s` observations and scored by the negative log
//! likelihood of observation `s + 1` under the forecast distribution at that
//! year's covariate value. Windows are independent and evaluated in
//! parallel; results are always returned in window order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bgev::{BlendSpec, Tail};
use crate::error::{Error, Result};
use crate::fitting::{fit_mle, FitOptions, FitResult, Model, TrainingSet};

/// Smallest training window a forecast may be based on.
pub const MIN_WINDOW: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub location_id: String,
    pub train_len: usize,
    pub target_year: i32,
    pub observed: f64,
    pub model: Model,
    /// Blend quantiles `(a, b)` used by the forecast, if it was blended.
    pub blend: Option<(f64, f64)>,
    /// Negative log likelihood of `observed`; `+inf` outside the support.
    pub nll: f64,
    pub fitted_xi: f64,
}

/// A window that could not be fitted or scored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedWindow {
    pub location_id: String,
    pub train_len: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RollingForecast {
    pub records: Vec<ForecastRecord>,
    pub excluded: Vec<ExcludedWindow>,
}

impl RollingForecast {
    pub fn total_nll(&self) -> f64 {
        self.records.iter().map(|r| r.nll).sum()
    }

    pub fn n_infinite(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.nll == f64::INFINITY)
            .count()
    }
}

/// Summed forecast NLL for one blending quantile setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub a: f64,
    pub b: f64,
    pub total_nll: f64,
    pub n_forecasts: usize,
    pub n_infinite: usize,
    pub n_excluded: usize,
}

/// Aggregate forecast skill of one model over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: Model,
    pub total_nll: f64,
    pub n_forecasts: usize,
    pub n_infinite: usize,
    pub n_excluded: usize,
    pub share_negative_xi: f64,
    pub median_xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub gev: ModelSummary,
    pub bgev: ModelSummary,
}

/// `a` from 0.75 to 0.975 in steps of 0.025.
pub fn default_a_grid() -> Vec<f64> {
    (0..10)
        .map(|i| (750.0 + 25.0 * i as f64) / 1000.0)
        .collect()
}

/// Fits and scores one held-out observation.
pub fn forecast_one(
    series: &TrainingSet,
    train_len: usize,
    model: Model,
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
    opts: &FitOptions,
) -> Result<(FitResult, ForecastRecord)> {
    if train_len >= series.len() {
        return Err(Error::Validation(format!(
            "training length {train_len} leaves no held-out observation in a series of {}",
            series.len()
        )));
    }
    let train = series.prefix(train_len)?;
    let fit = fit_mle(&train, model, spec_pos, spec_neg, opts)?;
    let covariate = series.covariate()[train_len];
    let observed = series.maxima()[train_len];
    let (log_density, blend) = match model {
        Model::Gev => (fit.gev_at(covariate)?.ln_pdf(observed), None),
        Model::Bgev => {
            let dist = fit.bgev_at(covariate, *spec_pos, *spec_neg)?;
            let blend = match dist.tail() {
                Tail::PureGumbel => None,
                _ => dist.blend().map(|r| (r.spec.a, r.spec.b)),
            };
            (dist.ln_pdf(observed)?, blend)
        }
    };
    let record = ForecastRecord {
        location_id: series.location_id().to_string(),
        train_len,
        target_year: series.years()[train_len],
        observed,
        model,
        blend,
        nll: -log_density,
        fitted_xi: fit.params.xi,
    };
    Ok((fit, record))
}

/// Expanding-window forecasts for `s = min_window, ..., n - 1`.
///
/// Windows whose fit fails are skipped and listed in
/// [`RollingForecast::excluded`].
pub fn rolling_forecast(
    series: &TrainingSet,
    model: Model,
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
    min_window: usize,
    opts: &FitOptions,
) -> Result<RollingForecast> {
    if min_window < MIN_WINDOW {
        return Err(Error::Validation(format!(
            "min_window must be at least {MIN_WINDOW}, got {min_window}"
        )));
    }
    if series.len() <= min_window {
        return Err(Error::Validation(format!(
            "{}: {} observations do not exceed min_window {min_window}",
            series.location_id(),
            series.len()
        )));
    }
    spec_pos.check_for(Tail::LowerBlend)?;
    spec_neg.check_for(Tail::UpperBlend)?;

    let outcomes: Vec<_> = (min_window..series.len())
        .into_par_iter()
        .map(|s| (s, forecast_one(series, s, model, spec_pos, spec_neg, opts)))
        .collect();

    let mut out = RollingForecast::default();
    for (train_len, outcome) in outcomes {
        match outcome {
            Ok((_, record)) => out.records.push(record),
            Err(e) => {
                log::warn!("{}: window {train_len} excluded: {e}", series.location_id());
                out.excluded.push(ExcludedWindow {
                    location_id: series.location_id().to_string(),
                    train_len,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Rolling forecasts for every series, concatenated in dataset order.
pub fn rolling_forecast_all(
    dataset: &[TrainingSet],
    model: Model,
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
    min_window: usize,
    opts: &FitOptions,
) -> Result<Vec<RollingForecast>> {
    dataset
        .par_iter()
        .map(|series| rolling_forecast(series, model, spec_pos, spec_neg, min_window, opts))
        .collect()
}

/// Sums per-series totals in dataset order.
fn aggregate(runs: &[RollingForecast]) -> (f64, usize, usize, usize) {
    runs.iter()
        .fold((0.0, 0, 0, 0), |(total, n, inf, ex), run| {
            (
                total + run.total_nll(),
                n + run.records.len(),
                inf + run.n_infinite(),
                ex + run.excluded.len(),
            )
        })
}

/// Runs blended rolling forecasts for each `a` with `b = a - delta`.
pub fn sweep_blend_quantiles(
    dataset: &[TrainingSet],
    a_grid: &[f64],
    delta: f64,
    spec_pos: &BlendSpec,
    min_window: usize,
    opts: &FitOptions,
) -> Result<Vec<SweepResult>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Validation(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let specs: Vec<BlendSpec> = a_grid
        .iter()
        .map(|&a| {
            if a - delta <= 0.0 || a >= 1.0 {
                return Err(Error::Validation(format!(
                    "blend quantile a={a} with delta={delta} leaves b outside (0, 1)"
                )));
            }
            BlendSpec::negative(a, delta)
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|i| (0..dataset.len()).map(move |j| (i, j)))
        .collect();
    let runs: Vec<RollingForecast> = cells
        .par_iter()
        .map(|&(i, j)| {
            rolling_forecast(
                &dataset[j],
                Model::Bgev,
                spec_pos,
                &specs[i],
                min_window,
                opts,
            )
        })
        .collect::<Result<_>>()?;

    Ok(specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let per_a = &runs[i * dataset.len()..(i + 1) * dataset.len()];
            let (total_nll, n_forecasts, n_infinite, n_excluded) = aggregate(per_a);
            SweepResult {
                a: spec.a,
                b: spec.b,
                total_nll,
                n_forecasts,
                n_infinite,
                n_excluded,
            }
        })
        .collect())
}

pub fn summarize(model: Model, runs: &[RollingForecast]) -> ModelSummary {
    let (total_nll, n_forecasts, n_infinite, n_excluded) = aggregate(runs);
    let mut xis: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.records.iter().map(|rec| rec.fitted_xi))
        .collect();
    xis.sort_by(f64::total_cmp);
    let share_negative_xi = if xis.is_empty() {
        f64::NAN
    } else {
        xis.iter().filter(|&&x| x < 0.0).count() as f64 / xis.len() as f64
    };
    ModelSummary {
        model,
        total_nll,
        n_forecasts,
        n_infinite,
        n_excluded,
        share_negative_xi,
        median_xi: median_sorted(&xis),
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Rolling forecasts under both models, each fitted by its own likelihood.
pub fn compare_models(
    dataset: &[TrainingSet],
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
    min_window: usize,
    opts: &FitOptions,
) -> Result<ModelComparison> {
    if dataset.is_empty() {
        return Err(Error::Validation("dataset is empty".into()));
    }
    let gev = rolling_forecast_all(dataset, Model::Gev, spec_pos, spec_neg, min_window, opts)?;
    let bgev = rolling_forecast_all(dataset, Model::Bgev, spec_pos, spec_neg, min_window, opts)?;
    Ok(ModelComparison {
        gev: summarize(Model::Gev, &gev),
        bgev: summarize(Model::Bgev, &bgev),
    })
}
