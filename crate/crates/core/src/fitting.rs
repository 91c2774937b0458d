//! Maximum-likelihood fitting of GEV and blended GEV models whose location
//! varies linearly with a covariate: `mu(t) = mu0 + mu_t (T(t) - T_bar)`.
//!
//! The scale and shape are constant within a fit. `T_bar` is the mean of the
//! covariate over the training data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bgev::{BgevDistribution, BlendSpec, Tail};
use crate::distributions::{gev_std_logpdf, GevParams};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Smallest number of observations accepted for fitting four parameters.
pub const MIN_OBSERVATIONS: usize = 4;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "GEV")]
    Gev,
    #[serde(rename = "BGEV")]
    Bgev,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Gev => "GEV",
            Model::Bgev => "BGEV",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gev" => Ok(Model::Gev),
            "bgev" => Ok(Model::Bgev),
            other => Err(Error::Validation(format!(
                "unknown model '{other}', expected gev or bgev"
            ))),
        }
    }
}

/// Annual maxima of one location with their years and covariate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    location_id: String,
    years: Vec<i32>,
    maxima: Vec<f64>,
    covariate: Vec<f64>,
}

impl TrainingSet {
    pub fn new(
        location_id: impl Into<String>,
        years: Vec<i32>,
        maxima: Vec<f64>,
        covariate: Vec<f64>,
    ) -> Result<Self> {
        let location_id = location_id.into();
        if years.len() != maxima.len() || years.len() != covariate.len() {
            return Err(Error::Validation(format!(
                "{location_id}: column lengths differ ({} years, {} maxima, {} covariate)",
                years.len(),
                maxima.len(),
                covariate.len()
            )));
        }
        if years.len() < MIN_OBSERVATIONS {
            return Err(Error::Validation(format!(
                "{location_id}: {} observations, at least {MIN_OBSERVATIONS} required",
                years.len()
            )));
        }
        if let Some(w) = years.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "{location_id}: years must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(x) = maxima.iter().chain(&covariate).find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "{location_id}: non-finite value {x}"
            )));
        }
        Ok(Self {
            location_id,
            years,
            maxima,
            covariate,
        })
    }

    pub fn location_id(&self) -> &str {
        &self.location_id
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn maxima(&self) -> &[f64] {
        &self.maxima
    }

    pub fn covariate(&self) -> &[f64] {
        &self.covariate
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    /// The first `len` observations.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        let len = len.min(self.len());
        Self::new(
            self.location_id.clone(),
            self.years[..len].to_vec(),
            self.maxima[..len].to_vec(),
            self.covariate[..len].to_vec(),
        )
    }

    pub fn covariate_mean(&self) -> f64 {
        mean(&self.covariate)
    }
}

/// Maps a covariate value to a GEV location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateLocationModel {
    pub mu0: f64,
    pub mu_t: f64,
    pub t_bar: f64,
}

impl CovariateLocationModel {
    #[inline]
    pub fn location(&self, covariate: f64) -> f64 {
        self.mu0 + self.mu_t * (covariate - self.t_bar)
    }
}

/// Unconstrained search coordinates; the scale enters as `ln sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub mu0: f64,
    pub mu_t: f64,
    pub log_sigma: f64,
    pub xi: f64,
}

impl Theta {
    fn to_vec(self) -> [f64; 4] {
        [self.mu0, self.mu_t, self.log_sigma, self.xi]
    }

    fn from_slice(v: &[f64]) -> Self {
        Self {
            mu0: v[0],
            mu_t: v[1],
            log_sigma: v[2],
            xi: v[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub mu0: f64,
    pub mu_t: f64,
    pub sigma: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FitParams,
    pub t_bar: f64,
    /// Training negative log likelihood in nats.
    pub nll: f64,
    pub converged: bool,
    pub n_evals: usize,
    pub model: Model,
}

impl FitResult {
    pub fn location_model(&self) -> CovariateLocationModel {
        CovariateLocationModel {
            mu0: self.params.mu0,
            mu_t: self.params.mu_t,
            t_bar: self.t_bar,
        }
    }

    /// GEV at the location implied by `covariate`.
    pub fn gev_at(&self, covariate: f64) -> Result<GevParams> {
        GevParams::new(
            self.location_model().location(covariate),
            self.params.sigma,
            self.params.xi,
        )
    }

    pub fn bgev_at(
        &self,
        covariate: f64,
        spec_pos: BlendSpec,
        spec_neg: BlendSpec,
    ) -> Result<BgevDistribution> {
        crate::bgev::build_bgev(self.gev_at(covariate)?, spec_pos, spec_neg)
    }
}

/// Optimizer settings for [`fit_mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub optimizer: NelderMeadOptions,
    /// Restart once from the best vertex when the evaluation cap is hit.
    pub restart: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadOptions::default(),
            restart: true,
        }
    }
}

impl FitOptions {
    /// Looser tolerances for large batch runs.
    pub fn reduced() -> Self {
        Self {
            optimizer: NelderMeadOptions {
                max_evals: 2000,
                f_tol: 1e-6,
                x_tol: 1e-4,
            },
            restart: true,
        }
    }
}

/// Negative log likelihood of `data` at `theta`; `+inf` when any
/// observation has zero density.
pub fn train_nll(
    theta: &Theta,
    data: &TrainingSet,
    model: Model,
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
) -> f64 {
    let t_bar = data.covariate_mean();
    nll_with_mean(theta, data, t_bar, model, spec_pos, spec_neg)
}

fn nll_with_mean(
    theta: &Theta,
    data: &TrainingSet,
    t_bar: f64,
    model: Model,
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
) -> f64 {
    let sigma = theta.log_sigma.exp();
    if !(sigma > 0.0 && sigma.is_finite() && theta.xi.is_finite() && theta.mu0.is_finite()) {
        return f64::INFINITY;
    }
    let loc = CovariateLocationModel {
        mu0: theta.mu0,
        mu_t: theta.mu_t,
        t_bar,
    };
    let standardized = data
        .maxima
        .iter()
        .zip(&data.covariate)
        .map(|(x, t)| (x - loc.location(*t)) / sigma);

    let total_log_density = match model {
        Model::Gev => standardized
            .map(|s| gev_std_logpdf(s, theta.xi))
            .sum::<f64>(),
        Model::Bgev => {
            let unit = GevParams {
                mu: 0.0,
                sigma: 1.0,
                xi: theta.xi,
            };
            let Ok(dist) = BgevDistribution::build_unchecked(unit, spec_pos, spec_neg) else {
                return f64::INFINITY;
            };
            let mut acc = 0.0;
            for s in standardized {
                match dist.ln_pdf(s) {
                    Ok(v) => acc += v,
                    Err(_) => return f64::INFINITY,
                }
            }
            acc
        }
    };
    let nll = data.len() as f64 * theta.log_sigma - total_log_density;
    if nll.is_nan() {
        f64::INFINITY
    } else {
        nll
    }
}

/// Gumbel method-of-moments start with an OLS slope on the centered covariate.
pub fn initialize_theta(data: &TrainingSet) -> Result<Theta> {
    let xs = data.maxima();
    let n = xs.len() as f64;
    let x_bar = mean(xs);
    let var = xs.iter().map(|x| (x - x_bar).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::DegenerateData(format!(
            "{}: maxima have zero variance",
            data.location_id()
        )));
    }
    let t_bar = data.covariate_mean();
    let (sxy, sxx) = data
        .covariate()
        .iter()
        .zip(xs)
        .fold((0.0, 0.0), |(sxy, sxx), (t, x)| {
            let tc = t - t_bar;
            (sxy + tc * (x - x_bar), sxx + tc * tc)
        });
    let mu_t = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sigma0 = sd * 6f64.sqrt() / std::f64::consts::PI;
    Ok(Theta {
        mu0: x_bar - EULER_GAMMA * sigma0,
        mu_t,
        log_sigma: sigma0.ln(),
        xi: 0.0,
    })
}

/// Fits `(mu0, mu_t, sigma, xi)` by Nelder–Mead on the negative log likelihood.
///
/// Non-convergence is reported through [`FitResult::converged`].
pub fn fit_mle(
    data: &TrainingSet,
    model: Model,
    spec_pos: &BlendSpec,
    spec_neg: &BlendSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    if data.len() < MIN_OBSERVATIONS {
        return Err(Error::Validation(format!(
            "{} observations, at least {MIN_OBSERVATIONS} required",
            data.len()
        )));
    }
    spec_pos.check_for(Tail::LowerBlend)?;
    spec_neg.check_for(Tail::UpperBlend)?;

    let start = initialize_theta(data)?;
    let t_bar = data.covariate_mean();
    let sigma0 = start.log_sigma.exp();
    let t_sd = sample_sd(data.covariate());
    // A constant covariate leaves mu_t unidentified; hold it at zero.
    let fit_trend = t_sd > 0.0;

    let objective = |v: &[f64]| {
        let theta = if fit_trend {
            Theta::from_slice(v)
        } else {
            Theta {
                mu0: v[0],
                mu_t: 0.0,
                log_sigma: v[1],
                xi: v[2],
            }
        };
        nll_with_mean(&theta, data, t_bar, model, spec_pos, spec_neg)
    };
    let full_steps = [
        0.5 * sigma0,
        0.5 * sigma0 / t_sd.max(f64::MIN_POSITIVE),
        0.2,
        0.1,
    ];
    let (x0, steps): (Vec<f64>, Vec<f64>) = if fit_trend {
        (start.to_vec().to_vec(), full_steps.to_vec())
    } else {
        (
            vec![start.mu0, start.log_sigma, start.xi],
            vec![full_steps[0], full_steps[2], full_steps[3]],
        )
    };

    let mut run = nelder_mead(objective, &x0, &steps, &opts.optimizer);
    let mut n_evals = run.n_evals;
    if !run.converged && opts.restart {
        run = nelder_mead(objective, &run.x, &steps, &opts.optimizer);
        n_evals += run.n_evals;
    }

    let theta = if fit_trend {
        Theta::from_slice(&run.x)
    } else {
        Theta {
            mu0: run.x[0],
            mu_t: 0.0,
            log_sigma: run.x[1],
            xi: run.x[2],
        }
    };
    Ok(FitResult {
        params: FitParams {
            mu0: theta.mu0,
            mu_t: theta.mu_t,
            sigma: theta.log_sigma.exp(),
            xi: theta.xi,
        },
        t_bar,
        nll: run.fx,
        converged: run.converged,
        n_evals,
        model,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
