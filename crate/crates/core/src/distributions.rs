//! Gumbel and generalized extreme value (GEV) distributions.
//!
//! The GEV CDF on standardized values `s = (x - mu) / sigma` is
//!
//! ```text
//! F(s) = exp(-exp(-s))                   xi == 0
//!        exp(-(1 + xi s)^(-1/xi))        xi != 0, xi s > -1
//!        0                               xi > 0,  xi s <= -1
//!        1                               xi < 0,  xi s <= -1
//! ```
//!
//! Methods on [`GevParams`] and [`GumbelParams`] are infallible and propagate
//! NaN; the free functions validate their arguments and return [`Result`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shapes with `|xi| < XI_EPS` are evaluated with the Gumbel closed forms.
pub const XI_EPS: f64 = 1e-8;

/// Extreme-value type implied by the sign of the shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GevKind {
    Gumbel,
    Frechet,
    Weibull,
}

/// Location, scale and shape of a GEV distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

/// Location and scale of a Gumbel distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams {
    pub mu_tilde: f64,
    pub sigma_tilde: f64,
}

/// `ln t(s)` where `F_GEV(s) = exp(-t(s))`, or `None` outside the support.
///
/// `None` covers both `xi s <= -1` branches; the caller decides whether that
/// means `F = 0` or `F = 1` from the sign of `xi`.
#[inline]
pub(crate) fn gev_ln_t(s: f64, xi: f64) -> Option<f64> {
    if xi.abs() < XI_EPS {
        return Some(-s);
    }
    let z = xi * s;
    if z <= -1.0 {
        None
    } else {
        Some(-z.ln_1p() / xi)
    }
}

/// Standardized GEV log-density, `-inf` outside the open support.
#[inline]
pub(crate) fn gev_std_logpdf(s: f64, xi: f64) -> f64 {
    match gev_ln_t(s, xi) {
        Some(ln_t) => {
            let shape = if xi.abs() < XI_EPS { 1.0 } else { xi + 1.0 };
            shape * ln_t - ln_t.exp()
        }
        None => f64::NEG_INFINITY,
    }
}

#[inline]
pub(crate) fn gev_std_cdf(s: f64, xi: f64) -> f64 {
    match gev_ln_t(s, xi) {
        Some(ln_t) => (-ln_t.exp()).exp(),
        None if xi > 0.0 => 0.0,
        None => 1.0,
    }
}

#[inline]
pub(crate) fn gev_std_quantile(q: f64, xi: f64) -> f64 {
    let lnln = (-q.ln()).ln();
    if xi.abs() < XI_EPS {
        -lnln
    } else {
        (-xi * lnln).exp_m1() / xi
    }
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!(
                "GEV location must be finite, got {mu}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "GEV scale must be positive and finite, got {sigma}"
            )));
        }
        if !xi.is_finite() {
            return Err(Error::InvalidParams(format!(
                "GEV shape must be finite, got {xi}"
            )));
        }
        Ok(Self { mu, sigma, xi })
    }

    pub fn kind(&self) -> GevKind {
        if self.xi.abs() < XI_EPS {
            GevKind::Gumbel
        } else if self.xi > 0.0 {
            GevKind::Frechet
        } else {
            GevKind::Weibull
        }
    }

    #[inline]
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gev_std_cdf(self.standardize(x), self.xi)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        gev_std_logpdf(self.standardize(x), self.xi) - self.sigma.ln()
    }

    pub fn quantile(&self, q: f64) -> f64 {
        self.mu + self.sigma * gev_std_quantile(q, self.xi)
    }

    /// Support `(lower, upper)`; the finite endpoint is `mu - sigma / xi`.
    pub fn support(&self) -> (f64, f64) {
        match self.kind() {
            GevKind::Gumbel => (f64::NEG_INFINITY, f64::INFINITY),
            GevKind::Frechet => (self.mu - self.sigma / self.xi, f64::INFINITY),
            GevKind::Weibull => (f64::NEG_INFINITY, self.mu - self.sigma / self.xi),
        }
    }
}

impl GumbelParams {
    pub fn new(mu_tilde: f64, sigma_tilde: f64) -> Result<Self> {
        if !mu_tilde.is_finite() || !(sigma_tilde.is_finite() && sigma_tilde > 0.0) {
            return Err(Error::InvalidParams(format!(
                "Gumbel needs finite location and positive scale, got ({mu_tilde}, {sigma_tilde})"
            )));
        }
        Ok(Self {
            mu_tilde,
            sigma_tilde,
        })
    }

    #[inline]
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mu_tilde) / self.sigma_tilde
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-(-self.standardize(x)).exp()).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let s = self.standardize(x);
        -s - (-s).exp() - self.sigma_tilde.ln()
    }

    pub fn quantile(&self, q: f64) -> f64 {
        self.mu_tilde - self.sigma_tilde * (-q.ln()).ln()
    }

    pub fn as_gev(&self) -> GevParams {
        GevParams {
            mu: self.mu_tilde,
            sigma: self.sigma_tilde,
            xi: 0.0,
        }
    }
}

fn check_finite(func: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(func, format!("x must be finite, got {x}")))
    }
}

pub(crate) fn check_prob(func: &'static str, q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(
            func,
            format!("q must lie in (0, 1), got {q}"),
        ))
    }
}

pub fn gev_cdf(x: f64, p: &GevParams) -> Result<f64> {
    check_finite("gev_cdf", x)?;
    Ok(p.cdf(x))
}

/// GEV log-density; `-inf` outside the support and at a finite bound.
pub fn gev_logpdf(x: f64, p: &GevParams) -> Result<f64> {
    check_finite("gev_logpdf", x)?;
    Ok(p.ln_pdf(x))
}

pub fn gev_quantile(q: f64, p: &GevParams) -> Result<f64> {
    check_prob("gev_quantile", q)?;
    Ok(p.quantile(q))
}

pub fn gev_support(p: &GevParams) -> (f64, f64) {
    p.support()
}

pub fn gumbel_cdf(x: f64, g: &GumbelParams) -> Result<f64> {
    check_finite("gumbel_cdf", x)?;
    Ok(g.cdf(x))
}

pub fn gumbel_logpdf(x: f64, g: &GumbelParams) -> Result<f64> {
    check_finite("gumbel_logpdf", x)?;
    Ok(g.ln_pdf(x))
}

pub fn gumbel_quantile(q: f64, g: &GumbelParams) -> Result<f64> {
    check_prob("gumbel_quantile", q)?;
    Ok(g.quantile(q))
}
