//! Blended GEV distribution.
//!
//! The blended CDF is `F_GEV(x)^p(x) * F_Gumbel(x)^(1 - p(x))`, where the
//! Gumbel component is matched to the GEV at the quantile levels `a` and `b`,
//! and the weight `p` moves from 0 at `q_a` to 1 at `q_b` along a beta CDF.
//!
//! For `xi > 0` the blend replaces the hard lower bound (`0 < a < b < 1`,
//! Gumbel below `q_a`). For `xi < 0` it replaces the hard upper bound
//! (`1 > a > b > 0`, Gumbel above `q_a`). Either way the resulting
//! distribution has positive density on the whole real line.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{check_prob, gev_ln_t, GevParams, GumbelParams, XI_EPS};
use crate::error::{Error, Result};
use crate::special_functions::{beta_cdf, beta_pdf, BetaShape};

/// Probability tolerance of the blend-region quantile inversion.
pub const QUANTILE_TOL: f64 = 1e-12;
const MAX_NEWTON_STEPS: usize = 5;
/// Points scanned across the blend region when checking the density sign.
const DENSITY_CHECK_POINTS: usize = 65;

/// Blending quantiles `a`, `b` and the beta shape of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendSpec {
    pub a: f64,
    pub b: f64,
    pub shape: BetaShape,
}

impl BlendSpec {
    pub fn new(a: f64, b: f64, shape: BetaShape) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if a == b {
            return Err(Error::InvalidSpec(format!(
                "a and b must differ, both are {a}"
            )));
        }
        Ok(Self { a, b, shape })
    }

    /// Lower-tail spec for positive shapes: `a = 0.05, b = 0.2, alpha = beta = 5`.
    pub fn positive_default() -> Self {
        Self {
            a: 0.05,
            b: 0.2,
            shape: BetaShape::default(),
        }
    }

    /// Upper-tail spec for negative shapes with `b = a - delta`, `alpha = beta = 5`.
    pub fn negative(a: f64, delta: f64) -> Result<Self> {
        let spec = Self::new(a, a - delta, BetaShape::default())?;
        spec.check_for(Tail::UpperBlend)?;
        Ok(spec)
    }

    /// Checks the quantile ordering required by `tail`.
    pub fn check_for(&self, tail: Tail) -> Result<()> {
        match tail {
            Tail::LowerBlend if self.a >= self.b => Err(Error::InvalidSpec(format!(
                "lower-tail blend needs 0 < a < b < 1, got a={}, b={}",
                self.a, self.b
            ))),
            Tail::UpperBlend if self.a <= self.b => Err(Error::InvalidSpec(format!(
                "upper-tail blend needs 1 > a > b > 0, got a={}, b={}",
                self.a, self.b
            ))),
            _ => Ok(()),
        }
    }
}

/// Which tail of the GEV is blended with the matched Gumbel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    /// `xi > 0`: Gumbel below `q_a`, GEV above `q_b`.
    LowerBlend,
    /// `xi < 0`: GEV below `q_b`, Gumbel above `q_a`.
    UpperBlend,
    /// `|xi| < XI_EPS`: the distribution is exactly `Gumbel(mu, sigma)`.
    PureGumbel,
}

/// Blend-region endpoints in data units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendRegion {
    pub spec: BlendSpec,
    /// GEV quantile at level `a`; the weight is 0 here.
    pub q_a: f64,
    /// GEV quantile at level `b`; the weight is 1 here.
    pub q_b: f64,
}

impl BlendRegion {
    /// Closed interval covered by the blend, low end first.
    pub fn bounds(&self) -> (f64, f64) {
        (self.q_a.min(self.q_b), self.q_a.max(self.q_b))
    }
}

/// A fully resolved blended GEV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgevDistribution {
    gev: GevParams,
    gumbel: GumbelParams,
    tail: Tail,
    blend: Option<BlendRegion>,
    density_violation: Option<f64>,
}

/// Selects the blend by the sign of `gev.xi` and matches the Gumbel component.
///
/// Both specs must satisfy their own ordering convention.
pub fn build_bgev(
    gev: GevParams,
    spec_pos: BlendSpec,
    spec_neg: BlendSpec,
) -> Result<BgevDistribution> {
    spec_pos.check_for(Tail::LowerBlend)?;
    spec_neg.check_for(Tail::UpperBlend)?;
    let mut dist = BgevDistribution::build_unchecked(gev, &spec_pos, &spec_neg)?;
    dist.density_violation = dist.scan_density()?;
    if let Some(x) = dist.density_violation {
        log::warn!(
            "blended density is not positive at x={x} for xi={}, spec={:?}",
            gev.xi,
            dist.blend.map(|b| b.spec)
        );
    }
    Ok(dist)
}

pub fn blend_weight(x: f64, d: &BgevDistribution) -> Result<f64> {
    d.weight(x)
}

pub fn bgev_cdf(x: f64, d: &BgevDistribution) -> Result<f64> {
    check_finite("bgev_cdf", x)?;
    d.cdf(x)
}

pub fn bgev_logpdf(x: f64, d: &BgevDistribution) -> Result<f64> {
    check_finite("bgev_logpdf", x)?;
    d.ln_pdf(x)
}

pub fn bgev_quantile(q: f64, d: &BgevDistribution) -> Result<f64> {
    check_prob("bgev_quantile", q)?;
    d.quantile(q)
}

/// Inversion sampling with a seeded ChaCha8 generator.
pub fn bgev_sample(n: usize, d: &BgevDistribution, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    d.sample(n, &mut rng)
}

fn check_finite(func: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            func,
            detail: format!("x must be finite, got {x}"),
        })
    }
}

impl BgevDistribution {
    /// Builds without validating spec ordering or scanning the density.
    ///
    /// The caller guarantees `spec_pos` is a lower-tail spec and `spec_neg`
    /// an upper-tail spec.
    pub(crate) fn build_unchecked(
        gev: GevParams,
        spec_pos: &BlendSpec,
        spec_neg: &BlendSpec,
    ) -> Result<Self> {
        if gev.xi.abs() < XI_EPS {
            return Ok(Self {
                gev,
                gumbel: GumbelParams {
                    mu_tilde: gev.mu,
                    sigma_tilde: gev.sigma,
                },
                tail: Tail::PureGumbel,
                blend: None,
                density_violation: None,
            });
        }
        let (tail, spec) = if gev.xi > 0.0 {
            (Tail::LowerBlend, *spec_pos)
        } else {
            (Tail::UpperBlend, *spec_neg)
        };
        let q_a = gev.quantile(spec.a);
        let q_b = gev.quantile(spec.b);
        let sigma_tilde = (q_a - q_b) / ((-spec.b.ln()).ln() - (-spec.a.ln()).ln());
        let mu_tilde = q_a + sigma_tilde * (-spec.a.ln()).ln();
        if !(sigma_tilde > 0.0 && sigma_tilde.is_finite() && mu_tilde.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "matched Gumbel is invalid (mu~={mu_tilde}, sigma~={sigma_tilde}) for xi={}",
                gev.xi
            )));
        }
        Ok(Self {
            gev,
            gumbel: GumbelParams {
                mu_tilde,
                sigma_tilde,
            },
            tail,
            blend: Some(BlendRegion { spec, q_a, q_b }),
            density_violation: None,
        })
    }

    pub fn gev(&self) -> &GevParams {
        &self.gev
    }

    pub fn gumbel(&self) -> &GumbelParams {
        &self.gumbel
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn blend(&self) -> Option<&BlendRegion> {
        self.blend.as_ref()
    }

    /// First scanned point where the blended density was not positive.
    pub fn density_violation(&self) -> Option<f64> {
        self.density_violation
    }

    /// Position within the blend, 0 at `q_a` and 1 at `q_b`, clamped.
    fn blend_position(region: &BlendRegion, x: f64) -> f64 {
        ((x - region.q_a) / (region.q_b - region.q_a)).clamp(0.0, 1.0)
    }

    /// Beta-CDF weight of the GEV factor.
    ///
    /// Returns 1 for a pure Gumbel, where the GEV and Gumbel components coincide.
    pub fn weight(&self, x: f64) -> Result<f64> {
        match &self.blend {
            None => Ok(1.0),
            Some(region) => {
                let u = Self::blend_position(region, x);
                if u == 0.0 || u == 1.0 || x.is_nan() {
                    return Ok(u);
                }
                beta_cdf(u, region.spec.shape)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let Some(_) = self.blend else {
            return Ok(self.gumbel.cdf(x));
        };
        let p = self.weight(x)?;
        if p == 0.0 {
            return Ok(self.gumbel.cdf(x));
        }
        if p == 1.0 {
            return Ok(self.gev.cdf(x));
        }
        let ln_gev = match gev_ln_t(self.gev.standardize(x), self.gev.xi) {
            Some(ln_t) => -ln_t.exp(),
            None if self.gev.xi > 0.0 => f64::NEG_INFINITY,
            None => 0.0,
        };
        let ln_gum = -(-self.gumbel.standardize(x)).exp();
        Ok((p * ln_gev + (1.0 - p) * ln_gum).exp())
    }

    /// Log-density of the blend.
    ///
    /// Inside the blend region this differentiates the product form:
    /// `f = F [p' (ln F_GEV - ln F_Gumbel) + p f_GEV / F_GEV + (1 - p) f_Gumbel / F_Gumbel]`.
    /// Returns `-inf` wherever that bracket is not positive.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        let Some(region) = &self.blend else {
            return Ok(self.gumbel.ln_pdf(x));
        };
        let u = Self::blend_position(region, x);
        if u == 0.0 {
            return Ok(self.gumbel.ln_pdf(x));
        }
        if u == 1.0 {
            return Ok(self.gev.ln_pdf(x));
        }
        Ok(self.blend_terms(region, x, u)?.ln_pdf())
    }

    fn blend_terms(&self, region: &BlendRegion, x: f64, u: f64) -> Result<BlendTerms> {
        let shape = region.spec.shape;
        let p = beta_cdf(u, shape)?;
        let dp = beta_pdf(u, shape)? / (region.q_b - region.q_a);
        let ln_t = gev_ln_t(self.gev.standardize(x), self.gev.xi);
        let t_gum = (-self.gumbel.standardize(x)).exp();
        Ok(BlendTerms {
            p,
            dp,
            ln_t,
            xi: self.gev.xi,
            sigma: self.gev.sigma,
            t_gum,
            sigma_tilde: self.gumbel.sigma_tilde,
        })
    }

    /// Scans the blend region for points with non-positive density.
    fn scan_density(&self) -> Result<Option<f64>> {
        let Some(region) = &self.blend else {
            return Ok(None);
        };
        for i in 1..DENSITY_CHECK_POINTS - 1 {
            let u = i as f64 / (DENSITY_CHECK_POINTS - 1) as f64;
            let x = region.q_a + u * (region.q_b - region.q_a);
            let lp = self.blend_terms(region, x, u)?.ln_pdf();
            if lp == f64::NEG_INFINITY || lp.is_nan() {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        let Some(region) = &self.blend else {
            return Ok(self.gumbel.quantile(q));
        };
        let spec = region.spec;
        let (gumbel_side, gev_side) = match self.tail {
            Tail::UpperBlend => (q >= spec.a, q <= spec.b),
            _ => (q <= spec.a, q >= spec.b),
        };
        if gumbel_side {
            return Ok(self.gumbel.quantile(q));
        }
        if gev_side {
            return Ok(self.gev.quantile(q));
        }
        self.invert_blend(region, q)
    }

    /// Bisection on the blend interval followed by Newton refinement.
    fn invert_blend(&self, region: &BlendRegion, q: f64) -> Result<f64> {
        let (mut lo, mut hi) = region.bounds();
        let width = hi - lo;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            x = 0.5 * (lo + hi);
            let f = self.cdf(x)? - q;
            if f.abs() <= QUANTILE_TOL || hi - lo <= 1e-10 * width {
                break;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
        }
        for _ in 0..MAX_NEWTON_STEPS {
            let f = self.cdf(x)? - q;
            if f.abs() <= 1e-15 {
                break;
            }
            let dens = self.ln_pdf(x)?.exp();
            if dens.is_nan() || dens <= 0.0 {
                break;
            }
            let next = x - f / dens;
            if !(next >= lo && next <= hi) {
                break;
            }
            let f_next = self.cdf(next)? - q;
            if f_next.abs() >= f.abs() {
                break;
            }
            x = next;
        }
        Ok(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            })
            .collect()
    }
}

/// Pieces of the blended density at one point inside the blend region.
struct BlendTerms {
    p: f64,
    dp: f64,
    ln_t: Option<f64>,
    xi: f64,
    sigma: f64,
    t_gum: f64,
    sigma_tilde: f64,
}

impl BlendTerms {
    fn ln_pdf(&self) -> f64 {
        let Some(ln_t) = self.ln_t else {
            // Outside the GEV support with a nonzero GEV weight.
            return f64::NEG_INFINITY;
        };
        let t = ln_t.exp();
        let gev_hazard = ((self.xi + 1.0) * ln_t).exp() / self.sigma;
        let gum_hazard = self.t_gum / self.sigma_tilde;
        let bracket =
            self.dp * (self.t_gum - t) + self.p * gev_hazard + (1.0 - self.p) * gum_hazard;
        if bracket > 0.0 {
            bracket.ln() - self.p * t - (1.0 - self.p) * self.t_gum
        } else {
            f64::NEG_INFINITY
        }
    }
}
