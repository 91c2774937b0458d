//! Log-gamma and the beta distribution functions used by the blend weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the incomplete beta continued fraction.
pub const BETA_CF_TOL: f64 = 1e-14;
/// Iteration cap of the incomplete beta continued fraction.
pub const BETA_CF_MAX_ITER: usize = 300;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Shape parameters `(alpha, beta)` of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    alpha: f64,
    beta: f64,
}

impl BetaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta shapes must be positive and finite, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln B(alpha, beta)`.
    pub fn ln_beta_fn(&self) -> f64 {
        ln_beta_fn(self.alpha, self.beta)
    }
}

impl Default for BetaShape {
    /// `alpha = beta = 5`.
    fn default() -> Self {
        Self {
            alpha: 5.0,
            beta: 5.0,
        }
    }
}

/// Natural log of the gamma function for `x > 0`.
///
/// Arguments below 15 are shifted upward with the recurrence
/// `Γ(x+1) = xΓ(x)` before the Stirling series is applied.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(
            "log_gamma",
            format!("x must be positive and finite, got {x}"),
        ));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    const SHIFT_TO: f64 = 15.0;
    if x >= SHIFT_TO {
        return stirling(x);
    }
    let mut z = x;
    let mut prod = 1.0;
    while z < SHIFT_TO {
        prod *= z;
        z += 1.0;
    }
    stirling(z) - prod.ln()
}

fn stirling(x: f64) -> f64 {
    // Bernoulli-number coefficients B_{2k} / (2k (2k-1)).
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * inv2 + c;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series * inv
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

fn check_unit(func: &'static str, u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(
            func,
            format!("u must lie in [0, 1], got {u}"),
        ));
    }
    Ok(())
}

/// Regularized incomplete beta function `I_u(alpha, beta)`.
pub fn beta_cdf(u: f64, shape: BetaShape) -> Result<f64> {
    check_unit("beta_cdf", u)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(1.0);
    }
    let (a, b) = (shape.alpha, shape.beta);
    let ln_front = a * u.ln() + b * (-u).ln_1p() - ln_beta_fn(a, b);
    let front = ln_front.exp();
    if u < (a + 1.0) / (a + b + 2.0) {
        Ok((front * beta_cf(a, b, u)? / a).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - front * beta_cf(b, a, 1.0 - u)? / b).clamp(0.0, 1.0))
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_TOL {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        routine: "beta_cdf continued fraction",
        iterations: BETA_CF_MAX_ITER,
    })
}

/// Beta density `u^(alpha-1) (1-u)^(beta-1) / B(alpha, beta)`.
pub fn beta_pdf(u: f64, shape: BetaShape) -> Result<f64> {
    check_unit("beta_pdf", u)?;
    let (a, b) = (shape.alpha, shape.beta);
    let ln_b = ln_beta_fn(a, b);
    // Density at an endpoint where the factor with this exponent vanishes.
    let edge = |exponent: f64| -> f64 {
        if exponent > 0.0 {
            0.0
        } else if exponent == 0.0 {
            (-ln_b).exp()
        } else {
            f64::INFINITY
        }
    };
    if u == 0.0 {
        return Ok(edge(a - 1.0));
    }
    if u == 1.0 {
        return Ok(edge(b - 1.0));
    }
    Ok(((a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - ln_b).exp())
}
