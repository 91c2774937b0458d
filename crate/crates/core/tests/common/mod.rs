//! Independent numerical oracles for the integration tests.
//!
//! Nothing here calls into the quantile inversion or matching code of the
//! library; the oracles only consume CDF and density evaluations.

#![allow(dead_code)]

/// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(&f, a, b, tol, 0)
}

/// Integrates over consecutive breakpoints.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], tol / breaks.len() as f64))
        .sum()
}

/// Root of a nondecreasing `f - target` on `[lo, hi]` by plain bisection.
pub fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) <= target && f(hi) >= target, "root not bracketed");
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Newton iteration with a finite-difference Jacobian for two equations.
pub fn solve2<F: Fn(f64, f64) -> (f64, f64)>(f: F, mut x: f64, mut y: f64) -> (f64, f64) {
    for _ in 0..100 {
        let (f1, f2) = f(x, y);
        if f1.abs() < 1e-15 && f2.abs() < 1e-15 {
            break;
        }
        let hx = 1e-7 * x.abs().max(1.0);
        let hy = 1e-7 * y.abs().max(1.0);
        let (a1, a2) = f(x + hx, y);
        let (b1, b2) = f(x, y + hy);
        let j11 = (a1 - f1) / hx;
        let j21 = (a2 - f2) / hx;
        let j12 = (b1 - f1) / hy;
        let j22 = (b2 - f2) / hy;
        let det = j11 * j22 - j12 * j21;
        let dx = (f1 * j22 - f2 * j12) / det;
        let dy = (j11 * f2 - j21 * f1) / det;
        x -= dx;
        y -= dy;
        if dx.abs() < 1e-15 * x.abs().max(1.0) && dy.abs() < 1e-15 * y.abs().max(1.0) {
            break;
        }
    }
    (x, y)
}

/// Gumbel CDF written out directly.
pub fn gumbel_cdf_direct(x: f64, mu: f64, sigma: f64) -> f64 {
    (-(-(x - mu) / sigma).exp()).exp()
}

/// GEV CDF written out directly with `powf`, for `xi != 0` inside the support.
pub fn gev_cdf_direct(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = 1.0 + xi * (x - mu) / sigma;
    (-z.powf(-1.0 / xi)).exp()
}

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Weibull-domain series whose final value is pushed past the upper bound of
/// the GEV fitted to all preceding years, reproducing a record outside the
/// fitted support.
pub fn record_breaker_dataset(
    n_series: usize,
    n_years: usize,
    seed: u64,
    opts: &bgev::FitOptions,
) -> Vec<bgev::TrainingSet> {
    use bgev::io::{generate_synthetic_with, SyntheticConfig};
    use bgev::{fit_mle, BlendSpec, Model, TrainingSet};

    let base = generate_synthetic_with(&SyntheticConfig {
        n_locations: n_series,
        n_years,
        trend: 1.4,
        xi: -0.3,
        seed,
        ..Default::default()
    })
    .unwrap();
    let spec_pos = BlendSpec::positive_default();
    let spec_neg = BlendSpec::negative(0.85, 0.01).unwrap();
    base.into_iter()
        .map(|series| {
            let last = series.len() - 1;
            let train = series.prefix(last).unwrap();
            let fit = fit_mle(&train, Model::Gev, &spec_pos, &spec_neg, opts).unwrap();
            assert!(
                fit.params.xi < 0.0,
                "need a bounded fit to engineer a record"
            );
            let gev = fit.gev_at(series.covariate()[last]).unwrap();
            let (_, upper) = gev.support();
            let mut maxima = series.maxima().to_vec();
            maxima[last] = upper + gev.sigma;
            TrainingSet::new(
                series.location_id(),
                series.years().to_vec(),
                maxima,
                series.covariate().to_vec(),
            )
            .unwrap()
        })
        .collect()
}
