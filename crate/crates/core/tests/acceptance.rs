//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bgev::{
    bgev_cdf, bgev_logpdf, bgev_quantile, build_bgev, default_a_grid, fit_mle, generate_synthetic,
    gev_cdf, gev_quantile, gumbel_cdf, rolling_forecast, rolling_forecast_all,
    sweep_blend_quantiles, BgevDistribution, BlendSpec, FitOptions, GevParams, GumbelParams, Model,
    Tail, TrainingSet,
};
use common::{integrate_pieces, median};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn gev(mu: f64, sigma: f64, xi: f64) -> GevParams {
    GevParams::new(mu, sigma, xi).unwrap()
}

fn blended(mu: f64, sigma: f64, xi: f64) -> BgevDistribution {
    build_bgev(
        gev(mu, sigma, xi),
        BlendSpec::positive_default(),
        BlendSpec::negative(0.85, 0.01).unwrap(),
    )
    .unwrap()
}

fn negative_shapes() -> Vec<f64> {
    vec![
        -0.6, -0.5, -0.4, -0.3, -0.22, -0.15, -0.1, -0.05, -0.01, -1e-4, -1e-6,
    ]
}

fn gev_branches() -> Outcome {
    let table = include_str!("data/gev_cdf_reference.csv");
    let mut worst = 0.0f64;
    let mut rows = 0;
    for line in table.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        let err = (gev_cdf(v[3], &gev(v[1], v[2], v[0])).unwrap() - v[4]).abs();
        worst = worst.max(err);
        rows += 1;
    }
    check!(rows == 6000, "reference table has {rows} rows");
    check!(worst < 1e-13, "max abs error {worst:e}");
    for xi in [-0.4, -0.2, -0.05] {
        let p = gev(300.0, 2.0, xi);
        let bound = 300.0 - 2.0 / xi;
        for x in [bound, bound + 1e-9, bound + 1.0, 1e300] {
            check!(gev_cdf(x, &p).unwrap() == 1.0, "xi={xi}: F({x}) != 1");
        }
    }
    for xi in [0.05, 0.2, 0.5] {
        let p = gev(300.0, 2.0, xi);
        let bound = 300.0 - 2.0 / xi;
        for x in [bound, bound - 1e-9, bound - 1.0, -1e300] {
            check!(gev_cdf(x, &p).unwrap() == 0.0, "xi={xi}: F({x}) != 0");
        }
    }
    Ok(format!(
        "{rows} reference points, max abs error {worst:.2e}; bounded branches exact"
    ))
}

fn blend_matching() -> Outcome {
    let mut cases = 0;
    let mut worst = 0.0f64;
    let mut specs: Vec<(f64, BlendSpec)> = Vec::new();
    for xi in negative_shapes() {
        for a in default_a_grid() {
            for delta in [0.01, 0.05, 0.15] {
                specs.push((xi, BlendSpec::negative(a, delta).unwrap()));
            }
        }
    }
    for xi in [1e-6, 1e-4, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8] {
        specs.push((xi, BlendSpec::positive_default()));
    }
    for (xi, spec) in specs {
        let (pos, neg) = if xi < 0.0 {
            (BlendSpec::positive_default(), spec)
        } else {
            (spec, BlendSpec::negative(0.85, 0.01).unwrap())
        };
        let d = build_bgev(gev(0.0, 1.0, xi), pos, neg)
            .map_err(|e| format!("xi={xi} {spec:?}: {e}"))?;
        let region = d.blend().ok_or("missing blend region")?;
        let g: &GumbelParams = d.gumbel();
        check!(g.sigma_tilde > 0.0, "xi={xi}: sigma~ = {}", g.sigma_tilde);
        let ea = (gumbel_cdf(region.q_a, g).unwrap() - spec.a).abs();
        let eb = (gumbel_cdf(region.q_b, g).unwrap() - spec.b).abs();
        check!(
            ea < 1e-10 && eb < 1e-10,
            "xi={xi} a={} b={}: errors {ea:e}, {eb:e}",
            spec.a,
            spec.b
        );
        worst = worst.max(ea).max(eb);
        cases += 1;
    }
    Ok(format!(
        "{cases} (xi, a, b) cases, max matching error {worst:.2e}, all sigma~ > 0"
    ))
}

fn region_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut points = 0;
    for xi in [-0.4, -0.22, -0.05, 0.05, 0.2, 0.5] {
        let d = blended(10.0, 2.0, xi);
        let region = *d.blend().unwrap();
        let (lo, hi) = region.bounds();
        let expect = if xi < 0.0 {
            Tail::UpperBlend
        } else {
            Tail::LowerBlend
        };
        check!(d.tail() == expect, "xi={xi}: tail {:?}", d.tail());
        let x_min = d.quantile(1e-12).unwrap();
        let x_max = d.quantile(1.0 - 1e-12).unwrap();
        for i in 0..=1000 {
            let w = i as f64 / 1000.0;
            let below = x_min + (lo - x_min) * w;
            let above = hi + (x_max - hi) * w;
            let (gev_side, gumbel_side) = if xi < 0.0 {
                (below, above)
            } else {
                (above, below)
            };
            let e1 = (bgev_cdf(gev_side, &d).unwrap() - gev_cdf(gev_side, d.gev()).unwrap()).abs();
            let e2 = (bgev_cdf(gumbel_side, &d).unwrap()
                - gumbel_cdf(gumbel_side, d.gumbel()).unwrap())
            .abs();
            check!(e1 < 1e-14 && e2 < 1e-14, "xi={xi} w={w}: {e1:e}, {e2:e}");
            worst = worst.max(e1).max(e2);
            points += 2;
        }
    }
    Ok(format!(
        "{points} points in pure regions of both tails, max deviation {worst:.1e}"
    ))
}

/// Richardson-extrapolated central difference of the CDF.
fn cdf_derivative(d: &BgevDistribution, x: f64, h: f64) -> f64 {
    let cd = |h: f64| (bgev_cdf(x + h, d).unwrap() - bgev_cdf(x - h, d).unwrap()) / (2.0 * h);
    (4.0 * cd(0.5 * h) - cd(h)) / 3.0
}

fn density_validity() -> Outcome {
    let mut worst_rel = 0.0f64;
    let mut worst_mass = 0.0f64;
    for xi in [-0.22, 0.2] {
        let d = blended(300.0, 2.0, xi);
        let (lo, hi) = d.blend().unwrap().bounds();
        let x0 = d.quantile(1e-3).unwrap();
        let x1 = d.quantile(1.0 - 1e-4).unwrap();
        let mut xs: Vec<f64> = (0..498)
            .map(|i| x0 + (x1 - x0) * i as f64 / 497.0)
            .collect();
        xs.push(lo);
        xs.push(hi);
        check!(xs.len() == 500, "grid size");
        for &x in &xs {
            let f = bgev_logpdf(x, &d).unwrap().exp();
            check!(f > 0.0, "xi={xi}: f({x}) = {f}");
            let fd = cdf_derivative(&d, x, 2e-3);
            let rel = (fd - f).abs() / f;
            check!(
                rel < 1e-6,
                "xi={xi} x={x}: pdf {f} vs fd {fd} (rel {rel:e})"
            );
            worst_rel = worst_rel.max(rel);
        }
        let tail_lo = d.quantile(1e-15).unwrap();
        let tail_hi = d.quantile(1.0 - 1e-15).unwrap();
        for i in 0..=20_000 {
            let x = tail_lo - 50.0 + (tail_hi + 50.0 - tail_lo + 50.0) * i as f64 / 20_000.0;
            let f = bgev_logpdf(x, &d).unwrap().exp();
            check!(f >= 0.0 && f.is_finite(), "xi={xi}: f({x}) = {f}");
        }
        let mid = d.quantile(0.5).unwrap();
        let mut breaks = vec![tail_lo, lo, mid, hi, tail_hi];
        breaks.sort_by(f64::total_cmp);
        let mass = integrate_pieces(|x| bgev_logpdf(x, &d).unwrap().exp(), &breaks, 1e-12);
        check!((mass - 1.0).abs() < 1e-6, "xi={xi}: mass {mass}");
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }
    Ok(format!(
        "500 points per tail incl. both blend bounds, max rel fd error {worst_rel:.1e}, |mass - 1| <= {worst_mass:.1e}"
    ))
}

fn unbounded_support() -> Outcome {
    let (mu, sigma, xi) = (0.0, 1.0, -0.22);
    let d = blended(mu, sigma, xi);
    check!(d.tail() == Tail::UpperBlend, "tail {:?}", d.tail());
    let bound = mu - sigma / xi;
    let f = bgev_logpdf(bound + 3.0 * sigma, &d).unwrap().exp();
    check!(f > 0.0, "density beyond bound is {f}");
    let q = bgev_quantile(1.0 - 1e-6, &d).unwrap();
    check!(q > bound, "q(1 - 1e-6) = {q} <= bound {bound}");
    let gev_q = gev_quantile(1.0 - 1e-6, d.gev()).unwrap();
    Ok(format!(
        "f(bound + 3 sigma) = {f:.3e} > 0; q(1 - 1e-6) = {q:.4} > bound {bound:.4} (GEV: {gev_q:.4})"
    ))
}

fn gumbel_limit() -> Outcome {
    let mut worst = 0.0f64;
    let g = GumbelParams::new(0.0, 1.0).unwrap();
    for xi in [1e-6, -1e-6] {
        let d = blended(0.0, 1.0, xi);
        check!(d.blend().is_some(), "xi={xi} should still blend");
        for i in 0..=2000 {
            let x = -5.0 + 25.0 * i as f64 / 2000.0;
            let e = (bgev_cdf(x, &d).unwrap() - gumbel_cdf(x, &g).unwrap()).abs();
            worst = worst.max(e);
        }
    }
    check!(worst < 1e-4, "sup-norm {worst:e}");
    Ok(format!("sup-norm on [-5, 20] at xi = +-1e-6: {worst:.2e}"))
}

/// Series drawn from the blended distribution with a covariate-driven location.
fn blended_series(template: &TrainingSet, mu0: f64, trend: f64, xi: f64, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_bar = template.covariate_mean();
    let maxima = template
        .covariate()
        .iter()
        .map(|t| {
            blended(mu0 + trend * (t - t_bar), 1.0, xi)
                .sample(1, &mut rng)
                .unwrap()[0]
        })
        .collect();
    TrainingSet::new(
        template.location_id(),
        template.years().to_vec(),
        maxima,
        template.covariate().to_vec(),
    )
    .unwrap()
}

fn mle_recovery() -> Outcome {
    let (xi_true, trend_true) = (-0.22, 1.4);
    let (p, n) = (
        BlendSpec::positive_default(),
        BlendSpec::negative(0.85, 0.01).unwrap(),
    );
    let opts = FitOptions::default();
    let gev_data = generate_synthetic(100, 84, trend_true, xi_true, 2024).unwrap();
    let bgev_data: Vec<TrainingSet> = gev_data
        .iter()
        .enumerate()
        .map(|(i, s)| blended_series(s, 305.0, trend_true, xi_true, 7000 + i as u64))
        .collect();
    let mut lines = Vec::new();
    for (model, data) in [(Model::Gev, &gev_data), (Model::Bgev, &bgev_data)] {
        let fits: Vec<_> = data
            .iter()
            .map(|s| fit_mle(s, model, &p, &n, &opts).unwrap())
            .collect();
        let xi_med = median(&fits.iter().map(|f| f.params.xi).collect::<Vec<_>>());
        let mt_med = median(&fits.iter().map(|f| f.params.mu_t).collect::<Vec<_>>());
        check!(
            (xi_med - xi_true).abs() <= 0.08,
            "{model}: median xi {xi_med}"
        );
        check!(
            (mt_med - trend_true).abs() <= 0.2,
            "{model}: median mu_t {mt_med}"
        );
        lines.push(format!("{model} median xi {xi_med:.4}, mu_t {mt_med:.4}"));
    }
    Ok(lines.join("; "))
}

fn forecast_shape() -> Outcome {
    let (p, n) = (
        BlendSpec::positive_default(),
        BlendSpec::negative(0.85, 0.01).unwrap(),
    );
    let opts = FitOptions::default();
    let data = generate_synthetic(100, 84, 1.4, -0.22, 31).unwrap();
    let single = rolling_forecast(&data[0], Model::Bgev, &p, &n, 30, &opts).unwrap();
    check!(
        single.records.len() == 54,
        "single series gave {} records",
        single.records.len()
    );
    let runs = rolling_forecast_all(&data, Model::Bgev, &p, &n, 30, &opts).unwrap();
    let total: usize = runs.iter().map(|r| r.records.len()).sum();
    let excluded: usize = runs.iter().map(|r| r.excluded.len()).sum();
    check!(
        total == 5400,
        "100 series gave {total} records ({excluded} excluded)"
    );
    Ok("54 records for one 84-year series, 5400 for 100 series".into())
}

fn infinite_nll() -> Outcome {
    let opts = FitOptions::default();
    let data = common::record_breaker_dataset(5, 60, 77, &opts);
    let (p, n) = (
        BlendSpec::positive_default(),
        BlendSpec::negative(0.85, 0.01).unwrap(),
    );
    let gev_runs = rolling_forecast_all(&data, Model::Gev, &p, &n, 30, &opts).unwrap();
    let n_inf: usize = gev_runs.iter().map(|r| r.n_infinite()).sum();
    check!(n_inf >= 1, "GEV produced no infinite NLL");
    let sweep = sweep_blend_quantiles(&data, &default_a_grid(), 0.01, &p, 30, &opts).unwrap();
    for row in &sweep {
        check!(
            row.total_nll.is_finite() && row.n_infinite == 0,
            "a={}: total {}",
            row.a,
            row.total_nll
        );
        check!(
            row.n_forecasts == 150,
            "a={}: {} forecasts",
            row.a,
            row.n_forecasts
        );
    }
    let worst = sweep
        .iter()
        .map(|r| r.total_nll)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(format!(
        "GEV: {n_inf} infinite records of 150; bGEV finite for all {} a values (max total {worst:.2})",
        sweep.len()
    ))
}

fn sweep_mechanics() -> Outcome {
    let opts = FitOptions::default();
    let p = BlendSpec::positive_default();
    let data = generate_synthetic(20, 84, 1.4, -0.22, 404).unwrap();
    let grid = default_a_grid();
    let once = sweep_blend_quantiles(&data, &grid, 0.01, &p, 30, &opts).unwrap();
    check!(
        once.len() == grid.len(),
        "{} rows for {} a values",
        once.len(),
        grid.len()
    );
    for (row, a) in once.iter().zip(&grid) {
        check!(
            row.a == *a && row.total_nll.is_finite(),
            "a={a}: total {}",
            row.total_nll
        );
    }
    let doubled: Vec<TrainingSet> = data.iter().chain(&data).cloned().collect();
    let twice = sweep_blend_quantiles(&doubled, &grid, 0.01, &p, 30, &opts).unwrap();
    let mut worst = 0.0f64;
    for (x, y) in once.iter().zip(&twice) {
        let e = (y.total_nll - 2.0 * x.total_nll).abs();
        check!(
            e < 1e-9,
            "a={}: doubled {} vs 2 x {}",
            x.a,
            y.total_nll,
            x.total_nll
        );
        worst = worst.max(e);
    }
    let best = once
        .iter()
        .min_by(|x, y| x.total_nll.total_cmp(&y.total_nll))
        .unwrap();
    let inside = (0.82..=0.90).contains(&best.a);
    Ok(format!(
        "{} finite totals; additivity error {worst:.1e}; optimum a = {} ({} [0.82, 0.90], not asserted)",
        once.len(),
        best.a,
        if inside { "inside" } else { "outside" }
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("GEV branch correctness", gev_branches),
        ("blend matching", blend_matching),
        ("region agreement", region_agreement),
        ("density validity", density_validity),
        ("unbounded support", unbounded_support),
        ("Gumbel limit", gumbel_limit),
        ("MLE recovery", mle_recovery),
        ("forecast protocol shape", forecast_shape),
        ("infinite-NLL phenomenon", infinite_nll),
        ("sweep mechanics", sweep_mechanics),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
