//! Derivative-free Nelder–Mead simplex minimization.
//!
//! Non-finite objective values (including NaN) are ranked as `+inf`, so the
//! objective may signal infeasible points by returning `f64::INFINITY`.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when `max f - min f` over the simplex falls below this...
    pub f_tol: f64,
    /// ...and every vertex lies within this distance (per coordinate) of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 5000,
            f_tol: 1e-8,
            x_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub n_evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0`, building the initial simplex by stepping
/// `steps[i]` along each coordinate axis.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len(), "one step per coordinate");
    let dim = x0.len();
    let mut n_evals = 0usize;
    let mut eval = |x: &[f64], n: &mut usize| -> f64 {
        *n += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(x0, &mut n_evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = eval(&x, &mut n_evals);
        simplex.push((x, fx));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if is_converged(&simplex, opts) {
            converged = true;
            break;
        }
        if n_evals >= opts.max_evals {
            break;
        }

        let worst = dim;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..worst].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr, &mut n_evals);
        let best_f = simplex[0].1;
        let second_worst_f = simplex[worst - 1].1;

        if fr < best_f {
            let xe = along(EXPAND);
            let fe = eval(&xe, &mut n_evals);
            simplex[worst] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[worst] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[worst].1 {
            let xc = along(CONTRACT * REFLECT);
            let fc = eval(&xc, &mut n_evals);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc, &mut n_evals);
            (xc, fc)
        };
        if fc < fr.min(simplex[worst].1) {
            simplex[worst] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (xj, bj) in vertex.0.iter_mut().zip(&best) {
                *xj = bj + SHRINK * (*xj - bj);
            }
            vertex.1 = eval(&vertex.0, &mut n_evals);
        }
    }

    let (x, fx) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        fx,
        n_evals,
        converged,
    }
}

fn is_converged(sorted: &[(Vec<f64>, f64)], opts: &NelderMeadOptions) -> bool {
    let best = &sorted[0];
    let worst_f = sorted[sorted.len() - 1].1;
    if !best.1.is_finite() || !worst_f.is_finite() {
        return false;
    }
    if worst_f - best.1 >= opts.f_tol {
        return false;
    }
    sorted[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(&best.0)
            .all(|(xi, bi)| (xi - bi).abs() < opts.x_tol)
    })
}
