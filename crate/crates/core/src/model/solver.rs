//! Safeguarded Newton minimization of a one-dimensional profiled objective.

use super::FitOptions;

/// A profiled least-squares objective in a single nonlinear parameter.
pub(crate) trait Profile {
    /// Infimum of the feasible region: the objective is defined for `eta > pole`.
    fn pole(&self) -> f64;
    fn sse(&self, eta: f64) -> f64;
    /// `(sse, gradient, hessian)`.
    fn derivatives(&self, eta: f64) -> (f64, f64, f64);
    /// Magnitude of the objective, used to scale the round-off floor.
    fn scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Solution {
    pub eta: f64,
    pub gradient: f64,
    pub iterations: usize,
    pub converged: bool,
}

const GOLDEN: f64 = 0.381_966_011_250_105;

/// Coarse log-spaced scan of the feasible interval followed by safeguarded
/// Newton iterations inside the bracket around the best grid point.
///
/// The bracket `[a, b]` always satisfies `sse(x) <= sse(a), sse(b)` for the
/// current iterate `x`, so it keeps a local minimum inside. Newton steps
/// that leave the bracket or fail to decrease the objective are replaced by
/// golden-section steps on the downhill side.
pub(crate) fn minimize<P: Profile>(profile: &P, start: f64, n: usize, opts: &FitOptions) -> Solution {
    let pole = profile.pole();
    let lo = pole + opts.boundary_margin;
    let hi = opts.eta_upper.max(lo + 1.0);
    let grad_tol = opts.grad_tol_per_sample * n as f64;
    let noise = 1e-13 * profile.scale().max(f64::MIN_POSITIVE);

    // Grid in log(eta - pole): uniform in w = log(1 + 2 eta) for the single-SNP case.
    let points = opts.grid_points.max(3);
    let (ulo, uhi) = ((lo - pole).ln(), (hi - pole).ln());
    let grid: Vec<f64> = (0..points)
        .map(|k| {
            let u = ulo + (uhi - ulo) * k as f64 / (points - 1) as f64;
            (pole + u.exp()).clamp(lo, hi)
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&e| profile.sse(e)).collect();
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    let mut x = grid[best];
    let mut fx = values[best];
    let mut a = if best == 0 { lo } else { grid[best - 1] };
    let mut b = if best + 1 == points { hi } else { grid[best + 1] };

    let start = start.clamp(lo, hi);
    if start.is_finite() {
        let fs = profile.sse(start);
        if fs < fx {
            let j = grid.partition_point(|&g| g <= start);
            a = if j == 0 { lo } else { grid[j - 1] };
            b = if j >= points { hi } else { grid[j] };
            x = start;
            fx = fs;
        }
    }

    let mut last_rel_change = 0.0;
    let mut gradient = f64::NAN;
    let mut iterations = 0;
    for iteration in 1..=opts.max_iter {
        iterations = iteration;
        let (_, g, h) = profile.derivatives(x);
        gradient = g;
        if g.abs() < grad_tol && last_rel_change < opts.rel_sse_tol {
            return Solution {
                eta: x,
                gradient: g,
                iterations: iteration - 1,
                converged: true,
            };
        }
        if b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }

        let mut moved = false;
        if h > 0.0 {
            let xn = x - g / h;
            if xn > a && xn < b && xn != x {
                let fnew = profile.sse(xn);
                if fnew <= fx + noise {
                    if xn > x {
                        a = x;
                    } else {
                        b = x;
                    }
                    last_rel_change = (fx - fnew).abs() / fx.abs().max(noise);
                    x = xn;
                    fx = fnew;
                    moved = true;
                } else if xn > x {
                    b = xn;
                } else {
                    a = xn;
                }
            }
        }
        if moved {
            continue;
        }

        // Golden-section probe on the downhill side.
        let xn = if g > 0.0 {
            x - GOLDEN * (x - a)
        } else {
            x + GOLDEN * (b - x)
        };
        if xn == x {
            break;
        }
        let fnew = profile.sse(xn);
        if fnew < fx {
            if xn < x {
                b = x;
            } else {
                a = x;
            }
            last_rel_change = (fx - fnew).abs() / fx.abs().max(noise);
            x = xn;
            fx = fnew;
        } else if xn < x {
            a = xn;
        } else {
            b = xn;
        }
    }
    let (_, g, _) = profile.derivatives(x);
    if g.is_finite() {
        gradient = g;
    }
    Solution {
        eta: x,
        gradient,
        iterations,
        converged: gradient.abs() < grad_tol,
    }
}
