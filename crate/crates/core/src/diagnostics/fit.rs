//! Nonlinear least-squares fit of `f(x) = C + A exp(-B x)`.
//!
//! Levenberg-Marquardt with the analytic Jacobian, run on internally
//! standardized data (`x` mapped to `[0, 1]`, `y` centered and scaled) and
//! mapped back afterwards.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// Asymptote.
    pub c: f64,
    /// Amplitude at `x = 0`.
    pub a: f64,
    /// Decay rate per unit of `x`.
    pub b: f64,
    /// Residual sum of squares in the original units.
    pub rss: f64,
    /// Optimizer reached a stationary point.
    pub converged: bool,
    /// False when the series carries no information about `B`
    /// (constant data, or a vanishing amplitude).
    pub b_identifiable: bool,
    pub iterations: usize,
}

impl ExponentialFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.c + self.a * (-self.b * x).exp()
    }
}

const MAX_ITERATIONS: usize = 1000;
const GTOL: f64 = 1e-12;
const XTOL: f64 = 1e-13;

struct Problem {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl Problem {
    fn cost(&self, p: &Vector3<f64>) -> f64 {
        self.t
            .iter()
            .zip(&self.y)
            .map(|(&t, &y)| {
                let r = y - p[0] - p[1] * (-p[2] * t).exp();
                r * r
            })
            .sum()
    }

    /// `(J^T J, J^T r, cost)` at `p`.
    fn normal_equations(&self, p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>, f64) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        let mut cost = 0.0;
        for (&t, &y) in self.t.iter().zip(&self.y) {
            let e = (-p[2] * t).exp();
            let r = y - p[0] - p[1] * e;
            let row = Vector3::new(1.0, e, -p[1] * t * e);
            jtj += row * row.transpose();
            jtr += row * r;
            cost += r * r;
        }
        (jtj, jtr, cost)
    }
}

fn initial_guess(t: &[f64], y: &[f64]) -> Vector3<f64> {
    let m = t.len();
    let tail = (m / 10).max(1);
    let c0 = y[m - tail..].iter().sum::<f64>() / tail as f64;
    let a0 = y[0] - c0;
    let sign = if a0 >= 0.0 { 1.0 } else { -1.0 };

    // log-linear regression of log|y - C0| over the first half
    let (mut st, mut sl, mut stt, mut stl, mut k) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y).take((m / 2).max(2)) {
        let v = sign * (yi - c0);
        if v > 0.0 {
            let l = v.ln();
            st += ti;
            sl += l;
            stt += ti * ti;
            stl += ti * l;
            k += 1.0;
        }
    }
    let denom = k * stt - st * st;
    let slope = if k >= 2.0 && denom > 0.0 {
        (k * stl - st * sl) / denom
    } else {
        f64::NAN
    };
    let b0 = if slope.is_finite() && slope < 0.0 {
        (-slope).clamp(1e-2, 1e3)
    } else {
        3.0
    };
    Vector3::new(c0, a0, b0)
}

/// Best `(C, A)` for each `B` on a log grid, solved as a linear least-squares
/// problem. Catches decays that finish early in a long, flat, noisy series,
/// where the log-linear guess sees mostly plateau noise.
fn profile_guess(problem: &Problem) -> Option<Vector3<f64>> {
    let m = problem.t.len() as f64;
    let sy: f64 = problem.y.iter().sum();
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for k in 0..=120 {
        let b = 10f64.powf(-1.0 + 5.0 * k as f64 / 120.0);
        let (mut se, mut see, mut sey) = (0.0, 0.0, 0.0);
        for (&t, &y) in problem.t.iter().zip(&problem.y) {
            let e = (-b * t).exp();
            se += e;
            see += e * e;
            sey += e * y;
        }
        let det = m * see - se * se;
        if det <= 1e-12 * m * see {
            continue;
        }
        let a = (m * sey - se * sy) / det;
        let c = (sy - a * se) / m;
        let p = Vector3::new(c, a, b);
        let cost = problem.cost(&p);
        if best.is_none_or(|(c0, _)| cost < c0) {
            best = Some((cost, p));
        }
    }
    best.map(|(_, p)| p)
}

/// Fits `C + A exp(-B x)` by least squares. Needs at least four points with
/// strictly increasing `xs`.
///
/// Non-convergence is reported through [`ExponentialFit::converged`], not as
/// an error. A constant series yields `C = mean`, `A = 0` and
/// `b_identifiable = false`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit, DiagnosticsError> {
    if xs.len() != ys.len() {
        return Err(DiagnosticsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 4 {
        return Err(DiagnosticsError::TooFewPoints { min: 4, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DiagnosticsError::NotIncreasing);
    }

    let m = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / m;
    let spread = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / m).sqrt();
    if spread <= 1e-14 * mean.abs().max(f64::MIN_POSITIVE) {
        return Ok(ExponentialFit {
            c: mean,
            a: 0.0,
            b: 0.0,
            rss: ys.iter().map(|y| (y - mean).powi(2)).sum(),
            converged: true,
            b_identifiable: false,
            iterations: 0,
        });
    }

    let x0 = xs[0];
    let span = xs[xs.len() - 1] - x0;
    let problem = Problem {
        t: xs.iter().map(|x| (x - x0) / span).collect(),
        y: ys.iter().map(|y| (y - mean) / spread).collect(),
    };

    let mut p = initial_guess(&problem.t, &problem.y);
    if let Some(q) = profile_guess(&problem) {
        if problem.cost(&q) < problem.cost(&p) {
            p = q;
        }
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let (mut jtj, mut jtr, mut cost) = problem.normal_equations(&p);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // gradient test: cosine between the residual and each Jacobian column
        let rnorm = cost.sqrt();
        let gmax = (0..3)
            .map(|i| {
                let col = jtj[(i, i)].sqrt();
                if col > 0.0 && rnorm > 0.0 {
                    jtr[i].abs() / (col * rnorm)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if gmax <= GTOL || cost <= 1e-26 * m {
            converged = true;
            break;
        }

        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
            continue;
        };
        let trial = p + step;
        let trial_cost = if trial[2] > 0.0 && trial.iter().all(|v| v.is_finite()) {
            problem.cost(&trial)
        } else {
            f64::INFINITY
        };
        if trial_cost < cost {
            let small_step = (0..3).all(|i| step[i].abs() <= XTOL * (p[i].abs() + XTOL));
            p = trial;
            (jtj, jtr, cost) = problem.normal_equations(&p);
            lambda = (lambda / 10.0).max(1e-15);
            if small_step {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left; stationary to working precision
                converged = gmax <= 1e-6;
                break;
            }
        }
    }

    // back to original units
    let b = p[2] / span;
    let a = spread * p[1] * (b * x0).exp();
    let c = mean + spread * p[0];
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - c - a * (-b * x).exp()).powi(2))
        .sum();
    Ok(ExponentialFit {
        c,
        a,
        b,
        rss,
        converged,
        b_identifiable: p[1].abs() > 1e-10 && b.is_finite() && b > 0.0,
        iterations,
    })
}

/// Smallest `x` with `|A| exp(-B x) <= rel_tol * |C|`, i.e.
/// `ln(|A| / (rel_tol |C|)) / B`, or 0 if the bound already holds at `x = 0`.
pub fn iterations_to_convergence(fit: &ExponentialFit, rel_tol: f64) -> Result<f64, DiagnosticsError> {
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(DiagnosticsError::Domain(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    if fit.c == 0.0 {
        return Err(DiagnosticsError::ZeroAsymptote);
    }
    let bound = rel_tol * fit.c.abs();
    if fit.a.abs() <= bound {
        return Ok(0.0);
    }
    if !fit.converged {
        return Err(DiagnosticsError::NotConverged);
    }
    if !fit.b_identifiable || fit.b <= 0.0 {
        return Err(DiagnosticsError::Unidentifiable);
    }
    Ok((fit.a.abs() / bound).ln() / fit.b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, a: f64, b: f64, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| c + a * (-b * x).exp()).collect()
    }

    fn grid(m: usize, max: f64) -> Vec<f64> {
        (0..m).map(|k| max * k as f64 / (m - 1) as f64).collect()
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let xs = grid(500, 10_000.0);
        let ys = synthetic(3.0, 2.0, 0.001, &xs);
        let fit = fit_exponential(&xs, &ys).unwrap();
        assert!(fit.converged);
        assert!((fit.c - 3.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.a - 2.0).abs() < 1e-9, "{fit:?}");
        assert!(((fit.b - 0.001) / 0.001).abs() < 1e-9);
    }

    #[test]
    fn recovers_rising_series() {
        let xs = grid(300, 50.0);
        let ys = synthetic(5.0, -1.5, 0.2, &xs);
        let fit = fit_exponential(&xs, &ys).unwrap();
        assert!(fit.converged);
        assert!((fit.c - 5.0).abs() < 1e-9);
        assert!((fit.a + 1.5).abs() < 1e-9);
        assert!((fit.b - 0.2).abs() < 1e-9);
    }

    #[test]
    fn offset_x_origin() {
        let xs: Vec<f64> = grid(200, 100.0).into_iter().map(|x| x + 20.0).collect();
        let ys = synthetic(1.0, 4.0, 0.05, &xs);
        let fit = fit_exponential(&xs, &ys).unwrap();
        assert!((fit.a - 4.0).abs() < 1e-8, "{fit:?}");
        assert!((fit.b - 0.05).abs() < 1e-10);
    }

    #[test]
    fn constant_series_is_flagged() {
        let xs = grid(50, 10.0);
        let fit = fit_exponential(&xs, &[5.0; 50]).unwrap();
        assert_eq!(fit.c, 5.0);
        assert_eq!(fit.a, 0.0);
        assert!(!fit.b_identifiable);
        assert_eq!(iterations_to_convergence(&fit, 0.001).unwrap(), 0.0);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            fit_exponential(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(DiagnosticsError::TooFewPoints { .. })
        ));
        assert!(matches!(
            fit_exponential(&[0.0, 1.0, 1.0, 2.0], &[1.0; 4]),
            Err(DiagnosticsError::NotIncreasing)
        ));
        assert!(matches!(
            fit_exponential(&[0.0, 1.0, 2.0, 3.0], &[1.0; 3]),
            Err(DiagnosticsError::LengthMismatch(4, 3))
        ));
        assert!(matches!(
            fit_exponential(&[0.0, 1.0, 2.0, 3.0], &[1.0, f64::NAN, 0.0, 0.0]),
            Err(DiagnosticsError::NonFinite)
        ));
    }

    #[test]
    fn convergence_point_closed_form() {
        let fit = ExponentialFit {
            c: 3.0,
            a: 2.0,
            b: 0.001,
            rss: 0.0,
            converged: true,
            b_identifiable: true,
            iterations: 1,
        };
        let k = iterations_to_convergence(&fit, 0.001).unwrap();
        assert!((k - (2.0f64 / 0.003).ln() / 0.001).abs() < 1e-9);
        assert!((k - 6502.3).abs() < 0.05);

        let zero = ExponentialFit { c: 0.0, ..fit };
        assert!(matches!(
            iterations_to_convergence(&zero, 0.001),
            Err(DiagnosticsError::ZeroAsymptote)
        ));
        let flat = ExponentialFit { a: 0.0, ..fit };
        assert_eq!(iterations_to_convergence(&flat, 0.001).unwrap(), 0.0);
        let bad = ExponentialFit { converged: false, ..fit };
        assert!(iterations_to_convergence(&bad, 0.001).is_err());
        assert!(iterations_to_convergence(&fit, 0.0).is_err());
    }
}
