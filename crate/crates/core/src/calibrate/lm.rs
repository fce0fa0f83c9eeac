// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Box-constrained Levenberg-Marquardt for small dense least-squares problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which the fit is considered converged.
    pub ftol: f64,
    /// Relative step size below which the fit is considered converged.
    pub xtol: f64,
    /// Infinity norm of the gradient below which the fit is converged.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, ftol: 1e-15, xtol: 1e-13, gtol: 1e-15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A least-squares problem: residuals and their Jacobian.
pub trait LeastSquares {
    fn n_params(&self) -> usize;
    fn residuals(&self, p: &[f64]) -> Vec<f64>;
    /// Row `i` holds the partial derivatives of residual `i`.
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64>;
}

fn clamp(p: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((x, lo), hi) in p.iter_mut().zip(lower).zip(upper) {
        *x = x.clamp(*lo, *hi);
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Minimises the squared residual norm starting at `init`, projecting every
/// trial step onto `[lower, upper]`.
///
/// Returns `Err` with the best point found when `max_iterations` is reached
/// without meeting any convergence test.
pub fn levenberg_marquardt<P: LeastSquares>(
    problem: &P,
    init: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: LmOptions,
) -> Result<LmReport, LmReport> {
    let n = problem.n_params();
    assert!(init.len() == n && lower.len() == n && upper.len() == n, "parameter length mismatch");
    let mut p = init.to_vec();
    clamp(&mut p, lower, upper);
    let mut r = problem.residuals(&p);
    let mut cost = sum_sq(&r);
    let mut mu: Option<f64> = None;

    for iter in 0..opts.max_iterations {
        if cost == 0.0 {
            return Ok(LmReport { params: p, cost, iterations: iter, converged: true });
        }
        let j = problem.jacobian(&p);
        let jt = j.transpose();
        let a = &jt * &j;
        let grad = &jt * DVector::from_column_slice(&r);
        if grad.amax() <= opts.gtol {
            return Ok(LmReport { params: p, cost, iterations: iter, converged: true });
        }
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].max(1e-12)).collect();
        let mut damping = mu.unwrap_or_else(|| 1e-3 * diag.iter().cloned().fold(0.0, f64::max));

        let mut improved = false;
        while damping < 1e16 {
            let mut m = a.clone();
            for i in 0..n {
                m[(i, i)] += damping * diag[i];
            }
            let Some(chol) = m.cholesky() else {
                damping *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            clamp(&mut trial, lower, upper);
            let r_trial = problem.residuals(&trial);
            let c_trial = sum_sq(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let moved: f64 = p.iter().zip(&trial).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let scale: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                let small_step = moved <= opts.xtol * (scale + opts.xtol);
                let small_drop = cost - c_trial <= opts.ftol * cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                damping = (damping / 3.0).max(1e-15);
                improved = true;
                if small_step || small_drop {
                    return Ok(LmReport { params: p, cost, iterations: iter + 1, converged: true });
                }
                break;
            }
            damping *= 4.0;
        }
        mu = Some(damping);
        if !improved {
            // no descent direction left within the box
            return Ok(LmReport { params: p, cost, iterations: iter + 1, converged: true });
        }
    }
    Err(LmReport { params: p, cost, iterations: opts.max_iterations, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp {
        xs: Vec<f64>,
        ys: Vec<f64>,
    }

    impl LeastSquares for Exp {
        fn n_params(&self) -> usize {
            2
        }
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            self.xs.iter().zip(&self.ys).map(|(x, y)| p[0] * (p[1] * x).exp() - y).collect()
        }
        fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
            DMatrix::from_fn(self.xs.len(), 2, |i, k| {
                let x = self.xs[i];
                if k == 0 {
                    (p[1] * x).exp()
                } else {
                    p[0] * x * (p[1] * x).exp()
                }
            })
        }
    }

    #[test]
    fn recovers_exponential() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys = xs.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let prob = Exp { xs, ys };
        let rep = levenberg_marquardt(&prob, &[1.0, 0.0], &[-10.0; 2], &[10.0; 2], LmOptions::default())
            .unwrap();
        assert!((rep.params[0] - 2.5).abs() < 1e-9);
        assert!((rep.params[1] + 1.3).abs() < 1e-9);
    }

    #[test]
    fn respects_bounds() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        let ys = xs.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let prob = Exp { xs, ys };
        let rep = levenberg_marquardt(&prob, &[1.0, 0.0], &[0.0, -1.0], &[2.0, 1.0], LmOptions::default())
            .unwrap();
        assert!(rep.params[0] <= 2.0 && rep.params[1] >= -1.0);
    }

    #[test]
    fn reports_best_so_far_on_iteration_cap() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        let ys = xs.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let prob = Exp { xs, ys };
        let opts = LmOptions { max_iterations: 1, ..Default::default() };
        let err = levenberg_marquardt(&prob, &[1.0, 0.0], &[-10.0; 2], &[10.0; 2], opts).unwrap_err();
        assert!(!err.converged);
        assert!(err.cost < prob.residuals(&[1.0, 0.0]).iter().map(|r| r * r).sum::<f64>());
    }
}
