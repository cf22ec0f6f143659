//! Damped (Levenberg–Marquardt) nonlinear least squares with a central
//! difference Jacobian and simple box bounds.
//!
//! The normal equations are solved in Jacobi-scaled form, so parameters with
//! wildly different magnitudes (hertz next to seconds) do not wreck the
//! conditioning. Bounds are enforced by projecting every trial point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// A residual vector `r(p)`; the solver minimizes `Σ r_i²`.
pub trait Problem: Sync {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);

    /// Characteristic magnitude of each parameter. Finite-difference steps
    /// are taken relative to `max(|p_j|, scale_j)`.
    fn scales(&self) -> Vec<f64> {
        vec![1.0; self.n_params()]
    }
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn project(&self, p: &mut [f64]) {
        for ((x, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub max_iterations: usize,
    /// Relative cost-change tolerance (actual and predicted).
    pub ftol: f64,
    /// Scaled step-norm tolerance.
    pub xtol: f64,
    pub initial_lambda: f64,
    /// Relative finite-difference step.
    pub diff_step: f64,
    /// Execution policy for Jacobian columns on large problems.
    pub execution: Execution,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iterations: 200,
            ftol: 1e-10,
            xtol: 1e-12,
            initial_lambda: 1e-3,
            diff_step: 1e-6,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Vec<f64>,
    /// One-sigma uncertainties, residual-variance scaled. Infinite for
    /// parameters the data does not constrain.
    pub errors: Vec<f64>,
    /// Covariance matrix (row-major, `n × n`); entries touching an
    /// unconstrained direction are infinite.
    pub covariance: Vec<f64>,
    pub cost: f64,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub n_residuals: usize,
}

impl Outcome {
    pub fn covariance_at(&self, i: usize, j: usize) -> f64 {
        let n = self.params.len();
        self.covariance[i * n + j]
    }

    pub fn residual_rms(&self) -> f64 {
        (self.cost / self.n_residuals.max(1) as f64).sqrt()
    }
}

fn cost_of<P: Problem>(problem: &P, p: &[f64], buf: &mut [f64]) -> f64 {
    problem.residuals(p, buf);
    let c: f64 = buf.iter().map(|r| r * r).sum();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Central-difference Jacobian, column-major as an `m × n` matrix.
pub fn jacobian<P: Problem>(
    problem: &P,
    p: &[f64],
    bounds: &Bounds,
    diff_step: f64,
    exec: Execution,
) -> DMatrix<f64> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    let scales = problem.scales();
    let exec = if m * n >= 20_000 {
        exec
    } else {
        Execution::Sequential
    };
    let columns: Vec<Vec<f64>> = par::map_range(exec, n, |j| {
        let h = diff_step * p[j].abs().max(scales[j]);
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        hi[j] = (p[j] + h).min(bounds.upper[j]);
        lo[j] = (p[j] - h).max(bounds.lower[j]);
        let span = hi[j] - lo[j];
        let mut r_hi = vec![0.0; m];
        let mut r_lo = vec![0.0; m];
        problem.residuals(&hi, &mut r_hi);
        problem.residuals(&lo, &mut r_lo);
        if span > 0.0 {
            r_hi.iter()
                .zip(&r_lo)
                .map(|(a, b)| (a - b) / span)
                .collect()
        } else {
            vec![0.0; m]
        }
    });
    let mut jac = DMatrix::zeros(m, n);
    for (j, col) in columns.iter().enumerate() {
        jac.column_mut(j).copy_from_slice(col);
    }
    jac
}

/// Covariance `s²·(JᵀJ)⁻¹` computed through an SVD of the Jacobi-scaled
/// normal matrix. Directions with negligible curvature get infinite variance.
pub fn covariance(jac: &DMatrix<f64>, cost: f64) -> Vec<f64> {
    let (m, n) = jac.shape();
    let a = jac.transpose() * jac;
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = cost / dof;
    let mut cov = vec![0.0; n * n];
    let mut scaled = a.clone();
    for i in 0..n {
        for j in 0..n {
            let dij = d[i] * d[j];
            scaled[(i, j)] = if dij > 0.0 { a[(i, j)] / dij } else { 0.0 };
        }
    }
    let svd = scaled.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * 1e-13;
    let mut unconstrained = vec![false; n];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            for i in 0..n {
                if v_t[(k, i)].abs() > 1e-6 {
                    unconstrained[i] = true;
                }
            }
        }
    }
    for i in 0..n {
        if d[i] == 0.0 {
            unconstrained[i] = true;
        }
    }
    for i in 0..n {
        for j in 0..n {
            if unconstrained[i] || unconstrained[j] {
                cov[i * n + j] = if i == j { f64::INFINITY } else { f64::NAN };
                continue;
            }
            let mut acc = 0.0;
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if s > cutoff {
                    acc += v_t[(k, i)] * u[(j, k)] / s;
                }
            }
            cov[i * n + j] = s2 * acc / (d[i] * d[j]);
        }
    }
    cov
}

/// Minimizes `Σ r_i(p)²` starting from `x0`.
pub fn minimize<P: Problem>(
    problem: &P,
    x0: &[f64],
    bounds: &Bounds,
    opts: &Options,
) -> Result<Outcome> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    assert_eq!(x0.len(), n, "initial guess has wrong length");
    if m < n {
        return Err(Error::invalid(
            "least-squares problem",
            format!("{m} residuals for {n} parameters"),
        ));
    }
    let scales = problem.scales();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut buf = vec![0.0; m];
    let mut cost = cost_of(problem, &x, &mut buf);
    if !cost.is_finite() {
        return Err(Error::invalid(
            "initial guess",
            "model is not finite at the starting point",
        ));
    }
    let mut history = vec![cost];
    let mut lambda = opts.initial_lambda;
    let mut iterations = 0;
    let mut converged = false;
    let tiny_cost = 1e-300_f64.max(f64::MIN_POSITIVE);

    while iterations < opts.max_iterations {
        iterations += 1;
        if cost <= tiny_cost {
            converged = true;
            break;
        }
        let jac = jacobian(problem, &x, bounds, opts.diff_step, opts.execution);
        problem.residuals(&x, &mut buf);
        let r = DVector::from_column_slice(&buf);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let v = a[(i, i)].sqrt();
                if v > 0.0 {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        // Parameters sitting on a bound with the descent direction pointing
        // outward are frozen for this iteration.
        let frozen: Vec<bool> = (0..n)
            .map(|i| {
                (x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0)
            })
            .collect();
        let mut scaled = a.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] = if frozen[i] || frozen[j] {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    scaled[(i, j)] / (d[i] * d[j])
                };
            }
        }
        let scaled_g =
            DVector::from_iterator(n, (0..n).map(|i| if frozen[i] { 0.0 } else { g[i] / d[i] }));

        let mut accepted = false;
        let mut stalled = false;
        while !accepted {
            let mut mat = scaled.clone();
            for i in 0..n {
                mat[(i, i)] += lambda;
            }
            let y = match mat.cholesky() {
                Some(ch) => ch.solve(&(-&scaled_g)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e20 {
                        stalled = true;
                        break;
                    }
                    continue;
                }
            };
            let step: Vec<f64> = (0..n).map(|i| y[i] / d[i]).collect();
            let mut trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            bounds.project(&mut trial);
            let actual_step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let trial_cost = cost_of(problem, &trial, &mut buf);
            if trial_cost <= cost {
                let dv = DVector::from_column_slice(&actual_step);
                let jd = &jac * &dv;
                let predicted = -(2.0 * g.dot(&dv) + jd.dot(&jd));
                let rel_actual = (cost - trial_cost) / cost;
                let rel_pred = (predicted / cost).abs();
                let step_norm = actual_step
                    .iter()
                    .zip(&x)
                    .zip(&scales)
                    .map(|((s, xi), sc)| (s / (xi.abs() + sc)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                x = trial;
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if (rel_actual < opts.ftol && rel_pred < opts.ftol)
                    || step_norm < opts.xtol
                    || cost <= tiny_cost
                {
                    converged = true;
                }
            } else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    stalled = true;
                    break;
                }
            }
        }
        if stalled {
            // No descent direction left at machine precision: stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    let jac = jacobian(problem, &x, bounds, opts.diff_step, opts.execution);
    let cov = covariance(&jac, cost);
    let errors = (0..n).map(|i| cov[i * n + i].sqrt()).collect();
    Ok(Outcome {
        params: x,
        errors,
        covariance: cov,
        cost,
        cost_history: history,
        iterations,
        n_residuals: m,
    })
}
