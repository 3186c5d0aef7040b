//! Full-model training loops: coordinate descent on the quadratic or
//! cubic upper-bound model, plus the three Newton-type baselines they are
//! compared against, with per-iteration loss tracing.
//!
//! The surrogate methods update one coordinate at a time from the exact
//! per-coordinate derivatives and never increase the penalized objective.
//! The baselines update every coordinate at once from a (full or diagonal)
//! sample-space Hessian with no line search, which is exactly the regime
//! where their loss can blow up; divergence is reported as a flag on the
//! result, never as a panic, so benchmark grids can record it.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::cph::{
    compute_eta, coordinate_partials, eta_gradient, event_inverse_square_sums,
    event_inverse_sums, lipschitz_constants, loss, update_eta, DerivOrder, LinearPredictor,
};
use crate::data::{CoefficientVector, SortedSurvivalDataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::surrogate::{
    cubic_step_l1, elasticnet_absorb, quad_step_l1, CubicStepInput, QuadStepInput,
};

/// Training method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// coordinate descent on the quadratic upper-bound model
    QuadCd,
    /// coordinate descent on the cubic upper-bound model
    CubicCd,
    /// full-Hessian Newton steps, no line search; l2 penalty only
    ExactNewton,
    /// Newton steps from the diagonal of the sample-space Hessian
    QuasiNewton,
    /// Newton steps from the diagonal upper bound grad + events
    ProxNewton,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::QuadCd,
        Method::CubicCd,
        Method::ExactNewton,
        Method::QuasiNewton,
        Method::ProxNewton,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::QuadCd => "quad_cd",
            Method::CubicCd => "cubic_cd",
            Method::ExactNewton => "exact_newton",
            Method::QuasiNewton => "quasi_newton",
            Method::ProxNewton => "prox_newton",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad_cd" => Ok(Method::QuadCd),
            "cubic_cd" => Ok(Method::CubicCd),
            "exact_newton" => Ok(Method::ExactNewton),
            "quasi_newton" => Ok(Method::QuasiNewton),
            "prox_newton" => Ok(Method::ProxNewton),
            other => Err(Error::Validation(format!(
                "unknown method '{other}' (expected quad_cd, cubic_cd, exact_newton, quasi_newton, or prox_newton)"
            ))),
        }
    }
}

/// Training configuration shared by all methods.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub method: Method,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_sweeps: usize,
    /// dual stopping tolerance; see [`check_convergence`]
    pub tol: f64,
    /// verify after every single coordinate update that the penalized
    /// objective did not increase (surrogate methods only; adds one O(n)
    /// loss evaluation per update)
    pub assert_monotone: bool,
    /// record a (sweep, loss, objective, elapsed) point per sweep
    pub trace: bool,
}

impl FitConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            lambda1: 0.0,
            lambda2: 0.0,
            max_sweeps: 1000,
            tol: 1e-7,
            assert_monotone: false,
            trace: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Validation("penalty weights must be nonnegative".into()));
        }
        if self.method == Method::ExactNewton && self.lambda1 > 0.0 {
            return Err(Error::Validation(
                "exact_newton cannot handle an l1 penalty; use quad_cd, cubic_cd, quasi_newton, or prox_newton".into(),
            ));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Validation("max_sweeps must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Validation("tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One point of the optimization trace. `loss` is the bare partial
/// likelihood loss; `objective` adds the penalties.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub sweep: usize,
    pub loss: f64,
    pub objective: f64,
    pub elapsed_s: f64,
}

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: CoefficientVector,
    /// penalized objective at the returned coefficients
    pub final_loss: f64,
    /// bare loss at the returned coefficients
    pub final_cph_loss: f64,
    pub loss_trace: Vec<TracePoint>,
    pub sweeps_used: usize,
    pub converged: bool,
    /// the loss became non-finite (a baseline blow-up); the returned beta
    /// is the last finite iterate
    pub diverged: bool,
}

/// Dual stopping rule: converged when the largest coordinate change of
/// the last sweep AND the relative objective decrease are both within
/// `tol`.
pub fn check_convergence(beta_change_inf_norm: f64, rel_loss_decrease: f64, tol: f64) -> bool {
    beta_change_inf_norm <= tol && rel_loss_decrease <= tol
}

fn penalty(beta: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    lambda1 * l1 + lambda2 * l2
}

fn objective(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    beta: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    loss(dataset, eta) + penalty(beta, lambda1, lambda2)
}

/// Train one model. Coefficients start at zero for every method.
pub fn fit(dataset: &SortedSurvivalDataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    match config.method {
        Method::QuadCd | Method::CubicCd => fit_coordinate_descent(dataset, config),
        Method::ExactNewton => fit_exact_newton(dataset, config),
        Method::QuasiNewton | Method::ProxNewton => fit_diagonal_newton(dataset, config),
    }
}

fn fit_coordinate_descent(
    dataset: &SortedSurvivalDataset,
    config: &FitConfig,
) -> Result<FitResult> {
    let p = dataset.p();
    let cubic = config.method == Method::CubicCd;
    let (lambda1, lambda2) = (config.lambda1, config.lambda2);
    let table = lipschitz_constants(dataset);

    let mut beta = vec![0.0; p];
    let mut eta = compute_eta(dataset, &beta)?;
    let mut current_loss = loss(dataset, &eta);
    let mut current_objective = current_loss; // zero beta carries no penalty
    let mut monotone_watermark = current_objective;

    let start = Instant::now();
    let mut trace = Vec::new();
    if config.trace {
        trace.push(TracePoint { sweep: 0, loss: current_loss, objective: current_objective, elapsed_s: 0.0 });
    }

    let mut converged = false;
    let mut sweeps_used = 0;
    for sweep in 1..=config.max_sweeps {
        sweeps_used = sweep;
        let mut max_change = 0.0f64;
        let prev_objective = current_objective;

        for l in 0..p {
            // a feature that is constant inside every event's risk set
            // cannot move the loss; its l2 bound (and gradient) are zero
            if table.l2[l] == 0.0 {
                continue;
            }
            let step = if cubic {
                let der = coordinate_partials(dataset, &eta, l, DerivOrder::Second);
                let (grad, hess) = if lambda2 > 0.0 {
                    elasticnet_absorb(der.d1, der.d2.unwrap().max(0.0), lambda2, beta[l])
                } else {
                    (der.d1, der.d2.unwrap().max(0.0))
                };
                cubic_step_l1(&CubicStepInput {
                    grad,
                    hess,
                    third_bound: table.l3[l],
                    current: beta[l],
                    lambda1,
                })?
            } else {
                let der = coordinate_partials(dataset, &eta, l, DerivOrder::First);
                let (grad, curvature) = if lambda2 > 0.0 {
                    elasticnet_absorb(der.d1, table.l2[l], lambda2, beta[l])
                } else {
                    (der.d1, table.l2[l])
                };
                quad_step_l1(&QuadStepInput { grad, curvature, current: beta[l], lambda1 })?
            };
            if step != 0.0 {
                update_eta(&mut eta, dataset, l, step)?;
                beta[l] += step;
                max_change = max_change.max(step.abs());
            }
            if config.assert_monotone {
                let obj = objective(dataset, &eta, &beta, lambda1, lambda2);
                if obj > monotone_watermark + 1e-10 {
                    return Err(Error::Numeric(format!(
                        "objective increased by {:.3e} at sweep {sweep}, feature {l}",
                        obj - monotone_watermark
                    )));
                }
                monotone_watermark = obj;
            }
        }

        // incremental eta drifts very slowly; rebuild it periodically
        if sweep % 50 == 0 {
            eta = compute_eta(dataset, &beta)?;
        }
        current_loss = loss(dataset, &eta);
        current_objective = current_loss + penalty(&beta, lambda1, lambda2);
        if config.trace {
            trace.push(TracePoint {
                sweep,
                loss: current_loss,
                objective: current_objective,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        let rel_decrease =
            (prev_objective - current_objective).abs() / prev_objective.abs().max(1.0);
        if check_convergence(max_change, rel_decrease, config.tol) {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta: CoefficientVector { values: beta, feature_names: dataset.feature_names().to_vec() },
        final_loss: current_objective,
        final_cph_loss: current_loss,
        loss_trace: trace,
        sweeps_used,
        converged,
        diverged: false,
    })
}

/// Per-sample diagonal used by the baselines.
fn sample_diagonal(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    method: Method,
) -> Vec<f64> {
    let n = dataset.n();
    let m = eta.stabilizer();
    let inv = event_inverse_sums(dataset, eta);
    match method {
        Method::QuasiNewton => {
            let inv_sq = event_inverse_square_sums(dataset, eta);
            (0..n)
                .map(|k| {
                    let w = (eta.values()[k] - m).exp();
                    w * inv[k] - w * w * inv_sq[k]
                })
                .collect()
        }
        Method::ProxNewton => (0..n)
            .map(|k| (eta.values()[k] - m).exp() * inv[k])
            .collect(),
        _ => unreachable!("diagonal only defined for the diagonal baselines"),
    }
}

fn fit_diagonal_newton(
    dataset: &SortedSurvivalDataset,
    config: &FitConfig,
) -> Result<FitResult> {
    let p = dataset.p();
    let (lambda1, lambda2) = (config.lambda1, config.lambda2);
    let mut beta = vec![0.0; p];
    let mut eta = compute_eta(dataset, &beta)?;
    let mut current_loss = loss(dataset, &eta);
    let mut current_objective = current_loss;

    let start = Instant::now();
    let mut trace = Vec::new();
    if config.trace {
        trace.push(TracePoint { sweep: 0, loss: current_loss, objective: current_objective, elapsed_s: 0.0 });
    }

    let mut converged = false;
    let mut diverged = false;
    let mut sweeps_used = 0;
    for iter in 1..=config.max_sweeps {
        sweeps_used = iter;
        let prev_objective = current_objective;

        let g = eta_gradient(dataset, &eta);
        let diag = sample_diagonal(dataset, &eta, config.method);
        // every coordinate steps at once from the same eta
        let steps = exec::map_indexed(p, |l| {
            let col = dataset.col(l);
            let mut grad = 0.0;
            let mut curv = 0.0;
            for ((x, gi), hi) in col.iter().zip(&g).zip(&diag) {
                grad += x * gi;
                curv += x * x * hi;
            }
            let (grad, curv) = if lambda2 > 0.0 {
                elasticnet_absorb(grad, curv, lambda2, beta[l])
            } else {
                (grad, curv)
            };
            if curv <= 0.0 {
                return 0.0;
            }
            quad_step_l1(&QuadStepInput { grad, curvature: curv, current: beta[l], lambda1 })
                .unwrap_or(0.0)
        });

        let mut max_change = 0.0f64;
        let mut candidate = beta.clone();
        for (b, s) in candidate.iter_mut().zip(&steps) {
            *b += s;
            max_change = max_change.max(s.abs());
        }

        match compute_eta(dataset, &candidate) {
            Ok(new_eta) => {
                beta = candidate;
                eta = new_eta;
            }
            Err(_) => {
                // overflow: record the blow-up and keep the last finite iterate
                diverged = true;
                if config.trace {
                    trace.push(TracePoint {
                        sweep: iter,
                        loss: f64::INFINITY,
                        objective: f64::INFINITY,
                        elapsed_s: start.elapsed().as_secs_f64(),
                    });
                }
                break;
            }
        }

        current_loss = loss(dataset, &eta);
        current_objective = current_loss + penalty(&beta, lambda1, lambda2);
        if config.trace {
            trace.push(TracePoint {
                sweep: iter,
                loss: current_loss,
                objective: current_objective,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        if !current_objective.is_finite() {
            diverged = true;
            break;
        }
        let rel_decrease =
            (prev_objective - current_objective).abs() / prev_objective.abs().max(1.0);
        if check_convergence(max_change, rel_decrease, config.tol) {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta: CoefficientVector { values: beta, feature_names: dataset.feature_names().to_vec() },
        final_loss: current_objective,
        final_cph_loss: current_loss,
        loss_trace: trace,
        sweeps_used,
        converged,
        diverged,
    })
}

/// X^T * H * X + 2*lambda2*I where H is the full sample-space Hessian,
/// assembled in O(n*p^2) without materializing the n-by-n H: the Hessian
/// decomposes into a diagonal part (the per-sample upper-bound weights)
/// minus one rank-one term per tie group.
fn newton_system(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    lambda2: f64,
) -> DMatrix<f64> {
    let n = dataset.n();
    let p = dataset.p();
    let m = eta.stabilizer();
    let inv = event_inverse_sums(dataset, eta);
    let weights: Vec<f64> = (0..n)
        .map(|k| (eta.values()[k] - m).exp() * inv[k])
        .collect();

    let mut mat = DMatrix::zeros(p, p);
    // weighted Gram part, column pairs over contiguous columns
    for l1 in 0..p {
        let c1 = dataset.col(l1);
        for l2 in l1..p {
            let c2 = dataset.col(l2);
            let mut acc = 0.0;
            for k in 0..n {
                acc += weights[k] * c1[k] * c2[k];
            }
            mat[(l1, l2)] += acc;
        }
    }

    // rank-one corrections: one per tie group holding events
    let mut prefix = vec![0.0; p]; // sum of exp(eta - m) * x over rows seen so far
    let mut s0 = 0.0;
    let mut start = 0;
    while start < n {
        let end = dataset.risk_set_end(start);
        for j in start..end {
            let w = (eta.values()[j] - m).exp();
            s0 += w;
            for (l, slot) in prefix.iter_mut().enumerate() {
                *slot += w * dataset.col(l)[j];
            }
        }
        let mut group_weight = 0.0;
        for i in start..end {
            if dataset.events()[i] {
                group_weight += 1.0 / (s0 * s0);
            }
        }
        if group_weight > 0.0 {
            for l1 in 0..p {
                let b1 = prefix[l1];
                for l2 in l1..p {
                    mat[(l1, l2)] -= group_weight * b1 * prefix[l2];
                }
            }
        }
        start = end;
    }

    for l1 in 0..p {
        mat[(l1, l1)] += 2.0 * lambda2;
        for l2 in l1 + 1..p {
            mat[(l2, l1)] = mat[(l1, l2)];
        }
    }
    mat
}

fn fit_exact_newton(dataset: &SortedSurvivalDataset, config: &FitConfig) -> Result<FitResult> {
    let p = dataset.p();
    let lambda2 = config.lambda2;
    let mut beta = vec![0.0; p];
    let mut eta = compute_eta(dataset, &beta)?;
    let mut current_loss = loss(dataset, &eta);
    let mut current_objective = current_loss;

    let start = Instant::now();
    let mut trace = Vec::new();
    if config.trace {
        trace.push(TracePoint { sweep: 0, loss: current_loss, objective: current_objective, elapsed_s: 0.0 });
    }

    let mut converged = false;
    let mut diverged = false;
    let mut sweeps_used = 0;
    for iter in 1..=config.max_sweeps {
        sweeps_used = iter;
        let prev_objective = current_objective;

        let g = eta_gradient(dataset, &eta);
        let mut grad = DVector::zeros(p);
        for l in 0..p {
            let mut acc = 0.0;
            for (x, gi) in dataset.col(l).iter().zip(&g) {
                acc += x * gi;
            }
            grad[l] = acc + 2.0 * lambda2 * beta[l];
        }
        let system = newton_system(dataset, &eta, lambda2);

        let neg_grad = -grad;
        let step = match system.clone().cholesky() {
            Some(chol) => chol.solve(&neg_grad),
            // singular (or indefinite from rounding): least-squares solution
            None => system
                .svd(true, true)
                .solve(&neg_grad, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(p)),
        };

        let mut max_change = 0.0f64;
        let mut candidate = beta.clone();
        for l in 0..p {
            candidate[l] += step[l];
            max_change = max_change.max(step[l].abs());
        }

        match compute_eta(dataset, &candidate) {
            Ok(new_eta) => {
                beta = candidate;
                eta = new_eta;
            }
            Err(_) => {
                diverged = true;
                if config.trace {
                    trace.push(TracePoint {
                        sweep: iter,
                        loss: f64::INFINITY,
                        objective: f64::INFINITY,
                        elapsed_s: start.elapsed().as_secs_f64(),
                    });
                }
                break;
            }
        }

        current_loss = loss(dataset, &eta);
        current_objective = current_loss + penalty(&beta, 0.0, lambda2);
        if config.trace {
            trace.push(TracePoint {
                sweep: iter,
                loss: current_loss,
                objective: current_objective,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        if !current_objective.is_finite() {
            diverged = true;
            break;
        }
        let rel_decrease =
            (prev_objective - current_objective).abs() / prev_objective.abs().max(1.0);
        if check_convergence(max_change, rel_decrease, config.tol) {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta: CoefficientVector { values: beta, feature_names: dataset.feature_names().to_vec() },
        final_loss: current_objective,
        final_cph_loss: current_loss,
        loss_trace: trace,
        sweeps_used,
        converged,
        diverged,
    })
}

/// One benchmark entry: the configuration and what happened.
#[derive(Debug)]
pub struct BenchmarkRun {
    pub config: FitConfig,
    pub result: Result<FitResult>,
}

/// Run every configuration against the same dataset from the same zero
/// initialization. Individual divergence is recorded in the results;
/// the suite itself never aborts. Runs in parallel, results in input
/// order.
pub fn benchmark(dataset: &SortedSurvivalDataset, configs: &[FitConfig]) -> Vec<BenchmarkRun> {
    exec::map_items(configs, |config| BenchmarkRun {
        config: config.clone(),
        result: fit(dataset, config),
    })
}
