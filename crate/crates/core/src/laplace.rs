//! Generic mode finding and Laplace assembly.
//!
//! An [`Objective`] supplies the log posterior kernel ℓ(θ) (log prior
//! plus log likelihood, unnormalized), its gradient, and the negated
//! Hessian H(θ) = −∇²ℓ(θ). [`find_mode`] maximizes ℓ by damped Newton
//! ascent; [`laplace_approximate`] turns the mode into the Gaussian
//! integral estimate
//!
//! ln Ẑ = (k/2)·ln 2π − ½·ln det H(θ̂) + ℓ(θ̂).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::numerics::LN_2PI;
use crate::{Error, Result};

/// Log posterior kernel of a k-dimensional model with open domain.
pub trait Objective: Sync {
    /// Parameter dimension k.
    fn dim(&self) -> usize;

    /// Whether θ lies in the open domain of ℓ.
    fn in_domain(&self, theta: &[f64]) -> bool;

    /// ℓ(θ) = log prior + log likelihood, up to the normalizing constant
    /// under study.
    fn eval(&self, theta: &[f64]) -> f64;

    /// ∇ℓ(θ).
    fn gradient(&self, theta: &[f64]) -> Vec<f64>;

    /// H(θ) = −∇²ℓ(θ); positive definite near an interior maximum.
    fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64>;
}

/// Controls for [`find_mode`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Initial iterate; must be in the objective's domain.
    pub start: Vec<f64>,
    /// Convergence when ‖∇ℓ‖₂ drops to this level.
    pub grad_tol: f64,
    /// Newton iteration budget.
    pub max_iterations: usize,
    /// Step-halving budget per iteration.
    pub max_halvings: usize,
}

impl SolverConfig {
    /// Defaults with the gradient tolerance scaled to the data size:
    /// ℓ and its gradient grow like the sample size n, so the stopping
    /// rule should too.
    pub fn for_scale(start: Vec<f64>, n_scale: f64) -> Self {
        SolverConfig {
            start,
            grad_tol: 1e-10 * n_scale.max(1.0),
            max_iterations: 200,
            max_halvings: 60,
        }
    }
}

/// Output of [`find_mode`].
#[derive(Debug, Clone)]
pub struct ModeResult {
    /// Maximizer θ̂.
    pub mode: Vec<f64>,
    /// ℓ(θ̂).
    pub value: f64,
    /// H(θ̂) = −∇²ℓ(θ̂).
    pub neg_hessian: DMatrix<f64>,
    /// Newton updates performed.
    pub iterations: usize,
    /// ‖∇ℓ(θ̂)‖₂ at exit.
    pub grad_norm: f64,
}

/// Output of [`laplace_approximate`].
#[derive(Debug, Clone)]
pub struct LaplaceResult {
    pub mode: Vec<f64>,
    /// ℓ(θ̂).
    pub objective_value: f64,
    /// ln det H(θ̂).
    pub log_det_neg_hessian: f64,
    /// ln Ẑ.
    pub log_value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn check_finite_slice(v: &[f64], what: &str, theta: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("{what} at {theta:?} is not finite")));
    }
    Ok(())
}

/// Maximizes ℓ by Newton ascent with step halving.
///
/// Each iteration solves H·Δ = ∇ℓ when H is positive definite and falls
/// back to the raw gradient direction otherwise, then halves the step
/// until it lands in the domain and strictly increases ℓ. Failure is
/// classified: every trial point outside the domain is
/// [`Error::DomainEscape`]; an in-domain stall along the gradient
/// fallback is [`Error::IndefiniteHessian`]; exhausting the iteration
/// budget is [`Error::NonConvergence`].
pub fn find_mode<O: Objective + ?Sized>(obj: &O, config: &SolverConfig) -> Result<ModeResult> {
    let k = obj.dim();
    if config.start.len() != k {
        return Err(Error::InvalidConfig(format!(
            "start point has dimension {}, objective has dimension {k}",
            config.start.len()
        )));
    }
    if !(config.grad_tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "grad_tol must be positive, got {}",
            config.grad_tol
        )));
    }
    if !obj.in_domain(&config.start) {
        return Err(Error::Domain(format!(
            "start point {:?} is outside the objective domain",
            config.start
        )));
    }

    let mut theta = config.start.clone();
    let mut value = obj.eval(&theta);
    if !value.is_finite() {
        return Err(Error::NonFinite(format!(
            "objective at start {theta:?} is not finite"
        )));
    }

    let mut grad = obj.gradient(&theta);
    check_finite_slice(&grad, "gradient", &theta)?;
    let mut grad_norm = l2_norm(&grad);
    let mut flat_steps = 0usize;

    for iteration in 0..config.max_iterations {
        if grad_norm <= config.grad_tol {
            return finish(obj, theta, value, iteration, grad_norm);
        }

        let h = obj.neg_hessian(&theta);
        check_finite_slice(h.as_slice(), "negated Hessian", &theta)?;
        let g = DVector::from_column_slice(&grad);
        let (direction, newton) = match Cholesky::new(h) {
            Some(chol) => (chol.solve(&g), true),
            None => (g.clone(), false),
        };

        let mut accepted = false;
        let mut any_in_domain = false;
        let mut scale = 1.0;
        for _ in 0..=config.max_halvings {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(direction.iter())
                .map(|(t, d)| t + scale * d)
                .collect();
            if obj.in_domain(&candidate) {
                any_in_domain = true;
                let cand_value = obj.eval(&candidate);
                if cand_value.is_finite() && cand_value > value {
                    theta = candidate;
                    value = cand_value;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }

        if accepted {
            flat_steps = 0;
        } else {
            if !any_in_domain {
                return Err(Error::DomainEscape);
            }
            if !newton {
                return Err(Error::IndefiniteHessian);
            }
            // A positive-definite Newton step that cannot strictly ascend
            // means the iterate is within rounding of the maximum: the
            // predicted gain ~½·ΔᵀHΔ has dropped below the evaluation
            // noise of ℓ. The undamped Newton candidate still sharpens
            // the mode location (quadratic contraction of ∇ℓ), so take
            // it whenever it strictly shrinks the gradient norm — the
            // one signal that stays meaningful after the objective has
            // flattened into rounding noise — but only a few times in a
            // row, so a pathological objective cannot wander forever.
            let candidate: Vec<f64> = theta
                .iter()
                .zip(direction.iter())
                .map(|(t, d)| t + d)
                .collect();
            let mut took_flat_step = false;
            if flat_steps < 3 && obj.in_domain(&candidate) {
                let cand_value = obj.eval(&candidate);
                let cand_grad = obj.gradient(&candidate);
                let cand_norm = l2_norm(&cand_grad);
                if cand_value.is_finite()
                    && cand_grad.iter().all(|g| g.is_finite())
                    && cand_norm < grad_norm
                {
                    theta = candidate;
                    value = cand_value;
                    grad = cand_grad;
                    grad_norm = cand_norm;
                    flat_steps += 1;
                    took_flat_step = true;
                }
            }
            if !took_flat_step {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    grad_norm,
                });
            }
            continue;
        }

        grad = obj.gradient(&theta);
        check_finite_slice(&grad, "gradient", &theta)?;
        grad_norm = l2_norm(&grad);
    }

    if grad_norm <= config.grad_tol {
        return finish(obj, theta, value, config.max_iterations, grad_norm);
    }
    Err(Error::NonConvergence {
        iterations: config.max_iterations,
        grad_norm,
    })
}

fn finish<O: Objective + ?Sized>(
    obj: &O,
    mode: Vec<f64>,
    value: f64,
    iterations: usize,
    grad_norm: f64,
) -> Result<ModeResult> {
    let neg_hessian = obj.neg_hessian(&mode);
    check_finite_slice(neg_hessian.as_slice(), "negated Hessian", &mode)?;
    Ok(ModeResult {
        mode,
        value,
        neg_hessian,
        iterations,
        grad_norm,
    })
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ln det of a symmetric positive-definite matrix via Cholesky;
/// [`Error::NonPositiveDefinite`] when the factorization fails.
pub fn log_det_spd(matrix: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(matrix.clone()).ok_or(Error::NonPositiveDefinite)?;
    let l = chol.l();
    let mut log_det = 0.0;
    for i in 0..matrix.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPositiveDefinite);
        }
        log_det += d.ln();
    }
    Ok(2.0 * log_det)
}

/// Runs [`find_mode`] and assembles the Laplace estimate of
/// ln ∫ exp ℓ(θ) dθ.
pub fn laplace_approximate<O: Objective + ?Sized>(
    obj: &O,
    config: &SolverConfig,
) -> Result<LaplaceResult> {
    let mode = find_mode(obj, config)?;
    let log_det = log_det_spd(&mode.neg_hessian)?;
    let k = obj.dim() as f64;
    let log_value = 0.5 * k * LN_2PI - 0.5 * log_det + mode.value;
    if !log_value.is_finite() {
        return Err(Error::NonFinite(format!(
            "assembled log value {log_value} at mode {:?}",
            mode.mode
        )));
    }
    Ok(LaplaceResult {
        mode: mode.mode,
        objective_value: mode.value,
        log_det_neg_hessian: log_det,
        log_value,
        iterations: mode.iterations,
        grad_norm: mode.grad_norm,
    })
}
