//! Conjugate reference models whose normalizing constants have closed
//! forms, so the Laplace estimate can be scored against exact answers.
//!
//! Each model packages one observed dataset together with its fixed
//! prior, exposes the log posterior kernel as an [`Objective`] for the
//! generic engine, and provides the closed-form exact constant, the
//! closed-form Laplace value, and an independent adaptive-quadrature
//! evaluation of the same integral.

pub mod bernoulli;
pub mod multinomial;
pub mod poisson;
pub mod quadrature;

pub use bernoulli::BernoulliModel;
pub use multinomial::MultinomialModel;
pub use poisson::PoissonModel;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::laplace::{Objective, SolverConfig};
use crate::{Error, Result};

/// Which reference family a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bernoulli,
    Multinomial,
    Poisson,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::Multinomial => "multinomial",
            ModelKind::Poisson => "poisson",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(ModelKind::Bernoulli),
            "multinomial" => Ok(ModelKind::Multinomial),
            "poisson" => Ok(ModelKind::Poisson),
            other => Err(Error::InvalidConfig(format!("unknown model kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Data-generating distribution for Monte Carlo sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrueDistribution {
    /// I.i.d. coin flips with success probability θ*.
    Bernoulli { theta_star: f64 },
    /// One draw of n balls into k boxes with cell probabilities ψ*.
    Multinomial { psi_star: Vec<f64> },
    /// I.i.d. counts with rate λ*; `theta` is the fixed exposure scale
    /// of the fitted model (rate = ω·θ), irrelevant to the data itself.
    Poisson { lambda_star: f64, theta: f64 },
}

impl TrueDistribution {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrueDistribution::Bernoulli { .. } => ModelKind::Bernoulli,
            TrueDistribution::Multinomial { .. } => ModelKind::Multinomial,
            TrueDistribution::Poisson { .. } => ModelKind::Poisson,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TrueDistribution::Bernoulli { theta_star } => {
                if !(theta_star.is_finite() && *theta_star > 0.0 && *theta_star < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "theta_star must lie in (0, 1), got {theta_star}"
                    )));
                }
            }
            TrueDistribution::Multinomial { psi_star } => {
                if psi_star.len() < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "psi_star needs at least two categories, got {}",
                        psi_star.len()
                    )));
                }
                if psi_star.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                    return Err(Error::InvalidConfig(
                        "every psi_star entry must be positive and finite".into(),
                    ));
                }
                let total: f64 = psi_star.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "psi_star must sum to 1 (got {total})"
                    )));
                }
            }
            TrueDistribution::Poisson { lambda_star, theta } => {
                if !(lambda_star.is_finite() && *lambda_star > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "lambda_star must be positive, got {lambda_star}"
                    )));
                }
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "theta must be positive, got {theta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draws one dataset of size n and wraps it in its model.
    pub fn sample<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<Model> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidConfig("sample size must be at least 1".into()));
        }
        match self {
            TrueDistribution::Bernoulli { theta_star } => {
                let heads = Binomial::new(n, *theta_star)
                    .expect("validated probability")
                    .sample(rng);
                Ok(Model::Bernoulli(BernoulliModel::new(n, heads)?))
            }
            TrueDistribution::Multinomial { psi_star } => {
                // Sequential conditional binomials: cell j gets a
                // Binomial(remaining, ψ_j / remaining mass) draw.
                let k = psi_star.len();
                let mut counts = Vec::with_capacity(k);
                let mut remaining = n;
                let mut rest: f64 = psi_star.iter().sum();
                for &p in &psi_star[..k - 1] {
                    let cond = (p / rest).clamp(0.0, 1.0);
                    let draw = Binomial::new(remaining, cond)
                        .expect("clamped probability")
                        .sample(rng);
                    counts.push(draw);
                    remaining -= draw;
                    rest -= p;
                }
                counts.push(remaining);
                Ok(Model::Multinomial(MultinomialModel::new(counts)?))
            }
            TrueDistribution::Poisson { lambda_star, theta } => {
                let dist = Poisson::new(*lambda_star).expect("validated rate");
                let counts: Vec<u64> = (0..n).map(|_| dist.sample(rng) as u64).collect();
                Ok(Model::Poisson(PoissonModel::new(counts, *theta)?))
            }
        }
    }
}

/// One observed dataset with its model, behind a single dispatch type.
#[derive(Debug, Clone)]
pub enum Model {
    Bernoulli(BernoulliModel),
    Multinomial(MultinomialModel),
    Poisson(PoissonModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Bernoulli(_) => ModelKind::Bernoulli,
            Model::Multinomial(_) => ModelKind::Multinomial,
            Model::Poisson(_) => ModelKind::Poisson,
        }
    }

    /// Number of observations n (total count for the multinomial).
    pub fn sample_size(&self) -> u64 {
        match self {
            Model::Bernoulli(m) => m.n(),
            Model::Multinomial(m) => m.n(),
            Model::Poisson(m) => m.n(),
        }
    }

    /// Whether the posterior mode sits on the domain boundary, making
    /// the Laplace approximation undefined.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Model::Bernoulli(m) => m.is_degenerate(),
            Model::Multinomial(_) => false,
            Model::Poisson(m) => m.is_degenerate(),
        }
    }

    /// ln Z from the conjugate closed form.
    pub fn log_exact(&self) -> f64 {
        match self {
            Model::Bernoulli(m) => m.log_exact(),
            Model::Multinomial(m) => m.log_exact(),
            Model::Poisson(m) => m.log_exact(),
        }
    }

    /// ln Ẑ from the closed-form Laplace expression (no iteration).
    pub fn log_laplace_closed(&self) -> Result<f64> {
        match self {
            Model::Bernoulli(m) => m.log_laplace_closed(),
            Model::Multinomial(m) => Ok(m.log_laplace_closed()),
            Model::Poisson(m) => m.log_laplace_closed(),
        }
    }

    /// ln(Z/Ẑ), evaluated in whatever form is best conditioned for the
    /// model.
    pub fn log_ratio_closed(&self) -> Result<f64> {
        match self {
            Model::Bernoulli(m) => m.log_ratio_closed(),
            Model::Multinomial(m) => Ok(m.log_ratio_closed()),
            Model::Poisson(m) => m.log_ratio_closed(),
        }
    }

    /// Solver settings appropriate for this dataset's scale.
    pub fn solver_config(&self) -> SolverConfig {
        match self {
            Model::Bernoulli(m) => m.solver_config(),
            Model::Multinomial(m) => m.solver_config(),
            Model::Poisson(m) => m.solver_config(),
        }
    }

    /// ln Z by adaptive quadrature, independent of both closed forms.
    pub fn log_z_quadrature(&self, rel_tol: f64) -> Result<f64> {
        match self {
            Model::Bernoulli(m) => m.log_z_quadrature(rel_tol),
            Model::Multinomial(m) => m.log_z_quadrature(rel_tol),
            Model::Poisson(m) => m.log_z_quadrature(rel_tol),
        }
    }

    /// Log likelihood alone (prior stripped), for separation checks.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        match self {
            Model::Bernoulli(m) => m.log_likelihood(theta[0]),
            Model::Multinomial(m) => m.log_likelihood(theta),
            Model::Poisson(m) => m.log_likelihood(theta[0]),
        }
    }

    /// Log prior density at θ, for positivity/boundedness checks.
    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        match self {
            Model::Bernoulli(m) => m.log_prior(theta[0]),
            Model::Multinomial(m) => m.log_prior(theta),
            Model::Poisson(m) => m.log_prior(theta[0]),
        }
    }
}

impl Objective for Model {
    fn dim(&self) -> usize {
        match self {
            Model::Bernoulli(m) => m.dim(),
            Model::Multinomial(m) => m.dim(),
            Model::Poisson(m) => m.dim(),
        }
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        match self {
            Model::Bernoulli(m) => m.in_domain(theta),
            Model::Multinomial(m) => m.in_domain(theta),
            Model::Poisson(m) => m.in_domain(theta),
        }
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            Model::Bernoulli(m) => m.eval(theta),
            Model::Multinomial(m) => m.eval(theta),
            Model::Poisson(m) => m.eval(theta),
        }
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Model::Bernoulli(m) => m.gradient(theta),
            Model::Multinomial(m) => m.gradient(theta),
            Model::Poisson(m) => m.gradient(theta),
        }
    }

    fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        match self {
            Model::Bernoulli(m) => m.neg_hessian(theta),
            Model::Multinomial(m) => m.neg_hessian(theta),
            Model::Poisson(m) => m.neg_hessian(theta),
        }
    }
}
