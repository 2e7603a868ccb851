//! Coin-flip model: Y₁..Yₙ i.i.d. Bernoulli(θ) with a Uniform(0, 1)
//! prior on θ.
//!
//! With h heads and t = n − h tails the posterior kernel is
//! ℓ(θ) = h·ln θ + t·ln(1−θ), the exact constant is the Beta integral
//! Γ(h+1)Γ(t+1)/Γ(n+2), and the Laplace estimate at the interior mode
//! θ̂ = h/n is √(2π/n)·Ȳ^{h+½}·(1−Ȳ)^{t+½}.

use nalgebra::DMatrix;

use crate::laplace::{Objective, SolverConfig};
use crate::models::quadrature::log_integrate_interval;
use crate::numerics::{ln_factorial, LN_2PI};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliModel {
    n: u64,
    heads: u64,
}

impl BernoulliModel {
    pub fn new(n: u64, heads: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("need at least one observation".into()));
        }
        if heads > n {
            return Err(Error::Domain(format!("heads {heads} exceeds sample size {n}")));
        }
        Ok(BernoulliModel { n, heads })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn heads(&self) -> u64 {
        self.heads
    }

    pub fn tails(&self) -> u64 {
        self.n - self.heads
    }

    /// Sample mean Ȳ = h/n.
    pub fn y_bar(&self) -> f64 {
        self.heads as f64 / self.n as f64
    }

    /// The mode is on the boundary when every flip agrees.
    pub fn is_degenerate(&self) -> bool {
        self.heads == 0 || self.heads == self.n
    }

    /// ln ∫₀¹ θ^h (1−θ)^t dθ = ln Γ(h+1) + ln Γ(t+1) − ln Γ(n+2).
    pub fn log_exact(&self) -> f64 {
        ln_factorial(self.heads) + ln_factorial(self.tails()) - ln_factorial(self.n + 1)
    }

    /// ln[√(2π/n)·Ȳ^{h+½}·(1−Ȳ)^{t+½}] at the interior mode.
    pub fn log_laplace_closed(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateData("sample mean is on the boundary"));
        }
        let n = self.n as f64;
        let h = self.heads as f64;
        let t = self.tails() as f64;
        let y = h / n;
        let z = t / n;
        Ok(0.5 * (LN_2PI + (y * z / n).ln()) + h * y.ln() + t * z.ln())
    }

    /// ln(Z/Ẑ); negative, since the Laplace value overshoots here.
    pub fn log_ratio_closed(&self) -> Result<f64> {
        Ok(self.log_exact() - self.log_laplace_closed()?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        // Posterior-mean-flavored start: interior for every dataset.
        let start = (self.heads as f64 + 1.0) / (self.n as f64 + 2.0);
        SolverConfig::for_scale(vec![start], self.n as f64)
    }

    /// ∂^order ℓ(θ); order 0 is ℓ itself. Analytic:
    /// ∂^α ℓ = (−1)^{α−1}(α−1)!·h/θ^α − (α−1)!·t/(1−θ)^α.
    pub fn derivative(&self, theta: f64, order: usize) -> Result<f64> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
        }
        let h = self.heads as f64;
        let t = self.tails() as f64;
        match order {
            0 => Ok(self.eval(&[theta])),
            1..=4 => {
                let fact = (1..order).product::<usize>() as f64;
                let sign = if order % 2 == 1 { 1.0 } else { -1.0 };
                Ok(sign * fact * h / theta.powi(order as i32)
                    - fact * t / (1.0 - theta).powi(order as i32))
            }
            _ => Err(Error::Domain(format!("derivative order must be 0..=4, got {order}"))),
        }
    }

    /// Log likelihood alone; the uniform prior contributes nothing.
    pub fn log_likelihood(&self, theta: f64) -> f64 {
        self.eval(&[theta])
    }

    /// Uniform(0, 1) prior: density 1 on the domain.
    pub fn log_prior(&self, _theta: f64) -> f64 {
        0.0
    }

    /// ln Z by adaptive quadrature over (0, 1).
    pub fn log_z_quadrature(&self, rel_tol: f64) -> Result<f64> {
        log_integrate_interval(|theta| self.eval(&[theta]), 0.0, 1.0, rel_tol)
    }
}

impl Objective for BernoulliModel {
    fn dim(&self) -> usize {
        1
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[0] > 0.0 && theta[0] < 1.0
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        let th = theta[0];
        self.heads as f64 * th.ln() + self.tails() as f64 * (1.0 - th).ln()
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let th = theta[0];
        vec![self.heads as f64 / th - self.tails() as f64 / (1.0 - th)]
    }

    fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let th = theta[0];
        let h = self.heads as f64;
        let t = self.tails() as f64;
        DMatrix::from_element(1, 1, h / (th * th) + t / ((1.0 - th) * (1.0 - th)))
    }
}
