//! Count model: Y₁..Yₙ i.i.d. Poisson(ω·θ) with known exposure scale
//! θ > 0 and an Exponential(1) prior on ω.
//!
//! With T = Σ Yᵢ the kernel is
//! ℓ(ω) = T·ln(ωθ) − ω(nθ+1) − Σ ln Yᵢ!,
//! maximized at ω̂ = T/(nθ+1), and the exact constant is
//! Z = θ^T·Γ(T+1) / (Π Yᵢ!·(nθ+1)^{T+1}).
//!
//! Both Z and the Laplace value carry the identical factor
//! θ^T/(nθ+1)^{T+1}, so their ratio is a function of T alone:
//! Z/Ẑ = Γ(T+1) / (√(2π)·T^{T+½}·e^{−T}), the Stirling correction at T.
//! [`PoissonModel::log_ratio_closed`] exploits that directly, keeping
//! the ratio accurate to ~1e-16 even when both logs are in the
//! thousands — a subtraction of the assembled logs would quantize at
//! their ulp and drown bounds of size 1/(12T).

use nalgebra::DMatrix;

use crate::laplace::{Objective, SolverConfig};
use crate::models::quadrature::log_integrate_positive;
use crate::numerics::{ln_factorial, stirling_series, LN_2PI};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonModel {
    counts: Vec<u64>,
    theta: f64,
    total: u64,
    ln_fact_sum: f64,
}

/// ln[θ^t/(nθ+1)^{t+1}] — the θ-dependent factor shared verbatim by the
/// exact constant and the Laplace value, so that differences of the two
/// cancel it bitwise.
fn theta_terms(n: u64, total: u64, theta: f64) -> f64 {
    let c = n as f64 * theta + 1.0;
    total as f64 * theta.ln() - (total as f64 + 1.0) * c.ln()
}

/// (T + ½)·ln T − T + ½·ln 2π, the Stirling/Laplace main term at T.
fn laplace_main_term(total: u64) -> f64 {
    let t = total as f64;
    (t + 0.5) * t.ln() - t + 0.5 * LN_2PI
}

impl PoissonModel {
    pub fn new(counts: Vec<u64>, theta: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Domain("need at least one observation".into()));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::Domain(format!("theta must be positive, got {theta}")));
        }
        let total = counts.iter().sum();
        let ln_fact_sum = counts.iter().map(|&c| ln_factorial(c)).sum();
        Ok(PoissonModel {
            counts,
            theta,
            total,
            ln_fact_sum,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of observations n.
    pub fn n(&self) -> u64 {
        self.counts.len() as u64
    }

    /// T = Σ Yᵢ.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sample mean Ȳ = T/n.
    pub fn y_bar(&self) -> f64 {
        self.total as f64 / self.counts.len() as f64
    }

    /// The mode is at the boundary ω = 0 when no events were observed.
    pub fn is_degenerate(&self) -> bool {
        self.total == 0
    }

    /// nθ + 1, the posterior rate on ω.
    fn rate(&self) -> f64 {
        self.counts.len() as f64 * self.theta + 1.0
    }

    /// ln[Γ(T+1)·θ^T / (Π Yᵢ!·(nθ+1)^{T+1})].
    pub fn log_exact(&self) -> f64 {
        ln_factorial(self.total) - self.ln_fact_sum
            + theta_terms(self.n(), self.total, self.theta)
    }

    /// ln[√(2π)·T^{T+½}·e^{−T}·θ^T / (Π Yᵢ!·(nθ+1)^{T+1})].
    pub fn log_laplace_closed(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateData("no events observed; mode is at zero"));
        }
        Ok(laplace_main_term(self.total) - self.ln_fact_sum
            + theta_terms(self.n(), self.total, self.theta))
    }

    /// ln(Z/Ẑ) = ln Γ(T+1) − [(T+½)ln T − T + ½ln 2π], a function of T
    /// alone. Evaluated as the Stirling tail for T ≥ 10 (no
    /// cancellation at all) and as a direct small-number difference
    /// below that.
    pub fn log_ratio_closed(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateData("no events observed; mode is at zero"));
        }
        let t = self.total as f64;
        if t >= 10.0 {
            Ok(stirling_series(t))
        } else {
            Ok(ln_factorial(self.total) - laplace_main_term(self.total))
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        // (T+1)/(nθ+1) is interior for every dataset and lands on the
        // mode itself up to a 1/T relative offset.
        let start = (self.total as f64 + 1.0) / self.rate();
        SolverConfig::for_scale(vec![start], self.total as f64 + self.counts.len() as f64)
    }

    /// ∂^order ℓ(ω); order 0 is ℓ itself. Analytic:
    /// ℓ′ = T/ω − (nθ+1), and ∂^j ℓ = (−1)^{j−1}(j−1)!·T/ω^j for j ≥ 2.
    pub fn derivative(&self, omega: f64, order: usize) -> Result<f64> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        let t = self.total as f64;
        match order {
            0 => Ok(self.eval(&[omega])),
            1 => Ok(t / omega - self.rate()),
            2..=4 => {
                let fact = (1..order).product::<usize>() as f64;
                let sign = if order % 2 == 1 { 1.0 } else { -1.0 };
                Ok(sign * fact * t / omega.powi(order as i32))
            }
            _ => Err(Error::Domain(format!("derivative order must be 0..=4, got {order}"))),
        }
    }

    /// Log likelihood alone: T·ln(ωθ) − nωθ − Σ ln Yᵢ!.
    pub fn log_likelihood(&self, omega: f64) -> f64 {
        let t = self.total as f64;
        let n = self.counts.len() as f64;
        t * (omega * self.theta).ln() - n * omega * self.theta - self.ln_fact_sum
    }

    /// Exponential(1) prior: ln density = −ω.
    pub fn log_prior(&self, omega: f64) -> f64 {
        -omega
    }

    /// ln Z by adaptive quadrature over (0, ∞).
    pub fn log_z_quadrature(&self, rel_tol: f64) -> Result<f64> {
        let center = (self.total as f64 + 1.0) / self.rate();
        log_integrate_positive(|w| self.eval(&[w]), center, rel_tol)
    }
}

impl Objective for PoissonModel {
    fn dim(&self) -> usize {
        1
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[0] > 0.0 && theta[0].is_finite()
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        let w = theta[0];
        let t = self.total as f64;
        t * w.ln() + t * self.theta.ln() - w * self.rate() - self.ln_fact_sum
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        vec![self.total as f64 / theta[0] - self.rate()]
    }

    fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let w = theta[0];
        DMatrix::from_element(1, 1, self.total as f64 / (w * w))
    }
}
