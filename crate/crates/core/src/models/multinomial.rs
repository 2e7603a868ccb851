//! Categorical-count model in log-odds coordinates: counts S₁..S_k from
//! n draws, with a uniform Dirichlet prior on the cell probabilities.
//!
//! Parameterizing ψ_j = e^{θ_j}/(1 + Σ_{l<k} e^{θ_l}) (θ ∈ ℝ^{k−1},
//! category k as baseline) makes the domain all of ℝ^{k−1} and pushes
//! the uniform prior to Γ(k)·e^{Σθ_j}/(1 + Σe^{θ_j})^k, giving the
//! kernel
//!
//! ℓ(θ) = ln Γ(k) + Σ_{j<k}(S_j+1)θ_j − (n+k)·ln(1 + Σ_{j<k}e^{θ_j}).
//!
//! The exact constant is the Dirichlet integral
//! Γ(k)·ΠΓ(S_j+1)/Γ(n+k); the interior mode is
//! θ̂_j = ln((S_j+1)/(S_k+1)) with det H(θ̂) = Π(S_j+1)/(n+k), so the
//! Laplace value also has a closed form. The +1 prior smoothing keeps
//! the mode interior for every dataset — this model is never
//! degenerate.

use nalgebra::{Cholesky, DMatrix};

use crate::laplace::{Objective, SolverConfig};
use crate::models::quadrature::{log_integrate_line, log_integrate_plane};
use crate::numerics::{ln_factorial, LN_2PI};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultinomialModel {
    counts: Vec<u64>,
    n: u64,
}

impl MultinomialModel {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::Domain(format!(
                "need at least two categories, got {}",
                counts.len()
            )));
        }
        let n = counts.iter().sum();
        Ok(MultinomialModel { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of categories k.
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Total count n = Σ S_j.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// n + k, the effective weight on the log-partition term.
    fn m(&self) -> f64 {
        self.n as f64 + self.counts.len() as f64
    }

    /// ln(1 + Σ e^{θ_j}), evaluated stably for large |θ|.
    fn log_partition(&self, theta: &[f64]) -> f64 {
        let top = theta.iter().fold(0.0f64, |acc, &t| acc.max(t));
        let sum: f64 = theta.iter().map(|&t| (t - top).exp()).sum::<f64>() + (-top).exp();
        top + sum.ln()
    }

    /// Cell probabilities τ_j for j < k implied by θ.
    fn tau(&self, theta: &[f64]) -> Vec<f64> {
        let lp = self.log_partition(theta);
        theta.iter().map(|&t| (t - lp).exp()).collect()
    }

    /// ln[Γ(k)·ΠΓ(S_j+1)/Γ(n+k)].
    pub fn log_exact(&self) -> f64 {
        let k = self.counts.len() as u64;
        let mut s = ln_factorial(k - 1); // ln Γ(k)
        for &c in &self.counts {
            s += ln_factorial(c);
        }
        s - ln_factorial(self.n + k - 1) // ln Γ(n+k)
    }

    /// Closed-form Laplace value at the interior mode:
    /// (2π)^{(k−1)/2}·(n+k)^{½}·Γ(k)·Π(S_j+1)^{−½}·
    /// exp{Σ(S_j+1)ln(S_j+1) − (n+k)ln(n+k)}.
    pub fn log_laplace_closed(&self) -> f64 {
        let k = self.counts.len();
        let m = self.m();
        let mut sum_ln = 0.0;
        let mut sum_xlnx = 0.0;
        for &c in &self.counts {
            let q = c as f64 + 1.0;
            let lq = q.ln();
            sum_ln += lq;
            sum_xlnx += q * lq;
        }
        0.5 * ((k - 1) as f64) * LN_2PI + 0.5 * m.ln() + ln_factorial(k as u64 - 1)
            - 0.5 * sum_ln
            + sum_xlnx
            - m * m.ln()
    }

    /// ln(Z/Ẑ); positive, since the Laplace value undershoots here.
    pub fn log_ratio_closed(&self) -> f64 {
        self.log_exact() - self.log_laplace_closed()
    }

    /// Analytic mode θ̂_j = ln((S_j+1)/(S_k+1)).
    pub fn mode(&self) -> Vec<f64> {
        let k = self.counts.len();
        let base = (self.counts[k - 1] as f64 + 1.0).ln();
        self.counts[..k - 1]
            .iter()
            .map(|&c| (c as f64 + 1.0).ln() - base)
            .collect()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::for_scale(vec![0.0; self.counts.len() - 1], self.m())
    }

    /// Log likelihood alone: Σ_{j<k} S_jθ_j − n·ln(1 + Σe^{θ_j}).
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let k = self.counts.len();
        let mut s = 0.0;
        for (c, t) in self.counts[..k - 1].iter().zip(theta) {
            s += *c as f64 * t;
        }
        s - self.n as f64 * self.log_partition(theta)
    }

    /// Log prior density: ln Γ(k) + Σθ_j − k·ln(1 + Σe^{θ_j}).
    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        let k = self.counts.len();
        ln_factorial(k as u64 - 1) + theta.iter().sum::<f64>()
            - k as f64 * self.log_partition(theta)
    }

    /// ln Z by adaptive quadrature; supported for k = 2 (line) and
    /// k = 3 (iterated plane after a whitening change of variables).
    pub fn log_z_quadrature(&self, rel_tol: f64) -> Result<f64> {
        let k = self.counts.len();
        let mode = self.mode();
        match k {
            2 => log_integrate_line(|t| self.eval(&[t]), mode[0], rel_tol),
            3 => {
                // Whiten with the Cholesky factor of H(θ̂): θ = θ̂ + L^{−T}u
                // turns the peak isotropic, so iterated axis-aligned
                // integration converges without chasing correlations.
                // The substitution carries dθ = det(L)^{−1} du.
                let h = self.neg_hessian(&mode);
                let chol = Cholesky::new(h).ok_or(Error::NonPositiveDefinite)?;
                let l = chol.l();
                let (l00, l10, l11) = (l[(0, 0)], l[(1, 0)], l[(1, 1)]);
                let log_jacobian = -(l00.ln() + l11.ln());
                let lf = |u1: f64, u2: f64| {
                    let d2 = u2 / l11;
                    let d1 = (u1 - l10 * d2) / l00;
                    self.eval(&[mode[0] + d1, mode[1] + d2]) + log_jacobian
                };
                log_integrate_plane(lf, rel_tol)
            }
            found => Err(Error::DimensionTooLarge { found, max: 3 }),
        }
    }
}

impl Objective for MultinomialModel {
    fn dim(&self) -> usize {
        self.counts.len() - 1
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.iter().all(|t| t.is_finite())
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        let k = self.counts.len();
        let mut s = ln_factorial(k as u64 - 1);
        for (c, t) in self.counts[..k - 1].iter().zip(theta) {
            s += (*c as f64 + 1.0) * t;
        }
        s - self.m() * self.log_partition(theta)
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let m = self.m();
        let tau = self.tau(theta);
        self.counts[..self.counts.len() - 1]
            .iter()
            .zip(&tau)
            .map(|(&c, &t)| c as f64 + 1.0 - m * t)
            .collect()
    }

    fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = self.counts.len() - 1;
        let m = self.m();
        let tau = self.tau(theta);
        DMatrix::from_fn(d, d, |i, j| {
            let diag = if i == j { tau[i] } else { 0.0 };
            m * (diag - tau[i] * tau[j])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::{laplace_approximate, log_det_spd};
    use crate::models::bernoulli::BernoulliModel;
    use crate::numerics::central_difference;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "actual {actual:.17e} vs expected {expected:.17e}"
        );
    }

    #[test]
    fn exact_values_pin() {
        let m = MultinomialModel::new(vec![1, 1]).unwrap();
        assert_close(m.log_exact(), -1.7917594692280550, 1e-14);
        let m = MultinomialModel::new(vec![3, 3]).unwrap();
        assert_close(m.log_exact(), -4.9416424226093043, 1e-13);
        let m = MultinomialModel::new(vec![5, 3, 2]).unwrap();
        assert_close(m.log_exact(), -12.021668922531895, 1e-13);
        // All-zero counts: Γ(k)·1/Γ(k) = 1.
        let m = MultinomialModel::new(vec![0, 0, 0]).unwrap();
        assert_eq!(m.log_exact(), 0.0);
    }

    #[test]
    fn laplace_closed_form_pins() {
        let m = MultinomialModel::new(vec![1, 1]).unwrap();
        assert_close(m.log_laplace_closed(), -1.8536501890351085, 1e-13);
        let m = MultinomialModel::new(vec![2, 2]).unwrap();
        assert_close(m.log_laplace_closed().exp(), 0.031978959623327765, 1e-15);
        let m = MultinomialModel::new(vec![4, 4]).unwrap();
        assert_close(m.log_laplace_closed().exp(), 1.5481747256273481e-3, 1e-16);
        let m = MultinomialModel::new(vec![5, 3, 2]).unwrap();
        assert_close(m.log_laplace_closed(), -12.077604654955725, 1e-13);
        let m = MultinomialModel::new(vec![0, 0, 0]).unwrap();
        assert_close(m.log_laplace_closed(), -0.21550647470098344, 1e-14);
    }

    #[test]
    fn ratio_pins() {
        let cases: [(&[u64], f64); 6] = [
            (&[1, 1], 1.06384608107048714),
            (&[2, 2], 1.0423520253928958),
            (&[3, 3], 1.0316609527730401),
            (&[5, 3], 1.0266861008047311),
            (&[10, 10], 1.0114244996854217),
            (&[4, 4, 4, 4, 4], 1.0831682379399411),
        ];
        for (counts, expected) in cases {
            let m = MultinomialModel::new(counts.to_vec()).unwrap();
            assert_close(m.log_ratio_closed().exp(), expected, 1e-12);
        }
        let m = MultinomialModel::new(vec![5, 3, 2]).unwrap();
        assert_close(m.log_ratio_closed().exp(), 1.0575297166809768, 1e-12);
    }

    #[test]
    fn mode_and_hessian_determinant_pin() {
        let m = MultinomialModel::new(vec![5, 3, 2]).unwrap();
        let mode = m.mode();
        assert_close(mode[0], std::f64::consts::LN_2, 1e-15);
        assert_close(mode[1], 0.28768207245178093, 1e-15); // ln(4/3)
        let h = m.neg_hessian(&mode);
        // det H(θ̂) = Π(S_j+1)/(n+k) = 6·4·3/13 = 72/13.
        assert_close(log_det_spd(&h).unwrap(), (72.0f64 / 13.0).ln(), 1e-13);
        let g = m.gradient(&mode);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn two_categories_agree_with_coin_model_exactly() {
        for (h, t) in [(1u64, 1u64), (4, 2), (9, 21), (0, 7)] {
            let multi = MultinomialModel::new(vec![h, t]).unwrap();
            let coin = BernoulliModel::new(h + t, h).unwrap();
            assert_close(multi.log_exact(), coin.log_exact(), 1e-13);
        }
    }

    #[test]
    fn engine_matches_closed_form() {
        let cases: Vec<Vec<u64>> = vec![
            vec![1, 1],
            vec![5, 3],
            vec![5, 3, 2],
            vec![0, 0, 0],
            vec![4, 4, 4, 4, 4],
            vec![40, 11, 3, 17],
        ];
        for counts in cases {
            let m = MultinomialModel::new(counts.clone()).unwrap();
            let r = laplace_approximate(&m, &m.solver_config()).unwrap();
            let closed = m.log_laplace_closed();
            assert!(
                (r.log_value - closed).abs() <= 1e-8 * closed.abs().max(1.0),
                "engine {} vs closed {closed} at {counts:?}",
                r.log_value
            );
            let mode = m.mode();
            for (a, b) in r.mode.iter().zip(&mode) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn quadrature_matches_exact() {
        for counts in [vec![5u64, 3], vec![1, 1], vec![5, 3, 2], vec![0, 0, 0]] {
            let m = MultinomialModel::new(counts.clone()).unwrap();
            let q = m.log_z_quadrature(1e-9).unwrap();
            let e = m.log_exact();
            assert!(
                (q - e).abs() <= 1e-7 * e.abs().max(1.0),
                "quadrature {q} vs exact {e} at {counts:?}"
            );
        }
        let m = MultinomialModel::new(vec![1, 1, 1, 1]).unwrap();
        assert!(matches!(
            m.log_z_quadrature(1e-8),
            Err(Error::DimensionTooLarge { found: 4, max: 3 })
        ));
    }

    #[test]
    fn gradient_and_hessian_match_stencils() {
        let m = MultinomialModel::new(vec![7, 4, 2]).unwrap();
        for theta in [[0.0, 0.0], [0.4, -0.3], [-1.1, 0.8]] {
            let g = m.gradient(&theta);
            for axis in 0..2 {
                let mut idx = [0usize; 2];
                idx[axis] = 1;
                let numeric = central_difference(|x| m.eval(x), &theta, &idx).unwrap();
                assert!(
                    (g[axis] - numeric).abs() <= 2e-4 * g[axis].abs().max(1.0),
                    "gradient axis {axis} at {theta:?}: {} vs {numeric}",
                    g[axis]
                );
            }
            let h = m.neg_hessian(&theta);
            for i in 0..2 {
                for j in 0..2 {
                    let mut idx = [0usize; 2];
                    idx[i] += 1;
                    idx[j] += 1;
                    let numeric = central_difference(|x| m.eval(x), &theta, &idx).unwrap();
                    assert!(
                        (h[(i, j)] + numeric).abs() <= 5e-3 * h[(i, j)].abs().max(1.0),
                        "hessian ({i},{j}) at {theta:?}: {} vs {}",
                        h[(i, j)],
                        -numeric
                    );
                }
            }
        }
    }

    #[test]
    fn construction_rejects_single_category() {
        assert!(MultinomialModel::new(vec![5]).is_err());
        assert!(MultinomialModel::new(vec![]).is_err());
    }

    #[test]
    fn log_partition_is_stable_for_extreme_theta() {
        let m = MultinomialModel::new(vec![2, 3, 4]).unwrap();
        // Large positive θ would overflow a naive 1 + Σeᶿ.
        let v = m.eval(&[800.0, -750.0]);
        assert!(v.is_finite());
        let g = m.gradient(&[800.0, -750.0]);
        assert!(g.iter().all(|x| x.is_finite()));
        // τ₁ saturates to 1, so ∂₁ℓ → (S₁+1) − (n+k).
        assert_close(g[0], 3.0 - 12.0, 1e-9);
    }
}
