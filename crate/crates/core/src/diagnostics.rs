//! Empirical surrogates for the regularity conditions behind the
//! approximation-error analysis.
//!
//! The error bounds rest on five finite-sample properties of the log
//! posterior kernel ℓ around the data-generating parameter: bounded
//! scaled derivatives up to fourth order, positive curvature bounded
//! above and below, strict decay of the log likelihood away from the
//! truth, √n-consistency of the posterior mode, and a prior density
//! bounded away from zero and infinity. None of these is checkable in
//! the limit, so [`diagnose`] evaluates each quantity on a finite grid
//! for one dataset, and [`consistency_sweep`] measures the mode
//! deviation across replicated datasets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harness::replicate_seed;
use crate::laplace::{find_mode, Objective};
use crate::models::{Model, ModelKind, TrueDistribution};
use crate::numerics::{central_difference, quantile_sorted};
use crate::{Error, Result};

/// Probability levels reported by [`consistency_sweep`].
pub const SWEEP_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Highest derivative order examined by the first diagnostic.
const MAX_DERIV_ORDER: usize = 4;

/// Tuning for [`diagnose`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Ball radius δ around the data-generating parameter. `None`
    /// picks the model default: min{θ*, 1−θ*}/2 for the coin model,
    /// λ*/(2θ) for the count model, and 0.5 (in log-odds coordinates)
    /// for the categorical model.
    pub delta: Option<f64>,
    /// The likelihood-decay check runs over the annulus
    /// [δ, annulus_factor·δ]; must exceed 1.
    pub annulus_factor: f64,
    /// Grid points per axis. `None` picks 129 (1-D), 33 (2-D),
    /// 13 (3-D).
    pub grid_points: Option<usize>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            delta: None,
            annulus_factor: 5.0,
            grid_points: None,
        }
    }
}

/// Grid measurements of the five regularity properties for one
/// dataset. All suprema and extrema are over finite grids, so they
/// are lower bounds on the true suprema (and upper bounds on infima).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub model: ModelKind,
    pub n: u64,
    /// Data-generating parameter in the model's coordinates.
    pub center: Vec<f64>,
    /// Ball radius δ.
    pub delta: f64,
    /// Outer radius of the likelihood-decay annulus.
    pub annulus_radius: f64,
    /// Grid points per axis actually used.
    pub grid_points: usize,
    /// Index α = 0..=4: sup over the ball grid of |∂^α ℓ(θ)| / n,
    /// where order 0 is |ℓ| itself and, in several dimensions, each
    /// order takes the worst mixed partial of that total order.
    pub a1_sup_scaled_derivs: Vec<f64>,
    /// Analytic ceiling for every entry of `a1_sup_scaled_derivs`
    /// when one is available in closed form. For the coin model with
    /// ball [θ*−δ, θ*+δ] ⊂ (0,1) it is 2·3!·s⁴ with
    /// s = max{1/(θ*−δ), 1/(1−θ*−δ)}: each scaled derivative is at
    /// most (α−1)!(Ȳ/θ^α + Z̄/(1−θ)^α) ≤ (α−1)!·s^α·(Ȳ+Z̄) ≤ 2·3!·s⁴.
    pub a1_reference_bound: Option<f64>,
    /// (min over the ball grid of the smallest eigenvalue, max of the
    /// largest eigenvalue) of −∇²ℓ(θ)/n.
    pub a2_eig_bounds: (f64, f64),
    /// sup over the annulus grid (intersected with the domain) of
    /// (log lik(θ) − log lik(center)) / n; negative values certify
    /// that the likelihood decays away from the truth.
    pub a3_outside_gap: f64,
    /// (probability level, quantile of √n·‖θ̂ − center‖₂). A single
    /// dataset yields the singleton [(0.5, observed value)];
    /// [`consistency_sweep`] fills all of [`SWEEP_QUANTILES`].
    pub a4_scaled_mode_dev: Vec<(f64, f64)>,
    /// (min, max) of the prior density over the ball grid.
    pub a5_prior_bounds: (f64, f64),
}

/// Mode-deviation quantiles at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub n: u64,
    /// Replicates attempted at this n.
    pub attempted: u64,
    /// Replicates dropped because the dataset was degenerate or the
    /// mode search failed.
    pub excluded: u64,
    /// (probability level, quantile of √n·‖θ̂ − center‖₂) at each of
    /// [`SWEEP_QUANTILES`].
    pub quantiles: Vec<(f64, f64)>,
}

impl ConsistencyPoint {
    pub fn median(&self) -> f64 {
        self.quantiles
            .iter()
            .find(|(p, _)| *p == 0.5)
            .expect("median is always reported")
            .1
    }
}

/// √n-scaled mode deviations across sample sizes. If the mode is
/// √n-consistent, the quantiles are stable in n and `median_ratio`
/// stays within a constant factor of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySweep {
    pub model: ModelKind,
    /// One entry per distinct sample size, ascending.
    pub points: Vec<ConsistencyPoint>,
    /// Median deviation at the largest n divided by the median at the
    /// smallest n (1.0 when only one n is given).
    pub median_ratio: f64,
}

/// Data-generating parameter in the model's own coordinates.
fn center_of(truth: &TrueDistribution) -> Vec<f64> {
    match truth {
        TrueDistribution::Bernoulli { theta_star } => vec![*theta_star],
        TrueDistribution::Multinomial { psi_star } => {
            let k = psi_star.len();
            let last = psi_star[k - 1];
            psi_star[..k - 1].iter().map(|p| (p / last).ln()).collect()
        }
        TrueDistribution::Poisson { lambda_star, theta } => vec![lambda_star / theta],
    }
}

fn default_delta(truth: &TrueDistribution) -> f64 {
    match truth {
        TrueDistribution::Bernoulli { theta_star } => theta_star.min(1.0 - theta_star) / 2.0,
        TrueDistribution::Multinomial { .. } => 0.5,
        TrueDistribution::Poisson { lambda_star, theta } => lambda_star / (2.0 * theta),
    }
}

fn default_grid_points(dim: usize) -> usize {
    match dim {
        1 => 129,
        2 => 33,
        _ => 13,
    }
}

fn norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// All points of the uniform grid over the cube center ± radius with
/// `points` nodes per axis.
fn cube_grid(center: &[f64], radius: f64, points: usize) -> Vec<Vec<f64>> {
    let dim = center.len();
    let step = 2.0 * radius / (points - 1) as f64;
    let mut out = Vec::with_capacity(points.pow(dim as u32));
    let mut index = vec![0usize; dim];
    loop {
        out.push(
            index
                .iter()
                .zip(center)
                .map(|(&i, &c)| c - radius + i as f64 * step)
                .collect(),
        );
        let mut axis = 0;
        loop {
            if axis == dim {
                return out;
            }
            index[axis] += 1;
            if index[axis] < points {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
    }
}

/// All multi-indices over `dim` axes with total order `order`.
fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    if dim == 1 {
        return vec![vec![order]];
    }
    let mut out = Vec::new();
    for head in 0..=order {
        for mut tail in multi_indices(dim - 1, order - head) {
            let mut idx = Vec::with_capacity(dim);
            idx.push(head);
            idx.append(&mut tail);
            out.push(idx);
        }
    }
    out
}

/// Measures the five regularity quantities for one dataset around the
/// data-generating parameter of `truth`.
///
/// Errors: the dataset must be non-degenerate and of the same family
/// as `truth`; the categorical model supports at most 4 cells (mixed
/// fourth-order difference stencils become unreliable beyond three
/// axes).
pub fn diagnose(
    model: &Model,
    truth: &TrueDistribution,
    config: &DiagnosticsConfig,
) -> Result<AssumptionReport> {
    truth.validate()?;
    if model.kind() != truth.kind() {
        return Err(Error::InvalidConfig(format!(
            "dataset is {} but the data-generating distribution is {}",
            model.kind(),
            truth.kind()
        )));
    }
    if model.is_degenerate() {
        return Err(Error::DegenerateData(
            "diagnostics need an interior mode; the dataset sits on the boundary",
        ));
    }
    if let Model::Multinomial(m) = model {
        if m.k() > 4 {
            return Err(Error::DimensionTooLarge { found: m.k(), max: 4 });
        }
    }
    let dim = model.dim();
    let center = center_of(truth);
    let delta = config.delta.unwrap_or_else(|| default_delta(truth));
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "ball radius must be positive and finite, got {delta}"
        )));
    }
    if !(config.annulus_factor > 1.0 && config.annulus_factor.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "annulus_factor must exceed 1, got {}",
            config.annulus_factor
        )));
    }
    let grid_points = config.grid_points.unwrap_or_else(|| default_grid_points(dim));
    if grid_points < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 grid points per axis, got {grid_points}"
        )));
    }
    if !model.in_domain(&center) {
        return Err(Error::InvalidConfig(
            "the data-generating parameter lies outside the model domain".into(),
        ));
    }
    let annulus_radius = config.annulus_factor * delta;

    let ball: Vec<Vec<f64>> = cube_grid(&center, delta, grid_points)
        .into_iter()
        .filter(|x| norm(x, &center) <= delta && model.in_domain(x))
        .collect();
    if ball.is_empty() {
        return Err(Error::InvalidConfig(
            "no grid point of the ball lies inside the model domain".into(),
        ));
    }
    let annulus: Vec<Vec<f64>> = cube_grid(&center, annulus_radius, grid_points)
        .into_iter()
        .filter(|x| {
            let d = norm(x, &center);
            d >= delta && d <= annulus_radius && model.in_domain(x)
        })
        .collect();
    if annulus.is_empty() {
        return Err(Error::InvalidConfig(
            "no grid point of the annulus lies inside the model domain".into(),
        ));
    }

    let n = model.sample_size() as f64;

    // Scaled derivative suprema, order by order.
    let mut a1 = Vec::with_capacity(MAX_DERIV_ORDER + 1);
    for order in 0..=MAX_DERIV_ORDER {
        let sup = match model {
            Model::Bernoulli(b) => ball
                .iter()
                .map(|x| b.derivative(x[0], order).map(f64::abs))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max),
            Model::Poisson(p) => ball
                .iter()
                .map(|x| p.derivative(x[0], order).map(f64::abs))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max),
            Model::Multinomial(_) => {
                if order == 0 {
                    ball.iter().map(|x| model.eval(x).abs()).fold(0.0, f64::max)
                } else {
                    let mut sup = 0.0f64;
                    for alpha in multi_indices(dim, order) {
                        for x in &ball {
                            let d = central_difference(|y| model.eval(y), x, &alpha)?;
                            sup = sup.max(d.abs());
                        }
                    }
                    sup
                }
            }
        };
        a1.push(sup / n);
    }
    let a1_reference_bound = match truth {
        TrueDistribution::Bernoulli { theta_star } => {
            let lo = theta_star - delta;
            let hi = theta_star + delta;
            if lo > 0.0 && hi < 1.0 {
                let s = (1.0 / lo).max(1.0 / (1.0 - hi));
                Some(2.0 * 6.0 * s.powi(4))
            } else {
                None
            }
        }
        _ => None,
    };

    // Curvature extremes of −∇²ℓ/n over the ball.
    let mut eig_min = f64::INFINITY;
    let mut eig_max = f64::NEG_INFINITY;
    for x in &ball {
        let h = model.neg_hessian(x);
        if dim == 1 {
            let v = h[(0, 0)] / n;
            eig_min = eig_min.min(v);
            eig_max = eig_max.max(v);
        } else {
            let eig = h.symmetric_eigen();
            for &v in eig.eigenvalues.iter() {
                eig_min = eig_min.min(v / n);
                eig_max = eig_max.max(v / n);
            }
        }
    }

    // Likelihood decay over the annulus.
    let lik_center = model.log_likelihood(&center);
    if !lik_center.is_finite() {
        return Err(Error::NonFinite(format!(
            "log likelihood at the center is {lik_center}"
        )));
    }
    let a3_outside_gap = annulus
        .iter()
        .map(|x| (model.log_likelihood(x) - lik_center) / n)
        .fold(f64::NEG_INFINITY, f64::max);

    // Observed mode deviation for this single dataset.
    let mode = find_mode(model, &model.solver_config())?;
    let deviation = n.sqrt() * norm(&mode.mode, &center);
    let a4_scaled_mode_dev = vec![(0.5, deviation)];

    // Prior density extremes over the ball.
    let mut prior_min = f64::INFINITY;
    let mut prior_max = f64::NEG_INFINITY;
    for x in &ball {
        let p = model.log_prior(x).exp();
        prior_min = prior_min.min(p);
        prior_max = prior_max.max(p);
    }

    Ok(AssumptionReport {
        model: model.kind(),
        n: model.sample_size(),
        center,
        delta,
        annulus_radius,
        grid_points,
        a1_sup_scaled_derivs: a1,
        a1_reference_bound,
        a2_eig_bounds: (eig_min, eig_max),
        a3_outside_gap,
        a4_scaled_mode_dev,
        a5_prior_bounds: (prior_min, prior_max),
    })
}

/// Samples `replicates` datasets at every n in `n_grid`, finds each
/// posterior mode with the generic engine, and reports quantiles of
/// √n·‖θ̂ − center‖₂ per n. Degenerate datasets and failed mode
/// searches are excluded and counted. Replicate seeds follow the same
/// (base_seed, n, replicate) chain as the sweep harness.
pub fn consistency_sweep(
    truth: &TrueDistribution,
    n_grid: &[u64],
    replicates: u64,
    base_seed: u64,
) -> Result<ConsistencySweep> {
    truth.validate()?;
    if n_grid.is_empty() {
        return Err(Error::InvalidConfig("n_grid must not be empty".into()));
    }
    if n_grid.contains(&0) {
        return Err(Error::InvalidConfig("sample sizes must be at least 1".into()));
    }
    if replicates < 100 {
        return Err(Error::InvalidConfig(format!(
            "consistency sweeps need at least 100 replicates per n, got {replicates}"
        )));
    }
    let mut sizes: Vec<u64> = n_grid.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let center = center_of(truth);

    let points = sizes
        .iter()
        .map(|&n| -> Result<ConsistencyPoint> {
            let deviations: Vec<Option<f64>> = (0..replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = replicate_seed(base_seed, n, rep);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let model = truth.sample(n, &mut rng).ok()?;
                    if model.is_degenerate() {
                        return None;
                    }
                    let mode = find_mode(&model, &model.solver_config()).ok()?;
                    Some((n as f64).sqrt() * norm(&mode.mode, &center))
                })
                .collect();
            let mut kept: Vec<f64> = deviations.iter().flatten().copied().collect();
            let excluded = replicates - kept.len() as u64;
            if kept.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "all {replicates} replicates at n = {n} were excluded"
                )));
            }
            kept.sort_by(f64::total_cmp);
            let quantiles = SWEEP_QUANTILES
                .iter()
                .map(|&p| (p, quantile_sorted(&kept, p)))
                .collect();
            Ok(ConsistencyPoint {
                n,
                attempted: replicates,
                excluded,
                quantiles,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let median_ratio = if points.len() == 1 {
        1.0
    } else {
        points.last().unwrap().median() / points.first().unwrap().median()
    };
    Ok(ConsistencySweep {
        model: truth.kind(),
        points,
        median_ratio,
    })
}
