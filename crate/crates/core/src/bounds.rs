//! Finite-sample bounds on the ratio Z/Ẑ between the exact normalizing
//! constant and its Laplace estimate.
//!
//! Each bound applies to one reference model under explicit data
//! conditions, always at rate Θ(1/n):
//!
//! * [`check_t2`] — coin model, balanced data: Z/Ẑ ≤ 1 − 1/(26n).
//! * [`check_t3`] — categorical model: Z/Ẑ ≥ 1 + 1/(5n).
//! * [`check_t4`] — count model: Z/Ẑ ≥ 1 + 1/(26nλ*).
//! * [`check_t4_sharp`] — count model, data-dependent sharpening:
//!   Z/Ẑ ≥ 1 + 1/(12nȲ + 1).
//!
//! Comparisons run in `exp_m1` space (ratio minus one), which keeps
//! full precision near 1, with a uniform absolute slack
//! [`BOUND_SLACK`] so that f64 rounding cannot flip a mathematically
//! satisfied bound.

use serde::{Deserialize, Serialize};

/// Identifier for one of the ratio bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    T2,
    T3,
    T4,
    T4Sharp,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T2 => "t2",
            TheoremId::T3 => "t3",
            TheoremId::T4 => "t4",
            TheoremId::T4Sharp => "t4_sharp",
        }
    }
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Absolute tolerance applied to every bound comparison, far below the
/// smallest analytic margin any of the bounds attains on admissible
/// data (~1e-10) yet far above f64 noise in the ratio (~1e-16).
pub const BOUND_SLACK: f64 = 1e-12;

/// Smallest sample size at which the coin-model upper bound is claimed.
pub const T2_N_MIN_DEFAULT: u64 = 14;

/// Smallest sample size at which the categorical lower bound is claimed.
pub const T3_N_MIN_DEFAULT: u64 = 20;

/// Outcome of testing one bound on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub theorem: TheoremId,
    /// Whether the bound's hypotheses hold for this dataset.
    pub applicable: bool,
    /// The claimed bound on Z/Ẑ (multiplicative).
    pub bound: f64,
    /// The observed ratio Z/Ẑ (multiplicative).
    pub observed: f64,
    /// `None` when not applicable; otherwise whether the observed ratio
    /// respects the bound within [`BOUND_SLACK`].
    pub satisfied: Option<bool>,
}

/// Coin model: with Ȳ ∈ (¼, ¾) strictly and n ≥ `n_min`,
/// Z/Ẑ ≤ 1 − 1/(26n). `log_ratio` is ln(Z/Ẑ).
pub fn check_t2(n: u64, y_bar: f64, log_ratio: f64, n_min: u64) -> BoundCheck {
    let applicable = y_bar > 0.25 && y_bar < 0.75 && n >= n_min;
    let bound_m1 = -1.0 / (26.0 * n as f64);
    let observed_m1 = log_ratio.exp_m1();
    BoundCheck {
        theorem: TheoremId::T2,
        applicable,
        bound: 1.0 + bound_m1,
        observed: 1.0 + observed_m1,
        satisfied: applicable.then_some(observed_m1 <= bound_m1 + BOUND_SLACK),
    }
}

/// Categorical model with k cells: with n ≥ `n_min` and n > 4(k−1),
/// Z/Ẑ ≥ 1 + 1/(5n).
pub fn check_t3(n: u64, k: usize, log_ratio: f64, n_min: u64) -> BoundCheck {
    let applicable = n >= n_min && n > 4 * (k as u64 - 1);
    let bound_m1 = 1.0 / (5.0 * n as f64);
    let observed_m1 = log_ratio.exp_m1();
    BoundCheck {
        theorem: TheoremId::T3,
        applicable,
        bound: 1.0 + bound_m1,
        observed: 1.0 + observed_m1,
        satisfied: applicable.then_some(observed_m1 >= bound_m1 - BOUND_SLACK),
    }
}

/// Count model with true rate λ*: with T = nȲ > 1 and Ȳ ≤ 2λ*,
/// Z/Ẑ ≥ 1 + 1/(26nλ*). `total` is T, kept integral so the
/// applicability test is exact.
pub fn check_t4(n: u64, total: u64, lambda_star: f64, log_ratio: f64) -> BoundCheck {
    let y_bar = total as f64 / n as f64;
    let applicable = total > 1 && y_bar <= 2.0 * lambda_star;
    let bound_m1 = 1.0 / (26.0 * n as f64 * lambda_star);
    let observed_m1 = log_ratio.exp_m1();
    BoundCheck {
        theorem: TheoremId::T4,
        applicable,
        bound: 1.0 + bound_m1,
        observed: 1.0 + observed_m1,
        satisfied: applicable.then_some(observed_m1 >= bound_m1 - BOUND_SLACK),
    }
}

/// Count model, sharpened with the observed total: with T ≥ 1,
/// Z/Ẑ ≥ 1 + 1/(12T + 1). Margins here shrink to ~1e-10 at large T,
/// which is why callers must produce `log_ratio` by a cancellation-free
/// route.
pub fn check_t4_sharp(total: u64, log_ratio: f64) -> BoundCheck {
    let applicable = total >= 1;
    let bound_m1 = 1.0 / (12.0 * total as f64 + 1.0);
    let observed_m1 = log_ratio.exp_m1();
    BoundCheck {
        theorem: TheoremId::T4Sharp,
        applicable,
        bound: 1.0 + bound_m1,
        observed: 1.0 + observed_m1,
        satisfied: applicable.then_some(observed_m1 >= bound_m1 - BOUND_SLACK),
    }
}
