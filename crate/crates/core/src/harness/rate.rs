//! Convergence-rate estimation: regress ln(statistic of |relative
//! error| per n) on ln n. A relative error decaying as c/n produces a
//! slope of −1 with r² near 1; the acceptance window is slope ∈
//! [−1.15, −0.85] with r² ≥ 0.99.
//!
//! The per-n statistic defaults to the median, which is robust to the
//! heavy right tail |relative error| develops near the boundary of the
//! bound-applicability region; the mean and the 90th percentile are
//! available for sensitivity checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numerics::quantile_sorted;
use crate::{Error, Result};

use super::ComparisonRecord;

/// Minimum distinct sample sizes for a meaningful regression.
pub const RATE_MIN_DISTINCT_N: usize = 3;
/// Minimum usable (non-degenerate) records per sample size.
pub const RATE_MIN_PER_N: usize = 30;

/// Per-sample-size aggregate used on the y axis of the rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatistic {
    /// Type-7 median of |rel. error| per n (the default).
    #[default]
    Median,
    /// Arithmetic mean of |rel. error| per n.
    Mean,
    /// Type-7 90th percentile of |rel. error| per n.
    Q90,
}

impl RateStatistic {
    fn apply(self, sorted: &[f64]) -> f64 {
        match self {
            RateStatistic::Median => quantile_sorted(sorted, 0.5),
            RateStatistic::Mean => sorted.iter().sum::<f64>() / sorted.len() as f64,
            RateStatistic::Q90 => quantile_sorted(sorted, 0.9),
        }
    }
}

impl fmt::Display for RateStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateStatistic::Median => "median",
            RateStatistic::Mean => "mean",
            RateStatistic::Q90 => "q90",
        })
    }
}

/// Least-squares fit of ln(statistic of |rel. error|) against ln n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// Which per-n aggregate the fit was computed on.
    pub statistic: RateStatistic,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// (n, statistic of |rel. error|) per distinct sample size, ascending in n.
    pub points: Vec<(u64, f64)>,
}

/// Fits the decay rate from (n, |relative error|) samples. Degenerate
/// records carry no error and must be filtered out by the caller.
pub fn fit_rate(samples: &[(u64, f64)], statistic: RateStatistic) -> Result<RateFit> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(n, abs_err) in samples {
        if n == 0 {
            return Err(Error::InvalidConfig("sample size 0 in rate fit".into()));
        }
        if !abs_err.is_finite() || abs_err < 0.0 {
            return Err(Error::NonFinite(format!(
                "absolute relative error {abs_err} at n = {n}"
            )));
        }
        groups.entry(n).or_default().push(abs_err);
    }
    if groups.len() < RATE_MIN_DISTINCT_N {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least {RATE_MIN_DISTINCT_N} distinct sample sizes, found {}",
            groups.len()
        )));
    }
    if let Some((&n, group)) = groups.iter().find(|(_, g)| g.len() < RATE_MIN_PER_N) {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least {RATE_MIN_PER_N} usable records per sample size, \
found {} at n = {n}",
            group.len()
        )));
    }
    let points: Vec<(u64, f64)> = groups
        .iter_mut()
        .map(|(&n, group)| {
            group.sort_by(|a, b| a.partial_cmp(b).expect("finite by validation"));
            (n, statistic.apply(group))
        })
        .collect();
    if let Some(&(n, value)) = points.iter().find(|&&(_, value)| value <= 0.0) {
        return Err(Error::InsufficientData(format!(
            "{statistic} |relative error| at n = {n} is {value}; its logarithm is undefined"
        )));
    }

    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let mut s_xx = 0.0;
    let mut s_xy = 0.0;
    let mut s_yy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        s_xx += (x - x_bar) * (x - x_bar);
        s_xy += (x - x_bar) * (y - y_bar);
        s_yy += (y - y_bar) * (y - y_bar);
    }
    if s_xx <= 0.0 {
        return Err(Error::InsufficientData(
            "rate fit sample sizes are not spread out".into(),
        ));
    }
    let slope = s_xy / s_xx;
    let intercept = y_bar - slope * x_bar;
    let ss_res = s_yy - slope * s_xy;
    let r_squared = if s_yy > 0.0 {
        (1.0 - ss_res / s_yy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        statistic,
        slope,
        intercept,
        r_squared,
        points,
    })
}

/// Convenience: rate fit over a sweep's non-degenerate records.
pub fn fit_rate_from_records(
    records: &[ComparisonRecord],
    statistic: RateStatistic,
) -> Result<RateFit> {
    let samples: Vec<(u64, f64)> = records
        .iter()
        .filter(|r| !r.degenerate)
        .map(|r| (r.n, r.rel_error_abs))
        .collect();
    fit_rate(&samples, statistic)
}
