//! Monte Carlo sweep harness: sample datasets, score the Laplace
//! estimate against the exact constant, check the finite-sample bounds,
//! and emit deterministic artifacts.
//!
//! Determinism contract: every replicate's RNG is seeded from
//! (base_seed, n, replicate) alone via [`replicate_seed`], work is
//! distributed with rayon, and results are sorted back into (n,
//! replicate) order — so outputs are byte-identical regardless of
//! thread count or scheduling.

mod io;
mod plot;
mod rate;

pub use io::{emit_csv, emit_json, parse_csv, RecordRow, CSV_HEADER};
pub use plot::{emit_plot, floor_coefficient, PlotConfig};
pub use rate::{
    fit_rate, fit_rate_from_records, RateFit, RateStatistic, RATE_MIN_DISTINCT_N, RATE_MIN_PER_N,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_t2, check_t3, check_t4, check_t4_sharp, BoundCheck, TheoremId, T2_N_MIN_DEFAULT,
    T3_N_MIN_DEFAULT,
};
use crate::laplace::laplace_approximate;
use crate::models::{Model, ModelKind, TrueDistribution};
use crate::{Error, Result};

/// Complete description of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: TrueDistribution,
    pub sample_sizes: Vec<u64>,
    pub replicates: u64,
    pub base_seed: u64,
    #[serde(default = "default_t2_n_min")]
    pub t2_n_min: u64,
    #[serde(default = "default_t3_n_min")]
    pub t3_n_min: u64,
}

fn default_t2_n_min() -> u64 {
    T2_N_MIN_DEFAULT
}

fn default_t3_n_min() -> u64 {
    T3_N_MIN_DEFAULT
}

impl ExperimentConfig {
    pub fn new(distribution: TrueDistribution, sample_sizes: Vec<u64>, replicates: u64, base_seed: u64) -> Self {
        ExperimentConfig {
            distribution,
            sample_sizes,
            replicates,
            base_seed,
            t2_n_min: T2_N_MIN_DEFAULT,
            t3_n_min: T3_N_MIN_DEFAULT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig("sample_sizes must not be empty".into()));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::InvalidConfig("sample sizes must be at least 1".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sample_sizes must be strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The RNG seed for one replicate, a pure function of
/// (base_seed, n, replicate) so schedules cannot affect streams.
pub fn replicate_seed(base_seed: u64, n: u64, replicate: u64) -> u64 {
    mix64(mix64(mix64(base_seed) ^ n) ^ replicate)
}

/// One scored dataset.
///
/// Degenerate rows carry NaN in the Laplace and error fields, so the
/// derived `PartialEq` follows IEEE semantics and never equates them;
/// compare via [`RecordRow::same_values`] when NaN-tolerant equality
/// is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub model: ModelKind,
    pub n: u64,
    pub replicate: u64,
    pub seed: u64,
    /// ln Z (always defined).
    pub log_exact: f64,
    /// ln Ẑ from the closed form; NaN when degenerate. This is the
    /// value scored and emitted.
    pub log_laplace: f64,
    /// ln Ẑ recomputed by the generic Newton engine on the same
    /// dataset, so every sweep continuously cross-validates the closed
    /// forms (agreement within 1e-8 on every non-degenerate record is
    /// part of the acceptance gate). NaN when degenerate or when the
    /// mode search fails; a failure is recorded, never fatal.
    pub log_laplace_engine: f64,
    /// Z/Ẑ − 1; NaN when degenerate.
    pub rel_error_signed: f64,
    /// |Z/Ẑ − 1|; NaN when degenerate.
    pub rel_error_abs: f64,
    /// Bound checks for this model (including the sharpened count
    /// bound, which has no CSV column); empty when degenerate.
    pub checks: Vec<BoundCheck>,
    pub degenerate: bool,
}

impl ComparisonRecord {
    pub fn check(&self, id: TheoremId) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.theorem == id)
    }

    /// (applicable, satisfied-or-false) for CSV emission.
    pub(crate) fn flags(&self, id: TheoremId) -> (bool, bool) {
        match self.check(id) {
            Some(c) => (c.applicable, c.satisfied.unwrap_or(false)),
            None => (false, false),
        }
    }
}

fn build_record(
    model: &Model,
    config: &ExperimentConfig,
    n: u64,
    replicate: u64,
    seed: u64,
) -> ComparisonRecord {
    let log_exact = model.log_exact();
    if model.is_degenerate() {
        return ComparisonRecord {
            model: model.kind(),
            n,
            replicate,
            seed,
            log_exact,
            log_laplace: f64::NAN,
            log_laplace_engine: f64::NAN,
            rel_error_signed: f64::NAN,
            rel_error_abs: f64::NAN,
            checks: Vec::new(),
            degenerate: true,
        };
    }
    let log_laplace = model
        .log_laplace_closed()
        .expect("non-degenerate model has a Laplace value");
    let log_laplace_engine = laplace_approximate(model, &model.solver_config())
        .map(|r| r.log_value)
        .unwrap_or(f64::NAN);
    let log_ratio = model
        .log_ratio_closed()
        .expect("non-degenerate model has a ratio");
    let rel = log_ratio.exp_m1();
    let checks = match model {
        Model::Bernoulli(b) => vec![check_t2(b.n(), b.y_bar(), log_ratio, config.t2_n_min)],
        Model::Multinomial(m) => vec![check_t3(m.n(), m.k(), log_ratio, config.t3_n_min)],
        Model::Poisson(p) => {
            let lambda_star = match &config.distribution {
                TrueDistribution::Poisson { lambda_star, .. } => *lambda_star,
                _ => unreachable!("poisson model from poisson distribution"),
            };
            vec![
                check_t4(p.n(), p.total(), lambda_star, log_ratio),
                check_t4_sharp(p.total(), log_ratio),
            ]
        }
    };
    ComparisonRecord {
        model: model.kind(),
        n,
        replicate,
        seed,
        log_exact,
        log_laplace,
        log_laplace_engine,
        rel_error_signed: rel,
        rel_error_abs: rel.abs(),
        checks,
        degenerate: false,
    }
}

/// Runs the full sweep in parallel; the result is sorted by
/// (n, replicate) and is independent of the rayon pool's shape.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ComparisonRecord>> {
    config.validate()?;
    let jobs: Vec<(u64, u64)> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |rep| (n, rep)))
        .collect();
    let mut records = jobs
        .into_par_iter()
        .map(|(n, replicate)| -> Result<ComparisonRecord> {
            let seed = replicate_seed(config.base_seed, n, replicate);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = config.distribution.sample(n, &mut rng)?;
            Ok(build_record(&model, config, n, replicate, seed))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.n, r.replicate));
    Ok(records)
}

/// Violation tally for one bound across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundTally {
    pub theorem: TheoremId,
    pub applicable: u64,
    pub satisfied: u64,
    pub violations: u64,
}

/// Sweep-level bound accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub records: u64,
    pub degenerate: u64,
    pub tallies: Vec<BoundTally>,
    /// (theorem, index into the summarized slice) for every violated
    /// check, so a failing run can print the offending records in full.
    pub violators: Vec<(TheoremId, usize)>,
}

impl BoundSummary {
    pub fn tally(&self, id: TheoremId) -> &BoundTally {
        self.tallies
            .iter()
            .find(|t| t.theorem == id)
            .expect("all four bounds are always tallied")
    }

    pub fn total_violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }
}

pub fn summarize_bounds(records: &[ComparisonRecord]) -> BoundSummary {
    let ids = [TheoremId::T2, TheoremId::T3, TheoremId::T4, TheoremId::T4Sharp];
    let mut tallies: Vec<BoundTally> = ids
        .iter()
        .map(|&theorem| BoundTally {
            theorem,
            applicable: 0,
            satisfied: 0,
            violations: 0,
        })
        .collect();
    let mut degenerate = 0u64;
    let mut violators = Vec::new();
    for (index, record) in records.iter().enumerate() {
        if record.degenerate {
            degenerate += 1;
        }
        for check in &record.checks {
            let slot = tallies
                .iter_mut()
                .find(|t| t.theorem == check.theorem)
                .expect("fixed id set");
            if check.applicable {
                slot.applicable += 1;
                match check.satisfied {
                    Some(true) => slot.satisfied += 1,
                    Some(false) => {
                        slot.violations += 1;
                        violators.push((check.theorem, index));
                    }
                    None => unreachable!("applicable checks always carry a verdict"),
                }
            }
        }
    }
    BoundSummary {
        records: records.len() as u64,
        degenerate,
        tallies,
        violators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_chain_is_deterministic_and_well_spread() {
        assert_eq!(replicate_seed(42, 14, 0), replicate_seed(42, 14, 0));
        let mut seen = std::collections::HashSet::new();
        for base in [0u64, 42] {
            for n in [1u64, 14, 100, 10_000] {
                for rep in 0..50 {
                    assert!(
                        seen.insert(replicate_seed(base, n, rep)),
                        "seed collision at ({base}, {n}, {rep})"
                    );
                }
            }
        }
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::new(
            TrueDistribution::Bernoulli { theta_star: 0.5 },
            vec![2, 14, 50],
            40,
            42,
        )
    }

    /// Record equality that treats the NaN payloads of degenerate rows
    /// as equal (derived PartialEq is NaN-poisoned by design).
    fn assert_same_records(a: &[ComparisonRecord], b: &[ComparisonRecord]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!(
                x.to_row().same_values(&y.to_row()),
                "row mismatch:\n{x:?}\n{y:?}"
            );
            assert_eq!(
                x.log_laplace_engine.to_bits(),
                y.log_laplace_engine.to_bits(),
                "engine value mismatch:\n{x:?}\n{y:?}"
            );
            assert_eq!(x.checks, y.checks);
        }
    }

    #[test]
    fn experiment_is_reproducible_and_sorted() {
        let config = small_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_same_records(&a, &b);
        assert_eq!(a.len(), 3 * 40);
        for w in a.windows(2) {
            assert!((w[0].n, w[0].replicate) < (w[1].n, w[1].replicate));
        }
        for r in &a {
            assert_eq!(r.seed, replicate_seed(42, r.n, r.replicate));
            assert_eq!(r.model, ModelKind::Bernoulli);
            assert!(r.log_exact.is_finite());
            if r.degenerate {
                assert!(r.log_laplace.is_nan());
                assert!(r.log_laplace_engine.is_nan());
                assert!(r.rel_error_signed.is_nan());
                assert!(r.checks.is_empty());
            } else {
                assert!(r.log_laplace.is_finite());
                assert!(r.rel_error_abs >= 0.0);
                assert_eq!(r.checks.len(), 1);
                // The engine solves the same problem the closed form
                // answers; they must agree to mode-finding precision.
                assert!(
                    (r.log_laplace_engine - r.log_laplace).abs() <= 1e-8,
                    "engine {} vs closed {} at n = {}, rep = {}",
                    r.log_laplace_engine,
                    r.log_laplace,
                    r.n,
                    r.replicate
                );
            }
        }
        // At n = 2 with θ* = ½, half of all datasets are degenerate in
        // expectation; 40 replicates make at least one overwhelmingly
        // likely, and none should appear at n = 50.
        assert!(a.iter().filter(|r| r.n == 2).any(|r| r.degenerate));
        assert!(a.iter().filter(|r| r.n == 50).all(|r| !r.degenerate));
    }

    #[test]
    fn experiment_is_thread_count_invariant() {
        let config = small_config();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&config).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_experiment(&config).unwrap());
        assert_same_records(&single, &four);
        // The emitted bytes — the actual artifact — must also agree.
        let mut csv_single = Vec::new();
        let mut csv_four = Vec::new();
        emit_csv(&single, &mut csv_single).unwrap();
        emit_csv(&four, &mut csv_four).unwrap();
        assert_eq!(csv_single, csv_four);
    }

    #[test]
    fn config_validation() {
        let mut config = small_config();
        config.sample_sizes.clear();
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.sample_sizes.push(0);
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.replicates = 0;
        assert!(config.validate().is_err());
        // Sample sizes must climb strictly: duplicates and disorder are
        // configuration mistakes, not orderings to silently repair.
        let mut config = small_config();
        config.sample_sizes = vec![14, 14, 50];
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.sample_sizes = vec![50, 14];
        assert!(config.validate().is_err());
        assert!(small_config().validate().is_ok());
    }

    #[test]
    fn config_json_round_trip_and_unknown_field_rejection() {
        let config = small_config();
        let json = serde_json::to_string(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(config, back);
        // Defaults fill in the bound gates.
        let partial = r#"{
            "distribution": {"model": "bernoulli", "theta_star": 0.5},
            "sample_sizes": [14],
            "replicates": 2,
            "base_seed": 1
        }"#;
        let parsed: ExperimentConfig = serde_json::from_str(partial).unwrap();
        assert_eq!(parsed.t2_n_min, T2_N_MIN_DEFAULT);
        assert_eq!(parsed.t3_n_min, T3_N_MIN_DEFAULT);
        // Unknown keys are configuration mistakes, not extensions.
        let bad = r#"{
            "distribution": {"model": "bernoulli", "theta_star": 0.5},
            "sample_sizes": [14],
            "replicates": 2,
            "base_seed": 1,
            "replicas": 3
        }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn bound_summary_tallies() {
        let config = ExperimentConfig::new(
            TrueDistribution::Poisson {
                lambda_star: 1.0,
                theta: 1.0,
            },
            vec![10],
            30,
            7,
        );
        let records = run_experiment(&config).unwrap();
        let summary = summarize_bounds(&records);
        assert_eq!(summary.records, 30);
        let t4 = summary.tally(TheoremId::T4);
        assert_eq!(t4.applicable, t4.satisfied + t4.violations);
        assert!(t4.applicable > 0);
        let sharp = summary.tally(TheoremId::T4Sharp);
        assert!(sharp.applicable >= t4.applicable);
        assert_eq!(summary.tally(TheoremId::T2).applicable, 0);
        assert_eq!(summary.total_violations(), 0);
        assert!(summary.violators.is_empty());
    }
}
