//! Adaptive Gauss–Kronrod quadrature of log-space integrands.
//!
//! Serves as an oracle that is independent of both the conjugate closed
//! forms and the Laplace machinery: callers hand over ln f(x) and get
//! back ln ∫ f, computed by shifting to exp(ln f − max) and refining the
//! worst segment until the absolute-error estimate drops under
//! `rel_tol` times the integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// 15-point Kronrod abscissae on [−1, 1] (positive half; symmetric).
/// Odd indices together with 0 are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.99145537112081261,
    0.94910791234275849,
    0.8648644233597691,
    0.74153118559939446,
    0.58608723546769115,
    0.40584515137739718,
    0.20778495500789848,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224,
    0.063092092629978558,
    0.10479001032225019,
    0.14065325971552592,
    0.16900472663926791,
    0.19035057806478542,
    0.20443294007529889,
    0.20948214108472782,
];

const WG: [f64; 4] = [
    0.1294849661688697,
    0.27970539148927664,
    0.38183005050511892,
    0.4179591836734694,
];

/// Segment budget for one adaptive integral.
const MAX_SEGMENTS: usize = 4096;

/// Interior sample count used to locate the integrand's peak for the
/// exponential shift.
const COARSE_SCAN: usize = 129;

/// Domain-expansion stops once the log integrand has fallen this far
/// below its reference value; e^{−240} is ~1e-105, so the clipped tails
/// are irrecoverably below every tolerance used here.
const LOG_DROP: f64 = 240.0;

struct Segment {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // err values are checked finite, so this never sees NaN.
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// One Gauss–Kronrod 7–15 pass over [a, b]: returns (K15 value,
/// |K15 − G7| error estimate).
fn gk15<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center);
    if !fc.is_finite() {
        return Err(Error::NonFinite(format!("integrand at {center} is {fc}")));
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate().take(7) {
        let dx = half * x;
        let f1 = g(center - dx);
        let f2 = g(center + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(Error::NonFinite(format!(
                "integrand near {center} is not finite"
            )));
        }
        kronrod += wk * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, (kronrod - gauss).abs() * half))
}

/// ln ∫ₐᵇ exp(log_f(x)) dx over a finite interval.
///
/// The peak is located by a coarse interior scan; the interval is
/// seeded split at the scan argmax so refinement zooms onto narrow
/// peaks. Fails with [`Error::ToleranceNotMet`] when the segment budget
/// runs out first.
pub fn log_integrate_interval<F>(log_f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidConfig(format!(
            "integration interval [{a}, {b}] is not a finite ordered pair"
        )));
    }
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "rel_tol must be a positive finite number, got {rel_tol}"
        )));
    }

    // Peak scan at interior points (the endpoints may sit on the
    // boundary of the integrand's domain and are never evaluated).
    let mut shift = f64::NEG_INFINITY;
    let mut argmax = 0.5 * (a + b);
    for i in 1..=COARSE_SCAN {
        let x = a + (b - a) * i as f64 / (COARSE_SCAN + 1) as f64;
        let v = log_f(x);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::NonFinite(format!("log integrand at {x} is {v}")));
        }
        if v > shift {
            shift = v;
            argmax = x;
        }
    }
    if shift == f64::NEG_INFINITY {
        return Err(Error::Domain(
            "integrand vanishes at every scanned point".into(),
        ));
    }

    let g = |x: f64| (log_f(x) - shift).exp();

    let mut heap = BinaryHeap::new();
    let mut total_val = 0.0;
    let mut total_err = 0.0;
    let push = |heap: &mut BinaryHeap<Segment>,
                total_val: &mut f64,
                total_err: &mut f64,
                a: f64,
                b: f64|
     -> Result<()> {
        let (val, err) = gk15(&g, a, b)?;
        *total_val += val;
        *total_err += err;
        heap.push(Segment { a, b, val, err });
        Ok(())
    };

    push(&mut heap, &mut total_val, &mut total_err, a, argmax)?;
    push(&mut heap, &mut total_val, &mut total_err, argmax, b)?;

    loop {
        if total_val > 0.0 && total_err <= rel_tol * total_val {
            return Ok(shift + total_val.ln());
        }
        if heap.len() >= MAX_SEGMENTS {
            let rel_err = if total_val > 0.0 {
                total_err / total_val
            } else {
                f64::INFINITY
            };
            return Err(Error::ToleranceNotMet { rel_err });
        }
        let worst = heap.pop().expect("heap seeded with two segments");
        total_val -= worst.val;
        total_err -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        push(&mut heap, &mut total_val, &mut total_err, worst.a, mid)?;
        push(&mut heap, &mut total_val, &mut total_err, mid, worst.b)?;
    }
}

/// Doubles a half-width until `log_f(center ± w)` has dropped
/// [`LOG_DROP`] below the reference value; direction is +1 or −1.
fn expand_side<F: Fn(f64) -> f64>(
    log_f: &F,
    center: f64,
    reference: f64,
    direction: f64,
) -> Result<f64> {
    let mut w = 1.0;
    loop {
        let v = log_f(center + direction * w);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::NonFinite(format!(
                "log integrand at {} is {v}",
                center + direction * w
            )));
        }
        if v <= reference - LOG_DROP {
            return Ok(w);
        }
        w *= 2.0;
        if w > 1e18 {
            return Err(Error::Domain(
                "log integrand does not decay away from the center".into(),
            ));
        }
    }
}

/// ln ∫_ℝ exp(log_f(x)) dx for an integrand that decays in both
/// directions; `center` should sit near the peak.
pub fn log_integrate_line<F>(log_f: F, center: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m0 = log_f(center);
    if !m0.is_finite() {
        return Err(Error::NonFinite(format!(
            "log integrand at the center {center} is {m0}"
        )));
    }
    let w_lo = expand_side(&log_f, center, m0, -1.0)?;
    let w_hi = expand_side(&log_f, center, m0, 1.0)?;
    log_integrate_interval(log_f, center - w_lo, center + w_hi, rel_tol)
}

/// ln ∫₀^∞ exp(log_f(x)) dx; `center` must be a positive point near the
/// peak. The upper limit doubles until the integrand has decayed; zero
/// is a hard boundary and is never evaluated.
pub fn log_integrate_positive<F>(log_f: F, center: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(center > 0.0 && center.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "center must be positive and finite, got {center}"
        )));
    }
    let m0 = log_f(center);
    if !m0.is_finite() {
        return Err(Error::NonFinite(format!(
            "log integrand at the center {center} is {m0}"
        )));
    }
    let mut upper = (2.0 * center).max(1.0);
    loop {
        let v = log_f(upper);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::NonFinite(format!("log integrand at {upper} is {v}")));
        }
        if v <= m0 - LOG_DROP {
            break;
        }
        upper *= 2.0;
        if upper > 1e18 {
            return Err(Error::Domain(
                "log integrand does not decay toward +infinity".into(),
            ));
        }
    }
    log_integrate_interval(log_f, 0.0, upper, rel_tol)
}

/// ln ∫∫_ℝ² exp(log_f(u₁, u₂)) du by iterated 1-D quadrature.
///
/// The caller is expected to have centered and roughly whitened the
/// integrand so the peak is near the origin and the axes are weakly
/// coupled (e.g. via a Cholesky change of variables, folding the
/// constant Jacobian into `log_f`). The outer range comes from the
/// axis slice through the origin, inflated 1.5× to cover marginals
/// that are wider than the slice. An inner-integral failure surfaces
/// as [`Error::NonFinite`].
pub fn log_integrate_plane<F>(log_f: F, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let m0 = log_f(0.0, 0.0);
    if !m0.is_finite() {
        return Err(Error::NonFinite(format!(
            "log integrand at the origin is {m0}"
        )));
    }
    let slice = |u1: f64| log_f(u1, 0.0);
    let w_lo = 1.5 * expand_side(&slice, 0.0, m0, -1.0)?;
    let w_hi = 1.5 * expand_side(&slice, 0.0, m0, 1.0)?;
    let inner_tol = rel_tol / 30.0;
    let outer = |u1: f64| {
        log_integrate_line(|u2| log_f(u1, u2), 0.0, inner_tol).unwrap_or(f64::NAN)
    };
    log_integrate_interval(outer, -w_lo, w_hi, rel_tol / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::LN_2PI;

    #[test]
    fn gaussian_integrals_are_recovered() {
        // ∫exp(−x²/(2σ²)) = σ√(2π), integrated over a generous interval.
        for sigma in [0.3, 1.0, 4.0] {
            let lf = move |x: f64| -0.5 * x * x / (sigma * sigma);
            let expected = 0.5 * LN_2PI + sigma.ln();
            let got = log_integrate_interval(lf, -40.0 * sigma, 40.0 * sigma, 1e-10).unwrap();
            assert!(
                (got - expected).abs() < 1e-9,
                "sigma {sigma}: {got} vs {expected}"
            );
            let got = log_integrate_line(lf, 0.0, 1e-10).unwrap();
            assert!((got - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn offcenter_narrow_peak_is_found() {
        // Peak at 3.7 with σ = 0.01 inside [0, 100]: the coarse scan and
        // argmax seeding must locate it.
        let lf = |x: f64| -0.5 * (x - 3.7) * (x - 3.7) / 1e-4;
        let expected = 0.5 * LN_2PI + 0.01f64.ln();
        let got = log_integrate_interval(lf, 0.0, 100.0, 1e-9).unwrap();
        assert!((got - expected).abs() < 1e-7, "{got} vs {expected}");
    }

    #[test]
    fn gamma_integral_on_half_line() {
        // ∫₀^∞ ω⁵ e^{−2ω} dω = Γ(6)/2⁶ = 1.875.
        let lf = |w: f64| 5.0 * w.ln() - 2.0 * w;
        let got = log_integrate_positive(lf, 2.5, 1e-10).unwrap();
        assert!((got - 1.875f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn plane_recovers_correlated_gaussian() {
        // ∫∫ exp(−½(2x² + xy + y²)) = 2π/√1.75.
        let lf = |x: f64, y: f64| -0.5 * (2.0 * x * x + x * y + y * y);
        let expected = LN_2PI - 0.5 * 1.75f64.ln();
        let got = log_integrate_plane(lf, 1e-8).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn interval_validation_and_failure_modes() {
        let lf = |x: f64| -x * x;
        assert!(matches!(
            log_integrate_interval(lf, 1.0, 1.0, 1e-8),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            log_integrate_interval(lf, 0.0, 1.0, 0.0),
            Err(Error::InvalidConfig(_))
        ));
        // NaN integrand is reported, not propagated silently.
        let bad = |_: f64| f64::NAN;
        assert!(matches!(
            log_integrate_interval(bad, 0.0, 1.0, 1e-8),
            Err(Error::NonFinite(_))
        ));
        // A flat integrand never decays, so line expansion must refuse.
        let flat = |_: f64| 0.0;
        assert!(matches!(
            log_integrate_line(flat, 0.0, 1e-8),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            log_integrate_positive(flat, 1.0, 1e-8),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            log_integrate_positive(lf, -1.0, 1e-8),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn budget_exhaustion_reports_tolerance_failure() {
        // Deterministic bit-hash jitter of size ~1e-8 is irreducible:
        // refinement never drives |K15 − G7| below the noise floor, so a
        // 1e-12 tolerance must exhaust the budget and say so.
        let noisy = |x: f64| {
            let bits = x.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
            1e-8 * (bits >> 11) as f64 / (1u64 << 53) as f64
        };
        match log_integrate_interval(noisy, 0.0, 1.0, 1e-12) {
            Err(Error::ToleranceNotMet { rel_err }) => {
                assert!(rel_err > 1e-12 && rel_err < 1e-6, "rel_err {rel_err:e}");
            }
            other => panic!("expected ToleranceNotMet, got {other:?}"),
        }
    }
}
