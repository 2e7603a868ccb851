//! Log-domain scalars and the special functions the reference models
//! lean on: `ln Γ`, factorial brackets, and stencil derivatives for
//! cross-checking analytic gradients.

use crate::{Error, Result};

/// ln(2π).
pub const LN_2PI: f64 = 1.837877066409345483560659472811;

/// A real number stored as `sign · exp(log_abs)`.
///
/// Normalizing constants and their ratios routinely escape the dynamic
/// range of `f64`; keeping them in signed log form makes products and
/// quotients safe and order comparisons cheap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    /// Builds from an explicit sign in {-1, 0, +1} and ln|x|.
    pub fn new(sign: i8, log_abs: f64) -> Result<Self> {
        if !matches!(sign, -1..=1) {
            return Err(Error::Domain(format!("sign must be -1, 0, or 1, got {sign}")));
        }
        if log_abs.is_nan() {
            return Err(Error::Domain("log_abs must not be NaN".into()));
        }
        if sign == 0 {
            return Ok(Self::ZERO);
        }
        Ok(LogValue { sign, log_abs })
    }

    /// A positive value given directly as its natural log.
    pub fn from_log(log_abs: f64) -> Self {
        debug_assert!(!log_abs.is_nan());
        LogValue { sign: 1, log_abs }
    }

    pub fn from_real(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::Domain("cannot represent NaN".into()));
        }
        if x == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(LogValue {
            sign: if x > 0.0 { 1 } else { -1 },
            log_abs: x.abs().ln(),
        })
    }

    /// Round trip back to `f64`; may overflow to ±inf or underflow to ±0.
    pub fn to_real(self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// ln|x|; −inf for zero.
    pub fn log_abs(self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        LogValue {
            sign: self.sign.abs(),
            log_abs: self.log_abs,
        }
    }

    /// Division that surfaces a zero divisor as an error.
    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.sign == 0 {
            return Err(Error::Domain("division by zero".into()));
        }
        if self.sign == 0 {
            return Ok(Self::ZERO);
        }
        Ok(LogValue {
            sign: self.sign * rhs.sign,
            log_abs: self.log_abs - rhs.log_abs,
        })
    }
}

impl std::ops::Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: Self) -> Self {
        let sign = self.sign * rhs.sign;
        if sign == 0 {
            return Self::ZERO;
        }
        LogValue {
            sign,
            log_abs: self.log_abs + rhs.log_abs,
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return Some(ord),
        }
        match self.sign {
            0 => Some(Ordering::Equal),
            1 => self.log_abs.partial_cmp(&other.log_abs),
            _ => other.log_abs.partial_cmp(&self.log_abs),
        }
    }
}

const STIRLING_CUTOFF: f64 = 10.0;

/// B_{2m}/(2m(2m−1)) for m = 2..=8; the m = 1 term 1/12 is kept separate
/// so callers can work with the tail alone.
const STIRLING_TAIL: [f64; 7] = [
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

fn stirling_base(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + 0.5 * LN_2PI
}

/// Σ_{m≥2} B_{2m}/(2m(2m−1)x^{2m−1}); truncation below 2e-18 for x ≥ 10.
pub(crate) fn stirling_series_tail(x: f64) -> f64 {
    let w = 1.0 / (x * x);
    let mut s = 0.0;
    for &c in STIRLING_TAIL.iter().rev() {
        s = s * w + c;
    }
    s * w / x
}

/// Full Stirling correction ln Γ(x) − [(x−½)ln x − x + ½ln 2π] for x ≥ 10.
pub(crate) fn stirling_series(x: f64) -> f64 {
    1.0 / (12.0 * x) + stirling_series_tail(x)
}

/// Type-7 quantile (linear interpolation) of pre-sorted values.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let w = h - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Natural log of Γ(x) for x > 0.
///
/// Stirling series for x ≥ 10, recurrence shift below that. Relative
/// accuracy is a few ulps; the test suite pins it against exact
/// factorials through 170! and half-integer identities.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(lgamma(x))
}

/// `log_gamma` for callers that have already validated x > 0.
pub(crate) fn lgamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x >= STIRLING_CUTOFF {
        return stirling_base(x) + stirling_series(x);
    }
    // ln Γ(x) = ln Γ(x+m) − Σ_{i<m} ln(x+i), shifting into the series range.
    let mut shift = 0.0;
    let mut y = x;
    while y < STIRLING_CUTOFF {
        shift += y.ln();
        y += 1.0;
    }
    stirling_base(y) + stirling_series(y) - shift
}

const LN_FACTORIAL_TABLE: usize = 1024;

fn ln_factorial_table() -> &'static [f64; LN_FACTORIAL_TABLE] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; LN_FACTORIAL_TABLE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; LN_FACTORIAL_TABLE];
        for (m, slot) in t.iter_mut().enumerate().skip(2) {
            *slot = lgamma(m as f64 + 1.0);
        }
        t
    })
}

/// ln(m!) = ln Γ(m+1), table-backed for small m.
pub fn ln_factorial(m: u64) -> f64 {
    if (m as usize) < LN_FACTORIAL_TABLE {
        ln_factorial_table()[m as usize]
    } else {
        lgamma(m as f64 + 1.0)
    }
}

/// Two-sided factorial bracket for integer q ≥ 1, in log form:
/// √(2πq)(q/e)^q e^{1/(12q+1)} < Γ(q+1) < √(2πq)(q/e)^q e^{1/(12q)}.
#[derive(Debug, Clone, Copy)]
pub struct RobbinsBracket {
    pub q: u64,
    pub lower: LogValue,
    pub upper: LogValue,
}

fn robbins_base(q: f64) -> f64 {
    (q + 0.5) * q.ln() - q + 0.5 * LN_2PI
}

pub fn robbins_bracket(q: u64) -> Result<RobbinsBracket> {
    if q == 0 {
        return Err(Error::Domain("robbins_bracket needs q >= 1".into()));
    }
    let qf = q as f64;
    let base = robbins_base(qf);
    Ok(RobbinsBracket {
        q,
        lower: LogValue::from_log(base + 1.0 / (12.0 * qf + 1.0)),
        upper: LogValue::from_log(base + 1.0 / (12.0 * qf)),
    })
}

/// Distances (ln Γ(q+1) − ln lower, ln upper − ln Γ(q+1)) of the bracket.
///
/// Both gaps must be strictly positive. For large q the upper gap is
/// ~1/(360q³), far below the rounding granularity of log values of size
/// q·ln q, so the gaps are evaluated from the Stirling correction terms
/// themselves instead of by subtracting the assembled logs (which would
/// quantize to whole ulps and lose the comparison).
pub fn robbins_margins(q: u64) -> Result<(f64, f64)> {
    if q == 0 {
        return Err(Error::Domain("robbins_margins needs q >= 1".into()));
    }
    let qf = q as f64;
    if qf >= STIRLING_CUTOFF {
        // ln Γ(q+1) − robbins_base(q) = stirling_series(q) exactly, so the
        // gaps reduce to small-number arithmetic:
        //   lower gap = [1/(12q) − 1/(12q+1)] + tail(q),
        //   upper gap = −tail(q),
        // with 1/(12q) − 1/(12q+1) expanded analytically to dodge
        // cancellation.
        let tail = stirling_series_tail(qf);
        let twelve = 12.0 * qf;
        let lower_gap = 1.0 / (twelve * (twelve + 1.0)) + tail;
        Ok((lower_gap, -tail))
    } else {
        let s = lgamma(qf + 1.0) - robbins_base(qf);
        Ok((s - 1.0 / (12.0 * qf + 1.0), 1.0 / (12.0 * qf) - s))
    }
}

/// exp(log_a − log_b) − 1 without forming either operand; this is the
/// signed relative error of b as an estimate of a when both are logs of
/// positive quantities.
pub fn log_expm1_ratio(log_a: f64, log_b: f64) -> f64 {
    (log_a - log_b).exp_m1()
}

/// Per-order step shrink factors; higher orders need wider stencils to
/// keep roundoff amplification in check, lower orders shrink further for
/// truncation.
const SHRINK: [f64; 5] = [0.0, 0.05, 0.25, 0.4, 0.5];

/// Offsets (in units of h) and weights of the 1-D central stencils with
/// O(h²) truncation, per derivative order.
fn stencil(order: usize) -> &'static [(f64, f64)] {
    match order {
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        4 => &[(-2.0, 1.0), (-1.0, -4.0), (0.0, 6.0), (1.0, -4.0), (2.0, 1.0)],
        _ => unreachable!("order validated by caller"),
    }
}

/// Central-difference estimate of the mixed partial ∂^α f(x), where
/// `multi_index` is α (one entry per coordinate, total order 1..=4).
///
/// Per-axis steps are fixed by the scale rule
/// h_i = max(1e-2, 1e-1·|x_i|) · shrink(order); every stencil used has
/// truncation O(h²). Mixed partials are tensor products of the 1-D
/// stencils.
pub fn central_difference<F>(f: F, x: &[f64], multi_index: &[usize]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if multi_index.len() != x.len() {
        return Err(Error::InvalidConfig(format!(
            "multi-index length {} does not match point dimension {}",
            multi_index.len(),
            x.len()
        )));
    }
    let order: usize = multi_index.iter().sum();
    if order == 0 || order > 4 {
        return Err(Error::Domain(format!(
            "derivative order must be in 1..=4, got {order}"
        )));
    }
    let shrink = SHRINK[order];
    let axes: Vec<usize> = (0..x.len()).filter(|&i| multi_index[i] > 0).collect();
    let mut denom = 1.0;
    let mut steps = vec![0.0; x.len()];
    for &i in &axes {
        let h = (1e-2f64).max(1e-1 * x[i].abs()) * shrink;
        steps[i] = h;
        denom *= h.powi(multi_index[i] as i32);
    }

    // The recursion threads its full state explicitly; bundling it
    // into a context struct would only obscure the stencil walk.
    #[allow(clippy::too_many_arguments)]
    fn accumulate<F: Fn(&[f64]) -> f64>(
        f: &F,
        x: &[f64],
        steps: &[f64],
        multi_index: &[usize],
        axes: &[usize],
        point: &mut Vec<f64>,
        coeff: f64,
        depth: usize,
    ) -> Result<f64> {
        if depth == axes.len() {
            let v = f(point);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "stencil evaluation at {point:?} is not finite"
                )));
            }
            return Ok(coeff * v);
        }
        let axis = axes[depth];
        let mut sum = 0.0;
        for &(off, w) in stencil(multi_index[axis]) {
            point[axis] = x[axis] + off * steps[axis];
            sum += accumulate(f, x, steps, multi_index, axes, point, coeff * w, depth + 1)?;
        }
        point[axis] = x[axis];
        Ok(sum)
    }

    let mut point = x.to_vec();
    let sum = accumulate(&f, x, &steps, multi_index, &axes, &mut point, 1.0, 0)?;
    Ok(sum / denom)
}
