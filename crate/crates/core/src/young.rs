//! Young functions normalized to `φ(0) = 0`, `φ(1) = 1`, their inverses, and the
//! growth predicates the chaining certificates are conditioned on.
//!
//! Three families are supported:
//!
//! | kind | `φ(x)` |
//! |------|--------|
//! | power | `x^p`, `p ≥ 1` |
//! | exponential | `(exp(x^q) − 1)/(e − 1)`, `q ≥ 1` |
//! | piecewise-linear | interpolation of a convex knot list through `(0,0)` and `(1,1)` |
//!
//! Growth checks along the geometric grid `R^k` are evaluated in log-space for the
//! closed-form kinds so large levels do not overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const E_MINUS_ONE: f64 = std::f64::consts::E - 1.0;
const REL_SLACK: f64 = 1e-12;

/// Anything that can serve as the gauge of an Orlicz norm.
pub trait Gauge {
    /// Value at `x ≥ 0`. Callers pass absolute values.
    fn value(&self, x: f64) -> f64;

    /// Largest `x` with `value(x) ≤ y`, used to bracket norm searches.
    fn upper_inverse(&self, y: f64) -> f64;
}

/// Serialized description: `{kind, parameter(s)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YoungSpec {
    Power { p: f64 },
    Exponential { q: f64 },
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "YoungSpec", into = "YoungSpec")]
pub struct YoungFunction {
    kind: Kind,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Power(f64),
    Exponential(f64),
    Piecewise { knots: Vec<(f64, f64)>, tail_slope: f64 },
}

impl TryFrom<YoungSpec> for YoungFunction {
    type Error = Error;

    fn try_from(spec: YoungSpec) -> Result<Self> {
        match spec {
            YoungSpec::Power { p } => Self::power(p),
            YoungSpec::Exponential { q } => Self::exponential(q),
            YoungSpec::PiecewiseLinear { knots } => Self::piecewise_linear(knots),
        }
    }
}

impl From<YoungFunction> for YoungSpec {
    fn from(f: YoungFunction) -> Self {
        match f.kind {
            Kind::Power(p) => YoungSpec::Power { p },
            Kind::Exponential(q) => YoungSpec::Exponential { q },
            Kind::Piecewise { knots, .. } => YoungSpec::PiecewiseLinear { knots },
        }
    }
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidYoung(format!("power exponent must be >= 1, got {p}")));
        }
        Ok(Self { kind: Kind::Power(p) })
    }

    pub fn exponential(q: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidYoung(format!("exponential exponent must be >= 1, got {q}")));
        }
        Ok(Self { kind: Kind::Exponential(q) })
    }

    /// Knots must be strictly increasing in `x`, start at `(0,0)`, pass through `(1,1)`,
    /// and have nondecreasing slopes. Beyond the last knot the last slope is continued.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidYoung(format!("piecewise-linear: {msg}")));
        if knots.len() < 2 {
            return bad("need at least two knots");
        }
        if knots.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return bad("knots must be finite");
        }
        if knots[0] != (0.0, 0.0) {
            return bad("first knot must be (0, 0)");
        }
        if !knots.contains(&(1.0, 1.0)) {
            return bad("knot (1, 1) is mandatory");
        }
        let mut last_slope = 0.0_f64;
        for w in knots.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x1 <= x0 {
                return bad("knot abscissae must be strictly increasing");
            }
            if y1 < y0 {
                return bad("values must be nondecreasing");
            }
            let slope = (y1 - y0) / (x1 - x0);
            if slope < last_slope * (1.0 - REL_SLACK) - REL_SLACK {
                return bad("slopes must be nondecreasing (convexity)");
            }
            last_slope = last_slope.max(slope);
        }
        if last_slope <= 0.0 {
            return bad("last segment must be increasing");
        }
        Ok(Self { kind: Kind::Piecewise { knots, tail_slope: last_slope } })
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.kind, Kind::Piecewise { .. })
    }

    /// Exponent of a power function, if this is one.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power(p) => Some(p),
            _ => None,
        }
    }

    pub fn exponential_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Exponential(q) => Some(q),
            _ => None,
        }
    }

    pub fn spec(&self) -> YoungSpec {
        self.clone().into()
    }

    /// Checked evaluation; rejects negative input.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeArgument(x));
        }
        Ok(self.value(x))
    }

    pub fn value(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "Young function evaluated at {x}");
        match &self.kind {
            Kind::Power(p) => {
                if *p == 1.0 {
                    x
                } else if *p == 2.0 {
                    x * x
                } else {
                    x.powf(*p)
                }
            }
            Kind::Exponential(q) => x.powf(*q).exp_m1() / E_MINUS_ONE,
            Kind::Piecewise { knots, tail_slope } => {
                let i = knots.partition_point(|&(kx, _)| kx <= x);
                if i >= knots.len() {
                    let (lx, ly) = knots[knots.len() - 1];
                    ly + tail_slope * (x - lx)
                } else {
                    let (x0, y0) = knots[i - 1];
                    let (x1, y1) = knots[i];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Smallest `x ≥ 0` with `φ(x) = y`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power(p) => {
                if *p == 1.0 {
                    y
                } else if *p == 2.0 {
                    y.sqrt()
                } else {
                    y.powf(1.0 / p)
                }
            }
            Kind::Exponential(q) => (y * E_MINUS_ONE).ln_1p().powf(1.0 / q),
            Kind::Piecewise { knots, tail_slope } => {
                let i = knots.partition_point(|&(_, ky)| ky < y);
                if i >= knots.len() {
                    let (lx, ly) = knots[knots.len() - 1];
                    lx + (y - ly) / tail_slope
                } else {
                    let (x0, y0) = knots[i - 1];
                    let (x1, y1) = knots[i];
                    x0 + (x1 - x0) * (y - y0) / (y1 - y0)
                }
            }
        }
    }

    /// `ln φ(x)` for `x = exp(ln_x)`, finite wherever the log is representable.
    pub fn ln_value_at_ln(&self, ln_x: f64) -> f64 {
        match &self.kind {
            Kind::Power(p) => p * ln_x,
            Kind::Exponential(q) => {
                let t = (q * ln_x).exp();
                let ln_num = if t < 30.0 { t.exp_m1().ln() } else { t + (-(-t).exp()).ln_1p() };
                ln_num - E_MINUS_ONE.ln()
            }
            Kind::Piecewise { .. } => self.value(ln_x.exp()).ln(),
        }
    }

    /// `ln φ(R^k)`.
    pub fn ln_at_level(&self, ratio: f64, k: i64) -> f64 {
        self.ln_value_at_ln(k as f64 * ratio.ln())
    }

    /// `ln(φ(R^k) − 1)`; only meaningful where `φ(R^k) > 1`.
    pub fn ln_shifted_at_level(&self, ratio: f64, k: i64) -> f64 {
        let l = self.ln_at_level(ratio, k);
        l + (-(-l).exp()).ln_1p()
    }

    fn last_knot(&self) -> Option<f64> {
        match &self.kind {
            Kind::Piecewise { knots, .. } => knots.last().map(|k| k.0),
            _ => None,
        }
    }
}

impl Gauge for YoungFunction {
    fn value(&self, x: f64) -> f64 {
        YoungFunction::value(self, x)
    }

    fn upper_inverse(&self, y: f64) -> f64 {
        self.inverse(y)
    }
}

/// `x ↦ (φ(x) − 1)₊`, the shifted gauge of a Young function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexGauge {
    pub base: YoungFunction,
}

impl ConvexGauge {
    pub fn new(base: YoungFunction) -> Self {
        Self { base }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.base.value(x) - 1.0).max(0.0)
    }

    /// Generalized inverse: 0 for `y ≤ 0`, otherwise the unique `x > 1` with `φ(x) = 1 + y`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            self.base.inverse(1.0 + y)
        }
    }

    /// The threshold inverse used by the Hölder modulus: `inf{x : φ(x) ≥ 1 + y}`,
    /// which equals 1 at `y = 0`.
    pub fn modulus_inverse(&self, y: f64) -> f64 {
        self.base.inverse(1.0 + y.max(0.0))
    }
}

impl Gauge for ConvexGauge {
    fn value(&self, x: f64) -> f64 {
        ConvexGauge::value(self, x)
    }

    fn upper_inverse(&self, y: f64) -> f64 {
        self.base.inverse(1.0 + y.max(0.0))
    }
}

/// Ratio base, shift index and the ∇' parameters the theorems are stated with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub ratio: f64,
    pub shift: u32,
    pub nabla_multiplier: f64,
    pub nabla_threshold: f64,
}

impl GrowthParams {
    pub fn new(ratio: f64, shift: u32, nabla_multiplier: f64, nabla_threshold: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::InvalidParameter(format!("R must be > 1, got {ratio}")));
        }
        if shift < 1 {
            return Err(Error::InvalidParameter("n0 must be >= 1".into()));
        }
        Ok(Self { ratio, shift, nabla_multiplier, nabla_threshold })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiauCheck {
    pub holds: bool,
    pub first_violation: Option<usize>,
    /// Last level inspected (after the piecewise cap).
    pub checked_up_to: usize,
}

/// Ratio chain `φ(R^k)/φ(R^{k+1}) ≤ φ(R^{k−1})/φ(R^k)` for `1 ≤ k ≤ kmax`.
pub fn check_miau(phi: &YoungFunction, ratio: f64, kmax: usize) -> Result<MiauCheck> {
    if !(ratio > 1.0) {
        return Err(Error::InvalidParameter(format!("R must be > 1, got {ratio}")));
    }
    if kmax < 1 {
        return Err(Error::InvalidParameter("kmax must be >= 1".into()));
    }
    let mut limit = kmax;
    if let Some(last) = phi.last_knot() {
        let mut k = 1;
        while ratio.powi(k as i32) <= last {
            k += 1;
        }
        limit = limit.min(k);
    }
    for k in 1..=limit {
        let k_i = k as i64;
        let mid = 2.0 * phi.ln_at_level(ratio, k_i);
        let outer = phi.ln_at_level(ratio, k_i + 1) + phi.ln_at_level(ratio, k_i - 1);
        if !mid.is_finite() || !outer.is_finite() {
            return Err(Error::Overflow(k));
        }
        let slack = REL_SLACK * mid.abs().max(outer.abs()).max(1.0);
        if mid > outer + slack {
            return Ok(MiauCheck { holds: false, first_violation: Some(k), checked_up_to: limit });
        }
    }
    Ok(MiauCheck { holds: true, first_violation: None, checked_up_to: limit })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NablaCheck {
    pub holds: bool,
    pub violation: Option<(f64, f64)>,
}

/// `φ(x)φ(y) ≤ φ(r·x·y)` on the supplied grid (every coordinate must be `≥ c`).
pub fn check_nabla_prime(phi: &YoungFunction, r: f64, c: f64, grid: &[(f64, f64)]) -> Result<NablaCheck> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("multiplier must be positive, got {r}")));
    }
    for &(x, y) in grid {
        if x < c || y < c {
            return Err(Error::InvalidParameter(format!("grid point ({x}, {y}) below threshold {c}")));
        }
        if x == 0.0 || y == 0.0 {
            continue;
        }
        let lhs = phi.ln_value_at_ln(x.ln()) + phi.ln_value_at_ln(y.ln());
        let rhs = phi.ln_value_at_ln(r.ln() + x.ln() + y.ln());
        let slack = REL_SLACK * lhs.abs().max(rhs.abs()).max(1.0);
        if lhs > rhs + slack {
            return Ok(NablaCheck { holds: false, violation: Some((x, y)) });
        }
    }
    Ok(NablaCheck { holds: true, violation: None })
}

/// Log-spaced square grid on `[lo, hi]²` with `steps` points per axis.
pub fn log_grid(lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64)> {
    let lo = lo.max(f64::MIN_POSITIVE);
    let axis: Vec<f64> = if steps <= 1 {
        vec![lo]
    } else {
        let (a, b) = (lo.ln(), hi.ln());
        (0..steps).map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp()).collect()
    };
    axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSum {
    pub converges: bool,
    /// Partial sum of the terms actually added.
    pub sum: f64,
    /// Geometric bound on the omitted tail.
    pub tail_bound: f64,
    pub terms: usize,
    /// True when the tail bound rests on observed ratios only (no closed-form monotonicity).
    pub heuristic: bool,
}

const MAX_TERMS: usize = 100_000;
const DIVERGENCE_RUN: usize = 20;
const RATIO_WINDOW: usize = 3;

/// Sums `exp(ln_term(k))` for `k = start, start+1, …` until the geometric tail bound drops
/// below `tol · (reference + sum)`. The tail bound assumes the term ratio keeps
/// decreasing, which is only accepted after it has been nonincreasing for a few steps.
pub fn sum_log_series(ln_term: impl Fn(i64) -> f64, start: i64, tol: f64, reference: f64) -> SeriesSum {
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    let mut ratios: Vec<f64> = Vec::new();
    let mut nondecreasing = 0;
    let mut last_tail = f64::INFINITY;
    for i in 0..MAX_TERMS {
        let k = start + i as i64;
        let ln_t = ln_term(k);
        if ln_t.is_nan() || ln_t == f64::INFINITY {
            return SeriesSum {
                converges: false,
                sum: f64::INFINITY,
                tail_bound: f64::INFINITY,
                terms: i + 1,
                heuristic: false,
            };
        }
        let t = ln_t.exp();
        sum += t;
        if t == 0.0 {
            let converges = ratios.last().is_none_or(|&q| q < 0.0);
            return SeriesSum { converges, sum, tail_bound: 0.0, terms: i + 1, heuristic: false };
        }
        if let Some(p) = prev {
            let ln_q = ln_t - p;
            if ln_q >= 0.0 {
                nondecreasing += 1;
                if nondecreasing >= DIVERGENCE_RUN {
                    return SeriesSum {
                        converges: false,
                        sum,
                        tail_bound: f64::INFINITY,
                        terms: i + 1,
                        heuristic: false,
                    };
                }
            } else {
                nondecreasing = 0;
            }
            ratios.push(ln_q);
            let n = ratios.len();
            let settled =
                n >= RATIO_WINDOW && ratios[n - RATIO_WINDOW..].windows(2).all(|w| w[1] <= w[0] + 1e-12) && ln_q < 0.0;
            if settled {
                let q = ln_q.exp();
                let tail = t * q / (1.0 - q);
                last_tail = tail;
                if tail <= tol * (reference + sum) {
                    return SeriesSum { converges: true, sum, tail_bound: tail, terms: i + 1, heuristic: false };
                }
            }
        }
        prev = Some(ln_t);
    }
    SeriesSum { converges: false, sum, tail_bound: last_tail, terms: MAX_TERMS, heuristic: false }
}

/// `Σ_{k≥0} num(R^k) / den(R^{k+n0})`.
pub fn pair_series(num: &YoungFunction, den: &YoungFunction, ratio: f64, shift: u32, tol: f64) -> Result<SeriesSum> {
    if !(ratio > 1.0) {
        return Err(Error::InvalidParameter(format!("R must be > 1, got {ratio}")));
    }
    if shift < 1 {
        return Err(Error::InvalidParameter("n0 must be >= 1".into()));
    }
    let n0 = shift as i64;
    let mut out = sum_log_series(|k| num.ln_at_level(ratio, k) - den.ln_at_level(ratio, k + n0), 0, tol, 0.0);
    out.heuristic = num.is_piecewise() || den.is_piecewise();
    Ok(out)
}
