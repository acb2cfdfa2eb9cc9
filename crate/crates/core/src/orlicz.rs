//! Luxemburg and Amemiya norms of functions on finite index sets.

use crate::error::{Error, Result};
use crate::young::{Gauge, YoungFunction};

const LUX_REL_WIDTH: f64 = 1e-13;
const MAX_BISECT: usize = 200;
const GOLDEN_ITERS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("measure weight {w} is not a finite nonnegative number")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFunction {
    values: Vec<f64>,
}

impl WeightedFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("function value {v} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_aligned(h: &[f64], mu: &[f64]) -> Result<()> {
    if h.len() != mu.len() {
        return Err(Error::LengthMismatch(h.len(), mu.len()));
    }
    Ok(())
}

/// `∫ g(|h|/a) dμ`.
pub fn modular<G: Gauge + ?Sized>(h: &[f64], mu: &[f64], g: &G, a: f64) -> f64 {
    h.iter().zip(mu).filter(|(x, w)| **w > 0.0 && **x != 0.0).map(|(x, w)| w * g.value(x.abs() / a)).sum()
}

/// `inf{a > 0 : ∫ g(|h|/a) dμ ≤ 1}` on raw slices.
pub fn luxemburg<G: Gauge + ?Sized>(h: &[f64], mu: &[f64], g: &G) -> Result<f64> {
    check_aligned(h, mu)?;
    let mut peak = 0.0_f64;
    let mut peak_weight = 0.0;
    for (x, &w) in h.iter().zip(mu) {
        if w > 0.0 && x.abs() > peak {
            peak = x.abs();
            peak_weight = w;
        }
    }
    if peak == 0.0 {
        return Ok(0.0);
    }
    let feasible = |a: f64| modular(h, mu, g, a) <= 1.0;
    let inv = g.upper_inverse(1.0 / peak_weight);
    let mut lo = if inv > 0.0 && inv.is_finite() { peak / inv } else { 0.0 };
    let mut hi = peak.max(lo);
    while !feasible(hi) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    if lo > 0.0 && feasible(lo) {
        return Ok(lo);
    }
    for _ in 0..MAX_BISECT {
        if hi - lo <= LUX_REL_WIDTH * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn luxemburg_norm<G: Gauge + ?Sized>(h: &WeightedFunction, mu: &FiniteMeasure, g: &G) -> Result<f64> {
    luxemburg(h.values(), mu.weights(), g)
}

/// `inf_{a>0} a(1 + ∫ φ(|h|/a) dμ)` on raw slices.
pub fn amemiya(h: &[f64], mu: &[f64], phi: &YoungFunction) -> Result<f64> {
    let lux = luxemburg(h, mu, phi)?;
    if lux == 0.0 {
        return Ok(0.0);
    }
    let objective = |ln_a: f64| {
        let a = ln_a.exp();
        let v = a * (1.0 + modular(h, mu, phi, a));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let floor = (lux * 1e-15).ln();
    let ceil = (lux * 1e15).ln();
    let step = std::f64::consts::LN_2;
    let mut lo = lux.ln();
    while lo > floor && objective(lo - step) < objective(lo) {
        lo -= step;
    }
    lo = (lo - step).max(floor);
    let mut hi = (2.0 * lux).ln();
    while hi < ceil && objective(hi + step) < objective(hi) {
        hi += step;
    }
    hi += step;

    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    let mut best = fc.min(fd).min(objective(lux.ln())).min(objective(lo));
    for _ in 0..GOLDEN_ITERS {
        if b - a < 1e-15 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
            best = best.min(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
            best = best.min(fd);
        }
    }
    Ok(best)
}

pub fn amemiya_norm(h: &WeightedFunction, mu: &FiniteMeasure, phi: &YoungFunction) -> Result<f64> {
    amemiya(h.values(), mu.weights(), phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::young::ConvexGauge;
    use proptest::prelude::*;

    fn sq() -> YoungFunction {
        YoungFunction::power(2.0).unwrap()
    }

    #[test]
    fn luxemburg_examples() {
        let mu = [0.5, 0.5];
        let v = luxemburg(&[0.0, 2.0], &mu, &sq()).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(luxemburg(&[0.0, 0.0], &mu, &sq()).unwrap(), 0.0);
        let e = YoungFunction::exponential(2.0).unwrap();
        for g in [sq(), e, YoungFunction::power(1.0).unwrap()] {
            let v = luxemburg(&[3.0, 3.0, 3.0], &[0.2, 0.3, 0.5], &g).unwrap();
            assert!((v - 3.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn luxemburg_ignores_null_weights() {
        let v = luxemburg(&[5.0, 1.0], &[0.0, 1.0], &sq()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatch_is_rejected() {
        assert!(matches!(luxemburg(&[1.0], &[0.5, 0.5], &sq()), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn amemiya_examples() {
        let mu = [0.5, 0.5];
        let v = amemiya(&[1.0, 1.0], &mu, &sq()).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = amemiya(&[0.0, 2.0], &mu, &sq()).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        assert_eq!(amemiya(&[0.0, 0.0], &mu, &sq()).unwrap(), 0.0);
    }

    #[test]
    fn amemiya_minimizer_below_luxemburg() {
        // φ = x^1.5, h ≡ 1: a + a^{-1/2} is minimal at a = 2^{-2/3}
        let phi = YoungFunction::power(1.5).unwrap();
        let v = amemiya(&[1.0], &[1.0], &phi).unwrap();
        let a: f64 = 2f64.powf(-2.0 / 3.0);
        assert!((v - (a + a.powf(-0.5))).abs() < 1e-10);
    }

    #[test]
    fn shifted_gauge_norm() {
        // (x² − 1)₊ with h = 2 on a point mass: 4/a² − 1 = 1 at a = √2
        let g = ConvexGauge::new(sq());
        let v = luxemburg(&[2.0], &[1.0], &g).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
    }

    fn young_strategy() -> impl Strategy<Value = YoungFunction> {
        prop_oneof![
            prop::sample::select(vec![1.0, 1.5, 2.0, 4.0]).prop_map(|p| YoungFunction::power(p).unwrap()),
            (1.0..3.0f64).prop_map(|q| YoungFunction::exponential(q).unwrap()),
        ]
    }

    fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..12)
            .prop_flat_map(|n| (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(0.01..1.0f64, n)))
            .prop_map(|(h, w)| {
                let t: f64 = w.iter().sum();
                (h, w.into_iter().map(|x| x / t).collect())
            })
    }

    proptest! {
        #[test]
        fn sandwich((h, mu) in case(), phi in young_strategy()) {
            let lux = luxemburg(&h, &mu, &phi).unwrap();
            let am = amemiya(&h, &mu, &phi).unwrap();
            prop_assert!(lux <= am * (1.0 + 1e-9) + 1e-300);
            prop_assert!(am <= 2.0 * lux * (1.0 + 1e-9));
        }

        #[test]
        fn homogeneity((h, mu) in case(), phi in young_strategy(), lambda in 0.01..100.0f64) {
            let a = luxemburg(&h, &mu, &phi).unwrap();
            let scaled: Vec<f64> = h.iter().map(|x| lambda * x).collect();
            let b = luxemburg(&scaled, &mu, &phi).unwrap();
            prop_assert!((b - lambda * a).abs() <= 1e-10 * (lambda * a).max(1e-300));
        }

        #[test]
        fn monotone((h, mu) in case(), phi in young_strategy(), shrink in prop::collection::vec(0.0..1.0f64, 12)) {
            let small: Vec<f64> = h.iter().zip(&shrink).map(|(x, s)| x * s).collect();
            let a = luxemburg(&small, &mu, &phi).unwrap();
            let b = luxemburg(&h, &mu, &phi).unwrap();
            prop_assert!(a <= b + 1e-10 * b.max(1.0));
        }

        #[test]
        fn power_lower_bound((h, mu) in case(), p in prop::sample::select(vec![1.0, 1.5, 2.0, 4.0])) {
            // φ(|h|_φ) ≤ ∫φ(|h|) for multiplicative φ
            let phi = YoungFunction::power(p).unwrap();
            let lux = luxemburg(&h, &mu, &phi).unwrap();
            let rhs = modular(&h, &mu, &phi, 1.0);
            prop_assert!(phi.value(lux) <= rhs * (1.0 + 1e-9) + 1e-300);
        }
    }
}
