//! Ball-growth integrals `∫₀^u φ⁻¹(1/m(B(x,ε))) dε`, the minorizing metric and the
//! majorizing integral.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mspace::MetricMeasureSpace;
use crate::young::YoungFunction;

/// Piecewise-constant integrand of one point with running integrals at its breakpoints.
#[derive(Clone, Debug)]
struct Profile {
    radii: Vec<f64>,
    heights: Vec<f64>,
    prefix: Vec<f64>,
}

impl Profile {
    fn new(space: &MetricMeasureSpace, phi: &YoungFunction, x: usize) -> Self {
        let lv = space.levels(x);
        let radii: Vec<f64> = lv.iter().map(|l| l.radius).collect();
        let heights: Vec<f64> = lv
            .iter()
            .map(|l| if l.closed_mass > 0.0 { phi.inverse(1.0 / l.closed_mass) } else { f64::INFINITY })
            .collect();
        let mut prefix = Vec::with_capacity(radii.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for j in 1..radii.len() {
            acc += heights[j - 1] * (radii[j] - radii[j - 1]);
            prefix.push(acc);
        }
        Self { radii, heights, prefix }
    }

    fn integral(&self, upper: f64) -> f64 {
        if upper <= 0.0 {
            return 0.0;
        }
        let j = self.radii.partition_point(|&r| r <= upper) - 1;
        let tail = upper - self.radii[j];
        if tail == 0.0 {
            self.prefix[j]
        } else {
            self.prefix[j] + self.heights[j] * tail
        }
    }
}

/// Exact `∫₀^upper φ⁻¹(1/m(B(x,ε))) dε`. Values of `upper` above `D(T)` are clamped.
pub fn ball_growth_integral(space: &MetricMeasureSpace, phi: &YoungFunction, x: usize, upper: f64) -> Result<f64> {
    if !(upper >= 0.0) {
        return Err(Error::NegativeArgument(upper));
    }
    if x >= space.len() {
        return Err(Error::InvalidParameter(format!("point {x} out of range")));
    }
    let d = space.diameter();
    let upper = if upper > d {
        log::warn!("integration bound {upper} exceeds the diameter {d}; clamped");
        d
    } else {
        upper
    };
    Ok(Profile::new(space, phi, x).integral(upper))
}

/// `τ(s,t)`: the larger of the two ball-growth integrals up to `d(s,t)`.
pub fn tau(space: &MetricMeasureSpace, phi: &YoungFunction, s: usize, t: usize) -> Result<f64> {
    let d = space.d(s, t);
    Ok(ball_growth_integral(space, phi, s, d)?.max(ball_growth_integral(space, phi, t, d)?))
}

pub fn majorizing_integral(space: &MetricMeasureSpace, phi: &YoungFunction) -> Result<f64> {
    let d = space.diameter();
    let mut acc = 0.0;
    for (x, w) in space.mass().iter().enumerate() {
        if *w > 0.0 {
            acc += w * ball_growth_integral(space, phi, x, d)?;
        }
    }
    Ok(acc)
}

/// Pairwise `τ` and the majorizing integral for one `(space, φ)`.
#[derive(Clone, Debug, Serialize)]
pub struct MinorizingMetrics {
    n: usize,
    /// Row-major `n × n`.
    tau: Vec<f64>,
    /// `I_x(D(T))` per point.
    full: Vec<f64>,
    majorizing: f64,
}

impl MinorizingMetrics {
    pub fn compute(space: &MetricMeasureSpace, phi: &YoungFunction) -> Self {
        let n = space.len();
        let profiles: Vec<Profile> = (0..n).into_par_iter().map(|x| Profile::new(space, phi, x)).collect();
        let one_sided: Vec<Vec<f64>> =
            (0..n).into_par_iter().map(|s| (0..n).map(|t| profiles[s].integral(space.d(s, t))).collect()).collect();
        let mut tau = vec![0.0; n * n];
        for s in 0..n {
            for t in 0..n {
                tau[s * n + t] = one_sided[s][t].max(one_sided[t][s]);
            }
        }
        let d = space.diameter();
        let full: Vec<f64> = profiles.iter().map(|p| p.integral(d)).collect();
        let majorizing = full.iter().zip(space.mass()).filter(|(_, w)| **w > 0.0).map(|(i, w)| w * i).sum::<f64>();
        Self { n, tau, full, majorizing }
    }

    #[inline]
    pub fn tau(&self, s: usize, t: usize) -> f64 {
        self.tau[s * self.n + t]
    }

    pub fn tau_matrix(&self) -> &[f64] {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `𝓜(m, φ)`.
    pub fn majorizing(&self) -> f64 {
        self.majorizing
    }

    pub fn full_integral(&self, x: usize) -> f64 {
        self.full[x]
    }
}

/// Midpoint rule with `panels` cells for the same integral, used as an independent check.
pub fn riemann_ball_growth(
    space: &MetricMeasureSpace,
    phi: &YoungFunction,
    x: usize,
    upper: f64,
    panels: usize,
) -> f64 {
    if upper <= 0.0 || panels == 0 {
        return 0.0;
    }
    let h = upper / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let eps = (i as f64 + 0.5) * h;
        acc += phi.inverse(1.0 / space.ball_mass_unchecked(x, eps, true));
    }
    acc * h
}
