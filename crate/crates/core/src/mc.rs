//! Gaussian processes with normalized increments and empirical checks of the
//! expected-supremum bounds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::chain::{modulus_value, ChainCertificate, Theorem};
use crate::error::{Error, Result};
use crate::minorize::MinorizingMetrics;
use crate::mspace::MetricMeasureSpace;
use crate::young::{YoungFunction, YoungSpec};

/// `E|Z|^p` for a standard normal `Z`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    if p.fract() == 0.0 && p >= 0.0 && (p as u64).is_multiple_of(2) {
        // (p − 1)!!
        let mut acc = 1.0;
        let mut k = p as u64;
        while k > 1 {
            acc *= (k - 1) as f64;
            k -= 2;
        }
        return acc;
    }
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// `(E|Z|^p)^{1/p}`.
pub fn moment_constant(p: f64) -> f64 {
    gaussian_abs_moment(p).powf(1.0 / p)
}

/// Closed-form `E ψ(|σZ|/d)`.
pub fn gaussian_increment_moment(psi: &YoungFunction, sigma: f64, d: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let a = sigma / d;
    match psi.spec() {
        YoungSpec::Power { p } => Ok(a.powf(p) * gaussian_abs_moment(p)),
        YoungSpec::Exponential { q: 2.0 } => {
            let s = 1.0 - 2.0 * a * a;
            if s <= 0.0 {
                Ok(f64::INFINITY)
            } else {
                Ok((s.powf(-0.5) - 1.0) / (std::f64::consts::E - 1.0))
            }
        }
        _ => Err(Error::Unsupported("closed-form increment moments need a power or q = 2 exponential ψ".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    BrownianGrid,
    GaussianCov,
}

#[derive(Clone, Debug)]
pub struct ProcessSampler {
    pub kind: SamplerKind,
    pub space: MetricMeasureSpace,
    /// Covariance of the unscaled process.
    covariance: DMatrix<f64>,
    /// `X = scale · factor · Z` (unused on the grid, which is built from increments).
    factor: DMatrix<f64>,
    pub scale: f64,
    pub psi: YoungFunction,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SamplerEcho {
    pub kind: SamplerKind,
    pub n_points: usize,
    pub scale: f64,
    pub psi: YoungFunction,
    pub seed: u64,
}

/// Brownian motion on the points `i/(n−1)` with `d(s,t) = c_p|s−t|^{1/2}`.
pub fn brownian_grid_sampler(n: usize, psi: &YoungFunction, seed: u64) -> Result<ProcessSampler> {
    let p = psi.power_exponent().ok_or_else(|| Error::Unsupported("the Brownian grid needs a power ψ".into()))?;
    if n < 2 {
        return Err(Error::InvalidParameter("the Brownian grid needs at least two points".into()));
    }
    let cp = moment_constant(p);
    let h = 1.0 / (n - 1) as f64;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = cp * ((i as f64 - j as f64).abs() * h).sqrt();
        }
    }
    let covariance = DMatrix::from_fn(n, n, |i, j| i.min(j) as f64 * h);
    Ok(ProcessSampler {
        kind: SamplerKind::BrownianGrid,
        space: MetricMeasureSpace::uniform(dist)?,
        covariance,
        factor: DMatrix::zeros(0, 0),
        scale: 1.0,
        psi: psi.clone(),
        seed,
    })
}

/// Centered Gaussian vector with the given covariance, scaled so that the largest pairwise
/// increment moment `E ψ(|ΔX|/d)` equals one.
pub fn gaussian_cov_sampler(
    space: &MetricMeasureSpace,
    cov: &[f64],
    psi: &YoungFunction,
    seed: u64,
) -> Result<ProcessSampler> {
    let n = space.len();
    if cov.len() != n * n {
        return Err(Error::LengthMismatch(cov.len(), n * n));
    }
    let c = DMatrix::from_row_slice(n, n, cov);
    if (0..n).any(|i| (0..n).any(|j| (c[(i, j)] - c[(j, i)]).abs() > 1e-12 * c[(i, j)].abs().max(1.0))) {
        return Err(Error::InvalidParameter("covariance is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(c.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&v| v < -1e-9 * top.max(1.0)) {
        return Err(Error::InvalidParameter("covariance is not positive semidefinite".into()));
    }
    let root = DVector::from_iterator(n, eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()));
    let factor = &eig.eigenvectors * DMatrix::from_diagonal(&root);
    let mut worst = 0.0_f64;
    for s in 0..n {
        for t in s + 1..n {
            let var = (c[(s, s)] + c[(t, t)] - 2.0 * c[(s, t)]).max(0.0);
            worst = worst.max(var.sqrt() / space.d(s, t));
        }
    }
    let scale = if worst == 0.0 {
        1.0
    } else {
        match psi.spec() {
            YoungSpec::Power { p } => 1.0 / (worst * moment_constant(p)),
            YoungSpec::Exponential { q: 2.0 } => ((1.0 - (-2f64).exp()) / 2.0).sqrt() / worst,
            _ => return Err(Error::Unsupported("normalization needs a power or q = 2 exponential ψ".into())),
        }
    };
    Ok(ProcessSampler {
        kind: SamplerKind::GaussianCov,
        space: space.clone(),
        covariance: c,
        factor,
        scale,
        psi: psi.clone(),
        seed,
    })
}

impl ProcessSampler {
    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Standard deviation of `X(s) − X(t)`.
    pub fn increment_sd(&self, s: usize, t: usize) -> f64 {
        let c = &self.covariance;
        self.scale * (c[(s, s)] + c[(t, t)] - 2.0 * c[(s, t)]).max(0.0).sqrt()
    }

    pub fn increment_moment(&self, s: usize, t: usize) -> Result<f64> {
        gaussian_increment_moment(&self.psi, self.increment_sd(s, t), self.space.d(s, t))
    }

    pub fn max_increment_moment(&self) -> Result<f64> {
        let n = self.len();
        let mut worst = 0.0_f64;
        for s in 0..n {
            for t in s + 1..n {
                worst = worst.max(self.increment_moment(s, t)?);
            }
        }
        Ok(worst)
    }

    /// Path number `index` of the stream `seed`.
    pub fn path(&self, seed: u64, index: u64) -> Vec<f64> {
        let n = self.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        match self.kind {
            SamplerKind::BrownianGrid => {
                let sd = (1.0 / (n - 1) as f64).sqrt();
                let mut x = Vec::with_capacity(n);
                let mut acc = 0.0;
                x.push(0.0);
                for zi in &z[1..] {
                    acc += sd * zi;
                    x.push(acc);
                }
                x
            }
            SamplerKind::GaussianCov => {
                let v = &self.factor * DVector::from_vec(z);
                v.iter().map(|x| self.scale * x).collect()
            }
        }
    }

    pub fn echo(&self) -> SamplerEcho {
        SamplerEcho { kind: self.kind, n_points: self.len(), scale: self.scale, psi: self.psi.clone(), seed: self.seed }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PathBatch {
    pub n_paths: usize,
    pub n_points: usize,
    /// Row-major `n_paths × n_points`.
    pub values: Vec<f64>,
    pub seed: u64,
    pub sampler: SamplerEcho,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_points..(i + 1) * self.n_points]
    }
}

pub fn sample(sampler: &ProcessSampler, n_paths: usize, seed: u64) -> Result<PathBatch> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    let paths: Vec<Vec<f64>> = (0..n_paths as u64).into_par_iter().map(|i| sampler.path(seed, i)).collect();
    Ok(PathBatch {
        n_paths,
        n_points: sampler.len(),
        values: paths.into_iter().flatten().collect(),
        seed,
        sampler: sampler.echo(),
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Statistic {
    pub name: String,
    pub mean: f64,
    pub stderr: f64,
    pub max: f64,
    /// `mean ≤ 1 + 3·stderr`.
    pub pass: bool,
    /// `mean + 3·stderr ≤ 1`.
    pub pass_strict: bool,
}

impl Statistic {
    fn from_samples(name: &str, xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let stderr = (var / n).sqrt();
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self {
            name: name.into(),
            mean,
            stderr,
            max,
            pass: mean <= 1.0 + 3.0 * stderr,
            pass_strict: mean + 3.0 * stderr <= 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub theorem: Theorem,
    pub n_paths: usize,
    pub stats: Vec<Statistic>,
    /// Per-path suprema, one column per statistic.
    pub per_path: Vec<Vec<f64>>,
}

impl CorollaryReport {
    pub fn stat(&self, name: &str) -> Option<&Statistic> {
        self.stats.iter().find(|s| s.name == name)
    }
}

/// Per-path suprema of the normalized increments for the certificate's bound.
pub fn empirical_corollary(
    batch: &PathBatch,
    cert: &ChainCertificate,
    metrics: &MinorizingMetrics,
) -> Result<CorollaryReport> {
    let n = batch.n_points;
    if cert.n != n || metrics.len() != n {
        return Err(Error::LengthMismatch(cert.n, n));
    }
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|s| (s + 1..n).map(move |t| (s, t)))
        .map(|(s, t)| {
            let tau = metrics.tau(s, t);
            let scale = match cert.theorem {
                Theorem::T1 => 2.0 * cert.k * tau,
                Theorem::T3 => modulus_value(cert, metrics.majorizing(), tau),
            };
            (s, t, scale)
        })
        .collect();
    let suprema: Vec<Result<f64>> = (0..batch.n_paths)
        .into_par_iter()
        .map(|i| {
            let x = batch.path(i);
            let mut sup = 0.0_f64;
            for &(s, t, scale) in &pairs {
                let diff = (x[s] - x[t]).abs();
                if diff == 0.0 {
                    continue;
                }
                if scale == 0.0 {
                    return Err(Error::Degenerate(format!("pair ({s}, {t}) has τ = 0 and a nonzero increment")));
                }
                sup = sup.max(diff / scale);
            }
            Ok(sup)
        })
        .collect();
    let sup: Vec<f64> = suprema.into_iter().collect::<Result<_>>()?;
    let (stats, per_path) = match cert.theorem {
        Theorem::T1 => {
            let psi = cert.psi.as_ref().ok_or_else(|| Error::InvalidParameter("certificate carries no ψ".into()))?;
            let mapped: Vec<f64> = sup.iter().map(|&x| psi.value(x)).collect();
            let stats = vec![Statistic::from_samples("sup_ratio", &sup), Statistic::from_samples("sup_psi", &mapped)];
            (stats, sup.iter().zip(&mapped).map(|(a, b)| vec![*a, *b]).collect())
        }
        Theorem::T3 => {
            let mapped: Vec<f64> = sup.iter().map(|&x| cert.phi.value(x)).collect();
            (vec![Statistic::from_samples("sup_phi", &mapped)], mapped.iter().map(|a| vec![*a]).collect())
        }
    };
    Ok(CorollaryReport { theorem: cert.theorem, n_paths: batch.n_paths, stats, per_path })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IncrementRow {
    pub s: usize,
    pub t: usize,
    pub mean: f64,
    pub stderr: f64,
    pub analytic: f64,
    pub pass: bool,
}

/// Empirical `E ψ(|ΔX|/d)` per pair against `1 + 3·stderr`.
pub fn increment_check(batch: &PathBatch, sampler: &ProcessSampler) -> Result<Vec<IncrementRow>> {
    let n = batch.n_points;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (s + 1..n).map(move |t| (s, t))).collect();
    pairs
        .par_iter()
        .map(|&(s, t)| {
            let d = sampler.space.d(s, t);
            let xs: Vec<f64> = (0..batch.n_paths)
                .map(|i| sampler.psi.value((batch.path(i)[s] - batch.path(i)[t]).abs() / d))
                .collect();
            let st = Statistic::from_samples("", &xs);
            Ok(IncrementRow {
                s,
                t,
                mean: st.mean,
                stderr: st.stderr,
                analytic: sampler.increment_moment(s, t)?,
                pass: st.pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{certificate_thm1, certificate_thm3};

    fn pw(p: f64) -> YoungFunction {
        YoungFunction::power(p).unwrap()
    }

    #[test]
    fn moment_constants() {
        assert_eq!(moment_constant(2.0), 1.0);
        assert!((moment_constant(4.0) - 3f64.powf(0.25)).abs() < 1e-15);
        assert!((gaussian_abs_moment(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!((gaussian_abs_moment(6.0) - 15.0).abs() < 1e-12);
        // the gamma-function branch agrees with the double factorial
        let g = 2f64.powf(2.0) * gamma(2.5) / std::f64::consts::PI.sqrt();
        assert!((g - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_grid() {
        let s = brownian_grid_sampler(2, &pw(2.0), 0).unwrap();
        assert_eq!(s.space.d(0, 1), 1.0);
        assert_eq!(s.increment_sd(0, 1), 1.0);
        assert!((s.increment_moment(0, 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_moments_are_exact() {
        for p in [1.0, 2.0, 3.0, 4.0] {
            let s = brownian_grid_sampler(9, &pw(p), 0).unwrap();
            assert!((s.max_increment_moment().unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(brownian_grid_sampler(9, &YoungFunction::exponential(2.0).unwrap(), 0).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = brownian_grid_sampler(16, &pw(2.0), 0).unwrap();
        let a = sample(&s, 50, 7).unwrap();
        let b = sample(&s, 50, 7).unwrap();
        let c = sample(&s, 50, 8).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| sample(&s, 50, 7).unwrap());
        assert_eq!(serial.values, a.values);
        assert!(a.values.chunks(16).all(|p| p[0] == 0.0));
    }

    #[test]
    fn second_moment_matches() {
        let s = brownian_grid_sampler(5, &pw(2.0), 0).unwrap();
        let batch = sample(&s, 100_000, 11).unwrap();
        for row in increment_check(&batch, &s).unwrap() {
            assert!((row.mean - row.analytic).abs() <= 3.0 * row.stderr + 1e-12, "{row:?}");
        }
    }

    #[test]
    fn covariance_sampler_normalization() {
        let g = brownian_grid_sampler(6, &pw(2.0), 0).unwrap();
        let n = 6;
        let cov: Vec<f64> = (0..n * n).map(|i| (i / n).min(i % n) as f64 / 5.0 + 1.0).collect();
        for psi in [pw(2.0), pw(4.0), YoungFunction::exponential(2.0).unwrap()] {
            let s = gaussian_cov_sampler(&g.space, &cov, &psi, 0).unwrap();
            assert!((s.max_increment_moment().unwrap() - 1.0).abs() < 1e-9, "{psi:?}");
        }
        let bad: Vec<f64> = (0..n * n).map(|i| if i % (n + 1) == 0 { -1.0 } else { 0.0 }).collect();
        assert!(gaussian_cov_sampler(&g.space, &bad, &pw(2.0), 0).is_err());
    }

    #[test]
    fn constant_paths_give_zero() {
        let g = brownian_grid_sampler(4, &pw(2.0), 0).unwrap();
        let s = gaussian_cov_sampler(&g.space, &[0.0; 16], &pw(2.0), 0).unwrap();
        let batch = sample(&s, 20, 3).unwrap();
        let cert = certificate_thm1(&s.space, &pw(1.0), &pw(2.0), 6.0, 1, 1e-12).unwrap();
        let metrics = MinorizingMetrics::compute(&s.space, &pw(1.0));
        let rep = empirical_corollary(&batch, &cert, &metrics).unwrap();
        assert_eq!(rep.stat("sup_ratio").unwrap().mean, 0.0);
        assert_eq!(rep.stat("sup_psi").unwrap().mean, 0.0);
    }

    #[test]
    fn thm3_corollary_small_grid() {
        let g = brownian_grid_sampler(8, &pw(2.0), 0).unwrap();
        let batch = sample(&g, 500, 5).unwrap();
        let cert = certificate_thm3(&g.space, &pw(2.0), 6.0, 1e-12).unwrap();
        let metrics = MinorizingMetrics::compute(&g.space, &pw(2.0));
        let rep = empirical_corollary(&batch, &cert, &metrics).unwrap();
        let st = rep.stat("sup_phi").unwrap();
        assert!(st.pass_strict, "{st:?}");
    }
}
