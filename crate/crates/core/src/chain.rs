//! Averaging operators `S_k`, their compositions, and the explicit chaining
//! certificates (measure `ν` on `T×T` plus constants).

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minorize::MinorizingMetrics;
use crate::mspace::{MetricMeasureSpace, RadiusTable};
use crate::young::{check_miau, pair_series, sum_log_series, ConvexGauge, YoungFunction};

const MIAU_LEVELS: usize = 64;

/// Row-stochastic matrix of `S_k f(x) = ⨍_{B_k(x)} f dm`.
#[derive(Clone, Debug)]
pub struct AveragingKernel {
    pub level: usize,
    pub matrix: DMatrix<f64>,
}

impl AveragingKernel {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        apply(&self.matrix, f)
    }
}

fn apply(m: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|x| (0..m.ncols()).map(|v| m[(x, v)] * f[v]).sum()).collect()
}

pub fn averaging_kernel(table: &RadiusTable<'_>, k: usize) -> AveragingKernel {
    let space = table.space();
    let n = space.len();
    let mass = space.mass();
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let total = table.ball_mass(x, k);
        if total == 0.0 {
            continue;
        }
        for v in 0..n {
            if table.in_ball(x, v, k) {
                matrix[(x, v)] = mass[v] / total;
            }
        }
    }
    AveragingKernel { level: k, matrix }
}

/// `P_l ⋯ P_k`; row `x` is the measure `m^l_{x,k}`.
#[derive(Clone, Debug)]
pub struct ComposedKernel {
    pub upper: usize,
    pub lower: usize,
    pub matrix: DMatrix<f64>,
}

impl ComposedKernel {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        apply(&self.matrix, f)
    }
}

/// Kernels `P_0, …, P_{k*}`; higher levels reuse `P_{k*}`.
#[derive(Clone, Debug)]
pub struct KernelStack {
    kernels: Vec<AveragingKernel>,
}

impl KernelStack {
    pub fn new(table: &RadiusTable<'_>) -> Self {
        let kernels = (0..=table.kstar()).into_par_iter().map(|k| averaging_kernel(table, k)).collect();
        Self { kernels }
    }

    pub fn kernel(&self, k: usize) -> &AveragingKernel {
        &self.kernels[k.min(self.kernels.len() - 1)]
    }

    /// Multiplies row `row` of `P_level` by `factor`; only meant for fault-injection tests.
    pub fn inject_fault(&mut self, level: usize, row: usize, factor: f64) {
        let idx = level.min(self.kernels.len() - 1);
        let mut r = self.kernels[idx].matrix.row_mut(row);
        r *= factor;
    }

    pub fn composed(&self, l: usize, k: usize) -> Result<ComposedKernel> {
        composed_kernel(self, l, k)
    }
}

pub fn composed_kernel(stack: &KernelStack, l: usize, k: usize) -> Result<ComposedKernel> {
    if k > l {
        return Err(Error::InvalidParameter(format!("composition needs k <= l, got k={k}, l={l}")));
    }
    let mut m = stack.kernel(k).matrix.clone();
    for i in k + 1..=l {
        m = &stack.kernel(i).matrix * m;
    }
    Ok(ComposedKernel { upper: l, lower: k, matrix: m })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T1,
    T3,
}

/// Measure `ν` on `T×T` and the constants of one of the two Hölder bounds.
#[derive(Clone, Debug)]
pub struct ChainCertificate {
    pub theorem: Theorem,
    /// Ratio actually used (after escalation).
    pub ratio: f64,
    pub requested_ratio: f64,
    /// `Some(l)` when the requested ratio was replaced by its `l`-th power.
    pub escalation: Option<u32>,
    pub n0: Option<u32>,
    pub a: f64,
    /// `B1` (normalizer of `ν`) or `B3`.
    pub b: f64,
    pub k: f64,
    pub c: Option<f64>,
    /// Row-major `n × n`, total mass 1.
    pub nu: Vec<f64>,
    pub n: usize,
    pub tail_bound: f64,
    /// `Σ_{k≥1} φ(R^{k+1})/ψ₊(R^{k+n0+1})` for T1.
    pub weight_sum: Option<f64>,
    /// `M` with `ν(1) = 1` for T3.
    pub normalizer: Option<f64>,
    pub kstar: usize,
    pub phi: YoungFunction,
    pub psi: Option<YoungFunction>,
}

/// `4R³/((R−1)(R−2)(R−5)) + 3R²/(2(R−5))`.
pub fn constant_a(r: f64) -> f64 {
    4.0 * r.powi(3) / ((r - 1.0) * (r - 2.0) * (r - 5.0)) + 3.0 * r * r / (2.0 * (r - 5.0))
}

/// `3R⁴/(R−1)²`.
pub fn constant_b3(r: f64) -> f64 {
    3.0 * r.powi(4) / ((r - 1.0) * (r - 1.0))
}

/// Smallest power `R^l > 5`.
pub fn escalate_ratio(r: f64) -> (f64, u32) {
    let mut l = 1;
    let mut rl = r;
    while rl <= 5.0 {
        l += 1;
        rl = r.powi(l);
    }
    (rl, l as u32)
}

fn require_miau(phi: &YoungFunction, r: f64) -> Result<()> {
    let verdict = match check_miau(phi, r, MIAU_LEVELS) {
        Err(Error::Overflow(k)) if k > 1 => {
            log::warn!("ratio chain checked only up to level {} before overflow", k - 1);
            check_miau(phi, r, k - 1)?
        }
        other => other?,
    };
    if !verdict.holds {
        return Err(Error::Precondition(format!(
            "ratio chain condition fails at level {} for R = {r}",
            verdict.first_violation.unwrap_or(0)
        )));
    }
    Ok(())
}

fn setup_ratio(ratio: f64) -> Result<(f64, Option<u32>)> {
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(Error::InvalidParameter(format!("R must be > 1, got {ratio}")));
    }
    if ratio > 5.0 {
        return Ok((ratio, None));
    }
    let (r, l) = escalate_ratio(ratio);
    log::info!("R = {ratio} raised to R^{l} = {r}");
    Ok((r, Some(l)))
}

/// Dense `n × n` accumulation of `Σ_u mass(u) row_u` where row `u` averages over `ball(u)`.
fn add_ball_average(
    acc: &mut [f64],
    space: &MetricMeasureSpace,
    weight: impl Fn(usize) -> f64 + Sync,
    member: impl Fn(usize, usize) -> bool + Sync,
) {
    let n = space.len();
    let mass = space.mass();
    acc.par_chunks_mut(n).enumerate().for_each(|(u, row)| {
        let w = weight(u);
        if w == 0.0 || mass[u] == 0.0 {
            return;
        }
        let total: f64 = (0..n).filter(|&v| member(u, v)).map(|v| mass[v]).sum();
        if total == 0.0 {
            return;
        }
        let scale = w * mass[u] / total;
        for v in 0..n {
            if member(u, v) {
                row[v] += scale * mass[v];
            }
        }
    });
}

pub fn certificate_thm1(
    space: &MetricMeasureSpace,
    phi: &YoungFunction,
    psi: &YoungFunction,
    ratio: f64,
    n0: u32,
    tail_tol: f64,
) -> Result<ChainCertificate> {
    if n0 < 1 {
        return Err(Error::InvalidParameter("n0 must be >= 1".into()));
    }
    let (r, escalation) = setup_ratio(ratio)?;
    require_miau(phi, r)?;
    let pap = pair_series(phi, psi, r, n0, tail_tol)?;
    if !pap.converges {
        return Err(Error::Precondition(format!(
            "series of φ(R^k)/ψ(R^(k+n0)) does not converge for R = {r}, n0 = {n0}"
        )));
    }
    let table = RadiusTable::new(space, phi, r)?;
    let kstar = table.kstar();
    let shift = n0 as i64;
    let ln_w = |k: i64| phi.ln_at_level(r, k + 1) - psi.ln_shifted_at_level(r, k + shift + 1);

    let n = space.len();
    let mut acc = vec![0.0; n * n];
    let mut head = 0.0;
    for k in 1..=kstar {
        let w = ln_w(k as i64).exp();
        if !w.is_finite() {
            return Err(Error::Overflow(k));
        }
        head += w;
        add_ball_average(&mut acc, space, |_| 2.0 * w, |u, v| table.in_ball(u, v, k));
        add_ball_average(&mut acc, space, |_| w, |u, v| table.in_open_ball(u, v, k - 1));
    }
    let tail = sum_log_series(ln_w, kstar as i64 + 1, tail_tol, head);
    if !tail.converges {
        return Err(Error::Precondition("weight tail could not be bounded within the requested tolerance".into()));
    }
    if tail.sum > 0.0 {
        add_ball_average(&mut acc, space, |_| 2.0 * tail.sum, |u, v| table.in_ball(u, v, kstar));
        add_ball_average(&mut acc, space, |_| tail.sum, |u, v| table.in_open_ball(u, v, kstar));
    }
    let b1: f64 = acc.iter().sum();
    if !(b1 > 0.0) {
        return Err(Error::Degenerate("certificate measure has zero mass".into()));
    }
    acc.iter_mut().for_each(|x| *x /= b1);
    let a = constant_a(r);
    let k = thm1_constant(a, b1, r, n0);
    Ok(ChainCertificate {
        theorem: Theorem::T1,
        ratio: r,
        requested_ratio: ratio,
        escalation,
        n0: Some(n0),
        a,
        b: b1,
        k,
        c: None,
        nu: acc,
        n,
        tail_bound: tail.tail_bound,
        weight_sum: Some(head + tail.sum),
        normalizer: None,
        kstar,
        phi: phi.clone(),
        psi: Some(psi.clone()),
    })
}

/// `3·A·B·R^{n0+1}`.
pub fn thm1_constant(a: f64, b: f64, r: f64, n0: u32) -> f64 {
    3.0 * a * b * r.powi(n0 as i32 + 1)
}

pub fn certificate_thm3(
    space: &MetricMeasureSpace,
    phi: &YoungFunction,
    ratio: f64,
    _tail_tol: f64,
) -> Result<ChainCertificate> {
    let (r, escalation) = setup_ratio(ratio)?;
    require_miau(phi, r)?;
    let table = RadiusTable::new(space, phi, r)?;
    let kstar = table.kstar();
    let n = space.len();
    let mut acc = vec![0.0; n * n];
    for k in 1..=kstar {
        let lift = r.powi(k as i32 + 1);
        add_ball_average(&mut acc, space, |u| 2.0 * lift * table.radius(u, k), |u, v| table.in_ball(u, v, k));
        add_ball_average(&mut acc, space, |u| lift * table.radius(u, k - 1), |u, v| table.in_open_ball(u, v, k - 1));
    }
    let total: f64 = acc.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all radii vanish; a single-point space admits no certificate".into()));
    }
    acc.iter_mut().for_each(|x| *x /= total);
    let a = constant_a(r);
    let b3 = constant_b3(r);
    Ok(ChainCertificate {
        theorem: Theorem::T3,
        ratio: r,
        requested_ratio: ratio,
        escalation,
        n0: None,
        a,
        b: b3,
        k: a * r / b3,
        c: Some(2.0 * a * r.powi(5)),
        nu: acc,
        n,
        tail_bound: 0.0,
        weight_sum: None,
        normalizer: Some(total / (1.0 - 1.0 / r)),
        kstar,
        phi: phi.clone(),
        psi: None,
    })
}

/// `C·τ·φ₊⁻¹(𝓜/(Kτ))`, and 0 on the diagonal.
pub fn modulus_thm3(cert: &ChainCertificate, metrics: &MinorizingMetrics, s: usize, t: usize) -> Result<f64> {
    if cert.theorem != Theorem::T3 {
        return Err(Error::InvalidParameter("modulus needs a T3 certificate".into()));
    }
    if s == t {
        return Ok(0.0);
    }
    let tau = metrics.tau(s, t);
    Ok(modulus_value(cert, metrics.majorizing(), tau))
}

pub(crate) fn modulus_value(cert: &ChainCertificate, majorizing: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    let gauge = ConvexGauge::new(cert.phi.clone());
    cert.c.unwrap_or(f64::NAN) * tau * gauge.modulus_inverse(majorizing / (cert.k * tau))
}

impl ChainCertificate {
    pub fn nu_at(&self, u: usize, v: usize) -> f64 {
        self.nu[u * self.n + v]
    }

    pub fn total_mass(&self) -> f64 {
        self.nu.iter().sum()
    }

    /// `(1 + B)·A·R^{n0+1}`, the constant the T1 argument yields without assuming `B ≥ 1/2`.
    pub fn proof_constant(&self) -> Option<f64> {
        match (self.theorem, self.n0) {
            (Theorem::T1, Some(n0)) => Some((1.0 + self.b) * self.a * self.ratio.powi(n0 as i32 + 1)),
            _ => None,
        }
    }

    pub fn record(&self) -> CertificateRecord {
        CertificateRecord {
            theorem: self.theorem,
            r: self.ratio,
            n0: self.n0,
            a: self.a,
            b: self.b,
            k: self.k,
            c: self.c,
            nu: self.nu.chunks(self.n.max(1)).map(|r| r.to_vec()).collect(),
            tail_bound: self.tail_bound,
            escalated_r: self.escalation.map(|_| self.ratio),
            requested_r: self.requested_ratio,
            weight_sum: self.weight_sum,
            normalizer: self.normalizer,
            kstar: self.kstar,
            phi: self.phi.clone(),
            psi: self.psi.clone(),
        }
    }
}

/// Serialized certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub theorem: Theorem,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<u32>,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub nu: Vec<Vec<f64>>,
    pub tail_bound: f64,
    #[serde(rename = "escalated_R", skip_serializing_if = "Option::is_none")]
    pub escalated_r: Option<f64>,
    #[serde(rename = "requested_R")]
    pub requested_r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<f64>,
    pub kstar: usize,
    pub phi: YoungFunction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<YoungFunction>,
}
