//! Deterministic checks of the Hölder bounds for given functions, and numeric
//! re-evaluation of each inequality used along the chaining argument.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{modulus_value, ChainCertificate, KernelStack, Theorem};
use crate::error::{Error, Result};
use crate::minorize::{ball_growth_integral, MinorizingMetrics};
use crate::mspace::{MetricMeasureSpace, RadiusTable};
use crate::orlicz::luxemburg;
use crate::young::{pair_series, sum_log_series, ConvexGauge, SeriesSum, YoungFunction};

/// A report passes when every margin is at least `-PASS_TOL`.
pub const PASS_TOL: f64 = 1e-9;

/// `(rhs − lhs)/max(1, rhs)`.
pub fn margin(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_nan() || rhs.is_nan() {
        return f64::NEG_INFINITY;
    }
    if rhs == f64::INFINITY {
        return if lhs == f64::INFINITY { 0.0 } else { 1.0 };
    }
    if lhs == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    (rhs - lhs) / rhs.max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    values: Vec<f64>,
}

impl TestFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("test function value {v} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { values: self.values.iter().map(|x| alpha * x).collect() }
    }

    /// `|f(u) − f(v)|/d(u, v)` with `0/0 = 0`.
    pub fn fd(&self, space: &MetricMeasureSpace, u: usize, v: usize) -> f64 {
        let diff = (self.values[u] - self.values[v]).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / space.d(u, v)
        }
    }

    /// Row-major `n × n` table of difference quotients.
    pub fn fd_matrix(&self, space: &MetricMeasureSpace) -> Vec<f64> {
        let n = space.len();
        (0..n * n).map(|i| self.fd(space, i / n, i % n)).collect()
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub function: String,
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(name: &str, function: &str, s: Option<usize>, t: Option<usize>, lhs: f64, rhs: f64) -> Self {
        let m = margin(lhs, rhs);
        Self { name: name.into(), function: function.into(), s, t, lhs, rhs, margin: m, pass: m >= -PASS_TOL }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckSummary {
    pub name: String,
    pub count: usize,
    pub failures: usize,
    pub worst_margin: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<CheckRow>,
    pub params: BTreeMap<String, String>,
}

impl VerificationReport {
    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.rows.extend(other.rows);
        self.params.extend(other.params);
    }

    pub fn worst_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn rows_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a CheckRow> + 'a {
        self.rows.iter().filter(move |r| r.name == name)
    }

    /// Worst margin per named inequality, in first-seen order.
    pub fn summary(&self) -> Vec<CheckSummary> {
        let mut out: Vec<CheckSummary> = Vec::new();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.rows {
            let i = *index.entry(&r.name).or_insert_with(|| {
                out.push(CheckSummary { name: r.name.clone(), count: 0, failures: 0, worst_margin: f64::INFINITY });
                out.len() - 1
            });
            let s = &mut out[i];
            s.count += 1;
            s.failures += usize::from(!r.pass);
            s.worst_margin = s.worst_margin.min(r.margin);
        }
        out
    }
}

fn check_sizes(
    cert: &ChainCertificate,
    space: &MetricMeasureSpace,
    metrics: &MinorizingMetrics,
    f: &TestFunction,
) -> Result<()> {
    let n = space.len();
    for m in [cert.n, metrics.len(), f.len()] {
        if m != n {
            return Err(Error::LengthMismatch(m, n));
        }
    }
    Ok(())
}

/// `|f(s)−f(t)| ≤ K·|f^d|^ν_{ψ₊}·τ(s,t)` on all pairs, and, given a multiplier `r` for
/// which `ψ(x)ψ(y) ≤ ψ(rxy)` on `x, y ≥ 1`, the uniform bound
/// `ψ₊(|Δf|/(K r τ)) ≤ ∫ψ₊(f^d) dν`.
pub fn verify_thm1(
    cert: &ChainCertificate,
    space: &MetricMeasureSpace,
    metrics: &MinorizingMetrics,
    f: &TestFunction,
    label: &str,
    nabla_multiplier: Option<f64>,
) -> Result<VerificationReport> {
    if cert.theorem != Theorem::T1 {
        return Err(Error::InvalidParameter("expected a T1 certificate".into()));
    }
    check_sizes(cert, space, metrics, f)?;
    let psi = cert.psi.clone().ok_or_else(|| Error::InvalidParameter("certificate carries no ψ".into()))?;
    let gauge = ConvexGauge::new(psi);
    let fd = f.fd_matrix(space);
    let norm = luxemburg(&fd, &cert.nu, &gauge)?;
    let integral: f64 = fd.iter().zip(&cert.nu).map(|(x, w)| if *w > 0.0 { w * gauge.value(*x) } else { 0.0 }).sum();
    let n = space.len();
    let mut report = VerificationReport::default();
    report.params.insert("norm".into(), format!("{norm:e}"));
    for s in 0..n {
        for t in s + 1..n {
            let diff = (f.values()[s] - f.values()[t]).abs();
            let tau = metrics.tau(s, t);
            report.push(CheckRow::new("1claim", label, Some(s), Some(t), diff, cert.k * norm * tau));
            if let Some(r) = nabla_multiplier {
                let lhs = gauge.value(diff / (cert.k * r * tau));
                report.push(CheckRow::new("2claim", label, Some(s), Some(t), lhs, integral));
            }
        }
    }
    Ok(report)
}

/// `φ₊(|Δf|/(Cτφ₊⁻¹(𝓜/(Kτ)))) ≤ ∫φ₊(f^d) dν` on all pairs.
pub fn verify_thm3(
    cert: &ChainCertificate,
    space: &MetricMeasureSpace,
    metrics: &MinorizingMetrics,
    f: &TestFunction,
    label: &str,
) -> Result<VerificationReport> {
    if cert.theorem != Theorem::T3 {
        return Err(Error::InvalidParameter("expected a T3 certificate".into()));
    }
    check_sizes(cert, space, metrics, f)?;
    let gauge = ConvexGauge::new(cert.phi.clone());
    let fd = f.fd_matrix(space);
    let integral: f64 = fd.iter().zip(&cert.nu).map(|(x, w)| if *w > 0.0 { w * gauge.value(*x) } else { 0.0 }).sum();
    let n = space.len();
    let mut report = VerificationReport::default();
    for s in 0..n {
        for t in s + 1..n {
            let diff = (f.values()[s] - f.values()[t]).abs();
            let modulus = modulus_value(cert, metrics.majorizing(), metrics.tau(s, t));
            let lhs = if diff == 0.0 { 0.0 } else { gauge.value(diff / modulus) };
            report.push(CheckRow::new("thm3", label, Some(s), Some(t), lhs, integral));
        }
    }
    Ok(report)
}

/// The four groups on the right of the single-step chaining bound.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ChainingTerms {
    pub n: u32,
    pub lhs: f64,
    pub start: f64,
    pub radii: f64,
    pub tails: f64,
    pub start_tail: f64,
}

impl ChainingTerms {
    pub fn rhs(&self) -> f64 {
        self.start + self.radii + self.tails + self.start_tail
    }
}

/// Every intermediate quantity of the two-point chaining argument for one pair.
#[derive(Clone, Debug, Serialize)]
pub struct ProofTrace {
    pub s: usize,
    pub t: usize,
    pub l: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub tau_s: usize,
    pub tau_t: usize,
    /// Uncapped maxima over `1..=l`.
    pub tau_s_raw: usize,
    pub tau_t_raw: usize,
    pub tau: usize,
    /// `y` of the start-level term.
    pub y: usize,
    /// `d_k(s,t)` for `k = 0..=l`.
    pub d_k: Vec<f64>,
    pub ext_s: Vec<f64>,
    pub ext_t: Vec<f64>,
    pub terms: Option<ChainingTerms>,
    pub report: VerificationReport,
}

fn start_condition(table: &RadiusTable<'_>, s: usize, t: usize, x: usize, k: usize, l: usize) -> bool {
    let n = table.space().len();
    let union: Vec<usize> =
        (0..n).filter(|&w| table.in_extended_ball(s, w, k, l) || table.in_extended_ball(t, w, k, l)).collect();
    (0..n)
        .filter(|&u| table.in_extended_ball(x, u, k, l))
        .all(|u| union.iter().all(|&w| table.in_open_ball(u, w, k - 1)))
}

fn bracket_level(table: &RadiusTable<'_>, x: usize, d: f64) -> usize {
    (1..).find(|&k| table.radius(x, k) <= d).expect("radii vanish at k*")
}

/// Level `c` of the pair: 0 at the diameter, otherwise the larger of the two indices
/// with `r_a(s) ≤ d(s,t) < r_{a−1}(s)`.
pub fn pair_level(table: &RadiusTable<'_>, s: usize, t: usize) -> (usize, usize, usize) {
    let space = table.space();
    let d = space.d(s, t);
    if d >= space.diameter() {
        return (0, 0, 0);
    }
    let a = bracket_level(table, s, d);
    let b = bracket_level(table, t, d);
    (a, b, a.max(b))
}

/// Traces the chaining argument for `(s, t)` at level `l > c`. With `test = Some((f, n))`
/// the single-step bound is also evaluated for `f` at shift `n`.
pub fn proof_trace(
    table: &RadiusTable<'_>,
    metrics: &MinorizingMetrics,
    stack: &KernelStack,
    s: usize,
    t: usize,
    l: usize,
    test: Option<(&TestFunction, u32, &str)>,
) -> Result<ProofTrace> {
    let space = table.space();
    let r = table.ratio();
    if s == t {
        return Err(Error::InvalidParameter("trace needs distinct points".into()));
    }
    if r <= 5.0 {
        return Err(Error::InvalidParameter(format!("trace needs R > 5, got {r}")));
    }
    let (a, b, c) = pair_level(table, s, t);
    if l <= c {
        return Err(Error::InvalidParameter(format!("trace needs l > c, got l={l}, c={c}")));
    }
    let cap = c.max(1);
    let tau_of = |x: usize, top: usize| (1..=top).rev().find(|&k| start_condition(table, s, t, x, k, l)).unwrap_or(1);
    let (tau_s, tau_t) = (tau_of(s, cap), tau_of(t, cap));
    let (tau_s_raw, tau_t_raw) = (tau_of(s, l), tau_of(t, l));
    let tau = tau_s.min(tau_t);
    let y = if tau == tau_t { t } else { s };
    let d = space.d(s, t);
    let diam = space.diameter();
    let ext_s: Vec<f64> = (0..=l).map(|k| table.ext(s, k, l)).collect();
    let ext_t: Vec<f64> = (0..=l).map(|k| table.ext(t, k, l)).collect();
    let d_k: Vec<f64> = (0..=l).map(|k| (ext_s[k] + ext_t[k] + d).min(diam)).collect();
    let rp = |k: usize| r.powi(k as i32);
    let label = test.map_or("", |x| x.2);
    let mut report = VerificationReport::default();

    for (x, tx) in [(s, tau_s), (t, tau_t)] {
        if tx != tau {
            continue;
        }
        let worst = (0..space.len())
            .filter(|&u| table.in_extended_ball(x, u, tau, l))
            .map(|u| table.radius(u, tau - 1))
            .fold(f64::INFINITY, f64::min);
        report.push(CheckRow::new("palinka", label, Some(s), Some(t), d_k[tau], worst));
    }

    let lhs = d_k[tau] * rp(tau) + (tau..=c).map(|k| rp(k) * (ext_s[k] + ext_t[k])).sum::<f64>();
    let rhs = r / (r - 5.0) * rp(c) * (1.5 * d + 2.0 * (ext_s[c] + ext_t[c]));
    report.push(CheckRow::new("latex0", label, Some(s), Some(t), lhs, rhs));

    let chain_sum = |x_ext: &[f64]| (tau..l).map(|k| x_ext[k] * rp(k)).sum::<f64>();
    let lhs = d_k[tau] * rp(tau) + chain_sum(&ext_s) + chain_sum(&ext_t);
    let a_const = crate::chain::constant_a(r);
    report.push(CheckRow::new("letmat2", label, Some(s), Some(t), lhs, a_const * metrics.tau(s, t)));

    let terms = test.map(|(f, shift, _)| {
        let phi = table.phi();
        let mass = space.mass();
        let n_pts = space.len();
        let sl = stack.kernel(l).apply(f.values());
        let lhs = (sl[s] - sl[t]).abs();
        let level = |k: usize| rp(k + shift as usize);
        let start = d_k[tau] * level(tau);
        let radii = (tau..l).map(|k| (ext_s[k] + ext_t[k]) * level(k)).sum::<f64>();
        let avg = |u: usize, k: usize, open: bool, thr: f64| {
            let members: Vec<usize> = (0..n_pts)
                .filter(|&v| if open { table.in_open_ball(u, v, k) } else { table.in_ball(u, v, k) })
                .collect();
            let total: f64 = members.iter().map(|&v| mass[v]).sum();
            if total == 0.0 {
                return 0.0;
            }
            members.iter().map(|&v| mass[v] * Some(f.fd(space, u, v)).filter(|&q| q >= thr).unwrap_or(0.0)).sum::<f64>()
                / total
        };
        let mut tails = 0.0;
        for x in [s, t] {
            for k in tau..l {
                let inner: f64 = (0..n_pts)
                    .filter(|&u| table.in_extended_ball(x, u, k + 1, l))
                    .map(|u| mass[u] * table.radius(u, k) * avg(u, k, false, level(k)))
                    .sum();
                tails += phi.value(rp(k + 1)) * inner;
            }
        }
        let inner: f64 = (0..n_pts)
            .filter(|&u| table.in_extended_ball(y, u, tau, l))
            .map(|u| mass[u] * avg(u, tau - 1, true, level(tau)))
            .sum();
        let start_tail = d_k[tau] * phi.value(rp(tau + 1)) * inner;
        ChainingTerms { n: shift, lhs, start, radii, tails, start_tail }
    });
    if let Some(tm) = &terms {
        report.push(CheckRow::new("letmat1", label, Some(s), Some(t), tm.lhs, tm.rhs()));
    }

    Ok(ProofTrace { s, t, l, a, b, c, tau_s, tau_t, tau_s_raw, tau_t_raw, tau, y, d_k, ext_s, ext_t, terms, report })
}

/// Computable half of the converse construction around a base point.
#[derive(Clone, Debug, Serialize)]
pub struct ConverseWitness {
    pub base: usize,
    pub l: usize,
    /// `D = Σ_{k≥0} ψ(R^{k−n0})/φ(R^k)`.
    pub d_const: f64,
    #[serde(skip)]
    pub series: SeriesSum,
    /// `(from, to, value)` segments of `h_l`, from the outside in.
    pub segments: Vec<(f64, f64, f64)>,
    pub f_values: Vec<f64>,
    /// `∫₀^{d(t,x)} φ⁻¹(1/m(B(t,ε)))dε / ∫₀^{d(t,x)} h_l` per point (`None` where undefined).
    pub ratios: Vec<Option<f64>>,
    /// `(1 + 2D)·R^{n0+1}`, to be multiplied by the unknown constant of the assumed bound.
    pub implied_factor: f64,
    pub report: VerificationReport,
}

impl ConverseWitness {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// `h_l(ε)`.
    pub fn h(&self, eps: f64) -> f64 {
        step_value(&self.segments, eps)
    }
}

fn step_value(segments: &[(f64, f64, f64)], eps: f64) -> f64 {
    let (outer_from, _, outer_value) = segments[0];
    if eps >= outer_from {
        return outer_value;
    }
    segments[1..].iter().find(|(from, to, _)| *from <= eps && eps < *to).map_or(0.0, |s| s.2)
}

fn step_integral(segments: &[(f64, f64, f64)], upper: f64) -> f64 {
    segments.iter().map(|&(from, to, v)| v * (upper.min(to) - from).max(0.0)).sum()
}

pub fn converse_witness(
    space: &MetricMeasureSpace,
    phi: &YoungFunction,
    psi: &YoungFunction,
    ratio: f64,
    n0: u32,
    base: usize,
    l: usize,
) -> Result<ConverseWitness> {
    let pep = pair_series(psi, phi, ratio, n0, 1e-15)?;
    if !pep.converges {
        return Err(Error::Precondition(format!(
            "series of ψ(R^k)/φ(R^(k+n0)) does not converge for R = {ratio}, n0 = {n0}"
        )));
    }
    let shift = n0 as i64;
    let series = sum_log_series(|k| psi.ln_at_level(ratio, k - shift) - phi.ln_at_level(ratio, k), 0, 1e-16, 0.0);
    let table = RadiusTable::new(space, phi, ratio)?;
    let rp = |k: i64| ratio.powi(k as i32);
    let rad = |k: usize| table.radius(base, k);

    let mut segments = vec![(rad(1), rad(0), rp(-shift))];
    for k in 1..=l {
        segments.push((rad(k + 1), rad(k), rp(k as i64 - shift)));
    }
    let n = space.len();
    let f_values: Vec<f64> = (0..n).map(|x| step_integral(&segments, space.d(base, x))).collect();
    let h_at = |x: usize| step_value(&segments, space.d(base, x));
    let mut report = VerificationReport::default();

    let lhs: f64 = (0..n).map(|u| space.mass()[u] * psi.value(h_at(u))).sum();
    let rhs: f64 = (0..=l).map(|k| psi.value(rp(k as i64 - shift)) / phi.value(rp(k as i64))).sum();
    report.push(CheckRow::new("spi", "", Some(base), None, lhs, rhs));

    for u in 0..n {
        for v in u + 1..n {
            let q = (f_values[u] - f_values[v]).abs() / space.d(u, v);
            report.push(CheckRow::new(
                "jensen",
                "",
                Some(u),
                Some(v),
                psi.value(q),
                psi.value(h_at(u)) + psi.value(h_at(v)),
            ));
        }
    }

    let mut breaks: Vec<f64> = space.levels(base).iter().map(|lv| lv.radius).collect();
    breaks.extend((0..=l + 1).map(rad));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let floor = rad(l + 1);
    for &eps in breaks.iter().filter(|&&e| e >= floor && e < space.diameter()) {
        let lhs = phi.inverse(1.0 / space.ball_mass_unchecked(base, eps, true));
        report.push(CheckRow::new(
            "h_pointwise",
            "",
            Some(base),
            None,
            lhs,
            rp(shift + 1) * step_value(&segments, eps),
        ));
    }

    let mut ratios = vec![None; n];
    for x in 0..n {
        if x == base || f_values[x] == 0.0 {
            continue;
        }
        let integral = ball_growth_integral(space, phi, base, space.d(base, x))?;
        ratios[x] = Some(integral / f_values[x]);
        if l >= table.kstar() {
            report.push(CheckRow::new("h_integral", "", Some(base), Some(x), integral, rp(shift + 1) * f_values[x]));
        }
    }
    let d_const = series.sum;
    Ok(ConverseWitness {
        base,
        l,
        d_const,
        series,
        segments,
        f_values,
        ratios,
        implied_factor: (1.0 + 2.0 * d_const) * rp(shift + 1),
        report,
    })
}

/// Named families of test functions, deterministic per seed.
pub fn random_test_functions(space: &MetricMeasureSpace, count: usize, seed: u64) -> Vec<(String, TestFunction)> {
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let x0 = rng.random_range(0..n);
            let (name, values): (&str, Vec<f64>) = match i % 5 {
                0 => ("noise", (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()),
                1 => ("spike", (0..n).map(|x| f64::from(u8::from(x == x0))).collect()),
                2 => ("distance", space.dist_row(x0).to_vec()),
                3 => {
                    let rho = rng.random_range(0.0..1.0) * space.diameter();
                    ("ball", space.dist_row(x0).iter().map(|&d| f64::from(u8::from(d <= rho))).collect())
                }
                _ => {
                    let centers: Vec<(usize, f64)> =
                        (0..3).map(|_| (rng.random_range(0..n), rng.random_range(0.0..1.0))).collect();
                    let values = (0..n)
                        .map(|x| centers.iter().map(|&(c, off)| space.d(c, x) + off).fold(f64::INFINITY, f64::min))
                        .collect();
                    ("lipschitz", values)
                }
            };
            let values = values.into_iter().map(|v| v * scale).collect();
            (format!("{name}-{i}"), TestFunction { values })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelFault {
    pub level: usize,
    pub row: usize,
    pub factor: f64,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub functions: usize,
    pub seed: u64,
    pub fault: Option<KernelFault>,
    /// Run the pair traces (needs `R > 5`).
    pub traces: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { functions: 4, seed: 1, fault: None, traces: true }
    }
}

/// Every structural inequality for one configuration, collected in one report.
pub fn invariant_suite(
    space: &MetricMeasureSpace,
    phi: &YoungFunction,
    psi: &YoungFunction,
    ratio: f64,
    n0: u32,
    options: &SuiteOptions,
) -> Result<VerificationReport> {
    let table = RadiusTable::new(space, phi, ratio)?;
    let metrics = MinorizingMetrics::compute(space, phi);
    let mut stack = KernelStack::new(&table);
    if let Some(fault) = options.fault {
        stack.inject_fault(fault.level, fault.row, fault.factor);
    }
    let n = space.len();
    let kstar = table.kstar();
    let r = ratio;
    let rp = |k: usize| r.powi(k as i32);
    let mass = space.mass();
    let funcs = random_test_functions(space, options.functions, options.seed);
    let top = kstar + 1;

    let per_point: Vec<VerificationReport> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut rep = VerificationReport::default();
            let p = Some(x);
            for y in 0..n {
                for k in 1..=kstar {
                    let lhs = (table.radius(x, k) - table.radius(y, k)).abs();
                    rep.push(CheckRow::new("moja", "", p, Some(y), lhs, space.d(x, y) + table.tol()));
                }
            }
            for k in 0..=kstar {
                let level = phi.value(rp(k));
                rep.push(CheckRow::new("moja1", "", p, None, 1.0 / table.ball_mass(x, k), level * (1.0 + 1e-12)));
                let open = table.open_ball_mass(x, k);
                let cap = if open == 0.0 { f64::INFINITY } else { 1.0 / open };
                rep.push(CheckRow::new("moja1", "", p, None, level, cap * (1.0 + 1e-12)));
            }
            let integral = |c: usize| ball_growth_integral(space, phi, x, table.radius(x, c)).unwrap_or(f64::NAN);
            for c in 1..=kstar {
                let lhs: f64 = (c..=kstar).map(|k| table.radius(x, k) * rp(k)).sum();
                rep.push(CheckRow::new("em1", "", p, None, lhs, r / (r - 1.0) * integral(c)));
            }
            if r > 2.0 {
                for l in 2..=top {
                    for c in 1..l {
                        let lhs: f64 = (c..l).map(|k| table.ext(x, k, l) * rp(k)).sum();
                        rep.push(CheckRow::new(
                            "szesc",
                            "",
                            p,
                            None,
                            lhs,
                            r * r / ((r - 1.0) * (r - 2.0)) * integral(c),
                        ));
                    }
                }
            }
            for l in 1..=top {
                for k in 0..l {
                    let ext = table.ext(x, k, l);
                    for u in (0..n).filter(|&u| table.in_extended_ball(x, u, k + 1, l)) {
                        let bound = table.radius(x, k) + table.ext(x, k + 1, l);
                        rep.push(CheckRow::new("be1", "", p, Some(u), table.radius(u, k), bound + table.tol()));
                        rep.push(CheckRow::new("be1", "", p, Some(u), bound, ext + table.tol()));
                        let reach = table.ball_k(u, k).into_iter().map(|v| space.d(x, v)).fold(0.0, f64::max);
                        rep.push(CheckRow::new("be1", "", p, Some(u), reach, ext + table.tol()));
                    }
                }
            }
            rep
        })
        .collect();
    let mut report = VerificationReport::default();
    per_point.into_iter().for_each(|r| report.extend(r));

    for l in 0..=top {
        for k in 0..=l {
            let comp = stack.composed(l, k)?;
            for x in 0..n {
                let row_sum: f64 = comp.matrix.row(x).iter().sum();
                report.push(CheckRow::new("dwa", "", Some(x), None, (row_sum - 1.0).abs(), 1e-12));
                let outside: f64 =
                    (0..n).filter(|&v| !table.in_extended_ball(x, v, k, l)).map(|v| comp.matrix[(x, v)].abs()).sum();
                report.push(CheckRow::new("dwa", "", Some(x), None, outside, 0.0));
                for (name, f) in &funcs {
                    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
                    let lhs = comp.apply(&abs)[x];
                    let inside: f64 =
                        (0..n).filter(|&v| table.in_extended_ball(x, v, k, l)).map(|v| mass[v] * abs[v]).sum();
                    report.push(CheckRow::new("piss", name, Some(x), None, lhs, phi.value(rp(k)) * inside));
                }
            }
        }
    }

    for k in 0..=top {
        let p = stack.kernel(k);
        let ones = p.apply(&vec![1.0; n]);
        for (x, one) in ones.iter().enumerate() {
            report.push(CheckRow::new("operator_unit", "", Some(x), None, (one - 1.0).abs(), 1e-12));
        }
        for (name, f) in &funcs {
            let sf = p.apply(f.values());
            let shifted: Vec<f64> = f.values().iter().map(|v| v + 1.0).collect();
            let sg = p.apply(&shifted);
            for x in 0..n {
                report.push(CheckRow::new("operator_monotone", name, Some(x), None, sf[x], sg[x]));
                if k >= kstar {
                    report.push(CheckRow::new(
                        "operator_limit",
                        name,
                        Some(x),
                        None,
                        (sf[x] - f.values()[x]).abs(),
                        1e-12,
                    ));
                }
            }
        }
    }

    if options.traces && r > 5.0 {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (s + 1..n).map(move |t| (s, t))).collect();
        let traces: Vec<Result<VerificationReport>> = pairs
            .par_iter()
            .map(|&(s, t)| {
                let (_, _, c) = pair_level(&table, s, t);
                let mut levels = vec![c + 1];
                if kstar + 1 > c + 1 {
                    levels.push(kstar + 1);
                }
                let mut rep = VerificationReport::default();
                for l in levels {
                    let base = proof_trace(&table, &metrics, &stack, s, t, l, None)?;
                    rep.extend(base.report);
                    for (name, f) in &funcs {
                        let tr = proof_trace(&table, &metrics, &stack, s, t, l, Some((f, n0 + 1, name)))?;
                        rep.extend(VerificationReport {
                            rows: tr.report.rows.into_iter().filter(|r| r.name == "letmat1").collect(),
                            params: BTreeMap::new(),
                        });
                    }
                }
                Ok(rep)
            })
            .collect();
        for t in traces {
            report.extend(t?);
        }
    }

    if pair_series(psi, phi, r, n0, 1e-15)?.converges {
        for t in 0..n {
            let w = converse_witness(space, phi, psi, r, n0, t, kstar)?;
            report.extend(w.report);
        }
    }
    report.params.insert("R".into(), r.to_string());
    report.params.insert("n0".into(), n0.to_string());
    report.params.insert("kstar".into(), kstar.to_string());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{certificate_thm1, certificate_thm3};
    use crate::mspace::{generate_space, SpaceGenerator};

    fn pw(p: f64) -> YoungFunction {
        YoungFunction::power(p).unwrap()
    }

    fn two_point() -> MetricMeasureSpace {
        MetricMeasureSpace::uniform(vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn line3() -> MetricMeasureSpace {
        MetricMeasureSpace::uniform(vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn margin_conventions() {
        assert_eq!(margin(1.0, 2.0), 0.5);
        assert_eq!(margin(0.5, 0.25), -0.25);
        assert_eq!(margin(3.0, f64::INFINITY), 1.0);
        assert_eq!(margin(f64::NAN, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn difference_quotient() {
        let s = line3();
        let f = TestFunction::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.fd(&s, 0, 1), 1.0);
        assert_eq!(f.fd(&s, 0, 2), 0.0);
        assert_eq!(f.fd(&s, 1, 1), 0.0);
        assert_eq!(f.fd(&s, 1, 0), f.fd(&s, 0, 1));
    }

    #[test]
    fn thm1_constant_function() {
        let s = line3();
        let cert = certificate_thm1(&s, &pw(1.0), &pw(2.0), 6.0, 1, 1e-12).unwrap();
        let m = MinorizingMetrics::compute(&s, &pw(1.0));
        let f = TestFunction::new(vec![2.0; 3]).unwrap();
        let rep = verify_thm1(&cert, &s, &m, &f, "const", Some(1.0)).unwrap();
        assert!(rep.passed());
        assert!(rep.rows.iter().all(|r| r.lhs == 0.0));
    }

    #[test]
    fn thm1_line_bump() {
        let s = line3();
        let cert = certificate_thm1(&s, &pw(1.0), &pw(2.0), 6.0, 1, 1e-12).unwrap();
        let m = MinorizingMetrics::compute(&s, &pw(1.0));
        let f = TestFunction::new(vec![0.0, 1.0, 0.0]).unwrap();
        let rep = verify_thm1(&cert, &s, &m, &f, "bump", Some(1.0)).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn thm1_homogeneous_and_sign_blind() {
        let s = line3();
        let cert = certificate_thm1(&s, &pw(1.0), &pw(2.0), 6.0, 1, 1e-12).unwrap();
        let m = MinorizingMetrics::compute(&s, &pw(1.0));
        let f = TestFunction::new(vec![0.3, -1.0, 0.5]).unwrap();
        let a = verify_thm1(&cert, &s, &m, &f, "f", None).unwrap();
        let b = verify_thm1(&cert, &s, &m, &f.scaled(-1.0), "f", None).unwrap();
        assert_eq!(a.rows, b.rows);
        let c = verify_thm1(&cert, &s, &m, &f.scaled(3.0), "f", None).unwrap();
        for (x, y) in a.rows.iter().zip(&c.rows) {
            assert!((3.0 * (x.rhs - x.lhs) - (y.rhs - y.lhs)).abs() < 1e-9 * y.rhs.max(1.0));
        }
    }

    #[test]
    fn thm3_two_point_examples() {
        let s = two_point();
        let cert = certificate_thm3(&s, &pw(2.0), 6.0, 1e-12).unwrap();
        let m = MinorizingMetrics::compute(&s, &pw(2.0));
        let f = TestFunction::new(vec![0.0, 1.0]).unwrap();
        let rep = verify_thm3(&cert, &s, &m, &f, "step").unwrap();
        assert!(rep.passed());
        // f^d = 1 on the off-diagonal, so ∫φ₊(f^d)dν = 0 and the left side must vanish too
        assert_eq!(rep.rows[0].rhs, 0.0);
        assert_eq!(rep.rows[0].lhs, 0.0);
        let c = TestFunction::new(vec![4.0, 4.0]).unwrap();
        assert!(verify_thm3(&cert, &s, &m, &c, "const").unwrap().passed());
    }

    #[test]
    fn trace_two_point() {
        let s = two_point();
        let table = RadiusTable::new(&s, &pw(2.0), 6.0).unwrap();
        let m = MinorizingMetrics::compute(&s, &pw(2.0));
        let stack = KernelStack::new(&table);
        let tr = proof_trace(&table, &m, &stack, 0, 1, 1, None).unwrap();
        assert_eq!(tr.c, 0);
        assert_eq!(tr.tau, 1);
        assert!(tr.report.passed());
        let letmat2 = tr.report.rows_named("letmat2").next().unwrap();
        assert!(letmat2.lhs <= 97.2 * m.tau(0, 1) + 1e-9);
    }

    #[test]
    fn trace_line_pair() {
        let s = line3();
        let table = RadiusTable::new(&s, &pw(1.0), 6.0).unwrap();
        let m = MinorizingMetrics::compute(&s, &pw(1.0));
        let stack = KernelStack::new(&table);
        let f = TestFunction::new(vec![0.0, 1.0, 0.0]).unwrap();
        let tr = proof_trace(&table, &m, &stack, 0, 1, 3, Some((&f, 2, "bump"))).unwrap();
        assert!(tr.report.passed(), "{:?}", tr.report.failures().collect::<Vec<_>>());
        assert!(tr.tau >= 1 && tr.tau <= tr.c.max(1));
        assert!(proof_trace(&table, &m, &stack, 0, 1, tr.c, None).is_err());
        assert!(proof_trace(&table, &m, &stack, 1, 1, 3, None).is_err());
    }

    #[test]
    fn converse_constant_for_power_pair() {
        // (ψ, φ) = (x, x²): Σ 2^{k−1}/4^k = 1
        let s = line3();
        let w = converse_witness(&s, &pw(2.0), &pw(1.0), 2.0, 1, 0, 3).unwrap();
        assert!((w.d_const - 1.0).abs() < 1e-12);
        assert!((w.implied_factor - 12.0).abs() < 1e-12);
        assert!(converse_witness(&s, &pw(1.0), &pw(2.0), 2.0, 1, 0, 3).is_err());
    }

    #[test]
    fn converse_line_at_kstar() {
        let s = line3();
        let phi = pw(1.0);
        let table = RadiusTable::new(&s, &phi, 2.0).unwrap();
        let psi = YoungFunction::power(1.0).unwrap();
        // (ψ, φ) = (x, x) needs n0 ≥ 1: Σ R^{k−n0}/R^k diverges, so pick n0 with φ = x² instead
        assert!(converse_witness(&s, &phi, &psi, 2.0, 1, 0, table.kstar()).is_err());
        let phi2 = pw(2.0);
        let t2 = RadiusTable::new(&s, &phi2, 2.0).unwrap();
        let w = converse_witness(&s, &phi2, &psi, 2.0, 1, 0, t2.kstar()).unwrap();
        assert!(w.report.passed(), "{:?}", w.report.failures().collect::<Vec<_>>());
        assert!(w.max_ratio() <= 4.0 + 1e-12);
    }

    #[test]
    fn converse_zero_step_near_base() {
        let s = generate_space(&SpaceGenerator::Grid { n: 20, gamma: 1.0, scale: 1.0, mass: None }, 0).unwrap();
        let w = converse_witness(&s, &pw(2.0), &pw(1.0), 2.0, 1, 0, 0).unwrap();
        // h_0 vanishes below r_1(t), so f is flat there
        let r1 = RadiusTable::new(&s, &pw(2.0), 2.0).unwrap().radius(0, 1);
        assert!(r1 > 0.0);
        assert_eq!(w.h(0.5 * r1), 0.0);
        assert_eq!(w.h(r1), 0.5);
        assert!(w.report.rows_named("spi").all(|r| r.pass));
    }

    #[test]
    fn suite_two_point() {
        let rep = invariant_suite(&two_point(), &pw(1.0), &pw(2.0), 6.0, 1, &SuiteOptions::default()).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().take(5).collect::<Vec<_>>());
    }

    #[test]
    fn suite_detects_kernel_fault() {
        let s = generate_space(&SpaceGenerator::Random { n: 8, random_mass: true }, 3).unwrap();
        let options =
            SuiteOptions { fault: Some(KernelFault { level: 1, row: 2, factor: 1.1 }), ..SuiteOptions::default() };
        let rep = invariant_suite(&s, &pw(1.0), &pw(2.0), 6.0, 1, &options).unwrap();
        assert!(!rep.passed());
        assert!(rep.rows_named("dwa").any(|r| !r.pass));
    }

    #[test]
    fn null_atom_radius_limit() {
        // a zero-mass point keeps radius equal to its distance to the support
        let dist = vec![0.0, 1.0, 3.0, 1.0, 0.0, 2.0, 3.0, 2.0, 0.0];
        let s = MetricMeasureSpace::new(dist, vec![0.5, 0.5, 0.0], None).unwrap();
        let t = RadiusTable::with_null_atoms(&s, &pw(2.0), 2.0).unwrap();
        assert_eq!(t.radius(0, 50), 0.0);
        assert_eq!(t.radius(1, 50), 0.0);
        assert_eq!(t.radius(2, 50), 2.0);
    }
}
