//! Conditions, certificates, verification and Monte Carlo for one scenario.

use chaincert::chain::{certificate_thm1, certificate_thm3, CertificateRecord, ChainCertificate, Theorem};
use chaincert::mc::{
    brownian_grid_sampler, empirical_corollary, gaussian_cov_sampler, increment_check, sample, ProcessSampler,
    Statistic,
};
use chaincert::minorize::MinorizingMetrics;
use chaincert::mspace::MetricMeasureSpace;
use chaincert::verify::{
    invariant_suite, random_test_functions, verify_thm1, verify_thm3, CheckRow, CheckSummary, SuiteOptions,
    TestFunction, VerificationReport,
};
use chaincert::young::{check_nabla_prime, log_grid, pair_series};
use serde::Serialize;

use crate::config::{McSettings, Scenario, SpaceSource};
use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSummary {
    pub theorem: Theorem,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairRow {
    pub s: usize,
    pub t: usize,
    pub d: f64,
    pub tau: f64,
    /// `K·τ` of the T1 certificate (multiplies the Orlicz norm of `f^d`).
    pub bound_t1: Option<f64>,
    pub modulus_t3: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TauRow {
    pub s: usize,
    pub t: usize,
    pub d: f64,
    pub tau: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct McRow {
    pub theorem: Theorem,
    pub statistic: String,
    pub path: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct McSummary {
    pub theorem: Theorem,
    pub paths: usize,
    pub stats: Vec<Statistic>,
    pub increment_pairs: usize,
    pub increment_failures: usize,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub status: String,
    pub exit_code: u8,
    pub n_points: usize,
    pub requested_ratio: f64,
    pub n0: u32,
    pub seed: u64,
    pub majorizing: f64,
    pub certificates: Vec<CertificateSummary>,
    pub verification: Vec<CheckSummary>,
    pub mc: Vec<McSummary>,
    pub warnings: Vec<String>,
}

pub struct RunOutput {
    pub certificates: Vec<CertificateRecord>,
    pub tau: Vec<TauRow>,
    pub pairs: Vec<PairRow>,
    pub verify: Vec<CheckRow>,
    pub mc: Vec<McRow>,
    pub summary: Summary,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.verify.iter().filter(|r| !r.pass).count()
            + self.summary.mc.iter().flat_map(|m| &m.stats).filter(|s| !s.pass).count()
    }
}

fn test_functions(scenario: &Scenario, space: &MetricMeasureSpace) -> Result<Vec<(String, TestFunction)>, CliError> {
    let mut out = Vec::new();
    for (i, row) in scenario.functions.explicit.iter().enumerate() {
        if row.len() != space.len() {
            return Err(CliError::Config(format!(
                "explicit function {i} has {} values for {} points",
                row.len(),
                space.len()
            )));
        }
        out.push((
            format!("explicit-{i}"),
            TestFunction::new(row.clone()).map_err(|e| CliError::Config(e.to_string()))?,
        ));
    }
    out.extend(random_test_functions(space, scenario.functions.random, scenario.functions.seed));
    Ok(out)
}

fn brownian_covariance(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n * n).map(|i| (i / n).min(i % n) as f64 * h).collect()
}

fn sampler_for(
    scenario: &Scenario,
    space: &MetricMeasureSpace,
    mc: &McSettings,
    theorem: Theorem,
) -> Result<ProcessSampler, CliError> {
    let gauge = match theorem {
        Theorem::T1 => scenario.psi.as_ref().expect("t1 scenarios carry ψ"),
        Theorem::T3 => &scenario.phi,
    };
    match (&scenario.space, &mc.covariance) {
        (_, Some(cov)) => Ok(gaussian_cov_sampler(space, cov, gauge, mc.seed)?),
        (SpaceSource::BrownianGrid(n), None) if gauge == scenario.increment_gauge() => {
            Ok(brownian_grid_sampler(*n, gauge, mc.seed)?)
        }
        (SpaceSource::BrownianGrid(n), None) => {
            Ok(gaussian_cov_sampler(space, &brownian_covariance(*n), gauge, mc.seed)?)
        }
        _ => Err(CliError::Config("mc needs a covariance on this space".into())),
    }
}

pub fn run(scenario: &Scenario) -> Result<RunOutput, CliError> {
    let space = scenario.build_space()?;
    let n = space.len();
    let phi = &scenario.phi;
    let mut warnings = Vec::new();
    let metrics = MinorizingMetrics::compute(&space, phi);

    let mut certs: Vec<ChainCertificate> = Vec::new();
    if scenario.theorems.t1 {
        let psi = scenario.psi.as_ref().expect("checked at load");
        let cert = certificate_thm1(&space, phi, psi, scenario.ratio, scenario.n0, scenario.tail_tol)?;
        if pair_series(phi, psi, cert.ratio, scenario.n0, scenario.tail_tol)?.heuristic {
            warnings
                .push("series tail bound for a piecewise-linear Young function rests on observed term ratios".into());
        }
        certs.push(cert);
    }
    if scenario.theorems.t3 {
        certs.push(certificate_thm3(&space, phi, scenario.ratio, scenario.tail_tol)?);
    }
    for c in &certs {
        if let Some(l) = c.escalation {
            warnings.push(format!("{:?}: R = {} escalated to R^{l} = {}", c.theorem, c.requested_ratio, c.ratio));
        }
    }

    let nabla = match (scenario.functions.nabla_r, &scenario.psi) {
        (Some(r), Some(psi)) if scenario.theorems.t1 => {
            let check = check_nabla_prime(psi, r, 1.0, &log_grid(1.0, 1e3, 40))?;
            if check.holds {
                Some(r)
            } else {
                warnings.push(format!(
                    "ψ fails the product condition with r = {r} at {:?}; uniform bound skipped",
                    check.violation
                ));
                None
            }
        }
        _ => None,
    };

    let functions = test_functions(scenario, &space)?;
    let mut report = VerificationReport::default();
    for cert in &certs {
        for (label, f) in &functions {
            report.extend(match cert.theorem {
                Theorem::T1 => verify_thm1(cert, &space, &metrics, f, label, nabla)?,
                Theorem::T3 => verify_thm3(cert, &space, &metrics, f, label)?,
            });
        }
    }
    if let Some(count) = scenario.suite {
        let ratio = certs.first().map_or(scenario.ratio, |c| c.ratio);
        let psi = scenario.psi.as_ref().unwrap_or(phi);
        let options = SuiteOptions { functions: count, seed: scenario.seed, fault: None, traces: true };
        report.extend(invariant_suite(&space, phi, psi, ratio, scenario.n0, &options)?);
    }

    let t1 = certs.iter().find(|c| c.theorem == Theorem::T1);
    let t3 = certs.iter().find(|c| c.theorem == Theorem::T3);
    let mut tau = Vec::with_capacity(n * n);
    let mut pairs = Vec::new();
    for s in 0..n {
        for t in 0..n {
            tau.push(TauRow { s, t, d: space.d(s, t), tau: metrics.tau(s, t) });
            if s < t {
                pairs.push(PairRow {
                    s,
                    t,
                    d: space.d(s, t),
                    tau: metrics.tau(s, t),
                    bound_t1: t1.map(|c| c.k * metrics.tau(s, t)),
                    modulus_t3: t3.map(|c| chaincert::chain::modulus_thm3(c, &metrics, s, t)).transpose()?,
                });
            }
        }
    }

    let mut mc_rows = Vec::new();
    let mut mc_summary = Vec::new();
    if let Some(mc) = &scenario.mc {
        for cert in &certs {
            let sampler = sampler_for(scenario, &space, mc, cert.theorem)?;
            let batch = sample(&sampler, mc.paths, mc.seed)?;
            let inc = increment_check(&batch, &sampler)?;
            let inc_fail = inc.iter().filter(|r| !r.pass).count();
            if inc_fail > 0 {
                warnings.push(format!(
                    "{:?}: {inc_fail} of {} pairs exceed 1 + 3·stderr in E ψ(|ΔX|/d)",
                    cert.theorem,
                    inc.len()
                ));
            }
            let rep = empirical_corollary(&batch, cert, &metrics)?;
            for (path, values) in rep.per_path.iter().enumerate() {
                for (stat, value) in rep.stats.iter().zip(values) {
                    mc_rows.push(McRow { theorem: cert.theorem, statistic: stat.name.clone(), path, value: *value });
                }
            }
            mc_summary.push(McSummary {
                theorem: cert.theorem,
                paths: mc.paths,
                stats: rep.stats,
                increment_pairs: inc.len(),
                increment_failures: inc_fail,
            });
        }
    }

    let summary = Summary {
        name: scenario.name.clone(),
        status: String::new(),
        exit_code: 0,
        n_points: n,
        requested_ratio: scenario.ratio,
        n0: scenario.n0,
        seed: scenario.seed,
        majorizing: metrics.majorizing(),
        certificates: certs
            .iter()
            .map(|c| CertificateSummary { theorem: c.theorem, r: c.ratio, a: c.a, b: c.b, k: c.k, c: c.c })
            .collect(),
        verification: report.summary(),
        mc: mc_summary,
        warnings,
    };
    Ok(RunOutput {
        certificates: certs.iter().map(|c| c.record()).collect(),
        tau,
        pairs,
        verify: report.rows,
        mc: mc_rows,
        summary,
    })
}
