//! Finite metric-measure spaces, ball masses and the radius ladder `r_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::young::YoungFunction;

const SYM_TOL: f64 = 1e-12;
const TRIANGLE_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-12;
/// Relative slack when comparing `m(B)·φ(R^k)` with 1.
const LEVEL_SLACK: f64 = 1e-12;

/// Distance level around a point: all points at exactly `radius`, and the closed-ball
/// mass up to and including them.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub radius: f64,
    pub closed_mass: f64,
}

#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    n: usize,
    dist: Vec<f64>,
    mass: Vec<f64>,
    labels: Option<Vec<String>>,
    diameter: f64,
    levels: Vec<Vec<Level>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistanceData {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

/// On-disk layout of a space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub dist: DistanceData,
    pub mass: Vec<f64>,
}

impl MetricMeasureSpace {
    /// `dist` is row-major `n × n`.
    pub fn new(dist: Vec<f64>, mass: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = mass.len();
        let bad = |msg: String| Err(Error::InvalidSpace(msg));
        if n == 0 {
            return bad("space has no points".into());
        }
        if dist.len() != n * n {
            return bad(format!("distance matrix has {} entries, expected {}", dist.len(), n * n));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return bad(format!("{} labels for {} points", l.len(), n));
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return bad(format!("nonzero diagonal at {i}"));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return bad(format!("invalid distance {d} at ({i}, {j})"));
                }
                if (d - dist[j * n + i]).abs() > SYM_TOL * d.max(1.0) {
                    return bad(format!("asymmetric distances at ({i}, {j})"));
                }
                if i != j && d == 0.0 {
                    return bad(format!("points {i} and {j} coincide"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = dist[i * n + j];
                for k in 0..n {
                    if dist[i * n + k] > dij + dist[j * n + k] + TRIANGLE_TOL {
                        return bad(format!("triangle inequality fails for ({i}, {j}, {k})"));
                    }
                }
            }
        }
        if let Some(w) = mass.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return bad(format!("invalid mass {w}"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return bad(format!("masses sum to {total}, expected 1"));
        }
        let diameter = dist.iter().cloned().fold(0.0, f64::max);
        let levels = (0..n).map(|x| build_levels(&dist[x * n..(x + 1) * n], &mass)).collect();
        Ok(Self { n, dist, mass, labels, diameter, levels })
    }

    pub fn uniform(dist: Vec<f64>) -> Result<Self> {
        let n = (dist.len() as f64).sqrt().round() as usize;
        Self::new(dist, vec![1.0 / n as f64; n], None)
    }

    pub fn from_file(file: SpaceFile) -> Result<Self> {
        let dist = match file.dist {
            DistanceData::Flat(v) => v,
            DistanceData::Nested(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidSpace("distance rows have unequal lengths".into()));
                }
                rows.into_iter().flatten().collect()
            }
        };
        Self::new(dist, file.mass, file.labels)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> SpaceFile {
        SpaceFile { labels: self.labels.clone(), dist: DistanceData::Flat(self.dist.clone()), mass: self.mass.clone() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn dist_row(&self, x: usize) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: usize) -> String {
        self.labels.as_ref().map_or_else(|| x.to_string(), |l| l[x].clone())
    }

    /// `D(T)`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Sorted distinct distance levels from `x`, starting with radius 0.
    pub fn levels(&self, x: usize) -> &[Level] {
        &self.levels[x]
    }

    pub fn min_mass(&self) -> f64 {
        self.mass.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn null_atoms(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.mass[i] == 0.0).collect()
    }

    /// Mass of `B(x, ε)` (`closed`) or `B°(x, ε)`.
    pub fn ball_mass(&self, x: usize, eps: f64, closed: bool) -> Result<f64> {
        if !(eps >= 0.0) {
            return Err(Error::NegativeArgument(eps));
        }
        Ok(self.ball_mass_unchecked(x, eps, closed))
    }

    pub(crate) fn ball_mass_unchecked(&self, x: usize, eps: f64, closed: bool) -> f64 {
        let lv = &self.levels[x];
        let idx = if closed { lv.partition_point(|l| l.radius <= eps) } else { lv.partition_point(|l| l.radius < eps) };
        if idx == 0 {
            0.0
        } else {
            lv[idx - 1].closed_mass
        }
    }

    /// Indices in `B(x, ε)` or `B°(x, ε)`.
    pub fn ball(&self, x: usize, eps: f64, closed: bool) -> Vec<usize> {
        self.dist_row(x)
            .iter()
            .enumerate()
            .filter(|(_, &d)| if closed { d <= eps } else { d < eps })
            .map(|(i, _)| i)
            .collect()
    }
}

fn build_levels(row: &[f64], mass: &[f64]) -> Vec<Level> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut levels: Vec<Level> = Vec::new();
    let mut acc = 0.0;
    for i in order {
        acc += mass[i];
        match levels.last_mut() {
            Some(l) if l.radius == row[i] => l.closed_mass = acc,
            _ => levels.push(Level { radius: row[i], closed_mass: acc }),
        }
    }
    if let Some(l) = levels.last_mut() {
        // the whole space carries mass exactly 1
        l.closed_mass = 1.0;
    }
    levels
}

/// `r_k(x)` for every point and `0 ≤ k ≤ k*`, together with the balls built from them.
#[derive(Clone, Debug)]
pub struct RadiusTable<'a> {
    space: &'a MetricMeasureSpace,
    phi: YoungFunction,
    ratio: f64,
    kstar: usize,
    rk: Vec<Vec<f64>>,
}

impl<'a> RadiusTable<'a> {
    pub fn new(space: &'a MetricMeasureSpace, phi: &YoungFunction, ratio: f64) -> Result<Self> {
        if let Some(&x) = space.null_atoms().first() {
            return Err(Error::NullAtom(x));
        }
        Self::build(space, phi, ratio)
    }

    /// Admits zero-mass points; their radii converge to the distance to the support
    /// instead of vanishing.
    pub fn with_null_atoms(space: &'a MetricMeasureSpace, phi: &YoungFunction, ratio: f64) -> Result<Self> {
        Self::build(space, phi, ratio)
    }

    fn build(space: &'a MetricMeasureSpace, phi: &YoungFunction, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::InvalidParameter(format!("R must be > 1, got {ratio}")));
        }
        let min_pos = space.mass().iter().cloned().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
        let target = (1.0 / min_pos).ln();
        let mut kstar = 1;
        while phi.ln_at_level(ratio, kstar as i64) < target * (1.0 - LEVEL_SLACK) - LEVEL_SLACK {
            kstar += 1;
            if kstar > 100_000 {
                return Err(Error::Overflow(kstar));
            }
        }
        let rk = (0..space.len())
            .map(|x| {
                let lv = space.levels(x);
                let mut row = Vec::with_capacity(kstar + 1);
                row.push(space.diameter());
                for k in 1..=kstar {
                    let ln_phi = phi.ln_at_level(ratio, k as i64);
                    let r = lv
                        .iter()
                        .find(|l| l.closed_mass > 0.0 && l.closed_mass.ln() + ln_phi >= -LEVEL_SLACK)
                        .map_or(space.diameter(), |l| l.radius);
                    row.push(r);
                }
                row
            })
            .collect();
        Ok(Self { space, phi: phi.clone(), ratio, kstar, rk })
    }

    pub fn space(&self) -> &'a MetricMeasureSpace {
        self.space
    }

    pub fn phi(&self) -> &YoungFunction {
        &self.phi
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Level from which all radii are frozen.
    pub fn kstar(&self) -> usize {
        self.kstar
    }

    /// `r_k(x)`; constant for `k ≥ k*`.
    #[inline]
    pub fn radius(&self, x: usize, k: usize) -> f64 {
        self.rk[x][k.min(self.kstar)]
    }

    pub fn radii(&self, x: usize) -> &[f64] {
        &self.rk[x]
    }

    /// `r^l_k(x) = Σ_{i=k}^{l} 2^{i−k} r_i(x)`.
    pub fn extended_radius(&self, x: usize, k: usize, l: usize) -> Result<f64> {
        if k > l {
            return Err(Error::InvalidParameter(format!("extended radius needs k <= l, got k={k}, l={l}")));
        }
        Ok(self.ext(x, k, l))
    }

    pub(crate) fn ext(&self, x: usize, k: usize, l: usize) -> f64 {
        let mut acc = 0.0;
        let mut w = 1.0;
        for i in k..=l {
            let r = self.radius(x, i);
            if r == 0.0 && i >= self.kstar {
                break;
            }
            acc += w * r;
            w *= 2.0;
        }
        acc
    }

    /// Membership tolerance for sums of radii.
    pub fn tol(&self) -> f64 {
        1e-12 * self.space.diameter().max(f64::MIN_POSITIVE)
    }

    /// `v ∈ B_k(u)`, with `B_0 = T`.
    #[inline]
    pub fn in_ball(&self, u: usize, v: usize, k: usize) -> bool {
        k == 0 || self.space.d(u, v) <= self.radius(u, k)
    }

    /// `v ∈ B°_k(u)`, with `B°_0 = T`.
    #[inline]
    pub fn in_open_ball(&self, u: usize, v: usize, k: usize) -> bool {
        k == 0 || self.space.d(u, v) < self.radius(u, k)
    }

    /// `v ∈ B^l_k(x)`.
    pub fn in_extended_ball(&self, x: usize, v: usize, k: usize, l: usize) -> bool {
        self.space.d(x, v) <= self.ext(x, k, l) + self.tol()
    }

    pub fn ball_k(&self, u: usize, k: usize) -> Vec<usize> {
        (0..self.space.len()).filter(|&v| self.in_ball(u, v, k)).collect()
    }

    pub fn open_ball_k(&self, u: usize, k: usize) -> Vec<usize> {
        (0..self.space.len()).filter(|&v| self.in_open_ball(u, v, k)).collect()
    }

    pub fn extended_ball(&self, x: usize, k: usize, l: usize) -> Vec<usize> {
        (0..self.space.len()).filter(|&v| self.in_extended_ball(x, v, k, l)).collect()
    }

    /// `m(B_k(u))`.
    pub fn ball_mass(&self, u: usize, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.space.ball_mass_unchecked(u, self.radius(u, k), true)
        }
    }

    /// `m(B°_k(u))`.
    pub fn open_ball_mass(&self, u: usize, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.space.ball_mass_unchecked(u, self.radius(u, k), false)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceGenerator {
    /// `n` equispaced points on `[0, 1]` with `d = scale·|s − t|^gamma`.
    Grid {
        n: usize,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        mass: Option<Vec<f64>>,
    },
    /// Balanced binary tree of the given depth with the hop metric.
    Tree {
        depth: u32,
        #[serde(default)]
        mass: Option<Vec<f64>>,
    },
    /// Uniform points in the unit square, Euclidean metric.
    Random {
        n: usize,
        #[serde(default)]
        random_mass: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let t: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= t);
    w
}

fn supplied_or_uniform(mass: &Option<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    match mass {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(m) if m.len() == n => Ok(m.clone()),
        Some(m) => Err(Error::InvalidParameter(format!("{} masses supplied for {n} points", m.len()))),
    }
}

pub fn generate_space(generator: &SpaceGenerator, seed: u64) -> Result<MetricMeasureSpace> {
    match generator {
        SpaceGenerator::Grid { n, gamma, scale, mass } => {
            let n = *n;
            if n == 0 {
                return Err(Error::InvalidParameter("grid needs at least one point".into()));
            }
            if !(*gamma > 0.0 && *gamma <= 1.0) {
                return Err(Error::InvalidParameter(format!("grid exponent must lie in (0, 1], got {gamma}")));
            }
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!("grid scale must be positive, got {scale}")));
            }
            let pts: Vec<f64> = (0..n).map(|i| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 }).collect();
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        dist[i * n + j] = scale * (pts[i] - pts[j]).abs().powf(*gamma);
                    }
                }
            }
            MetricMeasureSpace::new(dist, supplied_or_uniform(mass, n)?, None)
        }
        SpaceGenerator::Tree { depth, mass } => {
            let n = (1usize << (depth + 1)) - 1;
            let depth_of = |mut i: usize| {
                let mut d = 0;
                while i > 0 {
                    i = (i - 1) / 2;
                    d += 1;
                }
                d
            };
            let hops = |mut a: usize, mut b: usize| {
                let (mut da, mut db) = (depth_of(a), depth_of(b));
                let mut h = 0;
                while a != b {
                    if da >= db {
                        a = (a - 1) / 2;
                        da -= 1;
                    } else {
                        b = (b - 1) / 2;
                        db -= 1;
                    }
                    h += 1;
                }
                h as f64
            };
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    dist[i * n + j] = hops(i, j);
                }
            }
            MetricMeasureSpace::new(dist, supplied_or_uniform(mass, n)?, None)
        }
        SpaceGenerator::Random { n, random_mass } => {
            let n = *n;
            if n == 0 {
                return Err(Error::InvalidParameter("random space needs at least one point".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        dist[i * n + j] = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
                    }
                }
            }
            let mass = if *random_mass {
                normalize((0..n).map(|_| rng.random_range(0.2..1.8)).collect())
            } else {
                vec![1.0 / n as f64; n]
            };
            MetricMeasureSpace::new(dist, mass, None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn two_point() -> MetricMeasureSpace {
        MetricMeasureSpace::uniform(vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub(crate) fn line3() -> MetricMeasureSpace {
        MetricMeasureSpace::uniform(vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]).unwrap()
    }

    fn pw(p: f64) -> YoungFunction {
        YoungFunction::power(p).unwrap()
    }

    #[test]
    fn ball_mass_examples() {
        let s = two_point();
        assert_eq!(s.ball_mass(0, 0.5, true).unwrap(), 0.5);
        assert_eq!(s.ball_mass(0, s.diameter(), true).unwrap(), 1.0);
        assert_eq!(s.ball_mass(0, 1.0, false).unwrap(), 0.5);
        assert_eq!(s.ball_mass(0, 1.0, true).unwrap(), 1.0);
        assert_eq!(s.ball_mass(0, 0.0, false).unwrap(), 0.0);
        assert!(s.ball_mass(0, -1.0, true).is_err());
    }

    #[test]
    fn validation_rejects_bad_spaces() {
        assert!(MetricMeasureSpace::uniform(vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(MetricMeasureSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.6], None).is_err());
        assert!(MetricMeasureSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![1.5, -0.5], None).is_err());
        // 0-1-2 with d(0,2) = 3 > 1 + 1
        let bad = vec![0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0];
        assert!(MetricMeasureSpace::uniform(bad).is_err());
        assert!(MetricMeasureSpace::uniform(vec![0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = line3();
        let text = serde_json::to_string(&s.to_file()).unwrap();
        let back = MetricMeasureSpace::from_json(&text).unwrap();
        assert_eq!(back.diameter(), 2.0);
        let nested = r#"{"dist": [[0, 1], [1, 0]], "mass": [0.25, 0.75], "labels": ["a", "b"]}"#;
        let s = MetricMeasureSpace::from_json(nested).unwrap();
        assert_eq!(s.label(1), "b");
        assert_eq!(s.mass()[1], 0.75);
    }

    #[test]
    fn radius_table_examples() {
        let s = two_point();
        let t = RadiusTable::new(&s, &pw(2.0), 2.0).unwrap();
        assert_eq!(t.kstar(), 1);
        assert_eq!(t.radius(0, 0), 1.0);
        assert_eq!(t.radius(0, 1), 0.0);

        let s = line3();
        let t = RadiusTable::new(&s, &pw(1.0), 2.0).unwrap();
        assert_eq!(t.kstar(), 2);
        assert_eq!(t.radius(0, 1), 1.0);
        assert_eq!(t.radius(1, 1), 1.0);
        for x in 0..3 {
            assert_eq!(t.radius(x, 2), 0.0);
            assert_eq!(t.radius(x, 0), 2.0);
        }
        assert_eq!(t.extended_radius(0, 1, 1).unwrap(), 1.0);
        assert_eq!(t.extended_radius(0, 1, 2).unwrap(), 1.0);
        assert!(t.extended_radius(0, 2, 1).is_err());

        let s = two_point();
        let t = RadiusTable::new(&s, &pw(2.0), 2.0).unwrap();
        assert_eq!(t.extended_radius(0, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn null_atoms_need_diagnostic_mode() {
        let s = MetricMeasureSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0], None).unwrap();
        assert!(matches!(RadiusTable::new(&s, &pw(2.0), 2.0), Err(Error::NullAtom(1))));
        let t = RadiusTable::with_null_atoms(&s, &pw(2.0), 2.0).unwrap();
        assert_eq!(t.radius(0, 10), 0.0);
        assert_eq!(t.radius(1, 10), 1.0);
    }

    #[test]
    fn generators() {
        let g = generate_space(&SpaceGenerator::Grid { n: 3, gamma: 1.0, scale: 1.0, mass: None }, 0).unwrap();
        assert_eq!(g.d(0, 1), 0.5);
        assert_eq!(g.d(0, 2), 1.0);
        let g = generate_space(&SpaceGenerator::Grid { n: 2, gamma: 0.5, scale: 1.0, mass: None }, 0).unwrap();
        assert_eq!(g.d(0, 1), 1.0);
        assert!(generate_space(&SpaceGenerator::Grid { n: 4, gamma: 1.5, scale: 1.0, mass: None }, 0).is_err());
        let r = generate_space(&SpaceGenerator::Random { n: 10, random_mass: false }, 7).unwrap();
        assert_eq!(r.len(), 10);
        let r2 = generate_space(&SpaceGenerator::Random { n: 10, random_mass: false }, 7).unwrap();
        assert_eq!(r.dist_row(3), r2.dist_row(3));
        let t = generate_space(&SpaceGenerator::Tree { depth: 2, mass: None }, 0).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.d(3, 6), 4.0);
        assert_eq!(t.d(3, 4), 2.0);
        assert_eq!(t.d(0, 5), 2.0);
    }

    fn random_space() -> impl Strategy<Value = MetricMeasureSpace> {
        (2usize..14, any::<u64>(), any::<bool>()).prop_map(|(n, seed, random_mass)| {
            generate_space(&SpaceGenerator::Random { n, random_mass }, seed).unwrap()
        })
    }

    proptest! {
        #[test]
        fn radius_invariants(s in random_space(), p in prop::sample::select(vec![1.0, 2.0, 4.0]), r in 1.5..8.0f64) {
            let phi = pw(p);
            let t = RadiusTable::new(&s, &phi, r).unwrap();
            let n = s.len();
            for x in 0..n {
                prop_assert_eq!(t.radius(x, 0), s.diameter());
                for k in 1..=t.kstar() + 1 {
                    prop_assert!(t.radius(x, k) <= t.radius(x, k - 1));
                }
                prop_assert_eq!(t.radius(x, t.kstar()), 0.0);
                for k in 0..=t.kstar() {
                    let level = phi.value(r.powi(k as i32));
                    prop_assert!(1.0 / t.ball_mass(x, k) <= level * (1.0 + 1e-9));
                    let open = t.open_ball_mass(x, k);
                    prop_assert!(open == 0.0 || level <= (1.0 / open) * (1.0 + 1e-9));
                }
                for y in 0..n {
                    for k in 0..=t.kstar() {
                        prop_assert!((t.radius(x, k) - t.radius(y, k)).abs() <= s.d(x, y) + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn generated_spaces_are_valid(n in 1usize..30, seed in any::<u64>()) {
            let generated = generate_space(&SpaceGenerator::Random { n, random_mass: true }, seed);
            prop_assert!(generated.is_ok());
        }
    }
}
