//! Scenario files: TOML with numeric parameters given either as decimal strings or numbers.

use std::path::{Path, PathBuf};

use chaincert::mspace::{generate_space, MetricMeasureSpace, SpaceGenerator};
use chaincert::young::YoungFunction;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Num {
    fn f64(&self, key: &str) -> Result<f64, CliError> {
        match self {
            Num::Text(s) => s.trim().parse().map_err(|_| CliError::Config(format!("{key}: '{s}' is not a number"))),
            Num::Int(i) => Ok(*i as f64),
            Num::Float(x) => Ok(*x),
        }
    }

    fn u64(&self, key: &str) -> Result<u64, CliError> {
        let bad = || CliError::Config(format!("{key}: expected a nonnegative integer"));
        match self {
            Num::Text(s) => s.trim().parse().map_err(|_| bad()),
            Num::Int(i) => u64::try_from(*i).map_err(|_| bad()),
            Num::Float(_) => Err(bad()),
        }
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        Ok(self.u64(key)? as usize)
    }
}

fn opt_f64(v: &Option<Num>, key: &str, default: f64) -> Result<f64, CliError> {
    v.as_ref().map_or(Ok(default), |n| n.f64(key))
}

fn opt_u64(v: &Option<Num>, key: &str, default: u64) -> Result<u64, CliError> {
    v.as_ref().map_or(Ok(default), |n| n.u64(key))
}

fn num_list(v: &[Num], key: &str) -> Result<Vec<f64>, CliError> {
    v.iter().map(|x| x.f64(key)).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawYoung {
    kind: String,
    p: Option<Num>,
    q: Option<Num>,
    knots: Option<Vec<[Num; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: String,
    path: Option<String>,
    n: Option<Num>,
    gamma: Option<Num>,
    scale: Option<Num>,
    depth: Option<Num>,
    random_mass: Option<bool>,
    seed: Option<Num>,
    mass: Option<Vec<Num>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctions {
    random: Option<Num>,
    seed: Option<Num>,
    explicit: Option<Vec<Vec<Num>>>,
    nabla_r: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    enabled: Option<bool>,
    functions: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    paths: Num,
    seed: Option<Num>,
    covariance: Option<Vec<Vec<Num>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    theorem: String,
    ratio: Num,
    n0: Option<Num>,
    seed: Option<Num>,
    tail_tol: Option<Num>,
    out: Option<String>,
    space: RawSpace,
    phi: RawYoung,
    psi: Option<RawYoung>,
    functions: Option<RawFunctions>,
    suite: Option<RawSuite>,
    mc: Option<RawMc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Theorems {
    pub t1: bool,
    pub t3: bool,
}

#[derive(Clone, Debug)]
pub enum SpaceSource {
    File(PathBuf),
    Generated(SpaceGenerator, u64),
    BrownianGrid(usize),
}

#[derive(Clone, Debug)]
pub struct FunctionSource {
    pub random: usize,
    pub seed: u64,
    pub explicit: Vec<Vec<f64>>,
    pub nabla_r: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct McSettings {
    pub paths: usize,
    pub seed: u64,
    pub covariance: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub theorems: Theorems,
    pub ratio: f64,
    pub n0: u32,
    pub seed: u64,
    pub tail_tol: f64,
    pub out: Option<PathBuf>,
    pub space: SpaceSource,
    pub phi: YoungFunction,
    pub psi: Option<YoungFunction>,
    pub functions: FunctionSource,
    pub suite: Option<usize>,
    pub mc: Option<McSettings>,
}

fn required<'a>(v: &'a Option<Num>, section: &str, field: &str, kind: &str) -> Result<&'a Num, CliError> {
    v.as_ref().ok_or_else(|| CliError::Config(format!("{section}.{field} is required for kind '{kind}'")))
}

fn young(raw: &RawYoung, key: &str) -> Result<YoungFunction, CliError> {
    let need = |v, field| required(v, key, field, &raw.kind);
    let f = match raw.kind.as_str() {
        "power" => YoungFunction::power(need(&raw.p, "p")?.f64(key)?),
        "exponential" => YoungFunction::exponential(need(&raw.q, "q")?.f64(key)?),
        "piecewise-linear" | "piecewise_linear" => {
            let knots = raw.knots.as_ref().ok_or_else(|| CliError::Config(format!("{key}.knots is required")))?;
            let knots =
                knots.iter().map(|[x, y]| Ok((x.f64(key)?, y.f64(key)?))).collect::<Result<Vec<_>, CliError>>()?;
            YoungFunction::piecewise_linear(knots)
        }
        other => return Err(CliError::Config(format!("{key}.kind: unknown Young function '{other}'"))),
    };
    f.map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn space_source(raw: &RawSpace, base: &Path) -> Result<SpaceSource, CliError> {
    let need = |v, field| required(v, "space", field, &raw.kind);
    let mass = raw.mass.as_ref().map(|m| num_list(m, "space.mass")).transpose()?;
    let seed = opt_u64(&raw.seed, "space.seed", 0)?;
    Ok(match raw.kind.as_str() {
        "file" => {
            let p =
                raw.path.as_ref().ok_or_else(|| CliError::Config("space.path is required for kind 'file'".into()))?;
            SpaceSource::File(base.join(p))
        }
        "grid" => SpaceSource::Generated(
            SpaceGenerator::Grid {
                n: need(&raw.n, "n")?.usize("space.n")?,
                gamma: opt_f64(&raw.gamma, "space.gamma", 1.0)?,
                scale: opt_f64(&raw.scale, "space.scale", 1.0)?,
                mass,
            },
            seed,
        ),
        "tree" => {
            let depth = need(&raw.depth, "depth")?.u64("space.depth")?;
            let depth = u32::try_from(depth).map_err(|_| CliError::Config("space.depth is too large".into()))?;
            SpaceSource::Generated(SpaceGenerator::Tree { depth, mass }, seed)
        }
        "random" => SpaceSource::Generated(
            SpaceGenerator::Random {
                n: need(&raw.n, "n")?.usize("space.n")?,
                random_mass: raw.random_mass.unwrap_or(false),
            },
            seed,
        ),
        "brownian-grid" => SpaceSource::BrownianGrid(need(&raw.n, "n")?.usize("space.n")?),
        other => return Err(CliError::Config(format!("space.kind: unknown kind '{other}'"))),
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let theorems = match raw.theorem.to_ascii_lowercase().as_str() {
            "t1" => Theorems { t1: true, t3: false },
            "t3" => Theorems { t1: false, t3: true },
            "both" => Theorems { t1: true, t3: true },
            other => return Err(CliError::Config(format!("theorem: expected t1, t3 or both, got '{other}'"))),
        };
        let ratio = raw.ratio.f64("ratio")?;
        if ratio.is_nan() || ratio <= 1.0 {
            return Err(CliError::Config(format!("ratio must be > 1, got {ratio}")));
        }
        let n0 = opt_u64(&raw.n0, "n0", 1)?;
        if !(1..=64).contains(&n0) {
            return Err(CliError::Config(format!("n0 must be in 1..=64, got {n0}")));
        }
        let psi = raw.psi.as_ref().map(|p| young(p, "psi")).transpose()?;
        if theorems.t1 && psi.is_none() {
            return Err(CliError::Config("theorem t1 needs a [psi] section".into()));
        }
        let space = space_source(&raw.space, base)?;
        if let SpaceSource::File(p) = &space {
            if !p.is_file() {
                return Err(CliError::Config(format!("space file {} does not exist", p.display())));
            }
        }
        let seed = opt_u64(&raw.seed, "seed", 0)?;
        let functions = match &raw.functions {
            None => FunctionSource { random: 0, seed, explicit: Vec::new(), nabla_r: None },
            Some(f) => FunctionSource {
                random: f.random.as_ref().map_or(Ok(0), |n| n.usize("functions.random"))?,
                seed: opt_u64(&f.seed, "functions.seed", seed)?,
                explicit: f
                    .explicit
                    .as_ref()
                    .map(|rows| rows.iter().map(|r| num_list(r, "functions.explicit")).collect::<Result<Vec<_>, _>>())
                    .transpose()?
                    .unwrap_or_default(),
                nabla_r: f.nabla_r.as_ref().map(|n| n.f64("functions.nabla_r")).transpose()?,
            },
        };
        let suite = match &raw.suite {
            Some(s) if s.enabled.unwrap_or(true) => {
                Some(s.functions.as_ref().map_or(Ok(3), |n| n.usize("suite.functions"))?)
            }
            _ => None,
        };
        let mc = raw
            .mc
            .as_ref()
            .map(|m| -> Result<McSettings, CliError> {
                let paths = m.paths.usize("mc.paths")?;
                if paths == 0 {
                    return Err(CliError::Config("mc.paths must be at least 1".into()));
                }
                let covariance = m
                    .covariance
                    .as_ref()
                    .map(|rows| rows.iter().map(|r| num_list(r, "mc.covariance")).collect::<Result<Vec<_>, _>>())
                    .transpose()?
                    .map(|rows| rows.concat());
                Ok(McSettings { paths, seed: opt_u64(&m.seed, "mc.seed", seed)?, covariance })
            })
            .transpose()?;
        if let (Some(m), SpaceSource::File(_) | SpaceSource::Generated(..)) = (&mc, &space) {
            if m.covariance.is_none() {
                return Err(CliError::Config("mc on a non-Brownian space needs mc.covariance".into()));
            }
        }
        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            theorems,
            ratio,
            n0: n0 as u32,
            seed,
            tail_tol: opt_f64(&raw.tail_tol, "tail_tol", 1e-12)?,
            out: raw.out.map(|o| base.join(o)),
            space,
            phi: young(&raw.phi, "phi")?,
            psi,
            functions,
            suite,
            mc,
        })
    }

    /// Materializes the space; Brownian grids take their metric from the power of ψ (or φ).
    pub fn build_space(&self) -> Result<MetricMeasureSpace, CliError> {
        match &self.space {
            SpaceSource::File(p) => {
                MetricMeasureSpace::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
            SpaceSource::Generated(g, seed) => generate_space(g, *seed).map_err(|e| CliError::Config(e.to_string())),
            SpaceSource::BrownianGrid(n) => {
                let psi = self.increment_gauge();
                chaincert::mc::brownian_grid_sampler(*n, psi, self.seed)
                    .map(|s| s.space)
                    .map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// ψ for T1 scenarios, otherwise φ.
    pub fn increment_gauge(&self) -> &YoungFunction {
        self.psi.as_ref().filter(|_| self.theorems.t1).unwrap_or(&self.phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
theorem = "t3"
ratio = "6"
[space]
kind = "grid"
n = "5"
[phi]
kind = "power"
p = "2"
"#;

    #[test]
    fn numbers_as_strings_or_literals() {
        let s = Scenario::parse(BASE, Path::new(".")).unwrap();
        assert_eq!(s.ratio, 6.0);
        let t = Scenario::parse(&BASE.replace("\"6\"", "6.0").replace("\"5\"", "5"), Path::new(".")).unwrap();
        assert_eq!(t.ratio, 6.0);
        assert_eq!(s.n0, 1);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Scenario::parse(&BASE.replace("\"6\"", "\"1\""), Path::new(".")).is_err());
        assert!(Scenario::parse(&BASE.replace("t3", "t1"), Path::new(".")).is_err());
        assert!(Scenario::parse(&BASE.replace("\"6\"", "\"six\""), Path::new(".")).is_err());
        assert!(Scenario::parse(&format!("{BASE}\nbogus = 1"), Path::new(".")).is_err());
        let missing = BASE.replace("kind = \"grid\"\nn = \"5\"", "kind = \"file\"\npath = \"nope.json\"");
        assert!(Scenario::parse(&missing, Path::new(".")).is_err());
    }
}
