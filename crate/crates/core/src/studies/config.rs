use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::approxop::RhsForm;
use crate::boxmesh::AxisBox;
use crate::bspline::OpenKnotVector;
use crate::error::{Error, Result};
use crate::functionals::MAX_HILBERT_DEGREE;
use crate::spaces::{build_lr, build_thb, build_tps, EtaPolicy, Meshline, SpaceKind, SplineSpace, ThbLevel};

use super::catalog::TestFunction;

fn cfg_err(m: impl Into<String>) -> Error {
    Error::Config(m.into())
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct CellRange {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct LevelSpec {
    cells: Vec<CellRange>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct InsertionSpec {
    axis: usize,
    position: f64,
    span_lo: Vec<f64>,
    span_hi: Vec<f64>,
    #[serde(default = "one")]
    multiplicity: usize,
}

fn one() -> usize {
    1
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct SpaceSpec {
    kind: String,
    degree: Vec<usize>,
    breakpoints: Option<Vec<Vec<f64>>>,
    elements: Option<Vec<usize>>,
    domain: Option<DomainSpec>,
    #[serde(default)]
    levels: Vec<LevelSpec>,
    #[serde(default)]
    insertions: Vec<InsertionSpec>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
enum SpaceRef {
    File(String),
    Inline(SpaceSpec),
}

#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
enum ExponentSpec {
    Num(f64),
    Text(String),
}

#[derive(Deserialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Accepted interval for the fitted h-order.
    pub order: Option<[f64; 2]>,
    /// Every error at most this value.
    pub max_error: Option<f64>,
    /// Largest accepted ratio between consecutive p-study errors.
    pub max_ratio: Option<f64>,
    /// Smallest accepted coefficient of determination of the p-study fit.
    pub min_r2: Option<f64>,
    /// Largest accepted growth of the effectivity ratio, finest over coarsest.
    pub max_effectivity_growth: Option<f64>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct StudySpec {
    function: Option<String>,
    p: Option<ExponentSpec>,
    q: Option<ExponentSpec>,
    sigma: Option<Vec<usize>>,
    levels: Option<usize>,
    degrees: Option<[usize; 2]>,
    #[serde(default)]
    seed: u64,
    eta: Option<String>,
    rhs: Option<String>,
    #[serde(default)]
    expect: Expectations,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dimension: Option<usize>,
    space: SpaceRef,
    study: StudySpec,
}

/// A validated spline-space description that can be rebuilt at other resolutions or degrees.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceDescription {
    Tps { degree: Vec<usize>, breaks: Vec<Vec<f64>> },
    /// Level-0 breakpoints, each later level bisecting the previous one, with the level
    /// domains as half-open cell ranges of that level.
    Thb { degree: Vec<usize>, breaks: Vec<Vec<f64>>, domains: Vec<Vec<(Vec<usize>, Vec<usize>)>> },
    Lr { degree: Vec<usize>, domain: AxisBox, lines: Vec<Meshline> },
}

fn bisect(b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * b.len());
    for w in b.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(b.last());
    out
}

fn knots(breaks: &[Vec<f64>], degree: &[usize]) -> Result<Vec<OpenKnotVector>> {
    breaks.iter().zip(degree).map(|(b, &d)| OpenKnotVector::from_breakpoints(b, d)).collect()
}

impl SpaceDescription {
    pub fn kind(&self) -> SpaceKind {
        match self {
            SpaceDescription::Tps { .. } => SpaceKind::Tps,
            SpaceDescription::Thb { .. } => SpaceKind::Thb,
            SpaceDescription::Lr { .. } => SpaceKind::Lr,
        }
    }

    pub fn degree(&self) -> &[usize] {
        match self {
            SpaceDescription::Tps { degree, .. }
            | SpaceDescription::Thb { degree, .. }
            | SpaceDescription::Lr { degree, .. } => degree,
        }
    }

    pub fn dim(&self) -> usize {
        self.degree().len()
    }

    pub fn build(&self, policy: EtaPolicy) -> Result<SplineSpace> {
        let space = match self {
            SpaceDescription::Tps { degree, breaks } => build_tps(&knots(breaks, degree)?)?,
            SpaceDescription::Thb { degree, breaks, domains } => {
                let mut levels = vec![ThbLevel { knots: knots(breaks, degree)?, domain: vec![] }];
                let mut b = breaks.clone();
                for dom in domains {
                    b = b.iter().map(|x| bisect(x)).collect();
                    levels.push(ThbLevel { knots: knots(&b, degree)?, domain: dom.clone() });
                }
                build_thb(&levels)?
            }
            SpaceDescription::Lr { degree, domain, lines } => build_lr(degree, domain, lines)?,
        };
        if policy == EtaPolicy::default() {
            Ok(space)
        } else {
            space.with_eta_policy(policy)
        }
    }

    /// Dyadic refinement: every element bisected along every axis.
    pub fn refined(&self) -> Result<Self> {
        match self {
            SpaceDescription::Tps { degree, breaks } => {
                Ok(SpaceDescription::Tps { degree: degree.clone(), breaks: breaks.iter().map(|b| bisect(b)).collect() })
            }
            SpaceDescription::Thb { degree, breaks, domains } => Ok(SpaceDescription::Thb {
                degree: degree.clone(),
                breaks: breaks.iter().map(|b| bisect(b)).collect(),
                domains: domains
                    .iter()
                    .map(|d| {
                        d.iter()
                            .map(|(lo, hi)| (lo.iter().map(|x| 2 * x).collect(), hi.iter().map(|x| 2 * x).collect()))
                            .collect()
                    })
                    .collect(),
            }),
            SpaceDescription::Lr { .. } => {
                Err(Error::Unsupported("dyadic refinement of LR meshes; use TPS or THB for h-studies".into()))
            }
        }
    }

    /// The same mesh with degree d on every axis.
    pub fn with_degree(&self, d: usize) -> Self {
        let mut out = self.clone();
        let n = self.dim();
        match &mut out {
            SpaceDescription::Tps { degree, .. }
            | SpaceDescription::Thb { degree, .. }
            | SpaceDescription::Lr { degree, .. } => *degree = vec![d; n],
        }
        out
    }
}

fn parse_exponent(e: &Option<ExponentSpec>, name: &str) -> Result<f64> {
    let v = match e {
        None => f64::INFINITY,
        Some(ExponentSpec::Num(x)) => *x,
        Some(ExponentSpec::Text(s)) if s == "inf" || s == "infinity" => f64::INFINITY,
        Some(ExponentSpec::Text(s)) => s.parse().map_err(|_| cfg_err(format!("{name} = `{s}` is not a number")))?,
    };
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(cfg_err(format!("{name} must lie in [1, inf], got {v}")))
    }
}

fn check_breaks(b: &[f64], axis: usize) -> Result<()> {
    if b.len() < 2 || b.windows(2).any(|w| !(w[0] < w[1])) || b.iter().any(|x| !x.is_finite()) {
        return Err(cfg_err(format!("breakpoints on axis {axis} must be finite and strictly increasing")));
    }
    Ok(())
}

fn domain_box(d: &Option<DomainSpec>, n: usize) -> Result<AxisBox> {
    match d {
        None => Ok(AxisBox::unit(n)),
        Some(d) => {
            if d.lo.len() != n || d.hi.len() != n {
                return Err(cfg_err(format!("domain must have {n} coordinates")));
            }
            AxisBox::new(d.lo.clone(), d.hi.clone())
        }
    }
}

fn grid(spec: &SpaceSpec, n: usize) -> Result<Vec<Vec<f64>>> {
    let breaks = match (&spec.breakpoints, &spec.elements) {
        (Some(_), Some(_)) => return Err(cfg_err("give either `breakpoints` or `elements`, not both")),
        (Some(b), None) => {
            if spec.domain.is_some() {
                return Err(cfg_err("`domain` is implied by `breakpoints`"));
            }
            b.clone()
        }
        (None, Some(e)) => {
            let dom = domain_box(&spec.domain, n)?;
            if e.len() != n || e.contains(&0) {
                return Err(cfg_err(format!("`elements` must list {n} positive counts")));
            }
            (0..n)
                .map(|a| {
                    let (lo, hi) = (dom.lo()[a], dom.hi()[a]);
                    (0..=e[a]).map(|k| lo + (hi - lo) * k as f64 / e[a] as f64).collect()
                })
                .collect()
        }
        (None, None) => return Err(cfg_err("the space needs `breakpoints` or `elements`")),
    };
    if breaks.len() != n {
        return Err(cfg_err(format!("expected breakpoints for {n} axes, got {}", breaks.len())));
    }
    for (a, b) in breaks.iter().enumerate() {
        check_breaks(b, a)?;
    }
    Ok(breaks)
}

impl SpaceDescription {
    fn from_spec(spec: &SpaceSpec) -> Result<Self> {
        let n = spec.degree.len();
        if n == 0 {
            return Err(cfg_err("`degree` must list one entry per axis"));
        }
        if let Some(&d) = spec.degree.iter().find(|&&d| d > MAX_HILBERT_DEGREE) {
            return Err(Error::DegreeTooLarge(d, MAX_HILBERT_DEGREE));
        }
        let degree = spec.degree.clone();
        let unused = |what: &str, present: bool| if present { Err(cfg_err(format!("`{what}` is not used by a {} space", spec.kind))) } else { Ok(()) };
        match spec.kind.as_str() {
            "tps" => {
                unused("levels", !spec.levels.is_empty())?;
                unused("insertions", !spec.insertions.is_empty())?;
                Ok(SpaceDescription::Tps { breaks: grid(spec, n)?, degree })
            }
            "thb" => {
                unused("insertions", !spec.insertions.is_empty())?;
                let mut domains = Vec::new();
                for l in &spec.levels {
                    let mut dom = Vec::new();
                    for c in &l.cells {
                        if c.lo.len() != n || c.hi.len() != n {
                            return Err(cfg_err(format!("cell ranges must have {n} entries")));
                        }
                        dom.push((c.lo.clone(), c.hi.clone()));
                    }
                    domains.push(dom);
                }
                Ok(SpaceDescription::Thb { breaks: grid(spec, n)?, degree, domains })
            }
            "lr" => {
                unused("levels", !spec.levels.is_empty())?;
                unused("breakpoints", spec.breakpoints.is_some())?;
                unused("elements", spec.elements.is_some())?;
                let domain = domain_box(&spec.domain, n)?;
                let lines = spec
                    .insertions
                    .iter()
                    .map(|i| Meshline {
                        axis: i.axis,
                        position: i.position,
                        span_lo: i.span_lo.clone(),
                        span_hi: i.span_hi.clone(),
                        multiplicity: i.multiplicity,
                    })
                    .collect();
                Ok(SpaceDescription::Lr { degree, domain, lines })
            }
            other => Err(cfg_err(format!("unknown space kind `{other}` (expected tps, thb or lr)"))),
        }
    }

    /// Parses a space file on its own.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: SpaceSpec = toml::from_str(s).map_err(|e| cfg_err(e.to_string()))?;
        Self::from_spec(&spec)
    }
}

/// A parsed study configuration.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub space: SpaceDescription,
    pub function: TestFunction,
    pub p: f64,
    pub q: f64,
    pub sigma: Vec<usize>,
    pub levels: usize,
    pub degrees: Option<(usize, usize)>,
    pub seed: u64,
    /// Explicit η policy; studies fall back to their own default when absent.
    pub eta: Option<EtaPolicy>,
    pub rhs: Option<RhsForm>,
    pub expect: Expectations,
}

impl StudyConfig {
    /// Parses a configuration; a space given as a file name is resolved against `base_dir`.
    pub fn from_toml_str(s: &str, base_dir: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(s).map_err(|e| cfg_err(e.to_string()))?;
        let space = match &file.space {
            SpaceRef::Inline(spec) => SpaceDescription::from_spec(spec)?,
            SpaceRef::File(name) => {
                let path: PathBuf = base_dir.join(name);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                SpaceDescription::from_toml_str(&text)?
            }
        };
        let n = space.dim();
        if let Some(dim) = file.dimension {
            if dim != n {
                return Err(Error::DimensionMismatch { expected: dim, got: n });
            }
        }
        let st = &file.study;
        let sigma = st.sigma.clone().unwrap_or_else(|| vec![0; n]);
        if sigma.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma.len() });
        }
        if sigma.iter().zip(space.degree()).any(|(s, d)| s > d) {
            return Err(cfg_err("sigma must not exceed the degree"));
        }
        let degrees = match st.degrees {
            None => None,
            Some([lo, hi]) => {
                if lo > hi {
                    return Err(cfg_err("degree range must be increasing"));
                }
                if hi > MAX_HILBERT_DEGREE {
                    return Err(Error::DegreeTooLarge(hi, MAX_HILBERT_DEGREE));
                }
                if lo < sigma.iter().max().copied().unwrap_or(0) {
                    return Err(cfg_err("degree range starts below sigma"));
                }
                Some((lo, hi))
            }
        };
        let eta = match st.eta.as_deref() {
            None => None,
            Some("element") => Some(EtaPolicy::LargestElement),
            Some("support") => Some(EtaPolicy::Support),
            Some(other) => return Err(cfg_err(format!("unknown eta policy `{other}` (expected element or support)"))),
        };
        let rhs = match st.rhs.as_deref() {
            None => None,
            Some("global") => Some(RhsForm::Global),
            Some("anisotropic") => Some(RhsForm::Anisotropic),
            Some(other) => return Err(cfg_err(format!("unknown rhs form `{other}`"))),
        };
        Ok(StudyConfig {
            function: TestFunction::parse(st.function.as_deref().unwrap_or("sin_prod"), n)?,
            p: parse_exponent(&st.p, "p")?,
            q: parse_exponent(&st.q, "q")?,
            sigma,
            levels: st.levels.unwrap_or(4),
            degrees,
            seed: st.seed,
            eta,
            rhs,
            expect: st.expect.clone(),
            space,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }
}
