//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coarse::EigRoute;
use crate::problem::NormKind;
use crate::solver::{LocalFactorPolicy, LocalMode, PreconditionerMode, PreconditioningSide};
use crate::{MsgfemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    PlaneWaveScaling,
    StabilityCs,
    ResidualCurves,
    RhoTables,
    HRobustness,
    SubdomainScaling,
    HighContrast,
    RasterMedium,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PlaneWaveScaling => "plane_wave_scaling",
            Self::StabilityCs => "stability_cs",
            Self::ResidualCurves => "residual_curves",
            Self::RhoTables => "rho_tables",
            Self::HRobustness => "h_robustness",
            Self::SubdomainScaling => "subdomain_scaling",
            Self::HighContrast => "high_contrast",
            Self::RasterMedium => "raster_medium",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `c * k^q`, written as in `"2*k^-0.5"`, `"k/30"` or `"12"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRule {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerRule {
    pub fn eval(&self, k: f64) -> f64 {
        self.coefficient * k.powf(self.exponent)
    }
}

impl FromStr for PowerRule {
    type Err = MsgfemError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || MsgfemError::Config(format!("cannot parse rule {s:?}; expected c*k^q"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
        if let Some(pos) = t.find('k') {
            let (head, tail) = (&t[..pos], &t[pos + 1..]);
            let coefficient = match head {
                "" => 1.0,
                h => num(h.strip_suffix('*').ok_or_else(bad)?)?,
            };
            let (exponent, divisor) = if let Some(rest) = tail.strip_prefix('^') {
                match rest.split_once('/') {
                    Some((e, d)) => (num(e)?, num(d)?),
                    None => (num(rest)?, 1.0),
                }
            } else if let Some(d) = tail.strip_prefix('/') {
                (1.0, num(d)?)
            } else if tail.is_empty() {
                (1.0, 1.0)
            } else {
                return Err(bad());
            };
            Ok(Self { coefficient: coefficient / divisor, exponent })
        } else {
            Ok(Self { coefficient: num(&t)?, exponent: 0.0 })
        }
    }
}

impl fmt::Display for PowerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*k^{}", self.coefficient, self.exponent)
    }
}

impl Serialize for PowerRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PowerRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(c) => Ok(Self { coefficient: c, exponent: 0.0 }),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Number of elements per side of the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshRule {
    /// Explicit element counts, swept.
    Elements { elements: Vec<usize> },
    /// `ceil(rule(k))`, rounded up so that subdomains (and inclusions) align.
    Rule { rule: PowerRule },
    /// Elements per minimal wavelength, for rectangular media.
    PerWavelength { per_wavelength: f64 },
}

impl Default for MeshRule {
    fn default() -> Self {
        MeshRule::Rule { rule: PowerRule { coefficient: 1.0, exponent: 1.25 } }
    }
}

/// Overlap or oversampling width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Width {
    Layers { layers: usize },
    Length { length: f64 },
    /// A fraction of the subdomain width `H`.
    FractionOfH { fraction_of_h: f64 },
    /// Oversampling such that `H / H* = h_over_h_star` for interior subdomains.
    Ratio { h_over_h_star: f64 },
}

impl Width {
    /// Number of element layers on a mesh of width `h` with subdomains of width `big_h`.
    pub fn layers(&self, h: f64, big_h: f64) -> Result<usize> {
        let layers = |len: f64| -> Result<usize> {
            if !(len >= 0.0) {
                return Err(MsgfemError::Config(format!("negative width {len}")));
            }
            Ok((len / h).round() as usize)
        };
        match *self {
            Width::Layers { layers } => Ok(layers),
            Width::Length { length } => layers(length),
            Width::FractionOfH { fraction_of_h } => layers(fraction_of_h * big_h),
            Width::Ratio { h_over_h_star } => {
                if !(h_over_h_star > 0.0 && h_over_h_star <= 1.0) {
                    return Err(MsgfemError::Config(format!("H/H* must lie in (0, 1], got {h_over_h_star}")));
                }
                layers(big_h * (1.0 / h_over_h_star - 1.0) / 2.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MediumConfig {
    #[default]
    Constant,
    /// `A = eps^2` inside periodic inclusions, swept over `epsilons`.
    PeriodicInclusions { epsilons: Vec<f64> },
    /// Gridded velocity file; `V = 1 / velocity` on `(0, width) x (-depth, 0)`.
    Raster {
        path: PathBuf,
        width: f64,
        depth: f64,
        /// Scale the boundary impedance with the local slowness (`beta = k V`).
        #[serde(default = "yes")]
        beta_scaled: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    #[default]
    None,
    Constant { value: f64 },
    /// Unit nodal load at the node nearest to `(x, y)`; for rectangular media
    /// the coordinates are fractions of width and depth below the top.
    Point { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDataConfig {
    /// Impedance data of the plane wave, which is then the exact solution
    /// when there is no source.
    #[default]
    PlaneWave,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub wavenumbers: Vec<f64>,
    /// Frequencies in Hz for rectangular media, converted by `k = 2 pi nu`.
    pub frequencies: Vec<f64>,
    pub degree: usize,
    pub mesh: MeshRule,
    /// Plane-wave direction; normalized before use.
    pub direction: Option<[f64; 2]>,
    pub medium: MediumConfig,
    pub source: SourceConfig,
    pub boundary_data: BoundaryDataConfig,
    /// Impedance coefficient for non-raster media.
    pub beta: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            wavenumbers: vec![20.0],
            frequencies: Vec::new(),
            degree: 2,
            mesh: MeshRule::default(),
            direction: None,
            medium: MediumConfig::Constant,
            source: SourceConfig::None,
            boundary_data: BoundaryDataConfig::PlaneWave,
            beta: 1.0,
        }
    }
}

/// Subdomains per side, swept or given as a rule of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubdomainRule {
    List(Vec<usize>),
    Rule(PowerRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionConfig {
    /// Subdomains in the `y` direction.
    pub subdomains: SubdomainRule,
    /// Ratio of `x` to `y` subdomain counts.
    pub aspect: usize,
    pub overlap: Width,
    /// Oversampling widths, swept.
    pub oversampling: Vec<Width>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            subdomains: SubdomainRule::List(vec![4]),
            aspect: 1,
            overlap: Width::Layers { layers: 2 },
            oversampling: vec![Width::Layers { layers: 2 }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoarseConfig {
    /// Eigenvectors per subdomain, swept. Exclusive with `rho`.
    pub n_loc: Vec<usize>,
    /// Eigenvalue tolerances `rho` as rules of `k`, swept.
    pub rho: Vec<PowerRule>,
    pub route: EigRoute,
    pub rhs_form: NormKind,
    /// Upper end of the `n_min` search.
    pub n_max: usize,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self { n_loc: Vec::new(), rho: Vec::new(), route: EigRoute::Harmonic, rhs_form: NormKind::A, n_max: 120 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    Gmres,
    Richardson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    #[default]
    Euclidean,
    /// Weighted by the `A,k` energy matrix.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub mode: PreconditionerMode,
    pub local_mode: LocalMode,
    pub side: PreconditioningSide,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub restart: Option<usize>,
    pub norm: NormChoice,
    pub factor_policy: LocalFactorPolicy,
    /// Also solve directly and report the one-shot error.
    pub measure_lambda: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Gmres,
            mode: PreconditionerMode::TwoLevelHybrid,
            local_mode: LocalMode::Impedance,
            side: PreconditioningSide::Left,
            max_iterations: 100,
            tolerance: 1e-6,
            restart: None,
            norm: NormChoice::Euclidean,
            factor_policy: LocalFactorPolicy::Keep,
            measure_lambda: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    /// Record wall-clock columns; off by default so identical configs give
    /// identical files.
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub problem: ProblemConfig,
    pub partition: PartitionConfig,
    pub coarse: CoarseConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

/// How eigenvectors are selected at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Count(usize),
    Tolerance(PowerRule),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| MsgfemError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file; a relative raster path is taken relative to the
    /// directory of the file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let MediumConfig::Raster { path: raster, .. } = &mut cfg.problem.medium {
            if raster.is_relative() {
                if let Some(dir) = path.parent() {
                    *raster = dir.join(&*raster);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks invariants that do not depend on the experiment kind.
    pub fn validate(&self) -> Result<()> {
        let c = &self.coarse;
        if !c.n_loc.is_empty() && !c.rho.is_empty() {
            return Err(MsgfemError::Config("specify exactly one of coarse.n_loc and coarse.rho".into()));
        }
        if !(1..=2).contains(&self.problem.degree) {
            return Err(MsgfemError::UnsupportedDegree(self.problem.degree));
        }
        if self.partition.aspect == 0 {
            return Err(MsgfemError::Config("partition.aspect must be at least 1".into()));
        }
        if self.partition.oversampling.is_empty() {
            return Err(MsgfemError::Config("partition.oversampling must list at least one width".into()));
        }
        if !(self.solver.tolerance > 0.0) {
            return Err(MsgfemError::Config("solver.tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Eigenvector selections swept by solver experiments.
    pub fn selections(&self) -> Result<Vec<Selection>> {
        let c = &self.coarse;
        match (c.n_loc.is_empty(), c.rho.is_empty()) {
            (false, true) => Ok(c.n_loc.iter().map(|&n| Selection::Count(n)).collect()),
            (true, false) => Ok(c.rho.iter().map(|&r| Selection::Tolerance(r)).collect()),
            _ => Err(MsgfemError::Config("specify exactly one of coarse.n_loc and coarse.rho".into())),
        }
    }

    /// Wavenumbers swept, from `wavenumbers` or `frequencies`.
    pub fn wavenumbers(&self) -> Vec<(f64, Option<f64>)> {
        if self.problem.frequencies.is_empty() {
            self.problem.wavenumbers.iter().map(|&k| (k, None)).collect()
        } else {
            self.problem.frequencies.iter().map(|&nu| (2.0 * std::f64::consts::PI * nu, Some(nu))).collect()
        }
    }

    /// Subdomain counts (in `y`) at wavenumber `k`.
    pub fn subdomain_counts(&self, k: f64) -> Vec<usize> {
        match &self.partition.subdomains {
            SubdomainRule::List(v) => v.clone(),
            SubdomainRule::Rule(r) => vec![(r.eval(k).round() as usize).max(1)],
        }
    }
}

/// Smallest multiple of `step` that is at least `n`.
pub fn round_up(n: usize, step: usize) -> usize {
    let step = step.max(1);
    n.div_ceil(step) * step
}

pub fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    if a == 0 || b == 0 {
        return a.max(b);
    }
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_parse() {
        let r: PowerRule = "2*k^-0.5".parse().unwrap();
        assert_eq!((r.coefficient, r.exponent), (2.0, -0.5));
        let r: PowerRule = "20*k^-1".parse().unwrap();
        assert!((r.eval(200.0) - 0.1).abs() < 1e-15);
        let r: PowerRule = "k/30".parse().unwrap();
        assert!((r.eval(60.0) - 2.0).abs() < 1e-15);
        let r: PowerRule = "k^1.25".parse().unwrap();
        assert_eq!((r.coefficient, r.exponent), (1.0, 1.25));
        let r: PowerRule = "0.125".parse().unwrap();
        assert_eq!(r.eval(77.0), 0.125);
        assert!("2*x^2".parse::<PowerRule>().is_err());
        assert!("2k^2".parse::<PowerRule>().is_err());
    }

    #[test]
    fn config_round_trips_and_rejects_both_selections() {
        let text = r#"
            experiment = "h_robustness"
            [problem]
            wavenumbers = [100.0]
            mesh = { elements = [200, 400] }
            [partition]
            subdomains = [8]
            overlap = { length = 0.01 }
            oversampling = [{ length = 0.01 }]
            [coarse]
            n_loc = [20, 25]
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.selections().unwrap(), vec![Selection::Count(20), Selection::Count(25)]);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let mut both = cfg.clone();
        both.coarse.rho = vec!["2*k^-0.5".parse().unwrap()];
        assert!(both.validate().is_err());
        assert!(ExperimentConfig::from_toml("[problem]\nwavenumber = 3.0").is_err());
    }

    #[test]
    fn widths_convert_to_layers() {
        let h = 1.0 / 200.0;
        assert_eq!(Width::Length { length: 0.01 }.layers(h, 0.125).unwrap(), 2);
        assert_eq!(Width::FractionOfH { fraction_of_h: 0.125 }.layers(1.0 / 512.0, 1.0 / 16.0).unwrap(), 4);
        assert_eq!(Width::Ratio { h_over_h_star: 1.0 }.layers(h, 0.125).unwrap(), 0);
        assert_eq!(Width::Ratio { h_over_h_star: 0.9 }.layers(1.0 / 360.0, 0.125).unwrap(), 3);
        assert_eq!(round_up(101, 4), 104);
        assert_eq!(lcm(20, 32), 160);
    }
}
