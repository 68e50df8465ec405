//! Synthetic joint laws on `[0,1]^d x {0,1}` with closed-form regression
//! functions, exact Bayes oracles and a declared Tsybakov margin exponent.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::fit::{least_squares, mean_stderr};
use crate::quad::{integrate_cube, nodes_per_axis, simpson_1d};
use crate::rng::{stream_rng, Rng, STREAM_EVAL, STREAM_SAMPLE};
use crate::{Error, Result};

pub const MAX_DIM: usize = 16;
const VALIDATION_POINTS: usize = 10_000;
const TSYBAKOV_MC_BUDGET: usize = 1_000_000;

/// One `C^inf` bump `amplitude * exp(1 - 1/(1 - s^2))`, `s = |x - center| / radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let s2 = r2 / (self.radius * self.radius);
        if s2 >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - s2)).exp()
        }
    }
}

/// Closed-form regression-function families. All but `SmoothBump` depend on
/// the first coordinate only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `eta = value`.
    Constant { value: f64 },
    /// `eta(x) = x_1`.
    Ramp,
    /// `eta = 1/2 + 1/2 sgn(2x_1 - 1) |2x_1 - 1|^(1/alpha)` with the distribution's alpha.
    MarginAlpha,
    /// `eta = 1/2 + sum of bumps`.
    SmoothBump { bumps: Vec<Bump> },
}

impl Family {
    fn tag(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Ramp => "ramp",
            Family::MarginAlpha => "margin-alpha",
            Family::SmoothBump { .. } => "smooth-bump",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marginal {
    #[default]
    Uniform,
    /// Density `1 + sin(2 pi x_1) / 2` in the first coordinate, uniform in the rest.
    Tilted,
}

impl Marginal {
    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            Marginal::Uniform => 1.0,
            Marginal::Tilted => 1.0 + 0.5 * (2.0 * PI * x[0]).sin(),
        }
    }

    pub fn density_bound(&self) -> f64 {
        match self {
            Marginal::Uniform => 1.0,
            Marginal::Tilted => 1.5,
        }
    }

    /// CDF of the first-coordinate marginal.
    pub fn first_cdf(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Marginal::Uniform => t,
            Marginal::Tilted => t + (1.0 - (2.0 * PI * t).cos()) / (4.0 * PI),
        }
    }

    fn draw(&self, d: usize, rng: &mut Rng, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Marginal::Uniform => out.extend((0..d).map(|_| rng.random::<f64>())),
            Marginal::Tilted => {
                let first = loop {
                    let u: f64 = rng.random();
                    let v: f64 = rng.random::<f64>() * 1.5;
                    if v <= self.density(&[u]) {
                        break u;
                    }
                };
                out.push(first);
                out.extend((1..d).map(|_| rng.random::<f64>()));
            }
        }
    }
}

/// A synthetic distribution: marginal law of `X`, regression function `eta`,
/// and the intended Tsybakov parameters `(alpha, c0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFile", into = "SpecFile")]
pub struct DistributionSpec {
    pub dim: usize,
    pub family: Family,
    pub marginal: Marginal,
    pub alpha: f64,
    pub c0: f64,
    name: Option<String>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SpecFile {
    #[serde(flatten)]
    family: Family,
    dim: usize,
    alpha: f64,
    c0: f64,
    #[serde(default)]
    marginal: Marginal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl DistributionSpec {
    pub fn new(dim: usize, family: Family, marginal: Marginal, alpha: f64, c0: f64) -> Result<Self> {
        let spec = DistributionSpec { dim, family, marginal, alpha, c0, name: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        // eta is bounded away from 1/2 unless value = 1/2; alpha is then arbitrary.
        Self::new(dim, Family::Constant { value }, Marginal::Uniform, 1.0, 1.0)
    }

    /// `eta(x) = x_1` with `P(|eta - 1/2| <= t) = 2t` under the uniform marginal.
    pub fn ramp(dim: usize) -> Result<Self> {
        Self::new(dim, Family::Ramp, Marginal::Uniform, 1.0, 2.0)
    }

    /// Margin family with exact `P(|eta - 1/2| <= t) = (2t)^alpha` under the uniform marginal.
    pub fn margin(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(dim, Family::MarginAlpha, Marginal::Uniform, alpha, 2f64.powf(alpha))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_marginal(mut self, marginal: Marginal) -> Result<Self> {
        self.marginal = marginal;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidSpec(format!("dim must be in 1..={MAX_DIM}, got {}", self.dim)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidSpec(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(Error::InvalidSpec(format!("c0 must be > 0, got {}", self.c0)));
        }
        match &self.family {
            Family::Constant { value } if !(0.0..=1.0).contains(value) => {
                return Err(Error::InvalidSpec(format!("constant eta {value} outside [0,1]")));
            }
            Family::MarginAlpha if self.alpha <= 0.0 => {
                return Err(Error::InvalidSpec("margin-alpha family needs alpha > 0".into()));
            }
            Family::SmoothBump { bumps } => {
                for b in bumps {
                    if b.center.len() != self.dim || !(b.radius > 0.0) {
                        return Err(Error::InvalidSpec(
                            "bump centers must have length dim and radius > 0".into(),
                        ));
                    }
                }
            }
            _ => {}
        }
        for x in validation_points(self.dim) {
            let v = self.eta_unchecked(&x);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidSpec(format!("eta({x:?}) = {v} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// Identifier used in dataset manifests. A declared name wins; otherwise a
    /// canonical description of the parameters.
    pub fn id(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let mut id = format!("{}-d{}-a{}-c{}", self.family.tag(), self.dim, self.alpha, self.c0);
        if let Family::Constant { value } = self.family {
            id.push_str(&format!("-v{value}"));
        }
        if self.marginal == Marginal::Tilted {
            id.push_str("-tilted");
        }
        id
    }

    /// True when both `eta` and the marginal density depend on `x_1` alone.
    pub fn depends_on_first_only(&self) -> bool {
        !matches!(self.family, Family::SmoothBump { .. })
    }

    pub fn eta_unchecked(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::Constant { value } => *value,
            Family::Ramp => x[0],
            Family::MarginAlpha => {
                let u = 2.0 * x[0] - 1.0;
                0.5 + 0.5 * u.signum() * u.abs().powf(1.0 / self.alpha)
            }
            Family::SmoothBump { bumps } => 0.5 + bumps.iter().map(|b| b.eval(x)).sum::<f64>(),
        }
    }

    /// The regression function `eta(x) = E[Y | X = x]`.
    pub fn eta_eval(&self, x: &[f64]) -> Result<f64> {
        check_point(self.dim, x)?;
        Ok(self.eta_unchecked(x))
    }

    /// Draws `n` i.i.d. pairs; the result is a pure function of `(spec, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        let mut rng = stream_rng(seed, STREAM_SAMPLE, 0);
        let mut samples = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(self.dim);
        for _ in 0..n {
            self.marginal.draw(self.dim, &mut rng, &mut x);
            let u: f64 = rng.random();
            let y = (u < self.eta_unchecked(&x)) as u8;
            samples.push(LabeledSample { x: x.clone(), y });
        }
        Ok(Dataset { samples, seed, spec_id: self.id() })
    }

    /// `E[g(X)]` under the marginal law.
    ///
    /// Quadrature integrates against the density on a Simpson grid; when
    /// `g_first_only` is set and the spec itself depends on `x_1` only, the
    /// integral collapses to one dimension at `2^12 + 1` nodes.
    pub fn expectation(
        &self,
        method: Method,
        g_first_only: bool,
        g: impl Fn(&[f64]) -> f64,
    ) -> Result<Estimate> {
        match method {
            Method::Quadrature => {
                if self.dim > 3 {
                    return Err(Error::UnsupportedDimension(self.dim));
                }
                if g_first_only && self.depends_on_first_only() {
                    let m = nodes_per_axis(1)?;
                    let mut x = vec![0.5; self.dim];
                    let v = simpson_1d(0.0, 1.0, m, |t| {
                        x[0] = t;
                        g(&x) * self.marginal.density(&x)
                    });
                    return Ok(Estimate::exact(v, m));
                }
                let m = nodes_per_axis(self.dim)?;
                let v = integrate_cube(self.dim, m, |x| g(x) * self.marginal.density(x));
                Ok(Estimate::exact(v, m.pow(self.dim as u32)))
            }
            Method::MonteCarlo { budget, seed } => {
                if budget == 0 {
                    return Err(Error::InvalidArgument("Monte Carlo budget must be > 0".into()));
                }
                let mut rng = stream_rng(seed, STREAM_EVAL, 0);
                let mut x = Vec::with_capacity(self.dim);
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for _ in 0..budget {
                    self.marginal.draw(self.dim, &mut rng, &mut x);
                    let v = g(&x);
                    sum += v;
                    sum_sq += v * v;
                }
                let n = budget as f64;
                let mean = sum / n;
                let var = if budget > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
                Ok(Estimate { value: mean, stderr: (var / n).sqrt(), n_eval: budget })
            }
        }
    }

    /// Draws `budget` points from the marginal with an evaluation stream.
    pub fn draw_points(&self, budget: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, STREAM_EVAL, 0);
        let mut x = Vec::with_capacity(self.dim);
        (0..budget)
            .map(|_| {
                self.marginal.draw(self.dim, &mut rng, &mut x);
                x.clone()
            })
            .collect()
    }

    /// Bayes risk `L* = E[min(eta, 1 - eta)]`.
    pub fn bayes_risk(&self, method: Method) -> Result<Estimate> {
        if let Method::MonteCarlo { budget, .. } = method {
            if budget < 10_000 {
                return Err(Error::InvalidArgument(format!(
                    "Monte Carlo Bayes risk needs budget >= 10^4, got {budget}"
                )));
            }
        }
        self.expectation(method, true, |x| {
            let e = self.eta_unchecked(x);
            e.min(1.0 - e)
        })
    }

    /// `P_X(0 < |eta - 1/2| <= t)`.
    pub fn margin_mass(&self, t: f64) -> Estimate {
        match &self.family {
            Family::Constant { value } => {
                let gap = (value - 0.5).abs();
                let v = if gap > 0.0 && gap <= t { 1.0 } else { 0.0 };
                Estimate::exact(v, 1)
            }
            Family::Ramp | Family::MarginAlpha => {
                // eta is nondecreasing in x_1: the event is an interval in x_1.
                let lo = self.first_coordinate_level(0.5 - t, true);
                let hi = self.first_coordinate_level(0.5 + t, false);
                let mass = (self.marginal.first_cdf(hi) - self.marginal.first_cdf(lo)).max(0.0);
                Estimate::exact(mass, 1)
            }
            Family::SmoothBump { .. } => self
                .expectation(Method::MonteCarlo { budget: TSYBAKOV_MC_BUDGET, seed: 0x7457 }, false, |x| {
                    let g = (self.eta_unchecked(x) - 0.5).abs();
                    (g > 0.0 && g <= t) as u8 as f64
                })
                .expect("budget is positive"),
        }
    }

    /// For monotone first-coordinate profiles: `inf{s : eta(s) >= level}` when
    /// `lower`, else `sup{s : eta(s) <= level}`, by bisection.
    fn first_coordinate_level(&self, level: f64, lower: bool) -> f64 {
        let mut x = vec![0.5; self.dim];
        let mut eta = |s: f64| {
            x[0] = s;
            self.eta_unchecked(&x)
        };
        let (mut a, mut b) = (0.0f64, 1.0f64);
        if lower {
            if eta(0.0) >= level {
                return 0.0;
            }
            if eta(1.0) < level {
                return 1.0;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if eta(m) >= level {
                    b = m;
                } else {
                    a = m;
                }
            }
            b
        } else {
            if eta(1.0) <= level {
                return 1.0;
            }
            if eta(0.0) > level {
                return 0.0;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if eta(m) <= level {
                    a = m;
                } else {
                    b = m;
                }
            }
            a
        }
    }

    /// Checks the Tsybakov condition on a grid of `t` values and fits the
    /// exponent over the smallest decade of the grid.
    pub fn verify_tsybakov(&self, t_grid: &[f64]) -> Result<TsybakovReport> {
        if t_grid.is_empty() {
            return Err(Error::InvalidArgument("empty t grid".into()));
        }
        if t_grid.iter().any(|t| !(*t > 0.0 && *t <= 0.5)) {
            return Err(Error::InvalidArgument("t grid must lie in (0, 1/2]".into()));
        }
        if t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("t grid must be strictly ascending".into()));
        }
        let points: Vec<TsybakovPoint> = t_grid
            .iter()
            .map(|&t| {
                let est = self.margin_mass(t);
                TsybakovPoint {
                    t,
                    probability: est.value,
                    stderr: est.stderr,
                    bound: self.c0 * t.powf(self.alpha),
                }
            })
            .collect();
        let holds = points.iter().all(|p| p.probability <= p.bound + 3.0 * p.stderr + 1e-15);

        let t_min = t_grid[0];
        let mut decade: Vec<&TsybakovPoint> =
            points.iter().filter(|p| p.t <= 10.0 * t_min * (1.0 + 1e-12)).collect();
        if decade.len() < 2 {
            decade = points.iter().take(2).collect();
        }
        let positive: Vec<&&TsybakovPoint> = decade.iter().filter(|p| p.probability > 0.0).collect();
        let fitted_alpha = if positive.is_empty() {
            f64::INFINITY
        } else if positive.len() < 2 {
            f64::NAN
        } else {
            let lx: Vec<f64> = positive.iter().map(|p| p.t.ln()).collect();
            let ly: Vec<f64> = positive.iter().map(|p| p.probability.ln()).collect();
            least_squares(&lx, &ly)?.slope
        };
        Ok(TsybakovReport { holds, fitted_alpha, points })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text)
            .map_err(|e| Error::Parse { path: PathBuf::from("<spec>"), reason: e.to_string() })?;
        Self::try_from(file)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse { path: path.to_path_buf(), reason },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&SpecFile::from(self.clone())).expect("spec serializes")
    }
}

impl TryFrom<SpecFile> for DistributionSpec {
    type Error = Error;

    fn try_from(file: SpecFile) -> Result<Self> {
        let spec = DistributionSpec::new(file.dim, file.family, file.marginal, file.alpha, file.c0)?;
        Ok(match file.name {
            Some(name) => spec.with_name(name),
            None => spec,
        })
    }
}

impl From<DistributionSpec> for SpecFile {
    fn from(s: DistributionSpec) -> Self {
        SpecFile { family: s.family, dim: s.dim, alpha: s.alpha, c0: s.c0, marginal: s.marginal, name: s.name }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

fn check_point(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain { point: x.to_vec() });
    }
    Ok(())
}

/// A dense deterministic point set: a uniform grid in 1-d, a Kronecker
/// (generalized golden ratio) sequence plus the cube corners otherwise.
fn validation_points(d: usize) -> Vec<Vec<f64>> {
    if d == 1 {
        return (0..VALIDATION_POINTS)
            .map(|i| vec![i as f64 / (VALIDATION_POINTS - 1) as f64])
            .collect();
    }
    // phi_d is the unique positive root of x^(d+1) = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let steps: Vec<f64> = (1..=d).map(|k| (1.0 / phi.powi(k as i32)).fract()).collect();
    let mut pts: Vec<Vec<f64>> = (0..VALIDATION_POINTS)
        .map(|i| steps.iter().map(|s| (0.5 + s * i as f64).fract()).collect())
        .collect();
    if d <= 10 {
        for mask in 0..(1usize << d) {
            pts.push((0..d).map(|k| ((mask >> k) & 1) as f64).collect());
        }
    }
    pts
}

/// Integration method for expectations under the marginal law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    MonteCarlo { budget: usize, seed: u64 },
}

/// A scalar estimate with its standard error (0 for quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_eval: usize,
}

impl Estimate {
    pub fn exact(value: f64, n_eval: usize) -> Self {
        Estimate { value, stderr: 0.0, n_eval }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsybakovPoint {
    pub t: f64,
    pub probability: f64,
    pub stderr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsybakovReport {
    pub holds: bool,
    pub fitted_alpha: f64,
    pub points: Vec<TsybakovPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: u8,
}

/// An i.i.d. sample together with the seed and spec that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub seed: u64,
    pub spec_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetManifest {
    spec_id: String,
    seed: u64,
    n: usize,
}

impl Dataset {
    /// Builds a dataset from explicit points, e.g. for hand-made test instances.
    pub fn from_points(points: Vec<(Vec<f64>, u8)>, spec_id: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("dataset must be nonempty".into()));
        }
        let d = points[0].0.len();
        let mut samples = Vec::with_capacity(points.len());
        for (x, y) in points {
            check_point(d, &x)?;
            if y > 1 {
                return Err(Error::InvalidArgument(format!("label {y} not in {{0,1}}")));
            }
            samples.push(LabeledSample { x, y });
        }
        Ok(Dataset { samples, seed: 0, spec_id: spec_id.into() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Writes `<stem>.csv` (header `x_1,...,x_d,y`) and `<stem>.manifest.toml`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
        let d = self.dim();
        let mut header: Vec<String> = (1..=d).map(|k| format!("x_{k}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.x.iter().map(|v| format!("{v:?}")).collect();
            row.push(s.y.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        let manifest = DatasetManifest { spec_id: self.spec_id.clone(), seed: self.seed, n: self.len() };
        fs::write(
            dir.join(format!("{stem}.manifest.toml")),
            toml::to_string(&manifest).expect("manifest serializes"),
        )?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let manifest_path = dir.join(format!("{stem}.manifest.toml"));
        let manifest: DatasetManifest = toml::from_str(&fs::read_to_string(&manifest_path)?)
            .map_err(|e| Error::Parse { path: manifest_path.clone(), reason: e.to_string() })?;
        let mut r = csv::Reader::from_path(&csv_path)?;
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse_err = |reason: String| Error::Parse { path: csv_path.clone(), reason };
            let mut vals: Vec<&str> = rec.iter().collect();
            let y_str = vals.pop().ok_or_else(|| parse_err("empty row".into()))?;
            let y: u8 = y_str.parse().map_err(|_| parse_err(format!("bad label {y_str}")))?;
            let x = vals
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| parse_err(format!("bad coordinate {v}"))))
                .collect::<Result<Vec<f64>>>()?;
            samples.push(LabeledSample { x, y });
        }
        if samples.len() != manifest.n {
            return Err(Error::Parse {
                path: csv_path,
                reason: format!("manifest declares n = {}, found {}", manifest.n, samples.len()),
            });
        }
        Ok(Dataset { samples, seed: manifest.seed, spec_id: manifest.spec_id })
    }
}

/// Sample mean of the labels and its standard error.
pub fn mean_label(data: &Dataset) -> (f64, f64) {
    let ys: Vec<f64> = data.samples.iter().map(|s| s.y as f64).collect();
    mean_stderr(&ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        let half = DistributionSpec::constant(2, 0.5).unwrap();
        assert_eq!(half.eta_eval(&[0.3, 0.9]).unwrap(), 0.5);
        let ramp = DistributionSpec::ramp(1).unwrap();
        assert_eq!(ramp.eta_eval(&[0.25]).unwrap(), 0.25);
        let m2 = DistributionSpec::margin(1, 2.0).unwrap();
        let expected = 0.5 + 0.5 * 0.5f64.sqrt();
        assert!((m2.eta_eval(&[0.75]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.85355).abs() < 1e-5);
        assert_eq!(m2.eta_eval(&[0.5]).unwrap(), 0.5);
    }

    #[test]
    fn eta_rejects_points_outside_cube() {
        let ramp = DistributionSpec::ramp(2).unwrap();
        assert!(matches!(ramp.eta_eval(&[1.2, 0.1]), Err(Error::Domain { .. })));
        assert!(matches!(ramp.eta_eval(&[0.1]), Err(Error::Domain { .. })));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(DistributionSpec::constant(1, 1.5).is_err());
        assert!(DistributionSpec::new(0, Family::Ramp, Marginal::Uniform, 1.0, 1.0).is_err());
        assert!(DistributionSpec::new(17, Family::Ramp, Marginal::Uniform, 1.0, 1.0).is_err());
        assert!(DistributionSpec::new(1, Family::Ramp, Marginal::Uniform, -1.0, 1.0).is_err());
        assert!(DistributionSpec::new(1, Family::Ramp, Marginal::Uniform, 1.0, 0.0).is_err());
        assert!(DistributionSpec::new(1, Family::MarginAlpha, Marginal::Uniform, 0.0, 1.0).is_err());
        let big = Family::SmoothBump {
            bumps: vec![Bump { center: vec![0.5], radius: 0.3, amplitude: 0.8 }],
        };
        assert!(DistributionSpec::new(1, big, Marginal::Uniform, 0.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_labels() {
        let ones = DistributionSpec::constant(3, 1.0).unwrap().sample(200, 4).unwrap();
        assert!(ones.samples.iter().all(|s| s.y == 1));
        let zeros = DistributionSpec::constant(3, 0.0).unwrap().sample(200, 4).unwrap();
        assert!(zeros.samples.iter().all(|s| s.y == 0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = DistributionSpec::margin(2, 0.5).unwrap().with_marginal(Marginal::Tilted).unwrap();
        let a = spec.sample(500, 99).unwrap();
        let b = spec.sample(500, 99).unwrap();
        assert_eq!(a, b);
        let c = spec.sample(500, 100).unwrap();
        assert_ne!(a, c);
        assert!(spec.sample(0, 1).is_err());
    }

    #[test]
    fn bayes_risk_closed_forms() {
        let q = Method::Quadrature;
        let half = DistributionSpec::constant(1, 0.5).unwrap();
        assert!((half.bayes_risk(q).unwrap().value - 0.5).abs() < 1e-12);
        let one = DistributionSpec::constant(2, 1.0).unwrap();
        assert!(one.bayes_risk(q).unwrap().value.abs() < 1e-12);
        let ramp = DistributionSpec::ramp(1).unwrap();
        assert!((ramp.bayes_risk(q).unwrap().value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bayes_risk_errors() {
        let ramp4 = DistributionSpec::ramp(4).unwrap();
        assert!(matches!(ramp4.bayes_risk(Method::Quadrature), Err(Error::UnsupportedDimension(4))));
        let ramp = DistributionSpec::ramp(1).unwrap();
        assert!(ramp.bayes_risk(Method::MonteCarlo { budget: 100, seed: 0 }).is_err());
        let mc = ramp4.bayes_risk(Method::MonteCarlo { budget: 20_000, seed: 3 }).unwrap();
        assert!((mc.value - 0.25).abs() < 4.0 * mc.stderr);
    }

    #[test]
    fn tilted_marginal_cdf_and_density() {
        let m = Marginal::Tilted;
        assert!((m.first_cdf(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(m.first_cdf(0.0), 0.0);
        let total = simpson_1d(0.0, 1.0, 1025, |t| m.density(&[t]));
        assert!((total - 1.0).abs() < 1e-12);
        assert!((0..=1000).all(|i| m.density(&[i as f64 / 1000.0]) <= m.density_bound()));
    }

    #[test]
    fn tsybakov_ramp_and_constant() {
        let ramp = DistributionSpec::ramp(1).unwrap();
        let grid: Vec<f64> = (0..10).map(|k| 0.001 * 1.5f64.powi(k)).collect();
        let rep = ramp.verify_tsybakov(&grid).unwrap();
        assert!(rep.holds);
        assert!((rep.fitted_alpha - 1.0).abs() < 0.1);
        for p in &rep.points {
            assert!((p.probability - 2.0 * p.t).abs() < 1e-12);
        }
        let one = DistributionSpec::constant(1, 1.0).unwrap();
        let grid: Vec<f64> = (1..10).map(|k| k as f64 * 0.05).collect();
        let rep = one.verify_tsybakov(&grid).unwrap();
        assert!(rep.holds);
        assert!(rep.points.iter().all(|p| p.probability == 0.0));
        assert!(rep.fitted_alpha.is_infinite());
        assert!(one.verify_tsybakov(&[]).is_err());
        assert!(one.verify_tsybakov(&[0.2, 0.1]).is_err());
        assert!(one.verify_tsybakov(&[0.7]).is_err());
    }

    #[test]
    fn tsybakov_margin_two() {
        let m2 = DistributionSpec::margin(1, 2.0).unwrap();
        let grid: Vec<f64> = (0..12).map(|k| 0.002 * 1.4f64.powi(k)).collect();
        let rep = m2.verify_tsybakov(&grid).unwrap();
        assert!(rep.holds);
        assert!((rep.fitted_alpha - 2.0).abs() < 0.2);
        for p in &rep.points {
            assert!((p.probability - (2.0 * p.t).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_file_round_trip() {
        let text = "family = \"margin-alpha\"\ndim = 2\nalpha = 2.0\nc0 = 4.0\nmarginal = \"tilted\"\n";
        let spec = DistributionSpec::from_toml_str(text).unwrap();
        assert_eq!(spec.family, Family::MarginAlpha);
        assert_eq!(spec.marginal, Marginal::Tilted);
        let again = DistributionSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(spec, again);
        let bump = "family = \"smooth-bump\"\ndim = 1\nalpha = 1.0\nc0 = 1.0\n\
                    [[bumps]]\ncenter = [0.5]\nradius = 0.25\namplitude = 0.3\n";
        let spec = DistributionSpec::from_toml_str(bump).unwrap();
        assert!((spec.eta_eval(&[0.5]).unwrap() - 0.8).abs() < 1e-15);
        assert!(DistributionSpec::from_toml_str("family = \"nope\"\ndim=1\nalpha=1\nc0=1").is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = DistributionSpec::ramp(3).unwrap().sample(64, 5).unwrap();
        data.write(dir.path(), "train").unwrap();
        let back = Dataset::read(dir.path(), "train").unwrap();
        assert_eq!(data, back);
    }
}
