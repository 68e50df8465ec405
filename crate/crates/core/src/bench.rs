//! Experiment orchestration: network-size rules and condition calculators of the
//! rate theorems, excess-risk rate experiments, power-law rate fitting and
//! result persistence.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distlab::{DistributionSpec, Method};
use crate::erm::{erm_01_approx, sieve_schedule, train_erm, SieveMode, TrainConfig};
use crate::fit::{fit_power_law, mean_stderr, BOOTSTRAP_RESAMPLES};
use crate::nnet::{Architecture, SieveSpec};
use crate::risk::excess_risk_exact;
use crate::rng::{derive_seed, STREAM_EVAL, STREAM_SAMPLE, STREAM_TRAIN};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which of the two rate theorems a size rule or condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// 0-1 loss minimizer over a single-hidden-layer class.
    Rate1,
    /// Logistic minimizer over a depth-capped class; size carries `log(n + 1)`.
    Rate2,
}

/// Default size constant `C = 8(d + 2)`.
pub fn default_size_constant(d: usize) -> f64 {
    8.0 * (d as f64 + 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeRule {
    pub conn_budget: usize,
    pub depth_cap: Option<usize>,
    pub exponent: f64,
}

/// `ceil` that forgives floating-point overshoot of an exact integer.
fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Network size for sample size `n`: `ceil(C n^e)` with
/// `e = (2 + alpha) m* / (2 (1 + alpha) gamma*)`, times `log(n + 1)` for
/// [`Variant::Rate2`], which also caps the depth at the same value.
/// `gamma_star = inf` is allowed and gives constant-size networks.
pub fn theorem_size_rule(
    n: usize,
    alpha: f64,
    gamma_star: f64,
    m_star: f64,
    variant: Variant,
    constant: f64,
) -> Result<SizeRule> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if !(gamma_star > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma* must be > 0, got {gamma_star}")));
    }
    if !(m_star > 0.0 && m_star < 1.0) {
        return Err(Error::InvalidArgument(format!("m* must lie in (0, 1), got {m_star}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::InvalidArgument(format!("size constant must be > 0, got {constant}")));
    }
    let exponent = (2.0 + alpha) * m_star / (2.0 * (1.0 + alpha) * gamma_star);
    let base = constant * (n as f64).powf(exponent);
    Ok(match variant {
        Variant::Rate1 => SizeRule { conn_budget: ceil_tolerant(base), depth_cap: None, exponent },
        Variant::Rate2 => {
            let size = ceil_tolerant(base * (n as f64 + 1.0).ln());
            SizeRule { conn_budget: size, depth_cap: Some(size), exponent }
        }
    })
}

/// `2(1 + alpha) gamma* (1 - m*) >= (2 + alpha) m*` for rate 1, the same
/// without the factor 2 for rate 2.
pub fn condition_check(alpha: f64, gamma_star: f64, m_star: f64, variant: Variant) -> bool {
    condition_margin(alpha, gamma_star, m_star, variant) >= 0.0
}

/// Left minus right side of [`condition_check`].
pub fn condition_margin(alpha: f64, gamma_star: f64, m_star: f64, variant: Variant) -> f64 {
    let k = match variant {
        Variant::Rate1 => 2.0,
        Variant::Rate2 => 1.0,
    };
    k * (1.0 + alpha) * gamma_star * (1.0 - m_star) - (2.0 + alpha) * m_star
}

/// Minimax exponent `beta (1 + alpha) / (2 beta + d)` for `beta`-Hölder `eta`.
pub fn holder_mstar(beta: f64, alpha: f64, d: usize) -> Result<f64> {
    if !(beta >= 1.0 && beta.is_finite()) || !(alpha >= 0.0) || d == 0 {
        return Err(Error::InvalidArgument(format!("need beta >= 1, alpha >= 0, d >= 1; got {beta}, {alpha}, {d}")));
    }
    Ok(beta * (1.0 + alpha) / (2.0 * beta + d as f64))
}

/// Approximation exponent `beta / d` of the Hölder ball.
pub fn holder_gammastar(beta: f64, d: usize) -> Result<f64> {
    if !(beta > 0.0) || d == 0 {
        return Err(Error::InvalidArgument(format!("need beta > 0 and d >= 1; got {beta}, {d}")));
    }
    Ok(beta / d as f64)
}

/// The Hölder rate-1 condition in its displayed closed form,
/// `beta - 1 >= (alpha / 2)(1 + 2 beta)`.
pub fn holder_rate1_displayed(beta: f64, alpha: f64) -> bool {
    beta - 1.0 >= alpha / 2.0 * (1.0 + 2.0 * beta)
}

/// The Hölder rate-2 condition in its displayed closed form,
/// `beta - 1 >= alpha (1 + beta)`.
pub fn holder_rate2_displayed(beta: f64, alpha: f64) -> bool {
    beta - 1.0 >= alpha * (1.0 + beta)
}

/// The generic condition evaluated at `gamma* = beta / d`,
/// `m* = beta (1 + alpha) / (2 beta + d)`.
pub fn holder_condition(beta: f64, alpha: f64, d: usize, variant: Variant) -> Result<bool> {
    Ok(condition_check(alpha, holder_gammastar(beta, d)?, holder_mstar(beta, alpha, d)?, variant))
}

fn check_besov(m: f64, d: usize) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) || d == 0 {
        return Err(Error::InvalidArgument(format!("need smoothness m > 0 and d >= 1; got {m}, {d}")));
    }
    Ok(())
}

/// `m / (2m + d)` (noise exponent `alpha = 0`).
pub fn besov_mstar(m: f64, d: usize) -> Result<f64> {
    check_besov(m, d)?;
    Ok(m / (2.0 * m + d as f64))
}

/// `m / d`.
pub fn besov_gammastar(m: f64, d: usize) -> Result<f64> {
    check_besov(m, d)?;
    Ok(m / d as f64)
}

/// `2(m + d) >= 2d`, true for every admissible `m`.
pub fn besov_rate1_displayed(m: f64, d: usize) -> bool {
    2.0 * (m + d as f64) >= 2.0 * d as f64
}

/// `m + d >= 2d`, i.e. `m >= d`.
pub fn besov_rate2_displayed(m: f64, d: usize) -> bool {
    m + d as f64 >= 2.0 * d as f64
}

/// Per-`n` aggregate of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub mean_excess: f64,
    pub stderr: f64,
    /// Mean below three evaluation standard errors; excluded from fits.
    #[serde(default)]
    pub noise_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// `-slope` of `log mean_excess` against `log n`.
    pub m_hat: f64,
    pub intercept: f64,
    pub band: (f64, f64),
    pub points: Vec<RatePoint>,
    pub theoretical_m: Option<f64>,
    /// Number of points that entered the fit.
    pub used: usize,
    /// Every usable mean vanished: the excess risk is flat at zero.
    pub degenerate: bool,
}

impl RateFit {
    pub fn row(&self) -> FitRow {
        FitRow {
            m_hat: self.m_hat,
            band_lo: self.band.0,
            band_hi: self.band.1,
            intercept: self.intercept,
            theoretical_m: self.theoretical_m.unwrap_or(f64::NAN),
            used: self.used,
            degenerate: self.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub m_hat: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub intercept: f64,
    pub theoretical_m: f64,
    pub used: usize,
    pub degenerate: bool,
}

/// Least-squares fit of `log mean_excess = a - m log n` with a bootstrap band.
/// Nonpositive and noise-floor points are dropped; fewer than three remaining
/// points is an error.
pub fn fit_rate(points: &[RatePoint]) -> Result<RateFit> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.n);
    let usable: Vec<&RatePoint> = sorted
        .iter()
        .filter(|p| {
            let keep = p.mean_excess > 0.0 && !p.noise_floor;
            if !keep {
                log::warn!("dropping n = {} (mean excess {}) from the rate fit", p.n, p.mean_excess);
            }
            keep
        })
        .collect();
    if usable.len() < 3 {
        return Err(Error::Fit(format!("{} usable points, need >= 3", usable.len())));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.mean_excess).collect();
    let sd: Vec<f64> = usable.iter().map(|p| p.stderr / p.mean_excess).collect();
    let fit = fit_power_law(&xs, &ys, Some(&sd), BOOTSTRAP_RESAMPLES, 0x7261_7465)?;
    Ok(RateFit {
        m_hat: -fit.slope,
        intercept: fit.intercept,
        band: (-fit.band.1, -fit.band.0),
        used: usable.len(),
        points: sorted,
        theoretical_m: None,
        degenerate: false,
    })
}

/// How the per-`n` class is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentSieve {
    Wide,
    Deep,
    TheoremRule,
}

/// Declared theory parameters for the theorem-rule sieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryParams {
    pub gamma_star: f64,
    pub m_star: f64,
    pub variant: Variant,
    /// Size constant; defaults to `8(d + 2)`.
    #[serde(default)]
    pub constant: Option<f64>,
    /// Polynomial weight-bound degree `p` in `pi(M) = M^p`.
    #[serde(default = "default_pi_degree")]
    pub pi_degree: u32,
}

fn default_pi_degree() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Logistic-loss ERM.
    #[default]
    Logistic,
    /// Logistic ERM followed by 0-1 local search.
    ZeroOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: DistributionSpec,
    pub n_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub sieve_mode: ExperimentSieve,
    #[serde(default)]
    pub train: TrainConfig,
    /// Monte Carlo budget for the excess risk on fresh points; 0 selects
    /// quadrature.
    #[serde(default)]
    pub eval_budget: usize,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default)]
    pub theory: Option<TheoryParams>,
    #[serde(default)]
    pub estimator: Estimator,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(Error::InvalidArgument("n_grid must be nonempty, positive and strictly ascending".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seeds must be nonempty".into()));
        }
        if self.eval_budget > 0 && self.eval_budget < 1000 {
            return Err(Error::InvalidArgument("eval_budget must be 0 (quadrature) or >= 1000".into()));
        }
        if self.eval_budget == 0 && self.spec.dim > 3 {
            return Err(Error::UnsupportedDimension(self.spec.dim));
        }
        if self.sieve_mode == ExperimentSieve::TheoremRule {
            let t = self.theory.as_ref().ok_or_else(|| {
                Error::InvalidArgument("theorem-rule sieve needs [theory] gamma_star, m_star, variant".into())
            })?;
            let c = t.constant.unwrap_or_else(|| default_size_constant(self.spec.dim));
            theorem_size_rule(1, self.spec.alpha, t.gamma_star, t.m_star, t.variant, c)?;
        }
        self.train.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Parse { path: "<experiment>".into(), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The class searched at sample size `n`.
    pub fn sieve(&self, n: usize) -> Result<SieveSpec> {
        let d = self.spec.dim;
        match self.sieve_mode {
            ExperimentSieve::Wide => sieve_schedule(n, SieveMode::Wide, d),
            ExperimentSieve::Deep => sieve_schedule(n, SieveMode::Deep, d),
            ExperimentSieve::TheoremRule => {
                let t = self.theory.as_ref().expect("validated");
                let c = t.constant.unwrap_or_else(|| default_size_constant(d));
                let rule = theorem_size_rule(n, self.spec.alpha, t.gamma_star, t.m_star, t.variant, c)?;
                theorem_sieve(d, &rule, t.pi_degree)
            }
        }
    }
}

/// Topology for a size rule. Rate 1: one hidden layer of width
/// `floor((M - 1)/(d + 2))`. Rate 2: up to two hidden layers (bounded by the
/// depth cap) of the largest equal width whose dense parameter count fits,
/// plus an input-to-output skip edge.
pub fn theorem_sieve(d: usize, rule: &SizeRule, pi_degree: u32) -> Result<SieveSpec> {
    let m = rule.conn_budget;
    let bound = (m as f64).powi(pi_degree as i32);
    match rule.depth_cap {
        None => {
            let width = ((m.saturating_sub(1)) / (d + 2)).max(1);
            SieveSpec::new(Architecture::new(vec![d, width, 1])?, m, bound, Some(pi_degree))
        }
        Some(cap) => {
            let layers = cap.clamp(1, 2);
            let fits = |w: usize| {
                let mut dims = vec![d];
                dims.extend(std::iter::repeat(w).take(layers));
                dims.push(1);
                let arch = Architecture::new(dims).expect("positive dims");
                arch.dense_param_count() + d <= m
            };
            let mut width = 1;
            while fits(width + 1) {
                width += 1;
            }
            let mut dims = vec![d];
            dims.extend(std::iter::repeat(width).take(layers));
            dims.push(1);
            SieveSpec::new(Architecture::new(dims)?, m, bound, Some(pi_degree))?.with_skips(vec![(0, layers + 1)])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Diverged,
}

/// One `(n, seed)` cell of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRecord {
    pub n: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub excess_risk: f64,
    pub eval_stderr: f64,
    pub train_01_risk: f64,
    pub surrogate_risk: f64,
    pub connectivity: usize,
    pub conn_budget: usize,
    pub width: usize,
    pub depth: usize,
    pub epochs_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<RateRecord>,
    pub fit: RateFit,
}

fn run_cell(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<RateRecord> {
    let sieve = cfg.sieve(n)?;
    let data = cfg.spec.sample(n, derive_seed(seed, STREAM_SAMPLE, n as u64))?;
    let train = TrainConfig { seed: derive_seed(seed, STREAM_TRAIN, n as u64), ..cfg.train.clone() };
    let base = RateRecord {
        n,
        seed,
        status: CellStatus::Diverged,
        excess_risk: f64::NAN,
        eval_stderr: f64::NAN,
        train_01_risk: f64::NAN,
        surrogate_risk: f64::NAN,
        connectivity: 0,
        conn_budget: sieve.conn_budget,
        width: sieve.arch.width(),
        depth: sieve.arch.hidden_layers(),
        epochs_used: 0,
    };
    let fitted = match cfg.estimator {
        Estimator::Logistic => train_erm(&sieve, &data, &train),
        Estimator::ZeroOne => erm_01_approx(&sieve, &data, &train),
    };
    let result = match fitted {
        Ok(r) => r,
        Err(Error::TrainingDivergence { .. }) => return Ok(base),
        Err(e) => return Err(e),
    };
    let method = if cfg.eval_budget == 0 {
        Method::Quadrature
    } else {
        Method::MonteCarlo { budget: cfg.eval_budget, seed: derive_seed(seed, STREAM_EVAL, n as u64) }
    };
    let excess = excess_risk_exact(&result.net, cfg.threshold, &cfg.spec, method)?;
    Ok(RateRecord {
        status: CellStatus::Ok,
        excess_risk: excess.value,
        eval_stderr: excess.stderr,
        train_01_risk: result.final_01_risk,
        surrogate_risk: result.final_surrogate_risk,
        connectivity: result.net.connectivity(),
        epochs_used: result.epochs_used,
        ..base
    })
}

/// Runs every `(n, seed)` cell in parallel, aggregates per `n` in `(n, seed)`
/// order and fits the decay exponent of the mean excess risk.
///
/// Diverged cells are recorded and excluded; if they make up 10% of the cells
/// or more the experiment fails.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let cells: Vec<(usize, u64)> =
        cfg.n_grid.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
    let records = cells.par_iter().map(|&(n, s)| run_cell(cfg, n, s)).collect::<Result<Vec<_>>>()?;
    let diverged = records.iter().filter(|r| r.status == CellStatus::Diverged).count();
    if diverged * 10 >= records.len() && diverged > 0 {
        return Err(Error::ExperimentFailed(format!("{diverged} of {} cells diverged", records.len())));
    }
    let points = aggregate(&records);
    let theoretical_m = cfg.theory.as_ref().map(|t| t.m_star);
    let fit = if points.iter().all(|p| p.mean_excess <= 0.0 || p.noise_floor) {
        RateFit {
            m_hat: 0.0,
            intercept: f64::NEG_INFINITY,
            band: (0.0, 0.0),
            points,
            theoretical_m,
            used: 0,
            degenerate: true,
        }
    } else {
        RateFit { theoretical_m, ..fit_rate(&points)? }
    };
    Ok(ExperimentResult { records, fit })
}

/// Per-`n` mean and standard error over successful cells. A mean below three
/// evaluation standard errors of the mean is flagged as noise floor.
pub fn aggregate(records: &[RateRecord]) -> Vec<RatePoint> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let ok: Vec<&RateRecord> =
                records.iter().filter(|r| r.n == n && r.status == CellStatus::Ok).collect();
            if ok.is_empty() {
                return None;
            }
            let vals: Vec<f64> = ok.iter().map(|r| r.excess_risk).collect();
            let (mean, stderr) = mean_stderr(&vals);
            let eval_se = (ok.iter().map(|r| r.eval_stderr.powi(2)).sum::<f64>()).sqrt() / ok.len() as f64;
            let noise_floor = mean <= 0.0 || mean < 3.0 * eval_se;
            Some(RatePoint { n, mean_excess: mean, stderr, noise_floor })
        })
        .collect()
}

/// Checks that the mean excess risk never rises by more than `k` combined
/// standard errors between consecutive grid points.
pub fn nonincreasing_within(points: &[RatePoint], k: f64) -> bool {
    points.windows(2).all(|w| {
        let slack = k * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].mean_excess <= w[0].mean_excess + slack
    })
}

/// Serializes rows to a CSV file.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Run metadata written next to every result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seeds: Vec<u64>,
    /// Verbatim configuration text.
    pub config: String,
}

impl Manifest {
    pub fn new(command: &str, seeds: Vec<u64>, config: &str) -> Self {
        Manifest { command: command.into(), version: VERSION.into(), seeds, config: config.into() }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        fs::write(dir.join("manifest.toml"), text)?;
        Ok(())
    }
}

/// Writes `records.csv`, `points.csv`, `fit.csv` and the manifest.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("records.csv"), &result.records)?;
    write_csv(&dir.join("points.csv"), &result.fit.points)?;
    write_csv(&dir.join("fit.csv"), &[result.fit.row()])?;
    let text = toml::to_string(cfg).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Manifest::new("rates", cfg.seeds.clone(), &text).write(dir)
}
