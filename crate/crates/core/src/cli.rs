//! The `nnclass` command line. Every subcommand reads a TOML configuration,
//! takes a base seed and writes `records.csv`, `fit.csv` and `manifest.toml`
//! into its output directory.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::{
    besov_gammastar, besov_mstar, besov_rate1_displayed, besov_rate2_displayed, condition_check,
    default_size_constant, holder_condition, holder_mstar, holder_rate1_displayed, holder_rate2_displayed,
    run_rate_experiment, theorem_size_rule, write_csv, write_experiment, ExperimentConfig, Manifest, Variant,
};
use crate::construct::{
    deep_interpolant, interp_targets, lipschitz_estimate, separation_scaling, shallow_interpolant,
};
use crate::distlab::{mean_label, DistributionSpec, Method};
use crate::erm::{
    empirical_risk, erm_01_approx, logistic_loss, sieve_schedule, train_erm, zero_one_loss, Loss, SieveMode,
    TrainConfig,
};
use crate::kdrate::{
    analyze, best_m_term, fit_gamma, fit_rate_distortion, nn_mweight_error, rd_sweep, DictKind, Dictionary,
    Piece, Target,
};
use crate::nnet::Network;
use crate::risk::{comparison_check, risk_report, Scorer};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nnclass", version, about = "Numerical experiments for ReLU network classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Base seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a labeled dataset.
    Sample(Common),
    /// Train a network by empirical risk minimization.
    Train(Common),
    /// Build an explicit interpolating network.
    Interp(Common),
    /// Risk report for a saved network or a reference classifier.
    Risk(Common),
    /// Excess-risk rate experiment.
    Rates(Common),
    /// Best M-term, codec and network approximation sweeps.
    Kd(Common),
    /// Size rules and condition calculators.
    Check(Common),
    /// Minimum-separation scaling.
    Sep(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Sample(c) => ("sample", c),
            Command::Train(c) => ("train", c),
            Command::Interp(c) => ("interp", c),
            Command::Risk(c) => ("risk", c),
            Command::Rates(c) => ("rates", c),
            Command::Kd(c) => ("kd", c),
            Command::Check(c) => ("check", c),
            Command::Sep(c) => ("sep", c),
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (name, common) = cli.command.parts();
    match dispatch(name, common) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("nnclass {name}: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn dispatch(name: &str, c: &Common) -> Result<()> {
    let text = fs::read_to_string(&c.config)
        .map_err(|e| Error::Parse { path: c.config.clone(), reason: e.to_string() })?;
    let ctx = Context { name, text: &text, seed: c.seed, out: &c.out, config: &c.config };
    match name {
        "sample" => cmd_sample(&ctx),
        "train" => cmd_train(&ctx),
        "interp" => cmd_interp(&ctx),
        "risk" => cmd_risk(&ctx),
        "rates" => cmd_rates(&ctx),
        "kd" => cmd_kd(&ctx),
        "check" => cmd_check(&ctx),
        "sep" => cmd_sep(&ctx),
        _ => unreachable!("clap rejects unknown subcommands"),
    }
}

struct Context<'a> {
    name: &'a str,
    text: &'a str,
    seed: u64,
    out: &'a Path,
    config: &'a Path,
}

impl Context<'_> {
    fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        toml::from_str(self.text).map_err(|e| Error::Parse { path: self.config.to_path_buf(), reason: e.to_string() })
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(self.out)?;
        Ok(())
    }

    fn finish<R: Serialize, F: Serialize>(&self, records: &[R], fit: &[F]) -> Result<()> {
        write_csv(&self.out.join("records.csv"), records)?;
        write_csv(&self.out.join("fit.csv"), fit)?;
        Manifest::new(self.name, vec![self.seed], self.text).write(self.out)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleConfig {
    spec: DistributionSpec,
    n: usize,
}

#[derive(Serialize)]
struct SampleFit {
    n: usize,
    dim: usize,
    mean_label: f64,
    stderr: f64,
    bayes_risk: f64,
}

fn cmd_sample(ctx: &Context) -> Result<()> {
    let cfg: SampleConfig = ctx.parse()?;
    if cfg.n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let data = cfg.spec.sample(cfg.n, ctx.seed)?;
    ctx.prepare()?;
    data.write(ctx.out, "dataset")?;
    fs::copy(ctx.out.join("dataset.csv"), ctx.out.join("records.csv"))?;
    let (mean, se) = mean_label(&data);
    let bayes = if cfg.spec.dim <= 3 {
        cfg.spec.bayes_risk(Method::Quadrature)?.value
    } else {
        cfg.spec.bayes_risk(Method::MonteCarlo { budget: 100_000, seed: ctx.seed })?.value
    };
    write_csv(
        &ctx.out.join("fit.csv"),
        &[SampleFit { n: cfg.n, dim: cfg.spec.dim, mean_label: mean, stderr: se, bayes_risk: bayes }],
    )?;
    Manifest::new(ctx.name, vec![ctx.seed], ctx.text).write(ctx.out)
}

fn eval_method(spec: &DistributionSpec, budget: usize, seed: u64) -> Method {
    if budget == 0 && spec.dim <= 3 {
        Method::Quadrature
    } else {
        Method::MonteCarlo { budget: budget.max(100_000), seed }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainCmdConfig {
    spec: DistributionSpec,
    n: usize,
    #[serde(default = "default_sieve")]
    sieve: SieveMode,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    zero_one: bool,
    #[serde(default)]
    eval_budget: usize,
}

fn default_sieve() -> SieveMode {
    SieveMode::Wide
}

#[derive(Serialize)]
struct TrainFit {
    n: usize,
    final_surrogate_risk: f64,
    final_01_risk: f64,
    interpolated: bool,
    epochs_used: usize,
    restart: usize,
    connectivity: usize,
    weight_magnitude: f64,
    excess_risk: f64,
    excess_stderr: f64,
}

fn cmd_train(ctx: &Context) -> Result<()> {
    let cfg: TrainCmdConfig = ctx.parse()?;
    cfg.train.validate()?;
    let sieve = sieve_schedule(cfg.n, cfg.sieve, cfg.spec.dim)?;
    let data = cfg.spec.sample(cfg.n, crate::rng::derive_seed(ctx.seed, crate::rng::STREAM_SAMPLE, 0))?;
    let train = TrainConfig { seed: ctx.seed, ..cfg.train.clone() };
    let res = if cfg.zero_one { erm_01_approx(&sieve, &data, &train)? } else { train_erm(&sieve, &data, &train)? };
    let method = eval_method(&cfg.spec, cfg.eval_budget, crate::rng::derive_seed(ctx.seed, crate::rng::STREAM_EVAL, 0));
    let excess = crate::risk::excess_risk_exact(&res.net, 0.0, &cfg.spec, method)?;
    ctx.prepare()?;
    res.net.save(&ctx.out.join("network.txt"))?;
    ctx.finish(
        &res.telemetry,
        &[TrainFit {
            n: cfg.n,
            final_surrogate_risk: res.final_surrogate_risk,
            final_01_risk: res.final_01_risk,
            interpolated: res.interpolated,
            epochs_used: res.epochs_used,
            restart: res.restart,
            connectivity: res.net.connectivity(),
            weight_magnitude: res.net.weight_magnitude(),
            excess_risk: excess.value,
            excess_stderr: excess.stderr,
        }],
    )
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum InterpKind {
    Shallow,
    Deep,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpConfig {
    spec: DistributionSpec,
    n: usize,
    kind: InterpKind,
    #[serde(default = "default_probes")]
    lipschitz_probes: usize,
}

fn default_probes() -> usize {
    2000
}

#[derive(Serialize)]
struct InterpRecord {
    i: usize,
    y: u8,
    target: f64,
    score: f64,
    loss: f64,
    misclassified: u8,
}

#[derive(Serialize)]
struct InterpFit {
    n: usize,
    mean_loss: f64,
    loss_bound: f64,
    train_01_risk: f64,
    connectivity: usize,
    width: usize,
    depth: usize,
    weight_magnitude: f64,
    lipschitz: f64,
}

fn cmd_interp(ctx: &Context) -> Result<()> {
    let cfg: InterpConfig = ctx.parse()?;
    let data = cfg.spec.sample(cfg.n, ctx.seed)?;
    let targets = interp_targets(&data.labels());
    let net = match cfg.kind {
        InterpKind::Shallow => shallow_interpolant(&data, &targets, ctx.seed)?,
        InterpKind::Deep => deep_interpolant(&data, &targets, ctx.seed)?,
    };
    let records: Vec<InterpRecord> = data
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let t = net.eval(&s.x);
            InterpRecord {
                i,
                y: s.y,
                target: targets[i],
                score: t,
                loss: logistic_loss(t, s.y),
                misclassified: zero_one_loss(t, s.y, 0.0),
            }
        })
        .collect();
    let lipschitz = lipschitz_estimate(&net, cfg.lipschitz_probes, ctx.seed, &data.points())?;
    let fit = InterpFit {
        n: cfg.n,
        mean_loss: empirical_risk(&net, &data, Loss::Logistic, 0.0)?,
        loss_bound: std::f64::consts::LN_2 / cfg.n as f64,
        train_01_risk: empirical_risk(&net, &data, Loss::ZeroOne, 0.0)?,
        connectivity: net.connectivity(),
        width: net.width(),
        depth: net.depth(),
        weight_magnitude: net.weight_magnitude(),
        lipschitz,
    };
    ctx.prepare()?;
    net.save(&ctx.out.join("network.txt"))?;
    ctx.finish(&records, &[fit])
}

/// Reference scorers for the `risk` subcommand.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Reference {
    /// `eta` itself, thresholded at 1/2.
    Bayes,
    /// `1 - eta`, thresholded at 1/2.
    AntiBayes,
    /// The constant 1/2 (always predicts 1).
    Half,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RiskConfig {
    spec: DistributionSpec,
    /// A saved network (raw scores, threshold 0); relative paths resolve
    /// against the configuration file.
    #[serde(default)]
    network: Option<PathBuf>,
    #[serde(default)]
    reference: Option<Reference>,
    #[serde(default)]
    eval_budget: usize,
    #[serde(default = "default_p")]
    p: u32,
}

fn default_p() -> u32 {
    2
}

#[derive(Serialize)]
struct ComparisonRow {
    alpha: f64,
    p: u32,
    lhs: f64,
    lhs_stderr: f64,
    rhs_base: f64,
    exponent: f64,
    ratio: f64,
    violation: bool,
}

struct Logistic<'a>(&'a Network);

impl Scorer for Logistic<'_> {
    fn score(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.0.eval(x)).exp())
    }
}

fn cmd_risk(ctx: &Context) -> Result<()> {
    let cfg: RiskConfig = ctx.parse()?;
    let method = eval_method(&cfg.spec, cfg.eval_budget, ctx.seed);
    let spec = &cfg.spec;
    let eta = |x: &[f64]| spec.eta_unchecked(x);
    let anti = |x: &[f64]| 1.0 - spec.eta_unchecked(x);
    let half = |_: &[f64]| 0.5;
    let (report, cmp) = match (&cfg.network, cfg.reference) {
        (Some(path), None) => {
            let path = if path.is_relative() {
                ctx.config.parent().unwrap_or(Path::new(".")).join(path)
            } else {
                path.clone()
            };
            let net = Network::load(&path)?;
            if net.input_dim() != spec.dim {
                return Err(Error::Structural(format!(
                    "network input dimension {} differs from spec dimension {}",
                    net.input_dim(),
                    spec.dim
                )));
            }
            let probs = Logistic(&net);
            (risk_report(&probs, 0.5, spec, method)?, comparison_check(&probs, 0.5, spec, spec.alpha, cfg.p, method)?)
        }
        (None, Some(r)) => {
            let f: &dyn Scorer = match r {
                Reference::Bayes => &eta,
                Reference::AntiBayes => &anti,
                Reference::Half => &half,
            };
            (risk_report(f, 0.5, spec, method)?, comparison_check(f, 0.5, spec, spec.alpha, cfg.p, method)?)
        }
        _ => return Err(Error::InvalidArgument("set exactly one of `network` and `reference`".into())),
    };
    ctx.prepare()?;
    ctx.finish(
        &[report.row()],
        &[ComparisonRow {
            alpha: spec.alpha,
            p: cfg.p,
            lhs: cmp.lhs,
            lhs_stderr: cmp.lhs_stderr,
            rhs_base: cmp.rhs_base,
            exponent: cmp.exponent,
            ratio: cmp.ratio,
            violation: cmp.violation,
        }],
    )
}

fn cmd_rates(ctx: &Context) -> Result<()> {
    let mut cfg = ExperimentConfig::from_toml_str(ctx.text)
        .map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse { path: ctx.config.to_path_buf(), reason },
            other => other,
        })?;
    cfg.seeds = cfg.seeds.iter().map(|s| s ^ ctx.seed).collect();
    let result = run_rate_experiment(&cfg)?;
    write_experiment(ctx.out, &cfg, &result)?;
    Manifest::new(ctx.name, cfg.seeds.clone(), ctx.text).write(ctx.out)
}

/// Named witness functions for the approximation sweeps.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    Zero,
    Identity,
    Square,
    Sine,
    /// `max(0, 2x - 0.8)`.
    Kink,
    /// `x_1 x_2` on the unit square.
    Product2d,
}

impl Witness {
    pub fn target(self) -> Target {
        match self {
            Witness::Zero => Target::zero(1),
            Witness::Identity => Target::identity(),
            Witness::Square => Target::polynomial(vec![0.0, 0.0, 1.0]),
            Witness::Sine => Target::function(1, |x| (2.0 * std::f64::consts::PI * x[0]).sin()),
            Witness::Kink => Target::Piecewise(vec![
                Piece { start: 0.0, end: 0.4, coeffs: vec![0.0] },
                Piece { start: 0.4, end: 1.0, coeffs: vec![-0.8, 2.0] },
            ]),
            Witness::Product2d => Target::function(2, |x| x[0] * x[1]),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KdConfig {
    witness: Witness,
    max_level: u32,
    #[serde(default = "default_pi")]
    pi_degree: u32,
    m_grid: Vec<usize>,
    q_grid: Vec<u32>,
    #[serde(default)]
    eps_grid: Vec<f64>,
    #[serde(default)]
    nn_budgets: Vec<usize>,
    #[serde(default)]
    train: TrainConfig,
}

fn default_pi() -> u32 {
    2
}

#[derive(Serialize)]
struct KdFit {
    quantity: &'static str,
    gamma_hat: f64,
    band_lo: f64,
    band_hi: f64,
    points: usize,
}

fn cmd_kd(ctx: &Context) -> Result<()> {
    let cfg: KdConfig = ctx.parse()?;
    let f = cfg.witness.target();
    let kind = if f.dim() == 1 { DictKind::Haar1d } else { DictKind::HaarTensor2d };
    let dict = Dictionary::new(kind, cfg.max_level)?;
    let a = analyze(&f, &dict)?;
    let records = rd_sweep(&a, &cfg.m_grid, &cfg.q_grid, cfg.pi_degree)?;
    let mut fits = Vec::new();
    let m_errors: Vec<(usize, f64)> = cfg
        .m_grid
        .iter()
        .map(|&m| Ok((m, best_m_term(&a, m, cfg.pi_degree)?.l2_error)))
        .collect::<Result<_>>()?;
    let positive: Vec<(usize, f64)> = m_errors.iter().copied().filter(|p| p.1 > 0.0).collect();
    if positive.len() >= 4 {
        let g = fit_gamma(&positive)?;
        fits.push(KdFit { quantity: "best-m-term", gamma_hat: g.gamma_hat, band_lo: g.band.0, band_hi: g.band.1, points: positive.len() });
    }
    if !cfg.eps_grid.is_empty() {
        let g = fit_rate_distortion(&records, &cfg.eps_grid)?;
        fits.push(KdFit { quantity: "rate-distortion", gamma_hat: g.gamma_hat, band_lo: g.band.0, band_hi: g.band.1, points: cfg.eps_grid.len() });
    }
    if !cfg.nn_budgets.is_empty() {
        let train = TrainConfig { seed: ctx.seed, ..cfg.train.clone() };
        let nn: Vec<(usize, f64)> = cfg
            .nn_budgets
            .iter()
            .map(|&m| Ok((m, nn_mweight_error(&f, m, cfg.pi_degree, &train)?.error_upper_bound)))
            .collect::<Result<_>>()?;
        let g = fit_gamma(&nn)?;
        fits.push(KdFit { quantity: "network-upper-bound", gamma_hat: g.gamma_hat, band_lo: g.band.0, band_hi: g.band.1, points: nn.len() });
    }
    ctx.prepare()?;
    ctx.finish(&records, &fits)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckConfig {
    alpha: f64,
    gamma_star: f64,
    m_star: f64,
    dim: usize,
    n_grid: Vec<usize>,
    #[serde(default)]
    constant: Option<f64>,
    #[serde(default)]
    holder: Vec<HolderCase>,
    #[serde(default)]
    besov: Vec<BesovCase>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HolderCase {
    beta: f64,
    alpha: f64,
    dim: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BesovCase {
    m: f64,
    dim: usize,
}

#[derive(Serialize)]
struct SizeRow {
    n: usize,
    variant: Variant,
    exponent: f64,
    conn_budget: usize,
    depth_cap: Option<usize>,
}

#[derive(Serialize)]
struct ConditionRow {
    case: String,
    m_star: f64,
    gamma_star: f64,
    rate1: bool,
    rate2: bool,
    rate1_displayed: Option<bool>,
    rate2_displayed: Option<bool>,
}

fn cmd_check(ctx: &Context) -> Result<()> {
    let cfg: CheckConfig = ctx.parse()?;
    let c = cfg.constant.unwrap_or_else(|| default_size_constant(cfg.dim));
    let mut sizes = Vec::new();
    for &n in &cfg.n_grid {
        for variant in [Variant::Rate1, Variant::Rate2] {
            let r = theorem_size_rule(n, cfg.alpha, cfg.gamma_star, cfg.m_star, variant, c)?;
            sizes.push(SizeRow { n, variant, exponent: r.exponent, conn_budget: r.conn_budget, depth_cap: r.depth_cap });
        }
    }
    let mut conds = vec![ConditionRow {
        case: "declared".into(),
        m_star: cfg.m_star,
        gamma_star: cfg.gamma_star,
        rate1: condition_check(cfg.alpha, cfg.gamma_star, cfg.m_star, Variant::Rate1),
        rate2: condition_check(cfg.alpha, cfg.gamma_star, cfg.m_star, Variant::Rate2),
        rate1_displayed: None,
        rate2_displayed: None,
    }];
    for h in &cfg.holder {
        conds.push(ConditionRow {
            case: format!("holder beta={} alpha={} d={}", h.beta, h.alpha, h.dim),
            m_star: holder_mstar(h.beta, h.alpha, h.dim)?,
            gamma_star: h.beta / h.dim as f64,
            rate1: holder_condition(h.beta, h.alpha, h.dim, Variant::Rate1)?,
            rate2: holder_condition(h.beta, h.alpha, h.dim, Variant::Rate2)?,
            rate1_displayed: Some(holder_rate1_displayed(h.beta, h.alpha)),
            rate2_displayed: Some(holder_rate2_displayed(h.beta, h.alpha)),
        });
    }
    for b in &cfg.besov {
        let (ms, gs) = (besov_mstar(b.m, b.dim)?, besov_gammastar(b.m, b.dim)?);
        conds.push(ConditionRow {
            case: format!("besov m={} d={}", b.m, b.dim),
            m_star: ms,
            gamma_star: gs,
            rate1: condition_check(0.0, gs, ms, Variant::Rate1),
            rate2: condition_check(0.0, gs, ms, Variant::Rate2),
            rate1_displayed: Some(besov_rate1_displayed(b.m, b.dim)),
            rate2_displayed: Some(besov_rate2_displayed(b.m, b.dim)),
        });
    }
    ctx.prepare()?;
    ctx.finish(&sizes, &conds)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SepConfig {
    dim: usize,
    n_grid: Vec<usize>,
    reps: usize,
}

#[derive(Serialize)]
struct SepFit {
    dim: usize,
    slope: f64,
    band_lo: f64,
    band_hi: f64,
    predicted_slope: f64,
    intercept: f64,
}

fn cmd_sep(ctx: &Context) -> Result<()> {
    let cfg: SepConfig = ctx.parse()?;
    let s = separation_scaling(cfg.dim, &cfg.n_grid, cfg.reps, ctx.seed)?;
    ctx.prepare()?;
    ctx.finish(
        &s.records,
        &[SepFit {
            dim: s.dim,
            slope: s.slope,
            band_lo: s.band.0,
            band_hi: s.band.1,
            predicted_slope: s.predicted_slope(),
            intercept: s.intercept,
        }],
    )
}
