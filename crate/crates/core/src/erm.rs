//! Losses, full-batch gradient-descent empirical risk minimization over sieve
//! classes, the sieve growth schedule and a 0-1 refinement pass.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distlab::Dataset;
use crate::nnet::{in_sieve, project_in_place, Architecture, ForwardCache, Network, SieveSpec};
use crate::rng::{stream_rng, STREAM_TRAIN};
use crate::{Error, Result};

/// `log(1 + exp(-t (2y - 1)))`, evaluated stably.
pub fn logistic_loss(t: f64, y: u8) -> f64 {
    let m = t * sign(y);
    (-m.abs()).exp().ln_1p() + (-m).max(0.0)
}

/// Derivative of [`logistic_loss`] with respect to the score `t`.
pub fn logistic_loss_grad(t: f64, y: u8) -> f64 {
    let s = sign(y);
    let m = t * s;
    // sigma(-m) = 1 / (1 + e^m)
    let sig = if m > 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    };
    -s * sig
}

#[inline]
fn sign(y: u8) -> f64 {
    2.0 * y as f64 - 1.0
}

/// `1` iff the plug-in label `1{t >= threshold}` differs from `y`.
pub fn zero_one_loss(t: f64, y: u8, threshold: f64) -> u8 {
    ((t >= threshold) as u8 != y) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    Logistic,
    ZeroOne,
}

/// Mean loss of `net` over `data`.
pub fn empirical_risk(net: &Network, data: &Dataset, loss: Loss, threshold: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empirical risk of an empty dataset".into()));
    }
    check_dims(net, data)?;
    let mut cache = ForwardCache::new(net);
    let total: f64 = data
        .samples
        .iter()
        .map(|s| {
            let t = net.forward(&s.x, &mut cache);
            match loss {
                Loss::Logistic => logistic_loss(t, s.y),
                Loss::ZeroOne => zero_one_loss(t, s.y, threshold) as f64,
            }
        })
        .sum();
    Ok(total / data.len() as f64)
}

fn check_dims(net: &Network, data: &Dataset) -> Result<()> {
    if data.dim() != net.input_dim() {
        return Err(Error::Structural(format!(
            "data dimension {} does not match network input {}",
            data.dim(),
            net.input_dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SieveMode {
    Wide,
    Deep,
}

/// `pi(M) = max(M, exp(sqrt(M)))`, capped at `10^6`.
pub fn schedule_weight_bound(m: usize) -> f64 {
    let m = m as f64;
    m.max(m.sqrt().exp()).min(1e6)
}

/// Connectivity budget `c_d n` with `c_d = 4(d + 2)`.
pub fn schedule_budget(n: usize, d: usize) -> usize {
    4 * (d + 2) * n
}

/// The consistency sieve `S_n`: `(d, n, 1)` in wide mode, `(d, 3, ..., 3, 1)`
/// with `n - 1` hidden layers in deep mode (a single hidden unit when `n = 1`).
pub fn sieve_schedule(n: usize, mode: SieveMode, d: usize) -> Result<SieveSpec> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("sieve schedule needs n >= 1 and d >= 1".into()));
    }
    let dims = match mode {
        SieveMode::Wide => vec![d, n, 1],
        SieveMode::Deep if n == 1 => vec![d, 1, 1],
        SieveMode::Deep => {
            let mut dims = vec![d];
            dims.extend(std::iter::repeat(3).take(n - 1));
            dims.push(1);
            dims
        }
    };
    let budget = schedule_budget(n, d);
    SieveSpec::new(Architecture::new(dims)?, budget, schedule_weight_bound(budget), None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Plain,
    Momentum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub step_size: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub restarts: usize,
    pub init_scale: f64,
    pub seed: u64,
    pub project_every: usize,
    /// Stop a restart as soon as the iterate lies in the sieve and has zero
    /// training 0-1 error (classification only).
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Momentum,
            step_size: 0.05,
            momentum: 0.9,
            epochs: 2000,
            restarts: 10,
            init_scale: 0.5,
            seed: 0,
            project_every: 25,
            early_stop: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be >= 1");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be >= 0");
        }
        if self.project_every == 0 {
            return bad("project_every must be >= 1");
        }
        Ok(())
    }
}

/// One telemetry row, recorded before the update of each epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub surrogate_risk: f64,
    pub zero_one_risk: f64,
    pub weight_magnitude: f64,
    pub connectivity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub net: Network,
    pub final_surrogate_risk: f64,
    pub final_01_risk: f64,
    pub per_point_losses: Vec<f64>,
    pub epochs_used: usize,
    pub interpolated: bool,
    /// Index of the winning restart.
    pub restart: usize,
    pub telemetry: Vec<EpochRecord>,
}

/// Writes training telemetry as CSV.
pub fn write_telemetry(path: &Path, rows: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

enum Target<'a> {
    Labels(&'a [u8]),
    Values { ys: &'a [f64], weights: Option<&'a [f64]> },
}

struct Objective<'a> {
    xs: Vec<&'a [f64]>,
    target: Target<'a>,
}

struct Pass {
    loss: f64,
    errors: usize,
}

impl Objective<'_> {
    fn weight(&self, i: usize) -> f64 {
        match &self.target {
            Target::Values { weights: Some(w), .. } => w[i],
            _ => 1.0 / self.xs.len() as f64,
        }
    }

    /// Loss and 0-1 error count; accumulates the loss gradient into `grad` when given.
    fn pass(&self, net: &Network, cache: &mut ForwardCache, mut grad: Option<&mut Network>) -> Pass {
        let mut loss = 0.0;
        let mut errors = 0;
        for (i, x) in self.xs.iter().enumerate() {
            let t = net.forward(x, cache);
            let w = self.weight(i);
            let dl = match &self.target {
                Target::Labels(ys) => {
                    loss += w * logistic_loss(t, ys[i]);
                    errors += zero_one_loss(t, ys[i], 0.0) as usize;
                    logistic_loss_grad(t, ys[i])
                }
                Target::Values { ys, .. } => {
                    let r = t - ys[i];
                    loss += w * r * r;
                    2.0 * r
                }
            };
            if let Some(g) = grad.as_deref_mut() {
                net.backward(w * dl, cache, g);
            }
        }
        Pass { loss, errors }
    }

    fn is_classification(&self) -> bool {
        matches!(self.target, Target::Labels(_))
    }
}

struct Outcome {
    net: Network,
    loss: f64,
    epochs_used: usize,
    telemetry: Vec<EpochRecord>,
}

fn run_restart(sieve: &SieveSpec, obj: &Objective, cfg: &TrainConfig, restart: usize) -> Result<Outcome> {
    let mut rng = stream_rng(cfg.seed ^ restart as u64, STREAM_TRAIN, 0);
    let mut net = sieve.zero_network();
    let s = cfg.init_scale;
    if s > 0.0 {
        net.map_params(|_| rng.random_range(-s..=s));
    }
    project_in_place(&mut net, sieve);
    let mut grad = net.zeros_like();
    let mut velocity = net.zeros_like();
    let mut cache = ForwardCache::new(&net);
    let n = obj.xs.len() as f64;
    let mut telemetry = Vec::with_capacity(cfg.epochs);
    let mut epochs_used = cfg.epochs;
    for epoch in 0..cfg.epochs {
        grad.fill(0.0);
        let pass = obj.pass(&net, &mut cache, Some(&mut grad));
        if !pass.loss.is_finite() {
            return Err(Error::TrainingDivergence { restart, epoch });
        }
        telemetry.push(EpochRecord {
            epoch,
            surrogate_risk: pass.loss,
            zero_one_risk: pass.errors as f64 / n,
            weight_magnitude: net.weight_magnitude(),
            connectivity: net.connectivity(),
        });
        if cfg.early_stop && obj.is_classification() && pass.errors == 0 && in_sieve(&net, sieve) {
            epochs_used = epoch;
            break;
        }
        let lr = cfg.step_size;
        match cfg.optimizer {
            Optimizer::Plain => net.zip_params_mut(&grad, |p, g| *p -= lr * g),
            Optimizer::Momentum => {
                let mu = cfg.momentum;
                velocity.zip_params_mut(&grad, |v, g| *v = mu * *v - lr * g);
                net.zip_params_mut(&velocity, |p, v| *p += v);
            }
        }
        if (epoch + 1) % cfg.project_every == 0 {
            project_in_place(&mut net, sieve);
        }
    }
    project_in_place(&mut net, sieve);
    let pass = obj.pass(&net, &mut cache, None);
    if !pass.loss.is_finite() {
        return Err(Error::TrainingDivergence { restart, epoch: epochs_used });
    }
    Ok(Outcome { net, loss: pass.loss, epochs_used, telemetry })
}

/// Runs every restart (in parallel) and keeps the lowest final loss, ties to the
/// lower restart index.
fn best_of_restarts(sieve: &SieveSpec, obj: &Objective, cfg: &TrainConfig) -> Result<(usize, Outcome)> {
    cfg.validate()?;
    if obj.xs.is_empty() {
        return Err(Error::InvalidArgument("training data must be nonempty".into()));
    }
    if obj.xs.iter().any(|x| x.len() != sieve.arch.input_dim()) {
        return Err(Error::Structural("data dimension does not match the sieve input".into()));
    }
    let outcomes: Vec<Result<Outcome>> =
        (0..cfg.restarts).into_par_iter().map(|r| run_restart(sieve, obj, cfg, r)).collect();
    let mut best: Option<(usize, Outcome)> = None;
    for (r, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        if best.as_ref().is_none_or(|(_, b)| o.loss < b.loss) {
            best = Some((r, o));
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Logistic-loss ERM over the sieve by full-batch gradient descent with
/// periodic projection. Returns the best of `cfg.restarts` runs.
pub fn train_erm(sieve: &SieveSpec, data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    let labels = data.labels();
    let obj = Objective { xs: data.samples.iter().map(|s| s.x.as_slice()).collect(), target: Target::Labels(&labels) };
    let (restart, o) = best_of_restarts(sieve, &obj, cfg)?;
    Ok(finish(o.net, data, o.epochs_used, restart, o.telemetry))
}

fn finish(net: Network, data: &Dataset, epochs_used: usize, restart: usize, telemetry: Vec<EpochRecord>) -> TrainResult {
    let mut cache = ForwardCache::new(&net);
    let mut errors = 0;
    let per_point_losses: Vec<f64> = data
        .samples
        .iter()
        .map(|s| {
            let t = net.forward(&s.x, &mut cache);
            errors += zero_one_loss(t, s.y, 0.0) as usize;
            logistic_loss(t, s.y)
        })
        .collect();
    let n = data.len() as f64;
    let final_01_risk = errors as f64 / n;
    TrainResult {
        final_surrogate_risk: per_point_losses.iter().sum::<f64>() / n,
        final_01_risk,
        per_point_losses,
        epochs_used,
        interpolated: errors == 0,
        restart,
        telemetry,
        net,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub net: Network,
    /// Weighted mean squared error at the training nodes.
    pub loss: f64,
    pub restart: usize,
}

/// Squared-loss fit of `ys` at the nodes `xs`. With `weights` (summing to one)
/// the loss is a quadrature approximation of the squared `L^2` error.
pub fn train_regression(
    sieve: &SieveSpec,
    xs: &[Vec<f64>],
    ys: &[f64],
    weights: Option<&[f64]>,
    cfg: &TrainConfig,
) -> Result<RegressionResult> {
    if xs.len() != ys.len() || weights.is_some_and(|w| w.len() != xs.len()) {
        return Err(Error::InvalidArgument("regression inputs have different lengths".into()));
    }
    let obj = Objective { xs: xs.iter().map(Vec::as_slice).collect(), target: Target::Values { ys, weights } };
    let (restart, o) = best_of_restarts(sieve, &obj, cfg)?;
    Ok(RegressionResult { net: o.net, loss: o.loss, restart })
}

/// Step sizes of the refinement menu: `10^(-4 + k/3)` for `k = 0..16`.
pub fn refinement_menu() -> Vec<f64> {
    (0..16).map(|k| 10f64.powf(-4.0 + k as f64 / 3.0)).collect()
}

const MAX_REFINE_SWEEPS: usize = 200;

fn count_errors(net: &Network, data: &Dataset, threshold: f64, cache: &mut ForwardCache) -> usize {
    data.samples.iter().filter(|s| zero_one_loss(net.forward(&s.x, cache), s.y, threshold) == 1).count()
}

/// Coordinate search over bias entries: each sweep tries `+-step` for every step
/// of [`refinement_menu`] on every bias in canonical order and accepts the first
/// move that strictly lowers the training 0-1 error while staying in the sieve.
/// Stops when a full sweep finds no improving move.
pub fn refine_zero_one(net: &Network, sieve: &SieveSpec, data: &Dataset, threshold: f64) -> Result<Network> {
    check_dims(net, data)?;
    let mut best = net.clone();
    let mut cache = ForwardCache::new(net);
    let mut errors = count_errors(&best, data, threshold, &mut cache);
    let menu = refinement_menu();
    let biases = best.bias_indices();
    for _ in 0..MAX_REFINE_SWEEPS {
        if errors == 0 {
            break;
        }
        let mut improved = false;
        'sweep: for &i in &biases {
            for &step in &menu {
                for delta in [step, -step] {
                    let mut cand = best.clone();
                    *cand.params_mut()[i] += delta;
                    if !in_sieve(&cand, sieve) {
                        continue;
                    }
                    let e = count_errors(&cand, data, threshold, &mut cache);
                    if e < errors {
                        best = cand;
                        errors = e;
                        improved = true;
                        break 'sweep;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// Two-phase approximation of 0-1 ERM: logistic [`train_erm`] followed by
/// [`refine_zero_one`]. The 0-1 risk never exceeds that of the logistic phase.
pub fn erm_01_approx(sieve: &SieveSpec, data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    let first = train_erm(sieve, data, cfg)?;
    if first.interpolated {
        return Ok(first);
    }
    let refined = refine_zero_one(&first.net, sieve, data, 0.0)?;
    let out = finish(refined, data, first.epochs_used, first.restart, first.telemetry.clone());
    if out.final_01_risk < first.final_01_risk {
        Ok(out)
    } else {
        Ok(first)
    }
}

/// Largest relative discrepancy between the backpropagated gradient of the
/// network output and central finite differences with step `h`. Returns `None`
/// when some perturbation changes the activation pattern at `x` (a kink is
/// crossed). The relative error is `|g - fd| / max(|g|, |fd|, 1e-2)`.
pub fn gradient_check(net: &Network, x: &[f64], h: f64) -> Option<f64> {
    let mut cache = ForwardCache::new(net);
    let mut grad = net.zeros_like();
    net.forward(x, &mut cache);
    net.backward(1.0, &mut cache, &mut grad);
    let analytic = grad.params();
    let base = net.params();
    let pattern = net.activation_pattern(x);
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut vals = [0.0; 2];
        for (k, sgn) in [1.0, -1.0].into_iter().enumerate() {
            let mut p = base.clone();
            p[i] += sgn * h;
            probe.set_params(&p);
            if probe.activation_pattern(x) != pattern {
                return None;
            }
            vals[k] = probe.eval(x);
        }
        let fd = (vals[0] - vals[1]) / (2.0 * h);
        let g = analytic[i];
        worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-2));
    }
    Some(worst)
}
