//! Constructive interpolating networks (width-n shallow, width-3 deep), the
//! interpolation targets, the minimum-separation statistic and a Lipschitz
//! growth diagnostic.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::distlab::Dataset;
use crate::fit::{fit_power_law, median, PowerLawFit, BOOTSTRAP_RESAMPLES};
use crate::nnet::{Activation, Architecture, Layer, Matrix, Network};
use crate::rng::{stream_rng, STREAM_DIRECTION, STREAM_PROBE, STREAM_SAMPLE};
use crate::{Error, Result};

/// Maximum number of random directions tried before giving up.
pub const DIRECTION_RETRIES: usize = 64;

/// Targets `h_i = -log(2^{1/n} - 1)` for `y_i = 1` and the negation for `y_i = 0`.
/// With `n = 1` the target is 0.
pub fn interp_targets(labels: &[u8]) -> Vec<f64> {
    let n = labels.len().max(1) as f64;
    let c = -(2f64.powf(1.0 / n) - 1.0).ln();
    labels.iter().map(|&y| if y == 1 { c } else { -c }).collect()
}

/// A one-dimensional reduction of an interpolation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPlan {
    pub direction: Vec<f64>,
    /// `(a . x_i, h_i)` sorted by strictly increasing abscissa.
    pub projected_knots: Vec<(f64, f64)>,
    pub targets: Vec<f64>,
}

impl InterpolationPlan {
    /// Draws unit directions until the projections of the points are pairwise
    /// distinct.
    pub fn new(data: &Dataset, targets: &[f64], seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("interpolation needs at least one point".into()));
        }
        if targets.len() != data.len() {
            return Err(Error::InvalidArgument(format!(
                "{} targets for {} points",
                targets.len(),
                data.len()
            )));
        }
        check_distinct(data)?;
        let d = data.dim();
        for attempt in 0..DIRECTION_RETRIES {
            let mut rng = stream_rng(seed, STREAM_DIRECTION, attempt as u64);
            let mut a: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                continue;
            }
            a.iter_mut().for_each(|v| *v /= norm);
            let mut knots: Vec<(f64, f64)> =
                data.samples.iter().zip(targets).map(|(s, h)| (project(&a, &s.x), *h)).collect();
            knots.sort_by(|p, q| p.0.total_cmp(&q.0));
            if knots.windows(2).all(|w| w[0].0 < w[1].0) {
                return Ok(InterpolationPlan { direction: a, projected_knots: knots, targets: targets.to_vec() });
            }
        }
        Err(Error::DegenerateDirection(DIRECTION_RETRIES))
    }

    /// Slopes `s_k` of the interpolating polygon and hinge coefficients
    /// `c_1 = s_1, c_k = s_k - s_{k-1}, c_n = -s_{n-1}`.
    fn hinge_coefficients(&self) -> Vec<f64> {
        let k = &self.projected_knots;
        let n = k.len();
        let slopes: Vec<f64> = k.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        (0..n)
            .map(|i| {
                let cur = if i + 1 < n { slopes[i] } else { 0.0 };
                let prev = if i > 0 { slopes[i - 1] } else { 0.0 };
                cur - prev
            })
            .collect()
    }
}

/// Same summation order as the network's first layer, so data points hit the
/// knots exactly.
fn project(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(p, q)| p * q).sum()
}

fn check_distinct(data: &Dataset) -> Result<()> {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    let xs = &data.samples;
    idx.sort_by(|&i, &j| {
        xs[i].x.iter().zip(&xs[j].x).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    if let Some(w) = idx.windows(2).find(|w| xs[w[0]].x == xs[w[1]].x) {
        return Err(Error::InterpolationInfeasible(format!("points {} and {} coincide", w[0], w[1])));
    }
    Ok(())
}

/// One-hidden-layer ReLU network with exactly `n` units realizing the polygon
/// through `(a . x_i, h_i)`, constant beyond the extreme knots.
pub fn shallow_interpolant(data: &Dataset, targets: &[f64], seed: u64) -> Result<Network> {
    let plan = InterpolationPlan::new(data, targets, seed)?;
    shallow_from_plan(&plan)
}

pub fn shallow_from_plan(plan: &InterpolationPlan) -> Result<Network> {
    let knots = &plan.projected_knots;
    let n = knots.len();
    let d = plan.direction.len();
    let h1 = knots[0].1;
    if n == 1 {
        return Network::shallow(vec![vec![0.0; d]], vec![0.0], vec![0.0], h1);
    }
    let c = plan.hinge_coefficients();
    let first = vec![plan.direction.clone(); n];
    let bias = knots.iter().map(|k| -k.0).collect();
    Network::shallow(first, bias, c, h1)
}

/// Margin added to every accumulator offset so the accumulator channel stays
/// strictly inside the linear part of its ReLU.
const ACC_MARGIN: f64 = 1.0;

/// Width-3 ReLU network with `n - 1` hidden layers realizing the same polygon as
/// [`shallow_interpolant`]. Channels per layer: the shifted projection
/// `v = relu(a . x - u_1)`, the next hinge `relu(v - v_{j+1})`, and an
/// accumulator holding the partial hinge sum plus a positive offset.
pub fn deep_interpolant(data: &Dataset, targets: &[f64], seed: u64) -> Result<Network> {
    let plan = InterpolationPlan::new(data, targets, seed)?;
    deep_from_plan(&plan)
}

pub fn deep_from_plan(plan: &InterpolationPlan) -> Result<Network> {
    let knots = &plan.projected_knots;
    let n = knots.len();
    let a = &plan.direction;
    let d = a.len();
    let h1 = knots[0].1;
    if n == 1 {
        let arch = Architecture::new(vec![d, 1])?;
        let layer = Layer { weights: Matrix::zeros(1, d), bias: vec![h1] };
        return Network::new(arch, vec![layer], vec![], vec![]);
    }
    let u1 = knots[0].0;
    let v: Vec<f64> = knots.iter().map(|k| k.0 - u1).collect();
    let c = plan.hinge_coefficients();
    // Largest value of v over the unit cube.
    let v_max = (a.iter().map(|x| x.max(0.0)).sum::<f64>() - u1).max(*v.last().unwrap());

    // Offsets K_j keep acc_j = P_j(v) + K_j positive, where
    // P_j(v) = sum_{k<=j} c_k relu(v - v_k) (and P_1 = 0). P_j is piecewise linear
    // with P_j(v_k) = h_k - h_1 for k <= j and slope s_j beyond v_j, so its
    // minimum over [0, v_max] sits at a knot or at v_max.
    let mut offsets = vec![0.0; n];
    offsets[1] = ACC_MARGIN;
    let mut lowest: f64 = 0.0;
    for j in 2..n {
        lowest = lowest.min(knots[j - 1].1 - h1);
        let s_j: f64 = c[..j].iter().sum();
        let at_end = knots[j - 1].1 - h1 + s_j * (v_max - v[j - 1]);
        offsets[j] = (-lowest.min(at_end)).max(0.0) + ACC_MARGIN;
    }

    let mut dims = vec![d];
    dims.extend(std::iter::repeat(3).take(n - 1));
    dims.push(1);
    let arch = Architecture::new(dims)?;
    let mut layers = Vec::with_capacity(n);

    // Layer 1: [v, hinge_2, K_1].
    let mut w = Matrix::zeros(3, d);
    for i in 0..d {
        w.set(0, i, a[i]);
        w.set(1, i, a[i]);
    }
    layers.push(Layer { weights: w, bias: vec![-u1, -knots[1].0, offsets[1]] });

    // Layer j = 2..n-1 maps [v, hinge_j, acc_{j-1}] to [v, hinge_{j+1}, acc_j].
    for j in 2..n {
        let mut w = Matrix::zeros(3, 3);
        w.set(0, 0, 1.0);
        w.set(1, 0, 1.0);
        let v_coeff = if j == 2 { c[0] } else { 0.0 };
        w.set(2, 0, v_coeff);
        w.set(2, 1, c[j - 1]);
        w.set(2, 2, 1.0);
        layers.push(Layer { weights: w, bias: vec![0.0, -v[j], offsets[j] - offsets[j - 1]] });
    }

    // Output: h_1 + acc_{n-1} - K_{n-1} + c_n hinge_n (+ c_1 v when no layer absorbed it).
    let v_coeff = if n == 2 { c[0] } else { 0.0 };
    let out = Matrix::from_rows(&[vec![v_coeff, c[n - 1], 1.0]])?;
    layers.push(Layer { weights: out, bias: vec![h1 - offsets[n - 1]] });
    Network::new(arch, layers, vec![Activation::Relu; n - 1], vec![])
}

#[inline]
fn distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn check_separation_input(points: &[Vec<f64>]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("minimum separation needs at least two points".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidArgument("points have different dimensions".into()));
    }
    Ok(())
}

/// `min_{i<j} |x_i - x_j|` by checking every pair.
pub fn min_separation_bruteforce(points: &[Vec<f64>]) -> Result<f64> {
    check_separation_input(points)?;
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(distance(&points[i], &points[j]));
        }
    }
    Ok(best)
}

/// Minimum pairwise distance through uniform grid buckets. Agrees exactly with
/// [`min_separation_bruteforce`] since both take the minimum of the same
/// distance values.
pub fn min_separation(points: &[Vec<f64>]) -> Result<f64> {
    check_separation_input(points)?;
    let n = points.len();
    let d = points[0].len();
    if n <= 32 {
        return min_separation_bruteforce(points);
    }
    let cell = (n as f64).powf(-1.0 / d as f64);
    let found = bucket_pass(points, cell);
    if found <= cell {
        return Ok(found);
    }
    // Every pair closer than `cell` was already examined, so the minimum is at
    // least `cell`; redo the pass with cells of the best distance seen so far.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| points[i][0].total_cmp(&points[j][0]));
    let upper = order.windows(2).map(|w| distance(&points[w[0]], &points[w[1]])).fold(found, f64::min);
    if upper == 0.0 {
        return Ok(0.0);
    }
    Ok(bucket_pass(points, upper))
}

/// Minimum over pairs lying in the same or adjacent cells of side `cell`
/// (infinity when there is none).
fn bucket_pass(points: &[Vec<f64>], cell: f64) -> f64 {
    let d = points[0].len();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut probe = vec![0i64; d];
    for (i, p) in points.iter().enumerate() {
        let base = key(p);
        for off in &offsets {
            for k in 0..d {
                probe[k] = base[k] + off[k];
            }
            if let Some(bucket) = grid.get(&probe) {
                for &j in bucket {
                    if j > i {
                        best = best.min(distance(p, &points[j]));
                    }
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationRecord {
    pub n: usize,
    pub rep: usize,
    pub t_n: f64,
}

/// Outcome of a separation sweep: per-`n` medians of `log T_n` and their fitted
/// slope against `log n` (to be compared with `-2/d`).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationScaling {
    pub dim: usize,
    pub slope: f64,
    pub intercept: f64,
    pub band: (f64, f64),
    /// `(n, median log T_n)`.
    pub medians: Vec<(usize, f64)>,
    pub records: Vec<SeparationRecord>,
}

impl SeparationScaling {
    pub fn predicted_slope(&self) -> f64 {
        -2.0 / self.dim as f64
    }
}

/// Uniform points on `[0,1]^d` for one `(n, rep)` cell.
pub fn uniform_points(d: usize, n: usize, seed: u64, index: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, STREAM_SAMPLE, index);
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

pub fn separation_scaling(d: usize, n_grid: &[usize], reps: usize, seed: u64) -> Result<SeparationScaling> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if reps < 30 {
        return Err(Error::InvalidArgument(format!("separation scaling needs reps >= 30, got {reps}")));
    }
    if n_grid.iter().any(|&n| n < 2) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_grid must be strictly ascending with n >= 2".into()));
    }
    let cells: Vec<(usize, usize)> = n_grid.iter().flat_map(|&n| (0..reps).map(move |r| (n, r))).collect();
    let records: Vec<SeparationRecord> = cells
        .par_iter()
        .map(|&(n, rep)| {
            let pts = uniform_points(d, n, seed, ((n as u64) << 32) | rep as u64);
            let t_n = min_separation(&pts).expect("n >= 2");
            SeparationRecord { n, rep, t_n }
        })
        .collect();
    let mut medians = Vec::new();
    let mut log_sd = Vec::new();
    for &n in n_grid {
        let logs: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.t_n.ln()).collect();
        let med = median(&logs);
        let (_, se) = crate::fit::mean_stderr(&logs);
        medians.push((n, med));
        // Asymptotic standard error of a median relative to a mean.
        log_sd.push(se * 1.2533);
    }
    let xs: Vec<f64> = medians.iter().map(|m| m.0 as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.1.exp()).collect();
    let PowerLawFit { slope, intercept, band } = fit_power_law(&xs, &ys, Some(&log_sd), BOOTSTRAP_RESAMPLES, seed)
        .map_err(|e| Error::Fit(format!("separation fit: {e}")))?;
    Ok(SeparationScaling { dim: d, slope, intercept, band, medians, records })
}

/// Writes `(n, rep, t_n)` rows.
pub fn write_separation_csv(path: &Path, records: &[SeparationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Lower bound on the Lipschitz constant of `net` on `[0,1]^d`: the largest
/// difference quotient over `probes` uniformly random pairs and over every data
/// point paired with its nearest neighbour in `anchors`.
pub fn lipschitz_estimate(net: &Network, probes: usize, seed: u64, anchors: &[Vec<f64>]) -> Result<f64> {
    if probes < 1000 {
        return Err(Error::InvalidArgument(format!("lipschitz_estimate needs probes >= 1000, got {probes}")));
    }
    let d = net.input_dim();
    if anchors.iter().any(|a| a.len() != d) {
        return Err(Error::Structural("anchor dimension does not match the network".into()));
    }
    let mut rng = stream_rng(seed, STREAM_PROBE, 0);
    let quotient = |u: &[f64], v: &[f64]| {
        let dist = distance(u, v);
        if dist > 0.0 {
            (net.eval(u) - net.eval(v)).abs() / dist
        } else {
            0.0
        }
    };
    let mut best = 0.0f64;
    for _ in 0..probes {
        let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        best = best.max(quotient(&u, &v));
    }
    let values: Vec<f64> = anchors.iter().map(|a| net.eval(a)).collect();
    for i in 0..anchors.len() {
        let mut nearest = None;
        let mut nd = f64::INFINITY;
        for j in 0..anchors.len() {
            let dist = distance(&anchors[i], &anchors[j]);
            if j != i && dist > 0.0 && dist < nd {
                nd = dist;
                nearest = Some(j);
            }
        }
        if let Some(j) = nearest {
            best = best.max((values[i] - values[j]).abs() / nd);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzScaling {
    /// `(n, estimate)`.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub band: (f64, f64),
}

/// Lipschitz estimates of shallow interpolants of uniform-marginal "ramp"
/// samples over `n_grid`, with the log-log slope against `n`.
pub fn lipschitz_scaling(d: usize, n_grid: &[usize], probes: usize, seed: u64) -> Result<LipschitzScaling> {
    let spec = crate::distlab::DistributionSpec::ramp(d)?;
    let points = n_grid
        .iter()
        .map(|&n| {
            let data = spec.sample(n, seed ^ n as u64)?;
            let net = shallow_interpolant(&data, &interp_targets(&data.labels()), seed)?;
            Ok((n, lipschitz_estimate(&net, probes, seed, &data.points())?))
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = fit_power_law(&xs, &ys, None, BOOTSTRAP_RESAMPLES, seed)?;
    Ok(LipschitzScaling { points, slope: fit.slope, band: fit.band })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distlab::DistributionSpec;
    use crate::erm::{empirical_risk, logistic_loss, Loss};
    use proptest::prelude::*;

    fn random_data(d: usize, n: usize, seed: u64) -> Dataset {
        DistributionSpec::ramp(d).unwrap().sample(n, seed).unwrap()
    }

    fn max_residual(net: &Network, data: &Dataset, targets: &[f64]) -> f64 {
        data.samples.iter().zip(targets).map(|(s, h)| (net.realize(&s.x).unwrap() - h).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn target_examples() {
        assert_eq!(interp_targets(&[1]), vec![0.0]);
        let t = interp_targets(&[1, 0]);
        assert!((t[0] - 0.881373587019543).abs() < 1e-12);
        assert!((logistic_loss(t[0], 1) - std::f64::consts::LN_2 / 2.0).abs() < 1e-12);
        let t = interp_targets(&[0; 10]);
        assert!((t[0] + 2.6342).abs() < 1e-4);
        assert!((logistic_loss(t[0], 0) - std::f64::consts::LN_2 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_gives_constant() {
        let data = Dataset::from_points(vec![(vec![0.3, 0.4], 1)], "one").unwrap();
        let net = shallow_interpolant(&data, &[2.5], 0).unwrap();
        assert_eq!(net.realize(&[0.9, 0.1]).unwrap(), 2.5);
        let deep = deep_interpolant(&data, &[2.5], 0).unwrap();
        assert_eq!(deep.depth(), 0);
        assert_eq!(deep.realize(&[0.1, 0.1]).unwrap(), 2.5);
    }

    #[test]
    fn two_knot_hand_solution() {
        let data = Dataset::from_points(vec![(vec![0.2], 0), (vec![0.8], 1)], "two").unwrap();
        let net = shallow_interpolant(&data, &[-1.0, 1.0], 5).unwrap();
        assert!((net.realize(&[0.2]).unwrap() + 1.0).abs() < 1e-12);
        assert!((net.realize(&[0.8]).unwrap() - 1.0).abs() < 1e-12);
        assert!(net.realize(&[0.5]).unwrap().abs() < 1e-12);
        assert!((net.realize(&[0.35]).unwrap() + 0.5).abs() < 1e-12);
        assert!((net.realize(&[0.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((net.realize(&[1.0]).unwrap() - 1.0).abs() < 1e-12);
        let deep = deep_interpolant(&data, &[-1.0, 1.0], 5).unwrap();
        assert_eq!(deep.arch().dims(), &[1, 3, 1]);
        for x in [0.2, 0.8, 0.5, 0.0, 1.0] {
            assert!((deep.realize(&[x]).unwrap() - net.realize(&[x]).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn shallow_interpolates_50_points_in_3d() {
        let data = random_data(3, 50, 11);
        let targets = interp_targets(&data.labels());
        let net = shallow_interpolant(&data, &targets, 2).unwrap();
        assert_eq!(net.arch().dims(), &[3, 50, 1]);
        assert!(max_residual(&net, &data, &targets) <= 1e-9);
    }

    #[test]
    fn deep_interpolates_20_points_in_2d() {
        let data = random_data(2, 20, 12);
        let targets = interp_targets(&data.labels());
        let net = deep_interpolant(&data, &targets, 3).unwrap();
        assert_eq!(net.depth(), 19);
        assert_eq!(net.width(), 3);
        assert!(max_residual(&net, &data, &targets) <= 1e-8);
    }

    #[test]
    fn deep_matches_shallow_off_the_data() {
        let data = random_data(2, 30, 4);
        let targets = interp_targets(&data.labels());
        let s = shallow_interpolant(&data, &targets, 8).unwrap();
        let d = deep_interpolant(&data, &targets, 8).unwrap();
        for k in 0..200 {
            let x = [(k as f64 * 0.618).fract(), (k as f64 * 0.414).fract()];
            let (a, b) = (s.realize(&x).unwrap(), d.realize(&x).unwrap());
            assert!((a - b).abs() <= 1e-7 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn duplicates_are_infeasible() {
        let data = Dataset::from_points(vec![(vec![0.5, 0.5], 0), (vec![0.1, 0.2], 1), (vec![0.5, 0.5], 1)], "dup").unwrap();
        assert!(matches!(shallow_interpolant(&data, &[0.0, 0.0, 0.0], 0), Err(Error::InterpolationInfeasible(_))));
        assert!(matches!(deep_interpolant(&data, &[0.0, 0.0, 0.0], 0), Err(Error::InterpolationInfeasible(_))));
    }

    #[test]
    fn interpolant_loss_bound() {
        for (d, n) in [(1, 100), (2, 64), (3, 40)] {
            let data = random_data(d, n, 5);
            let t = interp_targets(&data.labels());
            for net in [shallow_interpolant(&data, &t, 1).unwrap(), deep_interpolant(&data, &t, 1).unwrap()] {
                let risk = empirical_risk(&net, &data, Loss::Logistic, 0.0).unwrap();
                assert!(risk <= std::f64::consts::LN_2 / n as f64 + 1e-9);
                assert_eq!(empirical_risk(&net, &data, Loss::ZeroOne, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn separation_examples() {
        let pts = vec![vec![0.1, 0.1], vec![0.1, 0.4]];
        assert!((min_separation(&pts).unwrap() - 0.3).abs() < 1e-15);
        let grid: Vec<Vec<f64>> = (0..100).map(|k| vec![k as f64 * 0.25]).collect();
        assert_eq!(min_separation(&grid).unwrap(), 0.25);
        assert!(min_separation(&[vec![0.5]]).is_err());
        let mut dup = uniform_points(2, 50, 1, 0);
        dup.push(dup[7].clone());
        assert_eq!(min_separation(&dup).unwrap(), 0.0);
    }

    #[test]
    fn bucket_path_equals_reference() {
        for inst in 0..100u64 {
            let d = 1 + (inst % 4) as usize;
            let n = 33 + (inst as usize * 37) % 300;
            let pts = uniform_points(d, n, 99, inst);
            assert_eq!(min_separation(&pts).unwrap(), min_separation_bruteforce(&pts).unwrap());
        }
    }

    #[test]
    fn two_point_mean_is_one_third() {
        let reps = 100_000u64;
        let total: f64 = (0..reps).map(|r| min_separation(&uniform_points(1, 2, 3, r)).unwrap()).sum();
        assert!((total / reps as f64 - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn separation_fit_errors() {
        assert!(separation_scaling(1, &[16], 30, 0).is_err());
        assert!(separation_scaling(1, &[16, 32], 10, 0).is_err());
        assert!(separation_scaling(1, &[32, 16], 30, 0).is_err());
    }

    #[test]
    fn separation_slope_d1() {
        let s = separation_scaling(1, &[16, 64, 256, 1024], 100, 7).unwrap();
        assert!((s.slope + 2.0).abs() < 0.5, "slope {}", s.slope);
        assert!(s.band.0 <= s.slope && s.slope <= s.band.1);
        assert_eq!(s.records.len(), 400);
    }

    #[test]
    fn lipschitz_examples() {
        let constant = Network::shallow(vec![vec![0.0]], vec![0.0], vec![0.0], 3.0).unwrap();
        assert_eq!(lipschitz_estimate(&constant, 1000, 0, &[]).unwrap(), 0.0);
        let relu = Network::shallow(vec![vec![1.0]], vec![0.0], vec![1.0], 0.0).unwrap();
        assert!((lipschitz_estimate(&relu, 1000, 0, &[]).unwrap() - 1.0).abs() < 1e-9);
        assert!(lipschitz_estimate(&relu, 10, 0, &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn interpolants_match_signs_and_each_other(seed in 0u64..10_000, n in 2usize..40, d in 1usize..4) {
            let data = random_data(d, n, seed);
            let t = interp_targets(&data.labels());
            let s = shallow_interpolant(&data, &t, seed).unwrap();
            let dp = deep_interpolant(&data, &t, seed).unwrap();
            for (x, y) in data.samples.iter().map(|s| (&s.x, s.y)) {
                let a = s.realize(x).unwrap();
                let b = dp.realize(x).unwrap();
                prop_assert_eq!(a >= 0.0, y == 1);
                prop_assert!((a - b).abs() <= 1e-8);
            }
        }
    }
}
