//! Log-log least squares with bootstrap bands, shared by every exponent fit in
//! the crate (excess-risk decay, Haar M-term decay, separation scaling).

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{stream_rng, STREAM_BOOTSTRAP};
use crate::{Error, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares of `ys` on `xs`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("abscissa/ordinate length mismatch".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("all abscissas coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx })
}

/// Linear-interpolated percentile of an already sorted slice, `q` in [0,1].
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, 0.5)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// A line fit in log-log coordinates together with a 95% bootstrap band on the slope.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub band: (f64, f64),
}

/// Fits `log y = a + b log x` and bootstraps the slope.
///
/// Each bootstrap replicate perturbs the fitted line by resampled (leverage
/// inflated) residuals and, when `log_sd` is given, by a Gaussian draw with the
/// per-point standard deviation of `log y`. The returned band always contains the
/// point estimate.
pub fn fit_power_law(
    xs: &[f64],
    ys: &[f64],
    log_sd: Option<&[f64]>,
    resamples: usize,
    seed: u64,
) -> Result<PowerLawFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = least_squares(&lx, &ly)?;
    let band = bootstrap_slope_band(&lx, &ly, fit, log_sd, resamples, seed);
    Ok(PowerLawFit { slope: fit.slope, intercept: fit.intercept, band })
}

fn bootstrap_slope_band(
    lx: &[f64],
    ly: &[f64],
    fit: LineFit,
    log_sd: Option<&[f64]>,
    resamples: usize,
    seed: u64,
) -> (f64, f64) {
    let n = lx.len();
    let residuals: Vec<f64> = lx.iter().zip(ly).map(|(x, y)| y - fit.predict(*x)).collect();
    let inflate = if n > 2 { (n as f64 / (n - 2) as f64).sqrt() } else { 1.0 };
    let mut rng = stream_rng(seed, STREAM_BOOTSTRAP, n as u64);
    let mut slopes = Vec::with_capacity(resamples);
    let mut ys = vec![0.0; n];
    for _ in 0..resamples {
        for i in 0..n {
            let r = residuals[rng.random_range(0..n)] * inflate;
            let noise = match log_sd {
                Some(sd) => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sd[i] * z
                }
                None => 0.0,
            };
            ys[i] = fit.predict(lx[i]) + r + noise;
        }
        if let Ok(f) = least_squares(lx, &ys) {
            slopes.push(f.slope);
        }
    }
    if slopes.is_empty() {
        return (fit.slope, fit.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let lo = percentile_sorted(&slopes, 0.025).min(fit.slope);
    let hi = percentile_sorted(&slopes, 0.975).max(fit.slope);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = least_squares(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_power_law_has_degenerate_band() {
        let xs: Vec<f64> = (1..=8).map(|k| (1u64 << k) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-2.5)).collect();
        let f = fit_power_law(&xs, &ys, None, 200, 1).unwrap();
        assert!((f.slope + 2.5).abs() < 1e-9);
        assert!(f.band.0 <= f.slope && f.slope <= f.band.1);
        assert!(f.band.1 - f.band.0 < 1e-9);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 0.0], None, 10, 0).is_err());
        assert!(least_squares(&[1.0], &[1.0]).is_err());
        assert!(least_squares(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn median_and_stderr() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, se) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-12);
    }
}
