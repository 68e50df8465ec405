//! Plug-in classification, classification and excess risk, `L^p` risks against
//! `eta` and the comparison inequality between them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::distlab::{DistributionSpec, Estimate, Method};
use crate::nnet::Network;
use crate::{Error, Result};

/// A real-valued score function on `[0,1]^d`.
pub trait Scorer: Sync {
    fn score(&self, x: &[f64]) -> f64;
}

impl Scorer for Network {
    fn score(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for F {
    fn score(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Shifts a raw score by a constant, e.g. `f + 1/2` to move a raw-score network
/// onto the probability scale.
pub struct Shifted<'a, S: Scorer + ?Sized> {
    pub inner: &'a S,
    pub shift: f64,
}

impl<S: Scorer + ?Sized> Scorer for Shifted<'_, S> {
    fn score(&self, x: &[f64]) -> f64 {
        self.inner.score(x) + self.shift
    }
}

/// `1{f(x) >= threshold}`.
pub fn plugin_classify<S: Scorer + ?Sized>(f: &S, x: &[f64], threshold: f64) -> u8 {
    (f.score(x) >= threshold) as u8
}

fn check_mc_budget(method: Method) -> Result<()> {
    if let Method::MonteCarlo { budget, .. } = method {
        if budget < 1000 {
            return Err(Error::InvalidArgument(format!("Monte Carlo risk needs budget >= 10^3, got {budget}")));
        }
    }
    Ok(())
}

/// `P(p_f(X) != Y)`, integrating `eta 1{p_f = 0} + (1 - eta) 1{p_f = 1}`
/// over the marginal.
pub fn classification_risk<S: Scorer + ?Sized>(
    f: &S,
    threshold: f64,
    spec: &DistributionSpec,
    method: Method,
) -> Result<Estimate> {
    check_mc_budget(method)?;
    spec.expectation(method, false, |x| {
        let eta = spec.eta_unchecked(x);
        if plugin_classify(f, x, threshold) == 1 {
            1.0 - eta
        } else {
            eta
        }
    })
}

/// `E[|2 eta(X) - 1| 1{p_f(X) != g*(X)}]`, equal to the excess risk
/// `L(p_f) - L*`.
pub fn excess_risk_exact<S: Scorer + ?Sized>(
    f: &S,
    threshold: f64,
    spec: &DistributionSpec,
    method: Method,
) -> Result<Estimate> {
    check_mc_budget(method)?;
    spec.expectation(method, false, |x| {
        let eta = spec.eta_unchecked(x);
        let bayes = (eta >= 0.5) as u8;
        if plugin_classify(f, x, threshold) != bayes {
            (2.0 * eta - 1.0).abs()
        } else {
            0.0
        }
    })
}

/// `(E|f(X) - eta(X)|^p)^{1/p}` for `p` in `{1, 2}`; `f` on the probability scale.
pub fn lp_risk<S: Scorer + ?Sized>(f: &S, spec: &DistributionSpec, p: u32, method: Method) -> Result<Estimate> {
    if p != 1 && p != 2 {
        return Err(Error::InvalidArgument(format!("lp_risk supports p in {{1, 2}}, got {p}")));
    }
    check_mc_budget(method)?;
    let inner = spec.expectation(method, false, |x| (f.score(x) - spec.eta_unchecked(x)).abs().powi(p as i32))?;
    let value = inner.value.max(0.0).powf(1.0 / p as f64);
    // Delta method for the p-th root.
    let stderr = if p == 1 {
        inner.stderr
    } else if value > 0.0 {
        inner.stderr / (2.0 * value)
    } else {
        inner.stderr.sqrt()
    };
    Ok(Estimate { value, stderr, n_eval: inner.n_eval })
}

/// Excess risk, Bayes risk, classification risk and `L^1`/`L^2` risks of one
/// classifier. `f` is on the probability scale for the `L^p` risks.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub bayes_risk: f64,
    pub classification_risk: f64,
    pub excess_risk: f64,
    pub lp_risks: BTreeMap<u32, f64>,
    pub stderr: f64,
    pub n_eval: usize,
}

/// Flat CSV form of a [`RiskReport`]:
/// `bayes_risk,classification_risk,excess_risk,l1_risk,l2_risk,stderr,n_eval`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskRow {
    pub bayes_risk: f64,
    pub classification_risk: f64,
    pub excess_risk: f64,
    pub l1_risk: f64,
    pub l2_risk: f64,
    pub stderr: f64,
    pub n_eval: usize,
}

impl RiskReport {
    pub fn row(&self) -> RiskRow {
        RiskRow {
            bayes_risk: self.bayes_risk,
            classification_risk: self.classification_risk,
            excess_risk: self.excess_risk,
            l1_risk: self.lp_risks.get(&1).copied().unwrap_or(f64::NAN),
            l2_risk: self.lp_risks.get(&2).copied().unwrap_or(f64::NAN),
            stderr: self.stderr,
            n_eval: self.n_eval,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(self.row())?;
        w.flush()?;
        Ok(())
    }
}

/// Full risk report. The excess risk is the variance-reduced form
/// [`excess_risk_exact`]; `stderr` is its standard error.
pub fn risk_report<S: Scorer + ?Sized>(
    f: &S,
    threshold: f64,
    spec: &DistributionSpec,
    method: Method,
) -> Result<RiskReport> {
    let bayes = spec.bayes_risk(method)?;
    let class = classification_risk(f, threshold, spec, method)?;
    let excess = excess_risk_exact(f, threshold, spec, method)?;
    let mut lp_risks = BTreeMap::new();
    for p in [1, 2] {
        lp_risks.insert(p, lp_risk(f, spec, p, method)?.value);
    }
    Ok(RiskReport {
        bayes_risk: bayes.value,
        classification_risk: class.value,
        excess_risk: excess.value,
        lp_risks,
        stderr: excess.stderr.max(class.stderr),
        n_eval: class.n_eval,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Excess risk of the plug-in classifier.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `||f - eta||_p^{p(1+alpha)/(p+alpha)}`.
    pub rhs_base: f64,
    pub exponent: f64,
    /// `lhs / rhs_base`; infinite when the guard fires.
    pub ratio: f64,
    /// Set when `rhs_base < 10^-12` but the excess risk is significantly positive.
    pub violation: bool,
}

/// Compares the excess risk of `p_f` with the `L^p` distance between `f` and
/// `eta`, raised to `p(1 + alpha)/(p + alpha)`.
pub fn comparison_check<S: Scorer + ?Sized>(
    f: &S,
    threshold: f64,
    spec: &DistributionSpec,
    alpha: f64,
    p: u32,
    method: Method,
) -> Result<ComparisonReport> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    let excess = excess_risk_exact(f, threshold, spec, method)?;
    let lp = lp_risk(f, spec, p, method)?;
    let pf = p as f64;
    let exponent = pf * (1.0 + alpha) / (pf + alpha);
    let rhs_base = lp.value.powf(exponent);
    let lhs = excess.value;
    let (ratio, violation) = if rhs_base < 1e-12 {
        if lhs > 3.0 * excess.stderr && lhs > 1e-12 {
            (f64::INFINITY, true)
        } else {
            (0.0, false)
        }
    } else {
        (lhs / rhs_base, false)
    };
    Ok(ComparisonReport { lhs, lhs_stderr: excess.stderr, rhs_base, exponent, ratio, violation })
}
