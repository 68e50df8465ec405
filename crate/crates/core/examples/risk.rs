//! Plug-in risks of a classifier: Bayes, classification and excess risk, L^p
//! risks, and the comparison between excess risk and L^p distance.

use nnclass::distlab::{DistributionSpec, Method};
use nnclass::risk::{comparison_check, risk_report};

fn main() -> nnclass::Result<()> {
    let spec = DistributionSpec::margin(1, 1.0)?;
    let candidates: Vec<(&str, Box<dyn Fn(&[f64]) -> f64 + Sync>)> = vec![
        ("eta", Box::new(|x: &[f64]| spec.eta_unchecked(x))),
        ("1 - eta", Box::new(|x: &[f64]| 1.0 - spec.eta_unchecked(x))),
        ("shifted eta", Box::new(|x: &[f64]| (spec.eta_unchecked(x) + 0.05).min(1.0))),
    ];
    for (name, f) in &candidates {
        let r = risk_report(f, 0.5, &spec, Method::Quadrature)?;
        let c = comparison_check(f, 0.5, &spec, spec.alpha, 2, Method::Quadrature)?;
        println!(
            "{name:<12} L* {:.4}  L {:.4}  excess {:.5}  L1 {:.4}  L2 {:.4}  excess / ||f-eta||^{:.3} = {:.3}",
            r.bayes_risk, r.classification_risk, r.excess_risk, r.lp_risks[&1], r.lp_risks[&2], c.exponent, c.ratio
        );
    }
    let mc = risk_report(&candidates[2].1, 0.5, &spec, Method::MonteCarlo { budget: 200_000, seed: 4 })?;
    println!("Monte Carlo excess for shifted eta: {:.5} +- {:.5}", mc.excess_risk, mc.stderr);
    Ok(())
}
