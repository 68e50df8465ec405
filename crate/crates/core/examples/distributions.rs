//! Synthetic distributions: regression functions, sampling, Bayes risk and
//! the Tsybakov margin condition.

use nnclass::distlab::{DistributionSpec, Method};

fn main() -> nnclass::Result<()> {
    let ramp = DistributionSpec::ramp(1)?;
    let margin = DistributionSpec::margin(1, 2.0)?;
    println!("eta_ramp(0.25) = {}", ramp.eta_eval(&[0.25])?);
    println!("eta_margin(0.75) = {:.5}", margin.eta_eval(&[0.75])?);

    let data = ramp.sample(10, 42)?;
    for s in &data.samples[..3] {
        println!("x = {:.4}, y = {}", s.x[0], s.y);
    }

    let quad = ramp.bayes_risk(Method::Quadrature)?;
    let mc = ramp.bayes_risk(Method::MonteCarlo { budget: 100_000, seed: 1 })?;
    println!("L* (quadrature) = {:.8}", quad.value);
    println!("L* (Monte Carlo) = {:.5} +- {:.5}", mc.value, mc.stderr);

    let t_grid: Vec<f64> = (0..=10).map(|k| 0.005 * 10f64.powf(k as f64 / 10.0)).collect();
    let report = margin.verify_tsybakov(&t_grid)?;
    println!("Tsybakov bound holds: {}, fitted alpha = {:.3}", report.holds, report.fitted_alpha);

    println!("\nspec file:\n{}", margin.to_toml_string());
    Ok(())
}
