//! A small excess-risk rate experiment with theorem-rule sieves, persisted as
//! CSV.

use nnclass::bench::{
    holder_mstar, run_rate_experiment, write_experiment, ExperimentConfig, ExperimentSieve, TheoryParams, Variant,
};
use nnclass::distlab::DistributionSpec;
use nnclass::erm::TrainConfig;

fn main() -> nnclass::Result<()> {
    let spec = DistributionSpec::ramp(1)?;
    let m_star = holder_mstar(2.0, spec.alpha, 1)?;
    let cfg = ExperimentConfig {
        spec,
        n_grid: vec![64, 128, 256, 512, 1024],
        seeds: (0..6).collect(),
        sieve_mode: ExperimentSieve::TheoremRule,
        train: TrainConfig { epochs: 300, restarts: 2, step_size: 0.1, ..TrainConfig::default() },
        eval_budget: 0,
        threshold: 0.0,
        theory: Some(TheoryParams { gamma_star: 2.0, m_star, variant: Variant::Rate1, constant: None, pi_degree: 2 }),
        estimator: Default::default(),
    };
    let result = run_rate_experiment(&cfg)?;
    for p in &result.fit.points {
        let sieve = cfg.sieve(p.n)?;
        println!("n = {:>5}  width {:>3}  mean excess {:.3e} +- {:.1e}", p.n, sieve.arch.width(), p.mean_excess, p.stderr);
    }
    println!(
        "fitted m = {:.3} (band {:.3}..{:.3}); declared m* = {m_star}",
        result.fit.m_hat, result.fit.band.0, result.fit.band.1
    );
    let dir = std::env::temp_dir().join("nnclass-rates");
    write_experiment(&dir, &cfg, &result)?;
    println!("results in {}", dir.display());
    Ok(())
}
