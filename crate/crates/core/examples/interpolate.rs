//! Explicit interpolating networks: one wide hidden layer or a width-3 deep
//! chain, both reaching the logistic loss log(2)/n on every training point.

use nnclass::construct::{deep_interpolant, interp_targets, lipschitz_estimate, shallow_interpolant};
use nnclass::distlab::DistributionSpec;
use nnclass::erm::{empirical_risk, Loss};

fn main() -> nnclass::Result<()> {
    let spec = DistributionSpec::ramp(2)?;
    for n in [10, 100, 500] {
        let data = spec.sample(n, n as u64)?;
        let targets = interp_targets(&data.labels());
        let shallow = shallow_interpolant(&data, &targets, 1)?;
        let deep = deep_interpolant(&data, &targets, 1)?;
        println!(
            "n = {n:>3}: log2/n = {:.3e}; shallow loss {:.3e} (width {}), deep loss {:.3e} (depth {}), train 0-1 {} / {}",
            std::f64::consts::LN_2 / n as f64,
            empirical_risk(&shallow, &data, Loss::Logistic, 0.0)?,
            shallow.width(),
            empirical_risk(&deep, &data, Loss::Logistic, 0.0)?,
            deep.depth(),
            empirical_risk(&shallow, &data, Loss::ZeroOne, 0.0)?,
            empirical_risk(&deep, &data, Loss::ZeroOne, 0.0)?,
        );
        println!("          Lipschitz estimate of the shallow interpolant: {:.1}", lipschitz_estimate(&shallow, 2000, 5, &data.points())?);
    }
    Ok(())
}
