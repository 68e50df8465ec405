//! Logistic empirical risk minimization over the consistency sieve, the 0-1
//! refinement, and training telemetry.

use nnclass::distlab::DistributionSpec;
use nnclass::erm::{erm_01_approx, sieve_schedule, train_erm, write_telemetry, SieveMode, TrainConfig};
use nnclass::nnet::Activation;

fn main() -> nnclass::Result<()> {
    let spec = DistributionSpec::ramp(2)?;
    let data = spec.sample(64, 3)?;
    let relu = sieve_schedule(data.len(), SieveMode::Wide, 2)?;
    let periodic = relu.clone().with_activations(vec![Activation::TRIANGLE])?;
    println!("sieve: arch {:?}, M <= {}, B <= {:.0}", relu.arch.dims(), relu.conn_budget, relu.weight_bound);

    let cfg = TrainConfig { epochs: 2000, restarts: 2, step_size: 0.05, init_scale: 10.0, seed: 9, ..TrainConfig::default() };
    for (name, sieve) in [("relu", &relu), ("periodic", &periodic)] {
        let res = train_erm(sieve, &data, &cfg)?;
        println!(
            "{name:>8}: surrogate {:.4}, train 0-1 {:.4}, interpolated {}, restart {}",
            res.final_surrogate_risk, res.final_01_risk, res.interpolated, res.restart
        );
        if name == "relu" {
            let refined = erm_01_approx(sieve, &data, &cfg)?;
            println!("          after 0-1 local search: train 0-1 {:.4}", refined.final_01_risk);
            let path = std::env::temp_dir().join("nnclass-telemetry.csv");
            write_telemetry(&path, &res.telemetry)?;
            println!("          telemetry: {} rows -> {}", res.telemetry.len(), path.display());
        }
    }
    Ok(())
}
