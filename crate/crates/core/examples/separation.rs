//! Minimum pairwise separation of uniform samples and its n^(-2/d) scaling.

use nnclass::construct::{min_separation, min_separation_bruteforce, separation_scaling, uniform_points};

fn main() -> nnclass::Result<()> {
    let pts = uniform_points(2, 2000, 3, 0);
    println!("T_2000 in 2-d: grid {:.3e}, brute force {:.3e}", min_separation(&pts)?, min_separation_bruteforce(&pts)?);
    let n_grid: Vec<usize> = (4..=11).map(|k| 1 << k).collect();
    for d in [1, 2, 3] {
        let s = separation_scaling(d, &n_grid, 60, 11)?;
        println!("d = {d}: slope {:.3} (band {:.3}..{:.3}), predicted {:.3}", s.slope, s.band.0, s.band.1, s.predicted_slope());
    }
    Ok(())
}
