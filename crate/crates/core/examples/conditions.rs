//! Network-size rules and the conditions of the two rate theorems, with the
//! Hölder and Besov specializations.

use nnclass::bench::{
    besov_gammastar, besov_mstar, besov_rate2_displayed, condition_check, default_size_constant, holder_condition,
    holder_mstar, holder_rate1_displayed, holder_rate2_displayed, theorem_size_rule, Variant,
};

fn main() -> nnclass::Result<()> {
    let c = default_size_constant(1);
    for n in [128, 1024, 8192] {
        let r1 = theorem_size_rule(n, 0.0, 2.0, 0.4, Variant::Rate1, c)?;
        let r2 = theorem_size_rule(n, 0.0, 2.0, 0.4, Variant::Rate2, c)?;
        println!("n = {n:>5}: rate-1 budget {:>4}, rate-2 budget {:>5} (depth cap {:?})", r1.conn_budget, r2.conn_budget, r2.depth_cap);
    }

    println!("\nHölder, d = 1:");
    for (beta, alpha) in [(2.0, 0.0), (2.0, 1.0), (5.0, 0.5)] {
        println!(
            "  beta {beta}, alpha {alpha}: m* = {:.4}; displayed rate-1 {}, rate-2 {}; generic rate-1 {}, rate-2 {}",
            holder_mstar(beta, alpha, 1)?,
            holder_rate1_displayed(beta, alpha),
            holder_rate2_displayed(beta, alpha),
            holder_condition(beta, alpha, 1, Variant::Rate1)?,
            holder_condition(beta, alpha, 1, Variant::Rate2)?,
        );
    }

    println!("\nBesov, alpha = 0:");
    for (m, d) in [(1.0, 2), (2.0, 2), (3.0, 2)] {
        let (ms, gs) = (besov_mstar(m, d)?, besov_gammastar(m, d)?);
        println!(
            "  m {m}, d {d}: m* = {ms:.4}, gamma* = {gs:.4}, rate-2 condition {} (m >= d: {})",
            condition_check(0.0, gs, ms, Variant::Rate2),
            besov_rate2_displayed(m, d)
        );
    }
    Ok(())
}
