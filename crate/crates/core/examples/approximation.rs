//! Haar analysis, constrained best M-term approximation, the coefficient
//! codec, code length against accuracy, and network upper bounds.

use nnclass::erm::TrainConfig;
use nnclass::kdrate::{
    analyze, best_m_term, decode, encode, fit_gamma, fit_rate_distortion, nn_mweight_error, rd_sweep, DictKind,
    Dictionary, Target,
};

fn main() -> nnclass::Result<()> {
    let f = Target::identity();
    let dict = Dictionary::new(DictKind::Haar1d, 10)?;
    let a = analyze(&f, &dict)?;
    let pts: Vec<(usize, f64)> = [1, 2, 4, 8, 16, 32, 64].iter().map(|&m| Ok((m, best_m_term(&a, m, 2)?.l2_error))).collect::<nnclass::Result<_>>()?;
    for (m, e) in &pts {
        println!("M = {m:>2}: best M-term error {e:.3e}");
    }
    println!("fitted gamma = {:.3}", fit_gamma(&pts)?.gamma_hat);

    let bits = encode(&a, 8, 20, 2)?;
    let dec = decode(&bits, &dict)?;
    println!("\ncodec: M = 8, q = 20 -> {} bits, round-trip error {:.3e}", bits.len(), dec.l2_error(&a));

    let records = rd_sweep(&a, &(1..=256).collect::<Vec<_>>(), &(4..=20).collect::<Vec<_>>(), 1)?;
    let eps = [2f64.powi(-5), 2f64.powi(-6), 2f64.powi(-7), 2f64.powi(-8)];
    println!("code-length exponent: {:.3}", fit_rate_distortion(&records, &eps)?.gamma_hat);

    let cfg = TrainConfig { epochs: 2000, restarts: 4, step_size: 0.1, ..TrainConfig::default() };
    for budget in [6, 12, 24] {
        let nn = nn_mweight_error(&Target::polynomial(vec![0.0, 0.0, 1.0]), budget, 2, &cfg)?;
        println!("x^2 with {budget:>2} network weights: L2 error <= {:.3e}", nn.error_upper_bound);
    }
    Ok(())
}
