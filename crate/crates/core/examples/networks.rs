//! Networks as values: realization, complexity measures, sieve projection and
//! the text format.

use nnclass::nnet::{in_sieve, project_to_sieve, Activation, Architecture, Network, SieveSpec};

fn main() -> nnclass::Result<()> {
    // |x| = relu(x) + relu(-x)
    let abs = Network::shallow(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0], vec![1.0, 1.0], 0.0)?;
    println!("R(abs)(-0.3) = {}", abs.eval(&[-0.3]));
    println!(
        "connectivity {}, width {}, depth {}, weight magnitude {}",
        abs.connectivity(),
        abs.width(),
        abs.depth(),
        abs.weight_magnitude()
    );

    let arch = Architecture::new(vec![2, 3, 3, 1])?;
    let mut net = Network::zeros_with(arch.clone(), vec![Activation::Relu, Activation::TRIANGLE], &[(0, 3)])?;
    let mut k = 0.0f64;
    net.map_params(|_| {
        k += 0.37;
        3.0 * k.sin()
    });
    println!("\nmixed-activation net with a skip edge:\n{}", net.to_text());

    let sieve = SieveSpec::new(arch, 8, 1.5, None)?.with_activations(net.activations.clone())?.with_skips(vec![(0, 3)])?;
    let projected = project_to_sieve(&net, &sieve)?;
    println!(
        "before: in sieve {} (M = {}); after projection: in sieve {} (M = {}, B = {:.2})",
        in_sieve(&net, &sieve),
        net.connectivity(),
        in_sieve(&projected, &sieve),
        projected.connectivity(),
        projected.weight_magnitude()
    );

    let back = Network::from_text(&projected.to_text())?;
    assert_eq!(back, projected);
    Ok(())
}
