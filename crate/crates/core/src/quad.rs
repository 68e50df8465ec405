//! Tensor-product composite Simpson quadrature on the unit cube.

use crate::{Error, Result};

/// Nodes per axis used by the deterministic oracles: `2^12 + 1` in one
/// dimension, coarser in two and three so that a tensor grid stays tractable.
pub fn nodes_per_axis(d: usize) -> Result<usize> {
    match d {
        1 => Ok((1 << 12) + 1),
        2 => Ok((1 << 10) + 1),
        3 => Ok((1 << 7) + 1),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Composite Simpson nodes and weights on `[a, b]`; `m` must be odd and >= 3.
pub fn simpson_rule(a: f64, b: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 3 && m % 2 == 1, "simpson needs an odd node count >= 3");
    let h = (b - a) / (m - 1) as f64;
    let nodes = (0..m).map(|i| if i == m - 1 { b } else { a + h * i as f64 }).collect();
    let weights = (0..m)
        .map(|i| {
            let c = if i == 0 || i == m - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    (nodes, weights)
}

pub fn simpson_1d(a: f64, b: f64, m: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = simpson_rule(a, b, m);
    nodes.iter().zip(&weights).map(|(x, w)| w * f(*x)).sum()
}

/// Integrates `f` over `[0,1]^d` with `m` Simpson nodes per axis. The integrand
/// receives the full point; summation order is fixed (last axis fastest).
pub fn integrate_cube(d: usize, m: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert!(d >= 1);
    let (nodes, weights) = simpson_rule(0.0, 1.0, m);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            x[k] = nodes[idx[k]];
            w *= weights[idx[k]];
        }
        total += w * f(&x);
        let mut k = d;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(a: f64, b: f64, tol: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson_1d(0.0, 1.0, 5, |x| x * x * x - x + 2.0);
        assert!((v - (0.25 - 0.5 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn cube_volume_and_moments() {
        for d in 1..=3 {
            let v = integrate_cube(d, 9, |_| 1.0);
            assert!((v - 1.0).abs() < 1e-13);
            let m = integrate_cube(d, 9, |x| x.iter().sum());
            assert!((m - d as f64 / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_sqrt() {
        let v = adaptive_simpson(0.0, 1.0, 1e-12, &|x: f64| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(nodes_per_axis(4), Err(Error::UnsupportedDimension(4))));
    }
}
