//! Haar dictionaries, effective best M-term approximation under polynomial
//! index and coefficient constraints, a quantized coefficient codec and an
//! M-weight network approximation bound.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::erm::{train_regression, TrainConfig};
use crate::fit::{fit_power_law, BOOTSTRAP_RESAMPLES};
use crate::nnet::{project_to_sieve, Architecture, Network, SieveSpec};
use crate::quad::{adaptive_simpson, simpson_1d, simpson_rule};
use crate::{Error, Result};

pub const MAX_LEVEL_1D: u32 = 14;
pub const MAX_LEVEL_2D: u32 = 7;
const CELL_TOL: f64 = 1e-10;
const CELL_NODES_2D: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictKind {
    Haar1d,
    HaarTensor2d,
}

/// Orientation of a tensor Haar element: which factor is the wavelet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `psi(x) phi(y)`
    Horizontal,
    /// `phi(x) psi(y)`
    Vertical,
    /// `psi(x) psi(y)`
    Diagonal,
}

/// A dictionary element. Indices are 1-based and ordered coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Scaling,
    Wavelet { level: u32, shift: usize },
    Tensor { level: u32, shift: (usize, usize), orientation: Orientation },
}

/// Haar system truncated at level `J`: `phi` plus `psi_{j,k}` for `j < J` in one
/// dimension (size `2^J`), or the tensor system with three orientations per
/// level in two dimensions (size `4^J`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dictionary {
    pub kind: DictKind,
    pub max_level: u32,
}

impl Dictionary {
    pub fn new(kind: DictKind, max_level: u32) -> Result<Self> {
        let cap = match kind {
            DictKind::Haar1d => MAX_LEVEL_1D,
            DictKind::HaarTensor2d => MAX_LEVEL_2D,
        };
        if max_level > cap {
            return Err(Error::InvalidArgument(format!("level overflow: J = {max_level} exceeds {cap}")));
        }
        Ok(Dictionary { kind, max_level })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DictKind::Haar1d => 1,
            DictKind::HaarTensor2d => 2,
        }
    }

    pub fn size(&self) -> usize {
        1usize << (self.dim() as u32 * self.max_level)
    }

    /// The element with 1-based index `i`.
    pub fn element(&self, i: usize) -> Result<Element> {
        if i == 0 || i > self.size() {
            return Err(Error::InvalidArgument(format!("index {i} outside 1..={}", self.size())));
        }
        if i == 1 {
            return Ok(Element::Scaling);
        }
        let z = i - 1;
        match self.kind {
            DictKind::Haar1d => {
                let level = usize::BITS - 1 - z.leading_zeros();
                Ok(Element::Wavelet { level, shift: z - (1 << level) })
            }
            DictKind::HaarTensor2d => {
                let level = (usize::BITS - 1 - z.leading_zeros()) / 2;
                let side = 1usize << level;
                let off = z - side * side;
                let orientation = match off / (side * side) {
                    0 => Orientation::Horizontal,
                    1 => Orientation::Vertical,
                    _ => Orientation::Diagonal,
                };
                let rest = off % (side * side);
                Ok(Element::Tensor { level, shift: (rest % side, rest / side), orientation })
            }
        }
    }

    pub fn index_of(&self, e: Element) -> usize {
        match e {
            Element::Scaling => 1,
            Element::Wavelet { level, shift } => (1 << level) + shift + 1,
            Element::Tensor { level, shift, orientation } => {
                let side = 1usize << level;
                let o = match orientation {
                    Orientation::Horizontal => 0,
                    Orientation::Vertical => 1,
                    Orientation::Diagonal => 2,
                };
                side * side + o * side * side + shift.1 * side + shift.0 + 1
            }
        }
    }

    /// Value of element `i` at `x` (half-open dyadic cells, `x = 1` folded into the last cell).
    pub fn eval(&self, i: usize, x: &[f64]) -> Result<f64> {
        Ok(match self.element(i)? {
            Element::Scaling => 1.0,
            Element::Wavelet { level, shift } => haar_psi(level, shift, x[0]),
            Element::Tensor { level, shift, orientation } => {
                let (px, py) = (haar_psi(level, shift.0, x[0]), haar_psi(level, shift.1, x[1]));
                let (fx, fy) = (haar_phi(level, shift.0, x[0]), haar_phi(level, shift.1, x[1]));
                match orientation {
                    Orientation::Horizontal => px * fy,
                    Orientation::Vertical => fx * py,
                    Orientation::Diagonal => px * py,
                }
            }
        })
    }
}

fn dyadic_position(level: u32, x: f64) -> f64 {
    let s = (1u64 << level) as f64;
    (x * s).min(s - f64::EPSILON * s)
}

/// `2^{j/2} 1_{[k 2^-j, (k+1) 2^-j)}(x)`.
fn haar_phi(level: u32, shift: usize, x: f64) -> f64 {
    let t = dyadic_position(level, x) - shift as f64;
    if (0.0..1.0).contains(&t) {
        2f64.powf(level as f64 / 2.0)
    } else {
        0.0
    }
}

/// `2^{j/2} psi(2^j x - k)` with `psi = 1` on `[0, 1/2)` and `-1` on `[1/2, 1)`.
fn haar_psi(level: u32, shift: usize, x: f64) -> f64 {
    let t = dyadic_position(level, x) - shift as f64;
    let a = 2f64.powf(level as f64 / 2.0);
    if (0.0..0.5).contains(&t) {
        a
    } else if (0.5..1.0).contains(&t) {
        -a
    } else {
        0.0
    }
}

/// Polynomial `sum_m coeffs[m] x^m` on `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
}

/// A function on `[0,1]^d` to be analyzed.
#[derive(Clone)]
pub enum Target {
    /// One-dimensional piecewise polynomial; integrals are exact. Points not
    /// covered by a piece evaluate to 0.
    Piecewise(Vec<Piece>),
    /// Two-dimensional piecewise constant on the dyadic grid of side `2^level`,
    /// `values[iy * side + ix]`.
    Grid2d { level: u32, values: Vec<f64> },
    /// Anything else; integrals use adaptive quadrature.
    Function { dim: usize, f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> },
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            Target::Grid2d { level, values } => {
                f.debug_struct("Grid2d").field("level", level).field("values", values).finish()
            }
            Target::Function { dim, .. } => f.debug_struct("Function").field("dim", dim).finish_non_exhaustive(),
        }
    }
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(m, cm)| {
            let p = m as i32 + 1;
            cm * (b.powi(p) - a.powi(p)) / p as f64
        })
        .sum()
}

fn poly_square(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; (2 * c.len()).saturating_sub(1).max(1)];
    for (i, a) in c.iter().enumerate() {
        for (j, b) in c.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

impl Target {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Target::Piecewise(vec![Piece { start: 0.0, end: 1.0, coeffs }])
    }

    /// `f(x) = x`.
    pub fn identity() -> Self {
        Target::polynomial(vec![0.0, 1.0])
    }

    pub fn zero(dim: usize) -> Self {
        match dim {
            1 => Target::polynomial(vec![0.0]),
            _ => Target::Grid2d { level: 0, values: vec![0.0] },
        }
    }

    /// Piecewise constant in one dimension with `values.len()` equal dyadic cells.
    pub fn steps(values: Vec<f64>) -> Self {
        let w = 1.0 / values.len() as f64;
        Target::Piecewise(
            values
                .into_iter()
                .enumerate()
                .map(|(k, v)| Piece { start: k as f64 * w, end: (k + 1) as f64 * w, coeffs: vec![v] })
                .collect(),
        )
    }

    pub fn function(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Target::Function { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Target::Piecewise(_) => 1,
            Target::Grid2d { .. } => 2,
            Target::Function { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Target::Piecewise(pieces) => {
                let t = x[0];
                let last = pieces.iter().map(|p| p.end).fold(f64::MIN, f64::max);
                pieces
                    .iter()
                    .find(|p| t >= p.start && (t < p.end || (t == last && p.end == last)))
                    .map_or(0.0, |p| poly_eval(&p.coeffs, t))
            }
            Target::Grid2d { level, values } => {
                let side = 1usize << level;
                let ix = ((x[0] * side as f64) as usize).min(side - 1);
                let iy = ((x[1] * side as f64) as usize).min(side - 1);
                values[iy * side + ix]
            }
            Target::Function { f, .. } => f(x),
        }
    }

    /// Integrals of `f` over the cells of the dyadic grid of side `2^level`
    /// (row-major, `y` outer in two dimensions).
    fn cell_integrals(&self, level: u32) -> Result<Vec<f64>> {
        let side = 1usize << level;
        let w = 1.0 / side as f64;
        match self {
            Target::Piecewise(pieces) => Ok((0..side)
                .map(|k| {
                    let (a, b) = (k as f64 * w, (k + 1) as f64 * w);
                    pieces
                        .iter()
                        .map(|p| {
                            let (lo, hi) = (a.max(p.start), b.min(p.end));
                            if hi > lo {
                                poly_integral(&p.coeffs, lo, hi)
                            } else {
                                0.0
                            }
                        })
                        .sum()
                })
                .collect()),
            Target::Grid2d { level: gl, values } => {
                let gside = 1usize << gl;
                if values.len() != gside * gside {
                    return Err(Error::InvalidArgument("grid target has the wrong number of values".into()));
                }
                let area = w * w;
                Ok((0..side * side)
                    .map(|c| {
                        let (ix, iy) = (c % side, c / side);
                        if level >= *gl {
                            let shift = level - gl;
                            values[(iy >> shift) * gside + (ix >> shift)] * area
                        } else {
                            let r = 1usize << (gl - level);
                            let sub = 1.0 / (gside * gside) as f64;
                            let mut s = 0.0;
                            for dy in 0..r {
                                for dx in 0..r {
                                    s += values[(iy * r + dy) * gside + ix * r + dx] * sub;
                                }
                            }
                            s
                        }
                    })
                    .collect())
            }
            Target::Function { dim: 1, f } => Ok((0..side)
                .map(|k| {
                    let a = k as f64 * w;
                    adaptive_simpson(a, a + w, CELL_TOL * w, &|t: f64| f(&[t]))
                })
                .collect()),
            Target::Function { dim: 2, f } => {
                let (nodes, weights) = simpson_rule(0.0, w, CELL_NODES_2D);
                Ok((0..side * side)
                    .map(|c| {
                        let (x0, y0) = ((c % side) as f64 * w, (c / side) as f64 * w);
                        let mut s = 0.0;
                        for (ny, wy) in nodes.iter().zip(&weights) {
                            for (nx, wx) in nodes.iter().zip(&weights) {
                                s += wx * wy * f(&[x0 + nx, y0 + ny]);
                            }
                        }
                        s
                    })
                    .collect())
            }
            Target::Function { dim, .. } => Err(Error::UnsupportedDimension(*dim)),
        }
    }

    /// `||f||_2^2` on the unit cube.
    pub fn norm_sq(&self) -> Result<f64> {
        match self {
            Target::Piecewise(pieces) => Ok(pieces
                .iter()
                .map(|p| {
                    let (lo, hi) = (p.start.max(0.0), p.end.min(1.0));
                    if hi > lo {
                        poly_integral(&poly_square(&p.coeffs), lo, hi)
                    } else {
                        0.0
                    }
                })
                .sum()),
            Target::Grid2d { level, values } => {
                let side = 1usize << level;
                Ok(values.iter().map(|v| v * v).sum::<f64>() / (side * side) as f64)
            }
            Target::Function { dim, f } => {
                let g = f.clone();
                let sq = Target::Function { dim: *dim, f: Arc::new(move |x: &[f64]| g(x).powi(2)) };
                let level = if *dim == 1 { 8 } else { 5 };
                Ok(sq.cell_integrals(level)?.iter().sum())
            }
        }
    }
}

/// Coefficients `<f, psi_i>` for every dictionary element (entry `i - 1` for
/// index `i`) together with `||f||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub dict: Dictionary,
    pub coeffs: Vec<f64>,
    pub norm_sq: f64,
}

/// Inner products with the truncated Haar system: cell integrals at the finest
/// level followed by the fast orthonormal Haar transform.
pub fn analyze(f: &Target, dict: &Dictionary) -> Result<Analysis> {
    if f.dim() != dict.dim() {
        return Err(Error::InvalidArgument(format!(
            "target dimension {} does not match dictionary dimension {}",
            f.dim(),
            dict.dim()
        )));
    }
    let j = dict.max_level;
    let cells = f.cell_integrals(j)?;
    let coeffs = match dict.kind {
        DictKind::Haar1d => haar_1d(&cells, j),
        DictKind::HaarTensor2d => haar_2d(&cells, j, dict),
    };
    Ok(Analysis { dict: *dict, coeffs, norm_sq: f.norm_sq()? })
}

fn haar_1d(cells: &[f64], j_max: u32) -> Vec<f64> {
    let scale = 2f64.powf(j_max as f64 / 2.0);
    let mut approx: Vec<f64> = cells.iter().map(|c| c * scale).collect();
    let mut out = vec![0.0; cells.len()];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for level in (0..j_max).rev() {
        let half = 1usize << level;
        let mut next = vec![0.0; half];
        for k in 0..half {
            let (a, b) = (approx[2 * k], approx[2 * k + 1]);
            next[k] = (a + b) * r;
            out[half + k] = (a - b) * r;
        }
        approx = next;
    }
    out[0] = approx[0];
    out
}

fn haar_2d(cells: &[f64], j_max: u32, dict: &Dictionary) -> Vec<f64> {
    let scale = 2f64.powf(j_max as f64);
    let mut approx: Vec<f64> = cells.iter().map(|c| c * scale).collect();
    let mut out = vec![0.0; cells.len()];
    for level in (0..j_max).rev() {
        let side = 1usize << level;
        let fine = 2 * side;
        let mut next = vec![0.0; side * side];
        for ky in 0..side {
            for kx in 0..side {
                let a00 = approx[(2 * ky) * fine + 2 * kx];
                let a10 = approx[(2 * ky) * fine + 2 * kx + 1];
                let a01 = approx[(2 * ky + 1) * fine + 2 * kx];
                let a11 = approx[(2 * ky + 1) * fine + 2 * kx + 1];
                next[ky * side + kx] = (a00 + a10 + a01 + a11) / 2.0;
                let put = |out: &mut Vec<f64>, o, v| {
                    let i = dict.index_of(Element::Tensor { level, shift: (kx, ky), orientation: o });
                    out[i - 1] = v;
                };
                put(&mut out, Orientation::Horizontal, (a00 - a10 + a01 - a11) / 2.0);
                put(&mut out, Orientation::Vertical, (a00 + a10 - a01 - a11) / 2.0);
                put(&mut out, Orientation::Diagonal, (a00 - a10 - a01 + a11) / 2.0);
            }
        }
        approx = next;
    }
    out[0] = approx[0];
    out
}

/// `pi(M) = M^p`.
pub fn pi_bound(m: usize, pi_degree: u32) -> f64 {
    (m as f64).powi(pi_degree as i32)
}

/// Number of admissible index slots: `pi(M)`, clipped to the dictionary size.
pub fn admissible_slots(m: usize, pi_degree: u32, dict: &Dictionary) -> usize {
    let p = pi_bound(m, pi_degree);
    if p >= dict.size() as f64 {
        dict.size()
    } else {
        p as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MTermApprox {
    /// 1-based dictionary indices, ascending.
    pub indices: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub l2_error: f64,
    /// Coefficient bound `pi(M)`.
    pub bound: f64,
}

impl MTermApprox {
    pub fn eval(&self, dict: &Dictionary, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.coeffs).map(|(i, c)| c * dict.eval(*i, x).unwrap_or(0.0)).sum()
    }
}

/// Keeps the `M` largest coefficients among the first `pi(M)` indices (ties to
/// the lower index) and clamps them into `[-pi(M), pi(M)]`. Optimal for an
/// orthonormal dictionary.
pub fn best_m_term(a: &Analysis, m: usize, pi_degree: u32) -> Result<MTermApprox> {
    if m == 0 {
        return Err(Error::InvalidArgument("M must be >= 1".into()));
    }
    let slots = admissible_slots(m, pi_degree, &a.dict);
    if m > slots {
        return Err(Error::InfeasibleBudget(format!("M = {m} exceeds the {slots} admissible indices")));
    }
    let bound = pi_bound(m, pi_degree);
    let mut order: Vec<usize> = (0..slots).collect();
    order.sort_by(|&i, &j| a.coeffs[j].abs().total_cmp(&a.coeffs[i].abs()).then(i.cmp(&j)));
    let mut chosen: Vec<usize> = order[..m].to_vec();
    chosen.sort_unstable();
    let mut err_sq = a.norm_sq;
    let mut coeffs = Vec::with_capacity(m);
    for &i in &chosen {
        let c = a.coeffs[i];
        let kept = c.clamp(-bound, bound);
        err_sq -= c * c;
        err_sq += (c - kept) * (c - kept);
        coeffs.push(kept);
    }
    Ok(MTermApprox {
        indices: chosen.iter().map(|i| i + 1).collect(),
        coeffs,
        l2_error: err_sq.max(0.0).sqrt(),
        bound,
    })
}

/// `||f - g||_2` by direct quadrature on a grid refining the dictionary cells.
pub fn quadrature_l2_distance(f: &Target, dict: &Dictionary, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let level = dict.max_level;
    let side = 1usize << level;
    let w = 1.0 / side as f64;
    match dict.dim() {
        1 => (0..side)
            .map(|k| {
                let a = k as f64 * w;
                // Interior nodes only touch one cell, so the half-open cell conventions agree.
                let shrink = w * 1e-12;
                simpson_1d(a + shrink, a + w - shrink, 33, |t| (f.eval(&[t]) - g(&[t])).powi(2))
            })
            .sum::<f64>()
            .sqrt(),
        _ => {
            let shrink = w * 1e-12;
            let (nodes, weights) = simpson_rule(shrink, w - shrink, 9);
            let mut s = 0.0;
            for c in 0..side * side {
                let (x0, y0) = ((c % side) as f64 * w, (c / side) as f64 * w);
                for (ny, wy) in nodes.iter().zip(&weights) {
                    for (nx, wx) in nodes.iter().zip(&weights) {
                        let x = [x0 + nx, y0 + ny];
                        s += wx * wy * (f.eval(&x) - g(&x)).powi(2);
                    }
                }
            }
            s.sqrt()
        }
    }
}

/// Reference solution by exhaustive search over all `M`-subsets of the first
/// `pi(M)` indices. Coefficients come from numerical inner products and the
/// error of every candidate from direct quadrature of the residual, so this
/// shares no code path with [`best_m_term`]. Exponential cost; intended for
/// `M <= 4`, `J <= 4`.
pub fn exhaustive_m_term(f: &Target, dict: &Dictionary, m: usize, pi_degree: u32) -> Result<MTermApprox> {
    let slots = admissible_slots(m, pi_degree, dict);
    if m == 0 || m > slots {
        return Err(Error::InfeasibleBudget(format!("M = {m} with {slots} admissible indices")));
    }
    let bound = pi_bound(m, pi_degree);
    let inner: Vec<f64> = (1..=slots)
        .map(|i| numeric_inner_product(f, dict, i).clamp(-bound, bound))
        .collect();
    let mut best: Option<MTermApprox> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let indices: Vec<usize> = subset.iter().map(|i| i + 1).collect();
        let coeffs: Vec<f64> = subset.iter().map(|&i| inner[i]).collect();
        let err = quadrature_l2_distance(f, dict, |x| {
            indices.iter().zip(&coeffs).map(|(i, c)| c * dict.eval(*i, x).unwrap()).sum()
        });
        if best.as_ref().is_none_or(|b| err < b.l2_error - 1e-14) {
            best = Some(MTermApprox { indices, coeffs, l2_error: err, bound });
        }
        // Next combination in lexicographic order.
        let mut k = m;
        loop {
            if k == 0 {
                return Ok(best.expect("at least one subset"));
            }
            k -= 1;
            if subset[k] < slots - m + k {
                subset[k] += 1;
                for t in k + 1..m {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn numeric_inner_product(f: &Target, dict: &Dictionary, i: usize) -> f64 {
    let level = dict.max_level;
    let side = 1usize << level;
    let w = 1.0 / side as f64;
    let shrink = w * 1e-12;
    match dict.dim() {
        1 => (0..side)
            .map(|k| {
                let a = k as f64 * w;
                simpson_1d(a + shrink, a + w - shrink, 33, |t| f.eval(&[t]) * dict.eval(i, &[t]).unwrap())
            })
            .sum(),
        _ => {
            let (nodes, weights) = simpson_rule(shrink, w - shrink, 9);
            let mut s = 0.0;
            for c in 0..side * side {
                let (x0, y0) = ((c % side) as f64 * w, (c / side) as f64 * w);
                for (ny, wy) in nodes.iter().zip(&weights) {
                    for (nx, wx) in nodes.iter().zip(&weights) {
                        let x = [x0 + nx, y0 + ny];
                        s += wx * wy * f.eval(&x) * dict.eval(i, &x).unwrap();
                    }
                }
            }
            s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub gamma_hat: f64,
    pub band: (f64, f64),
}

/// Least-squares slope of `-log error` against `log M` with a bootstrap band.
pub fn fit_gamma(points: &[(usize, f64)]) -> Result<GammaFit> {
    if points.len() < 4 {
        return Err(Error::InvalidArgument(format!("fit_gamma needs >= 4 points, got {}", points.len())));
    }
    if points.iter().any(|p| !(p.1 > 0.0) || p.0 == 0) {
        return Err(Error::InvalidArgument("fit_gamma needs positive M and positive errors".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = fit_power_law(&xs, &ys, None, BOOTSTRAP_RESAMPLES, 0x6761)?;
    Ok(GammaFit { gamma_hat: -fit.slope, band: (-fit.band.1, -fit.band.0) })
}

/// Bits of the fixed codec header: `slots:32 | M:32 | q:8 | bound:64`.
pub const HEADER_BITS: usize = 32 + 32 + 8 + 64;

/// A bit sequence, most significant bit first within each byte.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bitstring {
    bytes: Vec<u8>,
    len: usize,
}

impl Bitstring {
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if len > bytes.len() * 8 || len + 8 <= bytes.len() * 8 {
            return Err(Error::Decode { offset: 0, reason: format!("{len} bits do not fit {} bytes", bytes.len()) });
        }
        Ok(Bitstring { bytes, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    fn push(&mut self, value: u64, width: usize) {
        for b in (0..width).rev() {
            if self.len % 8 == 0 {
                self.bytes.push(0);
            }
            if (value >> b) & 1 == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }
}

struct BitReader<'a> {
    bits: &'a Bitstring,
    pos: usize,
}

impl BitReader<'_> {
    fn read(&mut self, width: usize, what: &str) -> Result<u64> {
        if self.pos + width > self.bits.len {
            return Err(Error::Decode {
                offset: self.pos,
                reason: format!("truncated while reading {what} ({width} bits)"),
            });
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bits.bytes[self.pos / 8];
            v = (v << 1) | ((byte >> (7 - self.pos % 8)) & 1) as u64;
            self.pos += 1;
        }
        Ok(v)
    }
}

/// Mid-rise uniform quantizer with `2^q` levels on `[-bound, bound]`;
/// reconstruction error at most `bound 2^-q`.
fn quantize(c: f64, bound: f64, q: u32) -> u64 {
    let levels = 1u64 << q;
    let step = 2.0 * bound / levels as f64;
    (((c.clamp(-bound, bound) + bound) / step).floor() as u64).min(levels - 1)
}

fn dequantize(code: u64, bound: f64, q: u32) -> f64 {
    let step = 2.0 * bound / (1u64 << q) as f64;
    -bound + (code as f64 + 0.5) * step
}

/// Encodes the best `M`-term approximation with `q` bits per coefficient.
///
/// Layout, MSB first: `slots:32 | M:32 | q:8 | bound:64 (IEEE-754 bits)`, then a
/// bitmap of `slots` bits marking the kept indices, then the `M` quantized
/// coefficients in ascending index order. Exact-zero coefficients are dropped,
/// so the zero function encodes with `M = 0`.
pub fn encode(a: &Analysis, m: usize, q: u32, pi_degree: u32) -> Result<Bitstring> {
    if !(4..=32).contains(&q) {
        return Err(Error::InvalidArgument(format!("q must lie in 4..=32, got {q}")));
    }
    let approx = best_m_term(a, m, pi_degree)?;
    let slots = admissible_slots(m, pi_degree, &a.dict);
    let kept: Vec<(usize, f64)> =
        approx.indices.iter().zip(&approx.coeffs).filter(|(_, c)| **c != 0.0).map(|(i, c)| (*i, *c)).collect();
    let mut bits = Bitstring::default();
    bits.push(slots as u64, 32);
    bits.push(kept.len() as u64, 32);
    bits.push(q as u64, 8);
    bits.push(approx.bound.to_bits(), 64);
    let mut next = kept.iter().peekable();
    for i in 1..=slots {
        let hit = next.peek().is_some_and(|(k, _)| *k == i);
        if hit {
            next.next();
        }
        bits.push(hit as u64, 1);
    }
    for (_, c) in &kept {
        bits.push(quantize(*c, approx.bound, q), q as usize);
    }
    Ok(bits)
}

/// A decoded expansion `sum c_i psi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub dict: Dictionary,
    pub terms: Vec<(usize, f64)>,
    pub q: u32,
    pub bound: f64,
}

impl Decoded {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(i, c)| c * self.dict.eval(*i, x).unwrap_or(0.0)).sum()
    }

    /// `||f - D(E(f))||_2` from the analysis of `f` (orthonormality).
    pub fn l2_error(&self, a: &Analysis) -> f64 {
        let mut err_sq = a.norm_sq;
        for (i, c) in &self.terms {
            let ci = a.coeffs[i - 1];
            err_sq += (ci - c) * (ci - c) - ci * ci;
        }
        err_sq.max(0.0).sqrt()
    }

    /// Analytic bound `M^{1/2} pi(M) 2^-q` on the quantization part of the error.
    pub fn quantization_bound(&self) -> f64 {
        (self.terms.len() as f64).sqrt() * self.bound * 2f64.powi(-(self.q as i32))
    }
}

pub fn decode(bits: &Bitstring, dict: &Dictionary) -> Result<Decoded> {
    let mut r = BitReader { bits, pos: 0 };
    let slots = r.read(32, "slot count")? as usize;
    if slots > dict.size() {
        return Err(Error::Decode { offset: 0, reason: format!("{slots} slots exceed dictionary size {}", dict.size()) });
    }
    let m = r.read(32, "term count")? as usize;
    if m > slots {
        return Err(Error::Decode { offset: 32, reason: format!("M = {m} exceeds {slots} slots") });
    }
    let q = r.read(8, "bits per coefficient")? as u32;
    if !(4..=32).contains(&q) {
        return Err(Error::Decode { offset: 64, reason: format!("q = {q} outside 4..=32") });
    }
    let bound = f64::from_bits(r.read(64, "coefficient bound")?);
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Decode { offset: 72, reason: format!("invalid coefficient bound {bound}") });
    }
    let map_start = r.pos;
    let mut indices = Vec::with_capacity(m);
    for i in 1..=slots {
        if r.read(1, "index bitmap")? == 1 {
            indices.push(i);
        }
    }
    if indices.len() != m {
        return Err(Error::Decode {
            offset: map_start,
            reason: format!("bitmap marks {} indices, header declares {m}", indices.len()),
        });
    }
    let mut terms = Vec::with_capacity(m);
    for i in indices {
        let code = r.read(q as usize, "coefficient")?;
        terms.push((i, dequantize(code, bound, q)));
    }
    if r.pos != bits.len {
        return Err(Error::Decode { offset: r.pos, reason: format!("{} trailing bits", bits.len - r.pos) });
    }
    Ok(Decoded { dict: *dict, terms, q, bound })
}

/// One point of a rate-distortion sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeRecord {
    #[serde(rename = "M")]
    pub m: usize,
    pub q: u32,
    pub bits: usize,
    /// Achieved round-trip `L^2` error.
    pub error: f64,
}

impl CodeRecord {
    pub fn payload_bits(&self) -> usize {
        self.bits - HEADER_BITS
    }
}

/// Encodes and decodes `f` for every `(M, q)` on the grid.
pub fn rd_sweep(a: &Analysis, m_grid: &[usize], q_grid: &[u32], pi_degree: u32) -> Result<Vec<CodeRecord>> {
    let mut out = Vec::with_capacity(m_grid.len() * q_grid.len());
    for &m in m_grid {
        for &q in q_grid {
            let bits = encode(a, m, q, pi_degree)?;
            let dec = decode(&bits, &a.dict)?;
            out.push(CodeRecord { m, q, bits: bits.len(), error: dec.l2_error(a) });
        }
    }
    Ok(out)
}

/// Cheapest record achieving error `<= epsilon`.
pub fn min_bits_for(records: &[CodeRecord], epsilon: f64) -> Option<&CodeRecord> {
    records.iter().filter(|r| r.error <= epsilon).min_by_key(|r| (r.bits, r.m, r.q))
}

/// Fits `payload bits ~ epsilon^{-1/gamma}` over the given targets and returns
/// `gamma`. The constant header is excluded since it does not scale with
/// `epsilon`.
pub fn fit_rate_distortion(records: &[CodeRecord], eps_grid: &[f64]) -> Result<GammaFit> {
    let pts: Vec<(f64, f64)> = eps_grid
        .iter()
        .filter_map(|&e| min_bits_for(records, e).map(|r| (1.0 / e, r.payload_bits() as f64)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("only {} tolerances are attainable on the grid", pts.len())));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_power_law(&xs, &ys, None, BOOTSTRAP_RESAMPLES, 0x7264)?;
    Ok(GammaFit { gamma_hat: 1.0 / fit.slope, band: (1.0 / fit.band.1, 1.0 / fit.band.0) })
}

pub fn write_sweep_csv(path: &Path, records: &[CodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnApprox {
    /// `L^2` error of the best network found: an upper bound on the best
    /// `M`-weight approximation error.
    pub error_upper_bound: f64,
    pub net: Network,
}

/// Trains a one-hidden-layer ReLU network of width `floor((M - 1)/(d + 2))` by
/// squared-loss regression on quadrature nodes, projects it to connectivity
/// `<= M` and weights `<= pi(M)`, and reports its `L^2` error. The zero network
/// is always a feasible candidate.
pub fn nn_mweight_error(f: &Target, m_budget: usize, pi_degree: u32, cfg: &TrainConfig) -> Result<NnApprox> {
    let d = f.dim();
    if m_budget < d + 2 {
        return Err(Error::InvalidArgument(format!("M-weight budget must be >= d + 2 = {}", d + 2)));
    }
    let width = (m_budget - 1) / (d + 2);
    let arch = Architecture::new(vec![d, width, 1])?;
    let sieve = SieveSpec::new(arch, m_budget, pi_bound(m_budget, pi_degree), Some(pi_degree))?;
    let (xs, ws) = training_nodes(d)?;
    let ys: Vec<f64> = xs.iter().map(|x| f.eval(x)).collect();
    let fitted = train_regression(&sieve, &xs, &ys, Some(&ws), cfg)?;
    let trained = project_to_sieve(&fitted.net, &sieve)?;
    let zero = sieve.zero_network();
    let e_trained = network_l2_error(f, &trained)?;
    let e_zero = network_l2_error(f, &zero)?;
    Ok(if e_trained <= e_zero {
        NnApprox { error_upper_bound: e_trained, net: trained }
    } else {
        NnApprox { error_upper_bound: e_zero, net: zero }
    })
}

fn training_nodes(d: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = match d {
        1 => 129,
        2 => 33,
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let (nodes, weights) = simpson_rule(0.0, 1.0, m);
    if d == 1 {
        return Ok((nodes.iter().map(|x| vec![*x]).collect(), weights));
    }
    let mut xs = Vec::with_capacity(m * m);
    let mut ws = Vec::with_capacity(m * m);
    for (y, wy) in nodes.iter().zip(&weights) {
        for (x, wx) in nodes.iter().zip(&weights) {
            xs.push(vec![*x, *y]);
            ws.push(wx * wy);
        }
    }
    Ok((xs, ws))
}

/// `||f - R(net)||_2` by Simpson quadrature.
pub fn network_l2_error(f: &Target, net: &Network) -> Result<f64> {
    let d = f.dim();
    let m = crate::quad::nodes_per_axis(d)?;
    Ok(crate::quad::integrate_cube(d, m, |x| (f.eval(x) - net.eval(x)).powi(2)).max(0.0).sqrt())
}
