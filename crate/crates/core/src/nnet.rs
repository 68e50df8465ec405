//! Network data model: architectures, parameters, realization maps (ReLU and
//! mixed ReLU/periodic, with optional skip edges), complexity measures and the
//! constrained sieve classes.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Structural("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// `out += self * x`.
    #[inline]
    fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
    }

    /// `out += self^T * delta`.
    #[inline]
    fn tmul_add(&self, delta: &[f64], out: &mut [f64]) {
        for (r, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                for (o, w) in out.iter_mut().zip(self.row(r)) {
                    *o += w * d;
                }
            }
        }
    }

    /// `self += delta (x) x`.
    #[inline]
    fn outer_add(&mut self, delta: &[f64], x: &[f64]) {
        let cols = self.cols;
        for (r, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                for (g, v) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                    *g += d * v;
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Layer-dimension signature `(N_0, N_1, ..., N_L)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    dims: Vec<usize>,
}

impl Architecture {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Structural(format!("architecture needs L >= 1, got dims {dims:?}")));
        }
        if dims.contains(&0) {
            return Err(Error::Structural(format!("layer dimensions must be positive: {dims:?}")));
        }
        Ok(Architecture { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of affine maps `L`.
    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn hidden_layers(&self) -> usize {
        self.num_layers() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn width(&self) -> usize {
        *self.dims.iter().max().unwrap()
    }

    /// Number of weight and bias entries of the dense layers.
    pub fn dense_param_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }
}

/// The architecture partial order: `s1 <= s2` iff `s1` is no deeper and no
/// wider, layer by layer, over the layers `s1` has.
pub fn arch_leq(s1: &Architecture, s2: &Architecture) -> bool {
    let (l1, l2) = (s1.num_layers(), s2.num_layers());
    l1 <= l2 && (0..=l1).all(|i| s1.dims[i] <= s2.dims[i])
}

/// Hidden-unit activation for one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    /// Triangle wave with the given period: positive on `(0, T/2)`, negative
    /// on `(T/2, T)`, extrema `+1` and `-1`, Lipschitz constant `4/T`.
    Periodic { period: f64 },
}

impl Activation {
    pub const TRIANGLE: Activation = Activation::Periodic { period: 2.0 };

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::Relu => z.max(0.0),
            Activation::Periodic { period } => {
                let s = (z / period).rem_euclid(1.0);
                if s < 0.25 {
                    4.0 * s
                } else if s < 0.75 {
                    2.0 - 4.0 * s
                } else {
                    4.0 * s - 4.0
                }
            }
        }
    }

    /// Derivative; the ReLU subgradient at 0 is taken as 0.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Periodic { period } => {
                let s = (z / period).rem_euclid(1.0);
                if (0.25..0.75).contains(&s) {
                    -4.0 / period
                } else {
                    4.0 / period
                }
            }
        }
    }

    fn tag(&self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::Periodic { period } => format!("periodic:{period:?}"),
        }
    }

    fn parse(tag: &str) -> Result<Self> {
        if tag == "relu" {
            return Ok(Activation::Relu);
        }
        if let Some(p) = tag.strip_prefix("periodic:") {
            let period: f64 =
                p.parse().map_err(|_| Error::Structural(format!("bad period in {tag}")))?;
            return Ok(Activation::Periodic { period });
        }
        Err(Error::Structural(format!("unknown activation tag {tag}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// A skip edge feeding the output of layer `from` (0 = input) into the
/// pre-activation of the strictly later layer `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub from: usize,
    pub to: usize,
    pub weights: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    pub layers: Vec<Layer>,
    /// One activation per hidden layer.
    pub activations: Vec<Activation>,
    pub skips: Vec<Skip>,
}

impl Network {
    pub fn new(
        arch: Architecture,
        layers: Vec<Layer>,
        activations: Vec<Activation>,
        skips: Vec<Skip>,
    ) -> Result<Self> {
        let net = Network { arch, layers, activations, skips };
        net.validate()?;
        Ok(net)
    }

    /// All-zero ReLU network of the given architecture.
    pub fn zeros(arch: Architecture) -> Self {
        let activations = vec![Activation::Relu; arch.hidden_layers()];
        Self::zeros_with(arch, activations, &[]).expect("relu zeros network is valid")
    }

    pub fn zeros_with(
        arch: Architecture,
        activations: Vec<Activation>,
        skip_edges: &[(usize, usize)],
    ) -> Result<Self> {
        let dims = arch.dims().to_vec();
        let layers = dims
            .windows(2)
            .map(|w| Layer { weights: Matrix::zeros(w[1], w[0]), bias: vec![0.0; w[1]] })
            .collect();
        let skips = skip_edges
            .iter()
            .map(|&(from, to)| {
                let rows = *dims.get(to).unwrap_or(&0);
                let cols = *dims.get(from).unwrap_or(&0);
                Skip { from, to, weights: Matrix::zeros(rows, cols) }
            })
            .collect();
        Network::new(arch, layers, activations, skips)
    }

    /// A single-hidden-layer ReLU network from explicit parts.
    pub fn shallow(
        first: Vec<Vec<f64>>,
        first_bias: Vec<f64>,
        out: Vec<f64>,
        out_bias: f64,
    ) -> Result<Self> {
        let a1 = Matrix::from_rows(&first)?;
        let arch = Architecture::new(vec![a1.cols, a1.rows, 1])?;
        let layers = vec![
            Layer { weights: a1, bias: first_bias },
            Layer { weights: Matrix::from_rows(&[out])?, bias: vec![out_bias] },
        ];
        Network::new(arch, layers, vec![Activation::Relu], vec![])
    }

    fn validate(&self) -> Result<()> {
        let dims = self.arch.dims();
        let l = self.arch.num_layers();
        if self.layers.len() != l {
            return Err(Error::Structural(format!("{} layers for architecture {dims:?}", self.layers.len())));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weights.rows != dims[i + 1]
                || layer.weights.cols != dims[i]
                || layer.bias.len() != dims[i + 1]
                || layer.weights.data.len() != dims[i + 1] * dims[i]
            {
                return Err(Error::Structural(format!("layer {} does not match {dims:?}", i + 1)));
            }
        }
        if self.activations.len() != l - 1 {
            return Err(Error::Structural(format!(
                "{} activations for {} hidden layers",
                self.activations.len(),
                l - 1
            )));
        }
        for act in &self.activations {
            if let Activation::Periodic { period } = act {
                if !(*period > 0.0 && period.is_finite()) {
                    return Err(Error::Structural(format!("periodic activation needs period > 0, got {period}")));
                }
            }
        }
        for s in &self.skips {
            if s.from >= s.to || s.to > l {
                return Err(Error::Structural(format!(
                    "skip {}->{} must go to a strictly later layer <= {l}",
                    s.from, s.to
                )));
            }
            if s.weights.rows != dims[s.to]
                || s.weights.cols != dims[s.from]
                || s.weights.data.len() != dims[s.to] * dims[s.from]
            {
                return Err(Error::Structural(format!("skip {}->{} has wrong shape", s.from, s.to)));
            }
        }
        if self.arch.output_dim() != 1 {
            return Err(Error::Structural("networks must have a scalar output".into()));
        }
        Ok(())
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim()
    }

    /// Realization `R(Phi)(x)`: hidden layers apply their activation, the last
    /// layer is affine; skip contributions are added to the target pre-activation.
    pub fn realize(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Structural(format!(
                "input of length {} for a network with N_0 = {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(self.eval(x))
    }

    /// Realization without the input-length check.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut cache = ForwardCache::new(self);
        self.forward(x, &mut cache)
    }

    /// Forward pass storing pre-activations and layer outputs in `cache`.
    pub fn forward(&self, x: &[f64], cache: &mut ForwardCache) -> f64 {
        let l = self.layers.len();
        cache.outputs[0].copy_from_slice(x);
        for i in 0..l {
            let layer = &self.layers[i];
            let (done, rest) = cache.outputs.split_at_mut(i + 1);
            let pre = &mut cache.pre[i];
            pre.copy_from_slice(&layer.bias);
            layer.weights.mul_add(&done[i], pre);
            for s in self.skips.iter().filter(|s| s.to == i + 1) {
                s.weights.mul_add(&done[s.from], pre);
            }
            if i + 1 < l {
                let act = self.activations[i];
                for (o, z) in rest[0].iter_mut().zip(pre.iter()) {
                    *o = act.apply(*z);
                }
            }
        }
        cache.pre[l - 1][0]
    }

    /// Accumulates `dout * d(output)/d(params)` into `grad` (same shape as `self`),
    /// using the cache of the preceding [`Network::forward`] call.
    pub fn backward(&self, dout: f64, cache: &mut ForwardCache, grad: &mut Network) {
        let l = self.layers.len();
        for acc in cache.delta.iter_mut() {
            acc.iter_mut().for_each(|v| *v = 0.0);
        }
        cache.delta[l][0] = dout;
        for i in (1..=l).rev() {
            // delta[i] holds dL/d(output of layer i); convert to dL/d(pre-activation).
            if i < l {
                let act = self.activations[i - 1];
                for (d, z) in cache.delta[i].iter_mut().zip(&cache.pre[i - 1]) {
                    *d *= act.derivative(*z);
                }
            }
            let (lower, upper) = cache.delta.split_at_mut(i);
            let delta = &upper[0];
            let g = &mut grad.layers[i - 1];
            g.weights.outer_add(delta, &cache.outputs[i - 1]);
            for (gb, d) in g.bias.iter_mut().zip(delta.iter()) {
                *gb += d;
            }
            if i > 1 {
                self.layers[i - 1].weights.tmul_add(delta, &mut lower[i - 1]);
            }
            for (k, s) in self.skips.iter().enumerate().filter(|(_, s)| s.to == i) {
                grad.skips[k].weights.outer_add(delta, &cache.outputs[s.from]);
                if s.from > 0 {
                    s.weights.tmul_add(delta, &mut lower[s.from]);
                }
            }
        }
    }

    /// Linear-region code of every hidden unit at `x`; two inputs (or parameter
    /// settings) with equal codes lie on the same affine piece.
    pub fn activation_pattern(&self, x: &[f64]) -> Vec<i64> {
        let mut cache = ForwardCache::new(self);
        self.forward(x, &mut cache);
        let mut codes = Vec::new();
        for (pre, act) in cache.pre.iter().zip(&self.activations) {
            for &z in pre {
                codes.push(match act {
                    Activation::Relu => (z > 0.0) as i64,
                    Activation::Periodic { period } => (2.0 * z / period - 0.5).floor() as i64,
                });
            }
        }
        codes
    }

    /// `M(Phi)`: number of nonzero weight, bias and skip entries (exact-zero test).
    pub fn connectivity(&self) -> usize {
        self.params().iter().filter(|v| **v != 0.0).count()
    }

    /// `W(Phi) = max_l N_l`.
    pub fn width(&self) -> usize {
        self.arch.width()
    }

    /// Number of hidden layers `L - 1`.
    pub fn depth(&self) -> usize {
        self.arch.hidden_layers()
    }

    /// `B(Phi)`: largest absolute parameter.
    pub fn weight_magnitude(&self) -> f64 {
        self.max_weight_abs().max(self.max_bias_abs())
    }

    fn max_weight_abs(&self) -> f64 {
        let a = self.layers.iter().map(|l| l.weights.max_abs()).fold(0.0, f64::max);
        let s = self.skips.iter().map(|s| s.weights.max_abs()).fold(0.0, f64::max);
        a.max(s)
    }

    fn max_bias_abs(&self) -> f64 {
        self.layers.iter().map(|l| max_abs(&l.bias)).fold(0.0, f64::max)
    }

    /// `max_l ||A_l||_max + max_l ||b_l||_max`; skip matrices count as weights.
    pub fn nn_norm(&self) -> f64 {
        self.max_weight_abs() + self.max_bias_abs()
    }

    /// Parameters in canonical order: for each layer and each row, the row of
    /// `A_l` followed by the bias entry, then skip matrices row-major.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for (r, b) in layer.bias.iter().enumerate() {
                out.extend_from_slice(layer.weights.row(r));
                out.push(*b);
            }
        }
        for s in &self.skips {
            out.extend_from_slice(&s.weights.data);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &mut self.layers {
            let cols = layer.weights.cols;
            for (row, b) in layer.weights.data.chunks_mut(cols.max(1)).zip(layer.bias.iter_mut()) {
                if cols > 0 {
                    out.extend(row.iter_mut());
                }
                out.push(b);
            }
        }
        for s in &mut self.skips {
            out.extend(s.weights.data.iter_mut());
        }
        out
    }

    /// Canonical indices of the bias entries.
    pub fn bias_indices(&self) -> Vec<usize> {
        let mut idx = Vec::new();
        let mut offset = 0;
        for layer in &self.layers {
            for _ in 0..layer.bias.len() {
                offset += layer.weights.cols;
                idx.push(offset);
                offset += 1;
            }
        }
        idx
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.data.len() + l.bias.len()).sum::<usize>()
            + self.skips.iter().map(|s| s.weights.data.len()).sum::<usize>()
    }

    pub fn set_params(&mut self, values: &[f64]) {
        let mut refs = self.params_mut();
        assert_eq!(refs.len(), values.len(), "parameter count mismatch");
        for (r, v) in refs.iter_mut().zip(values) {
            **r = *v;
        }
    }

    /// Applies `f(self_param, other_param)` over both networks in canonical order.
    /// Both networks must share the same topology.
    pub fn zip_params_mut(&mut self, other: &Network, mut f: impl FnMut(&mut f64, f64)) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.data.iter_mut().zip(&b.weights.data).for_each(|(x, y)| f(x, *y));
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| f(x, *y));
        }
        for (a, b) in self.skips.iter_mut().zip(&other.skips) {
            a.weights.data.iter_mut().zip(&b.weights.data).for_each(|(x, y)| f(x, *y));
        }
    }

    pub fn fill(&mut self, value: f64) {
        for l in &mut self.layers {
            l.weights.data.fill(value);
            l.bias.fill(value);
        }
        for s in &mut self.skips {
            s.weights.data.fill(value);
        }
    }

    /// Same topology, all parameters zero.
    pub fn zeros_like(&self) -> Network {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn map_params(&mut self, mut f: impl FnMut(f64) -> f64) {
        for p in self.params_mut() {
            *p = f(*p);
        }
    }

    /// Multiplies every parameter by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Network {
        let mut s = self.clone();
        s.map_params(|v| v * lambda);
        s
    }

    /// Serializes to the flat text format:
    ///
    /// ```text
    /// nnclass-net dims=2,3,1 act=relu skips=-
    /// A1 <row-major entries>
    /// b1 <entries>
    /// A2 ...
    /// S0>2 <row-major entries>
    /// ```
    ///
    /// Floats are written in shortest round-trip form, so parsing is bit-exact.
    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.arch.dims().iter().map(|d| d.to_string()).collect();
        let acts: Vec<String> = self.activations.iter().map(Activation::tag).collect();
        let skips: Vec<String> = self.skips.iter().map(|s| format!("{}>{}", s.from, s.to)).collect();
        let list = |v: &[String]| if v.is_empty() { "-".to_string() } else { v.join(",") };
        let mut out = format!("nnclass-net dims={} act={} skips={}\n", dims.join(","), list(&acts), list(&skips));
        let mut line = |tag: String, values: &[f64]| {
            out.push_str(&tag);
            for v in values {
                write!(out, " {v:?}").unwrap();
            }
            out.push('\n');
        };
        for (i, layer) in self.layers.iter().enumerate() {
            line(format!("A{}", i + 1), &layer.weights.data);
            line(format!("b{}", i + 1), &layer.bias);
        }
        for s in &self.skips {
            line(format!("S{}>{}", s.from, s.to), &s.weights.data);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Structural(format!("network text: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("nnclass-net") {
            return Err(bad("missing nnclass-net header".into()));
        }
        let (mut dims, mut acts, mut skips) = (None, None, None);
        for f in fields {
            let (k, v) = f.split_once('=').ok_or_else(|| bad(format!("bad header field {f}")))?;
            match k {
                "dims" => dims = Some(v),
                "act" => acts = Some(v),
                "skips" => skips = Some(v),
                _ => return Err(bad(format!("unknown header key {k}"))),
            }
        }
        let split = |v: Option<&str>| -> Vec<String> {
            match v {
                None | Some("-") | Some("") => vec![],
                Some(v) => v.split(',').map(str::to_string).collect(),
            }
        };
        let dims = split(dims)
            .iter()
            .map(|d| d.parse::<usize>().map_err(|_| bad(format!("bad dimension {d}"))))
            .collect::<Result<Vec<_>>>()?;
        let arch = Architecture::new(dims)?;
        let activations = split(acts).iter().map(|a| Activation::parse(a)).collect::<Result<Vec<_>>>()?;
        let skip_edges = split(skips)
            .iter()
            .map(|s| {
                let (a, b) = s.split_once('>').ok_or_else(|| bad(format!("bad skip {s}")))?;
                Ok((
                    a.parse::<usize>().map_err(|_| bad(format!("bad skip {s}")))?,
                    b.parse::<usize>().map_err(|_| bad(format!("bad skip {s}")))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut net = Network::zeros_with(arch, activations, &skip_edges)?;

        let mut take = |tag: String, len: usize| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad(format!("missing line {tag}")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag.as_str()) {
                return Err(bad(format!("expected line {tag}")));
            }
            let vals = parts
                .map(|p| p.parse::<f64>().map_err(|_| bad(format!("bad number {p} in {tag}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != len {
                return Err(bad(format!("{tag} has {} entries, expected {len}", vals.len())));
            }
            Ok(vals)
        };
        for i in 0..net.layers.len() {
            let a = take(format!("A{}", i + 1), net.layers[i].weights.data.len())?;
            let b = take(format!("b{}", i + 1), net.layers[i].bias.len())?;
            net.layers[i].weights.data = a;
            net.layers[i].bias = b;
        }
        for k in 0..net.skips.len() {
            let (f, t) = (net.skips[k].from, net.skips[k].to);
            net.skips[k].weights.data = take(format!("S{f}>{t}"), net.skips[k].weights.data.len())?;
        }
        if lines.next().is_some() {
            return Err(bad("trailing content".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Scratch buffers for forward and backward passes.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    outputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn new(net: &Network) -> Self {
        let dims = net.arch.dims();
        ForwardCache {
            outputs: dims.iter().map(|&d| vec![0.0; d]).collect(),
            pre: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
            delta: dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

/// One constrained class `{Phi : S(Phi) = arch, M(Phi) <= conn_budget, B(Phi) <= weight_bound}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveSpec {
    pub arch: Architecture,
    pub conn_budget: usize,
    pub weight_bound: f64,
    /// Degree of the polynomial weight bound, `None` for non-polynomial rules.
    pub pi_degree: Option<u32>,
    pub activations: Vec<Activation>,
    pub skip_edges: Vec<(usize, usize)>,
}

impl SieveSpec {
    pub fn new(arch: Architecture, conn_budget: usize, weight_bound: f64, pi_degree: Option<u32>) -> Result<Self> {
        if conn_budget < 1 {
            return Err(Error::InvalidArgument("connectivity budget must be >= 1".into()));
        }
        if !(weight_bound > 0.0) {
            return Err(Error::InvalidArgument("weight bound must be > 0".into()));
        }
        let activations = vec![Activation::Relu; arch.hidden_layers()];
        Ok(SieveSpec { arch, conn_budget, weight_bound, pi_degree, activations, skip_edges: vec![] })
    }

    pub fn with_skips(mut self, skip_edges: Vec<(usize, usize)>) -> Result<Self> {
        Network::zeros_with(self.arch.clone(), self.activations.clone(), &skip_edges)?;
        self.skip_edges = skip_edges;
        Ok(self)
    }

    pub fn with_activations(mut self, activations: Vec<Activation>) -> Result<Self> {
        Network::zeros_with(self.arch.clone(), activations.clone(), &self.skip_edges)?;
        self.activations = activations;
        Ok(self)
    }

    /// The zero network of this class' topology.
    pub fn zero_network(&self) -> Network {
        Network::zeros_with(self.arch.clone(), self.activations.clone(), &self.skip_edges)
            .expect("validated at construction")
    }
}

pub fn in_sieve(net: &Network, sieve: &SieveSpec) -> bool {
    net.arch == sieve.arch
        && net.connectivity() <= sieve.conn_budget
        && net.weight_magnitude() <= sieve.weight_bound
}

/// Clamps every parameter into `[-B, B]`, then zeroes the smallest-magnitude
/// nonzero entries until `M(Phi) <= M`. Ties are zeroed in canonical order.
pub fn project_to_sieve(net: &Network, sieve: &SieveSpec) -> Result<Network> {
    if net.arch != sieve.arch {
        return Err(Error::Structural(format!(
            "network architecture {:?} differs from sieve architecture {:?}",
            net.arch.dims(),
            sieve.arch.dims()
        )));
    }
    let mut out = net.clone();
    project_in_place(&mut out, sieve);
    Ok(out)
}

pub(crate) fn project_in_place(net: &mut Network, sieve: &SieveSpec) {
    let bound = sieve.weight_bound;
    let mut params = net.params_mut();
    for p in params.iter_mut() {
        **p = p.clamp(-bound, bound);
    }
    let mut nonzero: Vec<(f64, usize)> =
        params.iter().enumerate().filter(|(_, p)| ***p != 0.0).map(|(i, p)| (p.abs(), i)).collect();
    if nonzero.len() > sieve.conn_budget {
        nonzero.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let excess = nonzero.len() - sieve.conn_budget;
        for &(_, i) in &nonzero[..excess] {
            *params[i] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(d: &[usize]) -> Architecture {
        Architecture::new(d.to_vec()).unwrap()
    }

    #[test]
    fn single_relu() {
        let net = Network::shallow(vec![vec![1.0]], vec![0.0], vec![1.0], 0.0).unwrap();
        assert_eq!(net.realize(&[0.7]).unwrap(), 0.7);
        assert_eq!(net.realize(&[-0.3]).unwrap(), 0.0);
        assert!(matches!(net.realize(&[0.1, 0.2]), Err(Error::Structural(_))));
    }

    #[test]
    fn constant_network() {
        let mut net = Network::zeros(arch(&[3, 4, 4, 1]));
        net.layers[2].bias[0] = -1.25;
        assert_eq!(net.realize(&[0.1, 0.5, 0.9]).unwrap(), -1.25);
    }

    #[test]
    fn hand_computed_forward_pass() {
        // h = relu([[1,-2],[0.5,1]] x + [0.1,-0.3]), out = 2 h1 - h2 + 0.25
        let net = Network::shallow(
            vec![vec![1.0, -2.0], vec![0.5, 1.0]],
            vec![0.1, -0.3],
            vec![2.0, -1.0],
            0.25,
        )
        .unwrap();
        // x = (0.6, 0.2): h1 = relu(0.6-0.4+0.1) = 0.3, h2 = relu(0.3+0.2-0.3) = 0.2
        let v = net.realize(&[0.6, 0.2]).unwrap();
        assert!((v - (0.6 - 0.2 + 0.25)).abs() < 1e-15);
        // x = (0.1, 0.5): h1 = relu(0.1-1.0+0.1) = 0, h2 = relu(0.05+0.5-0.3) = 0.25
        let v = net.realize(&[0.1, 0.5]).unwrap();
        assert!((v - (-0.25 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn skip_edges_add_into_preactivation() {
        let mut net = Network::zeros_with(arch(&[1, 2, 1]), vec![Activation::Relu], &[(0, 2)]).unwrap();
        net.skips[0].weights.data = vec![3.0];
        net.layers[1].bias[0] = 1.0;
        assert_eq!(net.realize(&[0.5]).unwrap(), 2.5);
        assert!(Network::zeros_with(arch(&[1, 2, 1]), vec![Activation::Relu], &[(1, 1)]).is_err());
        assert!(Network::zeros_with(arch(&[1, 2, 1]), vec![Activation::Relu], &[(2, 1)]).is_err());
        assert!(Network::zeros_with(arch(&[1, 2, 1]), vec![Activation::Relu], &[(0, 3)]).is_err());
    }

    #[test]
    fn complexity_measures() {
        let zero = Network::zeros(arch(&[2, 3, 1]));
        assert_eq!(zero.connectivity(), 0);
        assert_eq!(zero.nn_norm(), 0.0);
        let mut dense = zero.clone();
        dense.map_params(|_| 0.25);
        assert_eq!(dense.connectivity(), 13);
        assert_eq!(dense.width(), 3);
        assert_eq!(dense.depth(), 1);
        assert_eq!(dense.arch().dense_param_count(), 13);
        dense.layers[0].weights.set(1, 1, -0.5);
        dense.layers[1].bias[0] = 0.5;
        assert_eq!(dense.weight_magnitude(), 0.5);
    }

    #[test]
    fn nn_norm_sums_the_two_maxima() {
        let mut net = Network::zeros(arch(&[1, 1, 1]));
        net.layers[0].weights.data = vec![1.0];
        net.layers[1].weights.data = vec![-3.0];
        net.layers[0].bias = vec![2.0];
        net.layers[1].bias = vec![0.5];
        assert_eq!(net.nn_norm(), 5.0);
        assert!((net.scaled(2.5).nn_norm() - 12.5).abs() < 1e-12);
    }

    #[test]
    fn projection_clamps_and_sparsifies() {
        let sieve = SieveSpec::new(arch(&[2, 3, 1]), 10, 1.0, Some(2)).unwrap();
        let mut net = Network::zeros(arch(&[2, 3, 1]));
        let values: Vec<f64> = (1..=13).map(|k| k as f64 * 0.05).collect();
        net.set_params(&values);
        let p = project_to_sieve(&net, &sieve).unwrap();
        assert_eq!(p.connectivity(), 10);
        let kept = p.params();
        assert_eq!(&kept[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(&kept[3..], &values[3..]);
        assert!(in_sieve(&p, &sieve));

        let mut big = Network::zeros(arch(&[2, 3, 1]));
        big.layers[0].weights.set(0, 0, 10.0);
        let p = project_to_sieve(&big, &sieve).unwrap();
        assert_eq!(p.layers[0].weights.get(0, 0), 1.0);

        let inside = project_to_sieve(&p, &sieve).unwrap();
        assert_eq!(inside, p);
        let other = SieveSpec::new(arch(&[2, 4, 1]), 10, 1.0, None).unwrap();
        assert!(project_to_sieve(&net, &other).is_err());
    }

    #[test]
    fn projection_ties_follow_canonical_order() {
        let sieve = SieveSpec::new(arch(&[1, 2, 1]), 3, 5.0, None).unwrap();
        let mut net = Network::zeros(arch(&[1, 2, 1]));
        net.set_params(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let p = project_to_sieve(&net, &sieve).unwrap();
        assert_eq!(p.params(), vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn in_sieve_boundaries() {
        let sieve = SieveSpec::new(arch(&[1, 2, 1]), 3, 2.0, None).unwrap();
        assert!(in_sieve(&sieve.zero_network(), &sieve));
        let mut net = sieve.zero_network();
        net.layers[0].bias[0] = 2.0 + 1e-9;
        assert!(!in_sieve(&net, &sieve));
        net.layers[0].bias[0] = 2.0;
        assert!(in_sieve(&net, &sieve));
        assert!(SieveSpec::new(arch(&[1, 1]), 0, 1.0, None).is_err());
        assert!(SieveSpec::new(arch(&[1, 1]), 1, 0.0, None).is_err());
    }

    #[test]
    fn arch_order_examples() {
        let a = arch(&[1, 3, 1]);
        assert!(arch_leq(&a, &a));
        assert!(arch_leq(&a, &arch(&[1, 5, 1])));
        assert!(!arch_leq(&arch(&[1, 2, 2, 1]), &arch(&[1, 9, 1])));
        assert!(Architecture::new(vec![2]).is_err());
        assert!(Architecture::new(vec![2, 0, 1]).is_err());
    }

    #[test]
    fn triangle_wave_shape() {
        let act = Activation::TRIANGLE;
        let t = 2.0;
        let (mut max, mut min) = (f64::MIN, f64::MAX);
        for i in 1..10_000 {
            let x = t * i as f64 / 10_000.0;
            let v = act.apply(x);
            if x < t / 2.0 {
                assert!(v > 0.0, "x = {x}");
            } else if x > t / 2.0 {
                assert!(v < 0.0, "x = {x}");
            }
            max = max.max(v);
            min = min.min(v);
            assert!((act.apply(x + t) - v).abs() < 1e-12);
            assert!((act.apply(x - 3.0 * t) - v).abs() < 1e-12);
        }
        assert!((max + min).abs() < 1e-9);
        assert!((max - 1.0).abs() < 1e-3);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut net = Network::zeros_with(
            arch(&[2, 3, 2, 1]),
            vec![Activation::Relu, Activation::Periodic { period: 0.7 }],
            &[(0, 3), (1, 3)],
        )
        .unwrap();
        let vals: Vec<f64> = (0..net.param_count()).map(|k| (k as f64 * 0.37).sin() / 3.0 * 1e-7f64.powi(k as i32 % 3)).collect();
        net.set_params(&vals);
        let back = Network::from_text(&net.to_text()).unwrap();
        assert_eq!(back, net);
        for (a, b) in back.params().iter().zip(net.params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(Network::from_text("garbage").is_err());
        let truncated: String = net.to_text().lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(Network::from_text(&truncated).is_err());
    }

    #[test]
    fn bias_indices_are_canonical() {
        let mut net = Network::zeros(arch(&[2, 2, 1]));
        for i in net.bias_indices() {
            *net.params_mut()[i] = 1.0;
        }
        assert_eq!(net.layers[0].bias, vec![1.0, 1.0]);
        assert_eq!(net.layers[1].bias, vec![1.0]);
        assert_eq!(net.connectivity(), 3);
    }
}
