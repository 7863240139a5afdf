use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Step used by the finite-difference directional derivative.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn slope_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// How [`DenseNet::directional_derivative`] evaluates `J·d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Exact tangent propagation through every layer.
    ForwardMode,
    /// `(f(x + h·d) − f(x − h·d)) / 2h` with `h = FD_STEP`.
    FiniteDifference,
}

/// A fully connected feed-forward network.
///
/// All parameters live in one flat buffer. Layer `i` occupies a row-major
/// `(dims[i+1] × dims[i])` weight block followed by its bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

/// Layer outputs recorded by [`DenseNet::forward_trace`]; `backward` needs them.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    /// `values[0]` is the input, `values[i + 1]` the output of layer `i`.
    values: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> Option<&[f64]> {
        self.values.last().map(Vec::as_slice)
    }

    pub fn input(&self) -> Option<&[f64]> {
        self.values.first().map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), NumericsError> {
    if expected == got {
        Ok(())
    } else {
        Err(NumericsError::DimensionMismatch { what, expected, got })
    }
}

impl DenseNet {
    /// A network with every weight and bias set to zero.
    pub fn zeros(dims: &[usize], activations: &[Activation]) -> Result<Self, NumericsError> {
        if dims.len() < 2 {
            return Err(NumericsError::Architecture("need at least one layer"));
        }
        if dims.contains(&0) {
            return Err(NumericsError::Architecture("layer widths must be positive"));
        }
        if activations.len() != dims.len() - 1 {
            return Err(NumericsError::Architecture("one activation per layer"));
        }
        if activations.last() != Some(&Activation::Identity) {
            return Err(NumericsError::Architecture("final activation must be identity"));
        }
        let count = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self { dims: dims.to_vec(), activations: activations.to_vec(), params: vec![0.0; count] })
    }

    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self, NumericsError> {
        let mut net = Self::zeros(dims, activations)?;
        for layer in 0..net.layer_count() {
            let (fan_in, fan_out) = (net.dims[layer], net.dims[layer + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in net.weight_mut(layer) {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], activations: &[Activation], params: Vec<f64>) -> Result<Self, NumericsError> {
        let mut net = Self::zeros(dims, activations)?;
        check_len("parameter buffer", net.params.len(), params.len())?;
        net.params = params;
        Ok(net)
    }

    /// The identity map on `width` inputs, for tests and fixtures.
    pub fn identity(width: usize, layers: usize) -> Self {
        let dims = vec![width; layers + 1];
        let acts = vec![Activation::Identity; layers];
        let mut net = Self::zeros(&dims, &acts).expect("valid identity architecture");
        for layer in 0..layers {
            let w = net.weight_mut(layer);
            for i in 0..width {
                w[i * width + i] = 1.0;
            }
        }
        net
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("non-empty dims")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn offsets(&self, layer: usize) -> (usize, usize, usize) {
        let mut off = 0;
        for w in self.dims.windows(2).take(layer) {
            off += w[0] * w[1] + w[1];
        }
        let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
        (off, off + fan_in * fan_out, off + fan_in * fan_out + fan_out)
    }

    pub fn weight(&self, layer: usize) -> &[f64] {
        let (w, b, _) = self.offsets(layer);
        &self.params[w..b]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut [f64] {
        let (w, b, _) = self.offsets(layer);
        &mut self.params[w..b]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let (_, b, end) = self.offsets(layer);
        &self.params[b..end]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let (_, b, end) = self.offsets(layer);
        &mut self.params[b..end]
    }

    fn affine(&self, layer: usize, input: &[f64], out: &mut Vec<f64>) {
        let (w_off, b_off, _) = self.offsets(layer);
        let fan_in = self.dims[layer];
        let fan_out = self.dims[layer + 1];
        let weights = &self.params[w_off..b_off];
        let bias = &self.params[b_off..b_off + fan_out];
        out.clear();
        out.extend(weights.chunks_exact(fan_in).zip(bias).map(|(row, b)| dot(row, input) + b));
    }

    fn linear(&self, layer: usize, input: &[f64], out: &mut Vec<f64>) {
        let (w_off, b_off, _) = self.offsets(layer);
        let fan_in = self.dims[layer];
        out.clear();
        out.extend(self.params[w_off..b_off].chunks_exact(fan_in).map(|row| dot(row, input)));
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NumericsError> {
        check_len("network input", self.input_dim(), input.len())?;
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in 0..self.layer_count() {
            self.affine(layer, &current, &mut next);
            let act = self.activations[layer];
            for v in next.iter_mut() {
                *v = act.apply(*v);
            }
            core::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Forward pass that keeps every layer output for [`DenseNet::backward`].
    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace, NumericsError> {
        check_len("network input", self.input_dim(), input.len())?;
        let mut values = Vec::with_capacity(self.dims.len());
        values.push(input.to_vec());
        for layer in 0..self.layer_count() {
            let mut out = Vec::with_capacity(self.dims[layer + 1]);
            self.affine(layer, &values[layer], &mut out);
            let act = self.activations[layer];
            for v in out.iter_mut() {
                *v = act.apply(*v);
            }
            values.push(out);
        }
        Ok(ForwardTrace { values })
    }

    /// Accumulates `∂⟨output_grad, f(x)⟩/∂θ` into `param_grad` and returns the
    /// gradient with respect to the input `x` recorded in `trace`.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        param_grad: &mut [f64],
    ) -> Result<Vec<f64>, NumericsError> {
        if trace.values.is_empty() {
            return Err(NumericsError::NotCached);
        }
        if trace.values.len() != self.dims.len() || trace.values.iter().zip(&self.dims).any(|(v, d)| v.len() != *d) {
            return Err(NumericsError::StaleTrace);
        }
        check_len("output gradient", self.output_dim(), output_grad.len())?;
        check_len("parameter gradient", self.params.len(), param_grad.len())?;

        let mut delta = output_grad.to_vec();
        for layer in (0..self.layer_count()).rev() {
            let act = self.activations[layer];
            let out = &trace.values[layer + 1];
            for (d, y) in delta.iter_mut().zip(out) {
                *d *= act.slope_from_output(*y);
            }
            let input = &trace.values[layer];
            let (w_off, b_off, end) = self.offsets(layer);
            let fan_in = self.dims[layer];
            {
                let (gw, gb) = param_grad[w_off..end].split_at_mut(b_off - w_off);
                for ((row, g), d) in gw.chunks_exact_mut(fan_in).zip(gb.iter_mut()).zip(&delta) {
                    if *d != 0.0 {
                        axpy(*d, input, row);
                        *g += d;
                    }
                }
            }
            let mut prev = vec![0.0; fan_in];
            for (row, d) in self.params[w_off..b_off].chunks_exact(fan_in).zip(&delta) {
                if *d != 0.0 {
                    axpy(*d, row, &mut prev);
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// Convenience wrapper returning a fresh parameter gradient.
    pub fn param_gradient(&self, input: &[f64], output_grad: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let trace = self.forward_trace(input)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&trace, output_grad, &mut grad)?;
        Ok(grad)
    }

    /// Jacobian-vector product: returns `(f(x), J(x)·direction)`.
    pub fn jvp(&self, input: &[f64], direction: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NumericsError> {
        check_len("network input", self.input_dim(), input.len())?;
        check_len("direction", self.input_dim(), direction.len())?;
        let mut x = input.to_vec();
        let mut dx = direction.to_vec();
        let (mut y, mut dy) = (Vec::new(), Vec::new());
        for layer in 0..self.layer_count() {
            self.affine(layer, &x, &mut y);
            self.linear(layer, &dx, &mut dy);
            let act = self.activations[layer];
            for (v, dv) in y.iter_mut().zip(dy.iter_mut()) {
                *v = act.apply(*v);
                *dv *= act.slope_from_output(*v);
            }
            core::mem::swap(&mut x, &mut y);
            core::mem::swap(&mut dx, &mut dy);
        }
        Ok((x, dx))
    }

    /// `J(x)·direction` at the input recorded in `trace`, reusing its
    /// activations instead of recomputing the forward pass.
    pub fn jvp_from_trace(&self, trace: &ForwardTrace, direction: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if trace.values.is_empty() {
            return Err(NumericsError::NotCached);
        }
        if trace.values.len() != self.dims.len() {
            return Err(NumericsError::StaleTrace);
        }
        check_len("direction", self.input_dim(), direction.len())?;
        let mut dx = direction.to_vec();
        let mut dy = Vec::new();
        for layer in 0..self.layer_count() {
            self.linear(layer, &dx, &mut dy);
            let act = self.activations[layer];
            for (dv, v) in dy.iter_mut().zip(&trace.values[layer + 1]) {
                *dv *= act.slope_from_output(*v);
            }
            core::mem::swap(&mut dx, &mut dy);
        }
        Ok(dx)
    }

    pub fn directional_derivative(
        &self,
        input: &[f64],
        direction: &[f64],
        mode: DerivativeMode,
    ) -> Result<Vec<f64>, NumericsError> {
        match mode {
            DerivativeMode::ForwardMode => self.jvp(input, direction).map(|(_, t)| t),
            DerivativeMode::FiniteDifference => {
                check_len("direction", self.input_dim(), direction.len())?;
                let shifted = |sign: f64| -> Vec<f64> {
                    input.iter().zip(direction).map(|(x, d)| x + sign * FD_STEP * d).collect()
                };
                let plus = self.forward(&shifted(1.0))?;
                let minus = self.forward(&shifted(-1.0))?;
                Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * FD_STEP)).collect())
            }
        }
    }
}
