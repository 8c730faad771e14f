//! Fully connected layer stacks with a hand-written backward pass and Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "identity" => Activation::Identity,
            _ => return None,
        })
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activated output `a`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// `y = act(x · W + b)` with `W` stored as `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn new<R: Rng>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / input as f64).sqrt(),
            _ => (6.0 / (input + output) as f64).sqrt(),
        };
        let weights = Array2::from_shape_fn((input, output), |_| rng.gen_range(-limit..limit));
        Dense { weights, bias: Array1::zeros(output), activation }
    }

    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Dense { weights: Array2::zeros((input, output)), bias: Array1::zeros(output), activation }
    }

    pub fn input_width(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.weights.ncols()
    }

    pub fn pre_activation(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        z
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = self.pre_activation(x);
        let act = self.activation;
        z.mapv_inplace(|v| act.apply(v));
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer inputs and activated outputs of one batched forward pass.
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            weights: mlp.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            bias: mlp.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite())) && self.bias.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl Mlp {
    pub fn new<R: Rng>(input: usize, widths: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert_eq!(widths.len(), activations.len());
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input;
        for (&w, &a) in widths.iter().zip(activations) {
            layers.push(Dense::new(prev, w, a, rng));
            prev = w;
        }
        Mlp { layers }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(Dense::output_width).unwrap_or(0)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = self.layers[0].forward(x);
        for l in &self.layers[1..] {
            h = l.forward(h.view());
        }
        h
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for l in &self.layers {
            let next = l.forward(h.view());
            inputs.push(h);
            h = next;
        }
        ForwardCache { inputs, output: h }
    }

    /// Backpropagates `d_output` (gradient w.r.t. the activated output).
    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, d_output: Array2<f64>) -> (Gradients, Array2<f64>) {
        let mut grads = Gradients { weights: Vec::new(), bias: Vec::new() };
        let mut d_a = d_output;
        let count = self.layers.len();
        for idx in (0..count).rev() {
            let layer = &self.layers[idx];
            let a = if idx + 1 < count { &cache.inputs[idx + 1] } else { &cache.output };
            let act = layer.activation;
            Zip::from(&mut d_a).and(a).for_each(|d, &out| *d *= act.derivative_from_output(out));
            let dz = d_a;
            grads.weights.push(cache.inputs[idx].t().dot(&dz));
            grads.bias.push(dz.sum_axis(Axis(0)));
            d_a = dz.dot(&layer.weights.t());
        }
        grads.weights.reverse();
        grads.bias.reverse();
        (grads, d_a)
    }

    /// Order-sensitive FNV-1a digest over the bit patterns of all parameters.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for l in &self.layers {
            l.weights.iter().for_each(|&v| eat(v));
            l.bias.iter().for_each(|&v| eat(v));
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { learning_rate: 2e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam moments for one [`Mlp`].
#[derive(Clone, Debug)]
pub struct Adam {
    pub params: AdamParams,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(params: AdamParams, mlp: &Mlp) -> Self {
        Adam { params, step: 0, m: Gradients::zeros_like(mlp), v: Gradients::zeros_like(mlp) }
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        let AdamParams { learning_rate, beta1, beta2, epsilon } = self.params;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        let lr = learning_rate * c2.sqrt() / c1;
        for (i, layer) in mlp.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.weights)
                .and(&mut self.m.weights[i])
                .and(&mut self.v.weights[i])
                .and(&grads.weights[i])
                .for_each(|p, m, v, &g| adam_update(p, m, v, g, beta1, beta2, lr, epsilon));
            Zip::from(&mut layer.bias)
                .and(&mut self.m.bias[i])
                .and(&mut self.v.bias[i])
                .and(&grads.bias[i])
                .for_each(|p, m, v, &g| adam_update(p, m, v, g, beta1, beta2, lr, epsilon));
        }
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn adam_update(p: &mut f64, m: &mut f64, v: &mut f64, g: f64, b1: f64, b2: f64, lr: f64, eps: f64) {
    *m = b1 * *m + (1.0 - b1) * g;
    *v = b2 * *v + (1.0 - b2) * g * g;
    *p -= lr * *m / (v.sqrt() + eps);
}
