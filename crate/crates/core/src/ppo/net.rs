//! Dense networks with tanh hidden layers and hand-written reverse-mode gradients.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Tanh => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Multi-layer perceptron with all parameters in one flat vector.
///
/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs and is stored as its
/// row-major weight matrix (`out × in`) followed by its bias. Hidden layers use the
/// activation; the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

/// Per-layer outputs recorded by [`Mlp::forward_trace`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    layers: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        let n = param_count(&sizes);
        Self::from_params(sizes, activation, vec![0.0; n])
    }

    pub fn from_params(
        sizes: Vec<usize>,
        activation: Activation,
        params: Vec<f64>,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let expected = param_count(&sizes);
        if params.len() != expected {
            return Err(Error::Config(format!(
                "layer sizes {sizes:?} need {expected} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            sizes,
            activation,
            params,
        })
    }

    /// Orthogonal weights scaled by `hidden_gain` (and `output_gain` on the last
    /// layer), zero biases.
    pub fn orthogonal<R: Rng>(
        sizes: Vec<usize>,
        activation: Activation,
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation)?;
        let n_layers = net.n_layers();
        for l in 0..n_layers {
            let (n_in, n_out) = (net.sizes[l], net.sizes[l + 1]);
            let gain = if l + 1 == n_layers {
                output_gain
            } else {
                hidden_gain
            };
            let w = orthogonal_matrix(n_out, n_in, rng);
            let off = net.weight_offset(l);
            for (dst, src) in net.params[off..off + n_out * n_in].iter_mut().zip(w) {
                *dst = gain * src;
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weight_offset(&self, layer: usize) -> usize {
        param_count(&self.sizes[..=layer])
    }

    fn layer_view(&self, layer: usize) -> (&[f64], &[f64]) {
        let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
        let off = self.weight_offset(layer);
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
        (w, b)
    }

    pub fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Config(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut trace = Trace::default();
        self.forward_trace(input, &mut trace);
        trace.layers.pop().unwrap_or_default()
    }

    pub fn forward_trace(&self, input: &[f64], trace: &mut Trace) {
        debug_assert_eq!(input.len(), self.input_dim());
        let n_layers = self.n_layers();
        trace.layers.resize_with(n_layers + 1, Vec::new);
        trace.layers[0].clear();
        trace.layers[0].extend_from_slice(input);
        for l in 0..n_layers {
            let (w, b) = self.layer_view(l);
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (prev, rest) = trace.layers.split_at_mut(l + 1);
            let x = &prev[l];
            let out = &mut rest[0];
            out.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
                out.push(z);
            }
            if l + 1 < n_layers {
                match self.activation {
                    Activation::Tanh => out.iter_mut().for_each(|v| *v = v.tanh()),
                }
            }
        }
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let mut delta = d_out.to_vec();
        let mut d_in = Vec::new();
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.weight_offset(l);
            let x = &trace.layers[l];
            {
                let (gw, rest) = grad[off..].split_at_mut(n_in * n_out);
                let gb = &mut rest[..n_out];
                for o in 0..n_out {
                    let d = delta[o];
                    gb[o] += d;
                    if d != 0.0 {
                        for (g, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                            *g += d * xi;
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.layer_view(l);
            d_in.clear();
            d_in.resize(n_in, 0.0);
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    for (acc, wi) in d_in.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *acc += d * wi;
                    }
                }
            }
            // x holds tanh outputs of the previous layer.
            match self.activation {
                Activation::Tanh => {
                    for (acc, a) in d_in.iter_mut().zip(x) {
                        *acc *= 1.0 - a * a;
                    }
                }
            }
            std::mem::swap(&mut delta, &mut d_in);
        }
    }
}

/// `rows × cols` matrix (row-major) with orthonormal rows or columns, whichever
/// is the smaller set.
fn orthogonal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (long, short) = if rows >= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    // `short` vectors of length `long`, orthonormalised by modified Gram-Schmidt.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    let mut m = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            m[r * cols + c] = if rows >= cols {
                basis[c][r]
            } else {
                basis[r][c]
            };
        }
    }
    m
}

/// Separate policy (6 logits) and value (1 output) networks.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl ActorCritic {
    /// Orthogonal initialisation: hidden gain √2, actor head 0.01, critic head 1.
    pub fn new<R: Rng>(
        obs_dim: usize,
        hidden: &[usize],
        n_actions: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let gain = std::f64::consts::SQRT_2;
        Ok(Self {
            actor: Mlp::orthogonal(sizes(n_actions), Activation::Tanh, gain, 0.01, rng)?,
            critic: Mlp::orthogonal(sizes(1), Activation::Tanh, gain, 1.0, rng)?,
        })
    }

    pub fn from_nets(actor: Mlp, critic: Mlp) -> Result<Self> {
        if actor.input_dim() != critic.input_dim() || critic.output_dim() != 1 {
            return Err(Error::Config(
                "actor and critic must share the input size and the critic must have one output"
                    .into(),
            ));
        }
        Ok(Self { actor, critic })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_dim()
    }

    /// Logits and state value for one feature vector.
    pub fn policy_forward(&self, features: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.actor.check_input(features)?;
        let logits = self.actor.forward(features);
        let value = self.critic.forward(features)[0];
        Ok((logits, value))
    }

    pub fn is_finite(&self) -> bool {
        self.actor
            .params()
            .iter()
            .chain(self.critic.params())
            .all(|p| p.is_finite())
    }
}
