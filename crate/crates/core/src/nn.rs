//! Small multilayer perceptron with ReLU hidden layers, a linear output layer
//! and hand-written reverse-mode gradients.
//!
//! Parameters live in one flat vector: for each layer, the weight matrix
//! (`out x in`, row-major) followed by the bias vector.

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Scratch buffers for one forward/backward pass.
#[derive(Debug, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

fn n_params(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    /// `sizes = [inputs, hidden..., outputs]`, all parameters zero.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes[1..].contains(&0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "invalid layer sizes {sizes:?}"
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params: alloc::vec![0.0; n_params(sizes)],
        })
    }

    /// He-normal hidden weights, `N(0, 1/fan_in)` output weights, zero biases.
    pub fn seeded(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let var = if l + 1 == n_layers { 1.0 } else { 2.0 } / fan_in.max(1) as f64;
            let sd = math::sqrt(var);
            for p in &mut net.params[off..off + fan_in * fan_out] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *p = sd * z;
            }
            off += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(Error::LengthMismatch {
                expected: net.params.len(),
                found: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offset of the output layer's bias vector in the flat parameters.
    pub fn output_bias_offset(&self) -> usize {
        self.params.len() - self.n_outputs()
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            acts: self.sizes.iter().map(|&s| alloc::vec![0.0; s]).collect(),
            deltas: self.sizes.iter().map(|&s| alloc::vec![0.0; s]).collect(),
        }
    }

    /// Forward pass; the raw outputs are left in the workspace and returned.
    pub fn forward<'w>(&self, x: &[f64], ws: &'w mut Workspace) -> &'w [f64] {
        let n_layers = self.sizes.len() - 1;
        ws.acts[0].copy_from_slice(x);
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let (head, tail) = ws.acts.split_at_mut(l + 1);
            let input = &head[l];
            let output = &mut tail[0];
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let mut z = b[j];
                for (wi, xi) in row.iter().zip(input.iter()) {
                    z += wi * xi;
                }
                output[j] = if l + 1 < n_layers { z.max(0.0) } else { z };
            }
            off += n_in * n_out + n_out;
        }
        &ws.acts[n_layers]
    }

    /// Raw outputs for one input, allocating a fresh workspace.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        let mut ws = self.workspace();
        Ok(self.forward(x, &mut ws).to_vec())
    }

    /// Accumulates `d loss / d params` into `grads` after a [`forward`](Self::forward)
    /// on the same workspace, given `d loss / d outputs`.
    pub fn backward(&self, ws: &mut Workspace, d_out: &[f64], grads: &mut [f64]) {
        let n_layers = self.sizes.len() - 1;
        ws.deltas[n_layers].copy_from_slice(d_out);
        let mut end = self.params.len();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = end - (n_in * n_out + n_out);
            let (gw, gb) = grads[off..end].split_at_mut(n_in * n_out);
            let w = &self.params[off..off + n_in * n_out];
            let (dhead, dtail) = ws.deltas.split_at_mut(l + 1);
            let delta = &dtail[0];
            let input = &ws.acts[l];
            for j in 0..n_out {
                let d = delta[j];
                if d == 0.0 {
                    continue;
                }
                gb[j] += d;
                let grow = &mut gw[j * n_in..(j + 1) * n_in];
                for (g, a) in grow.iter_mut().zip(input.iter()) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let prev = &mut dhead[l];
                for (i, p) in prev.iter_mut().enumerate() {
                    if input[i] <= 0.0 {
                        *p = 0.0;
                        continue;
                    }
                    let mut s = 0.0;
                    for j in 0..n_out {
                        s += w[j * n_in + i] * delta[j];
                    }
                    *p = s;
                }
            }
            end = off;
        }
    }

    /// Adds `l2 / 2 * ||W||^2` over weights (not biases) and its gradient.
    pub fn l2_penalty(&self, l2: f64, grads: &mut [f64]) -> f64 {
        if l2 == 0.0 {
            return 0.0;
        }
        let mut pen = 0.0;
        let mut off = 0;
        for w in self.sizes.windows(2) {
            let nw = w[0] * w[1];
            for (p, g) in self.params[off..off + nw]
                .iter()
                .zip(grads[off..off + nw].iter_mut())
            {
                pen += 0.5 * l2 * p * p;
                *g += l2 * p;
            }
            off += nw + w[1];
        }
        pen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Mean squared output plus a ReLU-sensitive loss, to exercise every path.
    fn loss_and_grad(net: &Mlp, xs: &[[f64; 3]], l2: f64) -> (f64, Vec<f64>) {
        let mut ws = net.workspace();
        let mut g = alloc::vec![0.0; net.params().len()];
        let mut loss = 0.0;
        for x in xs {
            let out = net.forward(x, &mut ws).to_vec();
            let mut d = alloc::vec![0.0; out.len()];
            for (k, o) in out.iter().enumerate() {
                let t = 0.3 * k as f64 - 0.2;
                loss += (o - t) * (o - t);
                d[k] = 2.0 * (o - t);
            }
            net.backward(&mut ws, &d, &mut g);
        }
        loss += net.l2_penalty(l2, &mut g);
        (loss, g)
    }

    #[test]
    fn gradients_match_central_differences() {
        let xs = [[0.5, -1.2, 0.3], [1.5, 0.2, -0.7], [-0.4, 0.9, 1.1]];
        for (seed, sizes) in [(1u64, &[3usize, 4, 2][..]), (2, &[3, 5, 3, 1]), (3, &[3, 2])] {
            let net = Mlp::seeded(sizes, seed).unwrap();
            let (_, g) = loss_and_grad(&net, &xs, 0.05);
            let h = 1e-6;
            for (i, &gi) in g.iter().enumerate() {
                let mut p = net.clone();
                p.params_mut()[i] += h;
                let (lp, _) = loss_and_grad(&p, &xs, 0.05);
                p.params_mut()[i] -= 2.0 * h;
                let (lm, _) = loss_and_grad(&p, &xs, 0.05);
                let fd = (lp - lm) / (2.0 * h);
                let denom = fd.abs().max(gi.abs()).max(1e-6);
                assert!((fd - gi).abs() / denom < 1e-4, "param {i}: fd {fd} vs {gi}");
            }
        }
    }

    #[test]
    fn no_hidden_layer_is_affine() {
        let net = Mlp::from_params(&[2, 1], alloc::vec![2.0, -1.0, 0.5]).unwrap();
        assert_eq!(net.predict(&[1.0, 3.0]).unwrap(), alloc::vec![-0.5]);
        assert!(net.predict(&[1.0]).is_err());
    }
}
