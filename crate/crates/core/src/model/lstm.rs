//! Single-layer unidirectional LSTM over embedded tokens.
//!
//! Gate pre-activations are stacked as `[input, forget, cell, output]`:
//!
//! ```text
//! z_t = W_input x_t + W_recurrent h_{t-1} + b
//! c_t = σ(z_f) ⊙ c_{t-1} + σ(z_i) ⊙ tanh(z_g)
//! h_t = σ(z_o) ⊙ tanh(c_t)
//! ```

use rand::Rng;

use crate::numerics::{sigmoid, Parameter, Real, Tensor2};
use crate::text::EmbeddingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm<T> {
    pub w_input: Parameter<T>,
    pub w_recurrent: Parameter<T>,
    pub bias: Parameter<T>,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    pub steps: usize,
    hidden: usize,
    /// activated gates, `4H` per step
    gates: Vec<T>,
    cells: Vec<T>,
    tanh_cells: Vec<T>,
    /// hidden states, `H` per step
    pub hiddens: Vec<T>,
}

impl<T: Real> LstmCache<T> {
    pub fn hidden(&self, t: usize) -> &[T] {
        &self.hiddens[t * self.hidden..(t + 1) * self.hidden]
    }
}

impl<T: Real> Lstm<T> {
    pub const PARAMS: usize = 3;

    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut bias = Tensor2::zeros(4 * hidden, 1);
        for r in hidden..2 * hidden {
            bias[(r, 0)] = T::one();
        }
        Lstm {
            w_input: Parameter::new(
                "lstm.w_input",
                Tensor2::uniform(4 * hidden, input, 1.0 / (input as f64).sqrt(), rng),
                true,
            ),
            w_recurrent: Parameter::new(
                "lstm.w_recurrent",
                Tensor2::uniform(4 * hidden, hidden, 1.0 / (hidden as f64).sqrt(), rng),
                true,
            ),
            bias: Parameter::new("lstm.bias", bias, false),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_recurrent.value.cols()
    }

    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        vec![&self.w_input, &self.w_recurrent, &self.bias]
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        vec![&mut self.w_input, &mut self.w_recurrent, &mut self.bias]
    }

    pub fn forward(&self, embedding: &EmbeddingTable<T>, tokens: &[u32]) -> LstmCache<T> {
        let h = self.hidden_size();
        let n = tokens.len();
        let mut cache = LstmCache {
            steps: n,
            hidden: h,
            gates: Vec::with_capacity(n * 4 * h),
            cells: Vec::with_capacity(n * h),
            tanh_cells: Vec::with_capacity(n * h),
            hiddens: Vec::with_capacity(n * h),
        };
        let zero = vec![T::zero(); h];
        let mut z = vec![T::zero(); 4 * h];

        for (t, &tok) in tokens.iter().enumerate() {
            z.copy_from_slice(self.bias.value.as_slice());
            self.w_input.value.matvec_add(embedding.row(tok), &mut z);
            let (h_prev, c_prev) = if t == 0 {
                (&zero[..], &zero[..])
            } else {
                (
                    &cache.hiddens[(t - 1) * h..t * h],
                    &cache.cells[(t - 1) * h..t * h],
                )
            };
            self.w_recurrent.value.matvec_add(h_prev, &mut z);

            let base = cache.gates.len();
            cache.gates.extend(z[..2 * h].iter().map(|&v| sigmoid(v)));
            cache.gates.extend(z[2 * h..3 * h].iter().map(|&v| v.tanh()));
            cache.gates.extend(z[3 * h..].iter().map(|&v| sigmoid(v)));
            let g = &cache.gates[base..base + 4 * h];

            let mut c_new = Vec::with_capacity(h);
            for k in 0..h {
                c_new.push(g[h + k] * c_prev[k] + g[k] * g[2 * h + k]);
            }
            for k in 0..h {
                let tc = c_new[k].tanh();
                cache.tanh_cells.push(tc);
                cache.hiddens.push(g[3 * h + k] * tc);
            }
            cache.cells.extend(c_new);
        }
        cache
    }

    /// Backpropagation through time. `d_hiddens` holds dL/dh_t for every
    /// step (`H` per step); gradients are added into `grads`, which is laid
    /// out as `[w_input, w_recurrent, bias]`.
    pub fn backward(
        &self,
        embedding: &EmbeddingTable<T>,
        tokens: &[u32],
        cache: &LstmCache<T>,
        d_hiddens: &[T],
        grads: &mut [Tensor2<T>],
    ) {
        let h = self.hidden_size();
        let one = T::one();
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        let mut dz = vec![T::zero(); 4 * h];
        let zero = vec![T::zero(); h];

        for t in (0..cache.steps).rev() {
            let g = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
            let tc = &cache.tanh_cells[t * h..(t + 1) * h];
            let c_prev = if t == 0 { &zero[..] } else { &cache.cells[(t - 1) * h..t * h] };
            for k in 0..h {
                let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let dh = d_hiddens[t * h + k] + dh_next[k];
                let d_o = dh * tc[k];
                let dc = dh * o * (one - tc[k] * tc[k]) + dc_next[k];
                dz[k] = dc * gg * i * (one - i);
                dz[h + k] = dc * c_prev[k] * f * (one - f);
                dz[2 * h + k] = dc * i * (one - gg * gg);
                dz[3 * h + k] = d_o * o * (one - o);
                dc_next[k] = dc * f;
            }
            grads[0].add_outer(&dz, embedding.row(tokens[t]), one);
            if t > 0 {
                grads[1].add_outer(&dz, cache.hidden(t - 1), one);
            }
            for (b, &d) in grads[2].as_mut_slice().iter_mut().zip(&dz) {
                *b += d;
            }
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            self.w_recurrent.value.matvec_t_add(&dz, &mut dh_next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::rng_for;

    #[test]
    fn forget_bias_starts_at_one() {
        let lstm: Lstm<f64> = Lstm::new(3, 2, &mut rng_for(0, &[]));
        assert_eq!(lstm.bias.value.as_slice(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_traced_single_unit() {
        // H = 1, D = 1, all weights 0.5, bias 0; x = [1, 2]
        let mut lstm: Lstm<f64> = Lstm::new(1, 1, &mut rng_for(0, &[]));
        lstm.w_input.value.fill(0.5);
        lstm.w_recurrent.value.fill(0.5);
        lstm.bias.value.fill(0.0);
        let emb = EmbeddingTable::from_tensor(Tensor2::from_vec(4, 1, vec![0.0, 0.0, 1.0, 2.0])).unwrap();
        let cache = lstm.forward(&emb, &[2, 3]);

        let s = |x: f64| 1.0 / (1.0 + (-x).exp());
        let z1 = 0.5;
        let c1 = s(z1) * z1.tanh();
        let h1 = s(z1) * c1.tanh();
        let z2 = 0.5 * 2.0 + 0.5 * h1;
        let c2 = s(z2) * c1 + s(z2) * z2.tanh();
        let h2 = s(z2) * c2.tanh();
        assert!((cache.hidden(0)[0] - h1).abs() < 1e-15);
        assert!((cache.hidden(1)[0] - h2).abs() < 1e-15);
    }
}
