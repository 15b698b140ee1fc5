//! Additive attention pooling over LSTM states:
//! `α = softmax_i(vᵀ tanh(W h_i + b))`, `r = Σ α_i h_i`.
//!
//! Only the real (non-PAD) steps are scored, so padding never receives
//! weight.

use rand::Rng;

use crate::numerics::{softmax, Parameter, Real, Tensor2};

#[derive(Debug, Clone, PartialEq)]
pub struct Attention<T> {
    pub w: Parameter<T>,
    pub b: Parameter<T>,
    pub v: Parameter<T>,
}

#[derive(Debug, Clone)]
pub struct AttentionCache<T> {
    /// `tanh(W h_i + b)`, `A` values per step
    projected: Vec<T>,
    pub alpha: Vec<T>,
    pub pooled: Vec<T>,
}

impl<T: Real> Attention<T> {
    pub const PARAMS: usize = 3;

    pub fn new<R: Rng>(hidden: usize, attn: usize, rng: &mut R) -> Self {
        Attention {
            w: Parameter::new(
                "attention.w",
                Tensor2::uniform(attn, hidden, 1.0 / (hidden as f64).sqrt(), rng),
                true,
            ),
            b: Parameter::new("attention.b", Tensor2::zeros(attn, 1), false),
            v: Parameter::new(
                "attention.v",
                Tensor2::uniform(attn, 1, 1.0 / (attn as f64).sqrt(), rng),
                true,
            ),
        }
    }

    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        vec![&self.w, &self.b, &self.v]
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        vec![&mut self.w, &mut self.b, &mut self.v]
    }

    /// `hiddens` holds `steps` consecutive states of width `H`.
    pub fn forward(&self, hiddens: &[T], steps: usize) -> AttentionCache<T> {
        let hidden = self.w.value.cols();
        let attn = self.w.value.rows();
        let mut projected = Vec::with_capacity(steps * attn);
        let mut scores = Vec::with_capacity(steps);
        let mut u = vec![T::zero(); attn];
        for t in 0..steps {
            u.copy_from_slice(self.b.value.as_slice());
            self.w.value.matvec_add(&hiddens[t * hidden..(t + 1) * hidden], &mut u);
            u.iter_mut().for_each(|x| *x = x.tanh());
            scores.push(
                u.iter()
                    .zip(self.v.value.as_slice())
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b),
            );
            projected.extend_from_slice(&u);
        }
        let alpha = if steps == 0 { Vec::new() } else { softmax(&scores) };
        let mut pooled = vec![T::zero(); hidden];
        for (t, &a) in alpha.iter().enumerate() {
            for (p, &h) in pooled.iter_mut().zip(&hiddens[t * hidden..(t + 1) * hidden]) {
                *p += a * h;
            }
        }
        AttentionCache {
            projected,
            alpha,
            pooled,
        }
    }

    /// Returns dL/dh for every step and adds parameter gradients into
    /// `grads` laid out as `[w, b, v]`.
    pub fn backward(&self, hiddens: &[T], cache: &AttentionCache<T>, d_pooled: &[T], grads: &mut [Tensor2<T>]) -> Vec<T> {
        let hidden = self.w.value.cols();
        let attn = self.w.value.rows();
        let steps = cache.alpha.len();
        let one = T::one();
        let mut d_hiddens = vec![T::zero(); steps * hidden];

        let d_alpha: Vec<T> = (0..steps)
            .map(|t| {
                hiddens[t * hidden..(t + 1) * hidden]
                    .iter()
                    .zip(d_pooled)
                    .fold(T::zero(), |acc, (&h, &d)| acc + h * d)
            })
            .collect();
        let weighted: T = cache.alpha.iter().zip(&d_alpha).map(|(&a, &d)| a * d).sum();

        let v = self.v.value.as_slice();
        let mut d_pre = vec![T::zero(); attn];
        for t in 0..steps {
            let a = cache.alpha[t];
            let dh = &mut d_hiddens[t * hidden..(t + 1) * hidden];
            for (x, &d) in dh.iter_mut().zip(d_pooled) {
                *x += a * d;
            }
            let d_score = a * (d_alpha[t] - weighted);
            let u = &cache.projected[t * attn..(t + 1) * attn];
            for k in 0..attn {
                grads[2].as_mut_slice()[k] += d_score * u[k];
                d_pre[k] = d_score * v[k] * (one - u[k] * u[k]);
            }
            grads[0].add_outer(&d_pre, &hiddens[t * hidden..(t + 1) * hidden], one);
            for (b, &d) in grads[1].as_mut_slice().iter_mut().zip(&d_pre) {
                *b += d;
            }
            self.w.value.matvec_t_add(&d_pre, dh);
        }
        d_hiddens
    }
}
