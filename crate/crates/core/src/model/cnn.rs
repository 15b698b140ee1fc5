//! Convolutional encoder: per kernel width, a valid 1-d convolution over
//! the embedded real tokens, ReLU, then global max pooling. Pooled
//! features of all widths are concatenated.

use rand::Rng;

use crate::numerics::{relu, Parameter, Real, Tensor2};
use crate::text::EmbeddingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub width: usize,
    pub w: Parameter<T>,
    pub b: Parameter<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvEncoder<T> {
    pub layers: Vec<ConvLayer<T>>,
}

#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    /// window start of the maximum per (layer, filter)
    argmax: Vec<Vec<usize>>,
    /// pre-activation maximum per (layer, filter)
    max_pre: Vec<Vec<T>>,
    pub pooled: Vec<T>,
}

impl<T: Real> ConvEncoder<T> {
    pub fn new<R: Rng>(d_emb: usize, widths: &[usize], filters: usize, rng: &mut R) -> Self {
        let layers = widths
            .iter()
            .map(|&k| ConvLayer {
                width: k,
                w: Parameter::new(
                    format!("conv{k}.w"),
                    Tensor2::uniform(filters, k * d_emb, 1.0 / ((k * d_emb) as f64).sqrt(), rng),
                    true,
                ),
                b: Parameter::new(format!("conv{k}.b"), Tensor2::zeros(filters, 1), false),
            })
            .collect();
        ConvEncoder { layers }
    }

    pub fn param_count(&self) -> usize {
        2 * self.layers.len()
    }

    pub fn max_width(&self) -> usize {
        self.layers.iter().map(|l| l.width).max().unwrap_or(0)
    }

    pub fn output_width(&self) -> usize {
        self.layers.iter().map(|l| l.w.value.rows()).sum()
    }

    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }

    fn window(embedding: &EmbeddingTable<T>, tokens: &[u32], start: usize, width: usize, buf: &mut Vec<T>) {
        buf.clear();
        for &tok in &tokens[start..start + width] {
            buf.extend_from_slice(embedding.row(tok));
        }
    }

    /// `tokens` must be at least [`max_width`](Self::max_width) long.
    pub fn forward(&self, embedding: &EmbeddingTable<T>, tokens: &[u32]) -> ConvCache<T> {
        let mut argmax = Vec::with_capacity(self.layers.len());
        let mut max_pre = Vec::with_capacity(self.layers.len());
        let mut pooled = Vec::with_capacity(self.output_width());
        let mut buf = Vec::new();
        for layer in &self.layers {
            let filters = layer.w.value.rows();
            let mut best = vec![T::neg_infinity(); filters];
            let mut best_at = vec![0usize; filters];
            let mut c = vec![T::zero(); filters];
            for start in 0..=tokens.len() - layer.width {
                Self::window(embedding, tokens, start, layer.width, &mut buf);
                c.copy_from_slice(layer.b.value.as_slice());
                layer.w.value.matvec_add(&buf, &mut c);
                for f in 0..filters {
                    // strict comparison keeps the earliest maximum
                    if c[f] > best[f] {
                        best[f] = c[f];
                        best_at[f] = start;
                    }
                }
            }
            pooled.extend(best.iter().map(|&m| relu(m)));
            argmax.push(best_at);
            max_pre.push(best);
        }
        ConvCache {
            argmax,
            max_pre,
            pooled,
        }
    }

    /// Adds gradients into `grads` laid out as `[w, b]` per layer.
    pub fn backward(
        &self,
        embedding: &EmbeddingTable<T>,
        tokens: &[u32],
        cache: &ConvCache<T>,
        d_pooled: &[T],
        grads: &mut [Tensor2<T>],
    ) {
        let mut offset = 0;
        let mut buf = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let filters = layer.w.value.rows();
            for f in 0..filters {
                let d = d_pooled[offset + f];
                if cache.max_pre[li][f] <= T::zero() || d == T::zero() {
                    continue;
                }
                Self::window(embedding, tokens, cache.argmax[li][f], layer.width, &mut buf);
                for (g, &x) in grads[2 * li].row_mut(f).iter_mut().zip(&buf) {
                    *g += d * x;
                }
                grads[2 * li + 1].as_mut_slice()[f] += d;
            }
            offset += filters;
        }
    }
}
