use rand::Rng;

use crate::numerics::{Parameter, Real, Tensor2};

/// Fully connected layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub w: Parameter<T>,
    pub b: Parameter<T>,
}

impl<T: Real> Dense<T> {
    pub fn new<R: Rng>(name: &str, input: usize, output: usize, rng: &mut R) -> Self {
        Dense {
            w: Parameter::new(
                format!("{name}.w"),
                Tensor2::uniform(output, input, 1.0 / (input as f64).sqrt(), rng),
                true,
            ),
            b: Parameter::new(format!("{name}.b"), Tensor2::zeros(output, 1), false),
        }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut out = self.b.value.as_slice().to_vec();
        self.w.value.matvec_add(x, &mut out);
        out
    }

    /// Accumulates `[dW, db]` into `grads` and adds dL/dx into `dx`.
    pub fn backward(&self, x: &[T], dy: &[T], grads: &mut [Tensor2<T>], dx: Option<&mut [T]>) {
        grads[0].add_outer(dy, x, T::one());
        for (g, &d) in grads[1].as_mut_slice().iter_mut().zip(dy) {
            *g += d;
        }
        if let Some(dx) = dx {
            self.w.value.matvec_t_add(dy, dx);
        }
    }
}

/// Per-feature batch normalization with running statistics for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    pub running_mean: Tensor2<T>,
    pub running_var: Tensor2<T>,
    pub momentum: f64,
    pub eps: f64,
}

/// Batch statistics plus the normalized activations of one forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub inv_std: Vec<T>,
    /// normalized inputs, one row per sample
    pub normalized: Vec<Vec<T>>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(features: usize, momentum: f64, eps: f64) -> Self {
        BatchNorm {
            gamma: Parameter::new("batchnorm.gamma", Tensor2::filled(features, 1, T::one()), false),
            beta: Parameter::new("batchnorm.beta", Tensor2::zeros(features, 1), false),
            running_mean: Tensor2::zeros(features, 1),
            running_var: Tensor2::filled(features, 1, T::one()),
            momentum,
            eps,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.value.rows()
    }

    fn affine(&self, xhat: &[T]) -> Vec<T> {
        xhat.iter()
            .zip(self.gamma.value.as_slice())
            .zip(self.beta.value.as_slice())
            .map(|((&x, &g), &b)| g * x + b)
            .collect()
    }

    /// Normalizes with the statistics of `batch` (biased variance).
    pub fn forward_train(&self, batch: &[Vec<T>]) -> (Vec<Vec<T>>, BatchNormCache<T>) {
        let f = self.features();
        let n = T::lit(batch.len() as f64);
        let mut mean = vec![T::zero(); f];
        for x in batch {
            for (m, &v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); f];
        for x in batch {
            for ((s, &v), &m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n);
        let eps = T::lit(self.eps);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let normalized: Vec<Vec<T>> = batch
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&mean)
                    .zip(&inv_std)
                    .map(|((&v, &m), &s)| (v - m) * s)
                    .collect()
            })
            .collect();
        let out = normalized.iter().map(|xh| self.affine(xh)).collect();
        (
            out,
            BatchNormCache {
                mean,
                var,
                inv_std,
                normalized,
            },
        )
    }

    pub fn forward_infer(&self, x: &[T]) -> Vec<T> {
        let eps = T::lit(self.eps);
        let xhat: Vec<T> = x
            .iter()
            .zip(self.running_mean.as_slice())
            .zip(self.running_var.as_slice())
            .map(|((&v, &m), &s)| (v - m) / (s + eps).sqrt())
            .collect();
        self.affine(&xhat)
    }

    /// Returns dL/dx per sample; adds `[dgamma, dbeta]` into `grads`.
    pub fn backward(&self, cache: &BatchNormCache<T>, dy: &[Vec<T>], grads: &mut [Tensor2<T>]) -> Vec<Vec<T>> {
        let f = self.features();
        let n = T::lit(dy.len() as f64);
        let gamma = self.gamma.value.as_slice();
        let mut sum_dxhat = vec![T::zero(); f];
        let mut sum_dxhat_xhat = vec![T::zero(); f];
        for (d, xh) in dy.iter().zip(&cache.normalized) {
            for k in 0..f {
                grads[0].as_mut_slice()[k] += d[k] * xh[k];
                grads[1].as_mut_slice()[k] += d[k];
                let dxhat = d[k] * gamma[k];
                sum_dxhat[k] += dxhat;
                sum_dxhat_xhat[k] += dxhat * xh[k];
            }
        }
        dy.iter()
            .zip(&cache.normalized)
            .map(|(d, xh)| {
                (0..f)
                    .map(|k| {
                        let dxhat = d[k] * gamma[k];
                        cache.inv_std[k] / n * (n * dxhat - sum_dxhat[k] - xh[k] * sum_dxhat_xhat[k])
                    })
                    .collect()
            })
            .collect()
    }

    /// `running = momentum * running + (1 - momentum) * batch`.
    pub fn update_running(&mut self, mean: &[T], var: &[T]) {
        let m = T::lit(self.momentum);
        let one = T::one();
        let floor = T::lit(1e-12);
        for (r, &b) in self.running_mean.as_mut_slice().iter_mut().zip(mean) {
            *r = m * *r + (one - m) * b;
        }
        for (r, &b) in self.running_var.as_mut_slice().iter_mut().zip(var) {
            *r = (m * *r + (one - m) * b).max(floor);
        }
    }
}

/// Inverted dropout mask: kept units are scaled by `1 / (1 - rate)`.
pub fn dropout_mask<T: Real, R: Rng>(len: usize, rate: f64, rng: &mut R) -> Vec<T> {
    if rate == 0.0 {
        return vec![T::one(); len];
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}
