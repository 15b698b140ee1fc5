use super::{Parameter, Real, Tensor2};

/// First and second moment estimates for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Tensor2<T>,
    pub v: Tensor2<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    states: Vec<AdamState<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            states: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn states(&self) -> &[AdamState<T>] {
        &self.states
    }

    /// One bias-corrected update using the gradients currently stored in
    /// `params`. The parameter list must be passed in the same order on
    /// every call.
    pub fn step(&mut self, params: &mut [&mut Parameter<T>]) {
        if self.states.is_empty() {
            self.states = params
                .iter()
                .map(|p| AdamState {
                    m: Tensor2::zeros(p.value.rows(), p.value.cols()),
                    v: Tensor2::zeros(p.value.rows(), p.value.cols()),
                })
                .collect();
        }
        assert_eq!(self.states.len(), params.len(), "parameter list changed between Adam steps");
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::lit(self.beta1);
        let b2 = T::lit(self.beta2);
        let one = T::one();
        let correction1 = T::lit(1.0 - self.beta1.powi(t));
        let correction2 = T::lit(1.0 - self.beta2.powi(t));
        let lr = T::lit(self.learning_rate);
        let eps = T::lit(self.epsilon);

        for (p, state) in params.iter_mut().zip(self.states.iter_mut()) {
            let grads = p.grad.as_slice();
            let values = p.value.as_mut_slice();
            let ms = state.m.as_mut_slice();
            let vs = state.v.as_mut_slice();
            for i in 0..grads.len() {
                let g = grads[i];
                ms[i] = b1 * ms[i] + (one - b1) * g;
                vs[i] = b2 * vs[i] + (one - b2) * g * g;
                let m_hat = ms[i] / correction1;
                let v_hat = vs[i] / correction2;
                values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm<T: Real>(params: &mut [&mut Parameter<T>], max_norm: f64) -> f64 {
    let norm = params
        .iter()
        .map(|p| p.grad.sum_squares().to_f64().unwrap_or(f64::INFINITY))
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = T::lit(max_norm / norm);
        for p in params.iter_mut() {
            p.grad.as_mut_slice().iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}
