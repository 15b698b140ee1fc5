use super::Parameter;

/// A deterministic scalar function of a parameter set with a hand-derived
/// gradient.
pub trait Objective {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>>;

    /// Returns the loss. With `with_grad`, also overwrites every parameter
    /// gradient with the analytic derivative.
    fn evaluate(&mut self, with_grad: bool) -> f64;
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub entries: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tolerance: f64,
    /// Smallest derivative the difference quotient resolves: four ulps of
    /// the loss over `2h`.
    pub resolution: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares analytic gradients against central differences
/// `(f(θ+h) − f(θ−h)) / 2h`, entry by entry.
///
/// Roundoff in the two loss evaluations limits the difference quotient to
/// an absolute accuracy of about `resolution`. The relative error of an
/// entry is therefore taken against at least `resolution / tolerance`, so
/// derivatives too small to be resolved are held to an absolute error of
/// `resolution` instead.
pub fn grad_check<O: Objective>(objective: &mut O, h: f64, tolerance: f64) -> GradCheckReport {
    let loss = objective.evaluate(true);
    let resolution = 4.0 * f64::EPSILON * loss.abs().max(f64::MIN_POSITIVE) / (2.0 * h);
    let floor = (resolution / tolerance).max(1e-300);
    let analytic: Vec<Vec<f64>> = objective
        .parameters_mut()
        .iter()
        .map(|p| p.grad.as_slice().to_vec())
        .collect();
    let names: Vec<String> = objective.parameters_mut().iter().map(|p| p.name.clone()).collect();

    let mut params = Vec::with_capacity(analytic.len());
    for (pi, grads) in analytic.iter().enumerate() {
        let mut check = ParamCheck {
            name: names[pi].clone(),
            entries: grads.len(),
            max_rel_error: 0.0,
            max_abs_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for (j, &a) in grads.iter().enumerate() {
            let original = objective.parameters_mut()[pi].value.as_slice()[j];
            objective.parameters_mut()[pi].value.as_mut_slice()[j] = original + h;
            let plus = objective.evaluate(false);
            objective.parameters_mut()[pi].value.as_mut_slice()[j] = original - h;
            let minus = objective.evaluate(false);
            objective.parameters_mut()[pi].value.as_mut_slice()[j] = original;

            let n = (plus - minus) / (2.0 * h);
            let err = relative_error(a, n, floor);
            check.max_abs_error = check.max_abs_error.max((a - n).abs());
            if err > check.max_rel_error || !err.is_finite() {
                check.max_rel_error = if err.is_finite() { err } else { f64::INFINITY };
                check.worst_index = j;
                check.analytic = a;
                check.numeric = n;
            }
        }
        params.push(check);
    }
    GradCheckReport {
        params,
        tolerance,
        resolution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::rng_for;
    use crate::numerics::Tensor2;

    /// y = W x, loss = ½‖y‖², dL/dW = y xᵀ.
    struct LinearMap {
        w: Parameter<f64>,
        x: Vec<f64>,
    }

    impl Objective for LinearMap {
        fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
            vec![&mut self.w]
        }

        fn evaluate(&mut self, with_grad: bool) -> f64 {
            let y = self.w.value.matvec(&self.x);
            if with_grad {
                self.w.zero_grad();
                self.w.grad.add_outer(&y, &self.x, 1.0);
            }
            0.5 * y.iter().map(|v| v * v).sum::<f64>()
        }
    }

    struct Constant {
        p: Parameter<f64>,
    }

    impl Objective for Constant {
        fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
            vec![&mut self.p]
        }

        fn evaluate(&mut self, with_grad: bool) -> f64 {
            if with_grad {
                self.p.zero_grad();
            }
            42.0
        }
    }

    #[test]
    fn linear_map_matches_closed_form() {
        let mut rng = rng_for(3, &[]);
        let mut obj = LinearMap {
            w: Parameter::new("w", Tensor2::uniform(3, 4, 1.0, &mut rng), true),
            x: vec![0.5, -1.0, 2.0, 0.25],
        };
        let report = grad_check(&mut obj, 1e-5, 1e-9);
        assert!(report.max_rel_error() < 1e-9, "{report:?}");
        // the parameters are restored after the check
        let y = obj.w.value.matvec(&obj.x);
        obj.evaluate(true);
        assert_eq!(obj.w.grad[(1, 2)], y[1] * obj.x[2]);
    }

    #[test]
    fn constant_function_has_no_zero_division() {
        let mut obj = Constant {
            p: Parameter::new("c", Tensor2::column(vec![1.0, 2.0]), false),
        };
        let report = grad_check(&mut obj, 1e-5, 1e-5);
        assert_eq!(report.max_rel_error(), 0.0);
        assert!(report.passed());
    }

    #[test]
    fn wrong_gradient_is_reported() {
        struct Wrong(Parameter<f64>);
        impl Objective for Wrong {
            fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
                vec![&mut self.0]
            }
            fn evaluate(&mut self, with_grad: bool) -> f64 {
                let x = self.0.value[(0, 0)];
                if with_grad {
                    self.0.grad[(0, 0)] = 3.0 * x; // should be 2x
                }
                x * x
            }
        }
        let mut obj = Wrong(Parameter::new("w", Tensor2::column(vec![1.5]), true));
        let report = grad_check(&mut obj, 1e-5, 1e-5);
        assert!(!report.passed());
        let worst = report.worst().unwrap();
        assert_eq!(worst.name, "w");
        assert!((worst.numeric - 3.0).abs() < 1e-8);
    }
}
