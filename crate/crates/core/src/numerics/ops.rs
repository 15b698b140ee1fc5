use super::Real;

/// Probabilities are floored here before taking the log in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    // split on sign so exp never overflows
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub fn relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

pub fn log_sum_exp<T: Real>(x: &[T]) -> T {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    max + x.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// Max-subtracted softmax.
pub fn softmax<T: Real>(x: &[T]) -> Vec<T> {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = x.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax over the positions where `mask` is true; masked positions get
/// exactly zero. An all-false mask yields all zeros.
pub fn masked_softmax<T: Real>(x: &[T], mask: &[bool]) -> Vec<T> {
    assert_eq!(x.len(), mask.len());
    let max = x
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = x
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { (v - max).exp() } else { T::zero() })
        .collect();
    let total: T = out.iter().copied().sum();
    if total > T::zero() {
        out.iter_mut().for_each(|v| *v /= total);
    }
    out
}

pub fn cross_entropy<T: Real>(probs: &[T], gold: usize) -> T {
    -probs[gold].max(T::lit(PROB_FLOOR)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::rng_for;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        assert_eq!(softmax(&[0.0f64, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_matches_extended_precision_reference() {
        // e^{x_i} / sum_j e^{x_j} for x = [1, 2, 3], evaluated with 30-digit arithmetic (mpmath)
        let expected = [
            0.090_030_573_170_380_457_998_022_1,
            0.244_728_471_054_797_652_472_959_6,
            0.665_240_955_774_821_889_529_018_3,
        ];
        let got = softmax(&[1.0f64, 2.0, 3.0]);
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-15, "{g} vs {e}");
        }
    }

    #[test]
    fn softmax_does_not_overflow() {
        let p = softmax(&[1000.0f64, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn masked_positions_are_exact_zero() {
        let p = masked_softmax(&[3.0f64, 1.0, 50.0], &[true, true, false]);
        assert_eq!(p[2], 0.0);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        assert_eq!(masked_softmax(&[1.0f64], &[false]), vec![0.0]);
    }

    #[test]
    fn cross_entropy_values() {
        assert!(cross_entropy(&[1.0f64, 0.0, 0.0, 0.0, 0.0], 0).abs() < 1e-15);
        let uniform = [0.2f64; 5];
        for gold in 0..5 {
            assert!((cross_entropy(&uniform, gold) - 5f64.ln()).abs() < 1e-15);
        }
        assert!((cross_entropy(&[0.7f64, 0.3], 1) - 1.203_972_804_325_936_1).abs() < 1e-15);
        // floored
        assert!((cross_entropy(&[1.0f64, 0.0], 1) - (-(1e-12f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert!((sigmoid(0.0f64) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn softmax_sums_to_one_on_random_inputs() {
        let mut rng = rng_for(11, &[]);
        for _ in 0..1000 {
            let n = rng.gen_range(1..20);
            let x64: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let s64: f64 = softmax(&x64).iter().sum();
            assert!((s64 - 1.0).abs() < 1e-12);
            let x32: Vec<f32> = x64.iter().map(|&v| v as f32).collect();
            let s32: f32 = softmax(&x32).iter().sum();
            assert!((s32 - 1.0).abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn softmax_is_shift_invariant(x in proptest::collection::vec(-30.0f64..30.0, 1..12), c in -100.0f64..100.0) {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            for (a, b) in softmax(&x).iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn log_sum_exp_matches_softmax_normalizer(x in proptest::collection::vec(-30.0f64..30.0, 1..12)) {
            let lse = log_sum_exp(&x);
            let p = softmax(&x);
            for (xi, pi) in x.iter().zip(p) {
                prop_assert!(((xi - lse).exp() - pi).abs() < 1e-12);
            }
        }
    }
}
