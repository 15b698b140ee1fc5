//! Dense numerics substrate: a row-major matrix type, the activation and
//! loss kernels, Adam, a finite-difference gradient checker and seeded
//! random streams.
//!
//! Everything is generic over [`Real`] so the same code runs in 64-bit for
//! gradient checks and in 32-bit for training.

mod adam;
mod gradcheck;
mod ops;
pub mod rng;
mod tensor;

pub use adam::{clip_global_norm, Adam, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, Objective, ParamCheck};
pub use ops::{cross_entropy, log_sum_exp, masked_softmax, relu, sigmoid, softmax, PROB_FLOOR};
pub use tensor::{Parameter, Tensor2};

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of every tensor.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + FromStr
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self;

    fn to_f32_bits(self) -> u32;

    fn from_f32_bits(bits: u32) -> Self;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    fn to_f32_bits(self) -> u32 {
        self.to_bits()
    }

    fn from_f32_bits(bits: u32) -> Self {
        f32::from_bits(bits)
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    fn to_f32_bits(self) -> u32 {
        (self as f32).to_bits()
    }

    fn from_f32_bits(bits: u32) -> Self {
        f32::from_bits(bits) as f64
    }
}
