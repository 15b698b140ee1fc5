//! Comparison systems: bad-word-ratio thresholds, a linear SVM over
//! lexical and metadata features, and a convolutional encoder variant.

pub mod cnn;
pub mod svm;
pub mod threshold;

pub use cnn::{cnn_forward, CnnConfig};
pub use svm::{svm_fit, LinearOvr, SparseVec, SvmConfig, SvmFeatureMap, SvmModel};
pub use threshold::{candidate_thresholds, fit_thresholds, threshold_predict, ThresholdModel};
