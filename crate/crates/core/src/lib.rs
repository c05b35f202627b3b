//! Order-restricted soft labels for mixture-augmented knowledge distillation.
//!
//! A mixed sample `x̃ = A(x_i, x_j, γ)` carries the hard label
//! `ỹ = γ·y_i + (1 − γ)·y_j`. Its teacher soft labels are expected to keep the
//! same order: the first original label above the second, and the second above
//! every other label. This crate provides:
//!
//! * [`isotonic`]: the least-squares projection of a soft-label vector onto
//!   that order (a star tree with one extra edge), solved with a single sort,
//!   plus an exhaustive oracle.
//! * [`penalty`]: the linear-time hinge relaxation applied to student logits.
//! * [`losses`]: KD, KD-aug, KD-i and KD-p objectives with their gradients.
//! * [`augment`]: Mixup, CutMix and the `Beta(a, a)` mixing sampler.
//! * [`diagnostics`]: Kendall's τ over known pairs, top-2 containment and
//!   partial calibration of a batch.
//! * [`harness`]: a small MLP with manual backpropagation used to run
//!   distillation end to end on synthetic data.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod augment;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod isotonic;
pub mod labels;
pub mod losses;
pub mod penalty;

pub use error::{Error, Result};
pub use labels::{
    build_order_tree, expand_hard_label, LabelDistribution, MixedHardLabel, OrderTree,
    SampleTensor, Space,
};
