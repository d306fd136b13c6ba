//! Numeric substrate: dense matrices, reverse-mode differentiation,
//! nonlinearities, initialization, and first-order optimizers.

mod gradcheck;
mod init;
mod matrix;
mod optim;
mod scalar;
mod tape;

pub use gradcheck::grad_check;
pub use init::{derive_seed, glorot_uniform, seeded_rng, Prng};
pub use matrix::Matrix;
pub use optim::{OptMethod, Optimizer};
pub use scalar::Scalar;
pub use tape::{Gradients, NodeId, Tape};
