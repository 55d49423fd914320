//! Quantum natural policy gradients for PQC-based policies.
//!
//! The crate simulates data-reuploading circuits exactly, builds Born and
//! Softmax policies from projector expectations, estimates classical and
//! quantum Fisher information matrices, and trains the policies with Adam or
//! (generalized) natural gradients on CartPole and Acrobot.

pub mod cli;
pub mod environments;
pub mod error;
pub mod fisher;
pub mod optimizers;
pub mod policies;
pub mod simulator;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
