//! Space-time video super-resolution with a residual-attention generator
//! and a two-branch (texture and motion) least-squares GAN discriminator.

pub mod ablation;
pub mod attention;
pub mod baseline;
pub mod cli;
pub mod data;
pub mod discriminator;
pub mod error;
pub mod generator;
pub mod gradsuite;
pub mod layers;
pub mod metrics;
pub mod param;
pub mod pipeline;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
