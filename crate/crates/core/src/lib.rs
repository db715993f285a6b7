//! Stationary-wavelet training losses and toy-scale attention blocks for image
//! super-resolution.
//!
//! The crate is organised by capability:
//!
//! - [`tensor`]: dense rank-4 tensors, convolution, pixel shuffle and a reverse-mode tape
//! - [`wavelet`]: undecimated (à trous) 2-D wavelet transform with its inverse and adjoint
//! - [`loss`]: RGB l1 plus weighted subband l1 on the luma channel, with analytic gradients
//! - [`attention`]: window, channel, overlapping cross and hashed non-local sparse attention
//! - [`model`]: a small super-resolution network built from those blocks, with Adam training
//! - [`metrics`]: PSNR and SSIM under the usual SR benchmark conventions
//! - [`harness`]: PNG I/O, bicubic degradation, datasets, evaluation and training drivers
//!
//! Each capability has a runnable program under `examples/`; `cargo run --example` lists them.

pub mod attention;
pub mod error;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod params;
pub mod tensor;
pub mod wavelet;

pub use error::{Error, Result};
pub use tensor::{Boundary, Tensor};
