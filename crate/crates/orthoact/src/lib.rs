//! Learnable activation functions built from orthonormal bases (probabilist
//! Hermite polynomials, Fourier/cosine series) and tropical polynomials,
//! together with their variance-preserving initializations, closed-form
//! second moments, interpolation-based fitting to classical activations, and
//! a small dense network for end-to-end checks.

pub mod activations;
pub mod basis;
pub mod bench;
pub mod data;
pub mod fitting;
pub mod gains;
pub mod nn;
pub mod rng;

pub use activations::{
    Activation, ClassicalKind, FourierActivation, HermiteActivation, TropicalActivation,
    TropicalPolynomial, TropicalRationalActivation,
};
pub use gains::{GainError, GainReport, InputDist};
