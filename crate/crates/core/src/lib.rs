//! Numerical laboratory for Carleman estimates and two-coefficient
//! reconstruction for the Schrödinger equation on a truncated strip.

pub mod auditor;
pub mod banded;
pub mod coeffs;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod jet;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod stencil;
pub mod weights;

pub use num_complex::Complex;

/// Double-precision grid.
pub type Grid = grid::StripGrid<f64>;
/// Double-precision complex field on a grid.
pub type Field = grid::ComplexField<f64>;
pub type Coefficients = coeffs::CoefficientField<f64>;
pub type Weights = weights::CarlemanWeights<f64>;
/// Single-precision grid.
pub type Grid32 = grid::StripGrid<f32>;
pub type Field32 = grid::ComplexField<f32>;
