//! Numerical toolkit for the nonlocal equation `(-Δ+m²)^s φ = Vφ`.
//!
//! Fields live on periodic grids; the nonlocal operators act as Fourier
//! multipliers. Around that sit quadrature kernels, localization cutoffs,
//! explicit smoothing bounds, a ground-state solver and a derivative-growth
//! diagnostic.

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod localization;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, MultiIndex, Point, Transform};
pub use kernels::{HProfile, KernelQuadratureConfig, ProfileMode};
pub use spectral::{Flavor, OperatorSpec};
