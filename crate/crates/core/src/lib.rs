//! Numerical validation of the modulation (Whitham) approximation for wave
//! trains of a Ginzburg-Landau equation coupled to a conservation law.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod correctors;
pub mod error;
pub mod harness;
pub mod linear_analysis;
pub mod model;
pub mod spectral;
pub mod wme;

pub use algebra::{FieldAlgebra, Jet};
pub use error::{Error, Result};
pub use model::{AbState, GglParams, PolarState, WaveTrain};
pub use spectral::{cutoff_chi, FieldKind, GevreyParams, Grid1D, MultiplierSpec, SpectralField};
