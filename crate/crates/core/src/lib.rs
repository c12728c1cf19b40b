//! Fourier-spectral exterior calculus on flat tori `T^{2m}` with a random compatible
//! almost-complex structure, the operators built from it, and the potential functionals.
//!
//! Every type is generic over [`Real`] (`f32` or `f64`); the `*64` aliases below are the
//! usual entry points.

pub mod elliptic;
pub mod error;
pub mod exterior;
pub mod functionals;
pub mod grid;
pub mod hodge;
pub mod linalg;
pub mod multi_index;
pub mod sampler;
pub mod scalar;
pub mod spectral;
pub mod structure;
pub mod symplectic;

pub use error::{Error, Result};
pub use exterior::{exterior_derivative, pointwise_apply, wedge, FormField};
pub use grid::GridSpec;
pub use scalar::Real;
pub use spectral::ScalarField;
pub use structure::{build_structure, AlmostHermitianStructure, StructureRecipe};

pub type ScalarField64 = ScalarField<f64>;
pub type FormField64 = FormField<f64>;
pub type Structure64 = AlmostHermitianStructure<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type FormField32 = FormField<f32>;
pub type Structure32 = AlmostHermitianStructure<f32>;
