//! Numerical laboratory for boundary control of the heat equation with memory.
//!
//! The crate follows the chain kernel → resolvent → modal dynamics → moment
//! problem → biorthogonal families. Every routine is generic over [`Real`];
//! `f64` drives the time-stepping, and the `Mp<BITS>` types carry the Gram
//! solves whose conditioning is the object of study.

pub mod biorth;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod moment;
pub mod scalar;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use kernel::{MemoryKernel, ResolventTriple, SampledFunction, TimeGrid};
pub use scalar::{Mp, Real};
pub use spectral::{BoundaryControl, Endpoint, Mode};
pub use transform::{ExpSum, Horizon, Poly, Rational, RationalModel};

pub type Mp128 = Mp<128>;
pub type Mp256 = Mp<256>;
pub type Mp512 = Mp<512>;
pub type Mp1024 = Mp<1024>;

pub type Grid = TimeGrid<f64>;
pub type Samples = SampledFunction<f64>;
pub type Resolvent = ResolventTriple<f64>;
