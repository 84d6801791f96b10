//! Block-diagonal exact solution, thermodynamics and heat-engine cycles of a
//! non-Hermitian pairing model: an NV-centre ensemble coupled to two qubit
//! pairing systems.

pub mod algebra;
pub mod blocks;
pub mod cycles;
pub mod error;
pub mod half;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod spectral;
pub mod stability;
pub mod thermo;

pub use error::{Error, Result};
pub use half::HalfInt;
