//! Classical estimation of mean values `⟨0ⁿ|U†OU|0ⁿ⟩` of tensor-product observables
//! at the output of shallow quantum circuits.
//!
//! Three estimators are provided:
//!
//! * [`interp`]: relative error, by Taylor-expanding `ln f(ε)` over lightcone-connected
//!   subsets of qubits, for observables close to the identity;
//! * [`orpoly`]: additive error on `|μ|`, by estimating an output probability of a
//!   dilated circuit with a Chebyshev damping polynomial;
//! * [`mpsmc`]: additive error for nearest-neighbor circuits on a 2D grid, by Monte
//!   Carlo sampling of two matrix product states.
//!
//! [`oracle`] is an exact statevector simulator used as the reference, and
//! [`zerofree`] checks the zero-free disks that the interpolation relies on.

pub mod circuit;
pub mod error;
pub mod estimate;
pub mod interp;
pub mod mpsmc;
pub mod numerics;
pub mod oracle;
pub mod orpoly;
pub mod random;
pub mod zerofree;

pub use error::{Error, Result};
pub use estimate::{Diagnostics, ErrorKind, MeanEstimate};
