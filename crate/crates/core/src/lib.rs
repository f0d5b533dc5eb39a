//! Classical and quantum asymmetric multibaker maps.
//!
//! A particle hops on an integer lattice of unit phase-space cells. Each step
//! applies an asymmetric baker map inside the cell and then moves the particle
//! one cell right or left depending on which half of the cell it occupies.
//!
//! - [`cell`]: the D-dimensional cell Hilbert space (antiperiodic DFT, baker
//!   unitary, half projectors, momentum states).
//! - [`transport`]: Bloch reduction, lattice evolution, moments and the
//!   asymptotic directed current.
//! - [`classical`]: the classical map, exact coarse-grained distributions and
//!   Monte Carlo ensembles.
//! - [`spectral`]: eigenphase bands and level-spacing statistics.
//! - [`husimi`]: torus coherent states and Husimi distributions.

pub mod cell;
pub mod classical;
mod error;
pub mod husimi;
mod linalg;
pub mod spectral;
pub mod table;
pub mod transport;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for every cell operator.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector used for cell states.
pub type CVector = nalgebra::DVector<C64>;
