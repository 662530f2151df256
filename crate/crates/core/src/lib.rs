//! Exact operator-spreading computations for long-range spin lattices and
//! the rigorous polynomial light-cone bounds they are checked against.

pub mod bounds;
pub mod cluster;
pub mod dense;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod hamiltonian;
pub mod lattice;
pub mod locality;
pub mod pauli;

pub use dense::{DenseOperator, C64, DEFAULT_DENSE_CUTOFF};
pub use error::{Error, Result};
pub use hamiltonian::{DerivedConstants, Hamiltonian, ModelSpec};
pub use lattice::{Boundary, GeometricConstants, Lattice, Region};
pub use pauli::{Letter, PauliString, Phase};
