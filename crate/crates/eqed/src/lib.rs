//! Effective-QED Hamiltonians in lattice and momentum ("rellium") form,
//! Jordan-Wigner mapping, Trotter-Suzuki circuit compilation, dense
//! verification and fault-tolerant cost estimates.

pub mod fermion;
pub mod lattice;
pub mod linalg;
pub mod mc;
pub mod momentum;
pub mod pauli;
pub mod resources;
pub mod spinor;
pub mod stateprep;
pub mod trotter;
pub mod verify;
