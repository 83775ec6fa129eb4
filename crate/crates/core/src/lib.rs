//! Core numerics for preparing nuclear shell-model eigenstates on a quantum
//! computer: Hamiltonians as MPOs, DMRG, staircase-circuit compilation, gate
//! decomposition and Clifford+T synthesis. Needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod compile;
pub mod dmrg;
pub mod hamiltonian;
pub mod kak;
pub mod linalg;
pub mod mpo;
pub mod mps;
pub mod rotations;
pub mod sector;
pub mod synthesis;
pub mod toy;
