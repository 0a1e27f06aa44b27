//! Phonon-limited coherence of group-IV color-center spin qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds and diagonalises the four-level spin-orbit Hamiltonian
//!   and labels its eigenstates with branch and qubit quantum numbers.
//! * [`acoustics`] solves the long-wavelength acoustic eigenproblem of the
//!   host crystal and integrates the phonon-scattering cross-section over the
//!   unit sphere.
//! * [`rates`] evaluates the closed-form transition rates and coherence times.
//! * [`dynamics`] integrates the four-level Lindblad master equation and runs
//!   Ramsey and relaxation experiments against it.
//! * [`workbench`] holds bias solving, sweeps, measurement comparison and the
//!   flat-file formats used by the command line tool.
//!
//! Frequencies are angular (rad/s) everywhere inside the library. Human-facing
//! inputs and outputs use GHz, tesla and kelvin; see [`units`].

pub mod acoustics;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod parallel;
pub mod quad;
pub mod rates;
pub mod units;
pub mod workbench;

pub use error::{Error, Result};
pub use parallel::Parallelism;
