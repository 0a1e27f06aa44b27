//! Four-level Lindblad simulator in the frame rotating at ω_Q and ω_B.
//!
//! Density matrices are vectorised row-major, `vec(ρ)[4i + j] = ρ_ij`.

mod evolve;
mod experiments;
mod generator;

pub use evolve::{evolve, evolve_sampled, max_step, Propagator, Trajectory, TrajectoryStats};
pub use experiments::{
    branch_relaxation, extract_decay_time, qubit_relaxation, ramsey_decay_time, ramsey_experiment, ramsey_initial_state,
    DecayFit, RamseyResult, RelaxationResult,
};
pub use generator::{
    gauge_fix, lindblad_generator, sigma_x_q_co_rotating, sigma_z_b, sigma_z_q, DegeneracyPolicy, JumpChannel,
    LindbladGenerator, Superoperator,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh4, CMatrix4, C64};

/// A 4×4 density matrix in the labelled eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix(pub CMatrix4);

impl DensityMatrix {
    pub fn new(m: CMatrix4) -> Result<Self> {
        let rho = DensityMatrix(m);
        if (rho.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("rho", format!("trace {} differs from 1", rho.trace())));
        }
        if rho.hermiticity_defect() > 1e-12 {
            return Err(Error::invalid("rho", "not Hermitian"));
        }
        if rho.min_eigenvalue() < -1e-9 {
            return Err(Error::invalid("rho", "not positive semidefinite"));
        }
        Ok(rho)
    }

    pub fn diagonal(p: [f64; 4]) -> Result<Self> {
        Self::new(CMatrix4::from_diagonal(&p.map(|x| C64::new(x, 0.0)).into()))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        eigh4(&h).0[0]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn expectation(&self, op: &CMatrix4) -> f64 {
        (op * self.0).trace().re
    }

    pub fn populations(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }

    pub(crate) fn to_vec(self) -> nalgebra::SVector<C64, 16> {
        nalgebra::SVector::from_fn(|k, _| self.0[(k / 4, k % 4)])
    }

    pub(crate) fn from_vec(v: &nalgebra::SVector<C64, 16>) -> Self {
        DensityMatrix(CMatrix4::from_fn(|i, j| v[4 * i + j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DensityMatrix::diagonal([0.25; 4]).is_ok());
        assert!(DensityMatrix::diagonal([0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(DensityMatrix::diagonal([1.5, -0.5, 0.0, 0.0]).is_err());
        let mut m = CMatrix4::identity() * C64::new(0.25, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn vectorisation_round_trip() {
        let mut m = CMatrix4::identity() * C64::new(0.25, 0.0);
        m[(0, 3)] = C64::new(0.1, 0.05);
        m[(3, 0)] = C64::new(0.1, -0.05);
        let rho = DensityMatrix::new(m).unwrap();
        let v = rho.to_vec();
        assert_eq!(v[3], m[(0, 3)]);
        assert_eq!(DensityMatrix::from_vec(&v), rho);
        assert!((rho.purity() - (4.0 * 0.0625 + 2.0 * 0.0125)).abs() < 1e-15);
    }
}
