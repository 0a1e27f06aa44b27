use std::f64::consts::PI;

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix4, C64, ONE, ZERO};
use crate::model::LevelStructure;
use crate::rates::thermal_occupation;

pub type Superoperator = SMatrix<C64, 16, 16>;

/// How the λ_eff-split transition pairs enter the dissipator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneracyPolicy {
    /// One channel per ordered pair and strain operator.
    Independent,
    /// Branch-conserving-qubit and qubit-only pairs share one jump operator
    /// evaluated at the class-mean frequency.
    #[default]
    Combined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub operator: CMatrix4,
    /// s⁻¹; the operator carries the matrix-element weight.
    pub rate: f64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    /// Rotating-frame Hamiltonian, rad/s.
    pub hamiltonian: CMatrix4,
    pub channels: Vec<JumpChannel>,
    pub policy: DegeneracyPolicy,
    pub lambda_eff: f64,
    pub temperature_k: f64,
    pub omega_b: f64,
    pub omega_q: f64,
}

fn unit(i: usize, j: usize) -> CMatrix4 {
    let mut m = CMatrix4::zeros();
    m[(i, j)] = ONE;
    m
}

fn diag(d: [f64; 4]) -> CMatrix4 {
    CMatrix4::from_diagonal(&d.map(|x| C64::new(x, 0.0)).into())
}

pub fn sigma_z_b() -> CMatrix4 {
    diag([-1.0, -1.0, 1.0, 1.0])
}

pub fn sigma_z_q() -> CMatrix4 {
    diag([-1.0, 1.0, -1.0, 1.0])
}

/// ⟨σx^Q⟩ read in a frame that also follows the ±λ_eff/2 qubit shift of each branch.
pub fn sigma_x_q_co_rotating(rho: &CMatrix4, lambda_eff: f64, t: f64) -> f64 {
    let phase = C64::from_polar(1.0, -0.5 * lambda_eff * t);
    2.0 * (rho[(1, 0)] * phase + rho[(3, 2)] * phase.conj()).re
}

/// Rephase labelled state 3 so that Σ_R h_R20 h_R31* is real and non-negative.
/// A branch flip then carries qubit coherence across without a phase slip.
pub fn gauge_fix(levels: &LevelStructure) -> LevelStructure {
    let t: C64 = levels.h_elements.iter().map(|h| h[(2, 0)] * h[(3, 1)].conj()).sum();
    let mut out = levels.clone();
    if t.norm() > 0.0 {
        out.rephase(3, (t / t.norm()).conj());
    }
    out
}

/// Bath factor 2π χ |ω|³ ñ(ω); the matrix element lives in the operator.
fn bath(chi: f64, omega: f64, temperature: f64) -> f64 {
    if omega == 0.0 || chi == 0.0 {
        0.0
    } else {
        2.0 * PI * chi * omega.abs().powi(3) * thermal_occupation(omega, temperature)
    }
}

pub fn lindblad_generator(
    levels: &LevelStructure,
    chi: f64,
    temperature: f64,
    policy: DegeneracyPolicy,
) -> LindbladGenerator {
    let levels = gauge_fix(levels);
    let le = levels.lambda_eff;
    let hamiltonian = diag([0.25 * le, -0.25 * le, -0.25 * le, 0.25 * le]);
    let e = levels.energies;
    let mut channels = Vec::new();
    let mut push = |operator: CMatrix4, rate: f64, label: String| {
        if rate > 0.0 && operator.iter().any(|z| *z != ZERO) {
            channels.push(JumpChannel { operator, rate, label });
        }
    };
    for (r, h) in levels.h_elements.iter().enumerate() {
        match policy {
            DegeneracyPolicy::Independent => {
                for i in 0..4 {
                    for j in 0..4 {
                        if i != j {
                            push(unit(i, j) * h[(i, j)], bath(chi, e[i] - e[j], temperature), format!("R{r} {i}<-{j}"));
                        }
                    }
                }
            }
            DegeneracyPolicy::Combined => {
                for (name, pairs, omega) in
                    [("branch", [(0, 2), (1, 3)], levels.omega_b), ("qubit", [(0, 1), (2, 3)], levels.omega_q)]
                {
                    let up: CMatrix4 = pairs.iter().map(|&(lo, hi)| unit(hi, lo) * h[(hi, lo)]).sum();
                    let down: CMatrix4 = pairs.iter().map(|&(lo, hi)| unit(lo, hi) * h[(lo, hi)]).sum();
                    push(up, bath(chi, omega, temperature), format!("R{r} {name} up"));
                    push(down, bath(chi, -omega, temperature), format!("R{r} {name} down"));
                }
                for (i, j) in [(0, 3), (1, 2)] {
                    push(unit(j, i) * h[(j, i)], bath(chi, e[j] - e[i], temperature), format!("R{r} {j}<-{i}"));
                    push(unit(i, j) * h[(i, j)], bath(chi, e[i] - e[j], temperature), format!("R{r} {i}<-{j}"));
                }
            }
        }
    }
    LindbladGenerator {
        hamiltonian,
        channels,
        policy,
        lambda_eff: le,
        temperature_k: temperature,
        omega_b: levels.omega_b,
        omega_q: levels.omega_q,
    }
}

/// A ⊗ Bᵀ acting on row-major vectorised matrices: vec(A X B).
fn sandwich(a: &CMatrix4, b: &CMatrix4) -> Superoperator {
    Superoperator::from_fn(|r, c| a[(r / 4, c / 4)] * b[(c % 4, r % 4)])
}

impl LindbladGenerator {
    pub fn superoperator(&self) -> Superoperator {
        let id = CMatrix4::identity();
        let mi = C64::new(0.0, -1.0);
        let mut l = (sandwich(&self.hamiltonian, &id) - sandwich(&id, &self.hamiltonian)) * mi;
        for ch in &self.channels {
            let a = &ch.operator;
            let ad = a.adjoint();
            let ada = ad * a;
            let r = C64::new(ch.rate, 0.0);
            let half = C64::new(0.5 * ch.rate, 0.0);
            l += sandwich(a, &ad) * r - (sandwich(&ada, &id) + sandwich(&id, &ada)) * half;
        }
        l
    }

    /// dρ/dt for one density matrix, evaluated directly from the channels.
    pub fn apply(&self, rho: &CMatrix4) -> CMatrix4 {
        let mi = C64::new(0.0, -1.0);
        let mut out = (self.hamiltonian * rho - rho * self.hamiltonian) * mi;
        for ch in &self.channels {
            let a = &ch.operator;
            let ad = a.adjoint();
            let ada = ad * a;
            out += (a * rho * ad - (ada * rho + rho * ada) * C64::new(0.5, 0.0)) * C64::new(ch.rate, 0.0);
        }
        out
    }

    /// Upper bound on the fastest dissipative rate: max_k rate_k ‖A_k‖²_F.
    pub fn fastest_rate(&self) -> f64 {
        self.channels.iter().map(|c| c.rate * c.operator.norm_squared()).fold(0.0, f64::max)
    }
}
