//! Four-level spin-orbit model of the group-IV ground state.
//!
//! States are written in the product basis `|e_g±⟩ ⊗ |↑/↓⟩` with index
//! `2 * orbit + spin`, orbit 0 = `e_g+`, spin 0 = `↑`. After diagonalisation
//! the eigenstates are relabelled `|branch, qubit⟩ → 2 * branch + qubit`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh4, kron2, pauli, CMatrix4, C64};
use crate::units::{ghz_to_angular, MU_B_GHZ_PER_T};

pub const DEFAULT_G: f64 = 2.0023;

fn default_g() -> f64 {
    DEFAULT_G
}

/// Ground-state parameters of one color center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Spin-orbit splitting, GHz.
    pub lambda_soc_ghz: f64,
    /// Orbital quenching factor.
    pub q: f64,
    #[serde(default = "default_g")]
    pub g: f64,
    /// Strain susceptibility `d`, PHz per unit strain.
    pub d_phz: f64,
    /// Strain susceptibility `f`, PHz per unit strain.
    pub f_phz: f64,
    /// Pins the mean phonon cross-section (s²) instead of integrating it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_s2: Option<f64>,
}

impl DefectParameters {
    pub fn siv() -> Self {
        Self {
            name: Some("SiV".into()),
            lambda_soc_ghz: 50.0,
            q: 0.1,
            g: DEFAULT_G,
            d_phz: 1.3,
            f_phz: -1.7,
            chi_s2: None,
        }
    }

    pub fn snv() -> Self {
        Self {
            name: Some("SnV".into()),
            lambda_soc_ghz: 830.0,
            q: 0.15,
            g: DEFAULT_G,
            d_phz: 0.787,
            f_phz: -0.562,
            chi_s2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_soc_ghz.is_finite() && self.lambda_soc_ghz > 0.0) {
            return Err(Error::invalid("lambda_soc_ghz", format!("must be positive, got {}", self.lambda_soc_ghz)));
        }
        if !self.q.is_finite() {
            return Err(Error::invalid("q", "must be finite"));
        }
        if !(1.5..=2.5).contains(&self.g) {
            return Err(Error::invalid("g", format!("{} outside [1.5, 2.5]", self.g)));
        }
        if !self.d_phz.is_finite() || !self.f_phz.is_finite() {
            return Err(Error::invalid("d_phz/f_phz", "must be finite"));
        }
        if let Some(chi) = self.chi_s2 {
            if !(chi.is_finite() && chi >= 0.0) {
                return Err(Error::invalid("chi_s2", format!("must be non-negative, got {chi}")));
            }
        }
        Ok(())
    }
}

/// Temperature, magnetic field and static Eg strain seen by the defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasConditions {
    pub temperature_k: f64,
    /// Field in tesla, defect frame (z along the D3d axis).
    pub b_field_t: [f64; 3],
    /// (α_Egx, α_Egy) in GHz.
    pub strain_ghz: [f64; 2],
}

impl BiasConditions {
    /// Field given by magnitude, polar angle from the D3d axis and azimuth;
    /// strain by magnitude and azimuth in the Egx/Egy plane.
    pub fn from_angles(
        temperature_k: f64,
        b_tesla: f64,
        theta_deg: f64,
        phi_deg: f64,
        strain_ghz: f64,
        strain_azimuth_deg: f64,
    ) -> Self {
        let b = field_vector(b_tesla, theta_deg, phi_deg);
        let psi = strain_azimuth_deg.to_radians();
        Self {
            temperature_k,
            b_field_t: [b.x, b.y, b.z],
            strain_ghz: [strain_ghz * psi.cos(), strain_ghz * psi.sin()],
        }
    }

    pub fn b_field(&self) -> Vector3<f64> {
        Vector3::from(self.b_field_t)
    }

    pub fn with_field(mut self, b: Vector3<f64>) -> Self {
        self.b_field_t = [b.x, b.y, b.z];
        self
    }

    pub fn with_temperature(mut self, temperature_k: f64) -> Self {
        self.temperature_k = temperature_k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k.is_finite() && self.temperature_k >= 0.0) {
            return Err(Error::invalid("temperature_k", format!("must be >= 0, got {}", self.temperature_k)));
        }
        if self.b_field_t.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("b_field_t", "must be finite"));
        }
        if self.strain_ghz.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("strain_ghz", "must be finite"));
        }
        Ok(())
    }
}

/// Unit-less direction from polar/azimuth angles in degrees, scaled by `magnitude`.
pub fn field_vector(magnitude: f64, theta_deg: f64, phi_deg: f64) -> Vector3<f64> {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    Vector3::new(st * cp, st * sp, ct) * magnitude
}

/// Spin-orbit, strain, spin Zeeman and orbital Zeeman terms in rad/s.
pub fn build_hamiltonian(defect: &DefectParameters, bias: &BiasConditions) -> Result<CMatrix4> {
    defect.validate()?;
    bias.validate()?;
    let id = pauli::identity();
    let (sx, sy, sz) = (pauli::x(), pauli::y(), pauli::z());
    let re = |x: f64| C64::new(x, 0.0);

    let lam = ghz_to_angular(defect.lambda_soc_ghz);
    let [ax, ay] = bias.strain_ghz.map(ghz_to_angular);
    let b = bias.b_field();
    // μ_B B in rad/s
    let mu = |field: f64| ghz_to_angular(MU_B_GHZ_PER_T * field);

    let mut h = kron2(&sz, &sz) * re(lam / 2.0);
    h -= kron2(&sx, &id) * re(ax);
    h -= kron2(&sy, &id) * re(ay);
    h += (kron2(&id, &sx) * re(mu(b.x)) + kron2(&id, &sy) * re(mu(b.y)) + kron2(&id, &sz) * re(mu(b.z)))
        * re(defect.g / 2.0);
    h += kron2(&sz, &id) * re(defect.q * mu(b.z));
    Ok(h)
}

/// Strain operators ĥ_Egx = −σx⊗1 and ĥ_Egy = −σy⊗1 in the product basis.
pub fn strain_operators() -> [CMatrix4; 2] {
    let id = pauli::identity();
    [-kron2(&pauli::x(), &id), -kron2(&pauli::y(), &id)]
}

/// Labelled eigen-structure of the four-level Hamiltonian.
#[derive(Debug, Clone)]
pub struct LevelStructure {
    /// Energies in label order, rad/s, trace removed.
    pub energies: [f64; 4],
    /// Eigenvectors as columns, in label order.
    pub states: CMatrix4,
    /// Position of each labelled state in the ascending eigenvalue list.
    pub eigen_index: [usize; 4],
    /// Weight of each labelled state in the zero-field lower doublet.
    pub lower_overlap: [f64; 4],
    pub omega_q: f64,
    pub omega_b: f64,
    /// Signed; consumers use the magnitude.
    pub lambda_eff: f64,
    /// ⟨i|ĥ_R|j⟩ for R = Egx, Egy.
    pub h_elements: [CMatrix4; 2],
}

impl LevelStructure {
    /// (branch bit, qubit bit) of labelled state `n`.
    pub fn label(n: usize) -> (usize, usize) {
        (n / 2, n % 2)
    }

    /// Energies rebuilt from (ω_Q, ω_B, λ_eff).
    pub fn reconstructed_energies(&self) -> [f64; 4] {
        energies_from_parameters(self.omega_q, self.omega_b, self.lambda_eff)
    }

    /// Multiply labelled state `n` by a phase. Energies and class weights are
    /// unchanged; off-diagonal matrix elements pick up the phase.
    pub fn rephase(&mut self, n: usize, phase: C64) {
        let col = self.states.column(n) * phase;
        self.states.set_column(n, &col);
        let ops = strain_operators();
        for (h, op) in self.h_elements.iter_mut().zip(ops.iter()) {
            *h = self.states.adjoint() * op * self.states;
        }
    }
}

/// E_n = ±ω_Q/2 ± ω_B/2 ± λ_eff/4 for the labelled states.
pub fn energies_from_parameters(omega_q: f64, omega_b: f64, lambda_eff: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (n, e) in out.iter_mut().enumerate() {
        let (branch, qubit) = LevelStructure::label(n);
        let zb = if branch == 1 { 1.0 } else { -1.0 };
        let zq = if qubit == 1 { 1.0 } else { -1.0 };
        *e = 0.5 * omega_q * zq + 0.5 * omega_b * zb + 0.25 * lambda_eff * zq * zb;
    }
    out
}

/// Inverse of [`energies_from_parameters`]: returns (ω_Q, ω_B, λ_eff).
pub fn effective_parameters(energies: &[f64; 4]) -> (f64, f64, f64) {
    let [e0, e1, e2, e3] = *energies;
    let omega_b = ((e2 + e3) - (e0 + e1)) / 2.0;
    let omega_q = ((e1 - e0) + (e3 - e2)) / 2.0;
    let lambda_eff = (e3 - e2) - (e1 - e0);
    (omega_q, omega_b, lambda_eff)
}

const LABEL_AMBIGUITY: f64 = 1e-6;

/// Diagonalise `h` and label eigenstates by overlap with the zero-field branches.
pub fn diagonalize_and_label(
    h: &CMatrix4,
    defect: &DefectParameters,
    bias: &BiasConditions,
) -> Result<LevelStructure> {
    let zero_field = BiasConditions { b_field_t: [0.0; 3], ..*bias };
    let h0 = build_hamiltonian(defect, &zero_field)?;
    let (_, v0) = eigh4(&h0);
    let lower = v0.columns(0, 2);
    let projector = lower * lower.adjoint();

    let (values, vectors) = eigh4(h);
    let overlaps: [f64; 4] = std::array::from_fn(|k| {
        let v = vectors.column(k);
        (v.adjoint() * projector * v)[(0, 0)].re
    });

    let mut by_overlap = [0usize, 1, 2, 3];
    by_overlap.sort_by(|&a, &b| overlaps[b].total_cmp(&overlaps[a]).then(a.cmp(&b)));
    let second = overlaps[by_overlap[1]];
    let third = overlaps[by_overlap[2]];
    if (second - 0.5).abs() < LABEL_AMBIGUITY && (third - 0.5).abs() < LABEL_AMBIGUITY {
        return Err(Error::DegenerateLabeling { overlaps });
    }
    let mut lower_pair = [by_overlap[0], by_overlap[1]];
    let mut upper_pair = [by_overlap[2], by_overlap[3]];
    lower_pair.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    upper_pair.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigen_index = [lower_pair[0], lower_pair[1], upper_pair[0], upper_pair[1]];

    let mean = values.iter().sum::<f64>() / 4.0;
    let energies = eigen_index.map(|k| values[k] - mean);
    let lower_overlap = eigen_index.map(|k| overlaps[k]);
    let mut states = CMatrix4::zeros();
    for (col, &k) in eigen_index.iter().enumerate() {
        states.set_column(col, &vectors.column(k));
    }
    let ops = strain_operators();
    let h_elements = [
        states.adjoint() * ops[0] * states,
        states.adjoint() * ops[1] * states,
    ];
    let (omega_q, omega_b, lambda_eff) = effective_parameters(&energies);
    Ok(LevelStructure {
        energies,
        states,
        eigen_index,
        lower_overlap,
        omega_q,
        omega_b,
        lambda_eff,
        h_elements,
    })
}

/// Convenience: build and label in one call.
pub fn levels(defect: &DefectParameters, bias: &BiasConditions) -> Result<LevelStructure> {
    let h = build_hamiltonian(defect, bias)?;
    diagonalize_and_label(&h, defect, bias)
}

/// Transition classes by which quantum numbers flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionClass {
    /// Qubit flip within a branch.
    Qubit,
    /// Branch flip conserving the qubit.
    Branch,
    /// Branch and qubit flip together.
    BranchQubit,
}

impl TransitionClass {
    pub fn of(i: usize, j: usize) -> Option<Self> {
        let (bi, qi) = LevelStructure::label(i);
        let (bj, qj) = LevelStructure::label(j);
        match (bi != bj, qi != qj) {
            (false, false) => None,
            (false, true) => Some(TransitionClass::Qubit),
            (true, false) => Some(TransitionClass::Branch),
            (true, true) => Some(TransitionClass::BranchQubit),
        }
    }

    /// The two unordered pairs belonging to the class.
    pub fn pairs(self) -> [(usize, usize); 2] {
        match self {
            TransitionClass::Qubit => [(0, 1), (2, 3)],
            TransitionClass::Branch => [(0, 2), (1, 3)],
            TransitionClass::BranchQubit => [(0, 3), (1, 2)],
        }
    }

    pub const ALL: [TransitionClass; 3] =
        [TransitionClass::Qubit, TransitionClass::Branch, TransitionClass::BranchQubit];
}

/// Σ_R |h_Rij|² summed over each class, both orderings of each pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassWeights {
    pub qubit: f64,
    pub branch: f64,
    pub branch_qubit: f64,
}

impl ClassWeights {
    pub fn get(&self, class: TransitionClass) -> f64 {
        match class {
            TransitionClass::Qubit => self.qubit,
            TransitionClass::Branch => self.branch,
            TransitionClass::BranchQubit => self.branch_qubit,
        }
    }

    pub fn total(&self) -> f64 {
        self.qubit + self.branch + self.branch_qubit
    }
}

#[derive(Debug, Clone)]
pub struct TransitionElements {
    /// |h_Rij|² per R.
    pub per_r: [[[f64; 4]; 4]; 2],
    /// Σ_R |h_Rij|².
    pub summed: [[f64; 4]; 4],
    pub classes: ClassWeights,
    /// Σ_R Σ_i |h_Rii|².
    pub diagonal: f64,
}

impl TransitionElements {
    pub fn class_of(i: usize, j: usize) -> Option<TransitionClass> {
        TransitionClass::of(i, j)
    }
}

pub fn transition_elements(levels: &LevelStructure) -> TransitionElements {
    let per_r: [[[f64; 4]; 4]; 2] =
        std::array::from_fn(|r| std::array::from_fn(|i| std::array::from_fn(|j| levels.h_elements[r][(i, j)].norm_sqr())));
    let summed: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| per_r[0][i][j] + per_r[1][i][j]));
    let mut classes = ClassWeights::default();
    let mut diagonal = 0.0;
    for (i, row) in summed.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            match TransitionClass::of(i, j) {
                None => diagonal += w,
                Some(TransitionClass::Qubit) => classes.qubit += w,
                Some(TransitionClass::Branch) => classes.branch += w,
                Some(TransitionClass::BranchQubit) => classes.branch_qubit += w,
            }
        }
    }
    TransitionElements { per_r, summed, classes, diagonal }
}
