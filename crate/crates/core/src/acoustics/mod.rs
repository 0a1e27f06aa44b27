//! Acoustic phonons of a cubic host and the spin-phonon cross-section.

mod cross_section;
mod elastic;
mod sphere;

pub use cross_section::{
    frame_sensitivity, integrand, scattering_cross_section, strain_susceptibility, ChiOptions, CrossSections,
    FrameSensitivity, CONVERGENCE_LADDER,
};
pub use elastic::{acoustic_modes, christoffel, rotate_stiffness, AcousticModeSet, StiffnessTensor};
pub use sphere::{sphere_quadrature, SphereRule, SUPPORTED_ORDERS};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FRAME_TOL: f64 = 1e-12;

/// Defect axes expressed in crystal coordinates. Rows are x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct DefectFrame {
    rows: [[f64; 3]; 3],
}

impl Default for DefectFrame {
    /// z ∥ [111], x ∥ [11-2], y ∥ [-110].
    fn default() -> Self {
        let s6 = 6f64.sqrt();
        let s2 = 2f64.sqrt();
        let s3 = 3f64.sqrt();
        Self {
            rows: [
                [1.0 / s6, 1.0 / s6, -2.0 / s6],
                [-1.0 / s2, 1.0 / s2, 0.0],
                [1.0 / s3, 1.0 / s3, 1.0 / s3],
            ],
        }
    }
}

impl DefectFrame {
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self> {
        let m = Matrix3::from_row_slice(&rows.concat());
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFrame("non-finite axis component".into()));
        }
        let dev = (m * m.transpose() - Matrix3::identity()).abs().max();
        if dev > FRAME_TOL {
            return Err(Error::InvalidFrame(format!("axes not orthonormal (deviation {dev:e})")));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > FRAME_TOL {
            return Err(Error::InvalidFrame(format!("determinant {det} is not +1")));
        }
        Ok(Self { rows })
    }

    pub fn identity() -> Self {
        Self { rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_row_slice(&self.rows.concat())
    }

    /// The same frame turned by `angle_rad` about its own z axis.
    pub fn rotated_about_z(&self, angle_rad: f64) -> Self {
        let (s, c) = angle_rad.sin_cos();
        let x = Vector3::from(self.rows[0]);
        let y = Vector3::from(self.rows[1]);
        let nx = x * c + y * s;
        let ny = y * c - x * s;
        Self { rows: [nx.into(), ny.into(), self.rows[2]] }
    }
}

impl TryFrom<[[f64; 3]; 3]> for DefectFrame {
    type Error = Error;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        DefectFrame::new(rows)
    }
}

impl From<DefectFrame> for [[f64; 3]; 3] {
    fn from(f: DefectFrame) -> Self {
        f.rows
    }
}

/// Host crystal: density, cubic elastic constants and defect orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParameters {
    pub density_kg_m3: f64,
    pub c11_gpa: f64,
    pub c12_gpa: f64,
    pub c44_gpa: f64,
    #[serde(default)]
    pub frame: DefectFrame,
}

impl MaterialParameters {
    pub fn diamond() -> Self {
        Self { density_kg_m3: 3512.0, c11_gpa: 1079.0, c12_gpa: 124.0, c44_gpa: 578.0, frame: DefectFrame::default() }
    }

    /// Cubic material with `c44 = (c11 - c12) / 2`.
    pub fn isotropic(density_kg_m3: f64, c11_gpa: f64, c12_gpa: f64) -> Self {
        Self { density_kg_m3, c11_gpa, c12_gpa, c44_gpa: 0.5 * (c11_gpa - c12_gpa), frame: DefectFrame::default() }
    }

    pub fn with_frame(mut self, frame: DefectFrame) -> Self {
        self.frame = frame;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.density_kg_m3, self.c11_gpa, self.c12_gpa, self.c44_gpa];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("material", "non-finite constant"));
        }
        if self.density_kg_m3 <= 0.0 {
            return Err(Error::invalid("density_kg_m3", "must be positive"));
        }
        if self.c11_gpa <= self.c12_gpa.abs() || self.c44_gpa <= 0.0 || self.c11_gpa + 2.0 * self.c12_gpa <= 0.0 {
            return Err(Error::invalid("stiffness", "violates cubic elastic stability"));
        }
        Ok(())
    }
}
