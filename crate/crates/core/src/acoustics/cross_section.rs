use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{acoustic_modes, rotate_stiffness, sphere_quadrature, MaterialParameters, StiffnessTensor, SUPPORTED_ORDERS};
use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::model::DefectParameters;
use crate::parallel::Parallelism;
use crate::units::{phz_to_angular, HBAR};

/// Product-rule degrees walked when no order is requested.
pub const CONVERGENCE_LADDER: [usize; 6] = [15, 31, 63, 127, 255, 511];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiOptions {
    /// Fixed quadrature degree; `None` walks [`CONVERGENCE_LADDER`].
    pub order: Option<usize>,
    pub tolerance: f64,
    pub parallelism: Parallelism,
}

impl Default for ChiOptions {
    fn default() -> Self {
        Self { order: None, tolerance: 1e-6, parallelism: Parallelism::default() }
    }
}

/// Per-operator cross-sections in s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    pub chi_egx: f64,
    pub chi_egy: f64,
    pub chi: f64,
    /// Off-diagonal ∮ (k·D_x·q)(k·D_y·q) term; zero by symmetry.
    pub chi_cross: f64,
    pub quadrature_order: usize,
    pub nodes: usize,
    /// Relative change of χ against the next lower rule.
    pub delta: f64,
    pub converged: bool,
}

/// Strain susceptibility matrices (D_Egx, D_Egy) in rad/s per unit strain.
pub fn strain_susceptibility(defect: &DefectParameters) -> [Matrix3<f64>; 2] {
    let d = phz_to_angular(defect.d_phz);
    let f = phz_to_angular(defect.f_phz);
    let h = 0.5 * f;
    [
        Matrix3::new(d, 0.0, h, 0.0, -d, 0.0, h, 0.0, 0.0),
        Matrix3::new(0.0, -d, 0.0, -d, 0.0, h, 0.0, h, 0.0),
    ]
}

/// Mode-summed integrand for one direction: (xx, yy, xy) in s² per steradian.
pub fn integrand(
    stiffness: &StiffnessTensor,
    density: f64,
    d: &[Matrix3<f64>; 2],
    k: &Vector3<f64>,
) -> Result<[f64; 3]> {
    let modes = acoustic_modes(stiffness, density, k)?;
    let mut out = [0.0; 3];
    let pref = HBAR / (16.0 * PI.powi(3) * density);
    for (c, q) in modes.speeds.iter().zip(modes.polarizations.iter()) {
        let ax = k.dot(&(d[0] * q));
        let ay = k.dot(&(d[1] * q));
        let s = pref / c.powi(5);
        out[0] += s * ax * ax;
        out[1] += s * ay * ay;
        out[2] += s * ax * ay;
    }
    Ok(out)
}

fn integrate_at(
    stiffness: &StiffnessTensor,
    density: f64,
    d: &[Matrix3<f64>; 2],
    order: usize,
    parallelism: Parallelism,
) -> Result<([f64; 3], usize)> {
    let rule = sphere_quadrature(order)?;
    let values = parallelism.map_range(rule.len(), |n| {
        integrand(stiffness, density, d, &rule.nodes[n]).map(|v| v.map(|x| x * rule.weights[n]))
    });
    let mut sums = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
    for v in values {
        let v = v?;
        for (s, x) in sums.iter_mut().zip(v) {
            s.add(x);
        }
    }
    Ok((sums.map(|s| s.value()), rule.len()))
}

fn relative_change(prev: f64, last: f64) -> f64 {
    if last == prev {
        0.0
    } else {
        (last - prev).abs() / last.abs().max(prev.abs())
    }
}

pub fn scattering_cross_section(
    defect: &DefectParameters,
    material: &MaterialParameters,
    options: &ChiOptions,
) -> Result<CrossSections> {
    defect.validate()?;
    let stiffness = rotate_stiffness(material)?;
    let d = strain_susceptibility(defect);
    let rho = material.density_kg_m3;
    let build = |v: [f64; 3], order, nodes, delta: f64| CrossSections {
        chi_egx: v[0],
        chi_egy: v[1],
        chi: 0.5 * (v[0] + v[1]),
        chi_cross: v[2],
        quadrature_order: order,
        nodes,
        delta,
        converged: delta < options.tolerance,
    };

    if let Some(order) = options.order {
        let pos = SUPPORTED_ORDERS
            .iter()
            .position(|&o| o == order)
            .ok_or_else(|| Error::UnsupportedOrder { requested: order, supported: SUPPORTED_ORDERS.to_vec() })?;
        let (v, nodes) = integrate_at(&stiffness, rho, &d, order, options.parallelism)?;
        let other = if pos == 0 { SUPPORTED_ORDERS[1] } else { SUPPORTED_ORDERS[pos - 1] };
        let (w, _) = integrate_at(&stiffness, rho, &d, other, options.parallelism)?;
        let delta = relative_change(0.5 * (w[0] + w[1]), 0.5 * (v[0] + v[1]));
        return Ok(build(v, order, nodes, delta));
    }

    let mut prev: Option<f64> = None;
    let mut last = 0.0;
    for &order in &CONVERGENCE_LADDER {
        let (v, nodes) = integrate_at(&stiffness, rho, &d, order, options.parallelism)?;
        let chi = 0.5 * (v[0] + v[1]);
        if let Some(p) = prev {
            let delta = relative_change(p, chi);
            if delta < options.tolerance {
                return Ok(build(v, order, nodes, delta));
            }
        }
        prev = Some(chi);
        last = chi;
    }
    let previous = prev.unwrap_or(0.0);
    Err(Error::NotConverged { order: *CONVERGENCE_LADDER.last().unwrap(), previous, last })
}

/// χ as the defect frame is turned about its symmetry axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSensitivity {
    pub angles_deg: Vec<f64>,
    pub chi: Vec<f64>,
    /// (max − min) / mean over the sampled angles.
    pub relative_spread: f64,
}

pub fn frame_sensitivity(
    defect: &DefectParameters,
    material: &MaterialParameters,
    angles_deg: &[f64],
    options: &ChiOptions,
) -> Result<FrameSensitivity> {
    let chi = angles_deg
        .iter()
        .map(|a| {
            let m = material.clone().with_frame(material.frame.rotated_about_z(a.to_radians()));
            scattering_cross_section(defect, &m, options).map(|c| c.chi)
        })
        .collect::<Result<Vec<_>>>()?;
    let max = chi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = chi.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = chi.iter().sum::<f64>() / chi.len().max(1) as f64;
    let relative_spread = if mean > 0.0 { (max - min) / mean } else { 0.0 };
    Ok(FrameSensitivity { angles_deg: angles_deg.to_vec(), chi, relative_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::DefectFrame;

    #[test]
    fn zero_susceptibility_gives_zero() {
        let d = DefectParameters { d_phz: 0.0, f_phz: 0.0, ..DefectParameters::siv() };
        let c = scattering_cross_section(&d, &MaterialParameters::diamond(), &ChiOptions::default()).unwrap();
        assert_eq!(c.chi, 0.0);
        assert!(c.converged);
    }

    #[test]
    fn quadratic_in_susceptibility() {
        let opts = ChiOptions { order: Some(63), ..Default::default() };
        let base = DefectParameters::siv();
        let doubled = DefectParameters { d_phz: 2.0 * base.d_phz, f_phz: 2.0 * base.f_phz, ..base.clone() };
        let a = scattering_cross_section(&base, &MaterialParameters::diamond(), &opts).unwrap();
        let b = scattering_cross_section(&doubled, &MaterialParameters::diamond(), &opts).unwrap();
        assert!((b.chi / a.chi - 4.0).abs() < 1e-12);
    }

    /// Isotropic medium: ∮ (k·D·q)² over the longitudinal mode and the two
    /// transverse modes has a closed form in the invariants of traceless D.
    #[test]
    fn isotropic_medium_matches_closed_form() {
        let rho = 3000.0;
        let m = MaterialParameters::isotropic(rho, 600.0, 200.0).with_frame(DefectFrame::identity());
        let defect = DefectParameters { d_phz: 0.9, f_phz: 0.4, ..DefectParameters::siv() };
        let c = scattering_cross_section(&defect, &m, &ChiOptions::default()).unwrap();
        let vl = (600e9 / rho).sqrt();
        let vt = (200e9 / rho).sqrt();
        // For symmetric traceless D: ∮ (kDk)² = 8π/15 tr(D²); ∮ |Dk|² = 4π/3 tr(D²).
        let d = strain_susceptibility(&defect)[0];
        let tr = (d * d).trace();
        let long = 8.0 * PI / 15.0 * tr;
        let trans = 4.0 * PI / 3.0 * tr - long;
        let pref = HBAR / (16.0 * PI.powi(3) * rho);
        let want = pref * (long / vl.powi(5) + trans / vt.powi(5));
        assert!((c.chi_egx - want).abs() < 1e-9 * want, "{} vs {want}", c.chi_egx);
    }

    #[test]
    fn diamond_siv_converges_and_is_symmetric() {
        let c = scattering_cross_section(&DefectParameters::siv(), &MaterialParameters::diamond(), &ChiOptions::default())
            .unwrap();
        assert!(c.converged);
        assert!((c.chi_egx - c.chi_egy).abs() / c.chi < 1e-6);
        assert!(c.chi_cross.abs() / c.chi < 1e-6);
        assert!(c.chi > 0.0);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let seq = ChiOptions { order: Some(127), parallelism: Parallelism::Sequential, ..Default::default() };
        let par = ChiOptions { parallelism: Parallelism::Rayon, ..seq };
        let a = scattering_cross_section(&DefectParameters::snv(), &MaterialParameters::diamond(), &seq).unwrap();
        let b = scattering_cross_section(&DefectParameters::snv(), &MaterialParameters::diamond(), &par).unwrap();
        assert_eq!(a.chi, b.chi);
    }

    #[test]
    fn explicit_unsupported_order_errors() {
        let opts = ChiOptions { order: Some(10), ..Default::default() };
        assert!(matches!(
            scattering_cross_section(&DefectParameters::siv(), &MaterialParameters::diamond(), &opts),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn frame_sensitivity_reports_all_angles() {
        let opts = ChiOptions { order: Some(63), ..Default::default() };
        let s = frame_sensitivity(&DefectParameters::siv(), &MaterialParameters::diamond(), &[0.0, 30.0, 60.0], &opts)
            .unwrap();
        assert_eq!(s.chi.len(), 3);
        assert!(s.relative_spread >= 0.0);
    }
}
