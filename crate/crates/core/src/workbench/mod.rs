//! Bias solving, sweeps, measurement comparison and flat-file formats.

mod bias;
mod compare;
mod io;
mod sweep;

pub use bias::{omega_q_at, solve_field_magnitude, DEFAULT_B_MAX_TESLA};
pub use compare::{
    predict_for_measurements, write_comparison_csv, ComparisonRow, ComparisonTable, MeasurementRow, Quantity,
};
pub use io::{load_defect, load_defects_dir, load_material, read_measurements, read_json, write_json};
pub use sweep::{run_sweep, write_sweep_csv, Axis, AxisScale, FieldConstraint, Source, SweepRecord, SweepSpec};

use std::collections::HashMap;
use std::sync::Mutex;

use crate::acoustics::{scattering_cross_section, ChiOptions, MaterialParameters};
use crate::error::Result;
use crate::model::{levels, BiasConditions, DefectParameters};
use crate::rates::{coherence_report, CoherenceReport};
use crate::units::angular_to_ghz;

/// Column names of the single-row coherence CSV, in order.
pub const COHERENCE_COLUMNS: [&str; 12] = [
    "omega_q_ghz",
    "omega_b_ghz",
    "lambda_eff_ghz",
    "chi_b",
    "chi_qp",
    "chi_bp",
    "t1_b_s",
    "t1_q_s",
    "t2_q_s",
    "t_s_b_s",
    "t2_eff_s",
    "sigma_z_b_th",
];

/// Report values matching [`COHERENCE_COLUMNS`].
pub fn coherence_values(r: &CoherenceReport) -> [f64; 12] {
    [
        angular_to_ghz(r.omega_q),
        angular_to_ghz(r.omega_b),
        angular_to_ghz(r.lambda_eff),
        r.chi_b,
        r.chi_q_prime,
        r.chi_b_prime,
        r.t1_b,
        r.t1_q,
        r.t2_q,
        r.t_s_b,
        r.t2_eff,
        r.sigma_z_b_thermal,
    ]
}

/// Shortest representation that parses back to the same value, switching
/// to exponent form for very small or large magnitudes.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// χ for a defect in a host, honouring a pinned `chi_s2`.
pub fn resolve_chi(defect: &DefectParameters, material: &MaterialParameters, options: &ChiOptions) -> Result<f64> {
    match defect.chi_s2 {
        Some(chi) => Ok(chi),
        None => Ok(scattering_cross_section(defect, material, options)?.chi),
    }
}

/// Memoises [`resolve_chi`] across calls; keyed by the JSON form of the inputs.
#[derive(Debug, Default)]
pub struct ChiCache {
    entries: Mutex<HashMap<String, f64>>,
}

impl ChiCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, defect: &DefectParameters, material: &MaterialParameters, options: &ChiOptions) -> Result<f64> {
        let key = serde_json::to_string(&(defect, material, options.order, options.tolerance))?;
        if let Some(v) = self.entries.lock().expect("chi cache poisoned").get(&key) {
            return Ok(*v);
        }
        let chi = resolve_chi(defect, material, options)?;
        self.entries.lock().expect("chi cache poisoned").insert(key, chi);
        Ok(chi)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("chi cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Model and rates for one bias point with a known χ.
pub fn predict_with_chi(defect: &DefectParameters, bias: &BiasConditions, chi: f64) -> Result<CoherenceReport> {
    let l = levels(defect, bias)?;
    coherence_report(&l, chi, bias.temperature_k)
}

/// Full pipeline: χ, levels and coherence times.
pub fn predict(
    defect: &DefectParameters,
    material: &MaterialParameters,
    bias: &BiasConditions,
    options: &ChiOptions,
) -> Result<CoherenceReport> {
    let chi = resolve_chi(defect, material, options)?;
    predict_with_chi(defect, bias, chi)
}
