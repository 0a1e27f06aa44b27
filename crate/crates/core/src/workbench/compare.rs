use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{format_float, predict_with_chi, ChiCache};
use crate::acoustics::{ChiOptions, MaterialParameters};
use crate::error::{Error, Result};
use crate::model::{BiasConditions, DefectParameters};
use crate::rates::CoherenceReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "T1_B")]
    T1B,
    #[serde(rename = "T1_Q")]
    T1Q,
    /// Compared against the effective coherence time.
    #[serde(rename = "T2_Q")]
    T2Q,
}

impl Quantity {
    pub fn pick(self, r: &CoherenceReport) -> f64 {
        match self {
            Quantity::T1B => r.t1_b,
            Quantity::T1Q => r.t1_q,
            Quantity::T2Q => r.t2_eff,
        }
    }
}

/// One measured time with the bias it was taken at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub defect_id: String,
    pub temperature_k: f64,
    pub b_tesla: f64,
    pub b_theta_deg: f64,
    pub b_phi_deg: f64,
    pub strain_x_ghz: f64,
    pub strain_y_ghz: f64,
    pub quantity: Quantity,
    pub measured_s: f64,
}

impl MeasurementRow {
    pub fn validate(&self) -> Result<()> {
        if !(self.measured_s > 0.0 && self.measured_s.is_finite()) {
            return Err(Error::invalid("measured_s", format!("must be positive, got {}", self.measured_s)));
        }
        Ok(())
    }

    pub fn bias(&self) -> BiasConditions {
        let mut b = BiasConditions::from_angles(self.temperature_k, self.b_tesla, self.b_theta_deg, self.b_phi_deg, 0.0, 0.0);
        b.strain_ghz = [self.strain_x_ghz, self.strain_y_ghz];
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub row: MeasurementRow,
    pub predicted_s: Option<f64>,
    /// measured / predicted
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Mean of |measured − predicted| / predicted over rows that evaluated.
    pub mean_abs_relative_deviation: f64,
    pub failed_rows: usize,
}

pub fn predict_for_measurements(
    rows: &[MeasurementRow],
    defects: &BTreeMap<String, DefectParameters>,
    material: &MaterialParameters,
    options: &ChiOptions,
    cache: &ChiCache,
) -> ComparisonTable {
    let evaluated: Vec<ComparisonRow> = rows
        .iter()
        .map(|row| {
            let outcome = defects
                .get(&row.defect_id.to_lowercase())
                .ok_or_else(|| Error::UnknownDefect(row.defect_id.clone()))
                .and_then(|d| {
                    let chi = cache.get(d, material, options)?;
                    predict_with_chi(d, &row.bias(), chi)
                })
                .map(|r| row.quantity.pick(&r));
            match outcome {
                Ok(p) => ComparisonRow { row: row.clone(), predicted_s: Some(p), ratio: Some(row.measured_s / p), error: None },
                Err(e) => ComparisonRow { row: row.clone(), predicted_s: None, ratio: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let devs: Vec<f64> = evaluated.iter().filter_map(|r| r.ratio).map(|q| (q - 1.0).abs()).collect();
    let mean = if devs.is_empty() { 0.0 } else { devs.iter().sum::<f64>() / devs.len() as f64 };
    let failed_rows = evaluated.iter().filter(|r| r.error.is_some()).count();
    ComparisonTable { rows: evaluated, mean_abs_relative_deviation: mean, failed_rows }
}

pub fn write_comparison_csv<W: Write>(table: &ComparisonTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "defect_id",
        "temperature_k",
        "b_tesla",
        "b_theta_deg",
        "b_phi_deg",
        "strain_x_ghz",
        "strain_y_ghz",
        "quantity",
        "measured_s",
        "predicted_s",
        "ratio",
        "error",
    ])?;
    for r in &table.rows {
        let m = &r.row;
        let q = match m.quantity {
            Quantity::T1B => "T1_B",
            Quantity::T1Q => "T1_Q",
            Quantity::T2Q => "T2_Q",
        };
        w.write_record([
            m.defect_id.clone(),
            format_float(m.temperature_k),
            format_float(m.b_tesla),
            format_float(m.b_theta_deg),
            format_float(m.b_phi_deg),
            format_float(m.strain_x_ghz),
            format_float(m.strain_y_ghz),
            q.to_string(),
            format_float(m.measured_s),
            r.predicted_s.map(format_float).unwrap_or_default(),
            r.ratio.map(format_float).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
