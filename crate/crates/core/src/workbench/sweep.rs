use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{coherence_values, format_float, solve_field_magnitude, ChiCache, COHERENCE_COLUMNS, DEFAULT_B_MAX_TESLA};
use crate::acoustics::{ChiOptions, MaterialParameters};
use crate::error::{Error, Result};
use crate::model::{field_vector, levels, BiasConditions, DefectParameters};
use crate::parallel::Parallelism;
use crate::rates::{coherence_report, CoherenceReport};

/// Inline value or a path to a JSON file, relative to the spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Inline(T),
    Path(PathBuf),
}

impl<T: serde::de::DeserializeOwned + Clone> Source<T> {
    fn resolve(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => super::read_json(base.join(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<AxisScale>,
}

impl Axis {
    pub fn fixed(value: f64) -> Self {
        Self { min: value, max: value, count: 1, scale: None }
    }

    fn values(&self, name: &str, default_scale: AxisScale) -> Result<Vec<f64>> {
        let bad = |why: &str| Error::InvalidSweep(format!("axis `{name}`: {why}"));
        if self.count == 0 {
            return Err(bad("count must be at least 1"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(bad("need finite min <= max"));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let n = (self.count - 1) as f64;
        match self.scale.unwrap_or(default_scale) {
            AxisScale::Linear => Ok((0..self.count).map(|k| self.min + (self.max - self.min) * k as f64 / n).collect()),
            AxisScale::Log => {
                if self.min <= 0.0 {
                    return Err(bad("log scale needs min > 0"));
                }
                let (a, b) = (self.min.ln(), self.max.ln());
                Ok((0..self.count)
                    .map(|k| if k == 0 { self.min } else if k == self.count - 1 { self.max } else { (a + (b - a) * k as f64 / n).exp() })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldConstraint {
    /// Field magnitude solved per cell to hold ω_Q fixed (GHz).
    OmegaQGhz(f64),
    BTesla(f64),
}

fn default_material() -> Source<MaterialParameters> {
    Source::Inline(MaterialParameters::diamond())
}

fn default_phi() -> Axis {
    Axis::fixed(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub defect: Source<DefectParameters>,
    #[serde(default = "default_material")]
    pub material: Source<MaterialParameters>,
    /// Strain magnitude; log-spaced unless the axis says otherwise.
    pub strain_ghz: Axis,
    #[serde(default)]
    pub strain_azimuth_deg: f64,
    pub theta_deg: Axis,
    #[serde(default = "default_phi")]
    pub phi_deg: Axis,
    pub temperature_k: Axis,
    pub constraint: FieldConstraint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_max_tesla: Option<f64>,
    /// Subset of the coherence columns; empty means all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_order: Option<usize>,
}

impl SweepSpec {
    pub fn output_columns(&self) -> Result<Vec<&'static str>> {
        if self.outputs.is_empty() {
            return Ok(COHERENCE_COLUMNS.to_vec());
        }
        self.outputs
            .iter()
            .map(|o| {
                COHERENCE_COLUMNS
                    .iter()
                    .find(|c| **c == o.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidSweep(format!("unknown output column `{o}`")))
            })
            .collect()
    }

    fn validate_constraint(&self) -> Result<()> {
        match self.constraint {
            FieldConstraint::OmegaQGhz(w) if !(w > 0.0 && w.is_finite()) => {
                Err(Error::InvalidSweep(format!("omega_q_ghz must be positive, got {w}")))
            }
            FieldConstraint::BTesla(b) if !(b >= 0.0 && b.is_finite()) => {
                Err(Error::InvalidSweep(format!("b_tesla must be >= 0, got {b}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub strain_ghz: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub temperature_k: f64,
    pub b_tesla: Option<f64>,
    pub report: Option<CoherenceReport>,
    pub error: Option<String>,
}

/// Evaluate every cell of the spec. Cell failures land in `error`; only
/// problems with the spec itself or χ abort the sweep.
pub fn run_sweep(
    spec: &SweepSpec,
    base_dir: &Path,
    parallelism: Parallelism,
    cache: &ChiCache,
) -> Result<Vec<SweepRecord>> {
    spec.validate_constraint()?;
    spec.output_columns()?;
    let defect = spec.defect.resolve(base_dir)?;
    let material = spec.material.resolve(base_dir)?;
    defect.validate()?;
    material.validate()?;
    let strains = spec.strain_ghz.values("strain_ghz", AxisScale::Log)?;
    let thetas = spec.theta_deg.values("theta_deg", AxisScale::Linear)?;
    let phis = spec.phi_deg.values("phi_deg", AxisScale::Linear)?;
    let temps = spec.temperature_k.values("temperature_k", AxisScale::Linear)?;
    if temps.iter().any(|t| *t < 0.0) {
        return Err(Error::InvalidSweep("temperatures must be >= 0".into()));
    }
    let options = ChiOptions { order: spec.chi_order, parallelism, ..Default::default() };
    let chi = cache.get(&defect, &material, &options)?;
    let b_max = spec.b_max_tesla.unwrap_or(DEFAULT_B_MAX_TESLA);

    let mut groups = Vec::with_capacity(strains.len() * thetas.len() * phis.len());
    for &s in &strains {
        for &t in &thetas {
            for &p in &phis {
                groups.push((s, t, p));
            }
        }
    }

    let cells = parallelism.map(&groups, |&(strain, theta, phi)| {
        let base = BiasConditions::from_angles(0.0, 0.0, 0.0, 0.0, strain, spec.strain_azimuth_deg);
        let field = match spec.constraint {
            FieldConstraint::BTesla(b) => Ok(b),
            FieldConstraint::OmegaQGhz(w) => solve_field_magnitude(&defect, &base, theta, phi, w, b_max),
        };
        let lv = field.and_then(|b| levels(&defect, &base.with_field(field_vector(b, theta, phi))).map(|l| (b, l)));
        temps
            .iter()
            .map(|&temperature_k| {
                let mut rec = SweepRecord {
                    strain_ghz: strain,
                    theta_deg: theta,
                    phi_deg: phi,
                    temperature_k,
                    b_tesla: None,
                    report: None,
                    error: None,
                };
                match &lv {
                    Ok((b, l)) => {
                        rec.b_tesla = Some(*b);
                        match coherence_report(l, chi, temperature_k) {
                            Ok(r) => rec.report = Some(r),
                            Err(e) => rec.error = Some(e.to_string()),
                        }
                    }
                    Err(e) => rec.error = Some(e.to_string()),
                }
                rec
            })
            .collect::<Vec<_>>()
    });
    Ok(cells.into_iter().flatten().collect())
}

/// Fixed column order: bias columns, selected outputs, then `error`.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], columns: &[&str], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["strain_ghz", "theta_deg", "phi_deg", "temperature_k", "b_tesla"];
    header.extend_from_slice(columns);
    header.push("error");
    w.write_record(&header)?;
    let index: Vec<usize> =
        columns.iter().map(|c| COHERENCE_COLUMNS.iter().position(|x| x == c).expect("validated column")).collect();
    for r in records {
        let mut row = vec![
            format_float(r.strain_ghz),
            format_float(r.theta_deg),
            format_float(r.phi_deg),
            format_float(r.temperature_k),
            r.b_tesla.map(format_float).unwrap_or_default(),
        ];
        match &r.report {
            Some(rep) => {
                let v = coherence_values(rep);
                row.extend(index.iter().map(|&i| format_float(v[i])));
            }
            None => row.extend(index.iter().map(|_| String::new())),
        }
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
