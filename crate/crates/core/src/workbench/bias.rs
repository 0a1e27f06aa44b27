use crate::error::{Error, Result};
use crate::model::{field_vector, levels, BiasConditions, DefectParameters};
use crate::units::angular_to_ghz;

pub const DEFAULT_B_MAX_TESLA: f64 = 20.0;

const SCAN_START_TESLA: f64 = 1e-6;
const SCAN_POINTS: usize = 240;
const REL_TOL: f64 = 1e-12;

/// ω_Q in GHz for field magnitude `b` along (θ, φ), other bias entries from `bias`.
pub fn omega_q_at(defect: &DefectParameters, bias: &BiasConditions, b: f64, theta_deg: f64, phi_deg: f64) -> Result<f64> {
    let biased = bias.with_field(field_vector(b, theta_deg, phi_deg));
    Ok(angular_to_ghz(levels(defect, &biased)?.omega_q))
}

/// Smallest |B| ≤ `b_max` with ω_Q = `target_ghz`, by geometric scan and bisection.
pub fn solve_field_magnitude(
    defect: &DefectParameters,
    bias: &BiasConditions,
    theta_deg: f64,
    phi_deg: f64,
    target_ghz: f64,
    b_max: f64,
) -> Result<f64> {
    if !(target_ghz > 0.0 && target_ghz.is_finite()) {
        return Err(Error::invalid("target_ghz", format!("must be positive, got {target_ghz}")));
    }
    if b_max.is_nan() || b_max <= SCAN_START_TESLA {
        return Err(Error::invalid("b_max", format!("must exceed {SCAN_START_TESLA} T")));
    }
    let f = |b: f64| omega_q_at(defect, bias, b, theta_deg, phi_deg).map(|w| w - target_ghz);
    let ratio = (b_max / SCAN_START_TESLA).powf(1.0 / (SCAN_POINTS - 1) as f64);

    let mut lo = 0.0;
    let mut bracket = None;
    for k in 0..SCAN_POINTS {
        let b = if k + 1 == SCAN_POINTS { b_max } else { SCAN_START_TESLA * ratio.powi(k as i32) };
        let fb = f(b)?;
        if fb == 0.0 {
            return Ok(b);
        }
        if fb > 0.0 {
            bracket = Some((lo, b));
            break;
        }
        lo = b;
    }
    let (mut a, mut b) = bracket.ok_or(Error::UnreachableFrequency { target_ghz, b_max_tesla: b_max })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm.abs() <= REL_TOL * target_ghz || (b - a) <= f64::EPSILON * b {
            return Ok(mid);
        }
        if fm < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
