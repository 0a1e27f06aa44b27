use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    evolve_sampled, max_step, sigma_x_q_co_rotating, sigma_z_b, sigma_z_q, DensityMatrix, LindbladGenerator, Propagator,
    TrajectoryStats,
};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix4, C64};
use crate::rates::thermal_branch_polarization;

/// Decay time estimates from a sampled, decaying signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// ∫ y/y₀ dt with an exponential tail beyond the last sample.
    pub integral_time: f64,
    /// −1/slope of a least-squares line through ln(y/y₀).
    pub fit_time: f64,
    /// Share of `integral_time` supplied by the tail.
    pub tail_fraction: f64,
}

/// Ends above e⁻² of the start are treated as non-decaying.
const MIN_DECAY: f64 = 0.135_335_283_236_612_7;

pub fn extract_decay_time(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 20 {
        return Err(Error::invalid("samples", format!("need at least 20 paired samples, got {}", times.len())));
    }
    let y0 = values[0];
    if y0 == 0.0 || !y0.is_finite() {
        return Err(Error::NoDecay("signal starts at zero".into()));
    }
    let y: Vec<f64> = values.iter().map(|v| v / y0).collect();
    let n = y.len();
    let tail_window = (n / 10).max(2);
    let tail_mean = y[n - tail_window..].iter().map(|v| v.abs()).sum::<f64>() / tail_window as f64;
    if tail_mean > MIN_DECAY {
        return Err(Error::NoDecay(format!("signal only fell to {tail_mean:.3} of its initial value")));
    }

    let mut area = 0.0;
    for k in 1..n {
        area += 0.5 * (y[k] + y[k - 1]) * (times[k] - times[k - 1]);
    }
    // exponential continuation from the last two samples when they still decay
    let (ya, yb) = (y[n - 2], y[n - 1]);
    let mut tail = 0.0;
    if ya > yb && yb > 0.0 {
        let k = (ya / yb).ln() / (times[n - 1] - times[n - 2]);
        tail = yb / k;
    }
    let integral_time = area + tail;

    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, v) in times.iter().zip(&y) {
        if *v > 1e-3 {
            let l = v.ln();
            sx += t;
            sy += l;
            sxx += t * t;
            sxy += t * l;
            m += 1.0;
        }
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let fit_time = if m >= 2.0 && slope < 0.0 { -1.0 / slope } else { f64::NAN };
    Ok(DecayFit { integral_time, fit_time, tail_fraction: tail / integral_time })
}

/// Thermal branch populations with the qubit rotated onto the equator.
pub fn ramsey_initial_state(gen: &LindbladGenerator) -> DensityMatrix {
    let sz = thermal_branch_polarization(gen.omega_b, gen.temperature_k);
    let p_lower = 0.5 * (1.0 - sz);
    let mut m = CMatrix4::zeros();
    for (base, p) in [(0, p_lower), (2, 1.0 - p_lower)] {
        // exp(−iπ/4 σy) |0⟩ = (|0⟩ + |1⟩)/√2
        for i in 0..2 {
            for j in 0..2 {
                m[(base + i, base + j)] = C64::new(0.5 * p, 0.0);
            }
        }
    }
    DensityMatrix(m)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamseyResult {
    pub taus: Vec<f64>,
    pub sigma_x_q: Vec<f64>,
    pub stats: TrajectoryStats,
    pub dt: f64,
}

/// Steps per sample beyond which the propagator power loses precision.
const MAX_STRIDE: f64 = 1e12;

/// Largest step not above the stability limit that divides `spacing`.
fn step_for_spacing(gen: &LindbladGenerator, spacing: f64) -> Result<(f64, usize)> {
    let limit = max_step(gen);
    if !limit.is_finite() {
        return Ok((spacing, 1));
    }
    let stride = (spacing / limit).ceil().max(1.0);
    if stride.is_nan() || stride > MAX_STRIDE {
        return Err(Error::invalid(
            "horizon",
            format!("sample spacing {spacing:e} s needs {stride:e} steps of {limit:e} s; the decay is too slow to simulate"),
        ));
    }
    let stride = stride as usize;
    // rounding can leave spacing/stride a hair above the limit
    Ok(((spacing / stride as f64).min(limit), stride))
}

/// ⟨σx^Q⟩(τ) on the uniform grid `0, τ_max/(points−1), …, τ_max`.
pub fn ramsey_experiment(gen: &LindbladGenerator, tau_max: f64, points: usize) -> Result<RamseyResult> {
    if points < 2 || tau_max.is_nan() || tau_max <= 0.0 {
        return Err(Error::invalid("tau grid", "need tau_max > 0 and at least two points"));
    }
    let spacing = tau_max / (points - 1) as f64;
    let (dt, stride) = step_for_spacing(gen, spacing)?;
    let tr = evolve_sampled(gen, &ramsey_initial_state(gen), dt, stride, points)?;
    let sigma_x_q =
        tr.times.iter().zip(&tr.states).map(|(t, r)| sigma_x_q_co_rotating(&r.0, gen.lambda_eff, *t)).collect();
    Ok(RamseyResult { taus: tr.times.clone(), sigma_x_q, stats: tr.stats(), dt })
}

/// Signal and decay time of a relaxation or Ramsey run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxationResult {
    pub fit: DecayFit,
    pub asymptote: f64,
    pub horizon: f64,
    pub stats: TrajectoryStats,
}

const MAX_DOUBLINGS: usize = 12;
const SETTLED: f64 = 1e-4;

/// Samples per λ_eff period; keeps any residual oscillation resolved.
const SAMPLES_PER_PERIOD: f64 = 16.0;

fn run_until_decayed(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    readout: impl Fn(&CMatrix4, f64) -> f64,
    asymptote: f64,
    horizon_guess: f64,
    resolve_lambda: bool,
) -> Result<RelaxationResult> {
    let mut horizon = horizon_guess;
    let mut last_err = None;
    for _ in 0..MAX_DOUBLINGS {
        let mut points = 2000usize;
        if resolve_lambda && gen.lambda_eff != 0.0 {
            let period = 2.0 * PI / gen.lambda_eff.abs();
            points = points.max((SAMPLES_PER_PERIOD * horizon / period).ceil() as usize).min(4_000_000);
        }
        let spacing = horizon / (points - 1) as f64;
        let (dt, stride) = step_for_spacing(gen, spacing)?;
        let tr = evolve_sampled(gen, rho0, dt, stride, points)?;
        let y: Vec<f64> = tr.times.iter().zip(&tr.states).map(|(t, r)| readout(&r.0, *t) - asymptote).collect();
        let y0 = y[0];
        let tail = y[points - points / 20..].iter().map(|v| (v / y0).abs()).fold(0.0, f64::max);
        if tail < SETTLED {
            let fit = extract_decay_time(&tr.times, &y)?;
            return Ok(RelaxationResult { fit, asymptote, horizon, stats: tr.stats() });
        }
        last_err = Some(Error::NoDecay(format!("still at {tail:.2e} of the initial value after {horizon:e} s")));
        horizon *= 2.0;
    }
    Err(last_err.unwrap_or_else(|| Error::NoDecay("no horizon tried".into())))
}

/// Long-time value of `op`, from the RK4 propagator raised to a large power.
fn asymptotic_expectation(gen: &LindbladGenerator, rho0: &DensityMatrix, op: &CMatrix4, horizon: f64) -> Result<f64> {
    let dt = max_step(gen);
    if !dt.is_finite() {
        return Ok(rho0.expectation(op));
    }
    let prop = Propagator::rk4(gen, dt)?;
    let steps = (horizon / dt).ceil() as usize;
    let v = prop.power(steps) * rho0.to_vec();
    Ok(DensityMatrix::from_vec(&v).expectation(op))
}

/// Ramsey decay time: ∫ of the co-rotating ⟨σx^Q⟩ signal.
pub fn ramsey_decay_time(gen: &LindbladGenerator, horizon_guess: f64) -> Result<RelaxationResult> {
    let le = gen.lambda_eff;
    run_until_decayed(gen, &ramsey_initial_state(gen), |r, t| sigma_x_q_co_rotating(r, le, t), 0.0, horizon_guess, true)
}

/// ⟨σz^B⟩ relaxation from the lower branch with the qubit fully mixed.
pub fn branch_relaxation(gen: &LindbladGenerator, horizon_guess: f64) -> Result<RelaxationResult> {
    let rho0 = DensityMatrix::diagonal([0.5, 0.5, 0.0, 0.0])?;
    let op = sigma_z_b();
    let end = asymptotic_expectation(gen, &rho0, &op, 1e4 * horizon_guess)?;
    run_until_decayed(gen, &rho0, |r, _| (op * r).trace().re, end, horizon_guess, false)
}

/// ⟨σz^Q⟩ relaxation from thermal branches with the qubit in |0⟩.
pub fn qubit_relaxation(gen: &LindbladGenerator, horizon_guess: f64) -> Result<RelaxationResult> {
    let sz = thermal_branch_polarization(gen.omega_b, gen.temperature_k);
    let p = 0.5 * (1.0 - sz);
    let rho0 = DensityMatrix::diagonal([p, 0.0, 1.0 - p, 0.0])?;
    let op = sigma_z_q();
    let end = asymptotic_expectation(gen, &rho0, &op, 1e4 * horizon_guess)?;
    run_until_decayed(gen, &rho0, |r, _| (op * r).trace().re, end, horizon_guess, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lindblad_generator, DegeneracyPolicy};
    use crate::model::{levels, BiasConditions, DefectParameters};
    use crate::rates::{coherence_envelope, coherence_report, effective_t2_numeric};

    const CHI: f64 = 18.1e-30;

    #[test]
    fn exponential_decay_time() {
        let tau = 3.7e-6;
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 8.0 * tau / 1999.0).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-t / tau).exp()).collect();
        let fit = extract_decay_time(&t, &y).unwrap();
        assert!((fit.integral_time / tau - 1.0).abs() < 1e-3);
        assert!((fit.fit_time / tau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_signal_is_rejected() {
        let t: Vec<f64> = (0..50).map(|k| k as f64).collect();
        assert!(matches!(extract_decay_time(&t, &vec![1.0; 50]), Err(Error::NoDecay(_))));
        assert!(extract_decay_time(&t[..10], &[1.0; 10]).is_err());
    }

    #[test]
    fn modulated_envelope_matches_numeric_t2() {
        let (t1, ts, lam) = (1e-6, 2e-7, 3e7);
        let want = effective_t2_numeric(t1, ts, lam);
        let t: Vec<f64> = (0..20001).map(|k| k as f64 * 2e-9).collect();
        let y: Vec<f64> = t.iter().map(|t| coherence_envelope(*t, t1, ts, lam)).collect();
        let fit = extract_decay_time(&t, &y).unwrap();
        assert!((fit.integral_time / want - 1.0).abs() < 0.01);
    }

    #[test]
    fn ramsey_without_lambda_decays_at_half_t1q_rate() {
        // transverse field: branch flips carry the qubit coherence over intact
        let t = 4.0;
        let l = levels(&DefectParameters::siv(), &BiasConditions::from_angles(t, 0.05, 90.0, 0.0, 80.0, 0.0)).unwrap();
        let mut l0 = l.clone();
        l0.lambda_eff = 0.0;
        let g = lindblad_generator(&l0, CHI, t, DegeneracyPolicy::Combined);
        let rep = coherence_report(&l0, CHI, t).unwrap();
        // initial slope is the thermally averaged rate
        let early = ramsey_experiment(&g, 1e-3 * rep.t1_q, 11).unwrap();
        let rate = -(early.sigma_x_q[10] / early.sigma_x_q[0]).ln() / early.taus[10];
        assert!((rate * 2.0 * rep.t1_q - 1.0).abs() < 0.01, "{}", rate * 2.0 * rep.t1_q);
        // the integral picks up a small motional-narrowing excess
        let r = ramsey_decay_time(&g, 4.0 * rep.t1_q).unwrap();
        assert!((r.fit.integral_time / (2.0 * rep.t1_q) - 1.0).abs() < 0.05, "{} {}", r.fit.integral_time, rep.t1_q);
        assert!(r.stats.max_trace_error < 1e-9 && r.stats.min_eigenvalue > -1e-9);
    }

    #[test]
    fn ramsey_grid_shape() {
        let t = 4.0;
        let l = levels(&DefectParameters::siv(), &BiasConditions::from_angles(t, 0.2, 30.0, 0.0, 100.0, 0.0)).unwrap();
        let g = lindblad_generator(&l, CHI, t, DegeneracyPolicy::Combined);
        let r = ramsey_experiment(&g, 50e-9, 101).unwrap();
        assert_eq!(r.taus.len(), 101);
        assert!((r.sigma_x_q[0] - 1.0).abs() < 1e-12);
        assert!((r.taus[100] - 50e-9).abs() < 1e-20);
        assert!(r.sigma_x_q[100].abs() < 1.0);
    }
}
