//! Closed-form transition rates and coherence times.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{transition_elements, LevelStructure, TransitionClass};
use crate::quad::integrate;
use crate::units::{reduced_energy, HBAR, K_B};

/// Bose occupation with the spontaneous-emission shift for ω < 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if omega == 0.0 {
        return f64::INFINITY;
    }
    let n = if temperature <= 0.0 { 0.0 } else { 1.0 / reduced_energy(omega.abs(), temperature).exp_m1() };
    if omega > 0.0 {
        n
    } else {
        n + 1.0
    }
}

/// |ω|³ (2n(|ω|) + 1), finite at ω = 0.
fn omega3_symmetric(omega: f64, temperature: f64) -> f64 {
    let w = omega.abs();
    if w == 0.0 {
        return 0.0;
    }
    let coth = if temperature <= 0.0 { 1.0 } else { 1.0 / (0.5 * reduced_energy(w, temperature)).tanh() };
    w.powi(3) * coth
}

/// γ = 2π h² χ |Δω|³ ñ(Δω) for a jump that changes the system energy by Δω.
pub fn transition_rate(h2: f64, delta_omega: f64, chi: f64, temperature: f64) -> f64 {
    if delta_omega == 0.0 || h2 == 0.0 || chi == 0.0 {
        return 0.0;
    }
    2.0 * PI * h2 * chi * delta_omega.abs().powi(3) * thermal_occupation(delta_omega, temperature)
}

/// ⟨σz^B⟩ in thermal equilibrium.
pub fn thermal_branch_polarization(omega_b: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        -1.0
    } else {
        -(HBAR * omega_b / (2.0 * K_B * temperature)).tanh()
    }
}

/// Class-averaged cross-sections χ_class = χ/4 · Σ_class |h|².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassCrossSections {
    pub chi_b: f64,
    pub chi_q_prime: f64,
    pub chi_b_prime: f64,
}

pub fn class_cross_sections(levels: &LevelStructure, chi: f64) -> ClassCrossSections {
    let w = transition_elements(levels).classes;
    ClassCrossSections {
        chi_b: 0.25 * chi * w.get(TransitionClass::Branch),
        chi_q_prime: 0.25 * chi * w.get(TransitionClass::Qubit),
        chi_b_prime: 0.25 * chi * w.get(TransitionClass::BranchQubit),
    }
}

fn time_from_rate(rate: f64) -> f64 {
    if rate == 0.0 {
        f64::INFINITY
    } else {
        1.0 / rate
    }
}

fn rate_from_time(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        1.0 / t
    }
}

/// Serialises infinite times as the string `"inf"`.
mod maybe_infinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

/// Coherence times in seconds; `inf` where the driving rate vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub temperature_k: f64,
    pub omega_q: f64,
    pub omega_b: f64,
    pub lambda_eff: f64,
    pub chi: f64,
    pub chi_b: f64,
    pub chi_q_prime: f64,
    pub chi_b_prime: f64,
    #[serde(with = "maybe_infinite")]
    pub t1_b: f64,
    #[serde(with = "maybe_infinite")]
    pub t1_q_prime: f64,
    #[serde(with = "maybe_infinite")]
    pub t_s_b_prime: f64,
    #[serde(with = "maybe_infinite")]
    pub t1_q: f64,
    #[serde(with = "maybe_infinite")]
    pub t_s_b: f64,
    #[serde(with = "maybe_infinite")]
    pub t2_q: f64,
    /// Exact-envelope effective coherence time.
    #[serde(with = "maybe_infinite")]
    pub t2_eff: f64,
    /// Laplace-approximation counterpart of `t2_eff`.
    #[serde(with = "maybe_infinite")]
    pub t2_eff_analytic: f64,
    pub sigma_z_b_thermal: f64,
}

pub fn coherence_times(
    levels: &LevelStructure,
    classes: &ClassCrossSections,
    chi: f64,
    temperature: f64,
) -> Result<CoherenceReport> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid("temperature_k", format!("must be >= 0, got {temperature}")));
    }
    let wb = levels.omega_b;
    if wb <= 0.0 || !wb.is_finite() {
        return Err(Error::DegenerateBranch);
    }
    let wq = levels.omega_q;
    let n_b = thermal_occupation(wb, temperature);
    let sigma_z = thermal_branch_polarization(wb, temperature);
    // thermal weight of the upper branch; vanishes at T = 0
    let upper = n_b + 0.5 * (1.0 + sigma_z);

    let r1b = 2.0 * PI * classes.chi_b * omega3_symmetric(wb, temperature);
    let r1qp = 2.0 * PI * classes.chi_q_prime * omega3_symmetric(wq, temperature);
    let rsbp = 4.0 * PI * classes.chi_b_prime * wb.powi(3) * upper;
    let rsb = 4.0 * PI * classes.chi_b * wb.powi(3) * upper;
    let r1q = r1qp + rsbp;
    let r2q = 0.5 * r1q + 0.5 * rsb;

    let t1_q = time_from_rate(r1q);
    let t_s_b = time_from_rate(rsb);
    Ok(CoherenceReport {
        temperature_k: temperature,
        omega_q: wq,
        omega_b: wb,
        lambda_eff: levels.lambda_eff,
        chi,
        chi_b: classes.chi_b,
        chi_q_prime: classes.chi_q_prime,
        chi_b_prime: classes.chi_b_prime,
        t1_b: time_from_rate(r1b),
        t1_q_prime: time_from_rate(r1qp),
        t_s_b_prime: time_from_rate(rsbp),
        t1_q,
        t_s_b,
        t2_q: time_from_rate(r2q),
        t2_eff: effective_t2_numeric(t1_q, t_s_b, levels.lambda_eff),
        t2_eff_analytic: effective_t2_analytic(t1_q, t_s_b, levels.lambda_eff),
        sigma_z_b_thermal: sigma_z,
    })
}

/// Class cross-sections and coherence times in one call.
pub fn coherence_report(levels: &LevelStructure, chi: f64, temperature: f64) -> Result<CoherenceReport> {
    coherence_times(levels, &class_cross_sections(levels, chi), chi, temperature)
}

/// (1 − e^{−u r}) / r, equal to u at r = 0.
fn one_period_weight(u: f64, r: f64) -> f64 {
    if r == 0.0 {
        u
    } else {
        -(-u * r).exp_m1() / r
    }
}

/// Laplace-method approximation of the effective coherence time.
pub fn effective_t2_analytic(t1_q: f64, t_s_b: f64, lambda_eff: f64) -> f64 {
    let r1 = rate_from_time(t1_q);
    let rs = rate_from_time(t_s_b);
    if lambda_eff == 0.0 {
        return 2.0 * time_from_rate(r1);
    }
    if r1 + rs == 0.0 {
        return f64::INFINITY;
    }
    let u = 2.0 * PI / lambda_eff.abs();
    if u.is_infinite() {
        return 2.0 * time_from_rate(r1);
    }
    2.0 * one_period_weight(u, r1) / -(-u * (r1 + rs)).exp_m1()
}

/// x − sin x without cancellation near zero.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x - x.sin()
    }
}

/// Qubit coherence envelope exp(−a t − b (t − sin(λt)/λ)).
pub fn coherence_envelope(t: f64, t1_q: f64, t_s_b: f64, lambda_eff: f64) -> f64 {
    let a = 0.5 * rate_from_time(t1_q);
    let b = 0.5 * rate_from_time(t_s_b);
    let phase = if lambda_eff == 0.0 { 0.0 } else { x_minus_sin(lambda_eff.abs() * t) / lambda_eff.abs() };
    (-a * t - b * phase).exp()
}

const ENVELOPE_REL_TOL: f64 = 1e-11;
const TAIL_EPS: f64 = 1e-15;

/// ∫₀^∞ of the exact coherence envelope, integrated over one λ period and
/// extended by the geometric series of later periods.
pub fn effective_t2_numeric(t1_q: f64, t_s_b: f64, lambda_eff: f64) -> f64 {
    let a = 0.5 * rate_from_time(t1_q);
    let b = 0.5 * rate_from_time(t_s_b);
    if lambda_eff == 0.0 {
        return time_from_rate(a);
    }
    if a + b == 0.0 {
        return f64::INFINITY;
    }
    if b == 0.0 {
        return 1.0 / a;
    }
    let lam = lambda_eff.abs();
    let period = 2.0 * PI / lam;
    // f ≤ e^{−a t} and f ≤ e^{b/λ − (a+b) t}; integrate until both tails are negligible
    let log_eps = -TAIL_EPS.ln();
    let mut cutoff = (b / lam + log_eps) / (a + b);
    if a > 0.0 {
        cutoff = cutoff.min(log_eps / a);
    }
    let end = period.min(cutoff);
    let f = |t: f64| coherence_envelope(t, t1_q, t_s_b, lambda_eff);
    let scale = 1.0 / (a + b);
    let one = integrate(f, 0.0, end, ENVELOPE_REL_TOL, TAIL_EPS * scale).value;
    one / -(-period * (a + b)).exp_m1()
}
