//! Physical constants and unit conversions.

use std::f64::consts::TAU;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton over Planck's constant, GHz/T.
pub const MU_B_GHZ_PER_T: f64 = 13.996_244_936;

/// Ordinary frequency in GHz to angular frequency in rad/s.
#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TAU * 1e9 * f_ghz
}

/// Angular frequency in rad/s to ordinary frequency in GHz.
#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (TAU * 1e9)
}

/// Ordinary frequency per unit strain in PHz to rad/s per unit strain.
#[inline]
pub fn phz_to_angular(f_phz: f64) -> f64 {
    TAU * 1e15 * f_phz
}

/// ħω / k_B T. Infinite at zero temperature.
#[inline]
pub fn reduced_energy(omega: f64, temperature: f64) -> f64 {
    HBAR * omega / (K_B * temperature)
}
