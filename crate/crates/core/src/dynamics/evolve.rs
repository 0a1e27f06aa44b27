use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, LindbladGenerator, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix4, C64};

/// Largest step the integrator accepts for `gen`.
pub fn max_step(gen: &LindbladGenerator) -> f64 {
    let fastest = gen.fastest_rate().max(gen.lambda_eff.abs() / (2.0 * std::f64::consts::PI));
    if fastest == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (20.0 * fastest)
    }
}

/// Classic RK4 on a linear autonomous system is the fixed matrix
/// I + hL + (hL)²/2 + (hL)³/6 + (hL)⁴/24, so one step is one mat-vec.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub dt: f64,
    pub step: Superoperator,
}

impl Propagator {
    pub fn rk4(gen: &LindbladGenerator, dt: f64) -> Result<Self> {
        let limit = max_step(gen);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if dt > limit {
            return Err(Error::StepTooLarge { dt, suggested: limit });
        }
        let hl = gen.superoperator() * C64::new(dt, 0.0);
        let id = Superoperator::identity();
        // Horner form of the degree-4 Taylor polynomial
        let c = |x: f64| C64::new(x, 0.0);
        let mut step = id + hl * (id + hl * (id * c(0.5) + hl * (id * c(1.0 / 6.0) + hl * c(1.0 / 24.0))));
        restore_trace_row(&mut step);
        Ok(Self { dt, step })
    }

    /// Propagator for `n` consecutive steps.
    pub fn power(&self, mut n: usize) -> Superoperator {
        let mut result = Superoperator::identity();
        let mut base = self.step;
        while n > 0 {
            if n & 1 == 1 {
                result *= base;
                restore_trace_row(&mut result);
            }
            n >>= 1;
            if n > 0 {
                base *= base;
                restore_trace_row(&mut base);
            }
        }
        result
    }
}

const TRACE_ROWS: [usize; 4] = [0, 5, 10, 15];

/// Remove rounding drift from the trace functional: the rows that sum to
/// tr ρ must add up to the trace row of the identity. Without this, long
/// strides accumulate one ulp of trace error per multiplication.
fn restore_trace_row(m: &mut Superoperator) {
    for c in 0..16 {
        let target = if TRACE_ROWS.contains(&c) { 1.0 } else { 0.0 };
        let sum: C64 = TRACE_ROWS.iter().map(|&r| m[(r, c)]).sum();
        let fix = (C64::new(target, 0.0) - sum) * 0.25;
        for &r in &TRACE_ROWS {
            m[(r, c)] += fix;
        }
    }
}

/// One explicit RK4 step evaluated stage by stage.
#[cfg(test)]
pub fn rk4_step(gen: &LindbladGenerator, rho: &CMatrix4, dt: f64) -> CMatrix4 {
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = gen.apply(rho);
    let k2 = gen.apply(&(rho + k1 * half));
    let k3 = gen.apply(&(rho + k2 * half));
    let k4 = gen.apply(&(rho + k3 * h));
    rho + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_defect: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn expectation(&self, op: &CMatrix4) -> Vec<f64> {
        self.states.iter().map(|r| r.expectation(op)).collect()
    }

    pub fn stats(&self) -> TrajectoryStats {
        let mut s = TrajectoryStats { max_trace_error: 0.0, min_eigenvalue: f64::INFINITY, max_hermiticity_defect: 0.0 };
        for r in &self.states {
            s.max_trace_error = s.max_trace_error.max((r.trace() - 1.0).abs());
            s.min_eigenvalue = s.min_eigenvalue.min(r.min_eigenvalue());
            s.max_hermiticity_defect = s.max_hermiticity_defect.max(r.hermiticity_defect());
        }
        s
    }
}

/// Every RK4 step from 0 to `t_max`.
pub fn evolve(gen: &LindbladGenerator, rho0: &DensityMatrix, t_max: f64, dt: f64) -> Result<Trajectory> {
    let steps = (t_max / dt).ceil().max(0.0) as usize;
    evolve_sampled(gen, rho0, dt, 1, steps + 1)
}

/// `samples` states spaced by `stride` RK4 steps, starting with `rho0`.
pub fn evolve_sampled(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    dt: f64,
    stride: usize,
    samples: usize,
) -> Result<Trajectory> {
    let prop = Propagator::rk4(gen, dt)?;
    let jump = prop.power(stride.max(1));
    let mut v: SVector<C64, 16> = rho0.to_vec();
    let mut out = Trajectory { times: Vec::with_capacity(samples), states: Vec::with_capacity(samples) };
    for k in 0..samples {
        if k > 0 {
            v = jump * v;
        }
        out.times.push(k as f64 * stride as f64 * dt);
        out.states.push(DensityMatrix::from_vec(&v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lindblad_generator, sigma_z_b, DegeneracyPolicy};
    use crate::model::{levels, BiasConditions, DefectParameters};
    use crate::rates::coherence_report;

    const CHI: f64 = 18.1e-30;

    fn gen(temperature: f64, chi: f64) -> (LindbladGenerator, crate::model::LevelStructure) {
        let l = levels(&DefectParameters::siv(), &BiasConditions::from_angles(temperature, 0.2, 40.0, 0.0, 60.0, 0.0))
            .unwrap();
        (lindblad_generator(&l, chi, temperature, DegeneracyPolicy::Combined), l)
    }

    #[test]
    fn propagator_equals_stagewise_rk4() {
        let (g, _) = gen(4.0, CHI);
        let dt = 0.5 * max_step(&g);
        let rho = DensityMatrix::diagonal([0.4, 0.3, 0.2, 0.1]).unwrap();
        let a = DensityMatrix::from_vec(&(Propagator::rk4(&g, dt).unwrap().step * rho.to_vec())).0;
        let b = rk4_step(&g, &rho.0, dt);
        assert!((a - b).iter().all(|z| z.norm() < 1e-14));
        let p = Propagator::rk4(&g, dt).unwrap();
        let mut direct = Superoperator::identity();
        for _ in 0..13 {
            direct = p.step * direct;
        }
        assert!((p.power(13) - direct).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn step_limit_is_enforced() {
        let (g, _) = gen(4.0, CHI);
        let limit = max_step(&g);
        match Propagator::rk4(&g, 2.0 * limit) {
            Err(Error::StepTooLarge { suggested, .. }) => assert_eq!(suggested, limit),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unitary_without_dissipation_conserves_purity() {
        let (g, _) = gen(4.0, 0.0);
        assert!(g.channels.is_empty());
        let mut m = CMatrix4::zeros();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m[(i, j)] = C64::new(0.5, 0.0);
        }
        let rho = DensityMatrix::new(m).unwrap();
        let dt = 2.0 * std::f64::consts::PI / g.lambda_eff.abs() / 400.0;
        let tr = evolve(&g, &rho, 200.0 * dt, dt).unwrap();
        for r in &tr.states {
            assert!((r.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn branch_polarization_relaxes_at_t1b_rate() {
        let t = 4.0;
        // zero strain, axial field: only branch flips
        let l = levels(&DefectParameters::siv(), &BiasConditions::from_angles(t, 0.1, 0.0, 0.0, 0.0, 0.0)).unwrap();
        let g = lindblad_generator(&l, CHI, t, DegeneracyPolicy::Combined);
        let report = coherence_report(&l, CHI, t).unwrap();
        let rho = DensityMatrix::diagonal([0.5, 0.5, 0.0, 0.0]).unwrap();
        let dt = max_step(&g);
        let stride = ((report.t1_b / 50.0) / dt).ceil() as usize;
        let tr = evolve_sampled(&g, &rho, dt, stride, 301).unwrap();
        let sz = tr.expectation(&sigma_z_b());
        let end = report.sigma_z_b_thermal;
        // slope of ln(σz − σz_th) over the first few T1
        let k = 50;
        let rate = -((sz[k] - end) / (sz[0] - end)).ln() / tr.times[k];
        assert!((rate * report.t1_b - 1.0).abs() < 0.01, "{}", rate * report.t1_b);
        let stats = tr.stats();
        assert!(stats.max_trace_error < 1e-9 && stats.min_eigenvalue > -1e-9);
    }

    #[test]
    fn thermal_state_stays_put() {
        let t = 4.0;
        let (_, l) = gen(t, CHI);
        let g = lindblad_generator(&l, CHI, t, DegeneracyPolicy::Independent);
        let w: Vec<f64> = l.energies.iter().map(|e| (-crate::units::reduced_energy(*e, t)).exp()).collect();
        let z: f64 = w.iter().sum();
        let rho = DensityMatrix::diagonal([w[0] / z, w[1] / z, w[2] / z, w[3] / z]).unwrap();
        let dt = max_step(&g);
        let tr = evolve_sampled(&g, &rho, dt, 1000, 20).unwrap();
        for r in &tr.states {
            assert!((r.0 - rho.0).iter().all(|x| x.norm() < 1e-9));
        }
    }
}
