use nalgebra::{Matrix3, Vector3};

use super::MaterialParameters;
use crate::error::{Error, Result};
use crate::linalg::eigh3;

const GPA: f64 = 1e9;

/// Rank-4 stiffness tensor in pascals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffnessTensor(pub [[[[f64; 3]; 3]; 3]; 3]);

impl StiffnessTensor {
    /// Cubic tensor in its crystal axes from (c11, c12, c44) in pascals.
    pub fn cubic(c11: f64, c12: f64, c44: f64) -> Self {
        let mut c = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                for (k, cijk) in cij.iter_mut().enumerate() {
                    for (l, v) in cijk.iter_mut().enumerate() {
                        *v = if i == j && j == k && k == l {
                            c11
                        } else {
                            let mut s = 0.0;
                            if i == j && k == l {
                                s += c12;
                            }
                            if (i == k && j == l) || (i == l && j == k) {
                                s += c44;
                            }
                            s
                        };
                    }
                }
            }
        }
        StiffnessTensor(c)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    /// c'_ijkl = R_ia R_jb R_kc R_ld c_abcd.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        // contract one index at a time: 4 * 81 * 3 operations instead of 81 * 81
        let mut a = self.0;
        for slot in 0..4 {
            let mut out = [[[[0.0; 3]; 3]; 3]; 3];
            for (i, oi) in out.iter_mut().enumerate() {
                for (j, oij) in oi.iter_mut().enumerate() {
                    for (k, oijk) in oij.iter_mut().enumerate() {
                        for (l, v) in oijk.iter_mut().enumerate() {
                            let idx = [i, j, k, l];
                            let mut s = 0.0;
                            for m in 0..3 {
                                let mut src = idx;
                                src[slot] = m;
                                s += r[(idx[slot], m)] * a[src[0]][src[1]][src[2]][src[3]];
                            }
                            *v = s;
                        }
                    }
                }
            }
            a = out;
        }
        StiffnessTensor(a)
    }

    /// Largest violation of minor and major index symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let v = self.get(i, j, k, l);
                        worst = worst
                            .max((v - self.get(j, i, k, l)).abs())
                            .max((v - self.get(i, j, l, k)).abs())
                            .max((v - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Stiffness of `material` expressed in its defect frame.
pub fn rotate_stiffness(material: &MaterialParameters) -> Result<StiffnessTensor> {
    material.validate()?;
    let cubic = StiffnessTensor::cubic(material.c11_gpa * GPA, material.c12_gpa * GPA, material.c44_gpa * GPA);
    Ok(cubic.rotated(&material.frame.matrix()))
}

/// M_il = c_ijkl k_j k_k / ρ.
pub fn christoffel(stiffness: &StiffnessTensor, density: f64, k: &Vector3<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for l in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for kk in 0..3 {
                    s += stiffness.get(i, j, kk, l) * k[j] * k[kk];
                }
            }
            m[(i, l)] = s / density;
        }
    }
    m
}

/// Sound speeds (ascending) and polarizations for one propagation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticModeSet {
    pub speeds: [f64; 3],
    pub polarizations: [Vector3<f64>; 3],
}

pub fn acoustic_modes(stiffness: &StiffnessTensor, density: f64, k: &Vector3<f64>) -> Result<AcousticModeSet> {
    if ((k.norm() - 1.0).abs()) > 1e-12 {
        return Err(Error::invalid("k", format!("propagation direction has norm {}", k.norm())));
    }
    let (values, polarizations) = eigh3(&christoffel(stiffness, density, k));
    if let Some(&bad) = values.iter().find(|&&v| v <= 0.0) {
        return Err(Error::ElasticInstability { eigenvalue: bad });
    }
    Ok(AcousticModeSet { speeds: values.map(f64::sqrt), polarizations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::DefectFrame;

    fn diamond_crystal() -> MaterialParameters {
        MaterialParameters::diamond().with_frame(DefectFrame::identity())
    }

    #[test]
    fn identity_rotation_keeps_voigt_constants() {
        let c = rotate_stiffness(&diamond_crystal()).unwrap();
        assert_eq!(c.get(0, 0, 0, 0), 1079e9);
        assert_eq!(c.get(0, 0, 1, 1), 124e9);
        assert_eq!(c.get(1, 2, 1, 2), 578e9);
        assert_eq!(c.get(0, 1, 2, 2), 0.0);
    }

    /// Direct 81-term sum per element.
    fn brute_rotate(c: &StiffnessTensor, r: &Matrix3<f64>) -> StiffnessTensor {
        let mut out = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut s = 0.0;
                        for a in 0..3 {
                            for b in 0..3 {
                                for cc in 0..3 {
                                    for d in 0..3 {
                                        s += r[(i, a)] * r[(j, b)] * r[(k, cc)] * r[(l, d)] * c.get(a, b, cc, d);
                                    }
                                }
                            }
                        }
                        out[i][j][k][l] = s;
                    }
                }
            }
        }
        StiffnessTensor(out)
    }

    #[test]
    fn rotation_matches_brute_force_and_111_axis_value() {
        let m = MaterialParameters::diamond();
        let c = rotate_stiffness(&m).unwrap();
        let brute = brute_rotate(&StiffnessTensor::cubic(1079e9, 124e9, 578e9), &m.frame.matrix());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert!((c.get(i, j, k, l) - brute.get(i, j, k, l)).abs() < 1e-12 * 1079e9);
                    }
                }
            }
        }
        let want = (1079.0 + 2.0 * 124.0 + 4.0 * 578.0) / 3.0 * 1e9;
        assert!((c.get(2, 2, 2, 2) - want).abs() < 1e-12 * want);
        assert!(c.symmetry_defect() < 1e-12 * 1079e9);
    }

    #[test]
    fn isotropic_tensor_is_rotation_invariant() {
        let base = MaterialParameters::isotropic(3000.0, 500.0, 100.0);
        let a = rotate_stiffness(&base.clone().with_frame(DefectFrame::identity())).unwrap();
        let b = rotate_stiffness(&base.with_frame(DefectFrame::default().rotated_about_z(0.3))).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert!((a.get(i, j, k, l) - b.get(i, j, k, l)).abs() < 1e-12 * 500e9);
                    }
                }
            }
        }
    }

    #[test]
    fn speeds_along_cube_axis() {
        let m = diamond_crystal();
        let c = rotate_stiffness(&m).unwrap();
        let modes = acoustic_modes(&c, m.density_kg_m3, &Vector3::x()).unwrap();
        let vt = (578e9 / 3512.0f64).sqrt();
        let vl = (1079e9 / 3512.0f64).sqrt();
        assert!((modes.speeds[0] - vt).abs() < 1e-9 * vt);
        assert!((modes.speeds[1] - vt).abs() < 1e-9 * vt);
        assert!((modes.speeds[2] - vl).abs() < 1e-9 * vl);
    }

    #[test]
    fn longitudinal_speed_along_111() {
        let m = diamond_crystal();
        let c = rotate_stiffness(&m).unwrap();
        let k = Vector3::new(1.0, 1.0, 1.0).normalize();
        let modes = acoustic_modes(&c, m.density_kg_m3, &k).unwrap();
        let want = ((1079.0f64 + 2.0 * 124.0 + 4.0 * 578.0) * 1e9 / (3.0 * 3512.0)).sqrt();
        assert!((modes.speeds[2] - want).abs() < 1e-9 * want);
        // longitudinal polarization along k
        assert!((modes.polarizations[2].dot(&k).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modes_satisfy_christoffel_equation() {
        let m = MaterialParameters::diamond();
        let c = rotate_stiffness(&m).unwrap();
        let k = Vector3::new(0.3, -0.5, 0.8).normalize();
        let modes = acoustic_modes(&c, m.density_kg_m3, &k).unwrap();
        let chr = christoffel(&c, m.density_kg_m3, &k);
        for (s, q) in modes.speeds.iter().zip(modes.polarizations.iter()) {
            let res = (chr * q - q * (s * s)).norm();
            assert!(res <= 1e-10 * s * s);
        }
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((modes.polarizations[a].dot(&modes.polarizations[b]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_speeds_do_not_depend_on_direction() {
        let m = MaterialParameters::isotropic(3000.0, 500.0, 100.0);
        let c = rotate_stiffness(&m).unwrap();
        let a = acoustic_modes(&c, 3000.0, &Vector3::z()).unwrap();
        let b = acoustic_modes(&c, 3000.0, &Vector3::new(0.2, 0.9, -0.1).normalize()).unwrap();
        for (x, y) in a.speeds.iter().zip(b.speeds.iter()) {
            assert!((x - y).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn rejects_unnormalised_direction_and_unstable_tensor() {
        let c = rotate_stiffness(&MaterialParameters::diamond()).unwrap();
        assert!(acoustic_modes(&c, 3512.0, &Vector3::new(1.0, 1.0, 0.0)).is_err());
        let neg = StiffnessTensor::cubic(-1.0, 0.0, -1.0);
        assert!(matches!(
            acoustic_modes(&neg, 1.0, &Vector3::z()),
            Err(Error::ElasticInstability { .. })
        ));
    }
}
