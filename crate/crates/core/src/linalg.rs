//! Small dense linear algebra shared by the model, acoustics and dynamics code.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix4 = Matrix4<C64>;
pub type CVector4 = Vector4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigen-decomposition of a Hermitian 4×4 matrix, eigenvalues ascending.
///
/// Each eigenvector is rotated so that its largest-magnitude component is real
/// and positive, which makes the output reproducible across calls.
pub fn eigh4(h: &CMatrix4) -> ([f64; 4], CMatrix4) {
    let eig = SymmetricEigen::new(*h);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = [0.0; 4];
    let mut vectors = CMatrix4::zeros();
    for (col, &k) in order.iter().enumerate() {
        values[col] = eig.eigenvalues[k];
        let mut v = eig.eigenvectors.column(k).into_owned();
        let pivot = (0..4)
            .max_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))
            .unwrap_or(0);
        let phase = v[pivot] / v[pivot].norm();
        v /= phase;
        v[pivot] = C64::new(v[pivot].re, 0.0);
        let norm = v.norm();
        vectors.set_column(col, &(v / C64::new(norm, 0.0)));
    }
    (values, vectors)
}

/// Eigen-decomposition of a real symmetric 3×3 matrix, eigenvalues ascending.
pub fn eigh3(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|k| eig.eigenvalues[k]);
    let vectors = order.map(|k| eig.eigenvectors.column(k).normalize());
    (values, vectors)
}

pub fn dagger(m: &CMatrix4) -> CMatrix4 {
    m.adjoint()
}

/// Kronecker product of two 2×2 complex matrices, first factor outermost.
pub fn kron2(a: &nalgebra::Matrix2<C64>, b: &nalgebra::Matrix2<C64>) -> CMatrix4 {
    let mut out = CMatrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub mod pauli {
    use super::{C64, I, ONE, ZERO};
    use nalgebra::Matrix2;

    pub fn identity() -> Matrix2<C64> {
        Matrix2::new(ONE, ZERO, ZERO, ONE)
    }
    pub fn x() -> Matrix2<C64> {
        Matrix2::new(ZERO, ONE, ONE, ZERO)
    }
    pub fn y() -> Matrix2<C64> {
        Matrix2::new(ZERO, -I, I, ZERO)
    }
    pub fn z() -> Matrix2<C64> {
        Matrix2::new(ONE, ZERO, ZERO, -ONE)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix4, b: &CMatrix4) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
