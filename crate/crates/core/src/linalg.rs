//! Small dense complex linear algebra.
//!
//! Everything the rest of the crate is checked against lives here: Pauli and
//! Bloch-rotation constructors, exact Hermitian exponentials and a
//! phase-insensitive gate comparison. Matrices are plain
//! [`nalgebra::DMatrix`]es of [`Complex64`]; dimensions in this crate are 2, 4
//! or `2^N` for `N <= 12`.

use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance used when validating unit axes and Hermitian inputs.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn hadamard() -> ComplexMatrix {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// Diagonal matrix from complex entries.
pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries))
}

/// Kronecker product `a ⊗ b`; `a` indexes the more significant block.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `‖U†U − I‖_max`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &identity(n))
}

/// `‖H − H†‖_max`.
pub fn hermiticity_error(h: &ComplexMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_error(u) <= tol
}

fn require_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if !m.is_square() || m.nrows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{what} must be square with dim >= 2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Rotation axis and angle on the Bloch sphere.
///
/// The angle is stored in `[0, 4π)`; spinor rotations repeat with period 4π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    axis: Vector3<f64>,
    angle: f64,
}

impl AxisAngle {
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let axis = Vector3::from(axis);
        let norm = axis.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::InvalidArgument(format!(
                "rotation axis must be unit norm, got |n| = {norm}"
            )));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidArgument("rotation angle must be finite".into()));
        }
        Ok(Self {
            axis,
            angle: angle.rem_euclid(4.0 * PI),
        })
    }

    /// Normalises `axis` first; handy for random axes.
    pub fn from_direction(direction: [f64; 3], angle: f64) -> Result<Self> {
        let v = Vector3::from(direction);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("zero or non-finite direction".into()));
        }
        Self::new((v / norm).into(), angle)
    }

    pub fn x(angle: f64) -> Self {
        Self::new([1.0, 0.0, 0.0], angle).expect("unit axis")
    }

    pub fn y(angle: f64) -> Self {
        Self::new([0.0, 1.0, 0.0], angle).expect("unit axis")
    }

    pub fn z(angle: f64) -> Self {
        Self::new([0.0, 0.0, 1.0], angle).expect("unit axis")
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis.into()
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// `R_n(ψ) = cos(ψ/2) I − i sin(ψ/2) (n·σ)`.
pub fn rotation_operator(rotation: &AxisAngle) -> ComplexMatrix {
    let half = 0.5 * rotation.angle;
    let (s, c) = half.sin_cos();
    let [nx, ny, nz] = rotation.axis();
    // -i s (nx σx + ny σy + nz σz)
    let m00 = Complex64::new(c, -s * nz);
    let m11 = Complex64::new(c, s * nz);
    let m01 = Complex64::new(-s * ny, -s * nx);
    let m10 = Complex64::new(s * ny, -s * nx);
    ComplexMatrix::from_row_slice(2, 2, &[m00, m01, m10, m11])
}

/// `exp(−iHt)` for Hermitian `H`.
///
/// 2×2 inputs use the closed form `e^{−i a₀ t}(cos(rt) I − i sin(rt) v̂·σ)`;
/// larger ones go through a full Hermitian eigendecomposition.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let dim = require_square(h, "Hamiltonian")?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument("evolution time must be finite".into()));
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let herm = hermiticity_error(h);
    if herm > CONSTRUCTION_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian: ‖H − H†‖_max = {herm:e}"
        )));
    }
    if dim == 2 {
        return Ok(expm_hermitian_2x2(h, t));
    }
    let eigen = SymmetricEigen::new(h.clone());
    let phases = eigen.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t));
    let v = &eigen.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(scaled * v.adjoint())
}

fn expm_hermitian_2x2(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let vz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let (vx, vy) = (off.re, -off.im);
    let r = (vx * vx + vy * vy + vz * vz).sqrt();
    let (s, c) = (r * t).sin_cos();
    // sin(rt)/r, finite as r -> 0
    let sr = if r * t.abs() < 1e-8 {
        t * (1.0 - (r * t).powi(2) / 6.0)
    } else {
        s / r
    };
    let phase = Complex64::from_polar(1.0, -a0 * t);
    let m00 = Complex64::new(c, -sr * vz);
    let m11 = Complex64::new(c, sr * vz);
    let m01 = Complex64::new(-sr * vy, -sr * vx);
    let m10 = Complex64::new(sr * vy, -sr * vx);
    ComplexMatrix::from_row_slice(2, 2, &[m00, m01, m10, m11]) * phase
}

/// `|tr(U†V)| / d`. Equals one exactly when `U = e^{iφ} V`.
pub fn fidelity_up_to_phase(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    let dim = require_square(u, "left operand")?;
    if v.shape() != u.shape() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let tr: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(tr.norm() / dim as f64)
}

/// Phase `φ` minimising `‖e^{iφ}V − U‖`, i.e. `arg tr(V†U)`.
pub fn relative_phase(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let tr: Complex64 = v.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum();
    tr.arg()
}

/// Inverse of [`rotation_operator`] up to sign.
///
/// The input is rescaled to unit determinant first. Returns an angle in
/// `[0, 2π]`; a vanishing rotation reports the z axis.
pub fn axis_angle_from_unitary(u: &ComplexMatrix) -> Result<AxisAngle> {
    if u.shape() != (2, 2) {
        return Err(Error::InvalidArgument(format!(
            "expected a 2x2 unitary, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    if det.norm() < 1e-300 {
        return Err(Error::InvalidArgument("singular matrix".into()));
    }
    let v = u / det.sqrt();
    // V = c I − i s n·σ  =>  c = Re tr(V)/2, s n_k = −Im tr(V σ_k)/2
    let c = 0.5 * (v[(0, 0)] + v[(1, 1)]).re;
    let sx = -0.5 * (v[(0, 1)] + v[(1, 0)]).im;
    let sy = -0.5 * (I * v[(0, 1)] - I * v[(1, 0)]).im;
    let sz = -0.5 * (v[(0, 0)] - v[(1, 1)]).im;
    let s = (sx * sx + sy * sy + sz * sz).sqrt();
    let angle = 2.0 * s.atan2(c);
    if s < 1e-15 {
        return AxisAngle::new([0.0, 0.0, 1.0], angle);
    }
    AxisAngle::new([sx / s, sy / s, sz / s], angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_rotation_is_identity() {
        let r = rotation_operator(&AxisAngle::z(0.0));
        assert!(max_abs_diff(&r, &identity(2)) < 1e-15);
    }

    #[test]
    fn z_pi_rotation() {
        let r = rotation_operator(&AxisAngle::z(PI));
        let expect = diag(&[c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(max_abs_diff(&r, &expect) < 1e-15);
    }

    #[test]
    fn y_quarter_rotation() {
        let r = rotation_operator(&AxisAngle::y(PI / 2.0));
        let h = FRAC_1_SQRT_2;
        let expect = ComplexMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0)]);
        assert!(max_abs_diff(&r, &expect) < 1e-15);
    }

    #[test]
    fn rotation_has_unit_determinant() {
        let r = rotation_operator(&AxisAngle::new([0.6, 0.0, 0.8], 1.1).unwrap());
        let det = r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)];
        assert!((det - ONE).norm() < 1e-12);
        assert!(unitarity_error(&r) < 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(matches!(
            AxisAngle::new([1.0, 1.0, 0.0], 0.3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn expm_of_zero_is_identity() {
        for dim in [2, 4, 8] {
            let u = expm_hermitian(&ComplexMatrix::zeros(dim, dim), 1.7).unwrap();
            assert!(max_abs_diff(&u, &identity(dim)) < 1e-14);
        }
    }

    #[test]
    fn expm_diagonal() {
        let u = expm_hermitian(&pauli_z(), PI / 2.0).unwrap();
        let expect = diag(&[c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(max_abs_diff(&u, &expect) < 1e-15);
    }

    #[test]
    fn expm_gives_hadamard_up_to_minus_i() {
        let h = pauli_x() + pauli_z();
        let u = expm_hermitian(&h, PI / (2.0 * SQRT_2)).unwrap();
        let expect = (pauli_x() + pauli_z()) * c(0.0, -FRAC_1_SQRT_2);
        assert!(max_abs_diff(&u, &expect) < 1e-15);
        assert_abs_diff_eq!(fidelity_up_to_phase(&u, &hadamard()).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_closed_form_matches_eigensolver() {
        // embed the 2x2 into a 4x4 block diagonal so the eigensolver path runs
        let h2 = ComplexMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.7, -0.2), c(0.7, 0.2), c(-1.1, 0.0)]);
        let mut h4 = ComplexMatrix::zeros(4, 4);
        h4.view_mut((0, 0), (2, 2)).copy_from(&h2);
        h4.view_mut((2, 2), (2, 2)).copy_from(&h2);
        let u2 = expm_hermitian(&h2, 2.3).unwrap();
        let u4 = expm_hermitian(&h4, 2.3).unwrap();
        assert!(max_abs_diff(&u2, &u4.view((0, 0), (2, 2)).into_owned()) < 1e-13);
        assert!(max_abs_diff(&u2, &u4.view((2, 2), (2, 2)).into_owned()) < 1e-13);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(expm_hermitian(&m, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fidelity_cases() {
        let u = rotation_operator(&AxisAngle::new([0.0, 0.6, 0.8], 2.0).unwrap());
        assert_abs_diff_eq!(fidelity_up_to_phase(&u, &u).unwrap(), 1.0, epsilon = 1e-15);
        let phased = &u * Complex64::from_polar(1.0, 0.77);
        assert_abs_diff_eq!(fidelity_up_to_phase(&u, &phased).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_up_to_phase(&identity(2), &pauli_x()).unwrap(), 0.0);
        assert!(fidelity_up_to_phase(&identity(2), &identity(4)).is_err());
    }

    #[test]
    fn axis_angle_examples() {
        let aa = axis_angle_from_unitary(&identity(2)).unwrap();
        assert_eq!(aa.axis(), [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(aa.angle(), 0.0);

        let aa = axis_angle_from_unitary(&(pauli_y() * -I)).unwrap();
        let [x, y, z] = aa.axis();
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(aa.angle(), PI, epsilon = 1e-15);

        let src = AxisAngle::new([0.6, 0.0, 0.8], 1.1).unwrap();
        let back = axis_angle_from_unitary(&rotation_operator(&src)).unwrap();
        for (a, b) in back.axis().iter().zip(src.axis()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(back.angle(), 1.1, epsilon = 1e-12);
    }

    #[test]
    fn axis_angle_ignores_global_phase() {
        let src = AxisAngle::new([0.0, 0.6, -0.8], 2.5).unwrap();
        let u = rotation_operator(&src) * Complex64::from_polar(1.0, 1.3);
        let back = axis_angle_from_unitary(&u).unwrap();
        let f = fidelity_up_to_phase(&rotation_operator(&back), &u).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }
}
