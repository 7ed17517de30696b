//! Dense 2×2 / 3×3 matrix and 3-vector kernels.
//!
//! Every matrix is a plain `nalgebra` fixed-size matrix. The inner product is
//! the Frobenius product `⟨X, Y⟩ = tr(X Yᵀ)`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Matrix3x2, SymmetricEigen, Vector2, Vector3};

use crate::error::{Result, ShellError};

/// 3×3 real matrix.
pub type Mat3 = Matrix3<f64>;
/// 2×2 real matrix.
pub type Mat2 = Matrix2<f64>;
/// 3×2 real matrix, used for column pairs such as `(∂₁n | ∂₂n)`.
pub type Mat32 = Matrix3x2<f64>;
/// Real 3-vector.
pub type Vec3 = Vector3<f64>;
/// Real 2-vector.
pub type Vec2 = Vector2<f64>;

/// Relative threshold below which a smallest eigenvalue counts as non-positive.
pub const EPS_SPD_REL: f64 = 1e-12;
/// Relative threshold `det F ≤ EPS_DET_REL·‖F‖³` flagging a degenerate matrix.
pub const EPS_DET_REL: f64 = 1e-12;
/// Relative tolerance on the symmetric part accepted by [`axl`].
pub const SKEW_TOL_REL: f64 = 1e-10;
/// Eigenvalues below this fraction of the trace are clamped to zero in [`psd_sqrt`].
pub const PSD_CLAMP_REL: f64 = 1e-12;

/// Frobenius inner product `tr(X Yᵀ)`.
pub fn inner(x: &Mat3, y: &Mat3) -> f64 {
    x.component_mul(y).sum()
}

/// Frobenius inner product of 2×2 matrices.
pub fn inner2(x: &Mat2, y: &Mat2) -> f64 {
    x.component_mul(y).sum()
}

/// Symmetric part `(X + Xᵀ)/2`.
pub fn sym(x: &Mat3) -> Mat3 {
    (x + x.transpose()) * 0.5
}

/// Skew-symmetric part `(X − Xᵀ)/2`.
pub fn skew(x: &Mat3) -> Mat3 {
    (x - x.transpose()) * 0.5
}

/// Symmetric part of a 2×2 matrix.
pub fn sym2(x: &Mat2) -> Mat2 {
    (x + x.transpose()) * 0.5
}

/// Skew-symmetric part of a 2×2 matrix.
pub fn skew2(x: &Mat2) -> Mat2 {
    (x - x.transpose()) * 0.5
}

/// Deviatoric symmetric part `sym X − (tr X / 3)·1₃`.
pub fn dev_sym(x: &Mat3) -> Mat3 {
    sym(x) - Mat3::identity() * (x.trace() / 3.0)
}

/// Orthogonal split of a 3×3 matrix into deviatoric-symmetric, skew and trace parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartanParts {
    /// Symmetric, trace-free part.
    pub dev_sym: Mat3,
    /// Antisymmetric part.
    pub skew: Mat3,
    /// Trace of the input.
    pub trace: f64,
}

impl CartanParts {
    /// Reassembles `devSym + skew + (trace/3)·1₃`.
    pub fn recompose(&self) -> Mat3 {
        self.dev_sym + self.skew + Mat3::identity() * (self.trace / 3.0)
    }
}

/// Splits `X = devSym + skew + (tr X / 3)·1₃`.
pub fn cartan_decompose(x: &Mat3) -> CartanParts {
    CartanParts { dev_sym: dev_sym(x), skew: skew(x), trace: x.trace() }
}

/// Axial vector of a skew-symmetric matrix, `axl(A) = (−A₂₃, A₁₃, −A₁₂)`.
///
/// Fails with [`ShellError::NonSkewInput`] when `‖sym A‖ > 1e-10·‖A‖`.
pub fn axl(a: &Mat3) -> Result<Vec3> {
    let sym_norm = sym(a).norm();
    if sym_norm > SKEW_TOL_REL * a.norm() {
        return Err(ShellError::NonSkewInput { sym_norm });
    }
    Ok(axl_unchecked(a))
}

/// Axial vector of the skew part of `A`, without any symmetry check.
pub fn axl_unchecked(a: &Mat3) -> Vec3 {
    let s = skew(a);
    Vec3::new(-s[(1, 2)], s[(0, 2)], -s[(0, 1)])
}

/// Skew-symmetric matrix with axial vector `v`, so that `anti(v)·w = v × w`.
pub fn anti(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Square root of a symmetric positive definite 3×3 matrix.
///
/// The input is symmetrized before the eigendecomposition. Fails with
/// [`ShellError::NotSpd`] when the smallest eigenvalue is at most `1e-12·‖M‖`.
pub fn spd_sqrt(m: &Mat3) -> Result<Mat3> {
    let (values, vectors) = symmetric_eigen(m);
    let min = values.min();
    if min <= EPS_SPD_REL * m.norm() {
        return Err(ShellError::NotSpd { min_eigenvalue: min });
    }
    Ok(from_eigen(&values, &vectors, f64::sqrt))
}

/// Square root of a symmetric positive semidefinite 3×3 matrix.
///
/// Eigenvalues below `1e-12·tr M` are clamped to zero, so rank-deficient inputs
/// such as a pulled-back surface metric have a well-defined root.
pub fn psd_sqrt(m: &Mat3) -> Mat3 {
    let (values, vectors) = symmetric_eigen(m);
    let cut = PSD_CLAMP_REL * m.trace().abs();
    from_eigen(&values, &vectors, |l| if l <= cut { 0.0 } else { l.sqrt() })
}

fn from_eigen(values: &Vec3, vectors: &Mat3, f: impl Fn(f64) -> f64) -> Mat3 {
    let d = Mat3::from_diagonal(&values.map(f));
    sym(&(vectors * d * vectors.transpose()))
}

/// Reconstruction tolerance that triggers the SVD fallback in the eigensolvers.
const EIGEN_RECON_REL: f64 = 1e-10;

/// Eigenvalues and orthonormal eigenvectors (columns) of the symmetric part of `m`.
///
/// The QR-based solver occasionally returns a wrong eigenbasis for matrices
/// with a repeated eigenvalue; when its reconstruction error exceeds
/// `1e-10·(1 + ‖M‖)` the decomposition is recomputed from the SVD of the
/// positive definite shift `M + ‖M‖·1₃`.
pub fn symmetric_eigen(m: &Mat3) -> (Vec3, Mat3) {
    let s = sym(m);
    let eig = SymmetricEigen::new(s);
    let tol = EIGEN_RECON_REL * (1.0 + s.norm());
    let v = if (eig.recompose() - s).norm() <= tol {
        eig.eigenvectors
    } else {
        let shift = s.norm() + f64::MIN_POSITIVE;
        let svd = (s + Mat3::identity() * shift).svd(true, true);
        svd.v_t.expect("right singular vectors requested").transpose()
    };
    jacobi_polish(&s, v)
}

/// Cyclic Jacobi sweeps on `VᵀSV` until its off-diagonal part is at rounding
/// level. The QR solver stops at a loose tolerance (reconstruction errors near
/// `1e-12·‖S‖`), which the sweeps remove.
fn jacobi_polish(s: &Mat3, mut v: Mat3) -> (Vec3, Mat3) {
    let mut a = sym(&(v.transpose() * s * v));
    let floor = f64::EPSILON * 1e-2 * s.norm();
    for _ in 0..8 {
        let off = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2)).sqrt();
        if off <= floor {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq.abs() <= f64::MIN_POSITIVE {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let mut j = Mat3::identity();
            j[(p, p)] = c;
            j[(q, q)] = c;
            j[(p, q)] = t * c;
            j[(q, p)] = -t * c;
            a = sym(&(j.transpose() * a * j));
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= j;
        }
    }
    (a.diagonal(), v)
}

/// Eigenvalues of a symmetric matrix of any size, with the same fallback as [`symmetric_eigen`].
pub fn symmetric_eigenvalues_dyn(m: &DMatrix<f64>) -> DVector<f64> {
    let s = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s.clone());
    if (eig.recompose() - &s).norm() <= EIGEN_RECON_REL * (1.0 + s.norm()) {
        return eig.eigenvalues;
    }
    let shift = s.norm() + f64::MIN_POSITIVE;
    let n = s.nrows();
    (s + DMatrix::identity(n, n) * shift).singular_values().map(|x| x - shift)
}

/// Square root of a symmetric positive definite 2×2 matrix in closed form,
/// `√M = (M + √det M·1₂)/√(tr M + 2√det M)`.
pub fn spd_sqrt2(m: &Mat2) -> Result<Mat2> {
    let s = sym2(m);
    let det = s.determinant();
    let tr = s.trace();
    let disc = ((s[(0, 0)] - s[(1, 1)]).powi(2) + 4.0 * s[(0, 1)].powi(2)).sqrt();
    let min = 0.5 * (tr - disc);
    if min <= EPS_SPD_REL * s.norm() || det <= 0.0 {
        return Err(ShellError::NotSpd { min_eigenvalue: min });
    }
    let rd = det.sqrt();
    Ok((s + Mat2::identity() * rd) / (tr + 2.0 * rd).sqrt())
}

/// Right polar decomposition `F = Q·U` with `Q ∈ SO(3)` and `U = √(FᵀF)`.
///
/// Computed from the singular value decomposition `F = W Σ Vᵀ` as `Q = W Vᵀ`
/// and `U = V Σ Vᵀ`, which keeps `Q` orthogonal to machine precision even for
/// badly conditioned `F`. `Q` is then corrected by small rotations until
/// `skew(QᵀF)` vanishes to working precision, which keeps finite differences
/// of the polar field smooth. Fails with [`ShellError::Degenerate`] when
/// `det F ≤ 1e-12·‖F‖³`.
pub fn polar(f: &Mat3) -> Result<(Mat3, Mat3)> {
    let det = f.determinant();
    if !(det > EPS_DET_REL * f.norm().powi(3)) {
        return Err(ShellError::Degenerate { det });
    }
    let svd = f.svd(true, true);
    let w = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut q = w * vt;
    // Rotate Q so that Qᵀ F becomes symmetric to working precision.
    for _ in 0..2 {
        let x = q.transpose() * f;
        let xs = sym(&x);
        let lhs = Mat3::identity() * xs.trace() - xs;
        match lhs.try_inverse() {
            Some(inv) => q *= nalgebra::Rotation3::new(inv * axl_unchecked(&skew(&x)) * 2.0).into_inner(),
            None => break,
        }
    }
    let u = sym(&(q.transpose() * f));
    Ok((q, u))
}

/// Embeds a 2×2 matrix in the upper-left block of 1₃ (`(3,3)` entry 1).
pub fn lift_hat(m: &Mat2) -> Mat3 {
    let mut r = lift_flat(m);
    r[(2, 2)] = 1.0;
    r
}

/// Embeds a 2×2 matrix in the upper-left block of 0₃.
pub fn lift_flat(m: &Mat2) -> Mat3 {
    let mut r = Mat3::zeros();
    r.fixed_view_mut::<2, 2>(0, 0).copy_from(m);
    r
}

/// Upper-left 2×2 block of a 3×3 matrix.
pub fn upper_block(m: &Mat3) -> Mat2 {
    m.fixed_view::<2, 2>(0, 0).into_owned()
}

/// `1₂♭ = diag(1, 1, 0)`.
pub fn flat_identity() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0))
}

/// Matrix with columns `(a | b | c)`.
pub fn from_columns(a: &Vec3, b: &Vec3, c: &Vec3) -> Mat3 {
    Mat3::from_columns(&[*a, *b, *c])
}

/// Matrix `(a | b | 0)`.
pub fn from_two_columns(a: &Vec3, b: &Vec3) -> Mat3 {
    Mat3::from_columns(&[*a, *b, Vec3::zeros()])
}

/// Matrix `(M | 0)` for a 3×2 block `M`.
pub fn pad_columns(m: &Mat32) -> Mat3 {
    Mat3::from_columns(&[m.column(0).into_owned(), m.column(1).into_owned(), Vec3::zeros()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cartan_of_identity_is_pure_trace() {
        let p = cartan_decompose(&Mat3::identity());
        assert_eq!(p.dev_sym, Mat3::zeros());
        assert_eq!(p.skew, Mat3::zeros());
        assert_eq!(p.trace, 3.0);
    }

    #[test]
    fn cartan_of_antisymmetric_is_pure_skew() {
        let a = anti(&Vec3::new(0.3, -1.2, 2.0));
        let p = cartan_decompose(&a);
        assert_eq!(p.dev_sym, Mat3::zeros());
        assert_eq!(p.skew, a);
        assert_eq!(p.trace, 0.0);
    }

    #[test]
    fn axl_reads_the_documented_entries() {
        let mut a = Mat3::zeros();
        a[(0, 1)] = -1.0;
        a[(1, 0)] = 1.0;
        assert_eq!(axl(&a).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(axl(&Mat3::zeros()).unwrap(), Vec3::zeros());
    }

    #[test]
    fn axl_rejects_symmetric_input() {
        assert!(matches!(axl(&Mat3::identity()), Err(ShellError::NonSkewInput { .. })));
    }

    #[test]
    fn anti_matches_cross_product() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        let w = Vec3::new(-0.5, 0.25, 4.0);
        assert_relative_eq!(anti(&v) * w, v.cross(&w), epsilon = 1e-15);
    }

    #[test]
    fn spd_sqrt_of_diagonal() {
        assert_relative_eq!(spd_sqrt(&Mat3::identity()).unwrap(), Mat3::identity(), epsilon = 1e-15);
        let m = Mat3::from_diagonal(&Vec3::new(4.0, 9.0, 1.0));
        let r = Mat3::from_diagonal(&Vec3::new(2.0, 3.0, 1.0));
        assert_relative_eq!(spd_sqrt(&m).unwrap(), r, epsilon = 1e-14);
    }

    #[test]
    fn spd_sqrt_rejects_singular() {
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0));
        assert!(matches!(spd_sqrt(&m), Err(ShellError::NotSpd { .. })));
        assert_relative_eq!(psd_sqrt(&m), m, epsilon = 1e-15);
    }

    #[test]
    fn spd_sqrt2_squares_back() {
        let m = Mat2::new(3.0, 0.7, 0.7, 1.5);
        let r = spd_sqrt2(&m).unwrap();
        assert_relative_eq!(r * r, m, epsilon = 1e-14);
        assert!(spd_sqrt2(&Mat2::new(1.0, 0.0, 0.0, -1.0)).is_err());
    }

    #[test]
    fn polar_of_spd_input_is_trivial() {
        let (q, u) = polar(&Mat3::identity()).unwrap();
        assert_relative_eq!(q, Mat3::identity(), epsilon = 1e-15);
        assert_relative_eq!(u, Mat3::identity(), epsilon = 1e-15);
        let f = Mat3::from_diagonal(&Vec3::new(2.0, 3.0, 4.0));
        let (q, u) = polar(&f).unwrap();
        assert_relative_eq!(q, Mat3::identity(), epsilon = 1e-14);
        assert_relative_eq!(u, f, epsilon = 1e-14);
    }

    #[test]
    fn polar_rejects_reflections() {
        let f = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(matches!(polar(&f), Err(ShellError::Degenerate { .. })));
    }

    #[test]
    fn lifts() {
        assert_eq!(lift_hat(&Mat2::identity()), Mat3::identity());
        assert_eq!(lift_flat(&Mat2::identity()), flat_identity());
        let m = Mat2::new(1.5, -2.0, 0.25, 7.0);
        assert_eq!(lift_flat(&m), lift_hat(&m) * flat_identity());
    }

    #[test]
    fn eigenbasis_fallback_on_repeated_eigenvalue() {
        // Rank-2 pulled-back metric of a torus point; the QR solver returns a wrong basis here.
        let m = Mat3::new(
            0.750_000_000_000_000_1,
            1.436_450_265_166_632_7e-16,
            0.433_012_701_892_219_24,
            1.436_450_265_166_633_2e-16,
            1.000_000_000_000_000_2,
            -5.847_653_710_284_111e-17,
            0.433_012_701_892_219_2,
            -5.847_653_710_284_111e-17,
            0.249_999_999_999_999_83,
        );
        let (values, vectors) = symmetric_eigen(&m);
        let recon = vectors * Mat3::from_diagonal(&values) * vectors.transpose();
        assert!((recon - m).norm() < 1e-13);
        let r = psd_sqrt(&m);
        assert!((r * r - m).norm() < 1e-12);
    }
}
