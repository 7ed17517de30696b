//! Seeded random generators for strain states, rotations and admissible
//! deformations, shared by the Monte-Carlo checks and the test suites.

use rand::Rng;

use crate::strain_measures::StrainState;
use crate::surface_geometry::{SurfaceJet, SurfaceParam};
use crate::tensor_algebra::{Mat3, Vec3};
use nalgebra::{Rotation3, Unit};

/// Matrix with entries uniform in `[−scale, scale]`.
pub fn random_mat3<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-scale..=scale))
}

/// Vector with entries uniform in `[−scale, scale]`.
pub fn random_vec3<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.gen_range(-scale..=scale))
}

/// Rotation about a uniformly random axis by an angle uniform in `[−π, π]`.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Mat3 {
    let axis = loop {
        let v = random_vec3(rng, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v;
        }
    };
    let angle = rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI);
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
}

/// Strain pair `((Z₁ | 0)[∇Θ]⁻¹, (Z₂ | 0)[∇Θ]⁻¹)` with `Z₁, Z₂ ∈ ℝ^{3×2}` uniform
/// in `[−scale, scale]`, so both tensors annihilate the reference normal as
/// the strains of any pair `(m, Q)` do.
pub fn random_strain_state<R: Rng + ?Sized>(rng: &mut R, jet: &SurfaceJet, scale: f64) -> StrainState {
    let mut pick = || {
        let mut z = random_mat3(rng, scale);
        z.column_mut(2).fill(0.0);
        z * jet.grad_theta_inv
    };
    let e = pick();
    let k = pick();
    StrainState { e, k }
}

/// Strain pair whose three symmetry residuals vanish: `E` is symmetric and
/// tangential, and `K = −C(Y − E·B) + n₀⊗v` with `Y = a·A + b·B`, so that the
/// coupling tensor `E·B + C·K = Y` and `Y·B` are symmetric.
pub fn random_symmetric_strain_state<R: Rng + ?Sized>(rng: &mut R, jet: &SurfaceJet, scale: f64) -> StrainState {
    let a = &jet.a;
    let e = a * crate::tensor_algebra::sym(&random_mat3(rng, scale)) * a;
    let y = a * rng.gen_range(-scale..scale) + jet.b * rng.gen_range(-scale..scale);
    let v = random_vec3(rng, scale);
    let k = -(jet.c * (y - e * jet.b)) + jet.n * v.transpose();
    StrainState { e, k }
}

/// Axisymmetric, orientation-preserving deformation of the cylinder
/// `(cos x₁, sin x₁, x₂)`: a torus over the cylinder parameters, optionally
/// offset along its normal, radially rescaled and mapped by `Q̂·diag(a, a, b)`.
///
/// Axisymmetry keeps both fundamental forms diagonal in the cylinder frame,
/// so the constrained coupling tensors are symmetric.
pub fn random_cylinder_deformation<R: Rng + ?Sized>(rng: &mut R) -> SurfaceParam {
    let mut s = SurfaceParam::Torus { major: rng.gen_range(1.5..3.0), minor: rng.gen_range(0.6..1.5) };
    if rng.gen_bool(0.5) {
        s = SurfaceParam::NormalOffset { base: Box::new(s), offset: rng.gen_range(-0.2..0.2) };
    }
    if rng.gen_bool(0.5) {
        s = SurfaceParam::RadialScale { base: Box::new(s), factor: rng.gen_range(0.7..1.4) };
    }
    let (a, b) = (rng.gen_range(0.7..1.4), rng.gen_range(0.7..1.4));
    let matrix = random_rotation(rng) * Mat3::from_diagonal(&Vec3::new(a, a, b));
    SurfaceParam::AffineImage { base: Box::new(s), matrix, shift: random_vec3(rng, 1.0) }
}
