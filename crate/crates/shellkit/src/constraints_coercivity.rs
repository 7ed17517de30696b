//! Thickness admissibility, extreme eigenvalues of the constitutive forms and
//! coercivity lower bounds of the shell energy densities.

use nalgebra::DMatrix;

use crate::energy_forms::{density_unconstrained, w_curv, w_shell, w_shell_inf_bilinear_unchecked, ModelVariant, ThicknessOrder};
use crate::error::{Result, ShellError};
use crate::strain_measures::{ShellMaterial, StrainState};
use crate::surface_geometry::{principal_curvature_bound, SampleGrid, SurfaceJet, SurfaceParam};
use crate::tensor_algebra::{symmetric_eigenvalues_dyn, Mat3};

/// `√((2/3)(29 − √761))`, the largest admissible `h·max|κ|` of the `h⁵` estimate.
pub fn h5_threshold() -> f64 {
    ((2.0 / 3.0) * (29.0 - 761f64.sqrt())).sqrt()
}

/// Extreme eigenvalues of the constitutive forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormConstants {
    /// Smallest eigenvalue of `W∞shell` on symmetric matrices.
    pub c1_plus: f64,
    /// Largest eigenvalue of `W∞shell` on symmetric matrices.
    pub c1_max: f64,
    /// Smallest eigenvalue of `W_curv` on `ℝ^{3×3}`.
    pub c2_plus: f64,
    /// Largest eigenvalue of `W_curv` on `ℝ^{3×3}`.
    pub c2_max: f64,
}

/// Orthonormal basis `{(eᵢ⊗eⱼ + eⱼ⊗eᵢ)/√2 (i < j), eᵢ⊗eᵢ}` of symmetric 3×3 matrices.
pub fn sym_basis() -> Vec<Mat3> {
    let mut basis = Vec::with_capacity(6);
    for i in 0..3 {
        let mut m = Mat3::zeros();
        m[(i, i)] = 1.0;
        basis.push(m);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let mut m = Mat3::zeros();
        m[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
        m[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
        basis.push(m);
    }
    basis
}

/// Orthonormal basis `{eᵢ⊗eⱼ}` of 3×3 matrices.
pub fn full_basis() -> Vec<Mat3> {
    (0..9)
        .map(|k| {
            let mut m = Mat3::zeros();
            m[(k / 3, k % 3)] = 1.0;
            m
        })
        .collect()
}

/// Gram matrix `[B(vᵢ, vⱼ)]` of a bilinear form on a basis.
pub fn gram_matrix(basis: &[Mat3], form: impl Fn(&Mat3, &Mat3) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| form(&basis[i], &basis[j]))
}

fn extreme_eigenvalues(gram: DMatrix<f64>) -> (f64, f64) {
    let values = symmetric_eigenvalues_dyn(&gram);
    (values.min(), values.max())
}

/// Eigenvalue constants `(c1⁺, C1⁺, c2⁺, C2⁺)` from the Gram matrices of
/// `W∞shell` on symmetric matrices (6×6) and of `W_curv` on all matrices (9×9).
pub fn form_eigenvalues(material: &ShellMaterial) -> FormConstants {
    let (c1_plus, c1_max) = extreme_eigenvalues(gram_matrix(&sym_basis(), |x, y| w_shell_inf_bilinear_unchecked(x, y, material)));
    let curv = |x: &Mat3, y: &Mat3| 0.25 * (w_curv(&(x + y), material) - w_curv(&(x - y), material));
    let (c2_plus, c2_max) = extreme_eigenvalues(gram_matrix(&full_basis(), curv));
    FormConstants { c1_plus, c1_max, c2_plus, c2_max }
}

/// Constants entering the `h³` thickness conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityConstants {
    /// Eigenvalue constants of the forms.
    pub forms: FormConstants,
    /// Upper constant of the in-plane form (`C1⁺`, or `max{C1⁺, μc}` with an independent rotation).
    pub upper: f64,
    /// Lower constant of the in-plane form (`c1⁺`, or `min{c1⁺, μc}` with an independent rotation).
    pub lower: f64,
    /// Largest `α` satisfying the second inequality of condition i), when finite.
    pub alpha: Option<f64>,
    /// Infimum of the admissible `a` of condition ii).
    pub a: f64,
}

/// Thickness conditions evaluated on a sampled curvature bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// Thickness `h`.
    pub h: f64,
    /// Sampled `max |κᵢ|`.
    pub kappa_max: f64,
    /// `h·max |κᵢ|`.
    pub curvature_bound: f64,
    /// Grid size `(n₁, n₂)` used for the curvature bound (zero when supplied directly).
    pub grid: (usize, usize),
    /// `h·max|κ| < 2`.
    pub injectivity_ok: bool,
    /// `h·max|κ| < √((2/3)(29 − √761))`.
    pub h5_ok: bool,
    /// Condition i) of the `h³` coercivity statement.
    pub h3_condition_i: bool,
    /// Condition ii) of the `h³` coercivity statement.
    pub h3_condition_ii: bool,
    /// Constants behind the flags.
    pub constants: AdmissibilityConstants,
}

/// Right-hand side of the second inequality of condition i),
/// `(5 − 2√6)(α² − 12)²/(4α²)·c2⁺/upper`, bounding `h²`.
pub fn h3_condition_i_bound(alpha: f64, c2_plus: f64, upper: f64) -> f64 {
    (5.0 - 2.0 * 6f64.sqrt()) * (alpha * alpha - 12.0).powi(2) / (4.0 * alpha * alpha) * c2_plus / upper
}

/// `max{1 + √2/2, (1 + √(1 + 3·upper/lower))/2}`, the infimum of `a` in condition ii).
pub fn h3_condition_ii_infimum(upper: f64, lower: f64) -> f64 {
    (1.0 + std::f64::consts::FRAC_1_SQRT_2).max(0.5 * (1.0 + (1.0 + 3.0 * upper / lower).sqrt()))
}

fn in_plane_bounds(material: &ShellMaterial, forms: &FormConstants, variant: ModelVariant) -> (f64, f64) {
    if variant.is_unconstrained() {
        (forms.c1_max.max(material.mu_c), forms.c1_plus.min(material.mu_c))
    } else {
        (forms.c1_max, forms.c1_plus)
    }
}

/// Thickness conditions for a given curvature bound `max|κᵢ|`.
pub fn thickness_admissible_for_bound(material: &ShellMaterial, kappa_max: f64, variant: ModelVariant) -> AdmissibilityReport {
    let forms = form_eigenvalues(material);
    let (upper, lower) = in_plane_bounds(material, &forms, variant);
    let h = material.h;
    let hk = h * kappa_max;
    let sqrt12 = 12f64.sqrt();
    // Largest α with h² < bound(α): the positive root of α² + 2sα − 12 = 0.
    let s = (h * h * upper / (c2_scale() * forms.c2_plus)).sqrt();
    let alpha_max = -s + (s * s + 12.0).sqrt();
    let h3_condition_i = hk < sqrt12 && hk < alpha_max;
    let a = h3_condition_ii_infimum(upper, lower);
    AdmissibilityReport {
        h,
        kappa_max,
        curvature_bound: hk,
        grid: (0, 0),
        injectivity_ok: hk < 2.0,
        h5_ok: hk < h5_threshold(),
        h3_condition_i,
        h3_condition_ii: hk * a < 1.0,
        constants: AdmissibilityConstants { forms, upper, lower, alpha: h3_condition_i.then_some(alpha_max), a },
    }
}

fn c2_scale() -> f64 {
    5.0 - 2.0 * 6f64.sqrt()
}

/// Thickness conditions with `max|κᵢ|` sampled on `grid` (the surface's default
/// domain when `None`).
pub fn thickness_admissible(
    material: &ShellMaterial,
    surface: &SurfaceParam,
    variant: ModelVariant,
    grid: Option<&SampleGrid>,
) -> Result<AdmissibilityReport> {
    let default = surface.default_domain();
    let grid = grid.unwrap_or(&default);
    let kappa = principal_curvature_bound(surface, grid)?;
    let mut report = thickness_admissible_for_bound(material, kappa, variant);
    report.grid = (grid.n1, grid.n2);
    Ok(report)
}

/// Both sides of the `h⁵` coercivity estimate at a point:
/// `lhs` is the unweighted `h⁵` density and
/// `rhs = h(7/48)W(E) + (h³/12)(37/80)W(Y) + (h⁵/80)(1/6)W(Y·B) + h(47/48)W_curv(K)`
/// with `Y = E·B + C·K`.
///
/// Fails with [`ShellError::NotAdmissible`] when `h·max|κᵢ|` at the point reaches the threshold.
pub fn coercivity_bound_h5(state: &StrainState, ref_jet: &SurfaceJet, material: &ShellMaterial) -> Result<(f64, f64)> {
    let (k1, k2) = ref_jet.principal_curvatures();
    let hk = material.h * k1.abs().max(k2.abs());
    if hk >= h5_threshold() {
        return Err(ShellError::NotAdmissible { reason: format!("h·max|κ| = {hk} is not below {}", h5_threshold()) });
    }
    let lhs = density_unconstrained(state, ref_jet, material, ThicknessOrder::H5, false)?.total;
    let h = material.h;
    let y = state.couple(ref_jet);
    let rhs = h * 7.0 / 48.0 * w_shell(&state.e, material)?
        + h.powi(3) / 12.0 * 37.0 / 80.0 * w_shell(&y, material)?
        + h.powi(5) / 80.0 / 6.0 * w_shell(&(y * ref_jet.b), material)?
        + h * 47.0 / 48.0 * w_curv(&state.k, material);
    Ok((lhs, rhs))
}

/// Outcome of the `h³` coercivity-constant search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoercivityConstant {
    /// `W ≥ a1·(‖E‖² + ‖K‖²)` with the parameters that realize it.
    Coercive {
        /// The constant `a1⁺ > 0`.
        a1: f64,
        /// Curvature parameter `α ≥ h·max|κ|`.
        alpha: f64,
        /// Young parameter `ε`.
        epsilon: f64,
        /// Young parameter `δ = ε/(√6 α)`.
        delta: f64,
    },
    /// No admissible parameters give a positive constant.
    Infeasible,
}

impl CoercivityConstant {
    /// The constant, if coercive.
    pub fn value(&self) -> Option<f64> {
        match self {
            CoercivityConstant::Coercive { a1, .. } => Some(*a1),
            CoercivityConstant::Infeasible => None,
        }
    }
}

struct H3Chain {
    h: f64,
    c2: f64,
    upper: f64,
    lower: f64,
}

impl H3Chain {
    fn parts(&self, alpha: f64, eps: f64) -> (f64, f64) {
        let delta = eps / (6f64.sqrt() * alpha);
        let h = self.h;
        let membrane = h / 12.0 * (12.0 - alpha * alpha - eps - 2.0 * alpha * delta) * self.lower;
        let curvature = h / 12.0
            * ((12.0 - alpha * alpha) * self.c2
                - 4.0 * alpha * h * h * self.upper / delta
                - 12.0 * alpha * alpha * h * h * self.upper / eps);
        (membrane, curvature)
    }

    /// Best `(a1, ε)` for a fixed `α`: the membrane part decreases and the
    /// curvature part increases in `ε`, so the optimum is their crossing.
    fn best_for_alpha(&self, alpha: f64) -> (f64, f64) {
        let gamma = 1.0 / (6f64.sqrt() * alpha);
        let mut lo = 0.0;
        let mut hi = (12.0 - alpha * alpha) / (1.0 + 2.0 * alpha * gamma);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (m, c) = self.parts(alpha, mid);
            if m > c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let eps = 0.5 * (lo + hi);
        let (m, c) = self.parts(alpha, eps);
        (m.min(c), eps)
    }
}

/// Largest constant `a1⁺` delivered by the `h³` coercivity argument with
/// `δ = ε/(√6α)`, maximized over `α ∈ [h·max|κ|, 2√3)` and `ε`.
///
/// `constrained` selects the constants `c1⁺, C1⁺` of the constrained model;
/// otherwise `min{c1⁺, μc}` and `max{C1⁺, μc}` are used.
pub fn coercivity_constant_h3(material: &ShellMaterial, ref_jets: &[SurfaceJet], constrained: bool) -> CoercivityConstant {
    let kappa = ref_jets
        .iter()
        .map(|j| {
            let (a, b) = j.principal_curvatures();
            a.abs().max(b.abs())
        })
        .fold(0.0, f64::max);
    coercivity_constant_h3_for_bound(material, kappa, constrained)
}

/// [`coercivity_constant_h3`] for a given curvature bound `max|κᵢ|`.
pub fn coercivity_constant_h3_for_bound(material: &ShellMaterial, kappa_max: f64, constrained: bool) -> CoercivityConstant {
    let forms = form_eigenvalues(material);
    let variant = if constrained { ModelVariant::ConstrainedH3 } else { ModelVariant::UnconstrainedH3 };
    let (upper, lower) = in_plane_bounds(material, &forms, variant);
    let chain = H3Chain { h: material.h, c2: forms.c2_plus, upper, lower };
    let a_lo = (material.h * kappa_max).max(1e-9);
    let a_hi = 12f64.sqrt() * (1.0 - 1e-12);
    if a_lo >= a_hi {
        return CoercivityConstant::Infeasible;
    }
    let value = |alpha: f64| chain.best_for_alpha(alpha).0;
    let samples = 256;
    let step = (a_hi - a_lo) / samples as f64;
    let (mut best_alpha, mut best) = (a_lo, value(a_lo));
    for i in 1..=samples {
        let alpha = a_lo + step * i as f64;
        let v = value(alpha);
        if v > best {
            best = v;
            best_alpha = alpha;
        }
    }
    // Golden-section refinement around the best grid point.
    let (mut lo, mut hi) = ((best_alpha - step).max(a_lo), (best_alpha + step).min(a_hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if value(x1) >= value(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let refined = 0.5 * (lo + hi);
    if value(refined) > best {
        best_alpha = refined;
    }
    let (a1, epsilon) = chain.best_for_alpha(best_alpha);
    if a1 > 0.0 && a1.is_finite() {
        CoercivityConstant::Coercive { a1, alpha: best_alpha, epsilon, delta: epsilon / (6f64.sqrt() * best_alpha) }
    } else {
        CoercivityConstant::Infeasible
    }
}
