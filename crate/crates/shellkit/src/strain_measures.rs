//! Shell strain measures: the unconstrained pair `(E, K)`, the constrained
//! bundle obtained when the microrotation equals the continuum rotation, the
//! reconstructed through-thickness strain and the thickness stretch
//! coefficients.

use crate::error::{Result, ShellError};
use crate::surface_geometry::{eval_jet, SurfaceJet, SurfaceParam};
use crate::tensor_algebra::{
    axl_unchecked, from_columns, lift_flat, lift_hat, pad_columns, polar, spd_sqrt, sym, Mat2, Mat3, Mat32, Vec2, Vec3,
};

/// Step of the central differences applied to the constrained rotation field.
pub const FD_STEP: f64 = 1e-5;
/// Absolute tolerance for the vanishing transverse shear.
pub const SHEAR_TOL: f64 = 1e-9;

/// Constitutive parameters of the shell.
///
/// `mu_c = f64::INFINITY` marks the constrained limit, in which the
/// microrotation is slaved to the continuum rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellMaterial {
    /// Thickness.
    pub h: f64,
    /// Shear modulus.
    pub mu: f64,
    /// First Lamé constant.
    pub lambda: f64,
    /// Cosserat couple modulus (`INFINITY` for the constrained model).
    pub mu_c: f64,
    /// Internal length.
    pub l_c: f64,
    /// Curvature weight of the deviatoric symmetric part.
    pub b1: f64,
    /// Curvature weight of the skew part.
    pub b2: f64,
    /// Curvature weight of the trace part.
    pub b3: f64,
}

impl ShellMaterial {
    /// Validated constructor.
    #[allow(clippy::too_many_arguments)]
    pub fn new(h: f64, mu: f64, lambda: f64, mu_c: f64, l_c: f64, b1: f64, b2: f64, b3: f64) -> Result<Self> {
        let m = Self { h, mu, lambda, mu_c, l_c, b1, b2, b3 };
        m.validate()?;
        Ok(m)
    }

    /// All parameters equal to one, with the given thickness and couple modulus.
    pub fn unit(h: f64, mu_c: f64) -> Self {
        Self { h, mu: 1.0, lambda: 1.0, mu_c, l_c: 1.0, b1: 1.0, b2: 1.0, b3: 1.0 }
    }

    /// Checks the positivity invariants and names the first offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(ShellError::ConfigInvalid { field: field.into(), reason: reason.into() });
        let finite = [self.h, self.mu, self.lambda, self.l_c, self.b1, self.b2, self.b3];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("material", "parameters other than mu_c must be finite");
        }
        if self.h <= 0.0 {
            return bad("h", "thickness must be positive");
        }
        if self.mu <= 0.0 {
            return bad("mu", "must be positive");
        }
        if 2.0 * self.lambda + self.mu <= 0.0 {
            return bad("lambda", "requires 2 lambda + mu > 0");
        }
        if self.mu_c.is_nan() || self.mu_c < 0.0 {
            return bad("mu_c", "must be nonnegative or infinite");
        }
        if self.l_c <= 0.0 {
            return bad("l_c", "must be positive");
        }
        for (name, v) in [("b1", self.b1), ("b2", self.b2), ("b3", self.b3)] {
            if v <= 0.0 {
                return bad(name, "must be positive");
            }
        }
        Ok(())
    }

    /// True in the constrained limit `μc = ∞`.
    pub fn is_constrained(&self) -> bool {
        self.mu_c.is_infinite()
    }

    /// `λ/(λ + 2μ)`, the weight of the normal-trace correction.
    pub fn normal_trace_ratio(&self) -> f64 {
        self.lambda / (self.lambda + 2.0 * self.mu)
    }

    /// `λμ/(λ + 2μ)`, the trace coefficient of the shell membrane form.
    pub fn shell_trace_coeff(&self) -> f64 {
        self.lambda * self.mu / (self.lambda + 2.0 * self.mu)
    }

    /// Copy with a different couple modulus.
    pub fn with_mu_c(self, mu_c: f64) -> Self {
        Self { mu_c, ..self }
    }

    /// Copy with a different thickness.
    pub fn with_h(self, h: f64) -> Self {
        Self { h, ..self }
    }
}

/// A rotation together with its two partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationJet {
    /// Rotation at the point.
    pub q: Mat3,
    /// `(∂₁Q, ∂₂Q)`.
    pub dq: [Mat3; 2],
}

impl RotationJet {
    /// A constant rotation field.
    pub fn constant(q: Mat3) -> Self {
        Self { q, dq: [Mat3::zeros(); 2] }
    }

    /// Axial vectors `axl(Qᵀ∂ᵢQ)` of the skew parts.
    pub fn axial_curvatures(&self) -> [Vec3; 2] {
        [axl_unchecked(&(self.q.transpose() * self.dq[0])), axl_unchecked(&(self.q.transpose() * self.dq[1]))]
    }
}

/// Strain and bending–curvature pair at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainState {
    /// Elastic shell strain tensor.
    pub e: Mat3,
    /// Elastic shell bending–curvature tensor.
    pub k: Mat3,
}

impl StrainState {
    /// The zero state.
    pub fn zero() -> Self {
        Self { e: Mat3::zeros(), k: Mat3::zeros() }
    }

    /// `E·B + C·K`, the first-order coupling tensor.
    pub fn couple(&self, jet: &SurfaceJet) -> Mat3 {
        self.e * jet.b + jet.c * self.k
    }
}

/// Strain quantities of the constrained model at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedState {
    /// Constrained rotation `polar((∇m|n)[∇Θ]⁻¹)`.
    pub q_inf: Mat3,
    /// Symmetric strain `√([∇Θ]⁻ᵀ Î_m [∇Θ]⁻¹) − 1₃`.
    pub e_inf: Mat3,
    /// Bending–curvature tensor of the constrained rotation.
    pub k_inf: Mat3,
    /// Change of metric `(Q∞∇y₀)ᵀ∇m − I_y₀`.
    pub g_inf: Mat2,
    /// Bending strain `−(Q∞∇y₀)ᵀ∇n − II_y₀`.
    pub r_inf: Mat2,
    /// Transverse shear `(Q∞n₀)ᵀ∇m`.
    pub t_inf: Vec2,
    /// Drilling bendings `n₀ᵀ(axl(Q∞ᵀ∂₁Q∞) | axl(Q∞ᵀ∂₂Q∞))`.
    pub n_inf: Vec2,
    /// Coupling tensor from the fundamental forms, `√P̂·∇Θ(L_y₀♭ − L_m♭)[∇Θ]⁻¹`.
    pub couple: Mat3,
    /// Coupling tensor assembled directly as `E∞B + C K∞`.
    pub couple_direct: Mat3,
}

impl ConstrainedState {
    /// Largest entry of `|couple − couple_direct|`.
    pub fn couple_discrepancy(&self) -> f64 {
        (self.couple - self.couple_direct).amax()
    }

    /// The pair `(E∞, K∞)` viewed as an unconstrained strain state.
    pub fn strain_state(&self) -> StrainState {
        StrainState { e: self.e_inf, k: self.k_inf }
    }
}

/// Strain pair for an independent rotation field `Q`:
/// `E = Qᵀ(∇m | Q n₀)[∇Θ]⁻¹ − 1₃` and `K = (axl(Qᵀ∂₁Q) | axl(Qᵀ∂₂Q) | 0)[∇Θ]⁻¹`.
///
/// Rejected with [`ShellError::NotAdmissible`] in the constrained limit.
pub fn unconstrained_strains(
    ref_jet: &SurfaceJet,
    def_jet: &SurfaceJet,
    rot: &RotationJet,
    material: &ShellMaterial,
) -> Result<StrainState> {
    if material.is_constrained() {
        return Err(ShellError::NotAdmissible { reason: "unconstrained strains require a finite couple modulus".into() });
    }
    Ok(unconstrained_strains_unchecked(ref_jet, def_jet, rot))
}

/// [`unconstrained_strains`] without the couple-modulus check.
pub fn unconstrained_strains_unchecked(ref_jet: &SurfaceJet, def_jet: &SurfaceJet, rot: &RotationJet) -> StrainState {
    let q = &rot.q;
    let f = from_columns(&def_jet.d1, &def_jet.d2, &(q * ref_jet.n));
    let e = q.transpose() * f * ref_jet.grad_theta_inv - Mat3::identity();
    let [k1, k2] = rot.axial_curvatures();
    let k = from_columns(&k1, &k2, &Vec3::zeros()) * ref_jet.grad_theta_inv;
    StrainState { e, k }
}

/// Transfer map `(∇m | n)[∇Θ]⁻¹`.
pub fn transfer_map(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Mat3 {
    from_columns(&def_jet.d1, &def_jet.d2, &def_jet.n) * ref_jet.grad_theta_inv
}

/// Constrained rotation `Q∞ = polar((∇m | n)[∇Θ]⁻¹)`.
pub fn constrained_rotation(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Result<Mat3> {
    Ok(polar(&transfer_map(ref_jet, def_jet))?.0)
}

/// Constrained rotation field and its partials at `x`, from central differences
/// with step [`FD_STEP`] and one Richardson extrapolation level.
pub fn constrained_rotation_jet(reference: &SurfaceParam, deformation: &SurfaceParam, x: [f64; 2]) -> Result<RotationJet> {
    let field = |p: [f64; 2]| -> Result<Mat3> { constrained_rotation(&eval_jet(reference, p)?, &eval_jet(deformation, p)?) };
    let q = field(x)?;
    let mut dq = [Mat3::zeros(); 2];
    for (k, d) in dq.iter_mut().enumerate() {
        let central = |step: f64| -> Result<Mat3> {
            let mut plus = x;
            let mut minus = x;
            plus[k] += step;
            minus[k] -= step;
            Ok((field(plus)? - field(minus)?) / (2.0 * step))
        };
        let coarse = central(FD_STEP)?;
        let fine = central(0.5 * FD_STEP)?;
        *d = (fine * 4.0 - coarse) / 3.0;
    }
    Ok(RotationJet { q, dq })
}

/// `P̂ = [∇Θ]⁻ᵀ Î_m [∇Θ]⁻¹`, the pulled-back deformed metric with unit normal entry.
pub fn pulled_back_metric(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Mat3 {
    ref_jet.grad_theta_inv.transpose() * lift_hat(&def_jet.i) * ref_jet.grad_theta_inv
}

/// Coupling tensor `√P̂·∇Θ(L_y₀♭ − L_m♭)[∇Θ]⁻¹` computed from the fundamental forms.
pub fn couple_from_forms(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Result<Mat3> {
    let root = spd_sqrt(&pulled_back_metric(ref_jet, def_jet))?;
    Ok(root * ref_jet.grad_theta * lift_flat(&(ref_jet.l - def_jet.l)) * ref_jet.grad_theta_inv)
}

/// Full constrained bundle at a point from the two jets and the rotation jet of `Q∞`.
pub fn constrained_state(ref_jet: &SurfaceJet, def_jet: &SurfaceJet, rot: &RotationJet) -> Result<ConstrainedState> {
    let pinv = &ref_jet.grad_theta_inv;
    let root = spd_sqrt(&pulled_back_metric(ref_jet, def_jet))?;
    let e_inf = root - Mat3::identity();
    let q = rot.q;
    let [k1, k2] = rot.axial_curvatures();
    let k_inf = from_columns(&k1, &k2, &Vec3::zeros()) * pinv;
    let couple_direct = e_inf * ref_jet.b + ref_jet.c * k_inf;
    let couple = root * ref_jet.grad_theta * lift_flat(&(ref_jet.l - def_jet.l)) * pinv;
    let rotated: Mat32 = q * ref_jet.grad_y();
    let grad_m = def_jet.grad_y();
    let g_inf = rotated.transpose() * grad_m - ref_jet.i;
    let r_inf = -(rotated.transpose() * def_jet.grad_n) - ref_jet.ii;
    let qn0 = q * ref_jet.n;
    let t_inf = grad_m.transpose() * qn0;
    let n_inf = Vec2::new(ref_jet.n.dot(&k1), ref_jet.n.dot(&k2));
    Ok(ConstrainedState { q_inf: q, e_inf, k_inf, g_inf, r_inf, t_inf, n_inf, couple, couple_direct })
}

/// Evaluates both jets, the constrained rotation jet and the constrained bundle at `x`.
pub fn constrained_state_at(
    reference: &SurfaceParam,
    deformation: &SurfaceParam,
    x: [f64; 2],
) -> Result<(ConstrainedState, SurfaceJet, SurfaceJet)> {
    let ref_jet = eval_jet(reference, x)?;
    let def_jet = eval_jet(deformation, x)?;
    let rot = constrained_rotation_jet(reference, deformation, x)?;
    let cs = constrained_state(&ref_jet, &def_jet, &rot)?;
    Ok((cs, ref_jet, def_jet))
}

/// Transverse shear check: fails with [`ShellError::ShearNotZero`] when `‖T∞‖ > 1e-9`.
pub fn check_shear(cs: &ConstrainedState) -> Result<()> {
    let norm = cs.t_inf.norm();
    if norm > SHEAR_TOL {
        return Err(ShellError::ShearNotZero { norm });
    }
    Ok(())
}

/// Block forms of the strain tensors in terms of the classical quantities.
///
/// Returns `(E, C·K, E·B + C·K, (E·B + C·K)·B)` assembled from `G`, `T`, `R`
/// and the Weingarten map of the reference surface.
pub fn block_strains(ref_jet: &SurfaceJet, g: &Mat2, t: &Vec2, r: &Mat2) -> [Mat3; 4] {
    let pinv = &ref_jet.grad_theta_inv;
    let pull = |m: Mat3| pinv.transpose() * m * pinv;
    let block = |top: Mat2, bottom: Vec2| {
        let mut m = lift_flat(&top);
        m[(2, 0)] = bottom[0];
        m[(2, 1)] = bottom[1];
        m
    };
    let l = &ref_jet.l;
    let lt = t.transpose() * l;
    let lt2 = t.transpose() * l * l;
    let e = pull(block(*g, *t));
    let ck = -pull(block(*r, Vec2::zeros()));
    let couple = -pull(block(r - g * l, lt.transpose()));
    let couple_b = -pull(block((r - g * l) * l, lt2.transpose()));
    [e, ck, couple, couple_b]
}

/// Classical quantities `(G, T, R)` for a rotation field `Q`:
/// `G = (Q∇y₀)ᵀ∇m − I_y₀`, `T = (Q n₀)ᵀ∇m` and `R = −(Q∇y₀)ᵀ∇(Q n₀) − II_y₀`.
pub fn classical_quantities(ref_jet: &SurfaceJet, def_jet: &SurfaceJet, rot: &RotationJet) -> (Mat2, Vec2, Mat2) {
    let q = &rot.q;
    let n0 = ref_jet.n;
    let rotated: Mat32 = q * ref_jet.grad_y();
    let grad_m = def_jet.grad_y();
    let g = rotated.transpose() * grad_m - ref_jet.i;
    let t = grad_m.transpose() * (q * n0);
    let grad_qn = Mat32::from_columns(&[rot.dq[0] * n0 + q * ref_jet.grad_n.column(0), rot.dq[1] * n0 + q * ref_jet.grad_n.column(1)]);
    let r = -(rotated.transpose() * grad_qn) - ref_jet.ii;
    (g, t, r)
}

fn normal_dyad(jet: &SurfaceJet) -> Mat3 {
    jet.n * jet.n.transpose()
}

/// Quadratic-in-thickness reconstruction of the 3D strain,
/// `T₀ + x₃T₁ + x₃²T₂` with normal-trace corrections on `T₀` and `T₁`.
pub fn reconstructed_strain(state: &StrainState, ref_jet: &SurfaceJet, material: &ShellMaterial, x3: f64) -> Mat3 {
    let c = material.normal_trace_ratio();
    let nn = normal_dyad(ref_jet);
    let couple = state.couple(ref_jet);
    let t0 = state.e - nn * (c * state.e.trace());
    let t1 = couple - nn * (c * couple.trace());
    let t2 = couple * ref_jet.b;
    t0 + t1 * x3 + t2 * (x3 * x3)
}

/// Reconstruction of the modified model: as [`reconstructed_strain`] with the
/// first- and second-order coupling blocks replaced by their symmetric parts.
pub fn modified_reconstructed_strain(state: &StrainState, ref_jet: &SurfaceJet, material: &ShellMaterial, x3: f64) -> Mat3 {
    let c = material.normal_trace_ratio();
    let nn = normal_dyad(ref_jet);
    let couple = state.couple(ref_jet);
    let t0 = state.e - nn * (c * state.e.trace());
    let t1 = sym(&couple) - nn * (c * couple.trace());
    let t2 = sym(&(couple * ref_jet.b));
    t0 + t1 * x3 + t2 * (x3 * x3)
}

/// Thickness stretch coefficients `(ϱ_m, ϱ_b)` of the quadratic through-thickness ansatz.
pub fn thickness_stretch_coefficients(
    ref_jet: &SurfaceJet,
    def_jet: &SurfaceJet,
    rot: &RotationJet,
    material: &ShellMaterial,
) -> (f64, f64) {
    let c = material.normal_trace_ratio();
    let q = &rot.q;
    let pinv = &ref_jet.grad_theta_inv;
    let grad_m = pad_columns(&def_jet.grad_y());
    let qt_gm = q.transpose() * grad_m * pinv;
    let rho_m = 1.0 - c * (qt_gm.trace() - 2.0);
    let n0 = ref_jet.n;
    let dqn = Mat32::from_columns(&[rot.dq[0] * n0 + q * ref_jet.grad_n.column(0), rot.dq[1] * n0 + q * ref_jet.grad_n.column(1)]);
    let first = (q.transpose() * pad_columns(&dqn) * pinv).trace();
    let second = (qt_gm * ref_jet.grad_n_padded() * pinv).trace();
    let rho_b = -c * first + c * second;
    (rho_m, rho_b)
}
