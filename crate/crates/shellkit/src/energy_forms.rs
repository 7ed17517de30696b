//! Quadratic and bilinear constitutive forms and the areal energy densities
//! of every model variant, plus the Koiter density and the 2×2 block
//! re-expression of the constrained density used as cross-checks.

use crate::error::{Result, ShellError};
use crate::strain_measures::{check_shear, ConstrainedState, ShellMaterial, StrainState};
use crate::surface_geometry::SurfaceJet;
use crate::tensor_algebra::{dev_sym, inner, inner2, lift_flat, skew, skew2, spd_sqrt2, sym, sym2, Mat2, Mat3, Vec2, Vec3};

/// Relative tolerance on skew parts when a form with infinite coefficient is evaluated.
pub const INFINITE_FORM_TOL: f64 = 1e-10;
/// Relative admissibility tolerance for the symmetry of constrained coupling tensors.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// Energy density split into its three parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// Membrane part.
    pub membrane: f64,
    /// Membrane–bending coupling part.
    pub membrane_bending: f64,
    /// Bending–curvature part.
    pub bending_curvature: f64,
    /// Sum of the three parts.
    pub total: f64,
    /// Area weight `det ∇Θ` applied to every part (1 when unweighted).
    pub jacobian: f64,
}

impl EnergyBreakdown {
    /// Builds a breakdown from unweighted parts, scaling each by `jacobian`.
    pub fn new(membrane: f64, membrane_bending: f64, bending_curvature: f64, jacobian: f64) -> Self {
        let (a, b, c) = (membrane * jacobian, membrane_bending * jacobian, bending_curvature * jacobian);
        Self { membrane: a, membrane_bending: b, bending_curvature: c, total: a + b + c, jacobian }
    }

    /// The zero density.
    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    /// Componentwise sum (the jacobian field keeps the value of `self`).
    pub fn add(&self, other: &Self) -> Self {
        Self {
            membrane: self.membrane + other.membrane,
            membrane_bending: self.membrane_bending + other.membrane_bending,
            bending_curvature: self.bending_curvature + other.bending_curvature,
            total: self.total + other.total,
            jacobian: self.jacobian,
        }
    }

    /// Multiplies every part by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            membrane: self.membrane * s,
            membrane_bending: self.membrane_bending * s,
            bending_curvature: self.bending_curvature * s,
            total: self.total * s,
            jacobian: self.jacobian,
        }
    }
}

/// Energy model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Independent microrotation, terms up to `h⁵`.
    UnconstrainedH5,
    /// Independent microrotation, terms up to `h³`.
    UnconstrainedH3,
    /// Microrotation slaved to the continuum rotation, terms up to `h⁵`.
    ConstrainedH5,
    /// Constrained model, terms up to `h³`.
    ConstrainedH3,
    /// Constrained `h⁵` model with symmetrized coupling tensors.
    ModifiedConstrainedH5,
    /// Constrained `h³` model with symmetrized coupling tensors.
    ModifiedConstrainedH3,
    /// Constrained plate model.
    ConstrainedPlate,
    /// Constrained plate model with symmetrized bending tensor.
    ModifiedConstrainedPlate,
    /// Classical Koiter membrane plus bending energy.
    Koiter,
}

impl ModelVariant {
    /// All variants in declaration order.
    pub const ALL: [ModelVariant; 9] = [
        ModelVariant::UnconstrainedH5,
        ModelVariant::UnconstrainedH3,
        ModelVariant::ConstrainedH5,
        ModelVariant::ConstrainedH3,
        ModelVariant::ModifiedConstrainedH5,
        ModelVariant::ModifiedConstrainedH3,
        ModelVariant::ConstrainedPlate,
        ModelVariant::ModifiedConstrainedPlate,
        ModelVariant::Koiter,
    ];

    /// Stable name used in configuration files.
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::UnconstrainedH5 => "UnconstrainedH5",
            ModelVariant::UnconstrainedH3 => "UnconstrainedH3",
            ModelVariant::ConstrainedH5 => "ConstrainedH5",
            ModelVariant::ConstrainedH3 => "ConstrainedH3",
            ModelVariant::ModifiedConstrainedH5 => "ModifiedConstrainedH5",
            ModelVariant::ModifiedConstrainedH3 => "ModifiedConstrainedH3",
            ModelVariant::ConstrainedPlate => "ConstrainedPlate",
            ModelVariant::ModifiedConstrainedPlate => "ModifiedConstrainedPlate",
            ModelVariant::Koiter => "Koiter",
        }
    }

    /// Inverse of [`ModelVariant::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|v| v.name() == name)
    }

    /// True for the variants with an independent rotation field.
    pub fn is_unconstrained(&self) -> bool {
        matches!(self, ModelVariant::UnconstrainedH5 | ModelVariant::UnconstrainedH3)
    }

    /// True for the constrained variants (plain and modified, shell and plate).
    pub fn is_constrained(&self) -> bool {
        !self.is_unconstrained() && *self != ModelVariant::Koiter
    }

    /// True for the variants that symmetrize their coupling tensors.
    pub fn is_modified(&self) -> bool {
        matches!(self, ModelVariant::ModifiedConstrainedH5 | ModelVariant::ModifiedConstrainedH3 | ModelVariant::ModifiedConstrainedPlate)
    }

    /// True for the plate specializations.
    pub fn is_plate(&self) -> bool {
        matches!(self, ModelVariant::ConstrainedPlate | ModelVariant::ModifiedConstrainedPlate)
    }
}

/// Truncation order of the thickness expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThicknessOrder {
    /// Terms up to `h³`.
    H3,
    /// Terms up to `h⁵`.
    H5,
}

fn infinite_skew_check(x: &Mat3, what: &str) -> Result<()> {
    if skew(x).norm() > INFINITE_FORM_TOL * (1.0 + x.norm()) {
        return Err(ShellError::InfiniteEnergy { reason: format!("{what} has a skew part under infinite couple modulus") });
    }
    Ok(())
}

fn mu_c_term(material: &ShellMaterial, x: &Mat3, y: &Mat3) -> Result<f64> {
    if material.is_constrained() {
        infinite_skew_check(x, "argument")?;
        infinite_skew_check(y, "argument")?;
        Ok(0.0)
    } else {
        Ok(material.mu_c * inner(&skew(x), &skew(y)))
    }
}

/// `W_shell(X) = μ‖sym X‖² + μc‖skew X‖² + λμ/(λ+2μ)·tr(X)²`.
pub fn w_shell(x: &Mat3, material: &ShellMaterial) -> Result<f64> {
    w_shell_bilinear(x, x, material)
}

/// Polarization of [`w_shell`].
pub fn w_shell_bilinear(x: &Mat3, y: &Mat3, material: &ShellMaterial) -> Result<f64> {
    Ok(material.mu * inner(&sym(x), &sym(y)) + mu_c_term(material, x, y)? + material.shell_trace_coeff() * x.trace() * y.trace())
}

/// `W_shell` through the deviatoric split, with trace coefficient `2μ(2λ+μ)/(3(λ+2μ))`.
pub fn w_shell_deviatoric(x: &Mat3, material: &ShellMaterial) -> Result<f64> {
    let (mu, la) = (material.mu, material.lambda);
    let tr = x.trace();
    Ok(mu * dev_sym(x).norm_squared() + mu_c_term(material, x, x)? + 2.0 * mu * (2.0 * la + mu) / (3.0 * (la + 2.0 * mu)) * tr * tr)
}

fn symmetric_check(s: &Mat3) -> Result<()> {
    let skew_norm = skew(s).norm();
    if skew_norm > INFINITE_FORM_TOL * (1.0 + s.norm()) {
        return Err(ShellError::NonSymmetricInput { skew_norm });
    }
    Ok(())
}

/// `W∞shell(S) = μ‖S‖² + λμ/(λ+2μ)·tr(S)²` for symmetric `S`.
pub fn w_shell_inf(s: &Mat3, material: &ShellMaterial) -> Result<f64> {
    symmetric_check(s)?;
    Ok(w_shell_inf_bilinear_unchecked(s, s, material))
}

/// Polarization of [`w_shell_inf`] for symmetric arguments.
pub fn w_shell_inf_bilinear(s: &Mat3, t: &Mat3, material: &ShellMaterial) -> Result<f64> {
    symmetric_check(s)?;
    symmetric_check(t)?;
    Ok(w_shell_inf_bilinear_unchecked(s, t, material))
}

/// `μ⟨S, T⟩ + λμ/(λ+2μ)·tr S·tr T` evaluated on arbitrary matrices.
pub fn w_shell_inf_bilinear_unchecked(s: &Mat3, t: &Mat3, material: &ShellMaterial) -> f64 {
    material.mu * inner(s, t) + material.shell_trace_coeff() * s.trace() * t.trace()
}

/// `W_mp(X) = μ‖sym X‖² + μc‖skew X‖² + (λ/2)·tr(X)²`.
pub fn w_mp(x: &Mat3, material: &ShellMaterial) -> Result<f64> {
    let tr = x.trace();
    Ok(material.mu * sym(x).norm_squared() + mu_c_term(material, x, x)? + 0.5 * material.lambda * tr * tr)
}

/// `W∞mp(S) = μ‖S‖² + (λ/2)·tr(S)²` for symmetric `S`.
pub fn w_mp_inf(s: &Mat3, material: &ShellMaterial) -> Result<f64> {
    symmetric_check(s)?;
    Ok(w_mp_inf_unchecked(s, material))
}

/// `μ‖S‖² + (λ/2)·tr(S)²` evaluated on an arbitrary matrix.
pub fn w_mp_inf_unchecked(s: &Mat3, material: &ShellMaterial) -> f64 {
    let tr = s.trace();
    material.mu * s.norm_squared() + 0.5 * material.lambda * tr * tr
}

/// `W_curv(X) = μLc²(b₁‖dev sym X‖² + b₂‖skew X‖² + b₃·tr(X)²)`.
pub fn w_curv(x: &Mat3, material: &ShellMaterial) -> f64 {
    let tr = x.trace();
    material.mu
        * material.l_c
        * material.l_c
        * (material.b1 * dev_sym(x).norm_squared() + material.b2 * skew(x).norm_squared() + material.b3 * tr * tr)
}

fn weight(jet: &SurfaceJet, weighted: bool) -> f64 {
    if weighted {
        jet.area_element()
    } else {
        1.0
    }
}

/// Areal energy density of the unconstrained model.
///
/// Uses `E`, `E·B + C·K` and `(E·B + C·K)·B` with the thickness weights
/// `h ± K h³/12`, `h³/12 − K h⁵/80`, `h⁵/80` and the mixed terms `−(h³/3)H`
/// and `h³/6`. With `weighted` every part is multiplied by `det ∇Θ`.
pub fn density_unconstrained(
    state: &StrainState,
    ref_jet: &SurfaceJet,
    material: &ShellMaterial,
    order: ThicknessOrder,
    weighted: bool,
) -> Result<EnergyBreakdown> {
    let (h, kg, hm) = (material.h, ref_jet.k, ref_jet.h);
    let (h3, h5) = (h.powi(3), h.powi(5));
    let b = &ref_jet.b;
    let e = &state.e;
    let couple = state.couple(ref_jet);
    let couple_b = couple * b;
    let kb = state.k * b;
    let membrane = (h + kg * h3 / 12.0) * w_shell(e, material)?;
    let mixed = -(h3 / 3.0) * hm * w_shell_bilinear(e, &couple, material)? + (h3 / 6.0) * w_shell_bilinear(e, &couple_b, material)?;
    let (membrane_bending, bending_curvature) = match order {
        ThicknessOrder::H5 => (
            (h3 / 12.0 - kg * h5 / 80.0) * w_shell(&couple, material)? + mixed + (h5 / 80.0) * w_mp(&couple_b, material)?,
            (h - kg * h3 / 12.0) * w_curv(&state.k, material)
                + (h3 / 12.0 - kg * h5 / 80.0) * w_curv(&kb, material)
                + (h5 / 80.0) * w_curv(&(kb * b), material),
        ),
        ThicknessOrder::H3 => (
            (h3 / 12.0) * w_shell(&couple, material)? + mixed,
            (h - kg * h3 / 12.0) * w_curv(&state.k, material) + (h3 / 12.0) * w_curv(&kb, material),
        ),
    };
    Ok(EnergyBreakdown::new(membrane, membrane_bending, bending_curvature, weight(ref_jet, weighted)))
}

/// Skew residuals `(‖skew E∞‖, ‖skew couple‖, ‖skew(couple·B)‖)` of a constrained state.
pub fn symmetry_residuals(cs: &ConstrainedState, ref_jet: &SurfaceJet) -> (f64, f64, f64) {
    (skew(&cs.e_inf).norm(), skew(&cs.couple).norm(), skew(&(cs.couple * ref_jet.b)).norm())
}

/// Areal energy density of the constrained variants.
///
/// The membrane strain is `E∞`, the coupling tensor is the one computed from
/// the fundamental forms and the curvature tensor is `K∞`. Modified variants
/// replace the coupling tensors by their symmetric parts; plain variants
/// return [`ShellError::InfiniteEnergy`] when a required symmetry residual
/// exceeds `1e-6·(1 + ‖couple‖)`. Plate variants drop every `H`, `K` and `B`
/// weighted term.
pub fn density_constrained(
    cs: &ConstrainedState,
    ref_jet: &SurfaceJet,
    material: &ShellMaterial,
    variant: ModelVariant,
    weighted: bool,
) -> Result<EnergyBreakdown> {
    if !variant.is_constrained() {
        return Err(ShellError::NotAdmissible { reason: format!("{} is not a constrained variant", variant.name()) });
    }
    let (h, kg, hm) = (material.h, ref_jet.k, ref_jet.h);
    let (h3, h5) = (h.powi(3), h.powi(5));
    let b = &ref_jet.b;
    let (_, r1, r2) = symmetry_residuals(cs, ref_jet);
    let tol = SYMMETRY_TOL * (1.0 + cs.couple.norm());
    let needs_r2 = variant == ModelVariant::ConstrainedH5;
    if !variant.is_modified() && (r1 > tol || (needs_r2 && r2 > tol)) {
        return Err(ShellError::InfiniteEnergy {
            reason: format!("coupling tensor is not symmetric (residuals {r1:e}, {r2:e}; tolerance {tol:e})"),
        });
    }
    let (couple, couple_b) = if variant.is_modified() { (sym(&cs.couple), sym(&(cs.couple * b))) } else { (cs.couple, cs.couple * b) };
    let e = &cs.e_inf;
    let w = |x: &Mat3| w_shell_inf_bilinear_unchecked(x, x, material);
    let wb = |x: &Mat3, y: &Mat3| w_shell_inf_bilinear_unchecked(x, y, material);
    let k = &cs.k_inf;
    let kb = k * b;
    let parts = match variant {
        ModelVariant::ConstrainedH5 | ModelVariant::ModifiedConstrainedH5 => (
            (h + kg * h3 / 12.0) * w(e),
            (h3 / 12.0 - kg * h5 / 80.0) * w(&couple) - (h3 / 3.0) * hm * wb(e, &couple)
                + (h3 / 6.0) * wb(e, &couple_b)
                + (h5 / 80.0) * w_mp_inf_unchecked(&couple_b, material),
            (h - kg * h3 / 12.0) * w_curv(k, material)
                + (h3 / 12.0 - kg * h5 / 80.0) * w_curv(&kb, material)
                + (h5 / 80.0) * w_curv(&(kb * b), material),
        ),
        ModelVariant::ConstrainedH3 | ModelVariant::ModifiedConstrainedH3 => (
            (h + kg * h3 / 12.0) * w(e),
            (h3 / 12.0) * w(&couple) - (h3 / 3.0) * hm * wb(e, &couple) + (h3 / 6.0) * wb(e, &couple_b),
            (h - kg * h3 / 12.0) * w_curv(k, material) + (h3 / 12.0) * w_curv(&kb, material),
        ),
        ModelVariant::ConstrainedPlate | ModelVariant::ModifiedConstrainedPlate => {
            (h * w(e), (h3 / 12.0) * w(&couple), h * w_curv(k, material))
        }
        _ => unreachable!("non-constrained variants are rejected above"),
    };
    Ok(EnergyBreakdown::new(parts.0, parts.1, parts.2, weight(ref_jet, weighted)))
}

/// Membrane and bending tensors of the Koiter model pulled back to 3×3:
/// `[∇Θ]⁻ᵀ ½(I_m♭ − I_y₀♭)[∇Θ]⁻¹` and `[∇Θ]⁻ᵀ(II_m♭ − II_y₀♭)[∇Θ]⁻¹`.
pub fn koiter_tensors(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> (Mat3, Mat3) {
    let pinv = &ref_jet.grad_theta_inv;
    let pull = |m: &Mat2| pinv.transpose() * lift_flat(m) * pinv;
    (pull(&((def_jet.i - ref_jet.i) * 0.5)), pull(&(def_jet.ii - ref_jet.ii)))
}

/// Koiter density in matrix form,
/// `h(μ‖G̃‖² + λμ/(λ+2μ)·tr(G̃)²) + (h³/12)(μ‖R̃‖² + λμ/(λ+2μ)·tr(R̃)²)`
/// with the pulled-back tensors of [`koiter_tensors`]; weighted by `det ∇Θ` on request.
pub fn density_koiter(ref_jet: &SurfaceJet, def_jet: &SurfaceJet, material: &ShellMaterial, weighted: bool) -> f64 {
    let (g, r) = koiter_tensors(ref_jet, def_jet);
    let q = |x: &Mat3| w_shell_inf_bilinear_unchecked(x, x, material);
    let h = material.h;
    (h * q(&g) + h.powi(3) / 12.0 * q(&r)) * weight(ref_jet, weighted)
}

/// Koiter density split into the membrane part `h·q(G̃)` and the bending part
/// `(h³/12)·q(R̃)`, reported in the membrane and membrane–bending slots.
pub fn koiter_breakdown(ref_jet: &SurfaceJet, def_jet: &SurfaceJet, material: &ShellMaterial, weighted: bool) -> EnergyBreakdown {
    let (g, r) = koiter_tensors(ref_jet, def_jet);
    let q = |x: &Mat3| w_shell_inf_bilinear_unchecked(x, x, material);
    let h = material.h;
    EnergyBreakdown::new(h * q(&g), h.powi(3) / 12.0 * q(&r), 0.0, weight(ref_jet, weighted))
}

/// `⟨ℂ.X, X⟩` of the isotropic shell elasticity tensor in index form, with the
/// contravariant metric `a^{αβ} = (I_y₀⁻¹)_{αβ}`.
pub fn koiter_contraction(x: &Mat2, a_inv: &Mat2, material: &ShellMaterial) -> f64 {
    let (mu, la) = (material.mu, material.lambda);
    let mut quad = 0.0;
    let mut tr = 0.0;
    for al in 0..2 {
        for be in 0..2 {
            tr += a_inv[(al, be)] * x[(al, be)];
            for ga in 0..2 {
                for ta in 0..2 {
                    let c = mu * (a_inv[(al, ga)] * a_inv[(be, ta)] + a_inv[(al, ta)] * a_inv[(be, ga)]);
                    quad += c * x[(al, be)] * x[(ga, ta)];
                }
            }
        }
    }
    quad + 2.0 * mu * la / (2.0 * mu + la) * tr * tr
}

/// Koiter density in index form, `½[h⟨ℂ.G, G⟩ + (h³/12)⟨ℂ.R, R⟩]` with
/// `G = ½(I_m − I_y₀)` and `R = II_m − II_y₀`.
pub fn density_koiter_contraction(ref_jet: &SurfaceJet, def_jet: &SurfaceJet, material: &ShellMaterial, weighted: bool) -> f64 {
    let a_inv = ref_jet.i.try_inverse().expect("jet metric is invertible");
    let g = (def_jet.i - ref_jet.i) * 0.5;
    let r = def_jet.ii - ref_jet.ii;
    let h = material.h;
    0.5 * (h * koiter_contraction(&g, &a_inv, material) + h.powi(3) / 12.0 * koiter_contraction(&r, &a_inv, material))
        * weight(ref_jet, weighted)
}

/// In-plane bilinear form on 2×2 blocks,
/// `μ⟨sym X, sym(I⁻¹YI⁻¹)⟩ + μc⟨skew X, skew(I⁻¹YI⁻¹)⟩ + t·tr(XI⁻¹)tr(YI⁻¹)`
/// with skew coefficient `mu_skew` and trace coefficient `trace_coeff`.
pub fn w_inplane(x: &Mat2, y: &Mat2, i_inv: &Mat2, mu: f64, mu_skew: f64, trace_coeff: f64) -> f64 {
    let yy = i_inv * y * i_inv;
    mu * inner2(&sym2(x), &sym2(&yy)) + mu_skew * inner2(&skew2(x), &skew2(&yy)) + trace_coeff * (x * i_inv).trace() * (y * i_inv).trace()
}

/// Curvature form on the bending-strain block,
/// `μLc²[b₁‖sym X̃‖² + (2b₃ + b₁/3)‖skew X̃‖² + (b₂ − b₁)/2·tr(X̃)²]` with `X̃ = I^{-1/2} X I^{-1/2}`.
pub fn w_curv_block(x: &Mat2, i_inv_sqrt: &Mat2, material: &ShellMaterial) -> f64 {
    let xt = i_inv_sqrt * x * i_inv_sqrt;
    let tr = xt.trace();
    let (b1, b2, b3) = (material.b1, material.b2, material.b3);
    material.mu
        * material.l_c
        * material.l_c
        * (b1 * sym2(&xt).norm_squared() + (2.0 * b3 + b1 / 3.0) * skew2(&xt).norm_squared() + 0.5 * (b2 - b1) * tr * tr)
}

/// Drilling-bending form `μLc²(b₁ + b₂)/2·⟨N I⁻¹, N⟩` for a row vector `N`.
pub fn w_drilling(n: &Vec2, i_inv: &Mat2, material: &ShellMaterial) -> f64 {
    material.mu * material.l_c * material.l_c * 0.5 * (material.b1 + material.b2) * (n.transpose() * i_inv * n)[(0, 0)]
}

/// Constrained `h⁵` density expressed through the classical quantities
/// `G∞`, `R∞`, `N∞` and the reference Weingarten map.
///
/// With `M = G∞L − R∞` and `L* = 2H·1₂ − L` the in-plane part reads
/// `(h + Kh³/12)W(G) + (h³/12 − Kh⁵/80)W(M) − (h³/6)W(G, M L*) + (h⁵/80)W_λ(ML)`
/// and the curvature part sums the bending-strain and drilling forms of
/// `R∞Lʲ`, `N∞Lʲ` for `j = 0, 1, 2`. Requires `T∞ = 0`.
pub fn density_alternative(
    cs: &ConstrainedState,
    ref_jet: &SurfaceJet,
    material: &ShellMaterial,
    weighted: bool,
) -> Result<EnergyBreakdown> {
    check_shear(cs)?;
    let (h, kg, hm) = (material.h, ref_jet.k, ref_jet.h);
    let (h3, h5) = (h.powi(3), h.powi(5));
    let i_inv = ref_jet.i.try_inverse().ok_or(ShellError::Degenerate { det: ref_jet.i.determinant() })?;
    let i_inv_sqrt = spd_sqrt2(&i_inv)?;
    let l = &ref_jet.l;
    let l_star = Mat2::identity() * (2.0 * hm) - l;
    let mu = material.mu;
    let w = |x: &Mat2, y: &Mat2| w_inplane(x, y, &i_inv, mu, mu, material.shell_trace_coeff());
    let w_lambda = |x: &Mat2| w_inplane(x, x, &i_inv, mu, mu, 0.5 * material.lambda);
    let g = &cs.g_inf;
    let m = g * l - cs.r_inf;
    let membrane = (h + kg * h3 / 12.0) * w(g, g);
    let membrane_bending = (h3 / 12.0 - kg * h5 / 80.0) * w(&m, &m) - (h3 / 6.0) * w(g, &(m * l_star)) + (h5 / 80.0) * w_lambda(&(m * l));
    let weights = [h - kg * h3 / 12.0, h3 / 12.0 - kg * h5 / 80.0, h5 / 80.0];
    let mut r = cs.r_inf;
    let mut n = cs.n_inf;
    let mut bending_curvature = 0.0;
    for wt in weights {
        bending_curvature += wt * (w_curv_block(&r, &i_inv_sqrt, material) + w_drilling(&n, &i_inv, material));
        r *= l;
        n = (n.transpose() * l).transpose();
    }
    Ok(EnergyBreakdown::new(membrane, membrane_bending, bending_curvature, weight(ref_jet, weighted)))
}

/// A quadrature sample of a load paired with the displacement it acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSample {
    /// Load density (per unit area or per unit length).
    pub load: Vec3,
    /// Displacement `u = m − y₀` at the sample.
    pub displacement: Vec3,
    /// Quadrature weight (area or length element included).
    pub weight: f64,
}

/// Dead-load potential `∫⟨f, u⟩da + ∫⟨t, u⟩ds`, given quadrature samples of
/// the area loads and of the edge loads. Couple-load terms are zero.
pub fn loads_potential(area: &[LoadSample], edge: &[LoadSample]) -> f64 {
    area.iter().chain(edge.iter()).map(|s| s.weight * s.load.dot(&s.displacement)).sum()
}
