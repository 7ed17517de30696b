//! Parametrized surfaces and their pointwise differential geometry.
//!
//! Sign conventions: the unit normal is `n = (d₁ × d₂)/‖d₁ × d₂‖`, the second
//! fundamental form is `II = −(∇y)ᵀ∇n` and the Weingarten map is `L = I⁻¹ II`.
//! With these conventions an outward-oriented unit cylinder has principal
//! curvatures `{−1, 0}` and the catalog sphere, whose normal points inward,
//! has `L = 1₂/r`.

use crate::error::{Result, ShellError};
use crate::taylor::{self, TVec3, Taylor};
use crate::tensor_algebra::{flat_identity, from_columns, lift_flat, Mat2, Mat3, Mat32, Vec3};

/// Relative threshold `‖d₁ × d₂‖ ≤ EPS_AREA_REL·‖d₁‖‖d₂‖` for a degenerate parametrization.
pub const EPS_AREA_REL: f64 = 1e-10;

/// Default number of samples per direction when approximating curvature suprema.
pub const DEFAULT_SUP_GRID: usize = 33;

/// Polynomial `f(x₁, x₂) = Σ c·x₁^i x₂^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// Monomials as `(i, j, c)`.
    pub terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    /// Builds a polynomial from `(i, j, c)` monomials.
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        Self { terms }
    }

    fn taylor(&self, x1: &Taylor, x2: &Taylor) -> Taylor {
        let order = x1.order();
        let mut sum = Taylor::constant(0.0, order);
        for &(i, j, c) in &self.terms {
            let mut m = Taylor::constant(c, order);
            for _ in 0..i {
                m = &m * x1;
            }
            for _ in 0..j {
                m = &m * x2;
            }
            sum = &sum + &m;
        }
        sum
    }
}

/// A parametrized surface `(x₁, x₂) ↦ y(x₁, x₂) ∈ ℝ³`.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceParam {
    /// `y = (x₁, x₂, 0)`.
    Plane,
    /// `y = (r cos x₁, r sin x₁, x₂)`.
    Cylinder { radius: f64 },
    /// `y = r(sin x₂ cos x₁, sin x₂ sin x₁, cos x₂)` (`x₂` is the colatitude, the normal points inward).
    Sphere { radius: f64 },
    /// `y = ((R + r cos x₂) cos x₁, (R + r cos x₂) sin x₁, r sin x₂)`.
    Torus { major: f64, minor: f64 },
    /// `y = (x₁, x₂, f(x₁, x₂))`.
    Graph { height: Polynomial },
    /// `y = M·base + shift`.
    AffineImage { base: Box<SurfaceParam>, matrix: Mat3, shift: Vec3 },
    /// `y = base + c·n_base`.
    NormalOffset { base: Box<SurfaceParam>, offset: f64 },
    /// Scales the first two components of `base` by `factor` (expansion about the x₃-axis).
    RadialScale { base: Box<SurfaceParam>, factor: f64 },
}

/// Rectangular sampling grid `[a₁, b₁] × [a₂, b₂]` with `n₁ × n₂` points including the corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub n1: usize,
    pub n2: usize,
}

impl SampleGrid {
    /// Grid over the given rectangle.
    pub fn new(a1: f64, b1: f64, a2: f64, b2: f64, n1: usize, n2: usize) -> Self {
        Self { a1, b1, a2, b2, n1, n2 }
    }

    /// Same rectangle with a different resolution.
    pub fn with_size(self, n1: usize, n2: usize) -> Self {
        Self { n1, n2, ..self }
    }

    /// Coordinates of sample `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let t = |a: f64, b: f64, k: usize, n: usize| {
            if n <= 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        };
        [t(self.a1, self.b1, i, self.n1), t(self.a2, self.b2, j, self.n2)]
    }

    /// All sample points, row-major in `i`.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut v = Vec::with_capacity(self.n1 * self.n2);
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                v.push(self.point(i, j));
            }
        }
        v
    }
}

impl SurfaceParam {
    /// Checks radii, factors and matrices for validity.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(ShellError::ConfigInvalid { field: field.into(), reason: reason.into() });
        match self {
            SurfaceParam::Plane => Ok(()),
            SurfaceParam::Cylinder { radius } | SurfaceParam::Sphere { radius } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    bad("radius", "must be positive and finite")
                }
            }
            SurfaceParam::Torus { major, minor } => {
                if !(*minor > 0.0 && major > minor && major.is_finite()) {
                    bad("torus", "requires 0 < minor < major")
                } else {
                    Ok(())
                }
            }
            SurfaceParam::Graph { height } => {
                if height.terms.iter().all(|t| t.2.is_finite()) {
                    Ok(())
                } else {
                    bad("height", "coefficients must be finite")
                }
            }
            SurfaceParam::AffineImage { base, matrix, shift } => {
                if !(matrix.iter().chain(shift.iter()).all(|v| v.is_finite())) {
                    return bad("matrix", "entries must be finite");
                }
                if matrix.determinant().abs() <= 1e-14 {
                    return bad("matrix", "must be invertible");
                }
                base.validate()
            }
            SurfaceParam::NormalOffset { base, offset } => {
                if !offset.is_finite() {
                    return bad("offset", "must be finite");
                }
                base.validate()
            }
            SurfaceParam::RadialScale { base, factor } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return bad("factor", "must be positive and finite");
                }
                base.validate()
            }
        }
    }

    /// Number of nested normal offsets; each one consumes a derivative order.
    pub fn offset_depth(&self) -> usize {
        match self {
            SurfaceParam::AffineImage { base, .. } | SurfaceParam::RadialScale { base, .. } => base.offset_depth(),
            SurfaceParam::NormalOffset { base, .. } => 1 + base.offset_depth(),
            _ => 0,
        }
    }

    /// Parameter rectangle used for curvature sampling when none is given.
    pub fn default_domain(&self) -> SampleGrid {
        use std::f64::consts::PI;
        let n = DEFAULT_SUP_GRID;
        match self {
            SurfaceParam::Plane | SurfaceParam::Graph { .. } => SampleGrid::new(-1.0, 1.0, -1.0, 1.0, n, n),
            SurfaceParam::Cylinder { .. } => SampleGrid::new(0.0, 2.0 * PI, -1.0, 1.0, n, n),
            SurfaceParam::Sphere { .. } => SampleGrid::new(0.0, 2.0 * PI, 0.35, PI - 0.35, n, n),
            SurfaceParam::Torus { .. } => SampleGrid::new(0.0, 2.0 * PI, 0.0, 2.0 * PI, n, n),
            SurfaceParam::AffineImage { base, .. } | SurfaceParam::NormalOffset { base, .. } | SurfaceParam::RadialScale { base, .. } => {
                base.default_domain()
            }
        }
    }

    /// Position `y(x)`.
    pub fn position(&self, x: [f64; 2]) -> Vec3 {
        let t = self.taylor(x, 0);
        Vec3::new(t[0].value(), t[1].value(), t[2].value())
    }

    /// Taylor expansion of `y` about `x` to the given order.
    pub fn taylor(&self, x: [f64; 2], order: usize) -> TVec3 {
        let x1 = Taylor::variable(x[0], 0, order);
        let x2 = Taylor::variable(x[1], 1, order);
        let c = |v: f64| Taylor::constant(v, order);
        match self {
            SurfaceParam::Plane => [x1, x2, c(0.0)],
            SurfaceParam::Cylinder { radius } => [x1.cos().scale(*radius), x1.sin().scale(*radius), x2],
            SurfaceParam::Sphere { radius } => {
                let s2 = x2.sin();
                [(&x1.cos() * &s2).scale(*radius), (&x1.sin() * &s2).scale(*radius), x2.cos().scale(*radius)]
            }
            SurfaceParam::Torus { major, minor } => {
                let rho = x2.cos().scale(*minor).add_scalar(*major);
                [&rho * &x1.cos(), &rho * &x1.sin(), x2.sin().scale(*minor)]
            }
            SurfaceParam::Graph { height } => {
                let f = height.taylor(&x1, &x2);
                [x1, x2, f]
            }
            SurfaceParam::AffineImage { base, matrix, shift } => {
                let b = base.taylor(x, order);
                std::array::from_fn(|r| {
                    let mut acc = c(shift[r]);
                    for k in 0..3 {
                        acc = &acc + &b[k].scale(matrix[(r, k)]);
                    }
                    acc
                })
            }
            SurfaceParam::NormalOffset { base, offset } => {
                let b = base.taylor(x, order + 1);
                let normal = taylor::normalize(&taylor::cross(&taylor::diff(&b, 0), &taylor::diff(&b, 1)));
                let pos = [b[0].truncate(order), b[1].truncate(order), b[2].truncate(order)];
                taylor::add(&pos, &taylor::scale(&normal, &c(*offset)))
            }
            SurfaceParam::RadialScale { base, factor } => {
                let b = base.taylor(x, order);
                [b[0].scale(*factor), b[1].scale(*factor), b[2].clone()]
            }
        }
    }
}

/// Pointwise geometry of a surface: derivatives, normal, fundamental forms,
/// curvatures and the structure tensors `A`, `B`, `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceJet {
    /// Parameter point.
    pub x: [f64; 2],
    /// Position.
    pub y: Vec3,
    /// `∂₁y`.
    pub d1: Vec3,
    /// `∂₂y`.
    pub d2: Vec3,
    /// `∂₁₁y`.
    pub d11: Vec3,
    /// `∂₁₂y`.
    pub d12: Vec3,
    /// `∂₂₂y`.
    pub d22: Vec3,
    /// Unit normal.
    pub n: Vec3,
    /// `(∂₁n | ∂₂n)`.
    pub grad_n: Mat32,
    /// `∇Θ = (∇y | n)`.
    pub grad_theta: Mat3,
    /// `[∇Θ]⁻¹`.
    pub grad_theta_inv: Mat3,
    /// First fundamental form.
    pub i: Mat2,
    /// Second fundamental form.
    pub ii: Mat2,
    /// Third fundamental form `II·L`.
    pub iii: Mat2,
    /// Weingarten map `I⁻¹ II`.
    pub l: Mat2,
    /// Mean curvature `tr L / 2`.
    pub h: f64,
    /// Gauss curvature `det L`.
    pub k: f64,
    /// Tangential projector `1₃ − n⊗n`.
    pub a: Mat3,
    /// Pulled-back second form `[∇Θ]⁻ᵀ II♭ [∇Θ]⁻¹`.
    pub b: Mat3,
    /// Alternator `det(∇Θ)·[∇Θ]⁻ᵀ ε♭ [∇Θ]⁻¹` with `ε = [[0, 1], [−1, 0]]`.
    pub c: Mat3,
}

impl SurfaceJet {
    /// Builds a jet from first and second partial derivatives of the position.
    pub fn from_derivatives(x: [f64; 2], y: Vec3, d1: Vec3, d2: Vec3, d11: Vec3, d12: Vec3, d22: Vec3) -> Result<Self> {
        let cr = d1.cross(&d2);
        let area = cr.norm();
        check_area(x, &d1, &d2, area)?;
        let n = cr / area;
        let proj = Mat3::identity() - n * n.transpose();
        let dn1 = proj * (d11.cross(&d2) + d1.cross(&d12)) / area;
        let dn2 = proj * (d12.cross(&d2) + d1.cross(&d22)) / area;
        Self::from_frame(x, y, d1, d2, [d11, d12, d22], n, dn1, dn2)
    }

    /// Builds a jet from tangents, a unit normal and its partial derivatives.
    ///
    /// Used by discretizations where the normal derivatives come from differences
    /// of a nodal normal field.
    #[allow(clippy::too_many_arguments)]
    pub fn from_frame(x: [f64; 2], y: Vec3, d1: Vec3, d2: Vec3, second: [Vec3; 3], n: Vec3, dn1: Vec3, dn2: Vec3) -> Result<Self> {
        let area = d1.cross(&d2).norm();
        check_area(x, &d1, &d2, area)?;
        let grad_theta = from_columns(&d1, &d2, &n);
        let grad_theta_inv = grad_theta.try_inverse().ok_or(ShellError::DegenerateParametrization { x1: x[0], x2: x[1], area })?;
        let grad_y = Mat32::from_columns(&[d1, d2]);
        let grad_n = Mat32::from_columns(&[dn1, dn2]);
        let i = grad_y.transpose() * grad_y;
        let ii = -(grad_y.transpose() * grad_n);
        let i_inv = i.try_inverse().ok_or(ShellError::DegenerateParametrization { x1: x[0], x2: x[1], area })?;
        let l = i_inv * ii;
        let iii = ii * l;
        let h = 0.5 * l.trace();
        let k = l.determinant();
        let pinv_t = grad_theta_inv.transpose();
        let a = Mat3::identity() - n * n.transpose();
        let b = pinv_t * lift_flat(&ii) * grad_theta_inv;
        let eps = Mat2::new(0.0, 1.0, -1.0, 0.0);
        let c = pinv_t * lift_flat(&eps) * grad_theta_inv * grad_theta.determinant();
        Ok(Self {
            x,
            y,
            d1,
            d2,
            d11: second[0],
            d12: second[1],
            d22: second[2],
            n,
            grad_n,
            grad_theta,
            grad_theta_inv,
            i,
            ii,
            iii,
            l,
            h,
            k,
            a,
            b,
            c,
        })
    }

    /// `∇y = (d₁ | d₂)`.
    pub fn grad_y(&self) -> Mat32 {
        Mat32::from_columns(&[self.d1, self.d2])
    }

    /// `det ∇Θ = ‖d₁ × d₂‖`, the area element.
    pub fn area_element(&self) -> f64 {
        self.grad_theta.determinant()
    }

    /// Principal curvatures `κ₁ ≥ κ₂`, the eigenvalues of `L`.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let l = &self.l;
        let half_gap = 0.5 * (l[(0, 0)] - l[(1, 1)]);
        let disc = (half_gap * half_gap + l[(0, 1)] * l[(1, 0)]).max(0.0).sqrt();
        (self.h + disc, self.h - disc)
    }

    /// `(∇n | 0)`.
    pub fn grad_n_padded(&self) -> Mat3 {
        crate::tensor_algebra::pad_columns(&self.grad_n)
    }
}

fn check_area(x: [f64; 2], d1: &Vec3, d2: &Vec3, area: f64) -> Result<()> {
    if !(area > EPS_AREA_REL * d1.norm() * d2.norm()) {
        return Err(ShellError::DegenerateParametrization { x1: x[0], x2: x[1], area });
    }
    Ok(())
}

/// Evaluates the geometry of `surface` at `point` with exact derivatives.
pub fn eval_jet(surface: &SurfaceParam, point: [f64; 2]) -> Result<SurfaceJet> {
    let t = surface.taylor(point, 2);
    let v = |i: usize, j: usize| Vec3::new(t[0].derivative(i, j), t[1].derivative(i, j), t[2].derivative(i, j));
    SurfaceJet::from_derivatives(point, v(0, 0), v(1, 0), v(0, 1), v(2, 0), v(1, 1), v(0, 2))
}

/// Named residuals of the algebraic identities satisfied by `A`, `B`, `C`, `L` and `III`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    /// `(name, absolute residual)` pairs.
    pub residuals: Vec<(&'static str, f64)>,
}

impl IdentityReport {
    /// Largest residual.
    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Evaluates every structure identity of a surface jet.
pub fn check_structure_identities(jet: &SurfaceJet) -> IdentityReport {
    let (a, b, c) = (&jet.a, &jet.b, &jet.c);
    let pinv = &jet.grad_theta_inv;
    let id = Mat3::identity();
    let residuals = vec![
        ("tr A = 2", (a.trace() - 2.0).abs()),
        ("det A = 0", a.determinant().abs()),
        ("tr B = 2H", (b.trace() - 2.0 * jet.h).abs()),
        ("det B = 0", b.determinant().abs()),
        ("A = 1 - n n", (a - (id - jet.n * jet.n.transpose())).norm()),
        ("A = pullback of I", (a - pinv.transpose() * lift_flat(&jet.i) * pinv).norm()),
        ("B = -(grad n|0) inv", (b + jet.grad_n_padded() * pinv).norm()),
        ("B^2 - 2H B + K A = 0", (b * b - b * (2.0 * jet.h) + a * jet.k).norm()),
        ("AB = B", (a * b - b).norm()),
        ("BA = B", (b * a - b).norm()),
        ("A^2 = A", (a * a - a).norm()),
        ("C + C^T = 0", (c + c.transpose()).norm()),
        ("C^2 = -A", (c * c + a).norm()),
        ("|C|^2 = 2", (c.norm_squared() - 2.0).abs()),
        ("inv B = L inv", (pinv * b - lift_flat(&jet.l) * pinv).norm()),
        ("B^2 = pullback of III", (b * b - pinv.transpose() * lift_flat(&jet.iii) * pinv).norm()),
        ("flat identity", (lift_flat(&Mat2::identity()) - flat_identity()).norm()),
    ];
    IdentityReport { residuals }
}

/// `det ∇Θ(x₃) / det ∇Θ(0) = 1 − 2H x₃ + K x₃²`.
pub fn det_through_thickness(jet: &SurfaceJet, x3: f64) -> f64 {
    1.0 - 2.0 * jet.h * x3 + jet.k * x3 * x3
}

/// Minimum of [`det_through_thickness`] over `x₃ ∈ [−h/2, h/2]`, from the endpoints
/// and the interior stationary point of the quadratic.
pub fn min_det_through_thickness(jet: &SurfaceJet, h: f64) -> f64 {
    let half = 0.5 * h;
    let mut m = det_through_thickness(jet, -half).min(det_through_thickness(jet, half));
    if jet.k != 0.0 {
        let x3 = jet.h / jet.k;
        if x3.abs() <= half {
            m = m.min(det_through_thickness(jet, x3));
        }
    }
    m
}

/// Sampled `max |κᵢ|` over a grid of parameter points.
pub fn principal_curvature_bound(surface: &SurfaceParam, grid: &SampleGrid) -> Result<f64> {
    let mut kmax: f64 = 0.0;
    for p in grid.points() {
        let jet = eval_jet(surface, p)?;
        let (k1, k2) = jet.principal_curvatures();
        kmax = kmax.max(k1.abs()).max(k2.abs());
    }
    Ok(kmax)
}
