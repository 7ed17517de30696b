//! Catalog of nonlinear bending tensors and the invariance battery: vanishing
//! under rigid motions, vanishing under normal-preserving pure stretches and
//! invariance of plate bending under planar scaling.

use rayon::prelude::*;

use crate::error::Result;
use crate::strain_measures::{pulled_back_metric, transfer_map};
use crate::surface_geometry::{eval_jet, Polynomial, SurfaceJet, SurfaceParam};
use crate::tensor_algebra::{lift_flat, psd_sqrt, spd_sqrt, sym, symmetric_eigen, Mat2, Mat3, Vec3};

/// Absolute tolerance for "vanishes" with analytic jets.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Absolute tolerance for "vanishes" with finite-difference jets.
pub const FD_TOL: f64 = 1e-6;
/// Relative tolerance for symmetry and normal comparisons in the stretch checks.
pub const STRETCH_TOL: f64 = 1e-9;
/// Scaling factors of the planar-scaling requirement.
pub const PLATE_SCALINGS: [f64; 3] = [0.5, 2.0, 10.0];

/// Bending tensors under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BendingKind {
    /// `[∇Θ]⁻ᵀ(II_m♭ − II_y₀♭)[∇Θ]⁻¹`.
    KoiterPulled,
    /// `−[∇Θ]⁻ᵀII_m♭[∇Θ]⁻¹ + √([∇Θ]⁻ᵀI_m♭[∇Θ]⁻¹)·[∇Θ]⁻ᵀII_y₀♭[∇Θ]⁻¹`.
    AcharyaTilde,
    /// Symmetric part of [`BendingKind::AcharyaTilde`].
    AcharyaSym,
    /// `[∇Θ]ᵀ(√([∇Θ]Î_m⁻¹[∇Θ]ᵀ)[∇Θ]⁻ᵀII_m♭[∇Θ]⁻¹ − [∇Θ]⁻ᵀII_y₀♭[∇Θ]⁻¹)∇Θ`,
    /// the bending strain of the constrained model.
    InfinityFlat,
}

impl BendingKind {
    /// All kinds in declaration order.
    pub const ALL: [BendingKind; 4] =
        [BendingKind::KoiterPulled, BendingKind::AcharyaTilde, BendingKind::AcharyaSym, BendingKind::InfinityFlat];

    /// Stable name.
    pub fn name(&self) -> &'static str {
        match self {
            BendingKind::KoiterPulled => "KoiterPulled",
            BendingKind::AcharyaTilde => "AcharyaTilde",
            BendingKind::AcharyaSym => "AcharyaSym",
            BendingKind::InfinityFlat => "InfinityFlat",
        }
    }

    /// Inverse of [`BendingKind::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

fn pull(jet: &SurfaceJet, m: &Mat2) -> Mat3 {
    jet.grad_theta_inv.transpose() * lift_flat(m) * jet.grad_theta_inv
}

/// `√([∇Θ]⁻ᵀ I_m♭ [∇Θ]⁻¹)`, the rank-2 root with the normal direction as kernel.
pub fn tangential_stretch(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Mat3 {
    psd_sqrt(&pull(ref_jet, &def_jet.i))
}

/// Evaluates the selected bending tensor.
pub fn bending_tensor(kind: BendingKind, ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Result<Mat3> {
    let ii_m = pull(ref_jet, &def_jet.ii);
    let ii_0 = pull(ref_jet, &ref_jet.ii);
    Ok(match kind {
        BendingKind::KoiterPulled => ii_m - ii_0,
        BendingKind::AcharyaTilde => -ii_m + tangential_stretch(ref_jet, def_jet) * ii_0,
        BendingKind::AcharyaSym => sym(&(-ii_m + tangential_stretch(ref_jet, def_jet) * ii_0)),
        BendingKind::InfinityFlat => {
            let inv_root = spd_sqrt(&pulled_back_metric(ref_jet, def_jet))?.try_inverse().expect("an SPD root is invertible");
            ref_jet.grad_theta.transpose() * (inv_root * ii_m - ii_0) * ref_jet.grad_theta
        }
    })
}

/// Transfer map `U_e = (∇m | n)[∇Θ]⁻¹` and whether it is a pure stretch:
/// symmetric, positive definite and orientation preserving on tangent planes.
pub fn pure_stretch_check(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> (bool, Mat3) {
    let ue = transfer_map(ref_jet, def_jet);
    let symmetric = (ue - ue.transpose()).norm() <= STRETCH_TOL * (1.0 + ue.norm());
    let positive = symmetric && symmetric_eigen(&ue).0.min() > 0.0;
    // Coefficients of ∇m in the tangent basis ∇y₀.
    let i_inv = ref_jet.i.try_inverse().expect("jet metric is invertible");
    let coeffs = i_inv * ref_jet.grad_y().transpose() * def_jet.grad_y();
    let oriented = coeffs.determinant() > 0.0;
    (symmetric && positive && oriented, ue)
}

/// True when the deformed unit normal equals the reference one at the point.
pub fn normal_preserved_check(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> bool {
    (def_jet.n - ref_jet.n).norm() <= STRETCH_TOL
}

/// True when the normal field is unaltered to first order around the point:
/// `n = n₀` and `∇n = ∇n₀`.
pub fn normal_field_preserved_check(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> bool {
    normal_preserved_check(ref_jet, def_jet) && (def_jet.grad_n - ref_jet.grad_n).norm() <= STRETCH_TOL * (1.0 + ref_jet.grad_n.norm())
}

/// `‖R̃ + √([∇Θ]⁻ᵀI_m♭[∇Θ]⁻¹)[∇Θ]⁻ᵀ R∞♭ [∇Θ]⁻¹‖` relating the first Acharya
/// tensor to the constrained bending strain.
pub fn acharya_relation_residual(ref_jet: &SurfaceJet, def_jet: &SurfaceJet) -> Result<f64> {
    let tilde = bending_tensor(BendingKind::AcharyaTilde, ref_jet, def_jet)?;
    let flat = bending_tensor(BendingKind::InfinityFlat, ref_jet, def_jet)?;
    let pinv = &ref_jet.grad_theta_inv;
    Ok((tilde + tangential_stretch(ref_jet, def_jet) * pinv.transpose() * flat * pinv).norm())
}

/// Deformations applied to a reference surface.
#[derive(Debug, Clone, PartialEq)]
pub enum DeformationCase {
    /// `m = Q̂y₀ + b`.
    Rigid { rotation: Mat3, shift: Vec3 },
    /// `m = y₀ + c·n₀`.
    NormalOffset { offset: f64 },
    /// Scales the first two components of `y₀`.
    RadialScale { factor: f64 },
    /// `m = α·y₀`.
    PlanarScale { alpha: f64 },
    /// `m = diag(λ₁, λ₁, λ₂)·y₀`, a biaxial stretch of a cylinder about the x₃-axis.
    BiaxialCylinderStretch { hoop: f64, axial: f64 },
    /// An explicit deformed surface over the same parameters.
    Custom { name: String, surface: SurfaceParam },
}

impl DeformationCase {
    /// Short label for reports.
    pub fn label(&self) -> String {
        match self {
            DeformationCase::Rigid { .. } => "Rigid".into(),
            DeformationCase::NormalOffset { offset } => format!("NormalOffset({offset})"),
            DeformationCase::RadialScale { factor } => format!("RadialScale({factor})"),
            DeformationCase::PlanarScale { alpha } => format!("PlanarScale({alpha})"),
            DeformationCase::BiaxialCylinderStretch { hoop, axial } => format!("BiaxialCylinderStretch({hoop},{axial})"),
            DeformationCase::Custom { name, .. } => format!("Custom({name})"),
        }
    }

    /// The deformed midsurface over the parameters of `reference`.
    pub fn deformation(&self, reference: &SurfaceParam) -> SurfaceParam {
        let base = Box::new(reference.clone());
        match self {
            DeformationCase::Rigid { rotation, shift } => SurfaceParam::AffineImage { base, matrix: *rotation, shift: *shift },
            DeformationCase::NormalOffset { offset } => SurfaceParam::NormalOffset { base, offset: *offset },
            DeformationCase::RadialScale { factor } => SurfaceParam::RadialScale { base, factor: *factor },
            DeformationCase::PlanarScale { alpha } => {
                SurfaceParam::AffineImage { base, matrix: Mat3::identity() * *alpha, shift: Vec3::zeros() }
            }
            DeformationCase::BiaxialCylinderStretch { hoop, axial } => {
                SurfaceParam::AffineImage { base, matrix: Mat3::from_diagonal(&Vec3::new(*hoop, *hoop, *axial)), shift: Vec3::zeros() }
            }
            DeformationCase::Custom { surface, .. } => surface.clone(),
        }
    }
}

/// A reference surface with the deformations tested on it.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    /// Label of the reference surface.
    pub name: String,
    /// Reference midsurface.
    pub surface: SurfaceParam,
    /// Deformations applied to it.
    pub cases: Vec<DeformationCase>,
}

/// A fixed proper rotation used for the rigid cases.
pub fn sample_rotation() -> Mat3 {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vec3::new(1.0, -2.0, 0.5)), 0.7).into_inner()
}

/// Bent plate `x₃ = 0.3x₁² + 0.2x₁x₂ − 0.25x₂² + 0.1x₁³` used for the planar-scaling requirement.
pub fn bent_plate() -> SurfaceParam {
    SurfaceParam::Graph { height: Polynomial::new(vec![(2, 0, 0.3), (1, 1, 0.2), (0, 2, -0.25), (3, 0, 0.1)]) }
}

/// Plane, unit cylinder, unit sphere, torus (2, 0.5) and the saddle `x₁² − x₂²`,
/// each with a rigid motion, a normal offset, a radial scaling and a planar
/// scaling; the cylinder also gets a biaxial stretch and the plane a bent graph.
pub fn standard_catalog() -> Vec<CatalogEntry> {
    let common = || {
        vec![
            DeformationCase::Rigid { rotation: sample_rotation(), shift: Vec3::new(0.3, -1.0, 2.0) },
            DeformationCase::NormalOffset { offset: 0.1 },
            DeformationCase::RadialScale { factor: 1.5 },
            DeformationCase::PlanarScale { alpha: 2.0 },
        ]
    };
    let mut plane_cases = common();
    plane_cases.push(DeformationCase::Custom { name: "bent plate".into(), surface: bent_plate() });
    let mut cylinder_cases = common();
    cylinder_cases.push(DeformationCase::BiaxialCylinderStretch { hoop: 1.3, axial: 0.8 });
    vec![
        CatalogEntry { name: "plane".into(), surface: SurfaceParam::Plane, cases: plane_cases },
        CatalogEntry { name: "cylinder(1)".into(), surface: SurfaceParam::Cylinder { radius: 1.0 }, cases: cylinder_cases },
        CatalogEntry { name: "sphere(1)".into(), surface: SurfaceParam::Sphere { radius: 1.0 }, cases: common() },
        CatalogEntry { name: "torus(2,0.5)".into(), surface: SurfaceParam::Torus { major: 2.0, minor: 0.5 }, cases: common() },
        CatalogEntry {
            name: "saddle".into(),
            surface: SurfaceParam::Graph { height: Polynomial::new(vec![(2, 0, 1.0), (0, 2, -1.0)]) },
            cases: common(),
        },
    ]
}

/// Invariance requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Requirement {
    /// Vanishing under rigid motions.
    Ar1,
    /// Vanishing under normal-preserving pure stretches.
    Ar3Star,
    /// Invariance under `m → αm` on a planar reference.
    Ar3StarPlate,
}

impl Requirement {
    /// Stable name.
    pub fn name(&self) -> &'static str {
        match self {
            Requirement::Ar1 => "AR1",
            Requirement::Ar3Star => "AR3*",
            Requirement::Ar3StarPlate => "AR3*_plate",
        }
    }
}

/// One evaluated requirement at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceRecord {
    /// Bending tensor.
    pub kind: BendingKind,
    /// Requirement checked.
    pub requirement: Requirement,
    /// Reference surface label.
    pub surface: String,
    /// Deformation label (with the scaling factor for the planar requirement).
    pub case: String,
    /// Parameter point.
    pub point: [f64; 2],
    /// `‖T‖` for AR1/AR3*, `‖T(αm) − T(m)‖` for the planar requirement.
    pub residual: f64,
    /// `‖T(αm)‖/‖T(m)‖` for the planar requirement.
    pub scaling_ratio: Option<f64>,
    /// Residual within tolerance.
    pub pass: bool,
}

/// Pass/fail per requirement over all applicable records of one kind
/// (`None` when no record applies).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindSummary {
    /// Bending tensor.
    pub kind: BendingKind,
    /// Rigid-motion requirement.
    pub ar1: Option<bool>,
    /// Pure-stretch requirement.
    pub ar3_star: Option<bool>,
    /// Planar-scaling requirement.
    pub ar3_star_plate: Option<bool>,
}

/// Records and summary of one suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    /// Every evaluated record.
    pub records: Vec<InvarianceRecord>,
    /// One summary per kind.
    pub summaries: Vec<KindSummary>,
}

impl SuiteReport {
    /// Summary of `kind`.
    pub fn summary(&self, kind: BendingKind) -> Option<&KindSummary> {
        self.summaries.iter().find(|s| s.kind == kind)
    }

    /// Largest residual over the records of `kind`, `requirement` and optionally a case-label prefix.
    pub fn max_residual(&self, kind: BendingKind, requirement: Requirement, case_prefix: Option<&str>) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.kind == kind && r.requirement == requirement)
            .filter(|r| case_prefix.is_none_or(|p| r.case.starts_with(p)))
            .map(|r| r.residual)
            .reduce(f64::max)
    }

    /// Smallest residual over matching records.
    pub fn min_residual(&self, kind: BendingKind, requirement: Requirement, case_prefix: Option<&str>) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.kind == kind && r.requirement == requirement)
            .filter(|r| case_prefix.is_none_or(|p| r.case.starts_with(p)))
            .map(|r| r.residual)
            .reduce(f64::min)
    }
}

fn sample_points(surface: &SurfaceParam, n: usize) -> Vec<[f64; 2]> {
    let g = surface.default_domain();
    // Shrink the rectangle slightly so periodic seams are not sampled twice.
    let (s1, s2) = (0.05 * (g.b1 - g.a1), 0.05 * (g.b2 - g.a2));
    crate::surface_geometry::SampleGrid::new(g.a1 + s1, g.b1 - s1, g.a2 + s2, g.b2 - s2, n, n).points()
}

/// Evaluates the three requirements for `kinds` over `catalog` on an `n × n`
/// grid of each reference surface's default domain.
///
/// AR1 is evaluated on rigid cases, AR3* on every case and point where the
/// deformation is a pure stretch leaving the normal field unaltered around the point, and the planar requirement
/// on every planar reference and non-rigid case with `α ∈ {0.5, 2, 10}`.
pub fn invariance_suite(kinds: &[BendingKind], catalog: &[CatalogEntry], n: usize) -> Result<SuiteReport> {
    let mut tasks = Vec::new();
    for entry in catalog {
        for case in &entry.cases {
            for p in sample_points(&entry.surface, n) {
                tasks.push((entry, case, p));
            }
        }
    }
    let per_task: Vec<Result<Vec<InvarianceRecord>>> =
        tasks.par_iter().map(|(entry, case, p)| evaluate_point(kinds, entry, case, *p, ANALYTIC_TOL)).collect();
    let mut records = Vec::new();
    for r in per_task {
        records.extend(r?);
    }
    let summaries = kinds
        .iter()
        .map(|&kind| {
            let verdict = |req: Requirement| {
                let mut it = records.iter().filter(|r| r.kind == kind && r.requirement == req).peekable();
                it.peek()?;
                Some(it.all(|r| r.pass))
            };
            KindSummary {
                kind,
                ar1: verdict(Requirement::Ar1),
                ar3_star: verdict(Requirement::Ar3Star),
                ar3_star_plate: verdict(Requirement::Ar3StarPlate),
            }
        })
        .collect();
    Ok(SuiteReport { records, summaries })
}

fn evaluate_point(
    kinds: &[BendingKind],
    entry: &CatalogEntry,
    case: &DeformationCase,
    p: [f64; 2],
    tol: f64,
) -> Result<Vec<InvarianceRecord>> {
    let def = case.deformation(&entry.surface);
    let rj = eval_jet(&entry.surface, p)?;
    let dj = eval_jet(&def, p)?;
    let rigid = matches!(case, DeformationCase::Rigid { .. });
    let stretch = pure_stretch_check(&rj, &dj).0 && normal_field_preserved_check(&rj, &dj);
    let planar = entry.surface == SurfaceParam::Plane && !rigid;
    let mut out = Vec::new();
    for &kind in kinds {
        let t = bending_tensor(kind, &rj, &dj)?;
        let record = |requirement, case: String, residual: f64, ratio| InvarianceRecord {
            kind,
            requirement,
            surface: entry.name.clone(),
            case,
            point: p,
            residual,
            scaling_ratio: ratio,
            pass: residual <= tol,
        };
        if rigid {
            out.push(record(Requirement::Ar1, case.label(), t.norm(), None));
        }
        if stretch {
            out.push(record(Requirement::Ar3Star, case.label(), t.norm(), None));
        }
        if planar {
            for alpha in PLATE_SCALINGS {
                let scaled = DeformationCase::PlanarScale { alpha }.deformation(&def);
                let ts = bending_tensor(kind, &rj, &eval_jet(&scaled, p)?)?;
                let ratio = (t.norm() > tol).then(|| ts.norm() / t.norm());
                out.push(record(Requirement::Ar3StarPlate, format!("{}·{alpha}", case.label()), (ts - t).norm(), ratio));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_gives_zero_for_all_kinds() {
        let s = SurfaceParam::Torus { major: 2.0, minor: 0.5 };
        let j = eval_jet(&s, [0.3, 0.9]).unwrap();
        for k in BendingKind::ALL {
            assert!(bending_tensor(k, &j, &j).unwrap().norm() < 1e-12);
        }
        assert!(acharya_relation_residual(&j, &j).unwrap() < 1e-12);
    }

    #[test]
    fn radial_expansion_of_cylinder() {
        let c = SurfaceParam::Cylinder { radius: 1.0 };
        let d = DeformationCase::RadialScale { factor: 1.5 }.deformation(&c);
        let (rj, dj) = (eval_jet(&c, [0.4, 0.2]).unwrap(), eval_jet(&d, [0.4, 0.2]).unwrap());
        let k = bending_tensor(BendingKind::KoiterPulled, &rj, &dj).unwrap();
        assert_relative_eq!(k.norm(), 0.5, epsilon = 1e-12);
        let e_theta = rj.d1.normalize();
        assert_relative_eq!((e_theta.transpose() * k * e_theta)[(0, 0)], -0.5, epsilon = 1e-12);
        assert!(bending_tensor(BendingKind::InfinityFlat, &rj, &dj).unwrap().norm() < 1e-12);
    }

    #[test]
    fn stretch_checks() {
        let j = eval_jet(&SurfaceParam::Plane, [0.1, 0.2]).unwrap();
        let (ok, ue) = pure_stretch_check(&j, &j);
        assert!(ok);
        assert_eq!(ue, Mat3::identity());
        let stretched = SurfaceParam::AffineImage {
            base: Box::new(SurfaceParam::Plane),
            matrix: Mat3::from_diagonal(&Vec3::new(2.0, 3.0, 1.0)),
            shift: Vec3::zeros(),
        };
        let (ok, ue) = pure_stretch_check(&j, &eval_jet(&stretched, [0.1, 0.2]).unwrap());
        assert!(ok);
        assert!((ue - Mat3::from_diagonal(&Vec3::new(2.0, 3.0, 1.0))).norm() < 1e-14);
        let rotated = DeformationCase::Rigid { rotation: sample_rotation(), shift: Vec3::zeros() }.deformation(&SurfaceParam::Plane);
        let rj = eval_jet(&rotated, [0.1, 0.2]).unwrap();
        assert!(!pure_stretch_check(&j, &rj).0);
        assert!(!normal_preserved_check(&j, &rj));
    }

    #[test]
    fn normal_offsets_preserve_normals() {
        for e in standard_catalog() {
            let d = DeformationCase::NormalOffset { offset: 0.1 }.deformation(&e.surface);
            let p = sample_points(&e.surface, 3)[4];
            assert!(normal_preserved_check(&eval_jet(&e.surface, p).unwrap(), &eval_jet(&d, p).unwrap()), "{}", e.name);
        }
    }
}
