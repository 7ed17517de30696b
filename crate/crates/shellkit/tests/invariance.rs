use shellkit::bending_invariance::*;
use shellkit::strain_measures::transfer_map;
use shellkit::surface_geometry::{eval_jet, SurfaceParam};
use shellkit::tensor_algebra::lift_flat;

fn suite() -> SuiteReport {
    invariance_suite(&BendingKind::ALL, &standard_catalog(), 5).unwrap()
}

fn curved_min(report: &SuiteReport, kind: BendingKind, prefix: &str) -> f64 {
    report
        .records
        .iter()
        .filter(|r| r.kind == kind && r.requirement == Requirement::Ar3Star && r.surface != "plane" && r.case.starts_with(prefix))
        .map(|r| r.residual)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn infinity_flat_passes_every_requirement() {
    let s = *suite().summary(BendingKind::InfinityFlat).unwrap();
    assert_eq!((s.ar1, s.ar3_star, s.ar3_star_plate), (Some(true), Some(true), Some(true)));
}

#[test]
fn acharya_tensors_fail_only_the_planar_requirement() {
    let r = suite();
    for kind in [BendingKind::AcharyaTilde, BendingKind::AcharyaSym] {
        let s = *r.summary(kind).unwrap();
        assert_eq!((s.ar1, s.ar3_star, s.ar3_star_plate), (Some(true), Some(true), Some(false)));
    }
}

#[test]
fn koiter_fails_for_normal_offsets_and_radial_expansion() {
    let r = suite();
    let s = *r.summary(BendingKind::KoiterPulled).unwrap();
    assert_eq!((s.ar1, s.ar3_star), (Some(true), Some(false)));
    assert!(curved_min(&r, BendingKind::KoiterPulled, "NormalOffset") > 1e-3);
    assert!(curved_min(&r, BendingKind::KoiterPulled, "RadialScale") > 1e-3);
    for kind in [BendingKind::AcharyaTilde, BendingKind::AcharyaSym, BendingKind::InfinityFlat] {
        assert!(r.max_residual(kind, Requirement::Ar3Star, None).unwrap() <= 1e-9);
    }
}

#[test]
fn rigid_motions_give_zero_for_every_kind() {
    let r = suite();
    for kind in BendingKind::ALL {
        assert!(r.max_residual(kind, Requirement::Ar1, None).unwrap() <= 1e-10);
    }
}

#[test]
fn planar_scaling_ratios() {
    let plate = bent_plate();
    let doubled = DeformationCase::PlanarScale { alpha: 2.0 }.deformation(&plate);
    for p in [[0.3, -0.2], [-0.7, 0.5], [0.0, 0.9]] {
        let rj = eval_jet(&SurfaceParam::Plane, p).unwrap();
        let (a, b) = (eval_jet(&plate, p).unwrap(), eval_jet(&doubled, p).unwrap());
        for kind in [BendingKind::AcharyaTilde, BendingKind::AcharyaSym, BendingKind::KoiterPulled] {
            let (t1, t2) = (bending_tensor(kind, &rj, &a).unwrap(), bending_tensor(kind, &rj, &b).unwrap());
            assert!((t2.norm() / t1.norm() - 2.0).abs() <= 1e-6);
            assert!((t2 - t1 * 2.0).norm() <= 1e-9 * t1.norm());
        }
        let (t1, t2) =
            (bending_tensor(BendingKind::InfinityFlat, &rj, &a).unwrap(), bending_tensor(BendingKind::InfinityFlat, &rj, &b).unwrap());
        assert!((t2 - t1).norm() <= 1e-9);
    }
}

#[test]
fn acharya_relation_holds_across_the_catalog() {
    for entry in standard_catalog() {
        let g = entry.surface.default_domain().with_size(4, 4);
        for case in &entry.cases {
            let def = case.deformation(&entry.surface);
            for p in g.points() {
                let res = acharya_relation_residual(&eval_jet(&entry.surface, p).unwrap(), &eval_jet(&def, p).unwrap()).unwrap();
                assert!(res <= 1e-9, "{} {} {p:?}: {res}", entry.name, case.label());
            }
        }
    }
}

#[test]
fn rank_two_root_identity_for_pure_stretches() {
    for entry in standard_catalog() {
        for case in entry.cases.iter().filter(|c| !matches!(c, DeformationCase::Rigid { .. })) {
            let def = case.deformation(&entry.surface);
            for p in entry.surface.default_domain().with_size(3, 3).points() {
                let (rj, dj) = (eval_jet(&entry.surface, p).unwrap(), eval_jet(&def, p).unwrap());
                if !(pure_stretch_check(&rj, &dj).0 && normal_preserved_check(&rj, &dj)) {
                    continue;
                }
                let ue = transfer_map(&rj, &dj);
                let nn = rj.n * rj.n.transpose();
                let lhs = rj.grad_theta_inv.transpose() * lift_flat(&dj.i) * rj.grad_theta_inv;
                let rhs = (ue - nn) * (ue - nn);
                assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
            }
        }
    }
}
