use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shellkit::constraints_coercivity::*;
use shellkit::energy_forms::{density_unconstrained, w_curv, w_shell, w_shell_inf, ModelVariant, ThicknessOrder};
use shellkit::sampling::{random_mat3, random_strain_state};
use shellkit::strain_measures::{ShellMaterial, StrainState};
use shellkit::surface_geometry::{eval_jet, SurfaceParam};
use shellkit::tensor_algebra::{skew, sym};

fn sphere_point(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.4..2.7)]
}

#[test]
fn h5_estimate_holds_on_unit_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = ShellMaterial::unit(0.5, 1.0);
    let sphere = SurfaceParam::Sphere { radius: 1.0 };
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let jet = eval_jet(&sphere, sphere_point(&mut rng)).unwrap();
        let scale = rng.gen_range(0.01..2.0);
        let state = random_strain_state(&mut rng, &jet, scale);
        let (lhs, rhs) = coercivity_bound_h5(&state, &jet, &m).unwrap();
        worst = worst.min((lhs - rhs) / (1.0 + lhs));
    }
    assert!(worst >= -1e-12, "{worst}");
}

#[test]
fn h5_estimate_rejects_thick_shells() {
    let jet = eval_jet(&SurfaceParam::Sphere { radius: 1.0 }, [0.1, 1.0]).unwrap();
    assert!(coercivity_bound_h5(&StrainState::zero(), &jet, &ShellMaterial::unit(1.0, 1.0)).is_err());
    assert_eq!(coercivity_bound_h5(&StrainState::zero(), &jet, &ShellMaterial::unit(0.5, 1.0)).unwrap(), (0.0, 0.0));
}

#[test]
fn h3_constant_bounds_the_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let sphere = SurfaceParam::Sphere { radius: 1.0 };
    for (h, mu_c) in [(0.2, 1.0), (0.1, 3.0), (0.3, 0.5)] {
        let m = ShellMaterial::unit(h, mu_c);
        let jets: Vec<_> = (0..64).map(|_| eval_jet(&sphere, sphere_point(&mut rng)).unwrap()).collect();
        let a1 = coercivity_constant_h3(&m, &jets, false).value().expect("coercive");
        assert!(a1 > 0.0);
        let mut worst = f64::INFINITY;
        for _ in 0..10_000 {
            let jet = &jets[rng.gen_range(0..jets.len())];
            let scale = rng.gen_range(0.01..2.0);
            let s = random_strain_state(&mut rng, jet, scale);
            let w = density_unconstrained(&s, jet, &m, ThicknessOrder::H3, false).unwrap().total;
            worst = worst.min((w - a1 * (s.e.norm_squared() + s.k.norm_squared())) / (1.0 + w));
        }
        assert!(worst >= -1e-12, "h = {h}: {worst}");
    }
}

#[test]
fn h3_constant_feasibility_follows_condition_i() {
    for h in [0.05, 0.2, 0.4, 0.6, 0.8, 1.2] {
        let m = ShellMaterial::unit(h, 1.0);
        let report = thickness_admissible_for_bound(&m, 1.0, ModelVariant::UnconstrainedH3);
        let c = coercivity_constant_h3_for_bound(&m, 1.0, false);
        assert_eq!(report.h3_condition_i, c.value().is_some(), "h = {h}");
    }
}

#[test]
fn positivity_bounds_of_the_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let m = ShellMaterial::new(0.1, 1.3, 0.8, 0.7, 1.2, 0.9, 1.4, 0.6).unwrap();
    let f = form_eigenvalues(&m);
    for _ in 0..10_000 {
        let x = random_mat3(&mut rng, 1.0);
        let w = w_shell(&x, &m).unwrap();
        let (s, a) = (sym(&x).norm_squared(), skew(&x).norm_squared());
        assert!(f.c1_plus * s + m.mu_c * a <= w * (1.0 + 1e-12) + 1e-14);
        assert!(w <= (f.c1_max * s + m.mu_c * a) * (1.0 + 1e-12) + 1e-14);
        let c = w_curv(&x, &m);
        assert!(f.c2_plus * x.norm_squared() <= c * (1.0 + 1e-12) + 1e-14);
        assert!(c <= f.c2_max * x.norm_squared() * (1.0 + 1e-12) + 1e-14);
    }
}

#[test]
fn eigenvalue_extremes_are_attained() {
    let m = ShellMaterial::new(0.1, 1.3, 0.8, 0.7, 1.2, 0.9, 1.4, 0.6).unwrap();
    let f = form_eigenvalues(&m);
    let deviatoric = shellkit::tensor_algebra::Mat3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0) / 2f64.sqrt();
    let spherical = shellkit::tensor_algebra::Mat3::identity() / 3f64.sqrt();
    let (a, b) = (w_shell_inf(&deviatoric, &m).unwrap(), w_shell_inf(&spherical, &m).unwrap());
    assert!((a.min(b) - f.c1_plus).abs() < 1e-10 && (a.max(b) - f.c1_max).abs() < 1e-10);
}

#[test]
fn admissibility_is_monotone_in_thickness() {
    let sphere = SurfaceParam::Sphere { radius: 1.0 };
    for variant in [ModelVariant::UnconstrainedH3, ModelVariant::ConstrainedH5, ModelVariant::ConstrainedH3] {
        let mut prev: Option<AdmissibilityReport> = None;
        for i in (1..=60).rev() {
            let h = 0.05 * i as f64;
            let r = thickness_admissible(&ShellMaterial::unit(h, 2.0), &sphere, variant, None).unwrap();
            assert!(!r.h5_ok || r.injectivity_ok);
            if let Some(p) = prev {
                assert!(r.injectivity_ok >= p.injectivity_ok && r.h5_ok >= p.h5_ok);
                assert!(r.h3_condition_i >= p.h3_condition_i && r.h3_condition_ii >= p.h3_condition_ii);
            }
            prev = Some(r);
        }
    }
}

#[test]
fn constrained_h5_report_ignores_couple_modulus() {
    let sphere = SurfaceParam::Sphere { radius: 1.0 };
    let base = thickness_admissible(&ShellMaterial::unit(0.4, f64::INFINITY), &sphere, ModelVariant::ConstrainedH5, None).unwrap();
    for mu_c in [0.1, 1.0, 10.0] {
        let r = thickness_admissible(&ShellMaterial::unit(0.4, mu_c), &sphere, ModelVariant::ConstrainedH5, None).unwrap();
        assert_eq!(r, base);
    }
}
