use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shellkit::energy_forms::ModelVariant;
use shellkit::minimizer::*;
use shellkit::sampling::random_rotation;
use shellkit::strain_measures::ShellMaterial;
use shellkit::surface_geometry::{Polynomial, SampleGrid, SurfaceParam};
use shellkit::tensor_algebra::{Mat3, Vec3};
use shellkit::ShellError;

/// `h(μ‖E‖² + λμ/(λ+2μ)·tr²E)·area` for `E = diag(s−1, s−1, 0)` on the unit square.
fn uniform_stretch_energy(m: &ShellMaterial, s: f64) -> f64 {
    let e = s - 1.0;
    m.h * (m.mu * 2.0 * e * e + m.lambda * m.mu / (m.lambda + 2.0 * m.mu) * 4.0 * e * e)
}

fn affine(matrix: Mat3, shift: Vec3, base: SurfaceParam) -> SurfaceParam {
    SurfaceParam::AffineImage { base: Box::new(base), matrix, shift }
}

fn bump() -> SurfaceParam {
    SurfaceParam::Graph { height: Polynomial::new(vec![(1, 1, 0.05), (2, 0, 0.03)]) }
}

fn minimizable() -> [(ModelVariant, ShellMaterial); 4] {
    [
        (ModelVariant::ModifiedConstrainedPlate, ShellMaterial::unit(0.01, f64::INFINITY)),
        (ModelVariant::ModifiedConstrainedH3, ShellMaterial::unit(0.05, f64::INFINITY)),
        (ModelVariant::UnconstrainedH5, ShellMaterial::unit(0.05, 2.0)),
        (ModelVariant::Koiter, ShellMaterial::unit(0.05, f64::INFINITY)),
    ]
}

#[test]
fn trivial_problem_converges_immediately() {
    for (variant, material) in minimizable() {
        let p = plate_stretch_problem(6, variant, material, 1.0);
        let s = minimize(&p).unwrap();
        assert_eq!(s.iterations, 0, "{variant:?}");
        assert!(s.converged);
        assert!(s.objective.abs() <= 1e-20, "{variant:?}: {}", s.objective);
        assert!(s.grad_norm <= 1e-8);
    }
}

#[test]
fn trivial_problem_on_a_cylinder_has_zero_gradient() {
    let mut p = plate_stretch_problem(7, ModelVariant::ModifiedConstrainedH5, ShellMaterial::unit(0.1, f64::INFINITY), 1.0);
    p.reference = SurfaceParam::Cylinder { radius: 1.0 };
    p.domain = SampleGrid::new(0.0, 1.5, -0.5, 0.5, 7, 7);
    p.dirichlet.target = p.reference.clone();
    let d = Discretization::new(&p).unwrap();
    let x = d.initial_dofs().unwrap();
    assert!(d.objective(&x).unwrap().abs() <= 1e-20);
    let g = d.gradient(&x).unwrap();
    assert!(g.iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn affine_stretch_is_integrated_exactly() {
    let material = ShellMaterial::unit(0.01, f64::INFINITY);
    let exact = uniform_stretch_energy(&material, 1.01);
    for n in [5, 9, 17] {
        let mut p = plate_stretch_problem(n, ModelVariant::ModifiedConstrainedPlate, material, 1.01);
        p.init = InitialField::Dirichlet;
        let d = Discretization::new(&p).unwrap();
        let f = d.objective(&d.initial_dofs().unwrap()).unwrap();
        assert!((f / exact - 1.0).abs() <= 1e-12, "n = {n}: {f} vs {exact}");
    }
}

#[test]
fn plate_stretch_minimizer_is_the_uniform_stretch() {
    let material = ShellMaterial::unit(0.01, f64::INFINITY);
    let upper = uniform_stretch_energy(&material, 1.01);
    let p = plate_stretch_problem(7, ModelVariant::ModifiedConstrainedPlate, material, 1.01);
    let s = minimize(&p).unwrap();
    assert!(s.converged, "{:?}", s.termination);
    assert!(s.objective > 0.0);
    assert!((s.objective / upper - 1.0).abs() <= 1e-9, "{} vs {upper}", s.objective);
    for (k, x) in Discretization::new(&p).unwrap().nodes().iter().enumerate() {
        let want = Vec3::new(1.01 * x[0], 1.01 * x[1], 0.0);
        assert!((s.m[k] - want).norm() <= 1e-6);
    }
}

#[test]
fn objective_history_is_non_increasing() {
    for (variant, material) in minimizable() {
        let mut p = plate_stretch_problem(6, variant, material, 1.02);
        p.optimizer.max_iters = 40;
        p.optimizer.perturbation = 0.01;
        p.optimizer.seed = 3;
        let s = minimize(&p).unwrap();
        assert_eq!(s.history.len(), s.iterations + 1);
        assert!(s.history.windows(2).all(|w| w[1] <= w[0]), "{variant:?}");
        assert!(s.history[s.iterations] < s.history[0]);
    }
}

#[test]
fn energy_is_consistent_with_objective_and_loads() {
    let mut p = plate_stretch_problem(6, ModelVariant::UnconstrainedH3, ShellMaterial::unit(0.05, 3.0), 1.0);
    p.dirichlet.edges = EdgeFlags { left: true, ..EdgeFlags::none() };
    p.loads = DeadLoads { area: Vec3::new(0.0, 0.0, -1e-3), edge: Vec3::new(1e-3, 0.0, 0.0) };
    p.optimizer.max_iters = 60;
    let s = minimize(&p).unwrap();
    let d = Discretization::new(&p).unwrap();
    let a = d.assemble(&d.fields(&s.dofs).unwrap()).unwrap();
    assert!((a.energy.total - (s.objective + s.loads_value)).abs() <= 1e-12);
    assert!(s.loads_value > 0.0);
    assert!(s.objective < 0.0);
    let (n1, n2) = (p.domain.n1, p.domain.n2);
    let tip = s.m[(n2 / 2) * n1 + n1 - 1];
    assert!(tip.z < 0.0, "{tip:?}");
}

#[test]
fn load_work_matches_closed_form_for_a_uniform_displacement() {
    let mut p = plate_stretch_problem(5, ModelVariant::Koiter, ShellMaterial::unit(0.05, f64::INFINITY), 1.0);
    p.dirichlet.edges = EdgeFlags { left: true, ..EdgeFlags::none() };
    p.loads = DeadLoads { area: Vec3::new(0.0, 0.0, 2.0), edge: Vec3::new(0.0, 0.0, 3.0) };
    let shift = Vec3::new(0.0, 0.0, 0.1);
    p.init = InitialField::Surface(affine(Mat3::identity(), shift, SurfaceParam::Plane));
    let d = Discretization::new(&p).unwrap();
    let mut fields = d.fields(&d.initial_dofs().unwrap()).unwrap();
    fields.m = d.reference_positions().iter().map(|y| y + shift).collect();
    let a = d.assemble(&fields).unwrap();
    // Area 1 under f, three free edges of length 1 under t.
    assert!((a.loads_value - (2.0 * 0.1 + 3.0 * 3.0 * 0.1)).abs() <= 1e-14);
}

#[test]
fn directional_derivatives_match_secants() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (variant, material) in minimizable() {
        let mut p = plate_stretch_problem(6, variant, material, 1.02);
        p.reference = SurfaceParam::Cylinder { radius: 1.5 };
        p.dirichlet.target = affine(Mat3::from_diagonal(&Vec3::new(1.02, 1.0, 1.02)), Vec3::zeros(), p.reference.clone());
        p.optimizer.perturbation = 0.02;
        let d = Discretization::new(&p).unwrap();
        let x = d.initial_dofs().unwrap();
        let g = d.gradient(&x).unwrap();
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            let eps = 1e-4;
            let at = |t: f64| d.objective(&x.iter().zip(&v).map(|(a, b)| a + t * b).collect::<Vec<_>>()).unwrap();
            let secant = (at(eps) - at(-eps)) / (2.0 * eps);
            let analytic: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((analytic - secant).abs() <= 1e-5 * secant.abs(), "{variant:?}: {analytic} vs {secant}");
        }
    }
}

#[test]
fn translation_shifts_the_minimizer() {
    let b = Vec3::new(0.3, -1.2, 0.7);
    let base = plate_stretch_problem(6, ModelVariant::ModifiedConstrainedPlate, ShellMaterial::unit(0.05, f64::INFINITY), 1.02);
    let mut base = base;
    base.init = InitialField::Surface(bump());
    base.optimizer.max_iters = 60;
    let mut shifted = base.clone();
    shifted.dirichlet.target = affine(Mat3::identity(), b, base.dirichlet.target.clone());
    shifted.init = InitialField::Surface(affine(Mat3::identity(), b, bump()));
    let s0 = minimize(&base).unwrap();
    let s1 = minimize(&shifted).unwrap();
    assert!((s0.objective - s1.objective).abs() <= 1e-9);
    for (a, c) in s0.m.iter().zip(&s1.m) {
        assert!((a + b - c).norm() <= 1e-6);
    }
}

#[test]
fn rotating_the_data_leaves_the_objective_sequence_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rot = random_rotation(&mut rng);
    for (variant, material) in minimizable() {
        let mut base = plate_stretch_problem(6, variant, material, 1.02);
        base.init = InitialField::Surface(bump());
        base.optimizer.max_iters = 15;
        let mut turned = base.clone();
        turned.dirichlet.target = affine(rot, Vec3::zeros(), base.dirichlet.target.clone());
        turned.init = InitialField::Surface(affine(rot, Vec3::zeros(), bump()));
        let s0 = minimize(&base).unwrap();
        let s1 = minimize(&turned).unwrap();
        let scale = s0.history[0].abs();
        let common = s0.history.len().min(s1.history.len());
        assert!(common > 5, "{variant:?}");
        for (a, c) in s0.history.iter().zip(&s1.history).take(common) {
            assert!((a - c).abs() <= 1e-8 * scale, "{variant:?}: {a} vs {c}");
        }
    }
}

#[test]
fn compatible_rotation_boundary_keeps_rotations_polar() {
    let mut p = plate_stretch_problem(6, ModelVariant::UnconstrainedH3, ShellMaterial::unit(0.01, 10.0), 1.01);
    p.dirichlet.rotation = RotationBoundary::Compatible;
    p.init = InitialField::Dirichlet;
    let s = minimize(&p).unwrap();
    assert!(s.converged);
    let d = Discretization::new(&p).unwrap();
    let dev = d.polar_deviation(&d.fields(&s.dofs).unwrap()).unwrap();
    assert!(dev.iter().all(|v| *v <= 1e-12));
}

#[test]
fn rotation_deviation_decreases_with_couple_modulus() {
    let drill = Rotation3::from_axis_angle(&Vec3::z_axis(), 0.1).into_inner();
    let mut previous = f64::INFINITY;
    for mu_c in [1.0, 10.0, 100.0] {
        let mut p = plate_stretch_problem(9, ModelVariant::UnconstrainedH5, ShellMaterial::unit(0.01, mu_c), 1.01);
        p.dirichlet.rotation = RotationBoundary::Fixed(drill);
        let s = minimize(&p).unwrap();
        let d = Discretization::new(&p).unwrap();
        let dev = d.polar_deviation(&d.fields(&s.dofs).unwrap()).unwrap().into_iter().fold(0.0, f64::max);
        assert!(dev < previous, "mu_c = {mu_c}: {dev} !< {previous}");
        previous = dev;
    }
}

#[test]
fn plain_constrained_variants_are_rejected() {
    let p = plate_stretch_problem(6, ModelVariant::ConstrainedH5, ShellMaterial::unit(0.01, f64::INFINITY), 1.0);
    assert!(matches!(minimize(&p), Err(ShellError::NotAdmissible { .. })));
    let p = plate_stretch_problem(6, ModelVariant::UnconstrainedH5, ShellMaterial::unit(0.01, f64::INFINITY), 1.0);
    assert!(matches!(minimize(&p), Err(ShellError::NotAdmissible { .. })));
}

#[test]
fn runs_are_bit_identical() {
    let mut p = plate_stretch_problem(6, ModelVariant::UnconstrainedH5, ShellMaterial::unit(0.05, 2.0), 1.02);
    p.optimizer.max_iters = 20;
    p.optimizer.perturbation = 0.01;
    let a = minimize(&p).unwrap();
    let b = minimize(&p).unwrap();
    assert_eq!(a, b);
}
