//! One function per command, each producing a [`Report`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use shellkit::bending_invariance::{invariance_suite, standard_catalog, BendingKind, Requirement};
use shellkit::constraints_coercivity::{coercivity_bound_h5, coercivity_constant_h3, thickness_admissible, CoercivityConstant};
use shellkit::energy_forms::{
    density_constrained, density_unconstrained, koiter_breakdown, symmetry_residuals, EnergyBreakdown, ModelVariant, ThicknessOrder,
};
use shellkit::minimizer::{minimize, Discretization, MinimizeProblem};
use shellkit::sampling::{random_strain_state, random_symmetric_strain_state};
use shellkit::strain_measures::{constrained_rotation_jet, constrained_state_at, unconstrained_strains};
use shellkit::surface_geometry::{check_structure_identities, eval_jet, SampleGrid, SurfaceJet};
use shellkit::tensor_algebra::Mat3;
use shellkit::ShellError;

use crate::config::Resolved;
use crate::report::{Cell, Report};
use crate::Failure;

type Result<T> = std::result::Result<T, Failure>;

/// Per-point values as `(i, j, x, value)` in grid order.
type Rows<T> = Vec<(usize, usize, [f64; 2], T)>;

/// Attaches the failing parameter point to a library error.
fn at(x: [f64; 2]) -> impl FnOnce(ShellError) -> Failure {
    move |e| Failure::from_shell(e, Some(x))
}

fn grid_points(grid: &SampleGrid) -> Vec<(usize, usize, [f64; 2])> {
    let mut v = Vec::with_capacity(grid.n1 * grid.n2);
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            v.push((i, j, grid.point(i, j)));
        }
    }
    v
}

fn point_cells(i: usize, j: usize, x: [f64; 2]) -> Vec<Cell> {
    vec![i.into(), j.into(), x[0].into(), x[1].into()]
}

fn point_columns() -> Vec<String> {
    ["i", "j", "x1", "x2"].iter().map(|s| s.to_string()).collect()
}

fn matrix_columns(prefix: &str) -> Vec<String> {
    let mut v = Vec::new();
    for r in 1..=3 {
        for c in 1..=3 {
            v.push(format!("{prefix}_{r}{c}"));
        }
    }
    v
}

fn matrix_cells(m: &Mat3) -> Vec<Cell> {
    let mut v = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            v.push(m[(r, c)].into());
        }
    }
    v
}

fn vec_columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}_{k}")).collect()
}

/// Evaluates `f` at every grid point in parallel, returning the rows in grid order.
fn per_point<T: Send>(grid: &SampleGrid, f: impl Fn([f64; 2]) -> Result<T> + Sync) -> Result<Rows<T>> {
    // Collect every outcome first so that the reported error is the first failing point in grid order.
    let all: Vec<Result<_>> = grid_points(grid).into_par_iter().map(|(i, j, x)| f(x).map(|t| (i, j, x, t))).collect();
    all.into_iter().collect()
}

fn jets(r: &Resolved) -> Result<Rows<SurfaceJet>> {
    let s = r.surface();
    per_point(r.grid(), |x| eval_jet(s, x).map_err(at(x)))
}

pub fn geometry(r: &Resolved) -> Result<Report> {
    let mut cols = point_columns();
    cols.extend(vec_columns("y", 3));
    cols.extend(vec_columns("d1", 3));
    cols.extend(vec_columns("d2", 3));
    cols.extend(vec_columns("n", 3));
    cols.extend(["I_11", "I_12", "I_22", "II_11", "II_12", "II_22", "H", "K", "kappa_1", "kappa_2", "area_element"].map(String::from));
    let mut report = Report::new(cols);
    let (mut kmax, mut area) = (0.0f64, 0.0);
    let weights = trapezoid_weights(r.grid());
    for (i, j, x, jet) in jets(r)? {
        let mut row = point_cells(i, j, x);
        for v in [jet.y, jet.d1, jet.d2, jet.n] {
            row.extend(v.iter().map(|c| Cell::from(*c)));
        }
        let (k1, k2) = jet.principal_curvatures();
        row.extend([jet.i[(0, 0)], jet.i[(0, 1)], jet.i[(1, 1)], jet.ii[(0, 0)], jet.ii[(0, 1)], jet.ii[(1, 1)]].map(Cell::from));
        row.extend([jet.h, jet.k, k1, k2, jet.area_element()].map(Cell::from));
        kmax = kmax.max(k1.abs()).max(k2.abs());
        area += weights[j * r.grid().n1 + i] * jet.area_element();
        report.push(row);
    }
    report.summary = json!({ "points": report.rows.len(), "max_abs_principal_curvature": kmax, "area": area });
    Ok(report)
}

pub fn identities(r: &Resolved) -> Result<Report> {
    let all = jets(r)?;
    let names: Vec<String> =
        all.first().map(|p| check_structure_identities(&p.3).residuals.iter().map(|(n, _)| n.to_string()).collect()).unwrap_or_default();
    let mut cols = point_columns();
    cols.extend(names.iter().cloned());
    cols.push("max_residual".into());
    let mut report = Report::new(cols);
    let mut worst = vec![0.0f64; names.len()];
    for (i, j, x, jet) in &all {
        let rep = check_structure_identities(jet);
        let mut row = point_cells(*i, *j, *x);
        for (k, (_, v)) in rep.residuals.iter().enumerate() {
            worst[k] = worst[k].max(*v);
            row.push((*v).into());
        }
        row.push(rep.max().into());
        report.push(row);
    }
    let per_identity: Vec<_> = names.iter().zip(&worst).map(|(n, w)| json!({ "identity": n, "max_residual": w })).collect();
    report.summary = json!({
        "points": all.len(),
        "max_residual": worst.iter().copied().fold(0.0, f64::max),
        "per_identity": per_identity,
    });
    Ok(report)
}

pub fn strains(r: &Resolved) -> Result<Report> {
    let (s, d) = (r.surface(), r.deformation());
    let rows = per_point(r.grid(), |x| constrained_state_at(s, d, x).map_err(at(x)))?;
    let mut cols = point_columns();
    cols.extend(matrix_columns("Q"));
    cols.extend(matrix_columns("E"));
    cols.extend(matrix_columns("K"));
    cols.extend(matrix_columns("couple"));
    cols.extend(["G_11", "G_12", "G_21", "G_22", "R_11", "R_12", "R_21", "R_22", "T_1", "T_2", "N_1", "N_2"].map(String::from));
    cols.extend(["skew_E", "skew_couple", "skew_couple_B", "couple_discrepancy"].map(String::from));
    let mut report = Report::new(cols);
    let (mut r0m, mut r1m, mut r2m, mut disc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, j, x, (cs, rj, _)) in rows {
        let mut row = point_cells(i, j, x);
        for m in [cs.q_inf, cs.e_inf, cs.k_inf, cs.couple] {
            row.extend(matrix_cells(&m));
        }
        for m in [cs.g_inf, cs.r_inf] {
            row.extend([m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]].map(Cell::from));
        }
        row.extend([cs.t_inf[0], cs.t_inf[1], cs.n_inf[0], cs.n_inf[1]].map(Cell::from));
        let (r0, r1, r2) = symmetry_residuals(&cs, &rj);
        row.extend([r0, r1, r2, cs.couple_discrepancy()].map(Cell::from));
        (r0m, r1m, r2m, disc) = (r0m.max(r0), r1m.max(r1), r2m.max(r2), disc.max(cs.couple_discrepancy()));
        report.push(row);
    }
    report.summary = json!({
        "points": report.rows.len(),
        "max_skew_E": r0m,
        "max_skew_couple": r1m,
        "max_skew_couple_B": r2m,
        "max_couple_discrepancy": disc,
    });
    Ok(report)
}

/// Composite trapezoid weights on the grid, node `(i, j)` at `j·n1 + i`.
fn trapezoid_weights(grid: &SampleGrid) -> Vec<f64> {
    let axis = |a: f64, b: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![0.0];
        }
        let h = (b - a) / (n - 1) as f64;
        (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h }).collect()
    };
    let (w1, w2) = (axis(grid.a1, grid.b1, grid.n1), axis(grid.a2, grid.b2, grid.n2));
    let mut w = Vec::with_capacity(grid.n1 * grid.n2);
    for b in &w2 {
        for a in &w1 {
            w.push(a * b);
        }
    }
    w
}

fn breakdown_json(e: &EnergyBreakdown) -> serde_json::Value {
    json!({
        "membrane": e.membrane,
        "membrane_bending": e.membrane_bending,
        "bending_curvature": e.bending_curvature,
        "total": e.total,
    })
}

pub fn energy(r: &Resolved) -> Result<Report> {
    let (s, d, m, v) = (r.surface(), r.deformation(), r.material(), r.variant());
    let rows = per_point(r.grid(), |x| -> Result<EnergyBreakdown> {
        let e = if v == ModelVariant::Koiter {
            koiter_breakdown(&eval_jet(s, x).map_err(at(x))?, &eval_jet(d, x).map_err(at(x))?, m, true)
        } else if v.is_unconstrained() {
            let (rj, dj) = (eval_jet(s, x).map_err(at(x))?, eval_jet(d, x).map_err(at(x))?);
            let rot = constrained_rotation_jet(s, d, x).map_err(at(x))?;
            let state = unconstrained_strains(&rj, &dj, &rot, m).map_err(at(x))?;
            let order = if v == ModelVariant::UnconstrainedH5 { ThicknessOrder::H5 } else { ThicknessOrder::H3 };
            density_unconstrained(&state, &rj, m, order, true).map_err(at(x))?
        } else {
            let (cs, rj, _) = constrained_state_at(s, d, x).map_err(at(x))?;
            density_constrained(&cs, &rj, m, v, true).map_err(at(x))?
        };
        Ok(e)
    })?;
    let mut cols = point_columns();
    cols.extend(["membrane", "membrane_bending", "bending_curvature", "total", "jacobian"].map(String::from));
    let mut report = Report::new(cols);
    let weights = trapezoid_weights(r.grid());
    let mut total = EnergyBreakdown::zero();
    for (i, j, x, e) in rows {
        total = total.add(&e.scaled(weights[j * r.grid().n1 + i]));
        let mut row = point_cells(i, j, x);
        row.extend([e.membrane, e.membrane_bending, e.bending_curvature, e.total, e.jacobian].map(Cell::from));
        report.push(row);
    }
    report.summary = json!({
        "variant": v.name(),
        "quadrature": "composite trapezoid over the grid rectangle",
        "integrated": breakdown_json(&total),
    });
    Ok(report)
}

pub fn coercivity(r: &Resolved) -> Result<Report> {
    let (s, m, v, grid) = (r.surface(), r.material(), r.variant(), r.grid());
    let admissibility = thickness_admissible(m, s, v, Some(grid)).map_err(|e| Failure::from_shell(e, None))?;
    let all = jets(r)?;
    let jet_list: Vec<SurfaceJet> = all.iter().map(|p| p.3.clone()).collect();
    let h3 = coercivity_constant_h3(m, &jet_list, m.is_constrained());
    let sampling = r.sampling();
    let npts = all.len().max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut h5_slack = vec![f64::INFINITY; npts];
    let mut h3_slack = vec![f64::INFINITY; npts];
    let mut counts = vec![0usize; npts];
    let mut h5_blocked = vec![false; npts];
    for k in 0..sampling.samples {
        let p = k % npts;
        let jet = &all[p].3;
        let scale = rng.gen_range(0.01..sampling.max_scale);
        let state = if m.is_constrained() {
            random_symmetric_strain_state(&mut rng, jet, scale)
        } else {
            random_strain_state(&mut rng, jet, scale)
        };
        counts[p] += 1;
        match coercivity_bound_h5(&state, jet, m) {
            Ok((lhs, rhs)) => h5_slack[p] = h5_slack[p].min((lhs - rhs) / (1.0 + lhs)),
            Err(ShellError::NotAdmissible { .. }) => h5_blocked[p] = true,
            Err(e) => return Err(at(jet.x)(e)),
        }
        if let CoercivityConstant::Coercive { a1, .. } = h3 {
            let w = density_unconstrained(&state, jet, m, ThicknessOrder::H3, false).map_err(at(jet.x))?.total;
            h3_slack[p] = h3_slack[p].min((w - a1 * (state.e.norm_squared() + state.k.norm_squared())) / (1.0 + w));
        }
    }

    let mut cols = point_columns();
    cols.extend(["max_abs_kappa", "samples", "h5_min_slack", "h3_min_slack"].map(String::from));
    let mut report = Report::new(cols);
    let slack_cell = |v: f64, skip: bool| if skip || v.is_infinite() { Cell::Empty } else { Cell::Float(v) };
    for (p, (i, j, x, jet)) in all.iter().enumerate() {
        let (k1, k2) = jet.principal_curvatures();
        let mut row = point_cells(*i, *j, *x);
        row.push(k1.abs().max(k2.abs()).into());
        row.push(counts[p].into());
        row.push(slack_cell(h5_slack[p], h5_blocked[p]));
        row.push(slack_cell(h3_slack[p], h3.value().is_none()));
        report.push(row);
    }
    let finite_min = |v: &[f64]| v.iter().copied().filter(|x| x.is_finite()).reduce(f64::min);
    let a = &admissibility;
    let f = &a.constants.forms;
    report.summary = json!({
        "variant": v.name(),
        "admissibility": {
            "h": a.h,
            "kappa_max": a.kappa_max,
            "curvature_bound": a.curvature_bound,
            "grid": [a.grid.0, a.grid.1],
            "injectivity_ok": a.injectivity_ok,
            "h5_ok": a.h5_ok,
            "h3_condition_i": a.h3_condition_i,
            "h3_condition_ii": a.h3_condition_ii,
            "forms": { "c1_plus": f.c1_plus, "c1_max": f.c1_max, "c2_plus": f.c2_plus, "c2_max": f.c2_max },
            "upper": a.constants.upper,
            "lower": a.constants.lower,
            "alpha": a.constants.alpha,
            "a": a.constants.a,
        },
        "h3_constant": match h3 {
            CoercivityConstant::Coercive { a1, alpha, epsilon, delta } => json!({ "a1": a1, "alpha": alpha, "epsilon": epsilon, "delta": delta }),
            CoercivityConstant::Infeasible => json!(null),
        },
        "samples": sampling.samples,
        "h5_min_slack": finite_min(&h5_slack),
        "h3_min_slack": finite_min(&h3_slack),
    });
    Ok(report)
}

pub fn invariance(r: &Resolved) -> Result<Report> {
    let n = r.grid.map(|g| g.n1).unwrap_or(5);
    let report = invariance_suite(&BendingKind::ALL, &standard_catalog(), n).map_err(|e| Failure::from_shell(e, None))?;
    let reqs = [Requirement::Ar1, Requirement::Ar3Star, Requirement::Ar3StarPlate];
    let mut cols = vec!["kind".to_string()];
    for q in reqs {
        cols.push(q.name().to_string());
        cols.push(format!("{}_max_residual", q.name()));
    }
    let mut out = Report::new(cols);
    let verdict = |v: Option<bool>| match v {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "n/a",
    };
    for kind in BendingKind::ALL {
        let s = report.summary(kind).expect("every kind is summarized");
        let mut row: Vec<Cell> = vec![kind.name().into()];
        for (q, flag) in reqs.iter().zip([s.ar1, s.ar3_star, s.ar3_star_plate]) {
            row.push(verdict(flag).into());
            row.push(report.max_residual(kind, *q, None).map(Cell::Float).unwrap_or(Cell::Empty));
        }
        out.push(row);
    }
    let records: Vec<_> = report
        .records
        .iter()
        .map(|rec| {
            json!({
                "kind": rec.kind.name(),
                "requirement": rec.requirement.name(),
                "surface": rec.surface,
                "case": rec.case,
                "point": rec.point,
                "residual": rec.residual,
                "scaling_ratio": rec.scaling_ratio,
                "pass": rec.pass,
            })
        })
        .collect();
    out.summary = json!({ "points_per_direction": n, "records": records });
    Ok(out)
}

pub fn run_minimize(r: &Resolved) -> Result<Report> {
    let dir = r.config.dirichlet.as_ref().expect("checked by required_blocks");
    let dirichlet = dir.to_dirichlet(r.surface()).map_err(|e| Failure::from_shell(e, None))?;
    let v = r.variant();
    if !(v.is_modified() || v.is_unconstrained() || v == ModelVariant::Koiter) {
        return Err(Failure::Validation(format!(
            "invalid configuration field `variant`: {} cannot be minimized; use a modified constrained, unconstrained or Koiter variant",
            v.name()
        )));
    }
    if r.optimizer().init == Some(crate::config::InitSpec::Deformation) && r.deformation.is_none() {
        return Err(Failure::Validation("invalid configuration field `init`: `deformation` needs a deformation block".into()));
    }
    let problem = MinimizeProblem {
        domain: *r.grid(),
        reference: r.surface().clone(),
        variant: v,
        material: *r.material(),
        dirichlet,
        loads: r.config.loads.as_ref().map(|l| l.to_loads()).unwrap_or_default(),
        init: r.initial_field(),
        optimizer: r.optimizer().to_settings(),
    };
    problem.validate().map_err(|e| Failure::from_shell(e, None))?;
    let sol = minimize(&problem).map_err(|e| Failure::from_shell(e, None))?;
    let disc = Discretization::new(&problem).map_err(|e| Failure::from_shell(e, None))?;
    let deviation = if v.is_unconstrained() {
        let dev = disc
            .polar_deviation(&disc.fields(&sol.dofs).map_err(|e| Failure::from_shell(e, None))?)
            .map_err(|e| Failure::from_shell(e, None))?;
        dev.into_iter().reduce(f64::max)
    } else {
        None
    };

    let mut cols = vec!["node".to_string()];
    cols.extend(point_columns());
    cols.extend(vec_columns("m", 3));
    cols.extend(["q_w", "q_x", "q_y", "q_z"].map(String::from));
    let mut report = Report::new(cols);
    let n1 = sol.grid.n1;
    for (k, m) in sol.m.iter().enumerate() {
        let (i, j) = (k % n1, k / n1);
        let mut row = vec![Cell::from(k)];
        row.extend(point_cells(i, j, sol.grid.point(i, j)));
        row.extend(m.iter().map(|c| Cell::from(*c)));
        match &sol.q {
            Some(q) => {
                let q = q[k].quaternion();
                row.extend([q.w, q.i, q.j, q.k].map(Cell::from));
            }
            None => row.extend(std::iter::repeat_n(Cell::Empty, 4)),
        }
        report.push(row);
    }
    report.summary = json!({
        "variant": v.name(),
        "energy": breakdown_json(&sol.energy),
        "loads_value": sol.loads_value,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "grad_norm": sol.grad_norm,
        "converged": sol.converged,
        "termination": sol.termination.name(),
        "history": sol.history,
        "max_polar_deviation": deviation,
    });
    Ok(report)
}
