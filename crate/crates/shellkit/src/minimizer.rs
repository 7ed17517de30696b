//! Finite-difference discretization of the shell energies on a rectangular
//! parameter grid and an L-BFGS minimizer over nodal midsurface and
//! microrotation fields.
//!
//! Nodes carry `m` (and a unit quaternion for the unconstrained variants).
//! Nodal tangents use central differences in the interior and second-order
//! one-sided stencils on the grid boundary; the nodal normal follows from
//! them. Cell-centre quantities use the compact four-corner difference of the
//! nodal values, and the energy is integrated with the cell-midpoint rule.

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy_forms::{density_constrained, density_unconstrained, koiter_breakdown, EnergyBreakdown, ModelVariant, ThicknessOrder};
use crate::strain_measures::{
    constrained_rotation, constrained_state, transfer_map, unconstrained_strains_unchecked, RotationJet, ShellMaterial,
};
use crate::surface_geometry::{eval_jet, SampleGrid, SurfaceJet, SurfaceParam};
use crate::tensor_algebra::{from_columns, polar, Mat3, Vec3};
use crate::{Result, ShellError};

/// Smallest admissible number of nodes per grid direction.
pub const MIN_GRID_NODES: usize = 5;
/// Relative and absolute floor of the finite-difference step of the gradient.
pub const GRADIENT_STEP: f64 = 1e-6;

/// Which edges of the parameter rectangle carry Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeFlags {
    /// `x₁ = a₁`.
    pub left: bool,
    /// `x₁ = b₁`.
    pub right: bool,
    /// `x₂ = a₂`.
    pub bottom: bool,
    /// `x₂ = b₂`.
    pub top: bool,
}

impl EdgeFlags {
    /// Every edge clamped.
    pub fn all() -> Self {
        Self { left: true, right: true, bottom: true, top: true }
    }

    /// No edge clamped.
    pub fn none() -> Self {
        Self::default()
    }

    /// True if at least one edge is clamped.
    pub fn any(&self) -> bool {
        self.left || self.right || self.bottom || self.top
    }

    /// True if node `(i, j)` of an `n1 × n2` grid lies on a clamped edge.
    pub fn contains(&self, i: usize, j: usize, n1: usize, n2: usize) -> bool {
        (self.left && i == 0) || (self.right && i + 1 == n1) || (self.bottom && j == 0) || (self.top && j + 1 == n2)
    }
}

/// Rotation data on the clamped edges (unconstrained variants only).
#[derive(Debug, Clone, PartialEq)]
pub enum RotationBoundary {
    /// Rotations stay free on every node.
    Free,
    /// Rotations equal the polar factor of the boundary deformation.
    Compatible,
    /// Rotations equal a prescribed constant rotation.
    Fixed(Mat3),
}

/// Dirichlet boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dirichlet {
    /// Clamped edges.
    pub edges: EdgeFlags,
    /// Boundary deformation `m*`, evaluated at the clamped nodes.
    pub target: SurfaceParam,
    /// Rotation data on the clamped nodes.
    pub rotation: RotationBoundary,
}

/// Constant dead loads: `area` per unit reference area, `edge` per unit
/// reference length on the edges without Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeadLoads {
    pub area: Vec3,
    pub edge: Vec3,
}

impl DeadLoads {
    /// True when both loads vanish.
    pub fn is_zero(&self) -> bool {
        self.area == Vec3::zeros() && self.edge == Vec3::zeros()
    }
}

/// Initial midsurface field; the initial rotation field is always the polar
/// factor of the discrete initial transfer map.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialField {
    /// `m = y₀`.
    Reference,
    /// `m = m*`, the Dirichlet target extended to the whole grid.
    Dirichlet,
    /// `m` sampled from the given surface.
    Surface(SurfaceParam),
}

/// L-BFGS and line-search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Iteration cap.
    pub max_iters: usize,
    /// Convergence threshold on the largest per-node gradient norm.
    pub grad_tol: f64,
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// Step length (Euclidean norm of the dof change) below which the line search gives up.
    pub min_step: f64,
    /// Amplitude of the seeded uniform perturbation of the free initial `m` values.
    pub perturbation: f64,
    /// Seed of the perturbation.
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-9, memory: 10, armijo: 1e-4, shrink: 0.5, min_step: 1e-14, perturbation: 0.0, seed: 0 }
    }
}

/// A discrete minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeProblem {
    /// Parameter rectangle and node counts.
    pub domain: SampleGrid,
    /// Reference midsurface `y₀`.
    pub reference: SurfaceParam,
    pub variant: ModelVariant,
    pub material: ShellMaterial,
    pub dirichlet: Dirichlet,
    pub loads: DeadLoads,
    pub init: InitialField,
    pub optimizer: OptimizerSettings,
}

fn invalid(field: &str, reason: impl Into<String>) -> ShellError {
    ShellError::ConfigInvalid { field: field.into(), reason: reason.into() }
}

impl MinimizeProblem {
    /// Checks the grid, material, loads, optimizer settings and variant.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if d.n1 < MIN_GRID_NODES || d.n2 < MIN_GRID_NODES {
            return Err(invalid("grid", format!("needs at least {MIN_GRID_NODES} nodes per direction")));
        }
        if !(d.b1 > d.a1 && d.b2 > d.a2 && [d.a1, d.b1, d.a2, d.b2].iter().all(|v| v.is_finite())) {
            return Err(invalid("grid", "domain bounds must be finite with a < b"));
        }
        self.reference.validate()?;
        self.dirichlet.target.validate()?;
        self.material.validate()?;
        if !self.loads.is_zero() && !self.dirichlet.edges.any() {
            return Err(invalid("dirichlet", "nonzero loads need at least one clamped edge"));
        }
        if !self.loads.area.iter().chain(self.loads.edge.iter()).all(|v| v.is_finite()) {
            return Err(invalid("loads", "must be finite"));
        }
        let o = &self.optimizer;
        if !(o.grad_tol > 0.0) {
            return Err(invalid("grad_tol", "must be positive"));
        }
        if o.memory == 0 {
            return Err(invalid("memory", "must be at least 1"));
        }
        if !(o.armijo > 0.0 && o.armijo < 1.0) {
            return Err(invalid("armijo", "must lie in (0, 1)"));
        }
        if !(o.shrink > 0.0 && o.shrink < 1.0) {
            return Err(invalid("shrink", "must lie in (0, 1)"));
        }
        if !(o.min_step > 0.0) {
            return Err(invalid("min_step", "must be positive"));
        }
        if !(o.perturbation >= 0.0 && o.perturbation.is_finite()) {
            return Err(invalid("perturbation", "must be non-negative"));
        }
        if self.variant.is_unconstrained() && self.material.is_constrained() {
            return Err(ShellError::NotAdmissible { reason: "unconstrained variants need a finite couple modulus".into() });
        }
        if self.variant.is_constrained() && !self.variant.is_modified() {
            return Err(ShellError::NotAdmissible {
                reason: format!("{} is evaluation-only; minimize a modified variant", self.variant.name()),
            });
        }
        Ok(())
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Largest per-node gradient norm at or below `grad_tol`.
    GradientTolerance,
    /// Iteration cap reached.
    MaxIterations,
    /// Backtracking shrank the step below `min_step`.
    StepCollapse,
}

impl Termination {
    /// Stable name for reports.
    pub fn name(&self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient_tolerance",
            Termination::MaxIterations => "max_iterations",
            Termination::StepCollapse => "step_collapse",
        }
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Parameter grid of the nodes.
    pub grid: SampleGrid,
    /// Final dof vector.
    pub dofs: Vec<f64>,
    /// Nodal midsurface, node `(i, j)` at index `j·n1 + i`.
    pub m: Vec<Vec3>,
    /// Nodal rotations (unconstrained variants only).
    pub q: Option<Vec<UnitQuaternion<f64>>>,
    /// Integrated energy parts.
    pub energy: EnergyBreakdown,
    /// Work of the dead loads.
    pub loads_value: f64,
    /// `energy.total − loads_value`.
    pub objective: f64,
    pub iterations: usize,
    /// Largest per-node gradient norm at the final iterate.
    pub grad_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Nodal fields decoded from a dof vector. Quaternions are stored raw and
/// normalized on read.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub m: Vec<Vec3>,
    pub q: Vec<Quaternion<f64>>,
}

/// Integrated energy, load work and objective of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assembly {
    pub energy: EnergyBreakdown,
    pub loads_value: f64,
    pub objective: f64,
}

/// Fields with at most one node overridden, used for local re-evaluation.
struct View<'a> {
    fields: &'a Fields,
    node: usize,
    m: Option<Vec3>,
    q: Option<Quaternion<f64>>,
}

impl<'a> View<'a> {
    fn new(fields: &'a Fields) -> Self {
        Self { fields, node: usize::MAX, m: None, q: None }
    }

    fn m(&self, k: usize) -> Vec3 {
        match self.m {
            Some(v) if k == self.node => v,
            _ => self.fields.m[k],
        }
    }

    fn q(&self, k: usize) -> UnitQuaternion<f64> {
        let raw = match self.q {
            Some(v) if k == self.node => v,
            _ => self.fields.q[k],
        };
        UnitQuaternion::new_normalize(raw)
    }
}

fn quaternion_of(r: &Mat3) -> UnitQuaternion<f64> {
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r))
}

/// Precomputed reference data and dof layout of a [`MinimizeProblem`].
#[derive(Debug, Clone)]
pub struct Discretization {
    problem: MinimizeProblem,
    n1: usize,
    n2: usize,
    h1: f64,
    h2: f64,
    nodes: Vec<[f64; 2]>,
    y0: Vec<Vec3>,
    ref_frame_inv: Vec<Mat3>,
    ref_cells: Vec<SurfaceJet>,
    base: Fields,
    free_m: Vec<usize>,
    free_q: Vec<usize>,
    /// Edge-load segments `(node a, node b, reference length)`.
    segments: Vec<(usize, usize, f64)>,
}

impl Discretization {
    /// Validates the problem and precomputes the reference geometry.
    pub fn new(problem: &MinimizeProblem) -> Result<Self> {
        problem.validate()?;
        let g = problem.domain;
        let (n1, n2) = (g.n1, g.n2);
        let h1 = (g.b1 - g.a1) / (n1 - 1) as f64;
        let h2 = (g.b2 - g.a2) / (n2 - 1) as f64;
        let mut nodes = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            for i in 0..n1 {
                nodes.push(g.point(i, j));
            }
        }
        let y0: Vec<Vec3> = nodes.iter().map(|&x| problem.reference.position(x)).collect();
        let mut disc = Self {
            problem: problem.clone(),
            n1,
            n2,
            h1,
            h2,
            nodes,
            y0,
            ref_frame_inv: Vec::new(),
            ref_cells: Vec::new(),
            base: Fields { m: Vec::new(), q: Vec::new() },
            free_m: Vec::new(),
            free_q: Vec::new(),
            segments: Vec::new(),
        };
        let y0 = disc.y0.clone();
        let ref_m = |k: usize| y0[k];
        disc.ref_frame_inv = (0..n1 * n2)
            .map(|k| {
                let (d1, d2, n) = disc.nodal_frame(&ref_m, k)?;
                let x = disc.nodes[k];
                from_columns(&d1, &d2, &n).try_inverse().ok_or(ShellError::DegenerateParametrization {
                    x1: x[0],
                    x2: x[1],
                    area: d1.cross(&d2).norm(),
                })
            })
            .collect::<Result<_>>()?;
        disc.ref_cells = (0..disc.cell_count()).map(|c| disc.cell_jet(&ref_m, c)).collect::<Result<_>>()?;

        let edges = problem.dirichlet.edges;
        let clamped = |k: usize| edges.contains(k % n1, k / n1, n1, n2);
        let mut m = disc.y0.clone();
        for (k, mk) in m.iter_mut().enumerate() {
            if clamped(k) {
                *mk = problem.dirichlet.target.position(disc.nodes[k]);
            } else {
                disc.free_m.push(k);
            }
        }
        let mut q = Vec::new();
        if problem.variant.is_unconstrained() {
            q = vec![Quaternion::identity(); n1 * n2];
            for k in 0..n1 * n2 {
                let fixed = match (&problem.dirichlet.rotation, clamped(k)) {
                    (RotationBoundary::Compatible, true) => {
                        let x = disc.nodes[k];
                        let r = constrained_rotation(&eval_jet(&problem.reference, x)?, &eval_jet(&problem.dirichlet.target, x)?)?;
                        Some(quaternion_of(&r))
                    }
                    (RotationBoundary::Fixed(r), true) => Some(quaternion_of(r)),
                    _ => None,
                };
                match fixed {
                    Some(u) => q[k] = *u.quaternion(),
                    None => disc.free_q.push(k),
                }
            }
        }
        disc.base = Fields { m, q };

        if problem.loads.edge != Vec3::zeros() {
            let mut push_edge = |ids: Vec<usize>| {
                for w in ids.windows(2) {
                    disc.segments.push((w[0], w[1], (disc.y0[w[1]] - disc.y0[w[0]]).norm()));
                }
            };
            if !edges.bottom {
                push_edge((0..n1).collect());
            }
            if !edges.top {
                push_edge((0..n1).map(|i| (n2 - 1) * n1 + i).collect());
            }
            if !edges.left {
                push_edge((0..n2).map(|j| j * n1).collect());
            }
            if !edges.right {
                push_edge((0..n2).map(|j| j * n1 + n1 - 1).collect());
            }
        }
        Ok(disc)
    }

    /// The problem this discretization was built from.
    pub fn problem(&self) -> &MinimizeProblem {
        &self.problem
    }

    /// Parameter coordinates of every node.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Reference positions of every node.
    pub fn reference_positions(&self) -> &[Vec3] {
        &self.y0
    }

    /// Node indices carrying `m` dofs.
    pub fn free_m_nodes(&self) -> &[usize] {
        &self.free_m
    }

    /// Node indices carrying rotation dofs.
    pub fn free_q_nodes(&self) -> &[usize] {
        &self.free_q
    }

    /// Length of the dof vector.
    pub fn dof_count(&self) -> usize {
        3 * self.free_m.len() + 4 * self.free_q.len()
    }

    fn cell_count(&self) -> usize {
        (self.n1 - 1) * (self.n2 - 1)
    }

    fn uses_rotation(&self) -> bool {
        self.problem.variant.is_unconstrained()
    }

    /// Nodal tangents from central or one-sided second-order differences.
    fn nodal_tangents(&self, m: &impl Fn(usize) -> Vec3, k: usize) -> (Vec3, Vec3) {
        let (n1, n2) = (self.n1, self.n2);
        let (i, j) = (k % n1, k / n1);
        let diff = |idx: &dyn Fn(usize) -> usize, p: usize, n: usize, h: f64| -> Vec3 {
            if p == 0 {
                (m(idx(1)) * 4.0 - m(idx(0)) * 3.0 - m(idx(2))) / (2.0 * h)
            } else if p + 1 == n {
                (m(idx(n - 1)) * 3.0 - m(idx(n - 2)) * 4.0 + m(idx(n - 3))) / (2.0 * h)
            } else {
                (m(idx(p + 1)) - m(idx(p - 1))) / (2.0 * h)
            }
        };
        let d1 = diff(&|a| j * n1 + a, i, n1, self.h1);
        let d2 = diff(&|b| b * n1 + i, j, n2, self.h2);
        (d1, d2)
    }

    fn nodal_frame(&self, m: &impl Fn(usize) -> Vec3, k: usize) -> Result<(Vec3, Vec3, Vec3)> {
        let (d1, d2) = self.nodal_tangents(m, k);
        let cr = d1.cross(&d2);
        let area = cr.norm();
        if !(area > 0.0) || !area.is_finite() {
            let x = self.nodes[k];
            return Err(ShellError::DegenerateParametrization { x1: x[0], x2: x[1], area });
        }
        Ok((d1, d2, cr / area))
    }

    fn corners(&self, c: usize) -> [usize; 4] {
        let (ci, cj) = (c % (self.n1 - 1), c / (self.n1 - 1));
        let k00 = cj * self.n1 + ci;
        [k00, k00 + 1, k00 + self.n1, k00 + self.n1 + 1]
    }

    /// Compact differences `(∂₁, ∂₂)` of a corner-valued quantity.
    fn compact<T>(&self, v: [T; 4]) -> (T, T)
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let [v00, v10, v01, v11] = v;
        ((v10 + v11 - v00 - v01) * (0.5 / self.h1), (v01 + v11 - v00 - v10) * (0.5 / self.h2))
    }

    fn cell_jet(&self, m: &impl Fn(usize) -> Vec3, c: usize) -> Result<SurfaceJet> {
        let ks = self.corners(c);
        let pos = ks.map(m);
        let (d1, d2) = self.compact(pos);
        let y = (pos[0] + pos[1] + pos[2] + pos[3]) * 0.25;
        let x0 = self.nodes[ks[0]];
        let x = [x0[0] + 0.5 * self.h1, x0[1] + 0.5 * self.h2];
        let normals =
            [self.nodal_frame(m, ks[0])?.2, self.nodal_frame(m, ks[1])?.2, self.nodal_frame(m, ks[2])?.2, self.nodal_frame(m, ks[3])?.2];
        let cr = d1.cross(&d2);
        let area = cr.norm();
        if !(area > 0.0) || !area.is_finite() {
            return Err(ShellError::DegenerateParametrization { x1: x[0], x2: x[1], area });
        }
        let n = cr / area;
        let proj = Mat3::identity() - n * n.transpose();
        let (dn1, dn2) = self.compact(normals);
        SurfaceJet::from_frame(x, y, d1, d2, [Vec3::zeros(); 3], n, proj * dn1, proj * dn2)
    }

    /// Nodal constrained rotation `polar((∇m|n)(∇y₀|n₀)⁻¹)`.
    fn nodal_polar(&self, m: &impl Fn(usize) -> Vec3, k: usize) -> Result<Mat3> {
        let (d1, d2, n) = self.nodal_frame(m, k)?;
        Ok(polar(&(from_columns(&d1, &d2, &n) * self.ref_frame_inv[k]))?.0)
    }

    fn cell_energy(&self, v: &View, c: usize) -> Result<EnergyBreakdown> {
        let m = |k: usize| v.m(k);
        let ref_jet = &self.ref_cells[c];
        let def = self.cell_jet(&m, c)?;
        let material = &self.problem.material;
        let ks = self.corners(c);
        let variant = self.problem.variant;
        let density = match variant {
            ModelVariant::UnconstrainedH5 | ModelVariant::UnconstrainedH3 => {
                let first = v.q(ks[0]);
                let mut sum = Quaternion::new(0.0, 0.0, 0.0, 0.0);
                let mut mats = [Mat3::zeros(); 4];
                for (slot, &k) in mats.iter_mut().zip(ks.iter()) {
                    let u = v.q(k);
                    *slot = u.to_rotation_matrix().into_inner();
                    sum += if u.coords.dot(&first.coords) < 0.0 { -*u.quaternion() } else { *u.quaternion() };
                }
                let q = UnitQuaternion::new_normalize(sum).to_rotation_matrix().into_inner();
                let (dq1, dq2) = self.compact(mats);
                let state = unconstrained_strains_unchecked(ref_jet, &def, &RotationJet { q, dq: [dq1, dq2] });
                let order = if variant == ModelVariant::UnconstrainedH5 { ThicknessOrder::H5 } else { ThicknessOrder::H3 };
                density_unconstrained(&state, ref_jet, material, order, true)?
            }
            ModelVariant::Koiter => koiter_breakdown(ref_jet, &def, material, true),
            _ => {
                let mut mats = [Mat3::zeros(); 4];
                for (slot, &k) in mats.iter_mut().zip(ks.iter()) {
                    *slot = self.nodal_polar(&m, k)?;
                }
                let (dq1, dq2) = self.compact(mats);
                let q = polar(&transfer_map(ref_jet, &def))?.0;
                let cs = constrained_state(ref_jet, &def, &RotationJet { q, dq: [dq1, dq2] })?;
                density_constrained(&cs, ref_jet, material, variant, true)?
            }
        };
        Ok(density.scaled(self.h1 * self.h2))
    }

    fn cell_load(&self, v: &View, c: usize) -> f64 {
        let f = self.problem.loads.area;
        if f == Vec3::zeros() {
            return 0.0;
        }
        let u = self.corners(c).iter().map(|&k| v.m(k) - self.y0[k]).sum::<Vec3>() * 0.25;
        f.dot(&u) * self.h1 * self.h2 * self.ref_cells[c].area_element()
    }

    fn segment_load(&self, v: &View, s: usize) -> f64 {
        let (a, b, len) = self.segments[s];
        let u = (v.m(a) - self.y0[a] + v.m(b) - self.y0[b]) * 0.5;
        self.problem.loads.edge.dot(&u) * len
    }

    /// Decodes a dof vector into nodal fields.
    pub fn fields(&self, dofs: &[f64]) -> Result<Fields> {
        if dofs.len() != self.dof_count() {
            return Err(invalid("dofs", format!("expected {} entries, got {}", self.dof_count(), dofs.len())));
        }
        let mut f = self.base.clone();
        for (n, &k) in self.free_m.iter().enumerate() {
            f.m[k] = Vec3::new(dofs[3 * n], dofs[3 * n + 1], dofs[3 * n + 2]);
        }
        let off = 3 * self.free_m.len();
        for (n, &k) in self.free_q.iter().enumerate() {
            let o = off + 4 * n;
            f.q[k] = Quaternion::new(dofs[o], dofs[o + 1], dofs[o + 2], dofs[o + 3]);
        }
        Ok(f)
    }

    /// Encodes nodal fields into a dof vector (quaternions as `w, i, j, k`).
    pub fn encode(&self, fields: &Fields) -> Vec<f64> {
        let mut dofs = Vec::with_capacity(self.dof_count());
        for &k in &self.free_m {
            dofs.extend(fields.m[k].iter());
        }
        for &k in &self.free_q {
            let q = fields.q[k];
            dofs.extend([q.w, q.i, q.j, q.k]);
        }
        dofs
    }

    /// Initial dof vector: the initial `m` field (plus the seeded perturbation)
    /// and the nodal polar rotations of that field.
    pub fn initial_dofs(&self) -> Result<Vec<f64>> {
        let p = &self.problem;
        let mut f = self.base.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(p.optimizer.seed);
        for &k in &self.free_m {
            let x = self.nodes[k];
            let mut v = match &p.init {
                InitialField::Reference => self.y0[k],
                InitialField::Dirichlet => p.dirichlet.target.position(x),
                InitialField::Surface(s) => s.position(x),
            };
            if p.optimizer.perturbation > 0.0 {
                let a = p.optimizer.perturbation;
                v += Vec3::new(rng.gen_range(-a..a), rng.gen_range(-a..a), rng.gen_range(-a..a));
            }
            f.m[k] = v;
        }
        let m = f.m.clone();
        for &k in &self.free_q {
            f.q[k] = *quaternion_of(&self.nodal_polar(&|i| m[i], k)?).quaternion();
        }
        Ok(self.encode(&f))
    }

    /// Integrated energy, load work and objective of a field.
    pub fn assemble(&self, fields: &Fields) -> Result<Assembly> {
        let v = View::new(fields);
        let cells: Vec<Result<(EnergyBreakdown, f64)>> =
            (0..self.cell_count()).into_par_iter().map(|c| Ok((self.cell_energy(&v, c)?, self.cell_load(&v, c)))).collect();
        let mut energy = EnergyBreakdown::new(0.0, 0.0, 0.0, self.h1 * self.h2);
        let mut loads_value = 0.0;
        for cell in cells {
            let (e, l) = cell?;
            energy = energy.add(&e);
            loads_value += l;
        }
        for s in 0..self.segments.len() {
            loads_value += self.segment_load(&v, s);
        }
        let objective = energy.total - loads_value;
        if !objective.is_finite() {
            return Err(ShellError::NonFiniteObjective);
        }
        Ok(Assembly { energy, loads_value, objective })
    }

    /// Objective of a dof vector.
    pub fn objective(&self, dofs: &[f64]) -> Result<f64> {
        Ok(self.assemble(&self.fields(dofs)?)?.objective)
    }

    /// Objective contribution of the cells and segments touched by `node`
    /// within `radius` (cells `[i − radius, i + radius − 1]` per direction).
    fn patch(&self, v: &View, node: usize, radius: usize, with_segments: bool) -> Result<f64> {
        let (i, j) = (node % self.n1, node / self.n1);
        let (c1, c2) = (self.n1 - 1, self.n2 - 1);
        let mut sum = 0.0;
        for cj in j.saturating_sub(radius)..(j + radius).min(c2) {
            for ci in i.saturating_sub(radius)..(i + radius).min(c1) {
                let c = cj * c1 + ci;
                sum += self.cell_energy(v, c)?.total - self.cell_load(v, c);
            }
        }
        if with_segments {
            for (s, &(a, b, _)) in self.segments.iter().enumerate() {
                if a == node || b == node {
                    sum -= self.segment_load(v, s);
                }
            }
        }
        Ok(sum)
    }

    /// Central-difference gradient of [`Discretization::objective`], evaluated
    /// on the cells each dof influences. Rotation components are projected to
    /// the tangent space of the unit quaternion sphere.
    pub fn gradient(&self, dofs: &[f64]) -> Result<Vec<f64>> {
        let fields = self.fields(dofs)?;
        let step = |x: f64| GRADIENT_STEP.max(GRADIENT_STEP * x.abs());
        let m_parts: Vec<Result<[f64; 3]>> = self
            .free_m
            .par_iter()
            .map(|&k| {
                let mut g = [0.0; 3];
                for (comp, gc) in g.iter_mut().enumerate() {
                    let x = fields.m[k][comp];
                    let h = step(x);
                    let eval = |val: f64| {
                        let mut mk = fields.m[k];
                        mk[comp] = val;
                        self.patch(&View { fields: &fields, node: k, m: Some(mk), q: None }, k, 3, true)
                    };
                    *gc = (eval(x + h)? - eval(x - h)?) / (2.0 * h);
                }
                Ok(g)
            })
            .collect();
        let q_parts: Vec<Result<[f64; 4]>> = self
            .free_q
            .par_iter()
            .map(|&k| {
                let raw = fields.q[k];
                let mut g = [0.0; 4];
                for (comp, gc) in g.iter_mut().enumerate() {
                    let x = raw.coords[comp];
                    let h = step(x);
                    let eval = |val: f64| {
                        let mut qk = raw;
                        qk.coords[comp] = val;
                        self.patch(&View { fields: &fields, node: k, m: None, q: Some(qk) }, k, 1, false)
                    };
                    *gc = (eval(x + h)? - eval(x - h)?) / (2.0 * h);
                }
                let u = raw.coords.normalize();
                let gv = nalgebra::Vector4::from(g);
                let t = gv - u * u.dot(&gv);
                // Back from nalgebra's (i, j, k, w) storage to the (w, i, j, k) dof order.
                Ok([t[3], t[0], t[1], t[2]])
            })
            .collect();
        let mut grad = Vec::with_capacity(self.dof_count());
        for g in m_parts {
            grad.extend(g?);
        }
        for g in q_parts {
            grad.extend(g?);
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(ShellError::NonFiniteObjective);
        }
        Ok(grad)
    }

    /// `‖Q_k − polar((∇m|n)(∇y₀|n₀)⁻¹)_k‖` at every node carrying rotation dofs.
    pub fn polar_deviation(&self, fields: &Fields) -> Result<Vec<f64>> {
        let v = View::new(fields);
        let m = |k: usize| v.m(k);
        self.free_q.iter().map(|&k| Ok((v.q(k).to_rotation_matrix().into_inner() - self.nodal_polar(&m, k)?).norm())).collect()
    }

    /// Renormalizes every quaternion block of a dof vector.
    fn normalize_rotations(&self, dofs: &mut [f64]) {
        let off = 3 * self.free_m.len();
        for block in dofs[off..].chunks_mut(4) {
            let n = block.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                block.iter_mut().for_each(|v| *v /= n);
            }
        }
    }

    /// Largest Euclidean norm of a per-node block (3 entries for `m`, 4 for a
    /// quaternion). Invariant under a global rotation of the fields.
    pub fn block_max_norm(&self, v: &[f64]) -> f64 {
        let off = 3 * self.free_m.len();
        v[..off].chunks(3).chain(v[off..].chunks(4)).map(norm).fold(0.0, f64::max)
    }

    fn solution(&self, dofs: Vec<f64>, grad_norm: f64, iterations: usize, termination: Termination, history: Vec<f64>) -> Result<Solution> {
        let fields = self.fields(&dofs)?;
        let a = self.assemble(&fields)?;
        let q = self.uses_rotation().then(|| fields.q.iter().map(|q| UnitQuaternion::new_normalize(*q)).collect());
        Ok(Solution {
            grid: self.problem.domain,
            dofs,
            m: fields.m,
            q,
            energy: a.energy,
            loads_value: a.loads_value,
            objective: a.objective,
            iterations,
            grad_norm,
            converged: termination == Termination::GradientTolerance,
            termination,
            history,
        })
    }
}

/// Objective of `problem` at `dofs`.
pub fn assemble_objective(problem: &MinimizeProblem, dofs: &[f64]) -> Result<f64> {
    Discretization::new(problem)?.objective(dofs)
}

/// Finite-difference gradient of `problem` at `dofs`.
pub fn assemble_gradient(problem: &MinimizeProblem, dofs: &[f64]) -> Result<Vec<f64>> {
    Discretization::new(problem)?.gradient(dofs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// L-BFGS two-loop recursion applied to `g`.
fn lbfgs_direction(g: &[f64], pairs: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes the discrete objective with L-BFGS and Armijo backtracking.
///
/// Trial points whose objective cannot be evaluated are treated as rejected
/// steps. Only an invalid problem or a failing initial evaluation is an error.
pub fn minimize(problem: &MinimizeProblem) -> Result<Solution> {
    let disc = Discretization::new(problem)?;
    let opt = problem.optimizer;
    let mut x = disc.initial_dofs()?;
    let mut f = disc.objective(&x)?;
    let mut g = disc.gradient(&x)?;
    let mut history = vec![f];
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let first_step = 0.1 * disc.h1.min(disc.h2);
    let termination = loop {
        if disc.block_max_norm(&g) <= opt.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= opt.max_iters {
            break Termination::MaxIterations;
        }
        let mut d = lbfgs_direction(&g, &pairs);
        let mut slope = dot(&g, &d);
        if pairs.is_empty() || !(slope < 0.0) {
            pairs.clear();
            let scale = first_step / disc.block_max_norm(&g);
            d = g.iter().map(|v| -v * scale).collect();
            slope = dot(&g, &d);
        }
        let dmax = norm(&d);
        let mut alpha = 1.0;
        let accepted = loop {
            if alpha * dmax < opt.min_step {
                break None;
            }
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            disc.normalize_rotations(&mut trial);
            match disc.objective(&trial) {
                Ok(ft) if ft <= f + opt.armijo * alpha * slope => break Some((trial, ft)),
                _ => alpha *= opt.shrink,
            }
        };
        let Some((x_new, f_new)) = accepted else {
            break Termination::StepCollapse;
        };
        let g_new = disc.gradient(&x_new)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == opt.memory {
                pairs.remove(0);
            }
            pairs.push((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        iterations += 1;
    };
    disc.solution(x, disc.block_max_norm(&g), iterations, termination, history)
}

/// Unit-square plate clamped on every edge to the in-plane biaxial stretch
/// `m* = diag(s, s, 1)·y₀`, starting from `y₀`, free rotations.
pub fn plate_stretch_problem(n: usize, variant: ModelVariant, material: ShellMaterial, s: f64) -> MinimizeProblem {
    MinimizeProblem {
        domain: SampleGrid::new(0.0, 1.0, 0.0, 1.0, n, n),
        reference: SurfaceParam::Plane,
        variant,
        material,
        dirichlet: Dirichlet {
            edges: EdgeFlags::all(),
            target: SurfaceParam::AffineImage {
                base: Box::new(SurfaceParam::Plane),
                matrix: Mat3::from_diagonal(&Vec3::new(s, s, 1.0)),
                shift: Vec3::zeros(),
            },
            rotation: RotationBoundary::Free,
        },
        loads: DeadLoads::default(),
        init: InitialField::Reference,
        optimizer: OptimizerSettings::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate_problem(variant: ModelVariant, material: ShellMaterial, s: f64, n: usize) -> MinimizeProblem {
        plate_stretch_problem(n, variant, material, s)
    }

    #[test]
    fn edge_flags_select_boundary_nodes() {
        let e = EdgeFlags { left: true, ..EdgeFlags::none() };
        assert!(e.contains(0, 3, 5, 5));
        assert!(!e.contains(4, 3, 5, 5));
        assert!(EdgeFlags::all().contains(2, 4, 5, 5));
        assert!(!EdgeFlags::none().any());
    }

    #[test]
    fn rejects_small_grids_and_plain_constrained_variants() {
        let mat = ShellMaterial::unit(0.01, f64::INFINITY);
        let p = plate_problem(ModelVariant::ModifiedConstrainedPlate, mat, 1.0, 4);
        assert!(matches!(p.validate(), Err(ShellError::ConfigInvalid { .. })));
        let p = plate_problem(ModelVariant::ConstrainedPlate, mat, 1.0, 5);
        assert!(matches!(p.validate(), Err(ShellError::NotAdmissible { .. })));
        let mut p = plate_problem(ModelVariant::ModifiedConstrainedPlate, mat, 1.0, 5);
        p.dirichlet.edges = EdgeFlags::none();
        p.loads.area = Vec3::new(0.0, 0.0, 1.0);
        assert!(matches!(p.validate(), Err(ShellError::ConfigInvalid { .. })));
    }

    #[test]
    fn dof_layout_round_trips() {
        let p = plate_problem(ModelVariant::UnconstrainedH3, ShellMaterial::unit(0.01, 1.0), 1.0, 6);
        let d = Discretization::new(&p).unwrap();
        assert_eq!(d.dof_count(), 3 * 16 + 4 * 36);
        let x = d.initial_dofs().unwrap();
        assert_eq!(d.encode(&d.fields(&x).unwrap()), x);
        assert!(d.fields(&x[1..]).is_err());
    }

    #[test]
    fn reference_field_has_zero_objective() {
        for variant in [ModelVariant::ModifiedConstrainedPlate, ModelVariant::UnconstrainedH5, ModelVariant::Koiter] {
            let p = plate_problem(variant, ShellMaterial::unit(0.01, 1.0), 1.0, 6);
            let d = Discretization::new(&p).unwrap();
            let x = d.initial_dofs().unwrap();
            assert!(d.objective(&x).unwrap().abs() <= 1e-20, "{variant:?}");
        }
    }

    #[test]
    fn uniform_stretch_matches_closed_form() {
        let mat = ShellMaterial::unit(0.01, f64::INFINITY);
        let mut p = plate_problem(ModelVariant::ModifiedConstrainedPlate, mat, 1.01, 7);
        p.init = InitialField::Dirichlet;
        let f = assemble_objective(&p, &Discretization::new(&p).unwrap().initial_dofs().unwrap()).unwrap();
        // h·(μ‖E‖² + λμ/(λ+2μ)·tr²E) with E = diag(0.01, 0.01, 0).
        let exact = 0.01 * (2e-4 + 4e-4 / 3.0);
        assert!((f - exact).abs() <= 1e-12 * exact, "{f} vs {exact}");
    }

    #[test]
    fn lbfgs_direction_without_pairs_is_steepest_descent() {
        assert_eq!(lbfgs_direction(&[1.0, -2.0], &[]), vec![-1.0, 2.0]);
    }

    #[test]
    fn edge_loads_use_free_edges_only() {
        let mut p = plate_problem(ModelVariant::Koiter, ShellMaterial::unit(0.01, f64::INFINITY), 1.0, 5);
        p.dirichlet.edges = EdgeFlags { left: true, ..EdgeFlags::none() };
        p.loads.edge = Vec3::new(1.0, 0.0, 0.0);
        let d = Discretization::new(&p).unwrap();
        let total: f64 = d.segments.iter().map(|s| s.2).sum();
        assert!((total - 3.0).abs() < 1e-14);
    }
}
