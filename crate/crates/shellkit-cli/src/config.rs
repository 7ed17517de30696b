//! JSON run configuration: parsing, defaults and conversion to library types.

use serde::{Deserialize, Serialize};
use shellkit::bending_invariance::DeformationCase;
use shellkit::energy_forms::ModelVariant;
use shellkit::minimizer::{DeadLoads, Dirichlet, EdgeFlags, InitialField, OptimizerSettings, RotationBoundary};
use shellkit::strain_measures::ShellMaterial;
use shellkit::surface_geometry::{Polynomial, SampleGrid, SurfaceParam};
use shellkit::tensor_algebra::{Mat3, Vec3};
use shellkit::ShellError;

use crate::Command;

fn invalid(field: &str, reason: impl Into<String>) -> ShellError {
    ShellError::ConfigInvalid { field: field.into(), reason: reason.into() }
}

/// Top-level configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deformation: Option<DeformationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loads: Option<LoadsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<DirichletSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    /// Monte-Carlo settings of the `coercivity` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
}

/// Parametrized surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum SurfaceSpec {
    Plane,
    Cylinder {
        radius: f64,
    },
    Sphere {
        radius: f64,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    /// Height function as `[i, j, c]` monomials `c·x₁^i·x₂^j`.
    Graph {
        terms: Vec<(u32, u32, f64)>,
    },
    AffineImage {
        base: Box<SurfaceSpec>,
        matrix: [[f64; 3]; 3],
        shift: [f64; 3],
    },
    NormalOffset {
        base: Box<SurfaceSpec>,
        offset: f64,
    },
    RadialScale {
        base: Box<SurfaceSpec>,
        factor: f64,
    },
}

/// Deformation of the reference surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum DeformationSpec {
    Identity,
    Rigid {
        rotation: [[f64; 3]; 3],
        shift: [f64; 3],
    },
    NormalOffset {
        offset: f64,
    },
    RadialScale {
        factor: f64,
    },
    PlanarScale {
        alpha: f64,
    },
    BiaxialCylinderStretch {
        hoop: f64,
        axial: f64,
    },
    /// An explicit deformed surface over the reference parameters.
    Surface {
        surface: SurfaceSpec,
    },
}

/// Material parameters; an absent or `null` `mu_c` selects the constrained limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub h: f64,
    pub mu: f64,
    pub lambda: f64,
    #[serde(default)]
    pub mu_c: Option<f64>,
    #[serde(default = "one")]
    pub l_c: f64,
    #[serde(default = "one")]
    pub b1: f64,
    #[serde(default = "one")]
    pub b2: f64,
    #[serde(default = "one")]
    pub b3: f64,
}

fn one() -> f64 {
    1.0
}

/// Sampling grid; `domain = [a1, b1, a2, b2]` defaults to the surface's own domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 4]>,
}

/// Initial field of the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitSpec {
    Reference,
    Dirichlet,
    Deformation,
}

/// Optimizer settings; every field falls back to the library default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub armijo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
}

/// Dead loads per unit reference area and per unit reference edge length.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadsSpec {
    #[serde(default)]
    pub area: [f64; 3],
    #[serde(default)]
    pub edge: [f64; 3],
}

/// Rotation boundary condition on the clamped edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum RotationSpec {
    Free,
    Compatible,
    Fixed { matrix: [[f64; 3]; 3] },
}

/// Clamped edges, their target placement and their rotation condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    /// Subset of `left`, `right`, `bottom`, `top`.
    pub edges: Vec<String>,
    /// Deformation whose values are imposed; defaults to the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<DeformationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationSpec>,
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Output destination; stdout when `path` is absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// Monte-Carlo settings of the `coercivity` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    /// Total number of random strain states, distributed over the grid points.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Strain states are drawn with entries in `[−s, s]`, `s` uniform in `[0.01, max_scale]`.
    #[serde(default = "default_max_scale")]
    pub max_scale: f64,
}

fn default_samples() -> usize {
    10_000
}

fn default_max_scale() -> f64 {
    2.0
}

fn mat3(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

fn check_rotation(field: &str, r: &Mat3) -> Result<(), ShellError> {
    if !r.iter().all(|v| v.is_finite()) || (r.transpose() * r - Mat3::identity()).norm() > 1e-9 || r.determinant() <= 0.0 {
        return Err(invalid(field, "must be a proper rotation matrix"));
    }
    Ok(())
}

impl SurfaceSpec {
    pub fn to_param(&self) -> SurfaceParam {
        match self {
            SurfaceSpec::Plane => SurfaceParam::Plane,
            SurfaceSpec::Cylinder { radius } => SurfaceParam::Cylinder { radius: *radius },
            SurfaceSpec::Sphere { radius } => SurfaceParam::Sphere { radius: *radius },
            SurfaceSpec::Torus { major, minor } => SurfaceParam::Torus { major: *major, minor: *minor },
            SurfaceSpec::Graph { terms } => SurfaceParam::Graph { height: Polynomial::new(terms.clone()) },
            SurfaceSpec::AffineImage { base, matrix, shift } => {
                SurfaceParam::AffineImage { base: Box::new(base.to_param()), matrix: mat3(matrix), shift: Vec3::from(*shift) }
            }
            SurfaceSpec::NormalOffset { base, offset } => SurfaceParam::NormalOffset { base: Box::new(base.to_param()), offset: *offset },
            SurfaceSpec::RadialScale { base, factor } => SurfaceParam::RadialScale { base: Box::new(base.to_param()), factor: *factor },
        }
    }
}

impl DeformationSpec {
    pub fn validate(&self) -> Result<(), ShellError> {
        let finite = |field: &str, v: f64| if v.is_finite() { Ok(()) } else { Err(invalid(field, "must be finite")) };
        match self {
            DeformationSpec::Identity => Ok(()),
            DeformationSpec::Rigid { rotation, shift } => {
                check_rotation("rotation", &mat3(rotation))?;
                shift.iter().try_for_each(|v| finite("shift", *v))
            }
            DeformationSpec::NormalOffset { offset } => finite("offset", *offset),
            DeformationSpec::RadialScale { factor } if !(*factor > 0.0 && factor.is_finite()) => {
                Err(invalid("factor", "must be positive and finite"))
            }
            DeformationSpec::PlanarScale { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                Err(invalid("alpha", "must be positive and finite"))
            }
            DeformationSpec::BiaxialCylinderStretch { hoop, axial }
                if !(*hoop > 0.0 && *axial > 0.0 && hoop.is_finite() && axial.is_finite()) =>
            {
                Err(invalid("hoop", "hoop and axial stretches must be positive and finite"))
            }
            DeformationSpec::Surface { surface } => surface.to_param().validate(),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, reference: &SurfaceParam) -> SurfaceParam {
        let case = match self {
            DeformationSpec::Identity => return reference.clone(),
            DeformationSpec::Rigid { rotation, shift } => DeformationCase::Rigid { rotation: mat3(rotation), shift: Vec3::from(*shift) },
            DeformationSpec::NormalOffset { offset } => DeformationCase::NormalOffset { offset: *offset },
            DeformationSpec::RadialScale { factor } => DeformationCase::RadialScale { factor: *factor },
            DeformationSpec::PlanarScale { alpha } => DeformationCase::PlanarScale { alpha: *alpha },
            DeformationSpec::BiaxialCylinderStretch { hoop, axial } => {
                DeformationCase::BiaxialCylinderStretch { hoop: *hoop, axial: *axial }
            }
            DeformationSpec::Surface { surface } => return surface.to_param(),
        };
        case.deformation(reference)
    }
}

impl MaterialSpec {
    pub fn to_material(&self) -> Result<ShellMaterial, ShellError> {
        ShellMaterial::new(self.h, self.mu, self.lambda, self.mu_c.unwrap_or(f64::INFINITY), self.l_c, self.b1, self.b2, self.b3)
    }
}

impl OptimizerSpec {
    fn resolved(&self) -> Self {
        let d = OptimizerSettings::default();
        Self {
            max_iters: Some(self.max_iters.unwrap_or(d.max_iters)),
            grad_tol: Some(self.grad_tol.unwrap_or(d.grad_tol)),
            memory: Some(self.memory.unwrap_or(d.memory)),
            armijo: Some(self.armijo.unwrap_or(d.armijo)),
            shrink: Some(self.shrink.unwrap_or(d.shrink)),
            min_step: Some(self.min_step.unwrap_or(d.min_step)),
            perturbation: Some(self.perturbation.unwrap_or(d.perturbation)),
            seed: Some(self.seed.unwrap_or(d.seed)),
            init: self.init,
        }
    }

    pub fn to_settings(&self) -> OptimizerSettings {
        let d = OptimizerSettings::default();
        OptimizerSettings {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            memory: self.memory.unwrap_or(d.memory),
            armijo: self.armijo.unwrap_or(d.armijo),
            shrink: self.shrink.unwrap_or(d.shrink),
            min_step: self.min_step.unwrap_or(d.min_step),
            perturbation: self.perturbation.unwrap_or(d.perturbation),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

impl DirichletSpec {
    pub fn edge_flags(&self) -> Result<EdgeFlags, ShellError> {
        let mut flags = EdgeFlags::none();
        for e in &self.edges {
            match e.as_str() {
                "left" => flags.left = true,
                "right" => flags.right = true,
                "bottom" => flags.bottom = true,
                "top" => flags.top = true,
                other => return Err(invalid("edges", format!("unknown edge `{other}` (expected left, right, bottom or top)"))),
            }
        }
        Ok(flags)
    }

    pub fn to_dirichlet(&self, reference: &SurfaceParam) -> Result<Dirichlet, ShellError> {
        let target = self.target.as_ref().unwrap_or(&DeformationSpec::Identity);
        target.validate()?;
        let rotation = match self.rotation.as_ref().unwrap_or(&RotationSpec::Free) {
            RotationSpec::Free => RotationBoundary::Free,
            RotationSpec::Compatible => RotationBoundary::Compatible,
            RotationSpec::Fixed { matrix } => {
                let r = mat3(matrix);
                check_rotation("rotation", &r)?;
                RotationBoundary::Fixed(r)
            }
        };
        Ok(Dirichlet { edges: self.edge_flags()?, target: target.apply(reference), rotation })
    }
}

impl LoadsSpec {
    pub fn to_loads(&self) -> DeadLoads {
        DeadLoads { area: Vec3::from(self.area), edge: Vec3::from(self.edge) }
    }
}

/// Configuration after validation, with defaults filled in and CLI overrides applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    /// The configuration as it was run, for provenance.
    pub config: RunConfig,
    pub surface: Option<SurfaceParam>,
    pub deformation: Option<SurfaceParam>,
    pub material: Option<ShellMaterial>,
    pub variant: Option<ModelVariant>,
    pub grid: Option<SampleGrid>,
    pub seed: u64,
    pub format: Format,
    pub out: Option<String>,
}

impl Resolved {
    /// Validates `config` for `command` and fills in defaults.
    pub fn new(command: Command, mut config: RunConfig, out: Option<String>, seed: Option<u64>) -> Result<Self, ShellError> {
        if let Some(c) = config.command {
            if c != command {
                return Err(invalid("command", format!("config is for `{}` but `{}` was requested", c.name(), command.name())));
            }
        }
        config.command = Some(command);
        let needs = command.required_blocks();
        for block in needs {
            let present = match *block {
                "surface" => config.surface.is_some(),
                "deformation" => config.deformation.is_some(),
                "material" => config.material.is_some(),
                "variant" => config.variant.is_some(),
                "grid" => config.grid.is_some(),
                "dirichlet" => config.dirichlet.is_some(),
                _ => true,
            };
            if !present {
                return Err(invalid(block, format!("required by the `{}` command", command.name())));
            }
        }

        let surface = config.surface.as_ref().map(|s| s.to_param());
        if let Some(s) = &surface {
            s.validate()?;
        }
        let deformation = match (&config.deformation, &surface) {
            (Some(d), Some(s)) => {
                d.validate()?;
                Some(d.apply(s))
            }
            _ => None,
        };
        let material = config.material.as_ref().map(|m| m.to_material()).transpose()?;
        let variant = config
            .variant
            .as_ref()
            .map(|name| {
                ModelVariant::from_name(name).ok_or_else(|| {
                    let names: Vec<_> = ModelVariant::ALL.iter().map(|v| v.name()).collect();
                    invalid("variant", format!("unknown variant `{name}` (expected one of {})", names.join(", ")))
                })
            })
            .transpose()?;
        if let (Some(v), Some(m)) = (variant, &material) {
            if v.is_unconstrained() && m.is_constrained() {
                return Err(invalid("mu_c", format!("{} needs a finite mu_c", v.name())));
            }
        }

        let grid = match (&mut config.grid, &surface) {
            (Some(g), s) => {
                if g.n1 == 0 || g.n2 == 0 {
                    return Err(invalid("grid", "n1 and n2 must be positive"));
                }
                if g.domain.is_none() {
                    let d = s.as_ref().map(|s| s.default_domain()).unwrap_or_else(|| SampleGrid::new(0.0, 1.0, 0.0, 1.0, 1, 1));
                    g.domain = Some([d.a1, d.b1, d.a2, d.b2]);
                }
                let [a1, b1, a2, b2] = g.domain.expect("filled above");
                if ![a1, b1, a2, b2].iter().all(|v| v.is_finite()) || a1 > b1 || a2 > b2 {
                    return Err(invalid("domain", "bounds must be finite with a <= b"));
                }
                Some(SampleGrid::new(a1, b1, a2, b2, g.n1, g.n2))
            }
            (None, _) => None,
        };

        let mut optimizer = config.optimizer.clone().unwrap_or(OptimizerSpec {
            max_iters: None,
            grad_tol: None,
            memory: None,
            armijo: None,
            shrink: None,
            min_step: None,
            perturbation: None,
            seed: None,
            init: None,
        });
        if let Some(s) = seed {
            optimizer.seed = Some(s);
        }
        let optimizer = optimizer.resolved();
        let seed = optimizer.seed.unwrap_or(0);
        config.optimizer = Some(optimizer);

        if command == Command::Coercivity && config.sampling.is_none() {
            config.sampling = Some(SamplingSpec { samples: default_samples(), max_scale: default_max_scale() });
        }
        if let Some(s) = &config.sampling {
            if !(s.max_scale > 0.01 && s.max_scale.is_finite()) {
                return Err(invalid("max_scale", "must be finite and larger than 0.01"));
            }
        }

        let mut output = config.output.clone().unwrap_or(OutputSpec { path: None, format: None });
        if out.is_some() {
            output.path = out;
        }
        let format = output.format.unwrap_or_else(|| match &output.path {
            Some(p) if p.ends_with(".json") => Format::Json,
            _ => Format::Csv,
        });
        output.format = Some(format);
        let out = output.path.clone();
        config.output = Some(output);

        Ok(Self { command, config, surface, deformation, material, variant, grid, seed, format, out })
    }

    pub fn surface(&self) -> &SurfaceParam {
        self.surface.as_ref().expect("checked by required_blocks")
    }

    pub fn deformation(&self) -> &SurfaceParam {
        self.deformation.as_ref().expect("checked by required_blocks")
    }

    pub fn material(&self) -> &ShellMaterial {
        self.material.as_ref().expect("checked by required_blocks")
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant.expect("checked by required_blocks")
    }

    pub fn grid(&self) -> &SampleGrid {
        self.grid.as_ref().expect("checked by required_blocks")
    }

    pub fn sampling(&self) -> &SamplingSpec {
        self.config.sampling.as_ref().expect("filled for the coercivity command")
    }

    pub fn optimizer(&self) -> &OptimizerSpec {
        self.config.optimizer.as_ref().expect("filled in Resolved::new")
    }

    /// Initial field of the minimizer: the configured one, else the deformation
    /// when one is given, else the reference.
    pub fn initial_field(&self) -> InitialField {
        match (self.optimizer().init, &self.deformation) {
            (Some(InitSpec::Reference), _) => InitialField::Reference,
            (Some(InitSpec::Dirichlet), _) => InitialField::Dirichlet,
            (Some(InitSpec::Deformation) | None, Some(d)) => InitialField::Surface(d.clone()),
            (Some(InitSpec::Deformation) | None, None) => InitialField::Reference,
        }
    }
}
