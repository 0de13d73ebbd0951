//! Scene files: a text format declaring a domain, named groups, named
//! subsets, and the sampling configuration, with named templates for the
//! built-in constructions. Commands dispatch to the library operations
//! and produce deterministic reports.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::action::{
    displacement, face_dynamics_check, hull_inflation_check, m_r_sample,
    min_set_sample, orbit, translation_length, GroupSpec,
};
use crate::domain::{ConvexDomain, ConvexSubset};
use crate::error::CoreError;
use crate::flat::flat_torus_report;
use crate::metric::{
    center_of_mass, geodesic_point, hilbert_distance_detailed, MetricConfig,
};
use crate::projective::{ProjectiveMap, ProjectivePoint};
use crate::report::{inputs_digest, Provenance, Report, Value};
use crate::Result;

/// On-disk scene schema.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template_params: Option<TemplateParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subsets: BTreeMap<String, SubsetDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, GroupDecl>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigDecl>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Exponent rows for the template generators (one row per
    /// generator, one integer exponent per simplex coordinate).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDecl {
    pub kind: String,
    /// Homogeneous vertex representatives, one row per vertex (polytope).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    /// Chart-coordinate center (ellipsoid).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Row-major shape matrix (ellipsoid).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetDecl {
    pub generators: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDecl {
    /// Row-major matrices, one per generator.
    pub matrices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    /// Caller assertion, validated against the commutator residuals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commuting: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant_subset: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDecl {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub com_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub com_radius_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_set_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accumulation_band: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_samples: Option<usize>,
}

/// A resolved, validated scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub domain: Arc<ConvexDomain>,
    pub groups: BTreeMap<String, GroupSpec>,
    pub subsets: BTreeMap<String, ConvexSubset>,
    pub config: SceneConfig,
    pub template: Option<String>,
    /// Canonical text of the scene the reports bind to.
    pub source_text: String,
    pub file: SceneFile,
}

#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub metric: MetricConfig,
    pub accumulation_band: f64,
    pub verify_samples: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            metric: MetricConfig::default(),
            accumulation_band: 1e-4,
            verify_samples: 200,
        }
    }
}

impl SceneConfig {
    pub fn tolerances(&self) -> Vec<(String, f64)> {
        vec![
            ("boundary_tolerance".into(), self.metric.boundary_tolerance),
            (
                "com_radius_tolerance".into(),
                self.metric.com_radius_tolerance,
            ),
            ("min_set_epsilon".into(), self.metric.min_set_epsilon),
            ("accumulation_band".into(), self.accumulation_band),
            ("hausdorff_samples".into(), self.metric.hausdorff_samples as f64),
            ("com_samples".into(), self.metric.com_samples as f64),
            ("grid_samples".into(), self.metric.grid_samples as f64),
        ]
    }
}

/// Parses and validates a scene from text. Template names expand first;
/// explicit sections of the file override what the template provides.
pub fn parse_scene_text(text: &str) -> Result<Scene> {
    let file: SceneFile = toml::from_str(text)
        .map_err(|e| CoreError::ParseError(e.to_string()))?;
    resolve_scene(file, text.to_string())
}

/// Loads a scene file from disk.
pub fn parse_scene(path: &std::path::Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    parse_scene_text(&text)
}

/// Canonical re-emission of the scene declaration (echo mode).
pub fn emit_scene(file: &SceneFile) -> Result<String> {
    toml::to_string(file).map_err(|e| CoreError::ValidationError(e.to_string()))
}

fn resolve_scene(mut file: SceneFile, source_text: String) -> Result<Scene> {
    if let Some(name) = file.template.clone() {
        let expanded = expand_template(&name, file.template_params.as_ref())?;
        if file.domain.is_none() {
            file.domain = expanded.domain;
        }
        for (k, v) in expanded.subsets {
            file.subsets.entry(k).or_insert(v);
        }
        for (k, v) in expanded.groups {
            file.groups.entry(k).or_insert(v);
        }
    }
    let domain_decl = file
        .domain
        .as_ref()
        .ok_or_else(|| CoreError::ValidationError("scene has no domain".into()))?;
    let domain = Arc::new(build_domain(domain_decl)?);

    let mut subsets = BTreeMap::new();
    for (name, decl) in &file.subsets {
        let points: Vec<ProjectivePoint> = decl
            .generators
            .iter()
            .enumerate()
            .map(|(i, coords)| {
                check_len(coords, domain.ambient_dim(), &format!("subsets.{name}[{i}]"))?;
                ProjectivePoint::from_slice(coords)
            })
            .collect::<Result<_>>()?;
        let subset = ConvexSubset::hull(domain.clone(), &points).map_err(|e| {
            CoreError::ValidationError(format!("subset `{name}`: {e}"))
        })?;
        subsets.insert(name.clone(), subset);
    }

    let mut groups = BTreeMap::new();
    for (name, decl) in &file.groups {
        let d = domain.ambient_dim();
        let generators: Vec<ProjectiveMap> = decl
            .matrices
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                if rows.len() != d * d {
                    return Err(CoreError::ParseError(format!(
                        "groups.{name}.matrices[{i}] has {} entries, expected {} ({}x{} row-major)",
                        rows.len(),
                        d * d,
                        d,
                        d
                    )));
                }
                ProjectiveMap::from_rows(d, rows)
            })
            .collect::<Result<_>>()?;
        let invariant = match &decl.invariant_subset {
            None => None,
            Some(subset_name) => Some(
                subsets
                    .get(subset_name)
                    .ok_or_else(|| {
                        CoreError::ValidationError(format!(
                            "group `{name}` references unknown subset `{subset_name}`"
                        ))
                    })?
                    .clone(),
            ),
        };
        let group = GroupSpec::new(domain.clone(), generators, decl.labels.clone(), invariant)
            .map_err(|e| CoreError::ValidationError(format!("group `{name}`: {e}")))?;
        if let Some(asserted) = decl.commuting {
            if asserted && !group.commuting() {
                let residual = crate::action::commutation_residual(group.generators());
                return Err(CoreError::ValidationError(format!(
                    "group `{name}` declared commuting but commutator residual is {residual:.3e}"
                )));
            }
        }
        groups.insert(name.clone(), group);
    }

    let config = build_config(file.config.as_ref())?;
    Ok(Scene {
        domain,
        groups,
        subsets,
        config,
        template: file.template.clone(),
        source_text,
        file,
    })
}

fn check_len(coords: &[f64], expected: usize, what: &str) -> Result<()> {
    if coords.len() != expected {
        return Err(CoreError::ParseError(format!(
            "{what} has {} coordinates, expected {expected}",
            coords.len()
        )));
    }
    Ok(())
}

fn build_domain(decl: &DomainDecl) -> Result<ConvexDomain> {
    match decl.kind.as_str() {
        "polytope" => {
            let vertices = decl.vertices.as_ref().ok_or_else(|| {
                CoreError::ValidationError("polytope domain needs `vertices`".into())
            })?;
            if vertices.is_empty() {
                return Err(CoreError::ValidationError("empty vertex list".into()));
            }
            let d = vertices[0].len();
            let lifts: Vec<DVector<f64>> = vertices
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    check_len(row, d, &format!("domain.vertices[{i}]"))?;
                    Ok(DVector::from_column_slice(row))
                })
                .collect::<Result<_>>()?;
            ConvexDomain::polytope(lifts).map_err(|e| {
                CoreError::ValidationError(format!("domain not properly convex: {e}"))
            })
        }
        "ellipsoid" => {
            let center = decl.center.as_ref().ok_or_else(|| {
                CoreError::ValidationError("ellipsoid domain needs `center`".into())
            })?;
            let shape = decl.shape.as_ref().ok_or_else(|| {
                CoreError::ValidationError("ellipsoid domain needs `shape`".into())
            })?;
            ConvexDomain::ellipsoid(center, shape)
        }
        other => Err(CoreError::ValidationError(format!(
            "unknown domain kind `{other}`"
        ))),
    }
}

fn build_config(decl: Option<&ConfigDecl>) -> Result<SceneConfig> {
    let mut config = SceneConfig::default();
    if let Some(c) = decl {
        if let Some(v) = c.boundary_tolerance {
            config.metric.boundary_tolerance = v;
        }
        if let Some(v) = c.hausdorff_samples {
            config.metric.hausdorff_samples = v;
        }
        if let Some(v) = c.com_samples {
            config.metric.com_samples = v;
        }
        if let Some(v) = c.com_radius_tolerance {
            config.metric.com_radius_tolerance = v;
        }
        if let Some(v) = c.rng_seed {
            config.metric.rng_seed = v;
        }
        if let Some(v) = c.min_set_epsilon {
            config.metric.min_set_epsilon = v;
        }
        if let Some(v) = c.grid_samples {
            config.metric.grid_samples = v;
        }
        if let Some(v) = c.accumulation_band {
            config.accumulation_band = v;
        }
        if let Some(v) = c.verify_samples {
            config.verify_samples = v;
        }
    }
    config.metric.validate()?;
    Ok(config)
}

/// Expands one of the named templates into scene sections:
/// `example-3.1` is the standard simplex with a single positive diagonal
/// generator, `example-3.2` the simplex with the full integer diagonal
/// lattice, and `example-3.3` the simplex with a rank-deficient
/// diagonal subgroup given by exponent rows.
pub fn expand_template(name: &str, params: Option<&TemplateParams>) -> Result<SceneFile> {
    let d = params.and_then(|p| p.d).unwrap_or(2);
    if d < 1 || d > 9 {
        return Err(CoreError::ValidationError(format!(
            "template dimension {d} out of range (1..=9)"
        )));
    }
    let n = d + 1;
    let vertices: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    let whole_simplex = SubsetDecl {
        generators: vertices.clone(),
    };
    let exponent_rows: Vec<Vec<f64>> = match name {
        "example-3.1" => match params.and_then(|p| p.exponents.clone()) {
            Some(rows) => rows,
            None => vec![(0..n).map(|i| i as f64).collect()],
        },
        "example-3.2" => (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row
            })
            .collect(),
        "example-3.3" => match params.and_then(|p| p.exponents.clone()) {
            Some(rows) => rows,
            None => vec![(0..n).map(|i| i as f64).collect()],
        },
        other => {
            return Err(CoreError::ValidationError(format!(
                "unknown template `{other}`"
            )))
        }
    };
    let mut matrices = Vec::new();
    let mut labels = Vec::new();
    for (gi, row) in exponent_rows.iter().enumerate() {
        if row.len() != n {
            return Err(CoreError::ValidationError(format!(
                "template exponent row {gi} has {} entries, expected {n}",
                row.len()
            )));
        }
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = row[i].exp();
        }
        matrices.push(matrix);
        labels.push(format!("a{gi}"));
    }
    let group = GroupDecl {
        matrices,
        labels,
        commuting: Some(true),
        invariant_subset: Some("C".to_string()),
    };
    let mut subsets = BTreeMap::new();
    subsets.insert("C".to_string(), whole_simplex);
    let mut groups = BTreeMap::new();
    groups.insert("A".to_string(), group);
    Ok(SceneFile {
        template: None,
        template_params: None,
        domain: Some(DomainDecl {
            kind: "polytope".to_string(),
            vertices: Some(vertices),
            center: None,
            shape: None,
        }),
        subsets,
        groups,
        config: None,
    })
}

/// A parsed command invocation.
#[derive(Debug, Clone)]
pub enum CommandSpec {
    Dist {
        x: Vec<f64>,
        y: Vec<f64>,
    },
    Geodesic {
        x: Vec<f64>,
        y: Vec<f64>,
        t: f64,
    },
    Tau {
        group: String,
    },
    Displacement {
        group: String,
        element: usize,
        x: Vec<f64>,
    },
    MinSet {
        group: String,
        element: usize,
    },
    Mr {
        group: String,
        r: f64,
    },
    HullCheck {
        group: String,
        r: f64,
    },
    Com {
        points: Vec<Vec<f64>>,
        subset: Option<String>,
    },
    Orbit {
        group: String,
        x: Option<Vec<f64>>,
        radius: usize,
    },
    LimitSet {
        group: String,
        radius: usize,
        base_points: usize,
    },
    FaceDynamics {
        group: String,
        element: usize,
        power: u32,
        x: Option<Vec<f64>>,
    },
    Flat {
        group: String,
    },
    Verify,
}

impl CommandSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dist { .. } => "dist",
            Self::Geodesic { .. } => "geodesic",
            Self::Tau { .. } => "tau",
            Self::Displacement { .. } => "displacement",
            Self::MinSet { .. } => "minset",
            Self::Mr { .. } => "mr",
            Self::HullCheck { .. } => "hull-check",
            Self::Com { .. } => "com",
            Self::Orbit { .. } => "orbit",
            Self::LimitSet { .. } => "limitset",
            Self::FaceDynamics { .. } => "face-dynamics",
            Self::Flat { .. } => "flat",
            Self::Verify => "verify",
        }
    }

    fn canonical_args(&self) -> String {
        format!("{self:?}")
    }
}

fn point_from(scene: &Scene, coords: &[f64], what: &str) -> Result<ProjectivePoint> {
    check_len(coords, scene.domain.ambient_dim(), what)?;
    ProjectivePoint::from_slice(coords)
}

fn group_of<'a>(scene: &'a Scene, name: &str) -> Result<&'a GroupSpec> {
    scene.groups.get(name).ok_or_else(|| {
        CoreError::ValidationError(format!("scene has no group named `{name}`"))
    })
}

fn element_of<'a>(group: &'a GroupSpec, index: usize) -> Result<&'a ProjectiveMap> {
    group.generators().get(index).ok_or_else(|| {
        CoreError::ValidationError(format!(
            "generator index {index} out of range ({} generators)",
            group.generators().len()
        ))
    })
}

fn point_rows(points: &[ProjectivePoint]) -> Value {
    Value::PointList(
        points
            .iter()
            .map(|p| p.rep().iter().cloned().collect())
            .collect(),
    )
}

/// Runs a command against a scene and assembles the report.
pub fn run_command(scene: &Scene, spec: &CommandSpec, seed_override: Option<u64>) -> Result<Report> {
    let mut cfg = scene.config.clone();
    if let Some(seed) = seed_override {
        cfg.metric.rng_seed = seed;
    }
    let digest = inputs_digest(
        &scene.source_text,
        spec.name(),
        &spec.canonical_args(),
        cfg.metric.rng_seed,
    );
    let provenance = Provenance {
        seed: cfg.metric.rng_seed,
        seed_overridden: seed_override.is_some(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        tolerances: cfg.tolerances(),
    };
    let mut report = Report::new(spec.name(), digest, provenance);
    let domain = &scene.domain;

    match spec {
        CommandSpec::Dist { x, y } => {
            let px = point_from(scene, x, "--x")?;
            let py = point_from(scene, y, "--y")?;
            let detail = hilbert_distance_detailed(domain, &px, &py)?;
            report.push_output("value", Value::Real(detail.value));
            report.push_output(
                "endpoint_a",
                Value::RealArray(detail.endpoint_a.rep().iter().cloned().collect()),
            );
            report.push_output(
                "endpoint_b",
                Value::RealArray(detail.endpoint_b.rep().iter().cloned().collect()),
            );
            report.push_verdict("near_boundary", detail.near_boundary);
        }
        CommandSpec::Geodesic { x, y, t } => {
            let px = point_from(scene, x, "--x")?;
            let py = point_from(scene, y, "--y")?;
            let p = geodesic_point(domain, &px, &py, *t)?;
            let total = crate::metric::hilbert_distance(domain, &px, &py)?;
            let reached = crate::metric::hilbert_distance(domain, &px, &p)?;
            report.push_output("point", Value::RealArray(p.rep().iter().cloned().collect()));
            report.push_output("total_distance", Value::Real(total));
            report.push_output("distance_from_x", Value::Real(reached));
            report.push_residual("arclength_fraction_error", (reached - t * total).abs());
        }
        CommandSpec::Tau { group } => {
            let g = group_of(scene, group)?;
            let taus: Vec<f64> = g.generators().iter().map(translation_length).collect();
            report.push_output("per_generator", Value::RealArray(taus.clone()));
            for (label, tau) in g.labels().iter().zip(&taus) {
                report.push_output(&format!("tau.{label}"), Value::Real(*tau));
            }
        }
        CommandSpec::Displacement { group, element, x } => {
            let g = group_of(scene, group)?;
            let map = element_of(g, *element)?;
            let px = point_from(scene, x, "--x")?;
            let value = displacement(domain, map, &px)?;
            let tau = translation_length(map);
            report.push_output("value", Value::Real(value));
            report.push_output("translation_length", Value::Real(tau));
            report.push_residual("excess_over_tau", value - tau);
        }
        CommandSpec::MinSet { group, element } => {
            let g = group_of(scene, group)?;
            let map = element_of(g, *element)?;
            let sample = min_set_sample(domain, map, &cfg.metric)?;
            report.push_output("translation_length", Value::Real(sample.translation_length));
            report.push_output("threshold", Value::Real(sample.threshold));
            report.push_output("grid_density", Value::Int(sample.grid_density as i64));
            report.push_output("witness_count", Value::Int(sample.witnesses.len() as i64));
            report.push_output("witnesses", point_rows(&sample.witnesses));
            report.push_residual(
                "best_excess_over_tau",
                sample.best_displacement - sample.translation_length,
            );
            report.push_verdict("nonempty", !sample.witnesses.is_empty());
        }
        CommandSpec::Mr { group, r } => {
            let g = group_of(scene, group)?;
            let points = m_r_sample(g, *r, &cfg.metric)?;
            report.push_output("r", Value::Real(*r));
            report.push_output("count", Value::Int(points.len() as i64));
            report.push_output("points", point_rows(&points));
        }
        CommandSpec::HullCheck { group, r } => {
            let g = group_of(scene, group)?;
            let check = hull_inflation_check(g, *r, &cfg.metric)?;
            report.push_output("r", Value::Real(check.r));
            report.push_output("bound", Value::Real(check.bound));
            report.push_output("worst_displacement", Value::Real(check.worst_displacement));
            report.push_output("worst_ratio", Value::Real(check.worst_ratio));
            report.push_output("hull_samples", Value::Int(check.hull_samples as i64));
            report.push_verdict("within_bound", check.pass);
            report.push_verdict("vacuous", check.vacuous);
        }
        CommandSpec::Com { points, subset } => {
            let mut k: Vec<ProjectivePoint> = points
                .iter()
                .enumerate()
                .map(|(i, coords)| point_from(scene, coords, &format!("--points[{i}]")))
                .collect::<Result<_>>()?;
            if let Some(name) = subset {
                let s = scene.subsets.get(name).ok_or_else(|| {
                    CoreError::ValidationError(format!("scene has no subset named `{name}`"))
                })?;
                k.extend(crate::metric::subset_metric_samples(
                    domain,
                    s,
                    cfg.metric.com_samples,
                    cfg.metric.rng_seed,
                )?);
            }
            if k.is_empty() {
                return Err(CoreError::EmptyInput {
                    context: "center of mass needs points or a subset",
                });
            }
            let com = center_of_mass(domain, &k, &cfg.metric)?;
            report.push_output("point", Value::RealArray(com.rep().iter().cloned().collect()));
            let hull = ConvexSubset::hull(domain.clone(), &k)?;
            report.push_verdict("in_hull", hull.contains(&com));
        }
        CommandSpec::Orbit { group, x, radius } => {
            let g = group_of(scene, group)?;
            let base = match x {
                Some(coords) => point_from(scene, coords, "--x")?,
                None => domain.interior_point().clone(),
            };
            let sample = orbit(g, &base, *radius, cfg.accumulation_band)?;
            report.push_output("radius", Value::Int(*radius as i64));
            report.push_output("count", Value::Int(sample.points.len() as i64));
            report.push_output("points", point_rows(&sample.points));
            report.push_output(
                "boundary_accumulation",
                point_rows(&sample.boundary_accumulation),
            );
        }
        CommandSpec::LimitSet {
            group,
            radius,
            base_points,
        } => {
            let g = group_of(scene, group)?;
            let mut bases = vec![domain.interior_point().clone()];
            bases.extend(crate::sampling::domain_grid(
                domain,
                base_points.saturating_sub(1),
                cfg.metric.rng_seed,
                1e-3,
            ));
            let mut accumulation: Vec<ProjectivePoint> = Vec::new();
            for base in &bases {
                let sample = orbit(g, base, *radius, cfg.accumulation_band)?;
                for p in sample.boundary_accumulation {
                    if !accumulation.iter().any(|q| q.approx_eq(&p, 1e-9)) {
                        accumulation.push(p);
                    }
                }
            }
            report.push_output("base_points", point_rows(&bases));
            report.push_output("count", Value::Int(accumulation.len() as i64));
            report.push_output("points", point_rows(&accumulation));
            let hull_dim = if accumulation.is_empty() {
                 0
            } else {
                let cols: Vec<DVector<f64>> =
                    accumulation.iter().map(|p| p.rep().clone()).collect();
                crate::domain::orthonormal_span(&cols).ncols() - 1
            };
            report.push_output("hull_span_dim", Value::Int(hull_dim as i64));
            report.push_verdict(
                "full_dimension",
                hull_dim + 1 == domain.ambient_dim(),
            );
        }
        CommandSpec::FaceDynamics {
            group,
            element,
            power,
            x,
        } => {
            let g = group_of(scene, group)?;
            let map = element_of(g, *element)?;
            let base = match x {
                Some(coords) => point_from(scene, coords, "--x")?,
                None => domain.interior_point().clone(),
            };
            let seq = map.power_sequence(*power)?;
            let inv_seq = map.inverse()?.power_sequence(*power)?;
            let check =
                face_dynamics_check(domain, g.invariant_subset(), &seq, Some(&inv_seq), &base)?;
            let t = check.limit_class.matrix();
            report.push_output(
                "limit_matrix",
                Value::Matrix {
                    rows: t.nrows(),
                    cols: t.ncols(),
                    data: t.transpose().iter().cloned().collect(),
                },
            );
            report.push_output("limit_rank", Value::Int(check.limit_class.rank() as i64));
            report.push_output("face_dim", Value::Int(check.face_dim as i64));
            report.push_output(
                "forward_point",
                Value::RealArray(check.forward_point.rep().iter().cloned().collect()),
            );
            report.push_output(
                "backward_point",
                Value::RealArray(check.backward_point.rep().iter().cloned().collect()),
            );
            report.push_residual("limit_residual", check.limit_residual);
            report.push_residual("image_in_face_span", check.image_in_face_span);
            report.push_residual("backward_in_kernel", check.backward_in_kernel);
            if let Some(r) = check.subset_image_residual {
                report.push_residual("subset_image_residual", r);
            }
            report.push_verdict("kernel_misses_domain", check.kernel_misses_domain);
        }
        CommandSpec::Flat { group } => {
            let g = group_of(scene, group)?;
            let flat = flat_torus_report(g, &cfg.metric)?;
            report.push_output("dim", Value::Int(flat.simplex.dim() as i64));
            report.push_output("rank", Value::Int(flat.rank as i64));
            report.push_verdict("cocompact", flat.cocompact);
            report.push_output("vertices", point_rows(flat.simplex.vertices()));
            report.push_output(
                "lattice_basis",
                Value::PointList(flat.lattice_basis.clone()),
            );
            report.push_output(
                "fixed_points_used",
                point_rows(&flat.fixed_points_used),
            );
            report.push_output(
                "min_set_witness_count",
                Value::Int(flat.min_set_witnesses.len() as i64),
            );
            for (k, v) in &flat.diagnostics {
                report.push_residual(k, *v);
            }
        }
        CommandSpec::Verify => {
            let verdicts = crate::verify::run_property_suite(scene, &cfg)?;
            for v in &verdicts {
                report.push_verdict(&v.name, v.pass);
                report.push_residual(&format!("{}_worst", v.name), v.worst_residual);
            }
        }
    }
    Ok(report)
}

/// Parses a command name and raw key/value arguments into a spec.
pub fn command_from_args(
    name: &str,
    args: &BTreeMap<String, String>,
) -> Result<CommandSpec> {
    let parse_point = |key: &str| -> Result<Vec<f64>> {
        let raw = args
            .get(key)
            .ok_or_else(|| CoreError::ValidationError(format!("missing --{key}")))?;
        parse_reals(raw)
    };
    let parse_opt_point = |key: &str| -> Result<Option<Vec<f64>>> {
        match args.get(key) {
            None => Ok(None),
            Some(raw) => Ok(Some(parse_reals(raw)?)),
        }
    };
    let parse_group = || -> Result<String> {
        args.get("group")
            .cloned()
            .ok_or_else(|| CoreError::ValidationError("missing --group".into()))
    };
    let parse_usize = |key: &str, default: usize| -> Result<usize> {
        match args.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CoreError::ValidationError(format!("invalid --{key}: {raw}"))),
        }
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        let raw = args
            .get(key)
            .ok_or_else(|| CoreError::ValidationError(format!("missing --{key}")))?;
        raw.parse()
            .map_err(|_| CoreError::ValidationError(format!("invalid --{key}: {raw}")))
    };
    match name {
        "dist" => Ok(CommandSpec::Dist {
            x: parse_point("x")?,
            y: parse_point("y")?,
        }),
        "geodesic" => Ok(CommandSpec::Geodesic {
            x: parse_point("x")?,
            y: parse_point("y")?,
            t: parse_f64("t")?,
        }),
        "tau" => Ok(CommandSpec::Tau {
            group: parse_group()?,
        }),
        "displacement" => Ok(CommandSpec::Displacement {
            group: parse_group()?,
            element: parse_usize("element", 0)?,
            x: parse_point("x")?,
        }),
        "minset" => Ok(CommandSpec::MinSet {
            group: parse_group()?,
            element: parse_usize("element", 0)?,
        }),
        "mr" => Ok(CommandSpec::Mr {
            group: parse_group()?,
            r: parse_f64("r")?,
        }),
        "hull-check" => Ok(CommandSpec::HullCheck {
            group: parse_group()?,
            r: parse_f64("r")?,
        }),
        "com" => {
            let points = match args.get("points") {
                None => Vec::new(),
                Some(raw) => raw
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(parse_reals)
                    .collect::<Result<_>>()?,
            };
            Ok(CommandSpec::Com {
                points,
                subset: args.get("subset").cloned(),
            })
        }
        "orbit" => Ok(CommandSpec::Orbit {
            group: parse_group()?,
            x: parse_opt_point("x")?,
            radius: parse_usize("radius", 5)?,
        }),
        "limitset" => Ok(CommandSpec::LimitSet {
            group: parse_group()?,
            radius: parse_usize("radius", 12)?,
            base_points: parse_usize("bases", 3)?,
        }),
        "face-dynamics" => Ok(CommandSpec::FaceDynamics {
            group: parse_group()?,
            element: parse_usize("element", 0)?,
            power: parse_usize("power", 40)? as u32,
            x: parse_opt_point("x")?,
        }),
        "flat" => Ok(CommandSpec::Flat {
            group: parse_group()?,
        }),
        "verify" => Ok(CommandSpec::Verify),
        other => Err(CoreError::UnknownCommand(other.to_string())),
    }
}

fn parse_reals(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::ParseError(format!("invalid real `{s}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_3_2_expands_to_lattice_scene() {
        let scene = parse_scene_text("template = \"example-3.2\"\n").unwrap();
        assert_eq!(scene.domain.vertices().len(), 3);
        let group = &scene.groups["A"];
        assert_eq!(group.generators().len(), 3);
        assert!(group.commuting());
        assert!(group.invariant_subset().is_some());
    }

    #[test]
    fn template_dimension_parameter() {
        let text = "template = \"example-3.2\"\n[template_params]\nd = 3\n";
        let scene = parse_scene_text(text).unwrap();
        assert_eq!(scene.domain.ambient_dim(), 4);
        assert_eq!(scene.groups["A"].generators().len(), 4);
    }

    #[test]
    fn malformed_matrix_is_a_parse_error() {
        let text = r#"
[domain]
kind = "polytope"
vertices = [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]

[groups.A]
matrices = [[1.0, 0.0, 0.0, 1.0]]
"#;
        let err = parse_scene_text(text).unwrap_err();
        assert!(matches!(err, CoreError::ParseError(_)), "{err}");
    }

    #[test]
    fn non_commuting_assertion_is_rejected() {
        let text = r#"
[domain]
kind = "polytope"
vertices = [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]

[groups.A]
commuting = true
matrices = [
  [0.0,1.0,0.0, 1.0,0.0,0.0, 0.0,0.0,1.0],
  [1.0,0.0,0.0, 0.0,0.0,1.0, 0.0,1.0,0.0],
]
"#;
        let err = parse_scene_text(text).unwrap_err();
        match err {
            CoreError::ValidationError(msg) => {
                assert!(msg.contains("commutator"), "{msg}")
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn dist_command_on_simplex_template() {
        let scene = parse_scene_text("template = \"example-3.1\"\n").unwrap();
        let spec = CommandSpec::Dist {
            x: vec![1.0, 1.0, 1.0],
            y: vec![1.0, 2.0, 4.0],
        };
        let report = run_command(&scene, &spec, None).unwrap();
        let value = match &report.outputs[0].1 {
            Value::Real(x) => *x,
            other => panic!("unexpected output {other:?}"),
        };
        assert!((value - 2.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn flat_command_on_templates() {
        let scene = parse_scene_text("template = \"example-3.2\"\n").unwrap();
        let report = run_command(&scene, &CommandSpec::Flat { group: "A".into() }, None).unwrap();
        assert!(!report.any_failed_verdict());

        let text = "template = \"example-3.3\"\n[template_params]\nexponents = [[0.0, 1.0, 2.0]]\n";
        let scene = parse_scene_text(text).unwrap();
        let report = run_command(&scene, &CommandSpec::Flat { group: "A".into() }, None).unwrap();
        // rank 1 < dim 2: the cocompact verdict fails by design.
        assert!(report.any_failed_verdict());
    }

    #[test]
    fn scene_roundtrip_parses_identically() {
        let text = "template = \"example-3.2\"\n";
        let scene = parse_scene_text(text).unwrap();
        let emitted = emit_scene(&scene.file).unwrap();
        let again = parse_scene_text(&emitted).unwrap();
        assert_eq!(scene.domain.vertices().len(), again.domain.vertices().len());
        assert_eq!(scene.groups.len(), again.groups.len());
        let emitted_again = emit_scene(&again.file).unwrap();
        assert_eq!(emitted, emitted_again);
    }

    #[test]
    fn reports_are_deterministic() {
        let scene = parse_scene_text("template = \"example-3.1\"\n").unwrap();
        let spec = CommandSpec::MinSet {
            group: "A".into(),
            element: 0,
        };
        let a = run_command(&scene, &spec, None).unwrap().to_structured_text();
        let b = run_command(&scene, &spec, None).unwrap().to_structured_text();
        assert_eq!(a, b);
    }
}
