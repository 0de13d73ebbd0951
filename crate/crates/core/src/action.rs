//! Automorphism verification, translation lengths, displacement
//! functions, minimal sets and M_r sets, orbits with boundary
//! accumulation, the doubled-domain construction, and endomorphism-limit
//! face dynamics.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::domain::{ConvexDomain, ConvexSubset, Location};
use crate::error::CoreError;
use crate::feasibility::{FeasibilityProblem, Sense};
use crate::metric::{golden_section_min, hilbert_distance, MetricConfig};
use crate::projective::{projective_limit, EndomorphismClass, ProjectiveMap, ProjectivePoint};
use crate::sampling::domain_grid;
use crate::tol;
use crate::Result;

/// A finite family of generators acting on a domain, with an optional
/// invariant convex subset (the C of a naive convex co-compact triple).
#[derive(Debug, Clone)]
pub struct GroupSpec {
    ambient: Arc<ConvexDomain>,
    generators: Vec<ProjectiveMap>,
    labels: Vec<String>,
    commuting: bool,
    invariant_subset: Option<ConvexSubset>,
}

impl GroupSpec {
    /// Validates that every generator is an automorphism of the domain
    /// and records whether the family commutes (all pairwise commutators
    /// scalar within tolerance).
    pub fn new(
        ambient: Arc<ConvexDomain>,
        generators: Vec<ProjectiveMap>,
        labels: Vec<String>,
        invariant_subset: Option<ConvexSubset>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(CoreError::EmptyInput {
                context: "group needs at least one generator",
            });
        }
        let labels = if labels.is_empty() {
            (0..generators.len()).map(|i| format!("g{i}")).collect()
        } else if labels.len() == generators.len() {
            labels
        } else {
            return Err(CoreError::ValidationError(format!(
                "{} labels for {} generators",
                labels.len(),
                generators.len()
            )));
        };
        for (g, label) in generators.iter().zip(&labels) {
            if g.dim() != ambient.ambient_dim() {
                return Err(CoreError::DimensionMismatch {
                    expected: ambient.ambient_dim(),
                    got: g.dim(),
                });
            }
            if !is_automorphism(&ambient, g) {
                return Err(CoreError::ValidationError(format!(
                    "generator `{label}` is not an automorphism of the domain"
                )));
            }
        }
        let commuting = commutation_residual(&generators) <= tol::COMMUTATOR_TOL;
        Ok(Self {
            ambient,
            generators,
            labels,
            commuting,
            invariant_subset,
        })
    }

    pub fn ambient(&self) -> &Arc<ConvexDomain> {
        &self.ambient
    }

    pub fn generators(&self) -> &[ProjectiveMap] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn commuting(&self) -> bool {
        self.commuting
    }

    pub fn invariant_subset(&self) -> Option<&ConvexSubset> {
        self.invariant_subset.as_ref()
    }
}

/// Largest pairwise commutator residual of a generator family.
pub fn commutation_residual(generators: &[ProjectiveMap]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..generators.len() {
        for j in (i + 1)..generators.len() {
            worst = worst.max(generators[i].commutator_residual(&generators[j]));
        }
    }
    worst
}

/// Structural automorphism test: a polytope is preserved iff the vertex
/// set is permuted; an ellipsoid iff the quadric is transported to a
/// multiple of itself with an interior point staying interior.
pub fn is_automorphism(domain: &ConvexDomain, g: &ProjectiveMap) -> bool {
    match domain.quadric() {
        None => {
            let vertices = domain.vertices();
            let images: Vec<ProjectivePoint> = vertices.iter().map(|v| g.apply(v)).collect();
            images.iter().all(|img| {
                vertices
                    .iter()
                    .any(|v| v.approx_eq(img, tol::POINT_EQ * 10.0))
            })
        }
        Some(q) => {
            let Some(ginv) = g.lift().clone().try_inverse() else {
                return false;
            };
            let transported = ginv.transpose() * q * &ginv;
            let s = transported.dot(q) / q.norm_squared();
            let residual = (&transported - q * s).norm() / transported.norm();
            if residual > 1e-8 {
                return false;
            }
            let image = g.apply(domain.interior_point());
            domain.contains(&image).location == Location::Interior
        }
    }
}

/// Minimal translation length from the eigenvalue moduli:
/// `(1/2) log(lambda_1 / lambda_d)`.
pub fn translation_length(g: &ProjectiveMap) -> f64 {
    let moduli = g.eigenvalue_moduli();
    let top = moduli[0];
    let bottom = moduli[moduli.len() - 1];
    0.5 * (top / bottom).ln()
}

/// Hilbert displacement of a point under an automorphism.
pub fn displacement(domain: &ConvexDomain, g: &ProjectiveMap, x: &ProjectivePoint) -> Result<f64> {
    hilbert_distance(domain, x, &g.apply(x))
}

/// Sampled minimal set of one automorphism.
#[derive(Debug, Clone)]
pub struct MinSetSample {
    pub witnesses: Vec<ProjectivePoint>,
    pub translation_length: f64,
    pub threshold: f64,
    pub grid_density: usize,
    /// Smallest sampled displacement after refinement.
    pub best_displacement: f64,
}

/// Samples points whose displacement is within `min_set_epsilon` of the
/// translation length, refining locally around the best grid points.
pub fn min_set_sample(
    domain: &ConvexDomain,
    g: &ProjectiveMap,
    cfg: &MetricConfig,
) -> Result<MinSetSample> {
    let tau = translation_length(g);
    let threshold = tau + cfg.min_set_epsilon;
    let grid = domain_grid(domain, cfg.grid_samples, cfg.rng_seed, 0.0);
    let mut scored: Vec<(f64, ProjectivePoint)> = Vec::new();
    for p in grid {
        let d = displacement(domain, g, &p)?;
        scored.push((d, p));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite displacement"));
    let mut witnesses: Vec<ProjectivePoint> = scored
        .iter()
        .take_while(|(d, _)| *d <= threshold)
        .map(|(_, p)| p.clone())
        .collect();
    let mut best = scored.first().map(|(d, _)| *d).unwrap_or(f64::MAX);
    // Local refinement from the best grid points: descend along segments
    // toward their images and toward the domain center.
    let chart = domain.chart();
    for (_, p) in scored.iter().take(6) {
        let mut current = p.clone();
        let mut value = displacement(domain, g, &current)?;
        for _ in 0..25 {
            let image = g.apply(&current);
            let targets = [image, domain.interior_point().clone()];
            let mut improved = false;
            for target in &targets {
                if current.approx_eq(target, 1e-12) {
                    continue;
                }
                let (Some(cy), Some(ty)) = (chart.coords(&current), chart.coords(target)) else {
                    continue;
                };
                let eval = |t: f64| -> f64 {
                    let y = &cy * (1.0 - t) + &ty * t;
                    match ProjectivePoint::new(chart.lift(&y)) {
                        Ok(q) if domain.contains(&q).location == Location::Interior => {
                            displacement(domain, g, &q).unwrap_or(f64::MAX)
                        }
                        _ => f64::MAX,
                    }
                };
                let (t_best, v_best) = golden_section_min(eval, 0.0, 0.9, 40);
                if v_best < value - 1e-14 {
                    let y = &cy * (1.0 - t_best) + &ty * t_best;
                    current = ProjectivePoint::new(chart.lift(&y))?;
                    value = v_best;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        best = best.min(value);
        if value <= threshold && !witnesses.iter().any(|w| w.approx_eq(&current, 1e-9)) {
            witnesses.push(current);
        }
    }
    Ok(MinSetSample {
        witnesses,
        translation_length: tau,
        threshold,
        grid_density: cfg.grid_samples,
        best_displacement: best,
    })
}

/// Sampled points of the invariant subset displaced at most `r` by every
/// generator.
pub fn m_r_sample(triple: &GroupSpec, r: f64, cfg: &MetricConfig) -> Result<Vec<ProjectivePoint>> {
    let subset = triple.invariant_subset().ok_or(CoreError::EmptySubset {
        context: "M_r sampling needs an invariant subset",
    })?;
    let samples = crate::metric::subset_metric_samples(
        triple.ambient(),
        subset,
        cfg.grid_samples.clamp(cfg.hausdorff_samples, 512),
        cfg.rng_seed,
    )?;
    let mut out = Vec::new();
    for p in samples {
        let mut ok = true;
        for g in triple.generators() {
            if displacement(triple.ambient(), g, &p)? > r {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(p);
        }
    }
    Ok(out)
}

/// Result of re-sampling the hull of an M_r sample against the inflated
/// bound `2^(d-1) r`.
#[derive(Debug, Clone)]
pub struct InflationReport {
    pub r: f64,
    pub bound: f64,
    pub worst_displacement: f64,
    pub worst_ratio: f64,
    pub hull_samples: usize,
    pub pass: bool,
    /// True when the M_r sample was empty and the check is vacuous.
    pub vacuous: bool,
}

/// Takes the hull of an M_r sample, re-samples it, and verifies every
/// hull sample lies in M_{2^(d-1) r}.
pub fn hull_inflation_check(
    triple: &GroupSpec,
    r: f64,
    cfg: &MetricConfig,
) -> Result<InflationReport> {
    let d = triple.ambient().ambient_dim();
    let bound = 2.0_f64.powi(d as i32 - 1) * r;
    let base = m_r_sample(triple, r, cfg)?;
    if base.is_empty() {
        return Ok(InflationReport {
            r,
            bound,
            worst_displacement: 0.0,
            worst_ratio: 0.0,
            hull_samples: 0,
            pass: true,
            vacuous: true,
        });
    }
    let hull = ConvexSubset::hull(triple.ambient().clone(), &base)?;
    let hull_samples = crate::metric::subset_metric_samples(
        triple.ambient(),
        &hull,
        cfg.hausdorff_samples.max(32),
        cfg.rng_seed,
    )?;
    let mut worst = 0.0_f64;
    for p in &hull_samples {
        for g in triple.generators() {
            worst = worst.max(displacement(triple.ambient(), g, p)?);
        }
    }
    Ok(InflationReport {
        r,
        bound,
        worst_displacement: worst,
        worst_ratio: worst / r,
        hull_samples: hull_samples.len(),
        pass: worst <= bound + 1e-6,
        vacuous: false,
    })
}

/// Orbit of a base point under words in the generators and their
/// inverses, deduplicated by quantized canonical representatives.
#[derive(Debug, Clone)]
pub struct OrbitSample {
    pub base_point: ProjectivePoint,
    pub word_radius: usize,
    pub points: Vec<ProjectivePoint>,
    pub boundary_accumulation: Vec<ProjectivePoint>,
}

/// All distinct images of `p` under words of length at most
/// `word_radius`; images within `accumulation_band` of the boundary are
/// reported separately.
pub fn orbit(
    triple: &GroupSpec,
    p: &ProjectivePoint,
    word_radius: usize,
    accumulation_band: f64,
) -> Result<OrbitSample> {
    let domain = triple.ambient();
    if domain.contains(p).location != Location::Interior {
        return Err(CoreError::NotInterior);
    }
    let mut alphabet: Vec<DMatrix<f64>> = Vec::new();
    for g in triple.generators() {
        alphabet.push(g.lift().clone());
        alphabet.push(g.inverse()?.lift().clone());
    }
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut points: Vec<ProjectivePoint> = Vec::new();
    let mut frontier: Vec<DVector<f64>> = Vec::new();

    seen.insert(p.quantized_key(tol::ORBIT_QUANT), 0);
    points.push(p.clone());
    frontier.push(p.rep().clone());

    for _ in 0..word_radius {
        let mut next_frontier = Vec::new();
        for rep in &frontier {
            for letter in &alphabet {
                let mut image = letter * rep;
                let scale = image.amax();
                if !scale.is_finite() || scale > tol::ORBIT_BLOWUP || scale < 1e-300 {
                    return Err(CoreError::OrbitBlowup { magnitude: scale });
                }
                image /= scale;
                let point = ProjectivePoint::new(image.clone())?;
                let key = point.quantized_key(tol::ORBIT_QUANT);
                if !seen.contains_key(&key) {
                    seen.insert(key, points.len());
                    points.push(point);
                    next_frontier.push(image);
                }
            }
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }

    let boundary_accumulation: Vec<ProjectivePoint> = points
        .iter()
        .filter(|q| domain.boundary_margin(q).abs() <= accumulation_band)
        .cloned()
        .collect();
    Ok(OrbitSample {
        base_point: p.clone(),
        word_radius,
        points,
        boundary_accumulation,
    })
}

/// The doubled-domain construction: from a polytope domain and a group
/// acting on it, build the product domain in twice the dimensions, the
/// diagonal copy of the original, and the block-diagonal generators.
pub fn build_product_example(
    domain: &ConvexDomain,
    group: &GroupSpec,
) -> Result<(Arc<ConvexDomain>, ConvexSubset, GroupSpec)> {
    if !domain.is_polytope() {
        return Err(CoreError::NotPolytope);
    }
    let d = domain.ambient_dim();
    let cone = domain.vertex_lifts();
    let mut lifts: Vec<DVector<f64>> = Vec::with_capacity(cone.len() * 2);
    for v in cone {
        let mut left = DVector::zeros(2 * d);
        let mut right = DVector::zeros(2 * d);
        for i in 0..d {
            left[i] = v[i];
            right[d + i] = v[i];
        }
        lifts.push(left);
        lifts.push(right);
    }
    let product = Arc::new(ConvexDomain::polytope(lifts)?);
    let diagonal_gens: Vec<ProjectivePoint> = cone
        .iter()
        .map(|v| {
            let mut w = DVector::zeros(2 * d);
            for i in 0..d {
                w[i] = v[i];
                w[d + i] = v[i];
            }
            ProjectivePoint::new(w)
        })
        .collect::<Result<_>>()?;
    let diagonal = ConvexSubset::hull(product.clone(), &diagonal_gens)?;
    let block_gens: Vec<ProjectiveMap> = group
        .generators()
        .iter()
        .map(|g| {
            let mut m = DMatrix::zeros(2 * d, 2 * d);
            for r in 0..d {
                for c in 0..d {
                    m[(r, c)] = g.lift()[(r, c)];
                    m[(d + r, d + c)] = g.lift()[(r, c)];
                }
            }
            ProjectiveMap::new(m)
        })
        .collect::<Result<_>>()?;
    let labels = group.labels().iter().map(|l| format!("{l}+{l}")).collect();
    let block_group = GroupSpec::new(product.clone(), block_gens, labels, Some(diagonal.clone()))?;
    Ok((product, diagonal, block_group))
}

/// Verdicts and residuals of the endomorphism-limit face dynamics check.
#[derive(Debug, Clone)]
pub struct FaceDynamicsReport {
    pub limit_class: EndomorphismClass,
    pub limit_residual: f64,
    pub forward_point: ProjectivePoint,
    pub backward_point: ProjectivePoint,
    /// Largest distance from an image basis vector to the face span.
    pub image_in_face_span: f64,
    /// Whether the projectivized kernel misses the open domain.
    pub kernel_misses_domain: bool,
    /// Distance from the backward limit point to the kernel.
    pub backward_in_kernel: f64,
    /// When an invariant subset is supplied: largest face/ideal-boundary
    /// violation among images of subset samples.
    pub subset_image_residual: Option<f64>,
    pub face_dim: usize,
}

/// Runs the dynamics checks for a sequence converging in the
/// endomorphism space: the limit image lies in the span of the face of
/// the forward limit point, the kernel misses the domain, and the
/// backward limit point lies in the kernel.
pub fn face_dynamics_check(
    domain: &ConvexDomain,
    subset: Option<&ConvexSubset>,
    g_seq: &[ProjectiveMap],
    inverse_seq: Option<&[ProjectiveMap]>,
    p0: &ProjectivePoint,
) -> Result<FaceDynamicsReport> {
    if g_seq.is_empty() {
        return Err(CoreError::EmptyInput {
            context: "face dynamics needs a map sequence",
        });
    }
    if domain.contains(p0).location != Location::Interior {
        return Err(CoreError::NotInterior);
    }
    let limit = projective_limit(g_seq)?;
    let last = g_seq.last().expect("nonempty");
    let forward = last.apply(p0);
    if domain.contains(&forward).location == Location::Interior
        && domain.boundary_margin(&forward) > 1e-6
    {
        return Err(CoreError::NonBoundaryLimit);
    }
    let inverses: Vec<ProjectiveMap> = match inverse_seq {
        Some(seq) => seq.to_vec(),
        None => g_seq
            .iter()
            .map(|g| g.inverse())
            .collect::<Result<Vec<_>>>()?,
    };
    let backward = inverses.last().expect("nonempty").apply(p0);

    let face = domain.open_face(&snap_to_boundary(domain, &forward))?;
    let image = limit.class.image_basis();
    let mut image_residual = 0.0_f64;
    for c in 0..image.ncols() {
        image_residual = image_residual.max(face.span_distance(&image.column(c).into_owned()));
    }

    let kernel_misses = !kernel_meets_domain(domain, limit.class.kernel_basis());
    let backward_in_kernel = limit.class.kernel_distance(&backward);

    let subset_image_residual = match subset {
        None => None,
        Some(c) => {
            let samples = crate::metric::subset_metric_samples(domain, c, 24, 11)?;
            let mut worst = 0.0_f64;
            for s in &samples {
                let image_pt = limit.class.apply(s)?;
                // Image must land in the face of the forward limit and on
                // the ideal boundary of the subset: on the domain boundary
                // and inside the subset's hull.
                let in_face = face.contains_point(domain, &image_pt)
                    || image_pt.approx_eq(&face.base, tol::POINT_EQ * 10.0);
                let margin = domain.boundary_margin(&image_pt).abs();
                let in_subset = c.contains(&image_pt);
                let violation = if in_face && in_subset { margin } else { 1.0 };
                worst = worst.max(violation);
            }
            Some(worst)
        }
    };

    Ok(FaceDynamicsReport {
        limit_residual: limit.residual,
        forward_point: forward,
        backward_point: backward,
        image_in_face_span: image_residual,
        kernel_misses_domain: kernel_misses,
        backward_in_kernel,
        subset_image_residual,
        face_dim: face.dim,
        limit_class: limit.class,
    })
}

/// Walks from the domain center through a near-boundary point to land in
/// the boundary classification band.
fn snap_to_boundary(domain: &ConvexDomain, p: &ProjectivePoint) -> ProjectivePoint {
    if domain.contains(p).location == Location::Boundary {
        return p.clone();
    }
    let chart = domain.chart();
    let (Some(iy), Some(py)) = (chart.coords(domain.interior_point()), chart.coords(p)) else {
        return p.clone();
    };
    let point_at = |t: f64| -> ProjectivePoint {
        let y = &iy * (1.0 - t) + &py * t;
        ProjectivePoint::new(chart.lift(&y)).expect("nonzero")
    };
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..60 {
        if domain.contains(&point_at(hi)).location == Location::Outside {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match domain.contains(&point_at(mid)).location {
            Location::Outside => hi = mid,
            Location::Boundary => return point_at(mid),
            Location::Interior => lo = mid,
        }
    }
    point_at(0.5 * (lo + hi))
}

/// Whether the projectivized column span of `kernel` meets the open
/// domain.
pub fn kernel_meets_domain(domain: &ConvexDomain, kernel: &DMatrix<f64>) -> bool {
    subspace_interior_witness(domain, kernel).is_some()
}

/// An interior point of the domain lying in the projectivized column
/// span of `basis`, when one exists: linear feasibility for polytopes,
/// quadric minimization over the subspace-chart slice for ellipsoids.
pub fn subspace_interior_witness(
    domain: &ConvexDomain,
    basis: &DMatrix<f64>,
) -> Option<ProjectivePoint> {
    let k = basis.ncols();
    if k == 0 {
        return None;
    }
    let lift = |z: &DVector<f64>| -> Option<ProjectivePoint> {
        let v = basis * z;
        let p = ProjectivePoint::new(v).ok()?;
        (domain.contains(&p).location == Location::Interior).then_some(p)
    };
    match domain.quadric() {
        None => {
            let mut problem = FeasibilityProblem::new(k);
            for i in 0..k {
                problem.set_free(i);
            }
            // chi(K z) = 1 and facet margins strictly positive.
            let chi = domain.chart().functional();
            let chi_row: Vec<f64> = (0..k)
                .map(|c| chi.dot(&basis.column(c).into_owned()))
                .collect();
            problem.add_row(chi_row, Sense::Eq, 1.0);
            for facet in domain.facets() {
                let row: Vec<f64> = (0..k)
                    .map(|c| facet.functional.dot(&basis.column(c).into_owned()))
                    .collect();
                problem.add_row(row, Sense::Ge, tol::INTERIOR_MARGIN);
            }
            let z = problem.solve()?;
            lift(&DVector::from_column_slice(&z))
        }
        Some(q) => {
            // Minimize z' (K' Q K) z over the affine slice chi(K z) = 1;
            // the slice meets the domain iff the minimum is negative.
            let kq = basis.transpose() * q * basis;
            let chi = domain.chart().functional();
            let c: DVector<f64> =
                DVector::from_iterator(k, (0..k).map(|i| chi.dot(&basis.column(i).into_owned())));
            if c.norm() < 1e-12 {
                return None;
            }
            let z0 = &c / c.norm_squared();
            if k == 1 {
                return ((&kq * &z0).dot(&z0) < 0.0).then(|| lift(&z0)).flatten();
            }
            let n_basis = crate::domain::orthonormal_complement(&(&c / c.norm()));
            let a = n_basis.transpose() * &kq * &n_basis;
            let b = n_basis.transpose() * (&kq * &z0);
            let value0 = (&kq * &z0).dot(&z0);
            let a_sym = (&a + a.transpose()) * 0.5;
            match a_sym.clone().cholesky() {
                None => {
                    // Indefinite slice: walk along the most negative
                    // curvature direction until inside.
                    let eig = a_sym.symmetric_eigen();
                    let mut best = None;
                    let mut min_val = f64::MAX;
                    for i in 0..eig.eigenvalues.len() {
                        if eig.eigenvalues[i] < min_val {
                            min_val = eig.eigenvalues[i];
                            best = Some(eig.eigenvectors.column(i).into_owned());
                        }
                    }
                    let dir = best?;
                    for t in [1.0, 2.0, 4.0, 8.0, 16.0, 0.5, 0.25] {
                        let z = &z0 + &n_basis * (&dir * t);
                        if let Some(p) = lift(&z) {
                            return Some(p);
                        }
                    }
                    None
                }
                Some(chol) => {
                    let w = chol.solve(&(-&b));
                    let min_value = (&a_sym * &w).dot(&w) + 2.0 * b.dot(&w) + value0;
                    if min_value < 0.0 {
                        lift(&(&z0 + &n_basis * w))
                    } else {
                        None
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::build_standard_simplex;

    fn pt(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_slice(coords).unwrap()
    }

    fn triangle() -> Arc<ConvexDomain> {
        Arc::new(build_standard_simplex(2).unwrap())
    }

    #[test]
    fn diagonal_maps_preserve_the_simplex() {
        let tri = triangle();
        let g = ProjectiveMap::diagonal(&[2.0, 1.0, 1.0]).unwrap();
        assert!(is_automorphism(&tri, &g));
    }

    #[test]
    fn square_rotation_is_automorphism() {
        let sq = Arc::new(
            ConvexDomain::polytope(vec![
                DVector::from_column_slice(&[1.0, 1.0, 1.0]),
                DVector::from_column_slice(&[-1.0, 1.0, 1.0]),
                DVector::from_column_slice(&[-1.0, -1.0, 1.0]),
                DVector::from_column_slice(&[1.0, -1.0, 1.0]),
            ])
            .unwrap(),
        );
        let rot =
            ProjectiveMap::from_rows(3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(is_automorphism(&sq, &rot));
    }

    #[test]
    fn generic_map_is_not_automorphism() {
        let tri = triangle();
        let g =
            ProjectiveMap::from_rows(3, &[1.0, 0.3, 0.0, 0.0, 1.0, 0.4, 0.2, 0.0, 1.0]).unwrap();
        assert!(!is_automorphism(&tri, &g));
    }

    #[test]
    fn translation_length_values() {
        assert_eq!(translation_length(&ProjectiveMap::identity(3)), 0.0);
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        assert!((translation_length(&g) - 2.0_f64.ln()).abs() < 1e-12);
        let rot = ProjectiveMap::from_rows(2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        assert!(translation_length(&rot).abs() < 1e-12);
    }

    #[test]
    fn displacement_fixed_point_is_zero() {
        let tri = triangle();
        let g = ProjectiveMap::diagonal(&[2.0, 2.0, 2.0]).unwrap();
        let x = pt(&[1.0, 1.0, 1.0]);
        assert!(displacement(&tri, &g, &x).unwrap() < 1e-12);
    }

    #[test]
    fn displacement_on_simplex_is_constant_and_equals_tau() {
        let tri = triangle();
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let tau = translation_length(&g);
        for coords in [[1.0, 1.0, 1.0], [0.3, 2.0, 1.0], [5.0, 0.2, 0.7]] {
            let d = displacement(&tri, &g, &pt(&coords)).unwrap();
            assert!((d - tau).abs() < 1e-9, "d={d} tau={tau}");
        }
    }

    #[test]
    fn min_set_on_simplex_accepts_all_samples() {
        let tri = triangle();
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let cfg = MetricConfig {
            grid_samples: 200,
            ..MetricConfig::default()
        };
        let sample = min_set_sample(&tri, &g, &cfg).unwrap();
        assert!(
            sample.witnesses.len() >= 200,
            "grid witnesses: {}",
            sample.witnesses.len()
        );
    }

    #[test]
    fn min_set_identity_accepts_everything() {
        let tri = triangle();
        let cfg = MetricConfig {
            grid_samples: 64,
            ..MetricConfig::default()
        };
        let sample = min_set_sample(&tri, &ProjectiveMap::identity(3), &cfg).unwrap();
        assert!(sample.witnesses.len() >= 64);
        assert_eq!(sample.translation_length, 0.0);
    }

    #[test]
    fn hyperbolic_disk_min_set_concentrates_on_axis() {
        let ball = Arc::new(ConvexDomain::unit_ball(3).unwrap());
        // A boost fixing (-1, 0) and (1, 0) on the circle.
        let t = 0.8_f64;
        let boost = ProjectiveMap::from_rows(
            3,
            &[
                t.cosh(),
                0.0,
                t.sinh(),
                0.0,
                1.0,
                0.0,
                t.sinh(),
                0.0,
                t.cosh(),
            ],
        )
        .unwrap();
        assert!(is_automorphism(&ball, &boost));
        let cfg = MetricConfig {
            grid_samples: 3000,
            min_set_epsilon: 1e-6,
            ..MetricConfig::default()
        };
        let sample = min_set_sample(&ball, &boost, &cfg).unwrap();
        assert!(!sample.witnesses.is_empty());
        for w in &sample.witnesses {
            // The axis is the second coordinate's zero set.
            let transverse = w.rep()[1] / w.rep()[2];
            assert!(transverse.abs() < 0.05, "witness off axis: {transverse}");
        }
        assert!((sample.best_displacement - translation_length(&boost)).abs() < 1e-6);
    }

    #[test]
    fn m_r_thresholds_on_simplex() {
        let tri = triangle();
        let vs = tri.vertices().to_vec();
        let whole = ConvexSubset::hull(tri.clone(), &vs).unwrap();
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let tau = translation_length(&g);
        let triple = GroupSpec::new(tri.clone(), vec![g], vec!["a".into()], Some(whole)).unwrap();
        let cfg = MetricConfig::default();
        let below = m_r_sample(&triple, tau - 0.05, &cfg).unwrap();
        assert!(below.is_empty());
        let above = m_r_sample(&triple, tau + 0.05, &cfg).unwrap();
        assert!(!above.is_empty());
    }

    #[test]
    fn m_r_monotone_in_r() {
        let tri = triangle();
        let vs = tri.vertices().to_vec();
        let whole = ConvexSubset::hull(tri.clone(), &vs).unwrap();
        let g1 = ProjectiveMap::diagonal(&[3.0, 1.0, 1.0]).unwrap();
        let g2 = ProjectiveMap::diagonal(&[1.0, 2.0, 1.0]).unwrap();
        let triple = GroupSpec::new(tri.clone(), vec![g1, g2], vec![], Some(whole)).unwrap();
        let cfg = MetricConfig::default();
        let small = m_r_sample(&triple, 0.7, &cfg).unwrap();
        let large = m_r_sample(&triple, 1.2, &cfg).unwrap();
        assert!(small.len() <= large.len());
        for p in &small {
            assert!(large.iter().any(|q| q.approx_eq(p, 1e-12)));
        }
    }

    #[test]
    fn orbit_radius_zero_is_base_point() {
        let tri = triangle();
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let triple = GroupSpec::new(tri.clone(), vec![g], vec![], None).unwrap();
        let sample = orbit(&triple, &pt(&[1.0, 1.0, 1.0]), 0, 1e-4).unwrap();
        assert_eq!(sample.points.len(), 1);
    }

    #[test]
    fn interval_orbit_accumulates_at_both_endpoints() {
        let interval = Arc::new(build_standard_simplex(1).unwrap());
        let g = ProjectiveMap::diagonal(&[4.0, 1.0]).unwrap();
        let triple = GroupSpec::new(interval.clone(), vec![g], vec![], None).unwrap();
        let sample = orbit(&triple, &pt(&[1.0, 1.0]), 20, 1e-4).unwrap();
        // Words of length <= 20 give 41 group elements; points deep in
        // the cusps merge under the quantized dedup.
        assert!(sample.points.len() >= 30 && sample.points.len() <= 41);
        let e1 = pt(&[1.0, 0.0]);
        let e2 = pt(&[0.0, 1.0]);
        let near = |target: &ProjectivePoint| {
            sample
                .boundary_accumulation
                .iter()
                .any(|q| q.canonical_distance(target) < 1e-3)
        };
        assert!(near(&e1), "no accumulation at e1");
        assert!(near(&e2), "no accumulation at e2");
    }

    #[test]
    fn commuting_orbit_count_matches_exponent_lattice() {
        // Integer diagonal lattice on the triangle: orbit points of the
        // barycenter correspond to exponent vectors modulo the diagonal.
        let tri = triangle();
        let e = std::f64::consts::E;
        let gens = vec![
            ProjectiveMap::diagonal(&[e, 1.0, 1.0]).unwrap(),
            ProjectiveMap::diagonal(&[1.0, e, 1.0]).unwrap(),
            ProjectiveMap::diagonal(&[1.0, 1.0, e]).unwrap(),
        ];
        let triple = GroupSpec::new(tri.clone(), gens, vec![], None).unwrap();
        assert!(triple.commuting());
        let radius = 3;
        let sample = orbit(&triple, &pt(&[1.0, 1.0, 1.0]), radius, 1e-6).unwrap();
        // Count exponent vectors (z1,z2,z3) with |z|_1 <= radius, modulo
        // the all-ones direction.
        let r = radius as i64;
        let mut classes = std::collections::HashSet::new();
        for z1 in -r..=r {
            for z2 in -r..=r {
                for z3 in -r..=r {
                    if z1.abs() + z2.abs() + z3.abs() <= r {
                        classes.insert((z2 - z1, z3 - z1));
                    }
                }
            }
        }
        assert_eq!(sample.points.len(), classes.len());
    }

    #[test]
    fn product_construction_shapes() {
        let interval = Arc::new(build_standard_simplex(1).unwrap());
        let g = ProjectiveMap::diagonal(&[2.0, 1.0]).unwrap();
        let group = GroupSpec::new(interval.clone(), vec![g], vec!["a".into()], None).unwrap();
        let (product, diagonal, block) = build_product_example(&interval, &group).unwrap();
        assert_eq!(product.ambient_dim(), 4);
        assert_eq!(product.vertices().len(), 4);
        assert_eq!(diagonal.span_dim(), 1);
        assert!(crate::domain::properly_embedded(&product, &diagonal));
        // Block generators preserve the diagonal.
        let g = &block.generators()[0];
        for gen in diagonal.generators() {
            let image = g.apply(gen);
            assert!(diagonal.contains(&image));
        }
    }

    #[test]
    fn face_dynamics_diagonal_powers_on_triangle() {
        let tri = triangle();
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let seq = g.power_sequence(40).unwrap();
        let inv_seq = g.inverse().unwrap().power_sequence(40).unwrap();
        let report =
            face_dynamics_check(&tri, None, &seq, Some(&inv_seq), &pt(&[1.0, 1.0, 1.0])).unwrap();
        assert!(report.limit_residual < 1e-10);
        assert_eq!(report.limit_class.rank(), 1);
        assert!(report.forward_point.approx_eq(&pt(&[1.0, 0.0, 0.0]), 1e-9));
        assert!(report.backward_point.approx_eq(&pt(&[0.0, 0.0, 1.0]), 1e-9));
        assert!(report.image_in_face_span < 1e-9);
        assert!(report.kernel_misses_domain);
        assert!(report.backward_in_kernel < 1e-9);
        assert_eq!(report.face_dim, 0);
    }

    #[test]
    fn face_dynamics_rejects_interior_limits() {
        let tri = triangle();
        let seq = vec![ProjectiveMap::identity(3); 4];
        let err = face_dynamics_check(&tri, None, &seq, None, &pt(&[1.0, 1.0, 1.0]));
        assert!(matches!(err, Err(CoreError::NonBoundaryLimit)));
    }

    #[test]
    fn face_dynamics_two_dimensional_dominant_space() {
        // Tetrahedron with a repeated top eigenvalue: the limit has rank
        // 2 and its image spans the limiting edge face.
        let tet = Arc::new(build_standard_simplex(3).unwrap());
        let g = ProjectiveMap::diagonal(&[4.0, 1.0, 4.0, 1.0]).unwrap();
        assert!(is_automorphism(&tet, &g));
        let seq = g.power_sequence(40).unwrap();
        let inv_seq = g.inverse().unwrap().power_sequence(40).unwrap();
        let p0 = pt(&[1.0, 1.0, 1.0, 1.0]);
        let report = face_dynamics_check(&tet, None, &seq, Some(&inv_seq), &p0).unwrap();
        assert_eq!(report.limit_class.rank(), 2);
        assert_eq!(report.face_dim, 1);
        assert!(report.image_in_face_span < 1e-9);
        assert!(report.kernel_misses_domain);
        assert!(report.backward_in_kernel < 1e-9);
    }

    #[test]
    fn kernel_meets_domain_cases() {
        let tri = triangle();
        // span{e2, e3} only reaches the boundary edge x_1 = 0.
        let miss = DMatrix::from_columns(&[
            DVector::from_column_slice(&[0.0, 1.0, 0.0]),
            DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        ]);
        assert!(!kernel_meets_domain(&tri, &miss));
        let hit = DMatrix::from_columns(&[DVector::from_column_slice(&[1.0, 1.0, 1.0])]);
        assert!(kernel_meets_domain(&tri, &hit));
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let axis = DMatrix::from_columns(&[DVector::from_column_slice(&[0.0, 0.0, 1.0])]);
        assert!(kernel_meets_domain(&ball, &axis));
        let infinity = DMatrix::from_columns(&[DVector::from_column_slice(&[1.0, 0.0, 0.0])]);
        assert!(!kernel_meets_domain(&ball, &infinity));
    }
}
