//! Constructive detection of the invariant flat of a commuting family:
//! common fixed points, minimal vertex subsets spanning a properly
//! embedded simplex, the log-eigenvalue rank certificate, and the
//! minimal-set hull cross-check.
//!
//! The constructive scope is commuting families that are simultaneously
//! diagonalizable over the reals; other inputs are refused with a typed
//! error rather than answered approximately.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::action::{
    displacement, subspace_interior_witness, translation_length, GroupSpec,
};
use crate::domain::{ConvexDomain, ConvexSubset, Location};
use crate::error::CoreError;
use crate::feasibility::{FeasibilityProblem, Sense};
use crate::metric::MetricConfig;
use crate::projective::{ProjectiveMap, ProjectivePoint};
use crate::simplex::SimplexFlat;
use crate::tol;
use crate::Result;

/// A common eigendirection (or fixed section point) of the family, with
/// one real eigenvalue per generator.
#[derive(Debug, Clone)]
pub struct FixedCandidate {
    pub point: ProjectivePoint,
    /// Rayleigh eigenvalue of each generator's normalized lift.
    pub eigenvalues: Vec<f64>,
    /// True when the candidate comes from a subspace fixed pointwise.
    pub from_fixed_section: bool,
}

/// Output of the common-fixed-point stage.
#[derive(Debug, Clone)]
pub struct CommonFixedPoints {
    pub candidates: Vec<FixedCandidate>,
    /// Set when some invariant subspace of dimension at least 2 is fixed
    /// pointwise by the whole family.
    pub full_fix: bool,
    /// Worst off-diagonal residual of the simultaneous diagonalization.
    pub diagonalization_residual: f64,
}

/// Common eigenspace decomposition by recursive splitting: each
/// generator refines the invariant subspaces through its real
/// eigenspaces. Fails with a typed error on complex or defective
/// spectra.
fn simultaneous_eigenspaces(
    generators: &[ProjectiveMap],
) -> Result<(Vec<DMatrix<f64>>, f64)> {
    let d = generators[0].dim();
    let mut spaces: Vec<DMatrix<f64>> = vec![DMatrix::identity(d, d)];
    let mut worst_residual = 0.0_f64;
    for g in generators {
        let mut next: Vec<DMatrix<f64>> = Vec::new();
        for basis in &spaces {
            let k = basis.ncols();
            if k == 1 {
                // One-dimensional spaces stay; record the invariance
                // residual.
                let image = g.lift() * basis.column(0).into_owned();
                let proj = basis * (basis.transpose() * &image);
                worst_residual =
                    worst_residual.max((&image - proj).norm() / image.norm().max(1e-300));
                next.push(basis.clone());
                continue;
            }
            let restricted = basis.transpose() * g.lift() * basis;
            // Invariance of the subspace under g.
            let image = g.lift() * basis;
            let proj = basis * (basis.transpose() * &image);
            let inv_residual = (&image - proj).norm() / image.norm().max(1e-300);
            worst_residual = worst_residual.max(inv_residual);
            if inv_residual > tol::DIAGONALIZATION_TOL {
                return Err(CoreError::NotSimultaneouslyDiagonalizable {
                    context: format!(
                        "shared eigenspace is not invariant (residual {inv_residual:.3e})"
                    ),
                });
            }
            let schur = nalgebra::linalg::Schur::try_new(restricted.clone(), 1e-14, 10_000)
                .ok_or(CoreError::EigenSolverFailure)?;
            let eigen = schur.complex_eigenvalues();
            let scale = eigen.iter().map(|c| c.norm()).fold(1e-12, f64::max);
            if eigen.iter().any(|c| c.im.abs() > 1e-8 * scale) {
                return Err(CoreError::NotSimultaneouslyDiagonalizable {
                    context: "complex eigenvalues detected".into(),
                });
            }
            let mut reals: Vec<f64> = eigen.iter().map(|c| c.re).collect();
            reals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
            // Cluster eigenvalues.
            let mut clusters: Vec<f64> = Vec::new();
            for lambda in reals {
                match clusters.last() {
                    Some(last) if (lambda - last).abs() <= 1e-8 * scale => {}
                    _ => clusters.push(lambda),
                }
            }
            let mut split_dims = 0;
            for lambda in &clusters {
                let shifted = &restricted - DMatrix::identity(k, k) * *lambda;
                let svd = shifted.svd(false, true);
                let smax = svd.singular_values.max().max(1e-12);
                let null_count = svd
                    .singular_values
                    .iter()
                    .filter(|s| **s <= smax * 1e-8)
                    .count();
                if null_count == 0 {
                    continue;
                }
                let vt = svd.v_t.as_ref().expect("svd with v_t");
                let null = vt.rows(k - null_count, null_count).transpose().into_owned();
                next.push(basis * null);
                split_dims += null_count;
            }
            if split_dims != k {
                return Err(CoreError::NotSimultaneouslyDiagonalizable {
                    context: format!(
                        "defective spectrum: eigenspaces span {split_dims} of {k} dimensions"
                    ),
                });
            }
        }
        spaces = next;
    }
    // Every generator must act as a scalar on every final subspace.
    for basis in &spaces {
        for g in generators {
            let restricted = basis.transpose() * g.lift() * basis;
            let k = restricted.nrows();
            let trace = restricted.trace() / k as f64;
            let residual =
                (&restricted - DMatrix::identity(k, k) * trace).norm() / trace.abs().max(1e-12);
            worst_residual = worst_residual.max(residual * 1e-3);
            if residual > tol::DIAGONALIZATION_TOL {
                return Err(CoreError::NotSimultaneouslyDiagonalizable {
                    context: format!("non-scalar action on a shared eigenspace ({residual:.3e})"),
                });
            }
        }
    }
    Ok((spaces, worst_residual))
}

/// Rayleigh eigenvalue of the normalized lift at a unit representative.
fn rayleigh(g: &ProjectiveMap, p: &ProjectivePoint) -> f64 {
    (g.lift() * p.rep()).dot(p.rep())
}

/// Common eigendirections of a commuting, simultaneously diagonalizable
/// family that lie in the closed ambient domain. Subspaces fixed
/// pointwise contribute the ambient vertices they contain plus an
/// interior section point when the section meets the domain.
pub fn common_fixed_points(group: &GroupSpec) -> Result<CommonFixedPoints> {
    if !group.commuting() {
        return Err(CoreError::NotCommuting {
            residual: crate::action::commutation_residual(group.generators()),
        });
    }
    let (spaces, diagonalization_residual) = simultaneous_eigenspaces(group.generators())?;
    let domain = group.ambient();
    let mut full_fix = false;
    let mut vertex_candidates: Vec<FixedCandidate> = Vec::new();
    let mut direction_candidates: Vec<FixedCandidate> = Vec::new();
    let mut section_candidates: Vec<FixedCandidate> = Vec::new();
    let push_unique = |list: &mut Vec<FixedCandidate>, cand: FixedCandidate| {
        let duplicate = list
            .iter()
            .any(|c| c.point.approx_eq(&cand.point, tol::POINT_EQ));
        if !duplicate {
            list.push(cand);
        }
    };
    for basis in &spaces {
        if basis.ncols() == 1 {
            let point = ProjectivePoint::new(basis.column(0).into_owned())?;
            if domain.contains(&point).location == Location::Outside {
                continue;
            }
            let eigenvalues = group.generators().iter().map(|g| rayleigh(g, &point)).collect();
            push_unique(
                &mut direction_candidates,
                FixedCandidate {
                    point,
                    eigenvalues,
                    from_fixed_section: false,
                },
            );
        } else {
            full_fix = true;
            // Ambient vertices inside the fixed section.
            for v in domain.vertices() {
                let proj = basis * (basis.transpose() * v.rep());
                if (v.rep() - proj).norm() <= tol::POINT_EQ {
                    let eigenvalues =
                        group.generators().iter().map(|g| rayleigh(g, v)).collect();
                    push_unique(
                        &mut vertex_candidates,
                        FixedCandidate {
                            point: v.clone(),
                            eigenvalues,
                            from_fixed_section: true,
                        },
                    );
                }
            }
            // An interior point of the section, when the section meets
            // the domain.
            if let Some(point) = subspace_interior_witness(domain, basis) {
                let eigenvalues =
                    group.generators().iter().map(|g| rayleigh(g, &point)).collect();
                push_unique(
                    &mut section_candidates,
                    FixedCandidate {
                        point,
                        eigenvalues,
                        from_fixed_section: true,
                    },
                );
            }
        }
    }
    // Deterministic candidate order: ambient-vertex fixed points first,
    // then eigendirections (sorted), then interior section points. The
    // subset search below enumerates lexicographically over this order.
    direction_candidates.sort_by(|a, b| {
        a.point
            .quantized_key(1e-9)
            .cmp(&b.point.quantized_key(1e-9))
    });
    let mut candidates = vertex_candidates;
    for c in direction_candidates {
        let duplicate = candidates
            .iter()
            .any(|k| k.point.approx_eq(&c.point, tol::POINT_EQ));
        if !duplicate {
            candidates.push(c);
        }
    }
    for c in section_candidates {
        let duplicate = candidates
            .iter()
            .any(|k| k.point.approx_eq(&c.point, tol::POINT_EQ));
        if !duplicate {
            candidates.push(c);
        }
    }
    if candidates.is_empty() {
        return Err(CoreError::NoSimplexFound);
    }
    Ok(CommonFixedPoints {
        candidates,
        full_fix,
        diagonalization_residual,
    })
}

/// Result of the minimal simplex search.
#[derive(Debug, Clone)]
pub struct SimplexSearch {
    pub simplex: SimplexFlat,
    /// Indices of the chosen candidates.
    pub chosen: Vec<usize>,
    pub interior_witness: ProjectivePoint,
    /// Interior margin of the witness.
    pub margin: f64,
    /// Smallest singular value of the vertex matrix (independence gauge).
    pub independence: f64,
}

/// Enumerates candidate subsets in increasing size (lexicographic
/// tie-break) and returns the hull of the first subset whose open hull
/// meets the domain. The returned vertices are verified to be linearly
/// independent and the hull properly embedded.
pub fn minimal_simplex_search(
    group: &GroupSpec,
    fixed: &[FixedCandidate],
) -> Result<SimplexSearch> {
    if fixed.is_empty() {
        return Err(CoreError::EmptyInput {
            context: "simplex search needs fixed-point candidates",
        });
    }
    let domain = group.ambient();
    for size in 1..=fixed.len() {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            if let Some(witness) = open_hull_interior_witness(domain, fixed, &subset) {
                let points: Vec<ProjectivePoint> =
                    subset.iter().map(|&i| fixed[i].point.clone()).collect();
                let cols: Vec<DVector<f64>> = points.iter().map(|p| p.rep().clone()).collect();
                let m = DMatrix::from_columns(&cols);
                let svd = m.clone().svd(false, false);
                let smin = svd.singular_values.min();
                let simplex = SimplexFlat::new(points, Some(domain.clone()))?;
                let margin = domain.boundary_margin(&witness);
                return Ok(SimplexSearch {
                    simplex,
                    chosen: subset,
                    interior_witness: witness,
                    margin,
                    independence: smin,
                });
            }
            if !advance_subset(&mut subset, fixed.len()) {
                break;
            }
        }
    }
    Err(CoreError::NoSimplexFound)
}

/// A strictly positive combination of the chosen candidates that lies in
/// the domain interior with margin, found by a feasibility program for
/// polytopes and by the hull barycenter for ellipsoids. (The relative
/// interior of a hull inside a convex closure is either entirely
/// interior or entirely on the boundary, so the barycenter test is
/// exact.)
fn open_hull_interior_witness(
    domain: &Arc<ConvexDomain>,
    fixed: &[FixedCandidate],
    subset: &[usize],
) -> Option<ProjectivePoint> {
    let chart = domain.chart();
    let reps: Vec<DVector<f64>> = subset
        .iter()
        .map(|&i| {
            chart
                .normalize(fixed[i].point.rep())
                .unwrap_or_else(|| fixed[i].point.rep().clone())
        })
        .collect();
    if domain.is_polytope() {
        let k = reps.len();
        let mut problem = FeasibilityProblem::new(k);
        for i in 0..k {
            problem.set_lower(i, 1e-6);
        }
        problem.add_row(vec![1.0; k], Sense::Eq, 1.0);
        for facet in domain.facets() {
            let row: Vec<f64> = reps.iter().map(|v| facet.functional.dot(v)).collect();
            problem.add_row(row, Sense::Ge, tol::INTERIOR_MARGIN);
        }
        let mu = problem.solve()?;
        let mut v = DVector::zeros(domain.ambient_dim());
        for (m, rep) in mu.iter().zip(&reps) {
            v += rep * *m;
        }
        let p = ProjectivePoint::new(v).ok()?;
        (domain.contains(&p).location == Location::Interior).then_some(p)
    } else {
        let mut v = DVector::zeros(domain.ambient_dim());
        for rep in &reps {
            v += rep;
        }
        let p = ProjectivePoint::new(v).ok()?;
        let class = domain.contains(&p);
        (class.location == Location::Interior && class.margin > tol::INTERIOR_MARGIN)
            .then_some(p)
    }
}

fn advance_subset(subset: &mut [usize], count: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < count - (k - i) {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Rank certificate of the family restricted to an invariant simplex.
#[derive(Debug, Clone)]
pub struct RankCertificate {
    pub rank: usize,
    /// Reduced basis of the subgroup generated by the translation
    /// vectors.
    pub lattice_basis: Vec<Vec<f64>>,
    /// Log-eigenvalue translation vector of each generator.
    pub translation_vectors: Vec<Vec<f64>>,
    /// Worst canonical vertex-fix distance across generators.
    pub vertex_fix_residual: f64,
    /// False when the pairwise reduction hit its iteration cap, which
    /// indicates a non-discrete translation group.
    pub reduction_converged: bool,
}

/// Reads off the vertex eigenvalues of each generator, forms the
/// log-ratio translation vectors, and certifies the rank of the lattice
/// they generate.
pub fn rank_certificate(group: &GroupSpec, simplex: &SimplexFlat) -> Result<RankCertificate> {
    let k = simplex.dim();
    let mut vectors: Vec<DVector<f64>> = Vec::new();
    let mut worst_fix = 0.0_f64;
    for (g, label) in group.generators().iter().zip(group.labels()) {
        let mut mu = Vec::with_capacity(k + 1);
        for (vi, v) in simplex.vertices().iter().enumerate() {
            let image = g.apply(v);
            let residual = image.canonical_distance(v);
            worst_fix = worst_fix.max(residual);
            if residual > tol::FIX_RESIDUAL {
                return Err(CoreError::VertexNotFixed {
                    label: label.clone(),
                    vertex: vi,
                    residual,
                });
            }
            mu.push(rayleigh(g, v));
        }
        let mut t = DVector::zeros(k);
        for i in 1..=k {
            let ratio = mu[i] / mu[0];
            if ratio <= 0.0 {
                return Err(CoreError::ValidationError(format!(
                    "generator `{label}` has mixed-sign vertex eigenvalues"
                )));
            }
            t[i - 1] = ratio.ln();
        }
        vectors.push(t);
    }
    // Rank of the generator-vector matrix.
    let rank = if k == 0 {
        0
    } else {
        let m = DMatrix::from_columns(&vectors);
        let svd = m.clone().svd(false, false);
        let smax = svd.singular_values.max();
        if smax < 1e-12 {
            0
        } else {
            svd.singular_values
                .iter()
                .filter(|s| **s > smax * tol::LATTICE_RANK_TOL)
                .count()
        }
    };
    let (basis, reduction_converged) = reduce_generating_set(&vectors);
    Ok(RankCertificate {
        rank,
        lattice_basis: basis.iter().map(|b| b.iter().cloned().collect()).collect(),
        translation_vectors: vectors.iter().map(|t| t.iter().cloned().collect()).collect(),
        vertex_fix_residual: worst_fix,
        reduction_converged,
    })
}

/// Pairwise integer reduction of a generating set: repeatedly subtracts
/// rounded projections (generalized Euclid). For a discrete translation
/// group this terminates with a basis; the iteration cap guards against
/// dense subgroups.
fn reduce_generating_set(vectors: &[DVector<f64>]) -> (Vec<DVector<f64>>, bool) {
    let eps = 1e-9;
    let mut basis: Vec<DVector<f64>> = vectors
        .iter()
        .filter(|v| v.norm() > eps)
        .cloned()
        .collect();
    if basis.is_empty() {
        return (basis, true);
    }
    for _sweep in 0..500 {
        basis.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite norms"));
        let mut changed = false;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j || basis[i].norm() <= eps {
                    continue;
                }
                let m = (basis[j].dot(&basis[i]) / basis[i].norm_squared()).round();
                if m != 0.0 {
                    let update = &basis[j] - &basis[i] * m;
                    if update.norm() < basis[j].norm() - eps {
                        basis[j] = update;
                        changed = true;
                    }
                }
            }
        }
        basis.retain(|v| v.norm() > eps);
        if !changed {
            // Deterministic output order.
            basis.sort_by(|a, b| {
                a.iter()
                    .map(|x| (x / 1e-9).round() as i64)
                    .collect::<Vec<_>>()
                    .cmp(&b.iter().map(|x| (x / 1e-9).round() as i64).collect::<Vec<_>>())
            });
            return (basis, true);
        }
    }
    (basis, false)
}

/// Minimal-set hull report for a commuting family.
#[derive(Debug, Clone)]
pub struct MinHullReport {
    pub witnesses: Vec<ProjectivePoint>,
    pub per_generator_tau: Vec<f64>,
    pub hull_dim: usize,
    /// Worst displacement excess over the translation length among
    /// simplex samples, when a simplex is supplied.
    pub simplex_in_min_residual: Option<f64>,
}

/// Samples the joint minimal set over the invariant subset, returns the
/// hull sample, and cross-checks that a detected simplex sits inside
/// every generator's minimal set.
pub fn min_hull(
    group: &GroupSpec,
    simplex: Option<&SimplexFlat>,
    cfg: &MetricConfig,
) -> Result<MinHullReport> {
    let subset = group.invariant_subset().ok_or(CoreError::EmptySubset {
        context: "minimal-set hull needs an invariant subset",
    })?;
    let domain = group.ambient();
    let taus: Vec<f64> = group.generators().iter().map(translation_length).collect();
    let mut samples = crate::metric::subset_metric_samples(
        domain,
        subset,
        cfg.grid_samples.clamp(cfg.hausdorff_samples, 512),
        cfg.rng_seed,
    )?;
    if let Some(s) = simplex {
        samples.extend(s.interior_samples(2));
    }
    let mut witnesses: Vec<ProjectivePoint> = Vec::new();
    for p in samples {
        if domain.contains(&p).location != Location::Interior {
            continue;
        }
        let mut ok = true;
        for (g, tau) in group.generators().iter().zip(&taus) {
            if displacement(domain, g, &p)? > tau + cfg.min_set_epsilon {
                ok = false;
                break;
            }
        }
        if ok && !witnesses.iter().any(|w| w.approx_eq(&p, 1e-12)) {
            witnesses.push(p);
        }
    }
    if witnesses.is_empty() {
        return Err(CoreError::MinSetEmpty {
            density: cfg.grid_samples,
        });
    }
    let hull = ConvexSubset::hull(domain.clone(), &witnesses)?;
    let simplex_in_min_residual = match simplex {
        None => None,
        Some(s) => {
            let mut worst = 0.0_f64;
            for p in s.interior_samples(3) {
                if domain.contains(&p).location != Location::Interior {
                    continue;
                }
                for (g, tau) in group.generators().iter().zip(&taus) {
                    worst = worst.max(displacement(domain, g, &p)? - tau);
                }
            }
            Some(worst)
        }
    };
    Ok(MinHullReport {
        witnesses,
        per_generator_tau: taus,
        hull_dim: hull.span_dim(),
        simplex_in_min_residual,
    })
}

/// Full flat-detection report.
#[derive(Debug, Clone)]
pub struct FlatReport {
    pub simplex: SimplexFlat,
    pub fixed_points_used: Vec<ProjectivePoint>,
    pub rank: usize,
    pub lattice_basis: Vec<Vec<f64>>,
    pub cocompact: bool,
    pub min_set_witnesses: Vec<ProjectivePoint>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Pipeline: common fixed points, minimal simplex search, vertex-fix
/// verification, rank certificate, and the minimal-set cross-check.
pub fn flat_torus_report(group: &GroupSpec, cfg: &MetricConfig) -> Result<FlatReport> {
    let fixed = common_fixed_points(group)?;
    let search = minimal_simplex_search(group, &fixed.candidates)?;
    let certificate = rank_certificate(group, &search.simplex)?;
    let dim = search.simplex.dim();
    let cocompact = certificate.rank == dim;

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        "diagonalization_residual".into(),
        fixed.diagonalization_residual,
    );
    diagnostics.insert("interior_margin".into(), search.margin);
    diagnostics.insert("independence_sigma_min".into(), search.independence);
    diagnostics.insert(
        "vertex_fix_residual".into(),
        certificate.vertex_fix_residual,
    );
    diagnostics.insert("full_fix".into(), if fixed.full_fix { 1.0 } else { 0.0 });
    diagnostics.insert(
        "covering_radius_bound".into(),
        covering_radius_bound(&certificate, dim),
    );
    if dim >= 1 {
        diagnostics.insert(
            "orbit_lattice_residual".into(),
            orbit_lattice_residual(group, &search.simplex, &certificate, 2)?,
        );
    }

    let min_set_witnesses = match group.invariant_subset() {
        None => Vec::new(),
        Some(_) => {
            let report = min_hull(group, Some(&search.simplex), cfg)?;
            if let Some(res) = report.simplex_in_min_residual {
                diagnostics.insert("simplex_in_min_residual".into(), res);
            }
            diagnostics.insert("min_hull_dim".into(), report.hull_dim as f64);
            report.witnesses
        }
    };

    Ok(FlatReport {
        fixed_points_used: fixed.candidates.iter().map(|c| c.point.clone()).collect(),
        rank: certificate.rank,
        lattice_basis: certificate.lattice_basis,
        cocompact,
        min_set_witnesses,
        diagnostics,
        simplex: search.simplex,
    })
}

/// Upper bound on the covering radius of the translation lattice in the
/// polyhedral norm of the flat, infinite when the rank is deficient.
fn covering_radius_bound(certificate: &RankCertificate, dim: usize) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    if certificate.rank < dim {
        return f64::INFINITY;
    }
    let mut sum = 0.0;
    for b in &certificate.lattice_basis {
        let zero = vec![0.0; b.len()];
        sum += crate::simplex::dist_rd(b, &zero).unwrap_or(f64::INFINITY);
    }
    0.5 * sum
}

/// Coordinates of a span point in the simplex's vertex frame.
fn vertex_frame_coefficients(
    simplex: &SimplexFlat,
    p: &ProjectivePoint,
) -> Result<DVector<f64>> {
    let cols: Vec<DVector<f64>> = simplex
        .vertices()
        .iter()
        .map(|v| v.rep().clone())
        .collect();
    let m = DMatrix::from_columns(&cols);
    let svd = m.clone().svd(true, true);
    let c = svd
        .solve(p.rep(), 1e-12)
        .map_err(|e| CoreError::ValidationError(e.to_string()))?;
    // Positive representative in the vertex frame.
    let mut c = c;
    let lead = c.iter().cloned().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if lead < 0.0 {
        c.neg_mut();
    }
    if c.iter().any(|x| *x <= 0.0) {
        return Err(CoreError::NonPositiveCoordinates);
    }
    Ok(c)
}

/// How far word-ball orbit images of the simplex barycenter deviate from
/// the lattice translations predicted by the certificate, in the flat's
/// log coordinates.
pub fn orbit_lattice_residual(
    group: &GroupSpec,
    simplex: &SimplexFlat,
    certificate: &RankCertificate,
    radius: i32,
) -> Result<f64> {
    let k = simplex.dim();
    if k == 0 {
        return Ok(0.0);
    }
    let base = simplex.barycenter();
    let base_phi = log_frame(&vertex_frame_coefficients(simplex, &base)?);
    let m = group.generators().len();
    let mut exponents = vec![0i32; m];
    let mut worst = 0.0_f64;
    loop {
        // Apply the word with the current exponent vector.
        let mut point = base.clone();
        let mut predicted = base_phi.clone();
        for (gi, &e) in exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let g = &group.generators()[gi];
            let step = if e > 0 { g.clone() } else { g.inverse()? };
            for _ in 0..e.abs() {
                point = step.apply(&point);
            }
            for (axis, t) in certificate.translation_vectors[gi].iter().enumerate() {
                predicted[axis] += t * e as f64;
            }
        }
        let actual = log_frame(&vertex_frame_coefficients(simplex, &point)?);
        let mut deviation = 0.0_f64;
        for axis in 0..k {
            deviation = deviation.max((actual[axis] - predicted[axis]).abs());
        }
        worst = worst.max(deviation);
        // Advance the exponent multi-index over the word ball.
        let mut carry = 0;
        loop {
            if carry == m {
                return Ok(worst);
            }
            if exponents[carry] < radius {
                exponents[carry] += 1;
                break;
            }
            exponents[carry] = -radius;
            carry += 1;
        }
    }
}

fn log_frame(c: &DVector<f64>) -> Vec<f64> {
    (1..c.len()).map(|i| (c[i] / c[0]).ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::build_standard_simplex;

    fn pt(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_slice(coords).unwrap()
    }

    fn lattice_group(d: usize) -> GroupSpec {
        let simplex = Arc::new(build_standard_simplex(d).unwrap());
        let vs = simplex.vertices().to_vec();
        let whole = ConvexSubset::hull(simplex.clone(), &vs).unwrap();
        let e = std::f64::consts::E;
        let gens: Vec<ProjectiveMap> = (0..=d)
            .map(|i| {
                let mut entries = vec![1.0; d + 1];
                entries[i] = e;
                ProjectiveMap::diagonal(&entries).unwrap()
            })
            .collect();
        GroupSpec::new(simplex, gens, vec![], Some(whole)).unwrap()
    }

    #[test]
    fn lattice_group_fixed_points_are_vertices() {
        let group = lattice_group(2);
        let fixed = common_fixed_points(&group).unwrap();
        assert_eq!(fixed.candidates.len(), 3);
        assert!(!fixed.full_fix);
        for c in &fixed.candidates {
            assert!(group
                .ambient()
                .vertices()
                .iter()
                .any(|v| v.approx_eq(&c.point, 1e-10)));
        }
    }

    #[test]
    fn rotation_is_refused() {
        let ball = Arc::new(ConvexDomain::unit_ball(3).unwrap());
        let rot = ProjectiveMap::from_rows(
            3,
            &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let group = GroupSpec::new(ball, vec![rot], vec![], None).unwrap();
        assert!(matches!(
            common_fixed_points(&group),
            Err(CoreError::NotSimultaneouslyDiagonalizable { .. })
        ));
    }

    #[test]
    fn identity_group_reports_full_fix_with_vertices() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let group =
            GroupSpec::new(tri.clone(), vec![ProjectiveMap::identity(3)], vec![], None).unwrap();
        let fixed = common_fixed_points(&group).unwrap();
        assert!(fixed.full_fix);
        // Ambient vertex set plus an interior section point.
        assert_eq!(fixed.candidates.len(), 4);
        for v in tri.vertices() {
            assert!(fixed
                .candidates
                .iter()
                .any(|c| c.point.approx_eq(v, 1e-10)));
        }
    }

    #[test]
    fn lattice_group_minimal_simplex_is_whole_simplex() {
        let group = lattice_group(2);
        let fixed = common_fixed_points(&group).unwrap();
        let search = minimal_simplex_search(&group, &fixed.candidates).unwrap();
        assert_eq!(search.simplex.dim(), 2);
        assert_eq!(search.chosen, vec![0, 1, 2]);
    }

    #[test]
    fn hyperbolic_interval_flat_is_the_interval() {
        let interval = Arc::new(build_standard_simplex(1).unwrap());
        let g = ProjectiveMap::diagonal(&[4.0, 0.25]).unwrap();
        let group = GroupSpec::new(interval, vec![g], vec![], None).unwrap();
        let fixed = common_fixed_points(&group).unwrap();
        assert_eq!(fixed.candidates.len(), 2);
        let search = minimal_simplex_search(&group, &fixed.candidates).unwrap();
        assert_eq!(search.simplex.dim(), 1);
    }

    #[test]
    fn involution_on_square_yields_fixed_point_simplex() {
        // diag(-1, 1, 1) swaps two sides of the square and fixes the
        // vertical middle segment pointwise.
        let sq = Arc::new(
            ConvexDomain::polytope(vec![
                DVector::from_column_slice(&[1.0, 1.0, 1.0]),
                DVector::from_column_slice(&[-1.0, 1.0, 1.0]),
                DVector::from_column_slice(&[-1.0, -1.0, 1.0]),
                DVector::from_column_slice(&[1.0, -1.0, 1.0]),
            ])
            .unwrap(),
        );
        let g = ProjectiveMap::diagonal(&[-1.0, 1.0, 1.0]).unwrap();
        let group = GroupSpec::new(sq, vec![g], vec![], None).unwrap();
        let fixed = common_fixed_points(&group).unwrap();
        assert!(fixed.full_fix);
        let search = minimal_simplex_search(&group, &fixed.candidates).unwrap();
        assert_eq!(search.simplex.dim(), 0);
        let report = rank_certificate(&group, &search.simplex).unwrap();
        assert_eq!(report.rank, 0);
    }

    #[test]
    fn lattice_rank_certificate_is_full() {
        let group = lattice_group(2);
        let report = flat_torus_report(&group, &MetricConfig::default()).unwrap();
        assert_eq!(report.simplex.dim(), 2);
        assert_eq!(report.rank, 2);
        assert!(report.cocompact);
        assert!(report.diagnostics["vertex_fix_residual"] < 1e-9);
        // Reduced basis of the exponent lattice is the standard one.
        assert_eq!(report.lattice_basis.len(), 2);
        for b in &report.lattice_basis {
            let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "basis vector {b:?}");
        }
    }

    #[test]
    fn homomorphism_subgroup_rank_deficient() {
        // One generator diag(1, e, e^2) on the triangle: rank 1 < dim 2.
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let vs = tri.vertices().to_vec();
        let whole = ConvexSubset::hull(tri.clone(), &vs).unwrap();
        let e = std::f64::consts::E;
        let g = ProjectiveMap::diagonal(&[1.0, e, e * e]).unwrap();
        let group = GroupSpec::new(tri, vec![g], vec!["a".into()], Some(whole)).unwrap();
        let report = flat_torus_report(&group, &MetricConfig::default()).unwrap();
        assert_eq!(report.simplex.dim(), 2);
        assert_eq!(report.rank, 1);
        assert!(!report.cocompact);
        assert!(report.diagnostics["covering_radius_bound"].is_infinite());
    }

    #[test]
    fn min_hull_on_lattice_group_covers_simplex() {
        let group = lattice_group(2);
        let cfg = MetricConfig::default();
        let fixed = common_fixed_points(&group).unwrap();
        let search = minimal_simplex_search(&group, &fixed.candidates).unwrap();
        let report = min_hull(&group, Some(&search.simplex), &cfg).unwrap();
        assert_eq!(report.hull_dim, 2);
        let residual = report.simplex_in_min_residual.unwrap();
        assert!(residual < 1e-9, "residual {residual}");
    }

    #[test]
    fn orbit_lattice_residual_is_small() {
        let group = lattice_group(2);
        let fixed = common_fixed_points(&group).unwrap();
        let search = minimal_simplex_search(&group, &fixed.candidates).unwrap();
        let cert = rank_certificate(&group, &search.simplex).unwrap();
        let residual = orbit_lattice_residual(&group, &search.simplex, &cert, 2).unwrap();
        assert!(residual < 1e-9, "residual {residual}");
    }

    #[test]
    fn vertex_not_fixed_is_reported() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let rot = ProjectiveMap::from_rows(
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let group = GroupSpec::new(tri.clone(), vec![rot], vec![], None).unwrap();
        let simplex = SimplexFlat::new(tri.vertices().to_vec(), Some(tri.clone())).unwrap();
        assert!(matches!(
            rank_certificate(&group, &simplex),
            Err(CoreError::VertexNotFixed { .. })
        ));
    }

    #[test]
    fn reduction_recovers_standard_basis() {
        let vectors = vec![
            DVector::from_column_slice(&[-1.0, -1.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[0.0, 1.0]),
        ];
        let (basis, converged) = reduce_generating_set(&vectors);
        assert!(converged);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!((b.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_multiples_reduce_to_gcd() {
        let vectors = vec![
            DVector::from_column_slice(&[6.0, 0.0]),
            DVector::from_column_slice(&[10.0, 0.0]),
        ];
        let (basis, converged) = reduce_generating_set(&vectors);
        assert!(converged);
        assert_eq!(basis.len(), 1);
        assert!((basis[0][0].abs() - 2.0).abs() < 1e-9);
    }
}
