//! Properly convex domains (polytopes and ellipsoids), chord-boundary
//! intersection, faces, convex hulls of point sets, and the
//! properly-embedded predicate.
//!
//! A polytope is built from explicit homogeneous representatives of its
//! vertices; the given lifts are taken as the generators of the convex
//! cone over the domain, so their signs are meaningful. Facets are always
//! derived from the vertex list, never stored externally.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::feasibility::{point_in_affine_hull, FeasibilityProblem, Sense};
use crate::projective::ProjectivePoint;
use crate::tol;
use crate::Result;

/// Affine chart { chi = 1 } with an orthonormal basis of ker(chi).
#[derive(Debug, Clone)]
pub struct Chart {
    functional: DVector<f64>,
    origin: DVector<f64>,
    basis: DMatrix<f64>,
}

impl Chart {
    pub fn new(functional: DVector<f64>) -> Result<Self> {
        let norm = functional.norm();
        if norm < tol::MATRIX_ZERO {
            return Err(CoreError::EmptyInput {
                context: "chart functional must be nonzero",
            });
        }
        let f = functional / norm;
        let basis = orthonormal_complement(&f);
        let origin = f.clone() / f.norm_squared();
        Ok(Self {
            functional: f,
            origin,
            basis,
        })
    }

    pub fn functional(&self) -> &DVector<f64> {
        &self.functional
    }

    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        self.functional.dot(v)
    }

    /// Representative with chi(v) = 1, or None if the point is at chart
    /// infinity.
    pub fn normalize(&self, v: &DVector<f64>) -> Option<DVector<f64>> {
        let c = self.eval(v);
        if c.abs() < 1e-12 * v.norm() {
            return None;
        }
        Some(v / c)
    }

    /// Affine coordinates in the chart, or None at chart infinity.
    pub fn coords(&self, p: &ProjectivePoint) -> Option<DVector<f64>> {
        let v = self.normalize(p.rep())?;
        Some(self.basis.transpose() * (v - &self.origin))
    }

    /// Homogeneous representative (chi = 1) of a chart point.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.basis * y
    }

    pub fn ambient_dim(&self) -> usize {
        self.functional.len()
    }
}

/// One supporting hyperplane of a polytope: a unit functional that is
/// nonnegative on the closed domain and vanishes exactly on its facet.
#[derive(Debug, Clone)]
pub struct Facet {
    pub functional: DVector<f64>,
    pub vertex_set: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Shape {
    Polytope {
        vertices: Vec<ProjectivePoint>,
        vertex_lifts: Vec<DVector<f64>>,
        vertex_chart: Vec<DVector<f64>>,
        facets: Vec<Facet>,
    },
    Ellipsoid {
        quadric: DMatrix<f64>,
    },
}

/// Classification of a point against a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Outside,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub location: Location,
    /// Indices of active facets for boundary points of a polytope.
    pub active_facets: Vec<usize>,
    /// Signed margin: positive inside, ~0 on the boundary.
    pub margin: f64,
}

/// A properly convex open domain in real projective space.
#[derive(Debug, Clone)]
pub struct ConvexDomain {
    chart: Chart,
    shape: Shape,
    interior: ProjectivePoint,
}

impl ConvexDomain {
    /// Builds a polytope domain from homogeneous vertex representatives.
    /// The lifts must all lie in one open half-space (they generate the
    /// cone over the domain).
    pub fn polytope(lifts: Vec<DVector<f64>>) -> Result<Self> {
        if lifts.is_empty() {
            return Err(CoreError::EmptyInput {
                context: "polytope needs vertices",
            });
        }
        let d = lifts[0].len();
        for l in &lifts {
            if l.len() != d {
                return Err(CoreError::DimensionMismatch {
                    expected: d,
                    got: l.len(),
                });
            }
        }
        let normalized: Vec<DVector<f64>> = lifts.iter().map(|l| l / l.norm()).collect();
        // Deduplicate rays.
        let mut rays: Vec<DVector<f64>> = Vec::new();
        for v in normalized {
            if !rays.iter().any(|u| (u - &v).norm() < tol::POINT_EQ) {
                rays.push(v);
            }
        }
        let chart = Self::find_chart(&rays)?;
        let vertex_chart: Vec<DVector<f64>> = rays
            .iter()
            .map(|v| {
                let n = chart.normalize(v).expect("chart positive on vertices");
                chart.basis.transpose() * (n - &chart.origin)
            })
            .collect();
        let n = d - 1;
        // Full-dimensional check: affine span of the vertices is the chart.
        if affine_rank(&vertex_chart) != n {
            return Err(CoreError::NotProperlyConvex {
                context: "vertex set has empty interior in the chart".into(),
            });
        }
        // Every vertex extreme.
        for i in 0..vertex_chart.len() {
            let others: Vec<DVector<f64>> = vertex_chart
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, y)| y.clone())
                .collect();
            if point_in_affine_hull(&vertex_chart[i], &others) {
                return Err(CoreError::NotProperlyConvex {
                    context: format!("vertex {i} is not extreme"),
                });
            }
        }
        let facets = enumerate_facets(&chart, &vertex_chart)?;
        let vertices: Vec<ProjectivePoint> = rays
            .iter()
            .map(|v| ProjectivePoint::new(v.clone()).expect("nonzero vertex"))
            .collect();
        let mut bary = DVector::zeros(n);
        for y in &vertex_chart {
            bary += y;
        }
        bary /= vertex_chart.len() as f64;
        let interior = ProjectivePoint::new(chart.lift(&bary))?;
        let domain = Self {
            chart,
            shape: Shape::Polytope {
                vertices,
                vertex_lifts: rays,
                vertex_chart,
                facets,
            },
            interior,
        };
        match domain.contains(&domain.interior).location {
            Location::Interior => Ok(domain),
            _ => Err(CoreError::NotProperlyConvex {
                context: "vertex barycenter is not interior".into(),
            }),
        }
    }

    /// The open unit ball in the chart { x_d = 1 }.
    pub fn unit_ball(d: usize) -> Result<Self> {
        let mut q = DMatrix::identity(d, d);
        q[(d - 1, d - 1)] = -1.0;
        let mut chi = DVector::zeros(d);
        chi[d - 1] = 1.0;
        let mut center = DVector::zeros(d);
        center[d - 1] = 1.0;
        Ok(Self {
            chart: Chart::new(chi)?,
            shape: Shape::Ellipsoid { quadric: q },
            interior: ProjectivePoint::new(center)?,
        })
    }

    /// Ellipsoid { (x - center)' shape (x - center) < 1 } in the chart
    /// { x_d = 1 }, with `center` and `shape` in the first d-1 affine
    /// coordinates.
    pub fn ellipsoid(center: &[f64], shape_rows: &[f64]) -> Result<Self> {
        let n = center.len();
        if shape_rows.len() != n * n {
            return Err(CoreError::DimensionMismatch {
                expected: n * n,
                got: shape_rows.len(),
            });
        }
        let d = n + 1;
        let a = DMatrix::from_row_slice(n, n, shape_rows);
        let sym_residual = (&a - a.transpose()).norm() / a.norm().max(1.0);
        if sym_residual > 1e-10 {
            return Err(CoreError::NotProperlyConvex {
                context: "ellipsoid shape matrix is not symmetric".into(),
            });
        }
        let c = DVector::from_column_slice(center);
        // Homogenize: q(x, t) = (x - t c)' A (x - t c) - t^2.
        let mut q = DMatrix::zeros(d, d);
        let ac = &a * &c;
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] = a[(i, j)];
            }
            q[(i, n)] = -ac[i];
            q[(n, i)] = -ac[i];
        }
        q[(n, n)] = c.dot(&ac) - 1.0;
        let mut chi = DVector::zeros(d);
        chi[n] = 1.0;
        let mut center_h = DVector::zeros(d);
        for i in 0..n {
            center_h[i] = c[i];
        }
        center_h[n] = 1.0;
        // Positive definiteness of the shape via its eigenvalues.
        let eig = a.symmetric_eigenvalues();
        if eig.iter().any(|l| *l <= 0.0) {
            return Err(CoreError::NotProperlyConvex {
                context: "ellipsoid shape matrix is not positive definite".into(),
            });
        }
        Ok(Self {
            chart: Chart::new(chi)?,
            shape: Shape::Ellipsoid { quadric: q },
            interior: ProjectivePoint::new(center_h)?,
        })
    }

    fn find_chart(rays: &[DVector<f64>]) -> Result<Chart> {
        let d = rays[0].len();
        let mut mean = DVector::zeros(d);
        for v in rays {
            mean += v;
        }
        mean /= rays.len() as f64;
        if mean.norm() > 1e-9 && rays.iter().all(|v| mean.dot(v) > 1e-9) {
            return Chart::new(mean);
        }
        // Fall back to a feasibility program: chi . v_i >= 1.
        let mut problem = FeasibilityProblem::new(d);
        for i in 0..d {
            problem.set_free(i);
        }
        for v in rays {
            problem.add_row(v.iter().cloned().collect(), Sense::Ge, 1.0);
        }
        let chi = problem.solve().ok_or_else(|| CoreError::NotProperlyConvex {
            context: "no affine chart contains all vertices on its positive side".into(),
        })?;
        Chart::new(DVector::from_column_slice(&chi))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Homogeneous dimension d of the ambient coordinates.
    pub fn ambient_dim(&self) -> usize {
        self.chart.ambient_dim()
    }

    /// Dimension of the domain itself (d - 1).
    pub fn proj_dim(&self) -> usize {
        self.ambient_dim() - 1
    }

    pub fn is_polytope(&self) -> bool {
        matches!(self.shape, Shape::Polytope { .. })
    }

    pub fn interior_point(&self) -> &ProjectivePoint {
        &self.interior
    }

    pub fn vertices(&self) -> &[ProjectivePoint] {
        match &self.shape {
            Shape::Polytope { vertices, .. } => vertices,
            Shape::Ellipsoid { .. } => &[],
        }
    }

    pub fn vertex_lifts(&self) -> &[DVector<f64>] {
        match &self.shape {
            Shape::Polytope { vertex_lifts, .. } => vertex_lifts,
            Shape::Ellipsoid { .. } => &[],
        }
    }

    pub fn vertex_chart_coords(&self) -> &[DVector<f64>] {
        match &self.shape {
            Shape::Polytope { vertex_chart, .. } => vertex_chart,
            Shape::Ellipsoid { .. } => &[],
        }
    }

    pub fn facets(&self) -> &[Facet] {
        match &self.shape {
            Shape::Polytope { facets, .. } => facets,
            Shape::Ellipsoid { .. } => &[],
        }
    }

    pub fn quadric(&self) -> Option<&DMatrix<f64>> {
        match &self.shape {
            Shape::Ellipsoid { quadric } => Some(quadric),
            Shape::Polytope { .. } => None,
        }
    }

    /// Signed margin of a chi-normalized representative: positive in the
    /// interior, approximately zero on the boundary, negative outside.
    fn margin_of_normalized(&self, v: &DVector<f64>) -> (f64, Vec<usize>) {
        match &self.shape {
            Shape::Polytope { facets, .. } => {
                let mut min = f64::MAX;
                let mut active = Vec::new();
                let scale = 1.0 + v.norm();
                for (j, facet) in facets.iter().enumerate() {
                    let value = facet.functional.dot(v) / scale;
                    if value.abs() <= tol::BOUNDARY_BAND {
                        active.push(j);
                    }
                    min = min.min(value);
                }
                (min, active)
            }
            Shape::Ellipsoid { quadric } => {
                let q = (quadric * v).dot(v);
                let scale = (1.0 + v.norm_squared()) * quadric.norm();
                (-q / scale, Vec::new())
            }
        }
    }

    /// Classifies a point with the boundary tolerance band.
    pub fn contains(&self, p: &ProjectivePoint) -> Classification {
        let Some(v) = self.chart.normalize(p.rep()) else {
            return Classification {
                location: Location::Outside,
                active_facets: Vec::new(),
                margin: f64::NEG_INFINITY,
            };
        };
        let (margin, active) = self.margin_of_normalized(&v);
        let location = if margin > tol::BOUNDARY_BAND {
            Location::Interior
        } else if margin >= -tol::BOUNDARY_BAND {
            Location::Boundary
        } else {
            Location::Outside
        };
        Classification {
            location,
            active_facets: active,
            margin,
        }
    }

    /// Signed boundary margin; positive inside.
    pub fn boundary_margin(&self, p: &ProjectivePoint) -> f64 {
        self.contains(p).margin
    }

    /// Intersection of the line through two interior points with the
    /// boundary, ordered `a, x, y, b` along the chord.
    pub fn chord_endpoints(
        &self,
        x: &ProjectivePoint,
        y: &ProjectivePoint,
    ) -> Result<(ProjectivePoint, ProjectivePoint)> {
        let chord = self.chord(x, y)?;
        Ok((chord.a, chord.b))
    }

    /// Chord data with the affine parameters of the endpoints
    /// (x at 0, y at 1, a at s_a < 0, b at s_b > 1).
    pub fn chord(&self, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<Chord> {
        if self.contains(x).location != Location::Interior
            || self.contains(y).location != Location::Interior
        {
            return Err(CoreError::NotInterior);
        }
        let xc = self.chart.normalize(x.rep()).ok_or(CoreError::NotInterior)?;
        let yc = self.chart.normalize(y.rep()).ok_or(CoreError::NotInterior)?;
        let u = &yc - &xc;
        if u.norm() < 1e-13 * (1.0 + xc.norm()) {
            return Err(CoreError::CoincidentPoints);
        }
        let (s_a, s_b) = match &self.shape {
            Shape::Polytope { facets, .. } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for facet in facets {
                    let alpha = facet.functional.dot(&xc);
                    let slope = facet.functional.dot(&u);
                    if slope.abs() < 1e-15 {
                        continue;
                    }
                    let root = -alpha / slope;
                    if slope < 0.0 {
                        hi = hi.min(root);
                    } else {
                        lo = lo.max(root);
                    }
                }
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(CoreError::NotProperlyConvex {
                        context: "chord is unbounded in the chart".into(),
                    });
                }
                (lo, hi)
            }
            Shape::Ellipsoid { quadric } => {
                let qu = quadric * &u;
                let a2 = qu.dot(&u);
                let b1 = 2.0 * qu.dot(&xc);
                let c0 = (quadric * &xc).dot(&xc);
                let disc = b1 * b1 - 4.0 * a2 * c0;
                if a2 <= 0.0 || disc <= 0.0 {
                    return Err(CoreError::NotProperlyConvex {
                        context: "chord does not meet the quadric twice".into(),
                    });
                }
                let sq = disc.sqrt();
                ((-b1 - sq) / (2.0 * a2), (-b1 + sq) / (2.0 * a2))
            }
        };
        let a = ProjectivePoint::new(&xc + &u * s_a)?;
        let b = ProjectivePoint::new(&xc + &u * s_b)?;
        Ok(Chord {
            a,
            b,
            s_a,
            s_b,
            x_chart: xc,
            direction: u,
        })
    }

    /// The open face of a point of the closed domain.
    pub fn open_face(&self, x: &ProjectivePoint) -> Result<Face> {
        let class = self.contains(x);
        match class.location {
            Location::Outside => Err(CoreError::OutsideDomain),
            Location::Interior => {
                let d = self.ambient_dim();
                Ok(Face {
                    base: x.clone(),
                    active_facets: Vec::new(),
                    vertex_ids: (0..self.vertices().len()).collect(),
                    span: DMatrix::identity(d, d),
                    dim: self.proj_dim(),
                    is_domain: true,
                    samples: vec![self.interior.clone(), x.clone()],
                })
            }
            Location::Boundary => match &self.shape {
                Shape::Ellipsoid { .. } => {
                    let span =
                        DMatrix::from_columns(&[x.rep().clone()]);
                    Ok(Face {
                        base: x.clone(),
                        active_facets: Vec::new(),
                        vertex_ids: Vec::new(),
                        span,
                        dim: 0,
                        is_domain: false,
                        samples: vec![x.clone()],
                    })
                }
                Shape::Polytope {
                    facets,
                    vertex_lifts,
                    ..
                } => {
                    let active = class.active_facets;
                    let vertex_ids: Vec<usize> = (0..vertex_lifts.len())
                        .filter(|&i| {
                            active.iter().all(|&j| {
                                facets[j].functional.dot(&vertex_lifts[i]).abs()
                                    <= tol::BOUNDARY_BAND * 10.0
                            })
                        })
                        .collect();
                    let mut cols: Vec<DVector<f64>> =
                        vertex_ids.iter().map(|&i| vertex_lifts[i].clone()).collect();
                    cols.push(x.rep().clone());
                    let span = orthonormal_span(&cols);
                    let dim = span.ncols().saturating_sub(1);
                    let mut samples = vec![x.clone()];
                    if !vertex_ids.is_empty() {
                        let mut bary = DVector::zeros(self.ambient_dim());
                        for &i in &vertex_ids {
                            bary += self
                                .chart
                                .normalize(&vertex_lifts[i])
                                .expect("vertices are chart-finite");
                        }
                        bary /= vertex_ids.len() as f64;
                        samples.push(ProjectivePoint::new(bary)?);
                    }
                    Ok(Face {
                        base: x.clone(),
                        active_facets: active,
                        vertex_ids,
                        span,
                        dim,
                        is_domain: false,
                        samples,
                    })
                }
            },
        }
    }

    /// Image of the domain under a projective map.
    pub fn transform(&self, g: &crate::projective::ProjectiveMap) -> Result<Self> {
        match &self.shape {
            Shape::Polytope { vertex_lifts, .. } => {
                let lifts: Vec<DVector<f64>> =
                    vertex_lifts.iter().map(|v| g.lift() * v).collect();
                Self::polytope(lifts)
            }
            Shape::Ellipsoid { quadric } => {
                let ginv = g
                    .lift()
                    .clone()
                    .try_inverse()
                    .ok_or(CoreError::NotInvertible { residual: 0.0 })?;
                let q = ginv.transpose() * quadric * &ginv;
                let q = (&q + q.transpose()) * 0.5;
                let chi = ginv.transpose() * self.chart.functional();
                let interior = g.apply(&self.interior);
                let chart = Chart::new(chi)?;
                Ok(Self {
                    chart,
                    shape: Shape::Ellipsoid { quadric: q },
                    interior,
                })
            }
        }
    }
}

/// Chord of a domain through two interior points.
#[derive(Debug, Clone)]
pub struct Chord {
    pub a: ProjectivePoint,
    pub b: ProjectivePoint,
    pub s_a: f64,
    pub s_b: f64,
    pub x_chart: DVector<f64>,
    pub direction: DVector<f64>,
}

impl Chord {
    /// Point at affine parameter s along the chord (x at 0, y at 1).
    pub fn at(&self, s: f64) -> ProjectivePoint {
        ProjectivePoint::new(&self.x_chart + &self.direction * s).expect("chord point nonzero")
    }

    /// Whether either endpoint coincides with a query point at the
    /// boundary tolerance.
    pub fn near_boundary(&self) -> bool {
        self.s_a > -tol::BOUNDARY_BAND || self.s_b < 1.0 + tol::BOUNDARY_BAND
    }
}

/// The open face F(x) of a domain point.
#[derive(Debug, Clone)]
pub struct Face {
    pub base: ProjectivePoint,
    pub active_facets: Vec<usize>,
    pub vertex_ids: Vec<usize>,
    /// Orthonormal basis of the homogeneous span of the face.
    pub span: DMatrix<f64>,
    /// Projective dimension of the face.
    pub dim: usize,
    /// True when the base point is interior and the face is the domain.
    pub is_domain: bool,
    pub samples: Vec<ProjectivePoint>,
}

impl Face {
    /// Euclidean distance from a canonical representative to the span.
    pub fn span_distance(&self, v: &DVector<f64>) -> f64 {
        let proj = &self.span * (self.span.transpose() * v);
        (v - proj).norm() / v.norm().max(tol::MATRIX_ZERO)
    }

    /// Face membership: same active facet set (polytope), same point
    /// (ellipsoid boundary), or interior (full domain face).
    pub fn contains_point(&self, domain: &ConvexDomain, p: &ProjectivePoint) -> bool {
        let class = domain.contains(p);
        if self.is_domain {
            return class.location == Location::Interior;
        }
        match class.location {
            Location::Boundary => {
                if domain.is_polytope() {
                    class.active_facets == self.active_facets
                } else {
                    p.approx_eq(&self.base, tol::POINT_EQ * 10.0)
                }
            }
            _ => false,
        }
    }
}

/// A convex subset of a closed domain, generated by finitely many points
/// (the V-representation). Membership refers to the closed hull; the
/// relative interior and ideal-boundary samples realize the open-face
/// view used by the properly-embedded predicate.
#[derive(Debug, Clone)]
pub struct ConvexSubset {
    ambient: Arc<ConvexDomain>,
    generators: Vec<ProjectivePoint>,
    gen_chart: Vec<DVector<f64>>,
    span_dim: usize,
    span_basis: DMatrix<f64>,
}

impl ConvexSubset {
    /// Hull of a point set inside the closed domain. Non-extreme points
    /// are dropped from the generator list.
    pub fn hull(ambient: Arc<ConvexDomain>, points: &[ProjectivePoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(CoreError::EmptyInput {
                context: "convex hull of an empty point set",
            });
        }
        let mut unique: Vec<ProjectivePoint> = Vec::new();
        for p in points {
            if ambient.contains(p).location == Location::Outside {
                return Err(CoreError::OutsideDomain);
            }
            if !unique.iter().any(|q| q.approx_eq(p, tol::POINT_EQ)) {
                unique.push(p.clone());
            }
        }
        let chart_pts: Vec<DVector<f64>> = unique
            .iter()
            .map(|p| {
                ambient
                    .chart()
                    .coords(p)
                    .ok_or(CoreError::OutsideDomain)
            })
            .collect::<Result<_>>()?;
        // Extreme-point filter.
        let mut keep = vec![true; unique.len()];
        for i in 0..unique.len() {
            let others: Vec<DVector<f64>> = chart_pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && keep[*j])
                .map(|(_, y)| y.clone())
                .collect();
            if !others.is_empty() && point_in_affine_hull(&chart_pts[i], &others) {
                keep[i] = false;
            }
        }
        let generators: Vec<ProjectivePoint> = unique
            .into_iter()
            .zip(keep.iter())
            .filter(|(_, k)| **k)
            .map(|(p, _)| p)
            .collect();
        let gen_chart: Vec<DVector<f64>> = chart_pts
            .into_iter()
            .zip(keep.iter())
            .filter(|(_, k)| **k)
            .map(|(y, _)| y)
            .collect();
        let cols: Vec<DVector<f64>> = generators.iter().map(|p| p.rep().clone()).collect();
        let span_basis = orthonormal_span(&cols);
        let span_dim = span_basis.ncols() - 1;
        Ok(Self {
            ambient,
            generators,
            gen_chart,
            span_dim,
            span_basis,
        })
    }

    pub fn ambient(&self) -> &Arc<ConvexDomain> {
        &self.ambient
    }

    pub fn generators(&self) -> &[ProjectivePoint] {
        &self.generators
    }

    pub fn generator_chart_coords(&self) -> &[DVector<f64>] {
        &self.gen_chart
    }

    /// Projective dimension of the relative interior.
    pub fn span_dim(&self) -> usize {
        self.span_dim
    }

    pub fn span_basis(&self) -> &DMatrix<f64> {
        &self.span_basis
    }

    /// Closed-hull membership via a linear feasibility test.
    pub fn contains(&self, p: &ProjectivePoint) -> bool {
        match self.ambient.chart().coords(p) {
            Some(y) => point_in_affine_hull(&y, &self.gen_chart),
            None => false,
        }
    }

    /// Chart barycenter of the generators; lies in the relative interior.
    pub fn relative_interior_point(&self) -> ProjectivePoint {
        let mut bary = DVector::zeros(self.gen_chart[0].len());
        for y in &self.gen_chart {
            bary += y;
        }
        bary /= self.gen_chart.len() as f64;
        ProjectivePoint::new(self.ambient.chart().lift(&bary)).expect("chart lift nonzero")
    }

    /// The subset as a properly convex domain in reduced homogeneous
    /// coordinates of its span. Fails for single points.
    pub fn as_domain(&self) -> Result<ConvexDomain> {
        if self.span_dim == 0 {
            return Err(CoreError::EmptySubset {
                context: "a single point has no relative interior domain",
            });
        }
        let lifts: Vec<DVector<f64>> = self
            .generators
            .iter()
            .map(|p| {
                let v = self
                    .ambient
                    .chart()
                    .normalize(p.rep())
                    .expect("generators are chart-finite");
                self.span_basis.transpose() * v
            })
            .collect();
        ConvexDomain::polytope(lifts)
    }

    /// Lifts a point of the reduced span domain back to the ambient.
    pub fn from_span(&self, p: &ProjectivePoint) -> ProjectivePoint {
        ProjectivePoint::new(&self.span_basis * p.rep()).expect("span lift nonzero")
    }

    /// Projects an ambient point into span coordinates (no validation).
    pub fn to_span(&self, p: &ProjectivePoint) -> ProjectivePoint {
        ProjectivePoint::new(self.span_basis.transpose() * p.rep()).expect("nonzero projection")
    }

    /// Samples of the relative boundary of the hull: the generators plus
    /// midpoints of generator pairs that lie on the hull boundary. Exact
    /// for polytopal subsets.
    pub fn ideal_boundary_samples(&self) -> Vec<ProjectivePoint> {
        if self.span_dim == 0 {
            return Vec::new();
        }
        let mut samples = self.generators.to_vec();
        if let Ok(hull_domain) = self.as_domain() {
            for i in 0..self.generators.len() {
                for j in (i + 1)..self.generators.len() {
                    let mid = (&self.gen_chart[i] + &self.gen_chart[j]) * 0.5;
                    let lifted =
                        ProjectivePoint::new(self.ambient.chart().lift(&mid)).expect("nonzero");
                    let reduced = self.to_span(&lifted);
                    if hull_domain.contains(&reduced).location == Location::Boundary {
                        samples.push(lifted);
                    }
                }
            }
        }
        samples
    }
}

/// Whether the relative interior of the subset's hull is properly
/// embedded in the domain: every sampled ideal-boundary point lies on
/// the domain boundary.
pub fn properly_embedded(domain: &ConvexDomain, subset: &ConvexSubset) -> bool {
    subset
        .ideal_boundary_samples()
        .iter()
        .all(|p| domain.contains(p).location == Location::Boundary)
}

/// Report of the face/line property check: whether (p,q) and (x,y) lie
/// in the open domain, which must agree when p, q range over the faces
/// of x and y.
#[derive(Debug, Clone, Copy)]
pub struct FaceLineReport {
    pub xy_in_domain: bool,
    pub pq_in_domain: bool,
}

impl FaceLineReport {
    pub fn consistent(&self) -> bool {
        self.xy_in_domain == self.pq_in_domain
    }
}

/// Checks Observation-style face/line compatibility: for p in F(x) and
/// q in F(y), the open segment (p,q) lies in the domain iff (x,y) does
/// (sampled at interior parameters).
pub fn face_line_property(
    domain: &ConvexDomain,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
    p: &ProjectivePoint,
    q: &ProjectivePoint,
) -> Result<FaceLineReport> {
    let fx = domain.open_face(x)?;
    let fy = domain.open_face(y)?;
    if !fx.contains_point(domain, p) {
        return Err(CoreError::FaceMembershipViolated {
            context: "p is not in the face of x",
        });
    }
    if !fy.contains_point(domain, q) {
        return Err(CoreError::FaceMembershipViolated {
            context: "q is not in the face of y",
        });
    }
    Ok(FaceLineReport {
        xy_in_domain: open_segment_in_domain(domain, x, y),
        pq_in_domain: open_segment_in_domain(domain, p, q),
    })
}

/// Samples the open segment between two closed-domain points at interior
/// parameters and reports whether all samples are interior. Empty
/// segments (coincident points) are not in the open domain.
pub fn open_segment_in_domain(
    domain: &ConvexDomain,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
) -> bool {
    if x.approx_eq(y, tol::POINT_EQ) {
        return false;
    }
    let (Some(xc), Some(yc)) = (
        domain.chart().normalize(x.rep()),
        domain.chart().normalize(y.rep()),
    ) else {
        return false;
    };
    const STEPS: usize = 17;
    (1..STEPS).all(|k| {
        let t = k as f64 / STEPS as f64;
        let p = ProjectivePoint::new(&xc * (1.0 - t) + &yc * t).expect("nonzero");
        domain.contains(&p).location == Location::Interior
    })
}

/// Affine rank of a point set (dimension of its affine span).
fn affine_rank(points: &[DVector<f64>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let cols: Vec<DVector<f64>> = points[1..].iter().map(|p| p - base).collect();
    let m = DMatrix::from_columns(&cols);
    m.rank(1e-10 * (1.0 + m.norm()))
}

/// Orthonormal basis (as columns) of the hyperplane orthogonal to a unit
/// vector, via the Householder reflection sending it to a coordinate
/// axis.
pub fn orthonormal_complement(u: &DVector<f64>) -> DMatrix<f64> {
    let d = u.len();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += sign;
    let wsq = w.norm_squared();
    let mut basis = DMatrix::zeros(d, d - 1);
    for j in 1..d {
        let coeff = 2.0 * w[j] / wsq;
        for i in 0..d {
            let e = if i == j { 1.0 } else { 0.0 };
            basis[(i, j - 1)] = e - coeff * w[i];
        }
    }
    basis
}

/// Orthonormal basis (as columns) of the span of the given vectors.
pub fn orthonormal_span(cols: &[DVector<f64>]) -> DMatrix<f64> {
    let m = DMatrix::from_columns(cols);
    let svd = m.clone().svd(true, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > smax * tol::SV_CUTOFF)
        .count()
        .max(1);
    svd.u.expect("svd with u").columns(0, rank).into_owned()
}

/// Enumerates the facets of a full-dimensional polytope given by chart
/// coordinates of its vertices, by brute force over vertex subsets.
/// Fine for desk-scale dimensions (chart dimension at most 9).
fn enumerate_facets(chart: &Chart, vertex_chart: &[DVector<f64>]) -> Result<Vec<Facet>> {
    let n = vertex_chart[0].len();
    let count = vertex_chart.len();
    if count < n + 1 {
        return Err(CoreError::NotProperlyConvex {
            context: "too few vertices for a full-dimensional polytope".into(),
        });
    }
    let mut facets: Vec<(DVector<f64>, f64, Vec<usize>)> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        if let Some((w, c)) = hyperplane_through(vertex_chart, &subset) {
            // Supporting side test.
            let mut pos = false;
            let mut neg = false;
            for y in vertex_chart {
                let s = w.dot(y) - c;
                if s > 1e-9 {
                    pos = true;
                }
                if s < -1e-9 {
                    neg = true;
                }
                if pos && neg {
                    break;
                }
            }
            if pos != neg {
                // Orient so the domain satisfies w . y <= c.
                let (w, c) = if pos { (-w, -c) } else { (w, c) };
                let on_facet: Vec<usize> = (0..count)
                    .filter(|&i| (w.dot(&vertex_chart[i]) - c).abs() <= 1e-9)
                    .collect();
                let duplicate = facets.iter().any(|(fw, fc, _)| {
                    (fw - &w).norm() < 1e-8 && (fc - c).abs() < 1e-8
                });
                if !duplicate {
                    facets.push((w, c, on_facet));
                }
            }
        }
        if !next_subset(&mut subset, count) {
            break;
        }
    }
    if facets.is_empty() {
        return Err(CoreError::NotProperlyConvex {
            context: "facet enumeration found no supporting hyperplanes".into(),
        });
    }
    // Convert (w, c) in chart coordinates to homogeneous functionals
    // f(v) = c * chi(v) - (B w) . v, which are >= 0 on the domain cone.
    let mut result = Vec::with_capacity(facets.len());
    for (w, c, vertex_set) in facets {
        let bw = &chart.basis * &w;
        let constant = c + bw.dot(&chart.origin);
        let f = chart.functional() * constant - bw;
        let norm = f.norm();
        if norm < tol::MATRIX_ZERO {
            continue;
        }
        result.push(Facet {
            functional: f / norm,
            vertex_set,
        });
    }
    Ok(result)
}

/// Hyperplane { w . y = c } through the indexed points, or None if they
/// are affinely dependent.
fn hyperplane_through(points: &[DVector<f64>], subset: &[usize]) -> Option<(DVector<f64>, f64)> {
    let n = points[0].len();
    // Solve [y_i, -1] . (w, c) = 0 for the n subset points. The matrix is
    // padded to square so the SVD carries the full right factor.
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for (r, &i) in subset.iter().enumerate() {
        for c in 0..n {
            m[(r, c)] = points[i][c];
        }
        m[(r, n)] = -1.0;
    }
    let svd = m.svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.max().max(1.0);
    // The padding row contributes exactly one zero singular value.
    let null_dim = sv.iter().filter(|s| **s <= smax * 1e-10).count();
    if null_dim != 1 {
        return None;
    }
    let vt = svd.v_t.expect("svd with v_t");
    let h = vt.row(vt.nrows() - 1).transpose();
    let w = DVector::from_iterator(n, h.iter().take(n).cloned());
    if w.norm() < 1e-10 {
        return None;
    }
    Some((w.clone(), h[n]))
}

fn next_subset(subset: &mut [usize], count: usize) -> bool {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::build_standard_simplex;

    fn pt(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_slice(coords).unwrap()
    }

    fn unit_square() -> ConvexDomain {
        ConvexDomain::polytope(vec![
            DVector::from_column_slice(&[1.0, 1.0, 1.0]),
            DVector::from_column_slice(&[-1.0, 1.0, 1.0]),
            DVector::from_column_slice(&[-1.0, -1.0, 1.0]),
            DVector::from_column_slice(&[1.0, -1.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn triangle_contains_classification() {
        let tri = build_standard_simplex(2).unwrap();
        assert_eq!(
            tri.contains(&pt(&[1.0, 1.0, 1.0])).location,
            Location::Interior
        );
        let edge = tri.contains(&pt(&[1.0, 1.0, 0.0]));
        assert_eq!(edge.location, Location::Boundary);
        assert_eq!(edge.active_facets.len(), 1);
        assert_eq!(
            tri.contains(&pt(&[1.0, -1.0, 1.0])).location,
            Location::Outside
        );
    }

    #[test]
    fn triangle_has_three_facets() {
        let tri = build_standard_simplex(2).unwrap();
        assert_eq!(tri.facets().len(), 3);
        // Facets vanish on exactly two vertices each.
        for f in tri.facets() {
            assert_eq!(f.vertex_set.len(), 2);
        }
    }

    #[test]
    fn square_has_four_facets() {
        let sq = unit_square();
        assert_eq!(sq.facets().len(), 4);
    }

    #[test]
    fn unit_ball_contains() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        assert_eq!(
            ball.contains(&pt(&[0.0, 0.0, 1.0])).location,
            Location::Interior
        );
        assert_eq!(
            ball.contains(&pt(&[1.0, 0.0, 1.0])).location,
            Location::Boundary
        );
        assert_eq!(
            ball.contains(&pt(&[1.5, 0.0, 1.0])).location,
            Location::Outside
        );
    }

    #[test]
    fn disk_diameter_chord() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let x = pt(&[0.0, 0.0, 1.0]);
        let y = pt(&[0.5, 0.0, 1.0]);
        let (a, b) = ball.chord_endpoints(&x, &y).unwrap();
        assert!(a.approx_eq(&pt(&[-1.0, 0.0, 1.0]), 1e-9));
        assert!(b.approx_eq(&pt(&[1.0, 0.0, 1.0]), 1e-9));
    }

    #[test]
    fn triangle_chord_toward_vertex() {
        let tri = build_standard_simplex(2).unwrap();
        let x = pt(&[1.0, 1.0, 1.0]);
        // Toward e1: y = barycenter moved toward [1:0:0].
        let y = pt(&[2.0, 1.0, 1.0]);
        let (a, b) = tri.chord_endpoints(&x, &y).unwrap();
        // a lies on the facet {x_1 = 0} (opposite the motion), b on the
        // edge where x_2 = x_3 hits the boundary, i.e. x_2 = x_3 = 0 is
        // impossible, so b is on one of the other facets.
        assert!(a.rep()[0].abs() < 1e-9);
        assert_eq!(tri.contains(&a).location, Location::Boundary);
        assert_eq!(tri.contains(&b).location, Location::Boundary);
    }

    #[test]
    fn chord_rejects_boundary_and_coincident_inputs() {
        let tri = build_standard_simplex(2).unwrap();
        let x = pt(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            tri.chord(&x, &pt(&[1.0, 1.0, 0.0])),
            Err(CoreError::NotInterior)
        ));
        assert!(matches!(
            tri.chord(&x, &x),
            Err(CoreError::CoincidentPoints)
        ));
    }

    #[test]
    fn face_of_edge_midpoint_is_open_edge() {
        let sq = unit_square();
        let mid = pt(&[1.0, 0.0, 1.0]);
        let face = sq.open_face(&mid).unwrap();
        assert_eq!(face.dim, 1);
        assert_eq!(face.vertex_ids.len(), 2);
    }

    #[test]
    fn face_of_corner_is_singleton() {
        let sq = unit_square();
        let corner = pt(&[1.0, 1.0, 1.0]);
        let face = sq.open_face(&corner).unwrap();
        assert_eq!(face.dim, 0);
    }

    #[test]
    fn face_of_interior_point_is_domain() {
        let sq = unit_square();
        let face = sq.open_face(&pt(&[0.1, 0.2, 1.0])).unwrap();
        assert!(face.is_domain);
        assert_eq!(face.dim, 2);
    }

    #[test]
    fn face_partition_property() {
        // y in F(x) implies F(x) = F(y): same active facet sets.
        let sq = unit_square();
        let x = pt(&[1.0, 0.3, 1.0]);
        let y = pt(&[1.0, -0.7, 1.0]);
        let fx = sq.open_face(&x).unwrap();
        let fy = sq.open_face(&y).unwrap();
        assert!(fx.contains_point(&sq, &y));
        assert_eq!(fx.active_facets, fy.active_facets);
    }

    #[test]
    fn face_boundary_strictly_smaller() {
        // A corner is on the boundary of an edge face and its own face is
        // strictly smaller (more active facets).
        let sq = unit_square();
        let edge_mid = pt(&[1.0, 0.0, 1.0]);
        let corner = pt(&[1.0, 1.0, 1.0]);
        let fe = sq.open_face(&edge_mid).unwrap();
        let fc = sq.open_face(&corner).unwrap();
        assert!(fc.active_facets.len() > fe.active_facets.len());
        assert!(fe
            .active_facets
            .iter()
            .all(|j| fc.active_facets.contains(j)));
    }

    #[test]
    fn hull_of_two_points_is_segment() {
        let sq = Arc::new(unit_square());
        let x = pt(&[0.5, 0.0, 1.0]);
        let y = pt(&[-0.5, 0.0, 1.0]);
        let seg = ConvexSubset::hull(sq.clone(), &[x.clone(), y.clone()]).unwrap();
        assert_eq!(seg.span_dim(), 1);
        assert!(seg.contains(&pt(&[0.0, 0.0, 1.0])));
        assert!(seg.contains(&x));
        assert!(!seg.contains(&pt(&[0.0, 0.1, 1.0])));
    }

    #[test]
    fn hull_of_triangle_vertices() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let vs = tri.vertices().to_vec();
        let hull = ConvexSubset::hull(tri.clone(), &vs).unwrap();
        assert_eq!(hull.span_dim(), 2);
        assert!(hull.contains(&pt(&[1.0, 1.0, 1.0])));
    }

    #[test]
    fn hull_drops_non_extreme_generators() {
        let sq = Arc::new(unit_square());
        let pts = [
            pt(&[0.5, 0.0, 1.0]),
            pt(&[-0.5, 0.0, 1.0]),
            pt(&[0.0, 0.0, 1.0]),
        ];
        let seg = ConvexSubset::hull(sq, &pts).unwrap();
        assert_eq!(seg.generators().len(), 2);
    }

    #[test]
    fn properly_embedded_diagonal_true_interior_false() {
        let sq = Arc::new(unit_square());
        let diagonal = ConvexSubset::hull(
            sq.clone(),
            &[pt(&[1.0, 1.0, 1.0]), pt(&[-1.0, -1.0, 1.0])],
        )
        .unwrap();
        assert!(properly_embedded(&sq, &diagonal));

        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let half = ConvexSubset::hull(
            tri.clone(),
            &[pt(&[1.0, 1.0, 1.0]), pt(&[1.0, 0.0, 0.0])],
        )
        .unwrap();
        assert!(!properly_embedded(&tri, &half));
    }

    #[test]
    fn simplex_inside_itself_is_properly_embedded() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let vs = tri.vertices().to_vec();
        let hull = ConvexSubset::hull(tri.clone(), &vs).unwrap();
        assert!(properly_embedded(&tri, &hull));
    }

    #[test]
    fn face_line_property_cases() {
        let sq = unit_square();
        // Opposite edges: x, y interior of x=1 and x=-1 edges.
        let x = pt(&[1.0, 0.2, 1.0]);
        let y = pt(&[-1.0, 0.1, 1.0]);
        let p = pt(&[1.0, -0.4, 1.0]);
        let q = pt(&[-1.0, 0.6, 1.0]);
        let report = face_line_property(&sq, &x, &y, &p, &q).unwrap();
        assert!(report.xy_in_domain && report.pq_in_domain);

        // Same corner degenerate case.
        let c = pt(&[1.0, 1.0, 1.0]);
        let report = face_line_property(&sq, &c, &c, &c, &c).unwrap();
        assert!(!report.xy_in_domain && !report.pq_in_domain);

        // Two vertices of a triangle span a boundary edge.
        let tri = build_standard_simplex(2).unwrap();
        let v1 = pt(&[1.0, 0.0, 0.0]);
        let v2 = pt(&[0.0, 1.0, 0.0]);
        let report = face_line_property(&tri, &v1, &v2, &v1, &v2).unwrap();
        assert!(!report.xy_in_domain && !report.pq_in_domain);
    }

    #[test]
    fn face_membership_violation_detected() {
        let sq = unit_square();
        let x = pt(&[1.0, 0.2, 1.0]);
        let y = pt(&[-1.0, 0.1, 1.0]);
        let wrong = pt(&[0.3, 1.0, 1.0]); // on a different edge
        assert!(matches!(
            face_line_property(&sq, &x, &y, &wrong, &y),
            Err(CoreError::FaceMembershipViolated { .. })
        ));
    }

    #[test]
    fn transform_polytope_roundtrip() {
        let tri = build_standard_simplex(2).unwrap();
        let g = crate::projective::ProjectiveMap::from_rows(
            3,
            &[2.0, 0.3, 0.0, 0.1, 1.0, 0.2, 0.0, 0.4, 1.5],
        )
        .unwrap();
        let image = tri.transform(&g).unwrap();
        let p = pt(&[1.0, 1.0, 1.0]);
        assert_eq!(image.contains(&g.apply(&p)).location, Location::Interior);
        let back = image.transform(&g.inverse().unwrap()).unwrap();
        assert_eq!(back.contains(&p).location, Location::Interior);
        assert_eq!(back.vertices().len(), 3);
    }

    #[test]
    fn transform_ellipsoid_preserves_membership() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let g = crate::projective::ProjectiveMap::from_rows(
            3,
            &[1.2, 0.1, 0.3, 0.0, 0.8, -0.2, 0.05, 0.0, 1.0],
        )
        .unwrap();
        let image = ball.transform(&g).unwrap();
        for p in [
            pt(&[0.0, 0.0, 1.0]),
            pt(&[0.3, -0.4, 1.0]),
            pt(&[0.9, 0.1, 1.0]),
        ] {
            assert_eq!(
                image.contains(&g.apply(&p)).location,
                ball.contains(&p).location
            );
        }
    }

    #[test]
    fn rejects_non_extreme_vertex_lists() {
        let bad = ConvexDomain::polytope(vec![
            DVector::from_column_slice(&[1.0, 1.0, 1.0]),
            DVector::from_column_slice(&[-1.0, 1.0, 1.0]),
            DVector::from_column_slice(&[-1.0, -1.0, 1.0]),
            DVector::from_column_slice(&[1.0, -1.0, 1.0]),
            DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        ]);
        assert!(matches!(bad, Err(CoreError::NotProperlyConvex { .. })));
    }

    #[test]
    fn rejects_degenerate_vertex_lists() {
        let bad = ConvexDomain::polytope(vec![
            DVector::from_column_slice(&[1.0, 0.0, 1.0]),
            DVector::from_column_slice(&[-1.0, 0.0, 1.0]),
        ]);
        assert!(matches!(bad, Err(CoreError::NotProperlyConvex { .. })));
    }
}
