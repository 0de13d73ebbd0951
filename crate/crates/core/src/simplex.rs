//! Closed-form metric geometry of the open simplex: the explicit Hilbert
//! metric formula, the log-ratio chart to R^k with its polyhedral norm,
//! and standard simplex builders.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::domain::{properly_embedded, ConvexDomain, ConvexSubset};
use crate::error::CoreError;
use crate::projective::ProjectivePoint;
use crate::tol;
use crate::Result;

/// The standard open k-simplex in P(R^{k+1}), with the coordinate points
/// as vertices and the coordinate hyperplanes as facets.
pub fn build_standard_simplex(k: usize) -> Result<ConvexDomain> {
    if k < 1 {
        return Err(CoreError::EmptyInput {
            context: "simplex dimension must be at least 1",
        });
    }
    let d = k + 1;
    let lifts: Vec<DVector<f64>> = (0..d)
        .map(|i| {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            v
        })
        .collect();
    ConvexDomain::polytope(lifts)
}

/// All-positive representative of a point of the open simplex: flip the
/// sign so the coordinate of largest magnitude is positive, then require
/// every coordinate to clear a small positive floor.
pub fn positive_representative(x: &ProjectivePoint) -> Result<DVector<f64>> {
    let mut v = x.rep().clone();
    let mut max_abs = 0.0;
    let mut max_val = 0.0;
    for c in v.iter() {
        if c.abs() > max_abs {
            max_abs = c.abs();
            max_val = *c;
        }
    }
    if max_val < 0.0 {
        v.neg_mut();
    }
    if v.iter().any(|c| *c <= tol::POSITIVE_EPS) {
        return Err(CoreError::NonPositiveCoordinates);
    }
    Ok(v)
}

/// Hilbert distance on the standard open k-simplex:
/// `max over i,j of (1/2) |log(x_i y_j / (y_i x_j))|`.
pub fn simplex_distance(x: &ProjectivePoint, y: &ProjectivePoint, k: usize) -> Result<f64> {
    let d = k + 1;
    if x.dim() != d || y.dim() != d {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            got: x.dim(),
        });
    }
    let xv = positive_representative(x)?;
    let yv = positive_representative(y)?;
    let logs: Vec<f64> = (0..d).map(|i| (xv[i] / yv[i]).ln()).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(0.5 * (max - min))
}

/// Log-ratio chart of the open k-simplex:
/// `Phi(x) = (log(x_2/x_1), ..., log(x_{k+1}/x_1))`.
pub fn phi_coordinates(x: &ProjectivePoint, k: usize) -> Result<Vec<f64>> {
    let d = k + 1;
    if x.dim() != d {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            got: x.dim(),
        });
    }
    let xv = positive_representative(x)?;
    Ok((1..d).map(|i| (xv[i] / xv[0]).ln()).collect())
}

/// Inverse of the log-ratio chart.
pub fn phi_inverse(v: &[f64]) -> ProjectivePoint {
    let mut coords = Vec::with_capacity(v.len() + 1);
    coords.push(1.0);
    coords.extend(v.iter().map(|z| z.exp()));
    ProjectivePoint::from_slice(&coords).expect("positive coordinates")
}

/// The polyhedral-norm distance on R^k carried over by the log-ratio
/// chart: `(1/2) max{ max |v_i - w_i|, max |(v_i - v_j) - (w_i - w_j)| }`.
pub fn dist_rd(v: &[f64], w: &[f64]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(CoreError::LengthMismatch {
            left: v.len(),
            right: w.len(),
        });
    }
    let mut max = 0.0_f64;
    for i in 0..v.len() {
        max = max.max((v[i] - w[i]).abs());
        for j in 0..v.len() {
            max = max.max(((v[i] - v[j]) - (w[i] - w[j])).abs());
        }
    }
    Ok(0.5 * max)
}

/// A simplex given by linearly independent vertices, optionally tied to
/// an ambient domain in which it must be properly embedded.
#[derive(Debug, Clone)]
pub struct SimplexFlat {
    vertices: Vec<ProjectivePoint>,
    dim: usize,
    ambient: Option<Arc<ConvexDomain>>,
}

impl SimplexFlat {
    pub fn new(
        vertices: Vec<ProjectivePoint>,
        ambient: Option<Arc<ConvexDomain>>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(CoreError::EmptyInput {
                context: "simplex needs at least one vertex",
            });
        }
        let cols: Vec<DVector<f64>> = vertices.iter().map(|p| p.rep().clone()).collect();
        let m = DMatrix::from_columns(&cols);
        let rank = m.rank(1e-10 * (1.0 + m.norm()));
        if rank != vertices.len() {
            return Err(CoreError::ValidationError(format!(
                "simplex vertices are linearly dependent (rank {rank} of {})",
                vertices.len()
            )));
        }
        let dim = vertices.len() - 1;
        if let Some(domain) = &ambient {
            if dim >= 1 {
                let hull = ConvexSubset::hull(domain.clone(), &vertices)?;
                if !properly_embedded(domain, &hull) {
                    return Err(CoreError::ValidationError(
                        "simplex is not properly embedded in the ambient domain".into(),
                    ));
                }
            }
        }
        Ok(Self {
            vertices,
            dim,
            ambient,
        })
    }

    pub fn vertices(&self) -> &[ProjectivePoint] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient(&self) -> Option<&Arc<ConvexDomain>> {
        self.ambient.as_ref()
    }

    /// Orthonormal basis of the homogeneous span of the vertices.
    pub fn span_basis(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.vertices.iter().map(|p| p.rep().clone()).collect();
        crate::domain::orthonormal_span(&cols)
    }

    /// A relative-interior point: equal-weight positive combination of
    /// the vertex representatives.
    pub fn barycenter(&self) -> ProjectivePoint {
        let mut sum = DVector::zeros(self.vertices[0].dim());
        for v in &self.vertices {
            // Positive combination requires sign-consistent lifts; use the
            // ambient chart when available.
            let rep = match &self.ambient {
                Some(domain) => domain
                    .chart()
                    .normalize(v.rep())
                    .unwrap_or_else(|| v.rep().clone()),
                None => v.rep().clone(),
            };
            sum += rep;
        }
        ProjectivePoint::new(sum).expect("barycenter nonzero")
    }

    /// Interior samples: normalized positive combinations of the vertex
    /// representatives with deterministic weight patterns.
    pub fn interior_samples(&self, per_vertex: usize) -> Vec<ProjectivePoint> {
        let mut samples = vec![self.barycenter()];
        if self.dim == 0 {
            return samples;
        }
        let reps: Vec<DVector<f64>> = self
            .vertices
            .iter()
            .map(|v| match &self.ambient {
                Some(domain) => domain
                    .chart()
                    .normalize(v.rep())
                    .unwrap_or_else(|| v.rep().clone()),
                None => v.rep().clone(),
            })
            .collect();
        for (i, rep) in reps.iter().enumerate() {
            for step in 1..=per_vertex {
                let w = step as f64 / (per_vertex as f64 + 1.0);
                let mut sum = DVector::zeros(rep.len());
                for (j, other) in reps.iter().enumerate() {
                    let weight = if i == j {
                        w + (1.0 - w) / reps.len() as f64
                    } else {
                        (1.0 - w) / reps.len() as f64
                    };
                    sum += other * weight;
                }
                samples.push(ProjectivePoint::new(sum).expect("nonzero"));
            }
        }
        samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_slice(coords).unwrap()
    }

    #[test]
    fn standard_simplices_have_coordinate_structure() {
        let interval = build_standard_simplex(1).unwrap();
        assert_eq!(interval.vertices().len(), 2);
        assert_eq!(interval.facets().len(), 2);

        let tri = build_standard_simplex(2).unwrap();
        assert_eq!(tri.vertices().len(), 3);
        assert_eq!(tri.facets().len(), 3);
        // Facets are the coordinate hyperplanes.
        for f in tri.facets() {
            let mut sorted: Vec<f64> = f.functional.iter().map(|c| c.abs()).collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(sorted[0] < 1e-9 && sorted[1] < 1e-9 && (sorted[2] - 1.0).abs() < 1e-9);
        }

        let tet = build_standard_simplex(3).unwrap();
        assert_eq!(tet.vertices().len(), 4);
        assert_eq!(tet.facets().len(), 4);
    }

    #[test]
    fn simplex_distance_closed_form() {
        let x = pt(&[1.0, 1.0, 1.0]);
        let y = pt(&[1.0, 2.0, 4.0]);
        assert_eq!(simplex_distance(&x, &x, 2).unwrap(), 0.0);
        let d = simplex_distance(&x, &y, 2).unwrap();
        assert!((d - 2.0_f64.ln()).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn phi_values() {
        let p = pt(&[1.0, 1.0, 1.0]);
        let v = phi_coordinates(&p, 2).unwrap();
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);

        let q = pt(&[1.0, 2.0, 4.0]);
        let w = phi_coordinates(&q, 2).unwrap();
        assert!((w[0] - 2.0_f64.ln()).abs() < 1e-12);
        assert!((w[1] - 4.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn phi_translates_under_diagonal_maps() {
        let g = crate::projective::ProjectiveMap::diagonal(&[
            (0.3_f64).exp(),
            (1.1_f64).exp(),
            (-0.4_f64).exp(),
        ])
        .unwrap();
        let x = pt(&[1.0, 2.0, 0.5]);
        let before = phi_coordinates(&x, 2).unwrap();
        let after = phi_coordinates(&g.apply(&x), 2).unwrap();
        assert!((after[0] - before[0] - (1.1 - 0.3)).abs() < 1e-10);
        assert!((after[1] - before[1] - (-0.4 - 0.3)).abs() < 1e-10);
    }

    #[test]
    fn dist_rd_values() {
        assert_eq!(dist_rd(&[0.4, -0.2], &[0.4, -0.2]).unwrap(), 0.0);
        let d = dist_rd(&[0.0, 0.0], &[2.0_f64.ln(), 4.0_f64.ln()]).unwrap();
        assert!((d - 2.0_f64.ln()).abs() < 1e-12);
        assert!(matches!(
            dist_rd(&[0.0], &[0.0, 1.0]),
            Err(CoreError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn isometry_on_sampled_pairs() {
        // dist_rd(Phi x, Phi y) equals the closed-form simplex distance.
        let mut state = 0x12345678_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for k in 1..=4usize {
            for _ in 0..50 {
                let x: Vec<f64> = (0..=k).map(|_| (next() * 2.0).exp()).collect();
                let y: Vec<f64> = (0..=k).map(|_| (next() * 2.0).exp()).collect();
                let px = pt(&x);
                let py = pt(&y);
                let lhs = simplex_distance(&px, &py, k).unwrap();
                let rhs = dist_rd(
                    &phi_coordinates(&px, k).unwrap(),
                    &phi_coordinates(&py, k).unwrap(),
                )
                .unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "k={k} lhs={lhs} rhs={rhs}");
            }
        }
    }

    #[test]
    fn rejects_sign_mixed_points() {
        let p = pt(&[1.0, -1.0, 1.0]);
        assert!(matches!(
            simplex_distance(&p, &p, 2),
            Err(CoreError::NonPositiveCoordinates)
        ));
    }

    #[test]
    fn diagonal_displacement_is_constant() {
        // For g = diag(e^{z_i}) the displacement is (z_max - z_min)/2
        // independent of the base point.
        let z: [f64; 4] = [0.7, -0.3, 0.2, 1.4];
        let entries: Vec<f64> = z.iter().map(|zi| zi.exp()).collect();
        let g = crate::projective::ProjectiveMap::diagonal(&entries).unwrap();
        let expected = 0.5 * (1.4 - (-0.3));
        for coords in [
            [1.0, 1.0, 1.0, 1.0],
            [0.2, 3.0, 1.0, 0.5],
            [5.0, 0.1, 0.1, 2.0],
        ] {
            let x = pt(&coords);
            let d = simplex_distance(&x, &g.apply(&x), 3).unwrap();
            assert!((d - expected).abs() < 1e-10);
        }
    }
}
