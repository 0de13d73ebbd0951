//! Projective points, projective maps, cross ratios, and limits of map
//! sequences in the projectivized endomorphism space.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// A point of real projective space, stored as its canonical
/// representative: Euclidean norm 1 with the first nonzero coordinate
/// positive. Two points are equal iff their canonical representatives
/// agree within tolerance.
#[derive(Debug, Clone)]
pub struct ProjectivePoint {
    coords: DVector<f64>,
}

impl ProjectivePoint {
    /// Builds a point from any nonzero homogeneous representative.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if !norm.is_finite() || norm < tol::MATRIX_ZERO {
            return Err(CoreError::EmptyInput {
                context: "projective point needs a nonzero coordinate vector",
            });
        }
        let mut v = coords / norm;
        // Sign convention: first coordinate of non-negligible magnitude is positive.
        let lead = v.iter().find(|c| c.abs() > 1e-12).copied().unwrap_or(0.0);
        if lead < 0.0 {
            v.neg_mut();
        }
        Ok(Self { coords: v })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// The canonical unit-norm representative.
    pub fn rep(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Canonical distance between two points: Euclidean distance of
    /// canonical representatives (0 for equal points, up to 2 overall).
    pub fn canonical_distance(&self, other: &Self) -> f64 {
        (&self.coords - &other.coords).norm()
    }

    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        self.canonical_distance(other) <= tolerance
    }

    /// Quantized key for deduplication at a fixed resolution.
    pub fn quantized_key(&self, step: f64) -> Vec<i64> {
        self.coords
            .iter()
            .map(|c| (c / step).round() as i64)
            .collect()
    }
}

/// An element of the projective linear group: an invertible matrix up to
/// nonzero scale, normalized so its largest absolute entry is 1, together
/// with the cached absolute values of the eigenvalues of that lift
/// (sorted descending).
#[derive(Debug, Clone)]
pub struct ProjectiveMap {
    matrix: DMatrix<f64>,
    spectrum: Vec<f64>,
}

impl ProjectiveMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(CoreError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() || scale < tol::MATRIX_ZERO {
            return Err(CoreError::NotInvertible { residual: 0.0 });
        }
        let normalized = matrix / scale;
        // Invertibility gauge: smallest singular value of the normalized lift.
        let svd = normalized.clone().svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        if smin < 1e-12 {
            return Err(CoreError::NotInvertible { residual: smin });
        }
        let spectrum = eigenvalue_moduli_of(&normalized)?;
        Ok(Self {
            matrix: normalized,
            spectrum,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            spectrum: vec![1.0; dim],
        }
    }

    pub fn from_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// The normalized lift (largest absolute entry 1).
    pub fn lift(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Absolute values of the eigenvalues of the normalized lift, sorted
    /// descending. Ratios of entries are independent of the lift.
    pub fn eigenvalue_moduli(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn apply(&self, p: &ProjectivePoint) -> ProjectivePoint {
        let image = &self.matrix * p.rep();
        ProjectivePoint::new(image).expect("invertible map sends nonzero vectors to nonzero")
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(CoreError::NotInvertible { residual: 0.0 })?;
        Self::new(inv)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(&self.matrix * &other.matrix)
    }

    /// Internal constructor for products of known-invertible maps, whose
    /// normalized lifts may be numerically near-singular.
    fn from_product(matrix: DMatrix<f64>) -> Result<Self> {
        let scale = matrix.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() || scale < tol::MATRIX_ZERO {
            return Err(CoreError::NotInvertible { residual: 0.0 });
        }
        let normalized = matrix / scale;
        let spectrum = eigenvalue_moduli_of(&normalized)?;
        Ok(Self {
            matrix: normalized,
            spectrum,
        })
    }

    pub fn pow(&self, n: u32) -> Result<Self> {
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..n {
            acc = &acc * &self.matrix;
            let scale = acc.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            acc /= scale;
        }
        Self::from_product(acc)
    }

    /// The sequence g, g^2, ..., g^N with per-step normalization.
    pub fn power_sequence(&self, n: u32) -> Result<Vec<Self>> {
        let mut out = Vec::with_capacity(n as usize);
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..n.max(1) {
            acc = &acc * &self.matrix;
            let scale = acc.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            acc /= scale;
            out.push(Self::from_product(acc.clone())?);
        }
        Ok(out)
    }

    /// Equality of normalized matrices up to global sign.
    pub fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let plus = (&self.matrix - &other.matrix).norm();
        let minus = (&self.matrix + &other.matrix).norm();
        plus.min(minus) <= tolerance
    }

    /// Relative size of the commutator `gh - hg` of normalized lifts,
    /// minimized over a scalar realignment of the two products.
    pub fn commutator_residual(&self, other: &Self) -> f64 {
        let gh = &self.matrix * &other.matrix;
        let hg = &other.matrix * &self.matrix;
        let denom = gh.norm().max(hg.norm()).max(tol::MATRIX_ZERO);
        // Best scalar s aligning gh with s*hg.
        let s = gh.dot(&hg) / hg.norm_squared().max(tol::MATRIX_ZERO);
        (&gh - hg * s).norm() / denom
    }
}

/// A nonzero endomorphism up to scale, with rank, image, and kernel
/// computed at the documented singular-value cutoff.
#[derive(Debug, Clone)]
pub struct EndomorphismClass {
    matrix: DMatrix<f64>,
    rank: usize,
    image: DMatrix<f64>,
    kernel: DMatrix<f64>,
}

impl EndomorphismClass {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let scale = matrix.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() || scale < tol::MATRIX_ZERO {
            return Err(CoreError::EmptyInput {
                context: "endomorphism class needs a nonzero matrix",
            });
        }
        let mut normalized = matrix / scale;
        // Sign convention: first entry of maximal magnitude (row-major) positive.
        let lead = normalized
            .transpose()
            .iter()
            .find(|c| c.abs() > 1.0 - 1e-12)
            .copied()
            .unwrap_or(1.0);
        if lead < 0.0 {
            normalized.neg_mut();
        }
        let svd = normalized.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let cutoff = smax * tol::SV_CUTOFF;
        let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
        let u = svd.u.as_ref().expect("svd with u");
        let vt = svd.v_t.as_ref().expect("svd with v_t");
        let d = normalized.nrows();
        let image = u.columns(0, rank).into_owned();
        let kernel = if rank < d {
            vt.rows(rank, d - rank).transpose().into_owned()
        } else {
            DMatrix::zeros(d, 0)
        };
        Ok(Self {
            matrix: normalized,
            rank,
            image,
            kernel,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Orthonormal basis of the image, one column per dimension.
    pub fn image_basis(&self) -> &DMatrix<f64> {
        &self.image
    }

    /// Orthonormal basis of the kernel, one column per dimension.
    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// Image of a point not in the kernel.
    pub fn apply(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        ProjectivePoint::new(&self.matrix * p.rep())
    }

    /// Euclidean distance from the canonical representative to the kernel.
    pub fn kernel_distance(&self, p: &ProjectivePoint) -> f64 {
        if self.kernel.ncols() == 0 {
            return p.rep().norm();
        }
        let proj = &self.kernel * (self.kernel.transpose() * p.rep());
        (p.rep() - proj).norm()
    }

    /// Euclidean distance from the canonical representative to the image.
    pub fn image_distance(&self, p: &ProjectivePoint) -> f64 {
        if self.image.ncols() == 0 {
            return p.rep().norm();
        }
        let proj = &self.image * (self.image.transpose() * p.rep());
        (p.rep() - proj).norm()
    }
}

/// Applies a map to a point; alias kept for symmetry with the free
/// functions below.
pub fn apply_map(g: &ProjectiveMap, p: &ProjectivePoint) -> ProjectivePoint {
    g.apply(p)
}

/// Cross ratio `[a,x,y,b]` of four collinear points, computed in an
/// affine parametrization of their common line. For points ordered
/// `a,x,y,b` along a segment the value is at least 1.
pub fn cross_ratio(
    a: &ProjectivePoint,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
    b: &ProjectivePoint,
) -> Result<f64> {
    let d = a.dim();
    let mut stacked = DMatrix::zeros(4, d);
    for (row, p) in [a, x, y, b].iter().enumerate() {
        stacked.row_mut(row).copy_from(&p.rep().transpose());
    }
    let svd = stacked.clone().svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    if sv.len() > 2 && sv[2] > smax * tol::COLLINEARITY_CUTOFF {
        return Err(CoreError::NonCollinear {
            residual: sv[2] / smax,
        });
    }
    // Coordinates of each point in the two dominant right singular directions.
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let u1 = vt.row(0).transpose();
    let u2 = vt.row(1).transpose();
    let coord = |p: &ProjectivePoint| -> (f64, f64) { (p.rep().dot(&u1), p.rep().dot(&u2)) };
    let (aa, ab) = coord(a);
    let (xa, xb) = coord(x);
    let (ya, yb) = coord(y);
    let (ba, bb) = coord(b);
    let det = |(p1, p2): (f64, f64), (q1, q2): (f64, f64)| p1 * q2 - p2 * q1;
    let xa_det = det((xa, xb), (aa, ab)).abs();
    let yb_det = det((ya, yb), (ba, bb)).abs();
    if xa_det < 1e-14 {
        return Err(CoreError::DegenerateConfiguration { context: "x = a" });
    }
    if yb_det < 1e-14 {
        return Err(CoreError::DegenerateConfiguration { context: "y = b" });
    }
    let xb_det = det((xa, xb), (ba, bb)).abs();
    let ya_det = det((ya, yb), (aa, ab)).abs();
    Ok((xb_det * ya_det) / (xa_det * yb_det))
}

/// Sorted descending absolute values of the eigenvalues of a matrix.
pub fn eigenvalue_moduli_of(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), 1e-14, 10_000)
        .ok_or(CoreError::EigenSolverFailure)?;
    let eigen = schur
        .complex_eigenvalues();
    let mut moduli: Vec<f64> = eigen.iter().map(|c| c.norm()).collect();
    moduli.sort_by(|p, q| q.partial_cmp(p).expect("finite moduli"));
    Ok(moduli)
}

/// Sorted descending eigenvalue moduli of a projective map.
pub fn eigenvalue_moduli(g: &ProjectiveMap) -> Vec<f64> {
    g.eigenvalue_moduli().to_vec()
}

/// Limit of a sequence of maps in the projectivized endomorphism space.
#[derive(Debug, Clone)]
pub struct LimitResult {
    pub class: EndomorphismClass,
    /// Distance between the last two normalized terms; the caller decides
    /// whether this certifies convergence.
    pub residual: f64,
}

impl LimitResult {
    pub fn converged(&self, threshold: f64) -> bool {
        self.residual <= threshold
    }
}

/// Endomorphism class of the final normalized term of a map sequence,
/// with the consecutive-term residual attached.
pub fn projective_limit(maps: &[ProjectiveMap]) -> Result<LimitResult> {
    let last = maps.last().ok_or(CoreError::EmptyInput {
        context: "projective limit of an empty sequence",
    })?;
    let class = EndomorphismClass::new(last.lift().clone())?;
    let residual = if maps.len() >= 2 {
        let prev = EndomorphismClass::new(maps[maps.len() - 2].lift().clone())?;
        endo_distance(prev.matrix(), class.matrix())
    } else {
        f64::INFINITY
    };
    Ok(LimitResult { class, residual })
}

/// Distance in the projectivized endomorphism space between two
/// canonically normalized matrices (minimum over global sign).
pub fn endo_distance(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> f64 {
    let plus = (m1 - m2).norm();
    let minus = (m1 + m2).norm();
    plus.min(minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn pt(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_slice(coords).unwrap()
    }

    #[test]
    fn identity_fixes_points() {
        let g = ProjectiveMap::identity(3);
        let p = pt(&[1.0, 2.0, 3.0]);
        assert!(g.apply(&p).approx_eq(&p, 1e-12));
    }

    #[test]
    fn diagonal_action() {
        let g = ProjectiveMap::diagonal(&[2.0, 1.0]).unwrap();
        let p = pt(&[1.0, 1.0]);
        assert!(g.apply(&p).approx_eq(&pt(&[2.0, 1.0]), 1e-12));
    }

    #[test]
    fn scaled_lift_acts_identically() {
        let m = dmatrix![0.3, -1.2, 0.0; 2.0, 0.4, 1.0; 0.1, 0.0, 1.5];
        let g = ProjectiveMap::new(m.clone()).unwrap();
        let g5 = ProjectiveMap::new(m * 5.0).unwrap();
        let p = pt(&[0.2, -0.7, 1.0]);
        assert!(g.apply(&p).approx_eq(&g5.apply(&p), 1e-12));
    }

    #[test]
    fn canonical_representative_sign() {
        let p = pt(&[-1.0, 2.0, -2.0]);
        assert!(p.rep()[0] > 0.0);
        assert!((p.rep().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cross_ratio_affine_line_values() {
        // a=0, x=1, y=2, b=3 on an affine line: (2*2)/(1*1) = 4.
        let a = pt(&[0.0, 1.0]);
        let x = pt(&[1.0, 1.0]);
        let y = pt(&[2.0, 1.0]);
        let b = pt(&[3.0, 1.0]);
        let value = cross_ratio(&a, &x, &y, &b).unwrap();
        assert!((value - 4.0).abs() < 1e-12, "got {value}");
    }

    #[test]
    fn cross_ratio_coincident_middle_points_is_one() {
        let a = pt(&[0.0, 1.0, 0.0]);
        let x = pt(&[1.0, 1.0, 0.0]);
        let b = pt(&[3.0, 1.0, 0.0]);
        let value = cross_ratio(&a, &x, &x, &b).unwrap();
        assert!((value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_ratio_rejects_non_collinear() {
        let a = pt(&[1.0, 0.0, 0.0]);
        let x = pt(&[0.0, 1.0, 0.0]);
        let y = pt(&[0.0, 0.0, 1.0]);
        let b = pt(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            cross_ratio(&a, &x, &y, &b),
            Err(CoreError::NonCollinear { .. })
        ));
    }

    #[test]
    fn cross_ratio_rejects_degenerate_ends() {
        let a = pt(&[0.0, 1.0]);
        let y = pt(&[2.0, 1.0]);
        let b = pt(&[3.0, 1.0]);
        assert!(matches!(
            cross_ratio(&a, &a, &y, &b),
            Err(CoreError::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn moduli_of_diagonal_matrix() {
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let moduli = g.eigenvalue_moduli();
        // Normalized lift is diag(1, 1/2, 1/4); ratios match diag(4,2,1).
        assert!((moduli[0] / moduli[2] - 4.0).abs() < 1e-10);
        assert!((moduli[0] / moduli[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rotation_has_unit_moduli() {
        let g = ProjectiveMap::new(dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap();
        let moduli = g.eigenvalue_moduli();
        assert!((moduli[0] - moduli[1]).abs() < 1e-12);
    }

    #[test]
    fn power_limit_of_dominant_eigenvalue() {
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let seq: Vec<ProjectiveMap> = (1..=60).map(|n| g.pow(n).unwrap()).collect();
        let limit = projective_limit(&seq).unwrap();
        assert!(limit.residual < 1e-12);
        assert_eq!(limit.class.rank(), 1);
        let expected = EndomorphismClass::new(DMatrix::from_diagonal(
            &DVector::from_column_slice(&[1.0, 0.0, 0.0]),
        ))
        .unwrap();
        assert!(endo_distance(limit.class.matrix(), expected.matrix()) < 1e-10);
    }

    #[test]
    fn power_limit_of_identity() {
        let g = ProjectiveMap::identity(3);
        let seq: Vec<ProjectiveMap> = (1..=5).map(|n| g.pow(n).unwrap()).collect();
        let limit = projective_limit(&seq).unwrap();
        assert_eq!(limit.class.rank(), 3);
        assert!(limit.residual < 1e-15);
    }

    #[test]
    fn power_limit_with_tied_dominant_eigenvalues() {
        let g = ProjectiveMap::diagonal(&[4.0, 4.0, 1.0]).unwrap();
        let seq: Vec<ProjectiveMap> = (1..=60).map(|n| g.pow(n).unwrap()).collect();
        let limit = projective_limit(&seq).unwrap();
        assert_eq!(limit.class.rank(), 2);
        assert!(limit.residual < 1e-12);
    }

    #[test]
    fn limit_kernel_spans_non_maximal_eigenvectors() {
        let g = ProjectiveMap::diagonal(&[4.0, 2.0, 1.0]).unwrap();
        let seq: Vec<ProjectiveMap> = (1..=80).map(|n| g.pow(n).unwrap()).collect();
        let limit = projective_limit(&seq).unwrap();
        let e2 = pt(&[0.0, 1.0, 0.0]);
        let e3 = pt(&[0.0, 0.0, 1.0]);
        assert!(limit.class.kernel_distance(&e2) < 1e-9);
        assert!(limit.class.kernel_distance(&e3) < 1e-9);
        let e1 = pt(&[1.0, 0.0, 0.0]);
        assert!(limit.class.kernel_distance(&e1) > 0.9);
    }
}
