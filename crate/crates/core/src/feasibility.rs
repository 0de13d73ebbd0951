//! Dense linear feasibility via a phase-1 simplex method.
//!
//! Every caller in this crate needs only feasibility (with margins), not
//! optimization, and the systems are tiny (tens of variables), so a
//! plain tableau with Bland's rule is enough.

use nalgebra::{DMatrix, DVector};

/// Comparison sense of one linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// A feasibility problem over variables x_1..x_n.
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    n: usize,
    free: Vec<bool>,
    lower: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

impl FeasibilityProblem {
    /// All variables constrained to x_i >= 0 by default.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            free: vec![false; n],
            lower: vec![0.0; n],
            rows: Vec::new(),
        }
    }

    /// Marks a variable as unconstrained in sign.
    pub fn set_free(&mut self, i: usize) {
        self.free[i] = true;
    }

    /// Sets a lower bound x_i >= lb (variable is shifted internally).
    pub fn set_lower(&mut self, i: usize, lb: f64) {
        self.free[i] = false;
        self.lower[i] = lb;
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.n);
        self.rows.push((coeffs, sense, rhs));
    }

    /// Returns a feasible point if one exists within tolerance.
    pub fn solve(&self) -> Option<Vec<f64>> {
        // Internal variables: for bounded x_i: u_i = x_i - lower_i >= 0.
        // For free x_i: pair (u+, u-) with x_i = u+ - u-.
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.n);
        let mut ncols = 0;
        for i in 0..self.n {
            if self.free[i] {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            } else {
                col_of.push((ncols, None));
                ncols += 1;
            }
        }
        let m = self.rows.len();
        let mut slack_cols = Vec::with_capacity(m);
        for (_, sense, _) in &self.rows {
            match sense {
                Sense::Eq => slack_cols.push(None),
                _ => {
                    slack_cols.push(Some(ncols));
                    ncols += 1;
                }
            }
        }
        let mut a = DMatrix::<f64>::zeros(m, ncols);
        let mut b = DVector::<f64>::zeros(m);
        for (r, (coeffs, sense, rhs)) in self.rows.iter().enumerate() {
            let mut rhs_shifted = *rhs;
            for i in 0..self.n {
                let c = coeffs[i];
                if c == 0.0 {
                    continue;
                }
                let (pos, neg) = col_of[i];
                a[(r, pos)] = c;
                if let Some(neg) = neg {
                    a[(r, neg)] = -c;
                } else {
                    rhs_shifted -= c * self.lower[i];
                }
            }
            if let Some(sc) = slack_cols[r] {
                a[(r, sc)] = match sense {
                    Sense::Le => 1.0,
                    Sense::Ge => -1.0,
                    Sense::Eq => unreachable!(),
                };
            }
            b[r] = rhs_shifted;
        }
        let u = phase_one(&a, &b)?;
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            let (pos, neg) = col_of[i];
            x[i] = match neg {
                Some(neg) => u[pos] - u[neg],
                None => u[pos] + self.lower[i],
            };
        }
        Some(x)
    }

    pub fn is_feasible(&self) -> bool {
        self.solve().is_some()
    }
}

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// Finds u >= 0 with A u = b, or None. Phase-1 simplex with Bland's rule.
fn phase_one(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let m = a.nrows();
    let n = a.ncols();
    if m == 0 {
        return Some(DVector::zeros(n));
    }
    // Scale rows so the rhs is nonnegative and magnitudes are balanced.
    let total = n + m;
    let mut tableau = DMatrix::<f64>::zeros(m + 1, total + 1);
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        let row_scale = a.row(r).amax().max(b[r].abs()).max(1.0);
        for c in 0..n {
            tableau[(r, c)] = sign * a[(r, c)] / row_scale;
        }
        tableau[(r, n + r)] = 1.0;
        tableau[(r, total)] = sign * b[r] / row_scale;
    }
    // Objective: minimize sum of artificials; expressed in reduced form.
    for c in 0..total + 1 {
        let mut sum = 0.0;
        for r in 0..m {
            sum += tableau[(r, c)];
        }
        tableau[(m, c)] = if (n..total).contains(&c) { 0.0 } else { -sum };
    }
    let mut basis: Vec<usize> = (n..total).collect();

    for _ in 0..20_000 {
        // Bland's rule: entering column = smallest index with negative
        // reduced cost.
        let mut entering = None;
        for c in 0..total {
            if tableau[(m, c)] < -PIVOT_TOL {
                entering = Some(c);
                break;
            }
        }
        let Some(col) = entering else { break };
        // Ratio test, Bland tie-break on basis index.
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..m {
            let coeff = tableau[(r, col)];
            if coeff > PIVOT_TOL {
                let ratio = tableau[(r, total)] / coeff;
                match leaving {
                    None => leaving = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - PIVOT_TOL
                            || (ratio < lratio + PIVOT_TOL && basis[r] < basis[lr])
                        {
                            leaving = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leaving else {
            // Unbounded phase-1 cannot happen; treat as failure.
            return None;
        };
        pivot(&mut tableau, row, col);
        basis[row] = col;
    }

    let objective = -tableau[(m, total)];
    if objective.abs() > FEAS_TOL {
        return None;
    }
    let mut u = DVector::zeros(n);
    for (r, &bc) in basis.iter().enumerate() {
        if bc < n {
            u[bc] = tableau[(r, total)].max(0.0);
        } else if tableau[(r, total)].abs() > FEAS_TOL {
            return None;
        }
    }
    Some(u)
}

fn pivot(t: &mut DMatrix<f64>, row: usize, col: usize) {
    let p = t[(row, col)];
    let ncols = t.ncols();
    for c in 0..ncols {
        t[(row, c)] /= p;
    }
    let nrows = t.nrows();
    for r in 0..nrows {
        if r != row {
            let factor = t[(r, col)];
            if factor != 0.0 {
                for c in 0..ncols {
                    t[(r, c)] -= factor * t[(row, c)];
                }
            }
        }
    }
}

/// Whether `point` lies in the convex hull of `generators`, all given in
/// the same affine coordinates.
pub fn point_in_affine_hull(point: &DVector<f64>, generators: &[DVector<f64>]) -> bool {
    if generators.is_empty() {
        return false;
    }
    let dim = point.len();
    let mut problem = FeasibilityProblem::new(generators.len());
    for r in 0..dim {
        let coeffs: Vec<f64> = generators.iter().map(|g| g[r]).collect();
        problem.add_row(coeffs, Sense::Eq, point[r]);
    }
    problem.add_row(vec![1.0; generators.len()], Sense::Eq, 1.0);
    problem.is_feasible()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn triangle_membership() {
        let gens = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert!(point_in_affine_hull(&v(&[0.2, 0.2]), &gens));
        assert!(point_in_affine_hull(&v(&[0.5, 0.5]), &gens));
        assert!(!point_in_affine_hull(&v(&[0.6, 0.6]), &gens));
        assert!(!point_in_affine_hull(&v(&[-0.1, 0.2]), &gens));
    }

    #[test]
    fn equality_and_inequality_mix() {
        // x + y = 1, x >= 0.4, y >= 0.4 feasible; y >= 0.7 infeasible.
        let mut p = FeasibilityProblem::new(2);
        p.add_row(vec![1.0, 1.0], Sense::Eq, 1.0);
        p.add_row(vec![1.0, 0.0], Sense::Ge, 0.4);
        p.add_row(vec![0.0, 1.0], Sense::Ge, 0.4);
        assert!(p.is_feasible());
        p.add_row(vec![0.0, 1.0], Sense::Ge, 0.7);
        assert!(!p.is_feasible());
    }

    #[test]
    fn free_variables_allow_negative_solutions() {
        let mut p = FeasibilityProblem::new(1);
        p.set_free(0);
        p.add_row(vec![1.0], Sense::Eq, -3.0);
        let x = p.solve().unwrap();
        assert!((x[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bounds_shift() {
        let mut p = FeasibilityProblem::new(2);
        p.set_lower(0, 0.1);
        p.set_lower(1, 0.1);
        p.add_row(vec![1.0, 1.0], Sense::Eq, 1.0);
        let x = p.solve().unwrap();
        assert!(x[0] >= 0.1 - 1e-9 && x[1] >= 0.1 - 1e-9);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    }
}
