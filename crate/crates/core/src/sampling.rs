//! Deterministic sampling helpers: a seeded splitmix generator, Halton
//! low-discrepancy sequences, and domain/subset grids.

use nalgebra::DVector;

use crate::domain::{ConvexDomain, Location};
use crate::projective::ProjectivePoint;

/// Small deterministic generator for reproducible sampling. Not a
/// statistical RNG; every consumer fixes its seed in the scene config.
#[derive(Debug, Clone)]
pub struct SplitMix {
    state: u64,
    drawn: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed.wrapping_add(0x9e3779b97f4a7c15),
            drawn: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.drawn += 1;
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1).
    pub fn next_f64(&mut self) -> f64 {
        let u = self.next_u64() >> 11;
        (u as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Uniform in (-1, 1).
    pub fn next_signed(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Bail-out guard for fill loops that might not terminate.
    pub fn exhausted(&self) -> bool {
        self.drawn > 1_000_000
    }
}

const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// The i-th element of the van der Corput sequence in the given base.
fn van_der_corput(mut i: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while i > 0 {
        result += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    result
}

/// The i-th Halton point in [0,1)^dim, with a seed-dependent index
/// offset so distinct seeds give distinct deterministic sequences.
pub fn halton_point(i: u64, dim: usize, seed: u64) -> Vec<f64> {
    let offset = (seed % 4096) + 13;
    (0..dim)
        .map(|axis| van_der_corput(i + offset, PRIMES[axis % PRIMES.len()]))
        .collect()
}

/// Deterministic low-discrepancy sample of the domain interior in its
/// chart: Halton points in the vertex bounding box (polytope) or the
/// unit box (ellipsoid), filtered to interior points.
pub fn domain_grid(
    domain: &ConvexDomain,
    target: usize,
    seed: u64,
    margin: f64,
) -> Vec<ProjectivePoint> {
    let n = domain.proj_dim();
    let chart = domain.chart();
    let (lo, hi) = chart_bounding_box(domain);
    let mut out = Vec::with_capacity(target);
    let mut i = 0u64;
    let budget = (target as u64) * 64 + 4096;
    while out.len() < target && i < budget {
        let h = halton_point(i, n, seed);
        i += 1;
        let y = DVector::from_iterator(
            n,
            (0..n).map(|a| lo[a] + h[a] * (hi[a] - lo[a])),
        );
        let p = match ProjectivePoint::new(chart.lift(&y)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let class = domain.contains(&p);
        if class.location == Location::Interior && class.margin > margin {
            out.push(p);
        }
    }
    out
}

/// Bounding box of the domain in its chart coordinates.
pub fn chart_bounding_box(domain: &ConvexDomain) -> (Vec<f64>, Vec<f64>) {
    let n = domain.proj_dim();
    let vertex_coords = domain.vertex_chart_coords();
    if vertex_coords.is_empty() {
        // Ellipsoid: box around the interior point with unit half-width,
        // expanded until the boundary is bracketed.
        let chart = domain.chart();
        let center = chart
            .coords(domain.interior_point())
            .expect("interior point is chart-finite");
        let mut half = vec![1.0_f64; n];
        for axis in 0..n {
            let mut w = 1.0_f64;
            for _ in 0..60 {
                let mut y = center.clone();
                y[axis] += w;
                let p = ProjectivePoint::new(chart.lift(&y)).expect("nonzero");
                if domain.contains(&p).location == Location::Outside {
                    break;
                }
                w *= 2.0;
            }
            half[axis] = w;
        }
        let lo: Vec<f64> = (0..n).map(|a| center[a] - half[a]).collect();
        let hi: Vec<f64> = (0..n).map(|a| center[a] + half[a]).collect();
        (lo, hi)
    } else {
        let mut lo = vec![f64::MAX; n];
        let mut hi = vec![f64::MIN; n];
        for y in vertex_coords {
            for a in 0..n {
                lo[a] = lo[a].min(y[a]);
                hi[a] = hi[a].max(y[a]);
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::build_standard_simplex;

    #[test]
    fn grid_points_are_interior_and_deterministic() {
        let tri = build_standard_simplex(2).unwrap();
        let a = domain_grid(&tri, 100, 5, 0.0);
        let b = domain_grid(&tri, 100, 5, 0.0);
        assert_eq!(a.len(), 100);
        for (p, q) in a.iter().zip(&b) {
            assert!(p.approx_eq(q, 0.0));
        }
        for p in &a {
            assert_eq!(tri.contains(p).location, Location::Interior);
        }
    }

    #[test]
    fn ellipsoid_grid_fills() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let pts = domain_grid(&ball, 64, 9, 0.0);
        assert_eq!(pts.len(), 64);
    }

    #[test]
    fn distinct_seeds_differ() {
        let tri = build_standard_simplex(2).unwrap();
        let a = domain_grid(&tri, 10, 1, 0.0);
        let b = domain_grid(&tri, 10, 2, 0.0);
        assert!(a.iter().zip(&b).any(|(p, q)| !p.approx_eq(q, 1e-12)));
    }
}
