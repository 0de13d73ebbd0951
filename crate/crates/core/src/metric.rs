//! The Hilbert distance, geodesic segments, Hausdorff distances between
//! subsets, metric neighborhoods, and the projective center of mass.

use nalgebra::DVector;

use crate::domain::{ConvexDomain, ConvexSubset, Location};
use crate::error::CoreError;
use crate::projective::ProjectivePoint;
use crate::tol;
use crate::Result;

/// Runtime-tunable knobs for the sampled metric constructions.
#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub boundary_tolerance: f64,
    pub hausdorff_samples: usize,
    pub com_samples: usize,
    pub com_radius_tolerance: f64,
    pub rng_seed: u64,
    /// Slack above the translation length when sampling minimal sets.
    pub min_set_epsilon: f64,
    /// Grid density for domain sampling.
    pub grid_samples: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            boundary_tolerance: tol::BOUNDARY_BAND,
            hausdorff_samples: 64,
            com_samples: 48,
            com_radius_tolerance: 1e-7,
            rng_seed: 7,
            min_set_epsilon: tol::MIN_SET_EPS,
            grid_samples: 10_000,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.boundary_tolerance <= 0.0
            || self.com_radius_tolerance <= 0.0
            || self.min_set_epsilon <= 0.0
        {
            return Err(CoreError::ValidationError(
                "metric tolerances must be positive".into(),
            ));
        }
        if self.hausdorff_samples < 2 || self.com_samples < 2 {
            return Err(CoreError::ValidationError(
                "sample counts must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Hilbert distance with chord diagnostics.
#[derive(Debug, Clone)]
pub struct DistanceDetail {
    pub value: f64,
    pub endpoint_a: ProjectivePoint,
    pub endpoint_b: ProjectivePoint,
    pub near_boundary: bool,
}

/// The Hilbert distance `(1/2) log [a,x,y,b]` computed from the chord
/// through the two points.
pub fn hilbert_distance(domain: &ConvexDomain, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
    if x.approx_eq(y, 1e-13) {
        if domain.contains(x).location != Location::Interior {
            return Err(CoreError::NotInterior);
        }
        return Ok(0.0);
    }
    let chord = match domain.chord(x, y) {
        Err(CoreError::CoincidentPoints) => {
            return if domain.contains(x).location == Location::Interior {
                Ok(0.0)
            } else {
                Err(CoreError::NotInterior)
            }
        }
        other => other?,
    };
    Ok(distance_from_chord(&chord, 0.0, 1.0))
}

/// Hilbert distance plus the chord endpoints and a near-boundary flag.
pub fn hilbert_distance_detailed(
    domain: &ConvexDomain,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
) -> Result<DistanceDetail> {
    let chord = domain.chord(x, y)?;
    Ok(DistanceDetail {
        value: distance_from_chord(&chord, 0.0, 1.0),
        near_boundary: chord.near_boundary(),
        endpoint_a: chord.a.clone(),
        endpoint_b: chord.b,
    })
}

/// Distance between parameters s < t on a chord with boundary parameters
/// s_a < s and t < s_b: `(1/2) log(u(t)/u(s))` with
/// `u(s) = (s - s_a)/(s_b - s)`.
fn distance_from_chord(chord: &crate::domain::Chord, s: f64, t: f64) -> f64 {
    let u = |s: f64| (s - chord.s_a) / (chord.s_b - s);
    let ratio = u(t.max(s)) / u(t.min(s));
    0.5 * ratio.ln()
}

/// The point at arclength fraction `t` along the geodesic from x to y,
/// found by inverting the cross-ratio equation in closed form.
pub fn geodesic_point(
    domain: &ConvexDomain,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
    t: f64,
) -> Result<ProjectivePoint> {
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    let chord = domain.chord(x, y)?;
    let u = |s: f64| (s - chord.s_a) / (chord.s_b - s);
    let u0 = u(0.0);
    let u1 = u(1.0);
    let ut = u0.powf(1.0 - t) * u1.powf(t);
    let s = (chord.s_a + ut * chord.s_b) / (1.0 + ut);
    Ok(chord.at(s))
}

/// Sampled two-sided Hausdorff distance between two convex subsets.
#[derive(Debug, Clone)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// Covering-radius proxy of the sample sets: the reported value is
    /// accurate to this resolution.
    pub resolution: f64,
}

/// Sampled sup-inf estimate of the Hausdorff distance between subsets.
pub fn hausdorff_distance(
    domain: &ConvexDomain,
    a: &ConvexSubset,
    b: &ConvexSubset,
    cfg: &MetricConfig,
) -> Result<HausdorffEstimate> {
    // The same seed on both sides makes identical subsets sample
    // identically, so equal sets report exactly zero.
    let sa = subset_metric_samples(domain, a, cfg.hausdorff_samples, cfg.rng_seed)?;
    let sb = subset_metric_samples(domain, b, cfg.hausdorff_samples, cfg.rng_seed)?;
    let one_sided = |from: &[ProjectivePoint], to: &[ProjectivePoint]| -> Result<f64> {
        let mut sup = 0.0_f64;
        for p in from {
            let mut inf = f64::MAX;
            for q in to {
                inf = inf.min(hilbert_distance(domain, p, q)?);
            }
            sup = sup.max(inf);
        }
        Ok(sup)
    };
    let value = one_sided(&sa, &sb)?.max(one_sided(&sb, &sa)?);
    let resolution = sample_resolution(domain, &sa)?.max(sample_resolution(domain, &sb)?);
    Ok(HausdorffEstimate { value, resolution })
}

fn sample_resolution(domain: &ConvexDomain, samples: &[ProjectivePoint]) -> Result<f64> {
    if samples.len() < 2 {
        return Ok(0.0);
    }
    let mut worst = 0.0_f64;
    for (i, p) in samples.iter().enumerate() {
        let mut nearest = f64::MAX;
        for (j, q) in samples.iter().enumerate() {
            if i != j {
                nearest = nearest.min(hilbert_distance(domain, p, q)?);
            }
        }
        worst = worst.max(nearest);
    }
    Ok(worst)
}

/// Interior metric samples of a subset: relative-interior point,
/// interior-pulled generators, and seeded convex combinations.
pub fn subset_metric_samples(
    domain: &ConvexDomain,
    subset: &ConvexSubset,
    count: usize,
    seed: u64,
) -> Result<Vec<ProjectivePoint>> {
    let gens = subset.generator_chart_coords();
    if gens.is_empty() {
        return Err(CoreError::EmptySubset {
            context: "subset has no generators",
        });
    }
    let chart = domain.chart();
    let mut bary = DVector::zeros(gens[0].len());
    for y in gens {
        bary += y;
    }
    bary /= gens.len() as f64;
    let mut samples: Vec<ProjectivePoint> = Vec::new();
    let push = |y: DVector<f64>, samples: &mut Vec<ProjectivePoint>| {
        let p = ProjectivePoint::new(chart.lift(&y)).expect("nonzero");
        if domain.contains(&p).location == Location::Interior
            && !samples.iter().any(|q: &ProjectivePoint| q.approx_eq(&p, 1e-12))
        {
            samples.push(p);
        }
    };
    push(bary.clone(), &mut samples);
    // Pull each generator toward the barycenter at a few depths.
    for y in gens {
        for w in [0.995, 0.9, 0.6, 0.3] {
            push(y * w + &bary * (1.0 - w), &mut samples);
        }
    }
    // Seeded convex combinations fill the remaining budget.
    let mut rng = crate::sampling::SplitMix::new(seed);
    while samples.len() < count {
        let mut weights: Vec<f64> = (0..gens.len()).map(|_| -rng.next_f64().ln()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mut y = DVector::zeros(gens[0].len());
        for (w, g) in weights.iter().zip(gens) {
            y += g * *w;
        }
        push(y, &mut samples);
        if rng.exhausted() {
            break;
        }
    }
    if samples.is_empty() {
        return Err(CoreError::EmptySubset {
            context: "no interior samples found for subset",
        });
    }
    Ok(samples)
}

/// Distance from an interior point to a convex subset: sampled infimum
/// refined by golden-section search along segments toward the best
/// samples.
pub fn distance_to_subset(
    domain: &ConvexDomain,
    subset: &ConvexSubset,
    p: &ProjectivePoint,
    cfg: &MetricConfig,
) -> Result<f64> {
    let samples = subset_metric_samples(domain, subset, cfg.hausdorff_samples, cfg.rng_seed)?;
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
    for (i, q) in samples.iter().enumerate() {
        scored.push((hilbert_distance(domain, p, q)?, i));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let mut best = scored[0].0;
    let chart = domain.chart();
    let best_point = &samples[scored[0].1];
    let by = chart.coords(best_point).ok_or(CoreError::NotInterior)?;
    // Refine along segments from the best sample toward the next best
    // ones; the restriction of the distance is quasiconvex at desk scale.
    for &(_, idx) in scored.iter().skip(1).take(4) {
        let oy = chart.coords(&samples[idx]).ok_or(CoreError::NotInterior)?;
        let eval = |t: f64| -> f64 {
            let y = &by * (1.0 - t) + &oy * t;
            let q = ProjectivePoint::new(chart.lift(&y)).expect("nonzero");
            match hilbert_distance(domain, p, &q) {
                Ok(d) => d,
                Err(_) => f64::MAX,
            }
        };
        best = best.min(golden_section_min(eval, 0.0, 1.0, 60).1);
    }
    Ok(best)
}

/// Whether the point lies in the open metric r-neighborhood of a subset.
pub fn neighborhood_contains(
    domain: &ConvexDomain,
    subset: &ConvexSubset,
    r: f64,
    p: &ProjectivePoint,
    cfg: &MetricConfig,
) -> Result<bool> {
    if subset.contains(p) {
        return Ok(r > 0.0);
    }
    Ok(distance_to_subset(domain, subset, p, cfg)? < r)
}

/// Golden-section minimization of a unimodal function on [lo, hi];
/// returns (argmin, min).
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    iters: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fmid = f(mid);
    if fmid < fc && fmid < fd {
        (mid, fmid)
    } else if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Projective center of mass of a compact point sample, by the iterated
/// ball-intersection construction: shrink the current set to the
/// (sampled) minimizers of the eccentricity until its diameter drops
/// below the configured tolerance, then take the chart centroid.
///
/// Every stage is built from Hilbert distances and geodesic midpoints,
/// so the output is equivariant up to the stop tolerance.
pub fn center_of_mass(
    domain: &ConvexDomain,
    points: &[ProjectivePoint],
    cfg: &MetricConfig,
) -> Result<ProjectivePoint> {
    if points.is_empty() {
        return Err(CoreError::EmptyInput {
            context: "center of mass of an empty set",
        });
    }
    for p in points {
        if domain.contains(p).location != Location::Interior {
            return Err(CoreError::NotInterior);
        }
    }
    // Deduplicate.
    let mut current: Vec<ProjectivePoint> = Vec::new();
    for p in points {
        if !current.iter().any(|q| q.approx_eq(p, 1e-13)) {
            current.push(p.clone());
        }
    }
    if current.len() == 1 {
        return Ok(current.remove(0));
    }
    let max_rounds = domain.ambient_dim() + 4;
    for _round in 0..max_rounds {
        let diam = set_diameter(domain, &current)?;
        if diam < cfg.com_radius_tolerance {
            break;
        }
        // Enrich with geodesic midpoints (metric-natural, so the sample
        // set stays symmetric whenever the input is).
        let mut enriched = current.clone();
        let cap = cfg.com_samples.max(8);
        'outer: for i in 0..current.len() {
            for j in (i + 1)..current.len() {
                if enriched.len() >= cap * 2 {
                    break 'outer;
                }
                let m = geodesic_midpoint(domain, &current[i], &current[j])?;
                if !enriched.iter().any(|q| q.approx_eq(&m, 1e-12)) {
                    enriched.push(m);
                }
            }
        }
        // Eccentricity of each candidate against the current set; the
        // ball centers are the extreme points, which the generator list
        // of the current hull approximates.
        let centers = current.clone();
        let mut scored: Vec<(f64, ProjectivePoint)> = Vec::with_capacity(enriched.len());
        for p in &enriched {
            scored.push((eccentricity(domain, p, &centers)?, p.clone()));
        }
        // Continuous refinement of the best candidate.
        let best = scored
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
            .expect("nonempty")
            .clone();
        let refined = refine_chebyshev(domain, &best.1, &centers, best.0)?;
        let r_n = refined.0.min(best.0);
        let mut survivors: Vec<ProjectivePoint> = Vec::new();
        let window = (cfg.com_radius_tolerance * 0.25).max(diam * 1e-6);
        for (e, p) in scored {
            if e <= r_n + window {
                survivors.push(p);
            }
        }
        if refined.0 <= r_n + window {
            survivors.push(refined.1);
        }
        if survivors.is_empty() {
            survivors.push(best.1);
        }
        current = survivors;
    }
    let diam = set_diameter(domain, &current)?;
    if diam >= cfg.com_radius_tolerance * 10.0 {
        return Err(CoreError::NotConverged {
            context: format!(
                "center-of-mass survivor set has diameter {diam:.3e} after {max_rounds} rounds"
            ),
        });
    }
    chart_centroid(domain, &current)
}

fn set_diameter(domain: &ConvexDomain, points: &[ProjectivePoint]) -> Result<f64> {
    let mut diam = 0.0_f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            diam = diam.max(hilbert_distance(domain, &points[i], &points[j])?);
        }
    }
    Ok(diam)
}

fn eccentricity(
    domain: &ConvexDomain,
    p: &ProjectivePoint,
    centers: &[ProjectivePoint],
) -> Result<f64> {
    let mut e = 0.0_f64;
    for c in centers {
        e = e.max(hilbert_distance(domain, p, c)?);
    }
    Ok(e)
}

/// Metric midpoint of the segment [x, y].
pub fn geodesic_midpoint(
    domain: &ConvexDomain,
    x: &ProjectivePoint,
    y: &ProjectivePoint,
) -> Result<ProjectivePoint> {
    if x.approx_eq(y, 1e-13) {
        return Ok(x.clone());
    }
    geodesic_point(domain, x, y, 0.5)
}

/// Local descent of the eccentricity from a starting point: line search
/// along geodesics toward the farthest centers. Returns the improved
/// (value, point).
fn refine_chebyshev(
    domain: &ConvexDomain,
    start: &ProjectivePoint,
    centers: &[ProjectivePoint],
    start_value: f64,
) -> Result<(f64, ProjectivePoint)> {
    let mut p = start.clone();
    let mut value = start_value;
    for _ in 0..60 {
        // Farthest center from the current point.
        let mut far: Option<(f64, &ProjectivePoint)> = None;
        for c in centers {
            let d = hilbert_distance(domain, &p, c)?;
            if far.as_ref().map_or(true, |(fd, _)| d > *fd) {
                far = Some((d, c));
            }
        }
        let Some((_, target)) = far else { break };
        if p.approx_eq(target, 1e-13) {
            break;
        }
        let pc = p.clone();
        let tc = target.clone();
        let eval = |t: f64| -> f64 {
            match geodesic_point(domain, &pc, &tc, t) {
                Ok(q) => eccentricity(domain, &q, centers).unwrap_or(f64::MAX),
                Err(_) => f64::MAX,
            }
        };
        let (t_best, v_best) = golden_section_min(eval, 0.0, 0.75, 40);
        if v_best + 1e-14 >= value {
            break;
        }
        p = geodesic_point(domain, &p, target, t_best)?;
        value = v_best;
    }
    Ok((value, p))
}

fn chart_centroid(domain: &ConvexDomain, points: &[ProjectivePoint]) -> Result<ProjectivePoint> {
    let chart = domain.chart();
    let mut sum = DVector::zeros(domain.ambient_dim() - 1);
    for p in points {
        sum += chart.coords(p).ok_or(CoreError::NotInterior)?;
    }
    sum /= points.len() as f64;
    ProjectivePoint::new(chart.lift(&sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{build_standard_simplex, simplex_distance};
    use std::sync::Arc;

    fn pt(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::from_slice(coords).unwrap()
    }

    #[test]
    fn distance_zero_on_equal_points() {
        let tri = build_standard_simplex(2).unwrap();
        let x = pt(&[1.0, 1.0, 1.0]);
        assert_eq!(hilbert_distance(&tri, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn disk_radius_half_distance() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let x = pt(&[0.0, 0.0, 1.0]);
        let y = pt(&[0.5, 0.0, 1.0]);
        let d = hilbert_distance(&ball, &x, &y).unwrap();
        assert!((d - 0.5 * 3.0_f64.ln()).abs() < 1e-10, "got {d}");
    }

    #[test]
    fn triangle_distance_matches_closed_form() {
        let tri = build_standard_simplex(2).unwrap();
        let x = pt(&[1.0, 1.0, 1.0]);
        let y = pt(&[1.0, 2.0, 4.0]);
        let via_chord = hilbert_distance(&tri, &x, &y).unwrap();
        let via_formula = simplex_distance(&x, &y, 2).unwrap();
        assert!((via_chord - 2.0_f64.ln()).abs() < 1e-10);
        assert!((via_chord - via_formula).abs() < 1e-10);
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let x = pt(&[0.0, 0.0, 1.0]);
        let y = pt(&[0.5, 0.0, 1.0]);
        assert!(geodesic_point(&ball, &x, &y, 0.0).unwrap().approx_eq(&x, 0.0));
        assert!(geodesic_point(&ball, &x, &y, 1.0).unwrap().approx_eq(&y, 0.0));
        let m = geodesic_point(&ball, &x, &y, 0.5).unwrap();
        let dm = hilbert_distance(&ball, &x, &m).unwrap();
        assert!((dm - 0.25 * 3.0_f64.ln()).abs() < 1e-10);
        let d1 = hilbert_distance(&ball, &m, &y).unwrap();
        assert!((dm - d1).abs() < 1e-10);
    }

    #[test]
    fn hausdorff_identical_sets_is_zero() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let seg = ConvexSubset::hull(
            tri.clone(),
            &[pt(&[2.0, 1.0, 1.0]), pt(&[1.0, 2.0, 1.0])],
        )
        .unwrap();
        let cfg = MetricConfig::default();
        let est = hausdorff_distance(&tri, &seg, &seg, &cfg).unwrap();
        assert!(est.value < 1e-12);
    }

    #[test]
    fn hausdorff_singletons_reduce_to_distance() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let x = pt(&[1.0, 1.0, 1.0]);
        let y = pt(&[1.0, 2.0, 4.0]);
        let sx = ConvexSubset::hull(tri.clone(), &[x.clone()]).unwrap();
        let sy = ConvexSubset::hull(tri.clone(), &[y.clone()]).unwrap();
        let cfg = MetricConfig::default();
        let est = hausdorff_distance(&tri, &sx, &sy, &cfg).unwrap();
        let d = hilbert_distance(&tri, &x, &y).unwrap();
        assert!((est.value - d).abs() < 1e-10);
    }

    #[test]
    fn neighborhood_membership() {
        let tri = Arc::new(build_standard_simplex(2).unwrap());
        let seg = ConvexSubset::hull(
            tri.clone(),
            &[pt(&[2.0, 1.0, 1.0]), pt(&[1.0, 2.0, 1.0])],
        )
        .unwrap();
        let cfg = MetricConfig::default();
        let inside = seg.relative_interior_point();
        assert!(neighborhood_contains(&tri, &seg, 0.1, &inside, &cfg).unwrap());
        // A point at positive distance, with r below that distance.
        let far = pt(&[1.0, 1.0, 6.0]);
        let d = distance_to_subset(&tri, &seg, &far, &cfg).unwrap();
        assert!(d > 0.3);
        assert!(!neighborhood_contains(&tri, &seg, d - 0.1, &far, &cfg).unwrap());
        assert!(neighborhood_contains(&tri, &seg, d + 0.1, &far, &cfg).unwrap());
    }

    #[test]
    fn center_of_mass_single_point() {
        let tri = build_standard_simplex(2).unwrap();
        let x = pt(&[1.0, 2.0, 3.0]);
        let cfg = MetricConfig::default();
        let com = center_of_mass(&tri, &[x.clone()], &cfg).unwrap();
        assert!(com.approx_eq(&x, 1e-12));
    }

    #[test]
    fn center_of_mass_symmetric_vertices_is_barycenter() {
        let k = 2;
        let tri = build_standard_simplex(k).unwrap();
        // Vertices pushed symmetrically inside.
        let pushed: Vec<ProjectivePoint> = (0..=k)
            .map(|i| {
                let mut coords = vec![0.05; k + 1];
                coords[i] = 1.0;
                pt(&coords)
            })
            .collect();
        let cfg = MetricConfig::default();
        let com = center_of_mass(&tri, &pushed, &cfg).unwrap();
        assert!(
            com.approx_eq(&pt(&[1.0, 1.0, 1.0]), 1e-8),
            "center of mass {:?}",
            com.rep()
        );
    }

    #[test]
    fn center_of_mass_two_points_is_metric_midpoint() {
        let ball = ConvexDomain::unit_ball(3).unwrap();
        let x = pt(&[0.3, 0.1, 1.0]);
        let y = pt(&[-0.4, 0.2, 1.0]);
        let cfg = MetricConfig::default();
        let com = center_of_mass(&ball, &[x.clone(), y.clone()], &cfg).unwrap();
        let mid = geodesic_midpoint(&ball, &x, &y).unwrap();
        assert!(com.approx_eq(&mid, 1e-6), "com={:?} mid={:?}", com.rep(), mid.rep());
    }
}
