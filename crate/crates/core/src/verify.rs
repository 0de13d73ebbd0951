//! The property suite behind the `verify` command: metric axioms,
//! geodesic comparison, neighborhood convexity, chord/face Hausdorff
//! bounds, minimal-set hull inflation, simplex-in-minimal-set, and the
//! simplex log-chart isometry, evaluated on the scene's own domain and
//! groups with seeded sampling.

use crate::action::{displacement, hull_inflation_check, translation_length};
use crate::domain::{ConvexSubset, Location};
use crate::error::CoreError;
use crate::metric::{
    distance_to_subset, geodesic_point, hilbert_distance,
};
use crate::projective::ProjectivePoint;
use crate::sampling::{domain_grid, SplitMix};
use crate::scene::{Scene, SceneConfig};
use crate::simplex::{build_standard_simplex, dist_rd, phi_coordinates, simplex_distance};
use crate::Result;

#[derive(Debug, Clone)]
pub struct PropertyVerdict {
    pub name: String,
    pub pass: bool,
    pub worst_residual: f64,
    pub samples: usize,
}

/// Runs every property against the scene. A property that needs
/// structure the scene does not have (a group with an invariant subset,
/// a commuting diagonalizable family) passes vacuously with zero
/// samples.
pub fn run_property_suite(scene: &Scene, cfg: &SceneConfig) -> Result<Vec<PropertyVerdict>> {
    Ok(vec![
        metric_axioms(scene, cfg)?,
        crampon_bound(scene, cfg)?,
        neighborhood_convexity(scene, cfg)?,
        chord_face_hausdorff(scene, cfg)?,
        hull_inflation(scene, cfg)?,
        simplex_in_min(scene, cfg)?,
        isometry_phi(cfg)?,
    ])
}

fn grid(scene: &Scene, cfg: &SceneConfig, count: usize, salt: u64) -> Vec<ProjectivePoint> {
    domain_grid(
        &scene.domain,
        count,
        cfg.metric.rng_seed ^ salt,
        1e-6,
    )
}

/// Symmetry, triangle inequality, identity of indiscernibles, and
/// invariance under the scene's own automorphisms.
fn metric_axioms(scene: &Scene, cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let n = cfg.verify_samples.max(30);
    let points = grid(scene, cfg, n, 0x11);
    let domain = &scene.domain;
    let mut worst = 0.0_f64;
    let mut samples = 0;
    for chunk in points.chunks(3) {
        if chunk.len() < 3 {
            break;
        }
        let (x, y, z) = (&chunk[0], &chunk[1], &chunk[2]);
        let dxy = hilbert_distance(domain, x, y)?;
        let dyx = hilbert_distance(domain, y, x)?;
        let dxz = hilbert_distance(domain, x, z)?;
        let dyz = hilbert_distance(domain, y, z)?;
        worst = worst.max((dxy - dyx).abs());
        worst = worst.max(dxz - (dxy + dyz));
        worst = worst.max(hilbert_distance(domain, x, x)?);
        samples += 1;
    }
    // Invariance under the scene's automorphism generators.
    for group in scene.groups.values() {
        for g in group.generators().iter().take(3) {
            for chunk in points.chunks(2).take(20) {
                if chunk.len() < 2 {
                    break;
                }
                let before = hilbert_distance(domain, &chunk[0], &chunk[1])?;
                let after =
                    hilbert_distance(domain, &g.apply(&chunk[0]), &g.apply(&chunk[1]))?;
                worst = worst.max((before - after).abs());
                samples += 1;
            }
        }
    }
    Ok(PropertyVerdict {
        name: "metric_axioms".into(),
        pass: worst <= 1e-9,
        worst_residual: worst,
        samples,
    })
}

/// Distance between two unit-speed chord geodesics at intermediate times
/// is bounded by the sum of the endpoint distances.
fn crampon_bound(scene: &Scene, cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let n = cfg.verify_samples.max(30);
    let points = grid(scene, cfg, n, 0x23);
    let domain = &scene.domain;
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for chunk in points.chunks(4) {
        if chunk.len() < 4 {
            break;
        }
        let (x1, y1, x2, y2) = (&chunk[0], &chunk[1], &chunk[2], &chunk[3]);
        let d1 = hilbert_distance(domain, x1, y1)?;
        let d2 = hilbert_distance(domain, x2, y2)?;
        let horizon = d1.min(d2);
        if horizon < 1e-3 {
            continue;
        }
        let ends = hilbert_distance(domain, x1, x2)?
            + hilbert_distance(
                domain,
                &geodesic_point(domain, x1, y1, horizon / d1)?,
                &geodesic_point(domain, x2, y2, horizon / d2)?,
            )?;
        for step in 1..=8 {
            let t = horizon * step as f64 / 9.0;
            let p1 = geodesic_point(domain, x1, y1, t / d1)?;
            let p2 = geodesic_point(domain, x2, y2, t / d2)?;
            let between = hilbert_distance(domain, &p1, &p2)?;
            worst = worst.max(between - ends);
            samples += 1;
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    Ok(PropertyVerdict {
        name: "crampon_bound".into(),
        pass: worst <= 1e-9,
        worst_residual: worst.max(0.0),
        samples,
    })
}

/// Metric neighborhoods of convex subsets are convex: midpoints of pairs
/// in N_r(D) stay in N_r(D) up to the sampling resolution of the
/// distance estimate.
fn neighborhood_convexity(scene: &Scene, cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let domain = &scene.domain;
    let points = grid(scene, cfg, cfg.verify_samples.max(40), 0x37);
    if points.len() < 8 {
        return Ok(PropertyVerdict {
            name: "neighborhood_convexity".into(),
            pass: true,
            worst_residual: 0.0,
            samples: 0,
        });
    }
    let subset = ConvexSubset::hull(domain.clone(), &points[0..2])?;
    let r = 0.4;
    let slack = 0.05; // sampling resolution of the distance-to-set estimate
    let mut worst = 0.0_f64;
    let mut samples = 0;
    let mut members: Vec<ProjectivePoint> = Vec::new();
    for p in points.iter().skip(2) {
        if distance_to_subset(domain, &subset, p, &cfg.metric)? < r {
            members.push(p.clone());
        }
        if members.len() >= 16 {
            break;
        }
    }
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let mid = geodesic_point(domain, &members[i], &members[j], 0.5)?;
            let d = distance_to_subset(domain, &subset, &mid, &cfg.metric)?;
            worst = worst.max(d - r);
            samples += 1;
        }
    }
    Ok(PropertyVerdict {
        name: "neighborhood_convexity".into(),
        pass: worst <= slack,
        worst_residual: worst.max(0.0),
        samples,
    })
}

/// Hausdorff distance between chords with endpoints in shared faces is
/// bounded by the larger of the two face distances (polytopes only; an
/// ellipsoid has singleton faces and passes vacuously).
fn chord_face_hausdorff(scene: &Scene, cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let domain = &scene.domain;
    if !domain.is_polytope() || domain.facets().len() < 2 {
        return Ok(PropertyVerdict {
            name: "chord_face_hausdorff".into(),
            pass: true,
            worst_residual: 0.0,
            samples: 0,
        });
    }
    let mut rng = SplitMix::new(cfg.metric.rng_seed ^ 0x45);
    let mut worst = 0.0_f64;
    let mut samples = 0;
    let facets = domain.facets();
    let chart = domain.chart();
    let vertex_chart = domain.vertex_chart_coords();
    'outer: for _ in 0..cfg.verify_samples.min(60) {
        // Two distinct facets and two points in the relative interior of
        // each.
        let fi = (rng.next_u64() as usize) % facets.len();
        let fj = (rng.next_u64() as usize) % facets.len();
        if fi == fj {
            continue;
        }
        let mut face_point = |facet_idx: usize| -> Option<(ProjectivePoint, ProjectivePoint)> {
            let ids = &facets[facet_idx].vertex_set;
            if ids.len() < 2 {
                return None;
            }
            let mut draw = || {
                let mut weights: Vec<f64> =
                    ids.iter().map(|_| -rng.next_f64().ln()).collect();
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                let mut y = nalgebra::DVector::zeros(vertex_chart[0].len());
                for (&vid, w) in ids.iter().zip(&weights) {
                    y += &vertex_chart[vid] * *w;
                }
                ProjectivePoint::new(chart.lift(&y)).ok()
            };
            Some((draw()?, draw()?))
        };
        let Some((p1, p2)) = face_point(fi) else { continue };
        let Some((q1, q2)) = face_point(fj) else { continue };
        // Both pairs must share their open faces and span interior
        // chords.
        let (Ok(face_p), Ok(face_q)) = (domain.open_face(&p1), domain.open_face(&q1)) else {
            continue;
        };
        if !face_p.contains_point(domain, &p2) || !face_q.contains_point(domain, &q2) {
            continue;
        }
        if !crate::domain::open_segment_in_domain(domain, &p1, &q1)
            || !crate::domain::open_segment_in_domain(domain, &p2, &q2)
        {
            continue;
        }
        // Face distances in the faces' own metric.
        let face_dist = |face: &crate::domain::Face,
                         a: &ProjectivePoint,
                         b: &ProjectivePoint|
         -> Result<f64> {
            let gen_points: Vec<ProjectivePoint> = face
                .vertex_ids
                .iter()
                .map(|&i| domain.vertices()[i].clone())
                .collect();
            let sub = ConvexSubset::hull(domain.clone(), &gen_points)?;
            let reduced = sub.as_domain()?;
            hilbert_distance(&reduced, &sub.to_span(a), &sub.to_span(b))
        };
        let bound = face_dist(&face_p, &p1, &p2)?.max(face_dist(&face_q, &q1, &q2)?);
        // Sampled two-sided Hausdorff distance between the open chords.
        let chord_samples = |a: &ProjectivePoint, b: &ProjectivePoint| -> Vec<ProjectivePoint> {
            let mut out = Vec::new();
            for step in 1..=12 {
                let t = step as f64 / 13.0;
                let (Some(ya), Some(yb)) = (chart.coords(a), chart.coords(b)) else {
                    return out;
                };
                let y = &ya * (1.0 - t) + &yb * t;
                if let Ok(p) = ProjectivePoint::new(chart.lift(&y)) {
                    if domain.contains(&p).location == Location::Interior {
                        out.push(p);
                    }
                }
            }
            out
        };
        let c1 = chord_samples(&p1, &q1);
        let c2 = chord_samples(&p2, &q2);
        if c1.is_empty() || c2.is_empty() {
            continue 'outer;
        }
        let mut hausdorff = 0.0_f64;
        let mut resolution = 0.0_f64;
        for (from, to) in [(&c1, &c2), (&c2, &c1)] {
            for p in from.iter() {
                let mut inf = f64::MAX;
                for q in to.iter() {
                    inf = inf.min(hilbert_distance(domain, p, q)?);
                }
                hausdorff = hausdorff.max(inf);
            }
            for w in from.windows(2) {
                resolution = resolution.max(hilbert_distance(domain, &w[0], &w[1])?);
            }
        }
        worst = worst.max(hausdorff - bound - resolution);
        samples += 1;
    }
    Ok(PropertyVerdict {
        name: "chord_face_hausdorff".into(),
        pass: worst <= 1e-9,
        worst_residual: worst.max(0.0),
        samples,
    })
}

/// Hull of an M_r sample stays within the inflated displacement bound.
fn hull_inflation(scene: &Scene, cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let mut worst = 0.0_f64;
    let mut samples = 0;
    let mut pass = true;
    for group in scene.groups.values() {
        if group.invariant_subset().is_none() {
            continue;
        }
        let r = group
            .generators()
            .iter()
            .map(translation_length)
            .fold(0.0_f64, f64::max)
            .max(0.1)
            * 1.5;
        let check = hull_inflation_check(group, r, &cfg.metric)?;
        if !check.vacuous {
            worst = worst.max(check.worst_displacement - check.bound);
            pass = pass && check.pass;
            samples += check.hull_samples;
        }
    }
    Ok(PropertyVerdict {
        name: "hull_inflation".into(),
        pass,
        worst_residual: worst.max(0.0),
        samples,
    })
}

/// The detected invariant simplex of each commuting diagonalizable group
/// lies in every generator's minimal set.
fn simplex_in_min(scene: &Scene, cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let mut worst = 0.0_f64;
    let mut samples = 0;
    for group in scene.groups.values() {
        if !group.commuting() {
            continue;
        }
        let report = match crate::flat::flat_torus_report(group, &cfg.metric) {
            Ok(r) => r,
            Err(
                CoreError::NotSimultaneouslyDiagonalizable { .. } | CoreError::NoSimplexFound,
            ) => continue,
            Err(e) => return Err(e),
        };
        for p in report.simplex.interior_samples(3) {
            if scene.domain.contains(&p).location != Location::Interior {
                continue;
            }
            for g in group.generators() {
                let tau = translation_length(g);
                worst = worst.max(displacement(&scene.domain, g, &p)? - tau);
                samples += 1;
            }
        }
    }
    Ok(PropertyVerdict {
        name: "simplex_in_min".into(),
        pass: worst <= cfg.metric.min_set_epsilon,
        worst_residual: worst.max(0.0),
        samples,
    })
}

/// The closed-form simplex distance agrees with the polyhedral-norm
/// distance of the log chart.
fn isometry_phi(cfg: &SceneConfig) -> Result<PropertyVerdict> {
    let mut rng = SplitMix::new(cfg.metric.rng_seed ^ 0x59);
    let mut worst = 0.0_f64;
    let mut samples = 0;
    for k in 1..=4usize {
        let _domain = build_standard_simplex(k)?;
        for _ in 0..cfg.verify_samples.min(100) {
            let coords_x: Vec<f64> = (0..=k).map(|_| (rng.next_signed() * 2.0).exp()).collect();
            let coords_y: Vec<f64> = (0..=k).map(|_| (rng.next_signed() * 2.0).exp()).collect();
            let x = ProjectivePoint::from_slice(&coords_x)?;
            let y = ProjectivePoint::from_slice(&coords_y)?;
            let closed_form = simplex_distance(&x, &y, k)?;
            let via_phi = dist_rd(&phi_coordinates(&x, k)?, &phi_coordinates(&y, k)?)?;
            worst = worst.max((closed_form - via_phi).abs());
            samples += 1;
        }
    }
    Ok(PropertyVerdict {
        name: "isometry_phi".into(),
        pass: worst <= 1e-10,
        worst_residual: worst,
        samples,
    })
}
