//! Menger curvature of point triples and the total curvature of an atomic
//! measure.
//!
//! `c(x, y, z)` is the reciprocal circumradius. Total curvature sums
//! `c² w_x w_y w_z` over *ordered* triples of distinct atoms, which is six
//! times the unordered sum. With that convention the classical identity
//! relating `∫|C μ|² dμ` to curvature carries the factor `1/6`, and for an
//! atomic measure with the diagonal removed it holds up to the pair term
//! `Σ_{i≠j} w_i w_j² / |z_i − z_j|²`.

use serde::{Deserialize, Serialize};

use crate::cauchy::cauchy_transform;
use crate::error::{check_cap, invalid, Result};
use crate::geometry::PlanePoint;
use crate::measures::{compensated_sum, DiscreteMeasure};

/// Largest atom count accepted by the brute-force triple sum.
pub const DEFAULT_TRIPLE_CAP: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureResult {
    pub value: f64,
    /// Ordered triples that entered the sum.
    pub triples_counted: u64,
    pub epsilon: f64,
}

/// `c(x, y, z) = 4 · area / (|x − y| |y − z| |z − x|)`.
pub fn menger_curvature(x: PlanePoint, y: PlanePoint, z: PlanePoint) -> Result<f64> {
    let (a, b, c) = (x.dist(y), y.dist(z), z.dist(x));
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return Err(invalid("menger curvature needs pairwise distinct points"));
    }
    Ok(2.0 * twice_area(x, y, z).abs() / (a * b * c))
}

fn twice_area(x: PlanePoint, y: PlanePoint, z: PlanePoint) -> f64 {
    (y.x - x.x) * (z.y - x.y) - (y.y - x.y) * (z.x - x.x)
}

/// `c²` without square roots: `4 (2·area)² / (a² b² c²)`.
fn curvature_sq(x: PlanePoint, y: PlanePoint, z: PlanePoint, ab: f64, bc: f64, ca: f64) -> f64 {
    let t = twice_area(x, y, z);
    4.0 * t * t / (ab * bc * ca)
}

pub fn total_curvature(measure: &DiscreteMeasure, epsilon: f64, cap: u64) -> Result<CurvatureResult> {
    check_cap("curvature triple sum atoms", measure.len() as u64, cap)?;
    if !(epsilon >= 0.0) {
        return Err(invalid("truncation radius must be nonnegative"));
    }
    let pts = measure.positions();
    let w = measure.weights();
    let n = pts.len();
    let eps2 = epsilon * epsilon;
    let mut d2 = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            d2[i * n + j] = pts[i].dist_sq(pts[j]);
        }
    }
    let mut counted = 0u64;
    // per outer index partial sums, reduced in index order
    let partials: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = Vec::new();
            for j in i + 1..n {
                let dij = d2[i * n + j];
                if dij <= eps2 {
                    continue;
                }
                let mut row = 0.0;
                for k in j + 1..n {
                    let (djk, dki) = (d2[j * n + k], d2[k * n + i]);
                    if djk <= eps2 || dki <= eps2 {
                        continue;
                    }
                    counted += 6;
                    row += curvature_sq(pts[i], pts[j], pts[k], dij, djk, dki) * w[k];
                }
                acc.push(row * w[i] * w[j]);
            }
            compensated_sum(acc)
        })
        .collect();
    Ok(CurvatureResult {
        value: 6.0 * compensated_sum(partials),
        triples_counted: counted,
        epsilon,
    })
}

/// `∫ |C_ε μ|² dμ − c²_ε(μ) / 6`, the self-interaction being excluded at
/// every atom.
pub fn mv_identity_residual(measure: &DiscreteMeasure, epsilon: f64, cap: u64) -> Result<f64> {
    let curvature = total_curvature(measure, epsilon, cap)?;
    let energy = compensated_sum(
        measure
            .atoms()
            .iter()
            .map(|a| cauchy_transform(measure, a.position, epsilon).norm_sqr() * a.weight),
    );
    Ok(energy - curvature.value / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;

    fn p(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y)
    }

    /// Circumradius through the circumcentre solve, independent of the
    /// area formula.
    fn circumradius(a: PlanePoint, b: PlanePoint, c: PlanePoint) -> f64 {
        let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        let a2 = a.x * a.x + a.y * a.y;
        let b2 = b.x * b.x + b.y * b.y;
        let c2 = c.x * c.x + c.y * c.y;
        let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
        let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
        p(ux, uy).dist(a)
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(menger_curvature(p(0.0, 0.0), p(1.0, 1.0), p(3.0, 3.0)).unwrap(), 0.0);
        // right triangle legs 3, 4, hypotenuse 5
        let c = menger_curvature(p(0.0, 0.0), p(3.0, 0.0), p(0.0, 4.0)).unwrap();
        assert!((c - 2.0 / 5.0).abs() < 1e-12);
        let eq = menger_curvature(p(0.0, 0.0), p(1.0, 0.0), p(0.5, 3f64.sqrt() / 2.0)).unwrap();
        assert!((eq - 3f64.sqrt()).abs() < 1e-12);
        let r = circumradius(p(0.0, 0.0), p(1.0, 0.0), p(0.5, 3f64.sqrt() / 2.0));
        assert!((eq - 1.0 / r).abs() < 1e-12);
        assert!(menger_curvature(p(0.0, 0.0), p(0.0, 0.0), p(1.0, 0.0)).is_err());
    }

    #[test]
    fn curvature_matches_circumcentre_oracle() {
        let pts = [p(0.1, 0.2), p(1.3, -0.4), p(-0.7, 0.9), p(2.2, 1.7), p(0.0, -1.5)];
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    if a == b || b == c || a == c {
                        continue;
                    }
                    let k = menger_curvature(pts[a], pts[b], pts[c]).unwrap();
                    let r = circumradius(pts[a], pts[b], pts[c]);
                    assert!((k - 1.0 / r).abs() < 1e-10 * k.max(1.0));
                }
            }
        }
    }

    #[test]
    fn total_curvature_degenerate_cases() {
        let line = DiscreteMeasure::from_points(&[p(0.0, 0.0), p(1.0, 0.0), p(2.5, 0.0), p(4.0, 0.0)], 1.0).unwrap();
        let r = total_curvature(&line, 0.0, DEFAULT_TRIPLE_CAP).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.triples_counted, 24);
        let two = DiscreteMeasure::from_points(&[p(0.0, 0.0), p(1.0, 0.0)], 1.0).unwrap();
        let r = total_curvature(&two, 0.0, DEFAULT_TRIPLE_CAP).unwrap();
        assert_eq!((r.value, r.triples_counted), (0.0, 0));
        assert!(total_curvature(&line, 0.0, 3).is_err());
    }

    #[test]
    fn total_curvature_matches_ordered_brute_force() {
        let m = DiscreteMeasure::new(
            [(0.0, 0.0, 1.0), (1.0, 0.2, 0.5), (0.3, 1.1, 2.0), (-0.8, 0.4, 0.25), (0.5, -0.9, 1.5)]
                .map(|(x, y, w)| Atom { position: p(x, y), weight: w }),
        )
        .unwrap();
        let a = m.atoms();
        let mut brute = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let c = menger_curvature(a[i].position, a[j].position, a[k].position).unwrap();
                    brute += c * c * a[i].weight * a[j].weight * a[k].weight;
                }
            }
        }
        let r = total_curvature(&m, 0.0, DEFAULT_TRIPLE_CAP).unwrap();
        assert!((r.value - brute).abs() < 1e-12 * brute);
        assert_eq!(r.triples_counted, 60);
    }

    #[test]
    fn equilateral_residual_is_the_pair_term() {
        // hand expansion: ∫|Cμ|²dμ over three atoms at the vertices of a unit
        // equilateral triangle with weight w. For atom i the two others are at
        // unit distance and at angle π/3 as seen from i, so
        // |C μ(z_i)|² = w² |e^{iα} + e^{iβ}|² = w² (2 + 2 cos(π/3)) = 3 w².
        // Energy = 3 · w · 3 w² = 9 w³. Curvature (ordered) = 6 · 3 · w³,
        // so the residual is 9 w³ − 3 w³ = 6 w³ = Σ_{i≠j} w · w² / 1.
        let w = 0.7;
        let m = DiscreteMeasure::from_points(&[p(0.0, 0.0), p(1.0, 0.0), p(0.5, 3f64.sqrt() / 2.0)], w).unwrap();
        let res = mv_identity_residual(&m, 0.0, DEFAULT_TRIPLE_CAP).unwrap();
        assert!((res - 6.0 * w * w * w).abs() < 1e-12);
        let single = DiscreteMeasure::from_points(&[p(0.3, 0.3)], 2.0).unwrap();
        assert_eq!(mv_identity_residual(&single, 0.0, DEFAULT_TRIPLE_CAP).unwrap(), 0.0);
    }

    #[test]
    fn residual_equals_pair_term_for_generic_measures() {
        let m = DiscreteMeasure::new(
            [(0.0, 0.0, 1.0), (1.0, 0.2, 0.5), (0.3, 1.1, 2.0), (-0.8, 0.4, 0.25)]
                .map(|(x, y, w)| Atom { position: p(x, y), weight: w }),
        )
        .unwrap();
        let a = m.atoms();
        let mut pair = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                if i != j {
                    pair += a[i].weight * a[j].weight * a[j].weight / a[i].position.dist_sq(a[j].position);
                }
            }
        }
        let res = mv_identity_residual(&m, 0.0, DEFAULT_TRIPLE_CAP).unwrap();
        assert!((res - pair).abs() < 1e-12 * pair);
    }

    #[test]
    fn segment_residual_is_bounded() {
        for n in [50usize, 100, 200, 400] {
            let h = 1.0 / n as f64;
            let m = DiscreteMeasure::from_points(
                &(0..n).map(|i| p((i as f64 + 0.5) * h, 0.0)).collect::<Vec<_>>(),
                h,
            )
            .unwrap();
            let g = m.growth_constant(&crate::measures::BallFamily::AtomLadder).unwrap().constant;
            let res = mv_identity_residual(&m, 0.0, DEFAULT_TRIPLE_CAP).unwrap();
            assert!(res.abs() <= 10.0 * m.total_mass() * g * g, "n={n}: {res}");
            // collinear: the residual is the pair term 2 ζ(2)-ish per unit mass
            assert!(res > 3.0 && res < 3.3, "n={n}: {res}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pt() -> impl Strategy<Value = PlanePoint> {
            (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y)| p(x, y))
        }

        proptest! {
            #[test]
            fn symmetric_under_permutations(a in pt(), b in pt(), c in pt()) {
                prop_assume!(a.dist(b) > 1e-6 && b.dist(c) > 1e-6 && a.dist(c) > 1e-6);
                let k = menger_curvature(a, b, c).unwrap();
                for (x, y, z) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    let other = menger_curvature(x, y, z).unwrap();
                    prop_assert!((other - k).abs() <= 1e-12 * k.max(1e-300));
                }
            }

            #[test]
            fn similarity_scaling(a in pt(), b in pt(), c in pt(), s in 0.1f64..10.0) {
                prop_assume!(a.dist(b) > 1e-3 && b.dist(c) > 1e-3 && a.dist(c) > 1e-3);
                let k = menger_curvature(a, b, c).unwrap();
                let ks = menger_curvature(a.scale(s), b.scale(s), c.scale(s)).unwrap();
                prop_assert!((ks - k / s).abs() <= 1e-9 * (k / s).max(1e-12));
            }

            #[test]
            fn total_curvature_monotone_in_epsilon_and_cubic_in_weight(
                pts in proptest::collection::vec(pt(), 3..14), e1 in 0.0f64..3.0, e2 in 0.0f64..3.0, c in 0.1f64..5.0,
            ) {
                let m = DiscreteMeasure::from_points(&pts, 0.5).unwrap();
                let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
                let a = total_curvature(&m, lo, DEFAULT_TRIPLE_CAP).unwrap().value;
                let b = total_curvature(&m, hi, DEFAULT_TRIPLE_CAP).unwrap().value;
                prop_assert!(b <= a * (1.0 + 1e-12));
                let scaled = total_curvature(&m.rescale(c).unwrap(), lo, DEFAULT_TRIPLE_CAP).unwrap().value;
                prop_assert!((scaled - c * c * c * a).abs() <= 1e-10 * (c * c * c * a).max(1e-300));
            }
        }
    }
}
