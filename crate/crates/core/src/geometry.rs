//! Planar primitives: points, discs, segments, squares and crosses, plus the
//! separation predicate, the dyadic grid of the unit square and the
//! enlarged ("hat") disc construction.
//!
//! Everything here is plain `f64` geometry. Comparisons use an absolute
//! tolerance of [`TOL`]; all magnitudes in the experiments are of order one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Result};

/// Comparison tolerance for geometric predicates.
pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn from_complex(z: Complex64) -> Self {
        PlanePoint { x: z.re, y: z.im }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, other: PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: PlanePoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn add(self, other: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, s: f64) -> PlanePoint {
        PlanePoint::new(self.x * s, self.y * s)
    }

    /// Rotation by `angle` radians about the origin.
    pub fn rotate(self, angle: f64) -> PlanePoint {
        let (s, c) = angle.sin_cos();
        PlanePoint::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Point at polar coordinates around `self`.
    pub fn polar_offset(self, radius: f64, angle: f64) -> PlanePoint {
        let (s, c) = angle.sin_cos();
        PlanePoint::new(self.x + radius * c, self.y + radius * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: PlanePoint,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: PlanePoint, radius: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(invalid("disc center must be finite"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("disc radius must be positive and finite, got {radius}")));
        }
        Ok(Disc { center, radius })
    }

    /// Concentric disc with radius multiplied by `factor`.
    pub fn dilate(&self, factor: f64) -> Disc {
        Disc {
            center: self.center,
            radius: self.radius * factor,
        }
    }

    /// Closed-disc membership with tolerance.
    pub fn contains_point(&self, p: PlanePoint) -> bool {
        self.center.dist(p) <= self.radius + TOL
    }

    pub fn contains_disc(&self, other: &Disc) -> bool {
        self.center.dist(other.center) + other.radius <= self.radius + TOL
    }

    /// True when the closed discs share at least one point.
    pub fn intersects(&self, other: &Disc) -> bool {
        self.center.dist(other.center) <= self.radius + other.radius + TOL
    }

    /// True when `self` meets the open complement of `other`.
    pub fn meets_complement_of(&self, other: &Disc) -> bool {
        !other.contains_disc(self)
    }

    pub fn contains_cross(&self, cross: &Cross) -> bool {
        cross.tips().iter().all(|&p| self.contains_point(p))
    }

    pub fn contains_square(&self, sq: &Square) -> bool {
        sq.corners().iter().all(|&p| self.contains_point(p))
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Distance between two closed discs (zero when they intersect).
    pub fn dist_to(&self, other: &Disc) -> f64 {
        (self.center.dist(other.center) - self.radius - other.radius).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: PlanePoint,
    pub b: PlanePoint,
}

impl Segment {
    pub fn new(a: PlanePoint, b: PlanePoint) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(invalid("segment endpoints must be finite"));
        }
        if a.dist(b) <= 0.0 {
            return Err(invalid("segment endpoints must be distinct"));
        }
        Ok(Segment { a, b })
    }

    /// Segment of the given length centred at `center` with direction `angle`.
    pub fn centered(center: PlanePoint, length: f64, angle: f64) -> Result<Self> {
        let half = PlanePoint::new(0.5 * length, 0.0).rotate(angle);
        Segment::new(center.sub(half), center.add(half))
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> PlanePoint {
        self.a.add(self.b).scale(0.5)
    }

    /// Point at parameter `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> PlanePoint {
        PlanePoint::new(
            self.a.x + t * (self.b.x - self.a.x),
            self.a.y + t * (self.b.y - self.a.y),
        )
    }

    /// Closed-segment intersection test (collinear overlaps included).
    pub fn intersects(&self, other: &Segment) -> bool {
        fn orient(p: PlanePoint, q: PlanePoint, r: PlanePoint) -> f64 {
            (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
        }
        fn on_box(p: PlanePoint, q: PlanePoint, r: PlanePoint) -> bool {
            r.x <= p.x.max(q.x) + TOL
                && r.x >= p.x.min(q.x) - TOL
                && r.y <= p.y.max(q.y) + TOL
                && r.y >= p.y.min(q.y) - TOL
        }
        let (p1, p2, q1, q2) = (self.a, self.b, other.a, other.b);
        let d1 = orient(q1, q2, p1);
        let d2 = orient(q1, q2, p2);
        let d3 = orient(p1, p2, q1);
        let d4 = orient(p1, p2, q2);
        if ((d1 > TOL && d2 < -TOL) || (d1 < -TOL && d2 > TOL))
            && ((d3 > TOL && d4 < -TOL) || (d3 < -TOL && d4 > TOL))
        {
            return true;
        }
        (d1.abs() <= TOL && on_box(q1, q2, p1))
            || (d2.abs() <= TOL && on_box(q1, q2, p2))
            || (d3.abs() <= TOL && on_box(p1, p2, q1))
            || (d4.abs() <= TOL && on_box(p1, p2, q2))
    }
}

/// Position of a cell in the dyadic partition of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub generation: u32,
    /// 1-based, row-major from the bottom-left cell.
    pub ordinal: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub lower_left: PlanePoint,
    pub side: f64,
    pub dyadic_index: Option<DyadicIndex>,
}

impl Square {
    pub fn new(lower_left: PlanePoint, side: f64) -> Result<Self> {
        if !lower_left.is_finite() {
            return Err(invalid("square corner must be finite"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid(format!("square side must be positive, got {side}")));
        }
        Ok(Square {
            lower_left,
            side,
            dyadic_index: None,
        })
    }

    pub fn unit() -> Self {
        Square {
            lower_left: PlanePoint::ORIGIN,
            side: 1.0,
            dyadic_index: Some(DyadicIndex {
                generation: 0,
                ordinal: 1,
            }),
        }
    }

    /// The dyadic cell `Q_k^n` of the unit square (row-major, 1-based `n`).
    pub fn dyadic(generation: u32, ordinal: u64) -> Result<Self> {
        let per_row = 1u64
            .checked_shl(generation)
            .ok_or_else(|| invalid("dyadic generation too large"))?;
        if ordinal == 0 || ordinal > per_row * per_row {
            return Err(invalid(format!(
                "dyadic ordinal {ordinal} out of range for generation {generation}"
            )));
        }
        let side = 0.5f64.powi(generation as i32);
        let idx = ordinal - 1;
        let (row, col) = (idx / per_row, idx % per_row);
        Ok(Square {
            lower_left: PlanePoint::new(col as f64 * side, row as f64 * side),
            side,
            dyadic_index: Some(DyadicIndex {
                generation,
                ordinal,
            }),
        })
    }

    pub fn center(&self) -> PlanePoint {
        PlanePoint::new(
            self.lower_left.x + 0.5 * self.side,
            self.lower_left.y + 0.5 * self.side,
        )
    }

    pub fn corners(&self) -> [PlanePoint; 4] {
        let PlanePoint { x, y } = self.lower_left;
        let s = self.side;
        [
            PlanePoint::new(x, y),
            PlanePoint::new(x + s, y),
            PlanePoint::new(x, y + s),
            PlanePoint::new(x + s, y + s),
        ]
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn diameter(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2
    }

    /// Closed-square membership. Exact on dyadic coordinates; no tolerance
    /// so that neighbouring cells split boundary atoms deterministically
    /// only through the closed-region rule.
    pub fn contains_point(&self, p: PlanePoint) -> bool {
        p.x >= self.lower_left.x
            && p.x <= self.lower_left.x + self.side
            && p.y >= self.lower_left.y
            && p.y <= self.lower_left.y + self.side
    }

    pub fn contains_square(&self, other: &Square) -> bool {
        other.corners().iter().all(|&p| self.contains_point(p))
    }

    /// Interiors overlap.
    pub fn overlaps(&self, other: &Square) -> bool {
        let ax1 = self.lower_left.x + self.side;
        let ay1 = self.lower_left.y + self.side;
        let bx1 = other.lower_left.x + other.side;
        let by1 = other.lower_left.y + other.side;
        self.lower_left.x < bx1 && other.lower_left.x < ax1 && self.lower_left.y < by1 && other.lower_left.y < ay1
    }

    /// Square translated by `(dx, dy)`; the dyadic index is dropped.
    pub fn translate(&self, dx: f64, dy: f64) -> Square {
        Square {
            lower_left: PlanePoint::new(self.lower_left.x + dx, self.lower_left.y + dy),
            side: self.side,
            dyadic_index: None,
        }
    }

    /// Square of the same centre as `disc`'s centre, inscribed in the disc.
    pub fn inscribed_in(disc: &Disc) -> Square {
        let side = disc.radius * std::f64::consts::SQRT_2;
        Square {
            lower_left: PlanePoint::new(disc.center.x - 0.5 * side, disc.center.y - 0.5 * side),
            side,
            dyadic_index: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cross {
    pub center: PlanePoint,
    pub half_arm: f64,
}

impl Cross {
    pub fn new(center: PlanePoint, half_arm: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(invalid("cross center must be finite"));
        }
        if !(half_arm > 0.0 && half_arm.is_finite()) {
            return Err(invalid(format!("cross half-arm must be positive, got {half_arm}")));
        }
        Ok(Cross { center, half_arm })
    }

    /// Horizontal and vertical arms.
    pub fn arms(&self) -> [Segment; 2] {
        let c = self.center;
        let h = self.half_arm;
        [
            Segment {
                a: PlanePoint::new(c.x - h, c.y),
                b: PlanePoint::new(c.x + h, c.y),
            },
            Segment {
                a: PlanePoint::new(c.x, c.y - h),
                b: PlanePoint::new(c.x, c.y + h),
            },
        ]
    }

    pub fn tips(&self) -> [PlanePoint; 4] {
        let [hz, vt] = self.arms();
        [hz.a, hz.b, vt.a, vt.b]
    }

    /// One-dimensional Hausdorff measure of the cross.
    pub fn length(&self) -> f64 {
        4.0 * self.half_arm
    }

    pub fn intersects(&self, other: &Cross) -> bool {
        self.arms()
            .iter()
            .any(|a| other.arms().iter().any(|b| a.intersects(b)))
    }
}

/// Smallest disc centred on the boundary circle of `b` that contains `d`.
///
/// The optimum centre is the radial projection of `d.center` onto `∂b`,
/// with radius `|d.center − p| + d.radius`.
pub fn hat_disc(d: &Disc, b: &Disc) -> Result<Disc> {
    let offset = d.center.sub(b.center);
    let dist = offset.norm();
    if dist - d.radius >= b.radius - TOL {
        return Err(invalid("hat disc undefined: d does not meet b"));
    }
    if dist + d.radius <= b.radius + TOL {
        return Err(invalid("hat disc undefined: d lies inside b"));
    }
    let center = if dist > 0.0 {
        b.center.add(offset.scale(b.radius / dist))
    } else {
        // d is concentric and contains b: every boundary point is optimal.
        b.center.add(PlanePoint::new(b.radius, 0.0))
    };
    Ok(Disc {
        center,
        radius: center.dist(d.center) + d.radius,
    })
}

/// True iff the λ-dilates of all discs are pairwise disjoint
/// (`|c_j − c_k| > λ (r_j + r_k)`); tangency fails.
pub fn check_separation(discs: &[Disc], lambda: f64) -> bool {
    discs.iter().enumerate().all(|(j, a)| {
        discs[j + 1..]
            .iter()
            .all(|b| a.center.dist(b.center) > lambda * (a.radius + b.radius) + TOL)
    })
}

/// The `4^k` dyadic cells of generation `k`, row-major from the bottom-left.
pub fn dyadic_squares(generation: u32, cap: u64) -> Result<Vec<Square>> {
    if generation >= 31 {
        return Err(crate::error::Error::Resource {
            what: "dyadic squares",
            requested: u64::MAX,
            cap,
        });
    }
    let count = 1u64 << (2 * generation);
    check_cap("dyadic squares", count, cap)?;
    (1..=count).map(|n| Square::dyadic(generation, n)).collect()
}
