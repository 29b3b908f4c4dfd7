//! Generators for the named configurations: Garnett corner sets, the dyadic
//! counterexample measure, cross families, and chains of separated discs on
//! a line or a circle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Error, Result};
use crate::geometry::{check_separation, dyadic_squares, Cross, Disc, PlanePoint, Segment, Square};
use crate::measures::{sum, Atom, DiscreteMeasure};

/// Corner squares of the Garnett construction after `depth` refinements.
///
/// Each square is replaced by its four corner squares of a quarter side, in
/// the order SW, SE, NW, NE; the output is the depth-first enumeration.
pub fn garnett_squares(frame: &Square, depth: u32, cap: u64) -> Result<Vec<Square>> {
    let count = 4u64.checked_pow(depth).unwrap_or(u64::MAX);
    check_cap("garnett squares", count, cap)?;
    let mut squares = vec![Square {
        dyadic_index: None,
        ..*frame
    }];
    for _ in 0..depth {
        squares = squares.iter().flat_map(corner_children).collect();
    }
    Ok(squares)
}

fn corner_children(sq: &Square) -> [Square; 4] {
    let q = 0.25 * sq.side;
    let far = 0.75 * sq.side;
    let PlanePoint { x, y } = sq.lower_left;
    let make = |dx: f64, dy: f64| Square {
        lower_left: PlanePoint::new(x + dx, y + dy),
        side: q,
        dyadic_index: None,
    };
    [make(0.0, 0.0), make(far, 0.0), make(0.0, far), make(far, far)]
}

/// One atom at the centre of each Garnett square; total mass `frame.side`.
pub fn garnett_measure(frame: &Square, depth: u32, cap: u64) -> Result<DiscreteMeasure> {
    let squares = garnett_squares(frame, depth, cap)?;
    let weight = frame.side * 0.25f64.powi(depth as i32);
    Ok(DiscreteMeasure::new(squares.iter().map(|s| Atom {
        position: s.center(),
        weight,
    }))?
    .with_label(format!("garnett(depth={depth})")))
}

/// Garnett depth used at each dyadic generation of the counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DepthSchedule {
    Constant { depth: u32 },
    /// `max(1, top − k)`.
    Decreasing { top: u32 },
    Explicit { depths: Vec<u32> },
}

impl DepthSchedule {
    pub fn depth(&self, generation: u32) -> Result<u32> {
        match self {
            DepthSchedule::Constant { depth } => Ok(*depth),
            DepthSchedule::Decreasing { top } => Ok(top.saturating_sub(generation).max(1)),
            DepthSchedule::Explicit { depths } => depths
                .get(generation as usize)
                .copied()
                .ok_or_else(|| Error::InvalidConfiguration(format!("no Garnett depth given for generation {generation}"))),
        }
    }
}

/// Number of atoms `counterexample_measure` would create (before merging).
pub fn counterexample_atom_count(k_max: u32, schedule: &DepthSchedule) -> Result<u64> {
    let mut total = 0u64;
    for k in 0..=k_max {
        let d = schedule.depth(k)?;
        let n = 4u64
            .checked_pow(k + d)
            .ok_or_else(|| invalid("counterexample atom count overflows"))?;
        total = total.saturating_add(n);
    }
    Ok(total)
}

/// `Σ_{k ≤ K} 4^{−k} Σ_n garnett_measure(Q_k^n, depth(k))`.
pub fn counterexample_measure(k_max: u32, schedule: &DepthSchedule, cap: u64) -> Result<DiscreteMeasure> {
    check_cap("counterexample atoms", counterexample_atom_count(k_max, schedule)?, cap)?;
    let pieces = counterexample_components(k_max, schedule, cap)?;
    Ok(sum(pieces.iter().map(|c| &c.measure)).with_label(format!("counterexample(K={k_max})")))
}

/// One scaled Garnett piece of the counterexample.
#[derive(Debug, Clone)]
pub struct CounterexampleComponent {
    pub square: Square,
    pub measure: DiscreteMeasure,
}

pub fn counterexample_components(
    k_max: u32,
    schedule: &DepthSchedule,
    cap: u64,
) -> Result<Vec<CounterexampleComponent>> {
    check_cap("counterexample atoms", counterexample_atom_count(k_max, schedule)?, cap)?;
    let mut out = Vec::new();
    for k in 0..=k_max {
        let depth = schedule.depth(k)?;
        let scale = 0.25f64.powi(k as i32);
        for sq in dyadic_squares(k, cap)? {
            let m = garnett_measure(&sq, depth, cap)?.rescale(scale)?;
            out.push(CounterexampleComponent { square: sq, measure: m });
        }
    }
    Ok(out)
}

/// One central cross and `N + 1` boundary crosses inside `2·parent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossFamily {
    pub parent_disc: Disc,
    pub central_cross: Cross,
    pub boundary_crosses: Vec<Cross>,
    pub target_capacity: f64,
}

impl CrossFamily {
    pub fn crosses(&self) -> impl Iterator<Item = &Cross> {
        std::iter::once(&self.central_cross).chain(self.boundary_crosses.iter())
    }

    pub fn length(&self) -> f64 {
        self.crosses().map(Cross::length).sum()
    }

    /// Some cross of the family lies entirely inside `ball`.
    pub fn has_cross_inside(&self, ball: &Disc) -> bool {
        self.crosses().any(|c| ball.contains_cross(c))
    }

    /// The containment claim for balls meeting both the parent disc and the
    /// complement of its tenfold dilate; `None` when `ball` is not such a ball.
    pub fn proposition(&self, ball: &Disc) -> Option<bool> {
        let applies = ball.intersects(&self.parent_disc) && ball.meets_complement_of(&self.parent_disc.dilate(10.0));
        applies.then(|| self.has_cross_inside(ball))
    }
}

/// Boundary cross count `N + 1`: the smallest count whose angular spacing is
/// at most `π/8`.
pub fn default_boundary_count() -> usize {
    (2.0 * PI / (PI / 8.0)).ceil() as usize
}

/// Crosses sized so the family has total length `γ/5`, split evenly over
/// `n_boundary + 1` congruent crosses. Boundary crosses sit at equally spaced
/// angles just inside `∂(2·parent)`, their arm tips touching the circle at
/// the axis directions.
pub fn cross_family(parent: &Disc, target_capacity: f64, n_boundary: usize) -> Result<CrossFamily> {
    if !(target_capacity > 0.0 && target_capacity <= 2.0 * parent.radius) {
        return Err(invalid(format!(
            "cross family capacity {target_capacity} outside (0, 2r] for r = {}",
            parent.radius
        )));
    }
    if n_boundary == 0 {
        return Err(invalid("cross family needs at least one boundary cross"));
    }
    let count = n_boundary + 1;
    let per_cross = target_capacity / (5.0 * count as f64);
    let half_arm = per_cross / 4.0;
    let central_cross = Cross::new(parent.center, half_arm)?;
    let ring = 2.0 * parent.radius - half_arm;
    let boundary_crosses = (0..n_boundary)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n_boundary as f64;
            Cross::new(parent.center.polar_offset(ring, theta), half_arm)
        })
        .collect::<Result<Vec<_>>>()?;
    let family = CrossFamily {
        parent_disc: *parent,
        central_cross,
        boundary_crosses,
        target_capacity,
    };
    let all: Vec<&Cross> = family.crosses().collect();
    for (i, a) in all.iter().enumerate() {
        if all[i + 1..].iter().any(|b| a.intersects(b)) {
            return Err(invalid(format!("{n_boundary} boundary crosses overlap at this size")));
        }
    }
    Ok(family)
}

/// What each disc of a configuration contains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InnerKind {
    /// Segment through the centre of length `fill · 2r`, horizontal on a
    /// line and tangent on a circle.
    Segment { fill: f64 },
    /// Concentric disc of radius `fill · r`.
    SubDisc { fill: f64 },
    /// Garnett set in the square inscribed in the disc of radius `fill · r`.
    Garnett { depth: u32, fill: f64 },
    /// Cross family on the concentric half-radius disc, so that it stays
    /// inside the disc, with capacity target `fill · r`.
    Crosses { fill: f64 },
}

impl Default for InnerKind {
    fn default() -> Self {
        InnerKind::Segment { fill: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InnerSet {
    Segment(Segment),
    SubDisc(Disc),
    Garnett { frame: Square, depth: u32 },
    Crosses(CrossFamily),
}

impl InnerSet {
    /// Classical capacity where one is known: `ℓ/4` for a segment, the radius
    /// for a disc.
    pub fn exact_capacity(&self) -> Option<f64> {
        match self {
            InnerSet::Segment(s) => Some(s.length() / 4.0),
            InnerSet::SubDisc(d) => Some(d.radius),
            _ => None,
        }
    }

    /// Discretization as a measure: equal-length cells at spacing about
    /// `resolution`, each atom carrying its cell length. Disc interiors are
    /// represented by their boundary circle, which has the same capacity.
    pub fn sample(&self, resolution: f64, cap: u64) -> Result<DiscreteMeasure> {
        if !(resolution > 0.0) {
            return Err(invalid("sampling resolution must be positive"));
        }
        let m = match self {
            InnerSet::Segment(s) => sample_segment(s, resolution, false)?,
            InnerSet::SubDisc(d) => sample_circle(d, resolution)?,
            InnerSet::Garnett { frame, depth } => garnett_measure(frame, *depth, cap)?,
            InnerSet::Crosses(f) => {
                let parts = f
                    .crosses()
                    .map(|c| sample_cross(c, resolution))
                    .collect::<Result<Vec<_>>>()?;
                sum(parts.iter())
            }
        };
        check_cap("sampled atoms", m.len() as u64, cap)?;
        Ok(m)
    }
}

pub fn sample_segment(s: &Segment, resolution: f64, even: bool) -> Result<DiscreteMeasure> {
    let len = s.length();
    let mut n = ((len / resolution).round() as usize).max(1);
    if even && n % 2 == 1 {
        n += 1;
    }
    let w = len / n as f64;
    DiscreteMeasure::new((0..n).map(|i| Atom {
        position: s.at((i as f64 + 0.5) / n as f64),
        weight: w,
    }))
}

pub fn sample_circle(d: &Disc, resolution: f64) -> Result<DiscreteMeasure> {
    let len = 2.0 * PI * d.radius;
    let n = ((len / resolution).round() as usize).max(3);
    DiscreteMeasure::new((0..n).map(|k| Atom {
        position: d.center.polar_offset(d.radius, 2.0 * PI * (k as f64 + 0.5) / n as f64),
        weight: len / n as f64,
    }))
}

/// Both arms sampled with an even cell count, so no atom sits at the centre.
pub fn sample_cross(c: &Cross, resolution: f64) -> Result<DiscreteMeasure> {
    let [h, v] = c.arms();
    Ok(sum([&sample_segment(&h, resolution, true)?, &sample_segment(&v, resolution, true)?]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Line,
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfiguration {
    pub discs: Vec<Disc>,
    pub inner_sets: Vec<InnerSet>,
    pub lambda: f64,
    pub layout: Layout,
}

impl LineConfiguration {
    pub fn union_sample(&self, resolution: f64, cap: u64) -> Result<DiscreteMeasure> {
        let parts = self.samples(resolution, cap)?;
        let m = sum(parts.iter());
        check_cap("sampled atoms", m.len() as u64, cap)?;
        Ok(m)
    }

    pub fn samples(&self, resolution: f64, cap: u64) -> Result<Vec<DiscreteMeasure>> {
        self.inner_sets.iter().map(|s| s.sample(resolution, cap)).collect()
    }
}

/// Chain of discs with radii `radii` and free space `gaps[j]` between the
/// boundaries of consecutive discs; on a circle the chain is closed and the
/// last gap links the last disc back to the first.
pub fn line_configuration(
    radii: &[f64],
    gaps: &[f64],
    lambda: f64,
    inner: InnerKind,
    layout: Layout,
) -> Result<LineConfiguration> {
    let n = radii.len();
    if n == 0 {
        return Err(Error::InvalidConfiguration("configuration needs at least one disc".into()));
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidConfiguration(format!("lambda must be at least 1, got {lambda}")));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidConfiguration("radii must be positive".into()));
    }
    let links = match layout {
        Layout::Line => n - 1,
        Layout::Circle if n == 1 => 0,
        Layout::Circle => n,
    };
    if gaps.len() < links {
        return Err(Error::InvalidConfiguration(format!("{n} discs need {links} gaps, got {}", gaps.len())));
    }
    if gaps.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::InvalidConfiguration("gaps must be nonnegative".into()));
    }
    let chord = |j: usize| radii[j] + radii[(j + 1) % n] + gaps[j];
    let (centers, tangents): (Vec<PlanePoint>, Vec<f64>) = match layout {
        Layout::Line => {
            let mut x = 0.0;
            let mut c = vec![PlanePoint::new(0.0, 0.0)];
            for j in 0..links {
                x += chord(j);
                c.push(PlanePoint::new(x, 0.0));
            }
            (c, vec![0.0; n])
        }
        Layout::Circle if n == 1 => (vec![PlanePoint::ORIGIN], vec![0.0]),
        Layout::Circle => {
            let chords: Vec<f64> = (0..n).map(chord).collect();
            let radius = inscribed_polygon_radius(&chords)?;
            let mut angle = 0.0;
            let mut c = Vec::with_capacity(n);
            let mut t = Vec::with_capacity(n);
            for ch in chords.iter().take(n) {
                c.push(PlanePoint::ORIGIN.polar_offset(radius, angle));
                t.push(angle + PI / 2.0);
                angle += 2.0 * (ch / (2.0 * radius)).min(1.0).asin();
            }
            (c, t)
        }
    };
    let discs = centers
        .iter()
        .zip(radii)
        .map(|(&c, &r)| Disc::new(c, r))
        .collect::<Result<Vec<_>>>()?;
    if !check_separation(&discs, lambda) {
        return Err(Error::InvalidConfiguration(format!("discs are not {lambda}-separated")));
    }
    let inner_sets = discs
        .iter()
        .zip(&tangents)
        .map(|(d, &t)| inner_set(d, t, inner))
        .collect::<Result<Vec<_>>>()?;
    Ok(LineConfiguration {
        discs,
        inner_sets,
        lambda,
        layout,
    })
}

fn inner_set(d: &Disc, tangent: f64, kind: InnerKind) -> Result<InnerSet> {
    let check_fill = |fill: f64| {
        if fill > 0.0 && fill <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(format!("inner fill must be in (0, 1], got {fill}")))
        }
    };
    Ok(match kind {
        InnerKind::Segment { fill } => {
            check_fill(fill)?;
            InnerSet::Segment(Segment::centered(d.center, 2.0 * fill * d.radius, tangent)?)
        }
        InnerKind::SubDisc { fill } => {
            check_fill(fill)?;
            InnerSet::SubDisc(Disc::new(d.center, fill * d.radius)?)
        }
        InnerKind::Garnett { depth, fill } => {
            check_fill(fill)?;
            InnerSet::Garnett {
                frame: Square::inscribed_in(&d.dilate(fill)),
                depth,
            }
        }
        InnerKind::Crosses { fill } => {
            check_fill(fill)?;
            let parent = d.dilate(0.5);
            InnerSet::Crosses(cross_family(&parent, fill * d.radius, default_boundary_count())?)
        }
    })
}

/// Circumradius of the convex polygon with the given side lengths, found by
/// bisection on `Σ 2 asin(s / 2R) = 2π`.
fn inscribed_polygon_radius(sides: &[f64]) -> Result<f64> {
    let longest = sides.iter().cloned().fold(0.0, f64::max);
    let total_angle = |r: f64| sides.iter().map(|s| 2.0 * (s / (2.0 * r)).min(1.0).asin()).sum::<f64>();
    let mut lo = 0.5 * longest;
    if total_angle(lo) < 2.0 * PI {
        // the longest side is a diameter-like outlier: not a closed chain
        return Err(Error::InvalidConfiguration("circle layout cannot close this chain".into()));
    }
    let mut hi = sides.iter().sum::<f64>();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_angle(mid) > 2.0 * PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
