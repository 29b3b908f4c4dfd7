//! Brackets and scores for analytic capacity.
//!
//! Three kinds of estimate are produced:
//!
//! * `exact`: classical closed forms (disc: radius, segment: length / 4);
//! * `bracket`: rigorous lower and upper bounds from monotonicity, contained
//!   segments and enclosing discs;
//! * `score`: the mass of a witness measure on the set whose growth is at
//!   most one on the atom ladder and whose Cauchy operator has norm at most
//!   one. Masses of such measures are comparable to capacity up to absolute
//!   constants, so scores are only ever compared with other scores.

use serde::{Deserialize, Serialize};

use crate::cauchy::{operator_norm_with, NormOptions};
use crate::constructions::{CrossFamily, LineConfiguration};
use crate::error::{invalid, Result};
use crate::geometry::{Cross, Disc, PlanePoint, Segment, Square};
use crate::measures::{BallFamily, DiscreteMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Bracket,
    Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<DiscreteMeasure>,
    pub method: Method,
}

impl CapacityEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactShape {
    Disc(Disc),
    Segment(Segment),
}

pub fn exact_capacity(shape: ExactShape) -> CapacityEstimate {
    let value = match shape {
        ExactShape::Disc(d) => d.radius,
        ExactShape::Segment(s) => s.length() / 4.0,
    };
    CapacityEstimate {
        lower: value,
        upper: value,
        witness: None,
        method: Method::Exact,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BracketShape {
    Square(Square),
    Cross(Cross),
    CrossFamily(CrossFamily),
    Union(Vec<BracketShape>),
}

impl BracketShape {
    fn extreme_points(&self) -> Vec<PlanePoint> {
        match self {
            BracketShape::Square(s) => s.corners().to_vec(),
            BracketShape::Cross(c) => c.tips().to_vec(),
            BracketShape::CrossFamily(f) => f.crosses().flat_map(|c| c.tips()).collect(),
            BracketShape::Union(parts) => parts.iter().flat_map(|p| p.extreme_points()).collect(),
        }
    }
}

/// Square of side `a`: `[a/4, a√2]`. Cross of half-arm `h`: `[h/2, 2√2 h]`.
/// Unions: the largest piece lower bound, and the radius of a disc
/// enclosing the whole union as upper bound.
pub fn capacity_bracket(shape: &BracketShape) -> CapacityEstimate {
    let (lower, upper) = match shape {
        BracketShape::Square(s) => (s.side / 4.0, s.side * std::f64::consts::SQRT_2),
        BracketShape::Cross(c) => (c.half_arm / 2.0, 2.0 * std::f64::consts::SQRT_2 * c.half_arm),
        BracketShape::CrossFamily(f) => {
            let parts = f.crosses().map(|c| BracketShape::Cross(*c)).collect();
            return capacity_bracket(&BracketShape::Union(parts));
        }
        BracketShape::Union(parts) => {
            let lower = parts.iter().map(|p| capacity_bracket(p).lower).fold(0.0, f64::max);
            (lower, enclosing_radius(&shape.extreme_points()).max(lower))
        }
    };
    CapacityEstimate {
        lower,
        upper,
        witness: None,
        method: Method::Bracket,
    }
}

/// Radius of the disc centred at the bounding-box centre that contains all
/// points. The convex hull of the points contains every piece.
fn enclosing_radius(points: &[PlanePoint]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let c = PlanePoint::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    points.iter().map(|p| p.dist(c)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    pub norm: NormOptions,
    /// Bound imposed on `μ(B) / r(B)` over the atom ladder.
    pub growth_limit: f64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            norm: NormOptions {
                tol: 1e-7,
                ..NormOptions::default()
            },
            growth_limit: 1.0,
        }
    }
}

/// Capacity score of a point cloud with uniform element length `resolution`.
pub fn capacity_score(points: &[PlanePoint], resolution: f64, opts: &ScoreOptions) -> Result<CapacityEstimate> {
    if !(resolution > 0.0) {
        return Err(invalid("score resolution must be positive"));
    }
    capacity_score_of(&DiscreteMeasure::from_points(points, resolution)?, opts)
}

/// Capacity score starting from a sampled measure whose weights are the
/// element lengths of the discretization.
///
/// Weights are first capped on the atom ladder, then the measure is scaled
/// by `min(1 / ‖C‖, 1 / growth)`; whichever constraint binds is tight.
/// Because the norm is homogeneous in the scale, the scale is exact and no
/// search is needed.
pub fn capacity_score_of(sample: &DiscreteMeasure, opts: &ScoreOptions) -> Result<CapacityEstimate> {
    if sample.is_empty() {
        return Err(invalid("capacity score of an empty set"));
    }
    let witness = normalized_witness(sample, opts)?;
    let max_weight = sample.atoms().iter().map(|a| a.weight).fold(0.0, f64::max);
    Ok(CapacityEstimate {
        lower: witness.total_mass(),
        upper: sample.bbox_diagonal().max(max_weight),
        witness: Some(witness),
        method: Method::Score,
    })
}

fn ladder_for(m: &DiscreteMeasure) -> BallFamily {
    if m.len() < 2 {
        // one atom stands for a piece of its own length
        BallFamily::AtomLadderFrom {
            floor: m.atoms()[0].weight,
        }
    } else {
        BallFamily::AtomLadder
    }
}

/// Growth capping followed by exact norm normalization.
pub fn normalized_witness(sample: &DiscreteMeasure, opts: &ScoreOptions) -> Result<DiscreteMeasure> {
    let family = ladder_for(sample);
    let capped = sample.cap_growth(&family, opts.growth_limit)?;
    normalize_measure(&capped, opts.growth_limit, &opts.norm)
}

/// Global rescaling so that the operator norm is at most one and the
/// ladder growth at most `growth_limit`, with one of them attained.
pub fn normalize_measure(m: &DiscreteMeasure, growth_limit: f64, norm: &NormOptions) -> Result<DiscreteMeasure> {
    normalize_measure_on(m, &ladder_for(m), growth_limit, norm)
}

/// As [`normalize_measure`], with growth measured on the given balls.
pub fn normalize_measure_on(
    m: &DiscreteMeasure,
    family: &BallFamily,
    growth_limit: f64,
    norm: &NormOptions,
) -> Result<DiscreteMeasure> {
    let growth = m.growth_constant(family)?.constant;
    let op = operator_norm_with(m, 0.0, norm)?.value;
    let by_growth = growth_limit / growth;
    let scale = if op > 0.0 { by_growth.min(1.0 / op) } else { by_growth };
    m.rescale(scale)
}

/// `score(∪ E_j) / Σ_j score(E_j)`, all scores from the same sampling.
pub fn superadditivity_ratio(
    config: &LineConfiguration,
    resolution: f64,
    cap: u64,
    opts: &ScoreOptions,
) -> Result<SuperadditivityRatio> {
    let pieces = config.samples(resolution, cap)?;
    let union = config.union_sample(resolution, cap)?;
    let union_score = capacity_score_of(&union, opts)?.lower;
    let piece_scores = pieces
        .iter()
        .map(|p| capacity_score_of(p, opts).map(|e| e.lower))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = piece_scores.iter().sum();
    Ok(SuperadditivityRatio {
        union_score,
        piece_scores,
        ratio: union_score / sum,
        atoms: union.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperadditivityRatio {
    pub union_score: f64,
    pub piece_scores: Vec<f64>,
    pub ratio: f64,
    pub atoms: usize,
}
