//! Finite atomic measures on the plane.
//!
//! A [`DiscreteMeasure`] is a list of weighted point masses standing in for
//! a compactly supported positive Borel measure. Atoms within one measure
//! are kept distinct: constructing or summing measures merges coincident
//! positions by adding their weights.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Disc, PlanePoint, Square, TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: PlanePoint,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Closed region used by [`DiscreteMeasure::restrict`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Disc(Disc),
    Square(Square),
}

impl Region {
    pub fn contains(&self, p: PlanePoint) -> bool {
        match self {
            Region::Disc(d) => d.contains_point(p),
            Region::Square(s) => s.contains_point(p),
        }
    }
}

impl From<Disc> for Region {
    fn from(d: Disc) -> Self {
        Region::Disc(d)
    }
}

impl From<Square> for Region {
    fn from(s: Square) -> Self {
        Region::Square(s)
    }
}

/// Which balls the growth constant is taken over.
#[derive(Debug, Clone, PartialEq)]
pub enum BallFamily {
    /// Balls centred at every atom with radii `floor·2^k`, from the minimal
    /// atom gap up to the first radius covering the support's bounding-box
    /// diagonal. A single atom gets the one radius `1`.
    AtomLadder,
    /// Atom-centred balls with a caller-chosen ladder floor.
    AtomLadderFrom { floor: f64 },
    Explicit(Vec<Disc>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub constant: f64,
    pub witness_ball: Disc,
}

/// Fixed-order Neumaier summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn key(p: PlanePoint) -> (u64, u64) {
    // -0.0 and 0.0 are the same position
    ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

impl DiscreteMeasure {
    pub fn empty() -> Self {
        DiscreteMeasure::default()
    }

    /// Builds a measure, merging coincident atoms (first occurrence keeps
    /// its slot).
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let mut out: Vec<Atom> = Vec::new();
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        for a in atoms {
            if !a.position.is_finite() {
                return Err(invalid("atom position must be finite"));
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(invalid(format!("atom weight must be positive and finite, got {}", a.weight)));
            }
            match index.get(&key(a.position)) {
                Some(&i) => out[i].weight += a.weight,
                None => {
                    index.insert(key(a.position), out.len());
                    out.push(a);
                }
            }
        }
        Ok(DiscreteMeasure { atoms: out, label: None })
    }

    pub fn from_points(points: &[PlanePoint], weight: f64) -> Result<Self> {
        Self::new(points.iter().map(|&position| Atom { position, weight }))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<PlanePoint> {
        self.atoms.iter().map(|a| a.position).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight))
    }

    pub fn restrict(&self, region: impl Into<Region>) -> DiscreteMeasure {
        let region = region.into();
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .copied()
                .filter(|a| region.contains(a.position))
                .collect(),
            label: self.label.clone(),
        }
    }

    pub fn mass_in(&self, region: impl Into<Region>) -> f64 {
        let region = region.into();
        compensated_sum(
            self.atoms
                .iter()
                .filter(|a| region.contains(a.position))
                .map(|a| a.weight),
        )
    }

    pub fn rescale(&self, factor: f64) -> Result<DiscreteMeasure> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid(format!("rescale factor must be positive, got {factor}")));
        }
        Ok(self.map_weights(|_, w| w * factor))
    }

    /// Applies `f(index, weight)` to every weight; callers keep weights positive.
    pub(crate) fn map_weights(&self, mut f: impl FnMut(usize, f64) -> f64) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| Atom {
                    position: a.position,
                    weight: f(i, a.weight),
                })
                .collect(),
            label: self.label.clone(),
        }
    }

    /// Applies a rigid motion (rotation about the origin, then translation).
    pub fn rigid_motion(&self, angle: f64, shift: PlanePoint) -> Result<DiscreteMeasure> {
        Self::new(self.atoms.iter().map(|a| Atom {
            position: a.position.rotate(angle).add(shift),
            weight: a.weight,
        }))
    }

    /// Dilation of positions about the origin; weights unchanged.
    pub fn dilate(&self, factor: f64) -> Result<DiscreteMeasure> {
        Self::new(self.atoms.iter().map(|a| Atom {
            position: a.position.scale(factor),
            weight: a.weight,
        }))
    }

    /// Bounding-box diagonal of the support (0 for fewer than two atoms).
    pub fn bbox_diagonal(&self) -> f64 {
        if self.atoms.len() < 2 {
            return 0.0;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for a in &self.atoms {
            x0 = x0.min(a.position.x);
            y0 = y0.min(a.position.y);
            x1 = x1.max(a.position.x);
            y1 = y1.max(a.position.y);
        }
        (x1 - x0).hypot(y1 - y0)
    }

    /// Minimal distance between two distinct atoms (`None` below two atoms).
    pub fn min_gap(&self) -> Option<f64> {
        min_gap(&self.positions())
    }

    pub fn growth_constant(&self, family: &BallFamily) -> Result<GrowthReport> {
        match family {
            BallFamily::Explicit(balls) => {
                if balls.is_empty() {
                    return Err(invalid("growth constant needs a non-empty ball family"));
                }
                let mut best = GrowthReport {
                    constant: f64::NEG_INFINITY,
                    witness_ball: balls[0],
                };
                for b in balls {
                    let ratio = self.mass_in(*b) / b.radius;
                    if ratio > best.constant {
                        best = GrowthReport {
                            constant: ratio,
                            witness_ball: *b,
                        };
                    }
                }
                Ok(best)
            }
            _ => {
                if self.is_empty() {
                    return Err(invalid("growth constant of the empty measure over an atom-centred family"));
                }
                let profile = GrowthProfile::compute(self, family);
                Ok(profile.sup())
            }
        }
    }

    /// Caps weights so every ball of the atom ladder carries mass at most
    /// `limit · radius`: each atom is divided by the largest overload factor
    /// among the ladder balls containing it.
    pub fn cap_growth(&self, family: &BallFamily, limit: f64) -> Result<DiscreteMeasure> {
        if matches!(family, BallFamily::Explicit(_)) {
            return Err(invalid("growth capping needs an atom-centred ladder"));
        }
        if self.is_empty() {
            return Ok(self.clone());
        }
        let profile = GrowthProfile::compute(self, family);
        let n = self.atoms.len();
        let levels = profile.radii.len();
        let mut factor = vec![1.0f64; n];
        let mut suffix = vec![0.0f64; levels];
        for i in 0..n {
            let row = &profile.masses[i * levels..(i + 1) * levels];
            let mut running = 0.0f64;
            for k in (0..levels).rev() {
                running = running.max(row[k] / (limit * profile.radii[k]));
                suffix[k] = running;
            }
            let zi = self.atoms[i].position;
            for (j, a) in self.atoms.iter().enumerate() {
                if let Some(k) = profile.level_of(zi.dist(a.position)) {
                    if suffix[k] > factor[j] {
                        factor[j] = suffix[k];
                    }
                }
            }
        }
        Ok(self.map_weights(|i, w| w / factor[i]))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["x", "y", "weight"])?;
        for a in &self.atoms {
            w.write_record([a.position.x.to_string(), a.position.y.to_string(), a.weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<DiscreteMeasure> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut atoms = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| invalid(format!("measure csv: {e}")))?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| invalid("measure csv: missing column"))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("measure csv: {e}")))
            };
            atoms.push(Atom {
                position: PlanePoint::new(field(0)?, field(1)?),
                weight: field(2)?,
            });
        }
        DiscreteMeasure::new(atoms)
    }
}

/// Sum of measures; coincident atoms are merged.
pub fn sum<'a>(measures: impl IntoIterator<Item = &'a DiscreteMeasure>) -> DiscreteMeasure {
    let atoms: Vec<Atom> = measures.into_iter().flat_map(|m| m.atoms.iter().copied()).collect();
    // every input atom already satisfies the weight/position invariants
    DiscreteMeasure::new(atoms).expect("summands are valid measures")
}

/// Smallest pairwise distance among distinct points, by an x-sorted sweep.
pub fn min_gap(points: &[PlanePoint]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut best = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            if sorted[j].x - sorted[i].x >= best {
                break;
            }
            let d = sorted[i].dist(sorted[j]);
            if d > 0.0 && d < best {
                best = d;
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Masses of all atom-centred ladder balls.
pub(crate) struct GrowthProfile {
    pub radii: Vec<f64>,
    /// Row-major `[center][level]`: mass of the closed ball.
    pub masses: Vec<f64>,
    centers: Vec<PlanePoint>,
}

impl GrowthProfile {
    pub fn ladder(m: &DiscreteMeasure, family: &BallFamily) -> Vec<f64> {
        let floor = match family {
            BallFamily::AtomLadderFrom { floor } => Some(*floor),
            _ => m.min_gap(),
        };
        let Some(floor) = floor else {
            return vec![1.0];
        };
        let top = m.bbox_diagonal().max(floor);
        let mut radii = vec![floor];
        while *radii.last().unwrap() < top * (1.0 - 1e-12) {
            let next = radii.last().unwrap() * 2.0;
            radii.push(next);
        }
        radii
    }

    pub fn compute(m: &DiscreteMeasure, family: &BallFamily) -> Self {
        let radii = Self::ladder(m, family);
        let levels = radii.len();
        let n = m.len();
        let mut masses = vec![0.0f64; n * levels];
        let mut profile = GrowthProfile {
            radii,
            masses: Vec::new(),
            centers: m.positions(),
        };
        let mut bins = vec![0.0f64; levels];
        for i in 0..n {
            bins.iter_mut().for_each(|b| *b = 0.0);
            let zi = profile.centers[i];
            for a in m.atoms() {
                if let Some(k) = profile.level_of(zi.dist(a.position)) {
                    bins[k] += a.weight;
                }
            }
            let mut acc = 0.0;
            for k in 0..levels {
                acc += bins[k];
                masses[i * levels + k] = acc;
            }
        }
        profile.masses = masses;
        profile
    }

    /// Smallest ladder index whose closed ball contains distance `d`.
    pub fn level_of(&self, d: f64) -> Option<usize> {
        let floor = self.radii[0];
        let mut k = if d <= floor {
            0
        } else {
            ((d / floor).log2().ceil() as usize).saturating_sub(1)
        };
        while k < self.radii.len() && d > self.radii[k] + TOL {
            k += 1;
        }
        while k > 0 && d <= self.radii[k - 1] + TOL {
            k -= 1;
        }
        (k < self.radii.len()).then_some(k)
    }

    pub fn sup(&self) -> GrowthReport {
        let levels = self.radii.len();
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
        for (i, _) in self.centers.iter().enumerate() {
            for k in 0..levels {
                let ratio = self.masses[i * levels + k] / self.radii[k];
                if ratio > best.0 {
                    best = (ratio, i, k);
                }
            }
        }
        GrowthReport {
            constant: best.0,
            witness_ball: Disc {
                center: self.centers[best.1],
                radius: self.radii[best.2],
            },
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        invalid(format!("csv: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(x: f64, y: f64, w: f64) -> Atom {
        Atom {
            position: PlanePoint::new(x, y),
            weight: w,
        }
    }

    pub(crate) fn segment_measure(n: usize) -> DiscreteMeasure {
        let h = 1.0 / n as f64;
        DiscreteMeasure::new((0..n).map(|i| atom((i as f64 + 0.5) * h, 0.0, h))).unwrap()
    }

    #[test]
    fn merges_coincident_atoms() {
        let m = DiscreteMeasure::new([atom(0.0, 0.0, 1.0), atom(1.0, 0.0, 2.0), atom(-0.0, 0.0, 0.5)]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.atoms()[0].weight, 1.5);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(DiscreteMeasure::new([atom(0.0, 0.0, 0.0)]).is_err());
        assert!(DiscreteMeasure::new([atom(0.0, 0.0, f64::NAN)]).is_err());
        assert!(DiscreteMeasure::new([atom(f64::INFINITY, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn total_mass_and_sum() {
        assert_eq!(DiscreteMeasure::empty().total_mass(), 0.0);
        let a = DiscreteMeasure::new([atom(0.0, 0.0, 1.0)]).unwrap();
        let b = DiscreteMeasure::new([atom(0.0, 0.0, 2.0), atom(3.0, 0.0, 0.25)]).unwrap();
        let s = sum([&a, &b]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.atoms()[0].weight, 3.0);
        assert_eq!(s.total_mass(), 3.25);
        assert_eq!(sum([&a, &DiscreteMeasure::empty()]), a);
    }

    #[test]
    fn restriction_closed_regions() {
        let m = segment_measure(10);
        let all = Square::new(PlanePoint::new(-1.0, -1.0), 3.0).unwrap();
        assert_eq!(m.restrict(all), m);
        let half = Square::new(PlanePoint::new(0.0, -0.5), 0.5).unwrap();
        assert_eq!(m.restrict(half).len(), 5);
        let d = Disc::new(PlanePoint::new(0.05, 0.0), 0.1).unwrap();
        assert_eq!(m.restrict(d).len(), 2);
        assert!(m.restrict(Square::new(PlanePoint::new(5.0, 5.0), 1.0).unwrap()).is_empty());
    }

    #[test]
    fn growth_single_atom_uses_unit_floor() {
        let m = DiscreteMeasure::new([atom(0.3, 0.3, 0.7)]).unwrap();
        let g = m.growth_constant(&BallFamily::AtomLadder).unwrap();
        assert_eq!(g.constant, 0.7);
        assert_eq!(g.witness_ball.radius, 1.0);
        let g = m.growth_constant(&BallFamily::AtomLadderFrom { floor: 0.01 }).unwrap();
        assert!((g.constant - 70.0).abs() < 1e-9);
    }

    #[test]
    fn growth_of_uniform_segment_is_between_one_and_three() {
        for n in [50, 200, 1000] {
            let g = segment_measure(n).growth_constant(&BallFamily::AtomLadder).unwrap();
            assert!(g.constant >= 1.0 && g.constant <= 3.0 + 1e-9, "n={n}: {}", g.constant);
            // brute-force oracle over the same family
            let ladder = GrowthProfile::ladder(&segment_measure(n), &BallFamily::AtomLadder);
            let balls: Vec<Disc> = segment_measure(n)
                .positions()
                .iter()
                .flat_map(|&c| ladder.iter().map(move |&r| Disc { center: c, radius: r }))
                .collect();
            let brute = segment_measure(n).growth_constant(&BallFamily::Explicit(balls)).unwrap();
            assert!((brute.constant - g.constant).abs() < 1e-9 * g.constant);
        }
    }

    #[test]
    fn cap_growth_enforces_limit() {
        let m = segment_measure(100).rescale(5.0).unwrap();
        let capped = m.cap_growth(&BallFamily::AtomLadder, 1.0).unwrap();
        let g = capped.growth_constant(&BallFamily::AtomLadder).unwrap();
        assert!(g.constant <= 1.0 + 1e-12, "{}", g.constant);
        for (a, b) in m.atoms().iter().zip(capped.atoms()) {
            assert!(b.weight <= a.weight);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let m = DiscreteMeasure::new([atom(0.1, -2.5, 1e-7), atom(1.0 / 3.0, 0.0, 0.25)]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,weight\n"));
        assert_eq!(DiscreteMeasure::read_csv(&buf[..]).unwrap(), m);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn measure() -> impl Strategy<Value = DiscreteMeasure> {
            proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.001f64..3.0), 1..40).prop_map(|v| {
                DiscreteMeasure::new(v.into_iter().map(|(x, y, w)| atom(x, y, w))).unwrap()
            })
        }

        proptest! {
            #[test]
            fn sum_is_additive(a in measure(), b in measure()) {
                let s = sum([&a, &b]);
                let expected = a.total_mass() + b.total_mass();
                prop_assert!((s.total_mass() - expected).abs() <= 1e-12 * expected);
            }

            #[test]
            fn restrict_idempotent_and_monotone(m in measure(), x in -5.0f64..5.0, y in -5.0f64..5.0, r in 0.1f64..5.0, grow in 0.0f64..3.0) {
                let d = Disc::new(PlanePoint::new(x, y), r).unwrap();
                let once = m.restrict(d);
                prop_assert_eq!(once.restrict(d), once.clone());
                let bigger = d.dilate(1.0 + grow);
                prop_assert!(once.total_mass() <= m.restrict(bigger).total_mass());
            }

            #[test]
            fn growth_scales_linearly(m in measure(), c in 0.01f64..100.0) {
                let g = m.growth_constant(&BallFamily::AtomLadder).unwrap().constant;
                let gc = m.rescale(c).unwrap().growth_constant(&BallFamily::AtomLadder).unwrap().constant;
                prop_assert!((gc - c * g).abs() <= 1e-12 * c * g);
            }
        }
    }
}
