use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{case, elapsed, CheckKind, ExperimentReport, PlotData, RunContext};
use crate::capacity::capacity_score_of;
use crate::constructions::{cross_family, default_boundary_count, sample_cross, CrossFamily};
use crate::error::{Error, Result};
use crate::geometry::{Cross, Disc, PlanePoint};
use crate::measures::{sum, DiscreteMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossLemmaParams {
    pub parent_radius: f64,
    /// Target capacity of each family as a multiple of the parent radius.
    pub capacity_fill: f64,
    /// Boundary cross count; the default rule when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_crosses: Option<usize>,
    /// Ball grid for the containment claim: centres on a square lattice.
    pub grid_extent: f64,
    pub grid_step: f64,
    /// Smallest and largest ball radius, in parent radii, with `radius_steps`
    /// geometric steps between.
    pub radius_range: [f64; 2],
    pub radius_steps: usize,
    /// Half-plane cuts across a single cross.
    pub cuts: usize,
    pub cells_per_arm: usize,
    /// Parent discs on a line for the union statement.
    pub families: usize,
    pub family_spacing: f64,
    /// Coarser ball grid used for the score ratios.
    pub score_grid_step: f64,
}

impl Default for CrossLemmaParams {
    fn default() -> Self {
        CrossLemmaParams {
            parent_radius: 1.0,
            capacity_fill: 0.5,
            boundary_crosses: None,
            grid_extent: 12.0,
            grid_step: 0.25,
            radius_range: [0.05, 24.0],
            radius_steps: 24,
            cuts: 50,
            cells_per_arm: 8,
            families: 4,
            family_spacing: 25.0,
            score_grid_step: 0.5,
        }
    }
}

fn radii(p: &CrossLemmaParams) -> Vec<f64> {
    let [lo, hi] = p.radius_range;
    let n = p.radius_steps.max(1);
    (0..=n)
        .map(|k| p.parent_radius * lo * (hi / lo).powf(k as f64 / n as f64))
        .collect()
}

fn lattice(center: PlanePoint, extent: f64, step: f64) -> Vec<PlanePoint> {
    let k = (extent / step).round() as i64;
    let mut out = Vec::new();
    for i in -k..=k {
        for j in -k..=k {
            out.push(center.add(PlanePoint::new(i as f64 * step, j as f64 * step)));
        }
    }
    out
}

fn sample_family(f: &CrossFamily, cells: usize) -> Result<DiscreteMeasure> {
    let parts = f
        .crosses()
        .map(|c| sample_cross(c, c.half_arm / cells as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum(parts.iter()))
}

fn restrict_disc(m: &DiscreteMeasure, b: &Disc) -> DiscreteMeasure {
    m.restrict(*b)
}

struct Band {
    lo: f64,
    hi: f64,
    count: usize,
}

impl Band {
    fn new() -> Self {
        Band {
            lo: f64::INFINITY,
            hi: 0.0,
            count: 0,
        }
    }
    fn add(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
        self.count += 1;
    }
}

pub fn run_cross_lemmas(params: &CrossLemmaParams, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    let p = params;
    if !(p.parent_radius > 0.0 && p.grid_step > 0.0 && p.score_grid_step > 0.0 && p.grid_extent > 0.0) {
        return Err(Error::InvalidConfiguration("radii, extents and steps must be positive".into()));
    }
    if !(p.radius_range[0] > 0.0 && p.radius_range[0] <= p.radius_range[1]) || p.cuts == 0 || p.cells_per_arm == 0 {
        return Err(Error::InvalidConfiguration("radius range, cuts and cells must be positive".into()));
    }
    if p.families == 0 || !(p.family_spacing > 4.0) {
        return Err(Error::InvalidConfiguration("need families spaced more than four radii apart".into()));
    }
    let n_boundary = p.boundary_crosses.unwrap_or_else(default_boundary_count);
    let mut report = ExperimentReport::new("cross_lemmas", ctx.seed, serde_json::to_value(params).unwrap());
    report.stat("boundary_crosses", n_boundary);
    let r = p.parent_radius;
    let parent = Disc::new(PlanePoint::ORIGIN, r)?;
    let family = cross_family(&parent, p.capacity_fill * r, n_boundary)?;
    let ball_radii = radii(p);

    // (a) containment claim, purely geometric
    let centers = lattice(PlanePoint::ORIGIN, p.grid_extent * r, p.grid_step * r);
    let (mut applicable, mut holds) = (0usize, 0usize);
    for &c in &centers {
        for &rad in &ball_radii {
            if let Some(ok) = family.proposition(&Disc::new(c, rad)?) {
                applicable += 1;
                holds += ok as usize;
            }
        }
    }
    report.cases.push(case![
        "kind" => "proposition",
        "balls" => centers.len() * ball_radii.len(),
        "applicable" => applicable,
        "holds" => holds,
    ]);
    report.check(
        "cross_inside_every_applicable_ball",
        CheckKind::Theorem,
        applicable > 0 && holds == applicable,
        format!("{holds} of {applicable} applicable balls contain a whole cross"),
    );

    // (b1) one cross cut by half-planes {x ≤ t}
    let cross = Cross::new(PlanePoint::ORIGIN, 1.0)?;
    let h = cross.half_arm;
    let sample = sample_cross(&cross, h / p.cells_per_arm as f64)?;
    let mut band = Band::new();
    let mut plot = Vec::new();
    for k in 0..p.cuts {
        let t = -h + 2.0 * h * (k as f64 + 1.0) / p.cuts as f64;
        let kept = DiscreteMeasure::new(sample.atoms().iter().copied().filter(|a| a.position.x <= t))?;
        let length = (t + h).clamp(0.0, 2.0 * h) + if t >= 0.0 { 2.0 * h } else { 0.0 };
        if kept.is_empty() {
            continue;
        }
        let ratio = capacity_score_of(&kept, &ctx.score)?.lower / length;
        band.add(ratio);
        plot.push(vec![t, ratio]);
        report.cases.push(case!["kind" => "half_plane", "cut" => t, "length" => length, "ratio" => ratio]);
    }
    report.stat("half_plane_band_low", band.lo);
    report.stat("half_plane_band_high", band.hi);
    report.check(
        "half_plane_band_positive",
        CheckKind::Trend,
        band.count > 0 && band.lo > 0.0 && band.hi / band.lo <= 10.0,
        format!("score over length in [{}, {}]", band.lo, band.hi),
    );
    report.plots.push(PlotData {
        name: "half_plane_ratio".into(),
        columns: vec!["cut".into(), "ratio".into()],
        rows: plot,
    });

    // scores memoized on the retained atom set
    let mut cache: HashMap<Vec<(u64, u64)>, f64> = HashMap::new();
    let mut score = |m: &DiscreteMeasure| -> Result<f64> {
        let key: Vec<(u64, u64)> = m.atoms().iter().map(|a| (a.position.x.to_bits(), a.position.y.to_bits())).collect();
        if let Some(v) = cache.get(&key) {
            return Ok(*v);
        }
        let v = capacity_score_of(m, &ctx.score)?.lower;
        cache.insert(key, v);
        Ok(v)
    };

    // (b2) balls containing at least one cross of a family
    let l = sample_family(&family, p.cells_per_arm)?;
    let whole = score(&l)?;
    let mut band = Band::new();
    let mut full = Band::new();
    for c in lattice(PlanePoint::ORIGIN, 3.0 * r, p.score_grid_step * r) {
        for &rad in &ball_radii {
            let b = Disc::new(c, rad)?;
            if !family.has_cross_inside(&b) {
                continue;
            }
            let part = restrict_disc(&l, &b);
            let ratio = score(&part)? / whole;
            band.add(ratio);
            if part.len() == l.len() {
                full.add(ratio);
            }
        }
    }
    report.cases.push(case![
        "kind" => "cross_inside",
        "balls" => band.count,
        "band_low" => band.lo,
        "band_high" => band.hi,
    ]);
    report.stat("cross_inside_band_low", band.lo);
    report.stat("cross_inside_band_high", band.hi);
    report.check(
        "cross_inside_band_positive",
        CheckKind::Trend,
        band.count > 0 && band.lo > 0.0,
        format!("score ratio in [{}, {}] over {} balls", band.lo, band.hi, band.count),
    );
    if full.count > 0 {
        report.check(
            "whole_family_ratio_is_one",
            CheckKind::Theorem,
            full.lo == 1.0 && full.hi == 1.0,
            format!("{} balls contain the whole family", full.count),
        );
    }

    // (b3) unions of the families whose parent discs lie inside the ball
    let parents: Vec<Disc> = (0..p.families)
        .map(|j| Disc::new(PlanePoint::new(j as f64 * p.family_spacing * r, 0.0), r))
        .collect::<Result<_>>()?;
    let samples: Vec<DiscreteMeasure> = parents
        .iter()
        .map(|d| cross_family(d, p.capacity_fill * r, n_boundary).and_then(|f| sample_family(&f, p.cells_per_arm)))
        .collect::<Result<_>>()?;
    let span = (p.families - 1) as f64 * p.family_spacing * r;
    let mut band = Band::new();
    let mut seen = std::collections::BTreeSet::new();
    let step = p.family_spacing * r / 4.0;
    let cxs: Vec<f64> = (0..=((span / step).round() as usize)).map(|k| k as f64 * step).collect();
    for &cx in &cxs {
        for cy in [0.0, 0.5 * r, r] {
            let c = PlanePoint::new(cx, cy);
            for k in 0..=p.radius_steps {
                let rad = r * (1.0 + (span + 4.0) * k as f64 / p.radius_steps.max(1) as f64);
                let b = Disc::new(c, rad)?;
                let inside: Vec<usize> = (0..parents.len()).filter(|&j| b.contains_disc(&parents[j])).collect();
                if inside.is_empty() {
                    continue;
                }
                let union = sum(inside.iter().map(|&j| &samples[j]));
                let cut = restrict_disc(&union, &b);
                let ratio = score(&cut)? / score(&union)?;
                band.add(ratio);
                seen.insert(inside.len());
            }
        }
    }
    report.cases.push(case![
        "kind" => "discs_inside",
        "balls" => band.count,
        "band_low" => band.lo,
        "band_high" => band.hi,
        "max_families_inside" => seen.iter().next_back().copied().unwrap_or(0),
    ]);
    report.stat("discs_inside_band_low", band.lo);
    report.stat("discs_inside_band_high", band.hi);
    report.check(
        "discs_inside_band_positive",
        CheckKind::Trend,
        band.count > 0 && band.lo > 0.0,
        format!("score ratio in [{}, {}] over {} balls", band.lo, band.hi, band.count),
    );
    report.runtime_seconds = elapsed(start);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_run() {
        let p = CrossLemmaParams {
            grid_extent: 12.0,
            grid_step: 1.0,
            radius_steps: 8,
            cuts: 10,
            families: 2,
            ..CrossLemmaParams::default()
        };
        let r = run_cross_lemmas(&p, &RunContext::default()).unwrap();
        assert!(r.theorem_checks_pass(), "{:?}", r.checks);
        assert!(r.checks.iter().all(|c| c.passed), "{:?}", r.checks);
    }
}
