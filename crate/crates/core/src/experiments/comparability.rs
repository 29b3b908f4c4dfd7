use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{case, elapsed, CheckKind, ExperimentReport, PlotData, RunContext};
use crate::cauchy::{operator_norm_with, NormOptions};
use crate::constructions::{garnett_measure, sample_segment};
use crate::error::{Error, Result};
use crate::geometry::{check_separation, Disc, PlanePoint, Segment, Square};
use crate::measures::{sum, DiscreteMeasure};

/// Geometry carrying σ inside each disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaGeometry {
    /// Uniform measure on a horizontal diameter segment.
    #[default]
    Segment,
    /// The same Garnett set as ν.
    Garnett,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComparabilityParams {
    pub discs: usize,
    pub radius: f64,
    /// Boundary gap between neighbouring discs, in radii. Doubled discs are
    /// disjoint when it exceeds 2.
    pub gap: f64,
    pub garnett_depth: u32,
    pub sigma: SigmaGeometry,
    pub segment_fill: f64,
    /// Segment cell counts; the ratio should not move under refinement.
    pub refinements: Vec<usize>,
    pub c1: f64,
    pub c2: f64,
    pub ensemble: usize,
    pub ceiling: f64,
    /// Gaps below the separation threshold, run for diagnosis only.
    pub tangency_gaps: Vec<f64>,
}

impl Default for ComparabilityParams {
    fn default() -> Self {
        ComparabilityParams {
            discs: 8,
            radius: 1.0,
            gap: 3.0,
            garnett_depth: 3,
            sigma: SigmaGeometry::Segment,
            segment_fill: 0.5,
            refinements: vec![32, 64, 128],
            c1: 0.5,
            c2: 2.0,
            ensemble: 10,
            ceiling: 10.0,
            tangency_gaps: vec![1.5, 1.0, 0.5, 0.1, 0.0],
        }
    }
}

fn discs_on_line(p: &ComparabilityParams, gap: f64) -> Result<Vec<Disc>> {
    (0..p.discs)
        .map(|j| Disc::new(PlanePoint::new(j as f64 * (2.0 + gap) * p.radius, 0.0), p.radius))
        .collect()
}

/// ν: Garnett sets in the inscribed squares, scaled to operator norm one.
fn build_nu(discs: &[Disc], depth: u32, cap: u64, opts: &NormOptions) -> Result<Vec<DiscreteMeasure>> {
    let parts = discs
        .iter()
        .map(|d| garnett_measure(&Square::inscribed_in(d), depth, cap))
        .collect::<Result<Vec<_>>>()?;
    let total = sum(parts.iter());
    let n = operator_norm_with(&total, 0.0, opts)?.value;
    parts.iter().map(|m| m.rescale(1.0 / n)).collect()
}

fn build_sigma(
    discs: &[Disc],
    nu: &[DiscreteMeasure],
    factors: &[f64],
    cells: usize,
    p: &ComparabilityParams,
) -> Result<DiscreteMeasure> {
    let parts = discs
        .iter()
        .zip(nu)
        .zip(factors)
        .map(|((d, v), c)| {
            let target = c * v.total_mass();
            let base = match p.sigma {
                SigmaGeometry::Segment => {
                    let s = Segment::centered(d.center, 2.0 * p.segment_fill * d.radius, 0.0)?;
                    sample_segment(&s, s.length() / cells as f64, false)?
                }
                SigmaGeometry::Garnett => v.clone(),
            };
            base.rescale(target / base.total_mass())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sum(parts.iter()))
}

pub fn run_comparability(params: &ComparabilityParams, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    let p = params;
    if !(p.c1 > 0.0 && p.c1 <= p.c2) {
        return Err(Error::InvalidConfiguration(format!("mass bounds need 0 < c1 ≤ c2, got {} and {}", p.c1, p.c2)));
    }
    if p.discs == 0 || p.refinements.is_empty() || p.ensemble == 0 {
        return Err(Error::InvalidConfiguration("need discs, refinements and ensemble members".into()));
    }
    if !(p.radius > 0.0 && p.segment_fill > 0.0 && p.segment_fill <= 1.0 && p.ceiling > 0.0) {
        return Err(Error::InvalidConfiguration("radius, fill and ceiling out of range".into()));
    }
    let discs = discs_on_line(p, p.gap)?;
    if !check_separation(&discs, 2.0) {
        return Err(Error::InvalidConfiguration(format!("doubled discs intersect at gap {}", p.gap)));
    }
    let mut report = ExperimentReport::new("comparability", ctx.seed, serde_json::to_value(params).unwrap());
    let opts = NormOptions {
        tol: 1e-9,
        ..ctx.score.norm
    };
    let nu = build_nu(&discs, p.garnett_depth, ctx.max_atoms, &opts)?;
    let nu_norm = operator_norm_with(&sum(nu.iter()), 0.0, &opts)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut max_ratio = 0.0f64;
    let mut refinement_spread = 0.0f64;
    let mut plot = Vec::new();
    for e in 0..p.ensemble {
        let factors: Vec<f64> = (0..p.discs).map(|_| rng.gen_range(p.c1..=p.c2)).collect();
        let mut ratios = Vec::new();
        for &cells in &p.refinements {
            let sigma = build_sigma(&discs, &nu, &factors, cells, p)?;
            let ratio = operator_norm_with(&sigma, 0.0, &opts)?.value / nu_norm;
            max_ratio = max_ratio.max(ratio);
            ratios.push(ratio);
            plot.push(vec![e as f64, cells as f64, ratio]);
            report.cases.push(case![
                "kind" => "ensemble",
                "member" => e,
                "cells" => cells,
                "gap" => p.gap,
                "ratio" => ratio,
            ]);
        }
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        refinement_spread = refinement_spread.max(hi / lo);
    }
    report.stat("nu_norm", nu_norm);
    report.stat("max_ratio", max_ratio);
    report.stat("refinement_spread", refinement_spread);
    report.check(
        "ratio_below_ceiling",
        CheckKind::Trend,
        max_ratio < p.ceiling,
        format!("largest norm ratio {max_ratio} against {}", p.ceiling),
    );
    report.check(
        "ratio_stable_under_refinement",
        CheckKind::Trend,
        refinement_spread <= 1.25,
        format!("largest max/min ratio across refinements {refinement_spread}"),
    );

    let finest = *p.refinements.iter().max().expect("nonempty");
    let unit = vec![1.0; p.discs];
    for &gap in &p.tangency_gaps {
        let outcome = discs_on_line(p, gap).and_then(|discs| {
            let nu = build_nu(&discs, p.garnett_depth, ctx.max_atoms, &opts)?;
            let sigma = build_sigma(&discs, &nu, &unit, finest, p)?;
            Ok(operator_norm_with(&sigma, 0.0, &opts)?.value / operator_norm_with(&sum(nu.iter()), 0.0, &opts)?.value)
        });
        match outcome {
            Ok(ratio) => report.cases.push(case!["kind" => "tangency", "cells" => finest, "gap" => gap, "ratio" => ratio]),
            Err(e) => report.cases.push(case!["kind" => "tangency", "gap" => gap, "skipped" => e.to_string()]),
        }
    }
    report.plots.push(PlotData {
        name: "norm_ratio".into(),
        columns: vec!["member".into(), "cells".into(), "ratio".into()],
        rows: plot,
    });
    report.runtime_seconds = elapsed(start);
    Ok(report)
}
