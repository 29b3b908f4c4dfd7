use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{case, elapsed, CheckKind, ExperimentReport, PlotData, RunContext};
use crate::capacity::superadditivity_ratio;
use crate::constructions::{line_configuration, InnerKind, Layout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub layouts: Vec<Layout>,
    pub lambdas: Vec<f64>,
    pub counts: Vec<usize>,
    pub radius: f64,
    /// Radii are drawn from `radius · [1, 1 + spread]`.
    pub radius_spread: f64,
    /// Extra boundary gap beyond what λ-separation requires, in units of the
    /// smaller neighbouring radius.
    pub slack: f64,
    pub inner: InnerKind,
    pub resolution: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            layouts: vec![Layout::Line, Layout::Circle],
            lambdas: vec![2.0],
            counts: vec![2, 4, 8, 16, 32],
            radius: 1.0,
            radius_spread: 0.0,
            slack: 0.25,
            inner: InnerKind::default(),
            resolution: 1.0 / 16.0,
        }
    }
}

fn layout_name(l: Layout) -> &'static str {
    match l {
        Layout::Line => "line",
        Layout::Circle => "circle",
    }
}

pub fn run_superadditivity_sweep(params: &SweepParams, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    if params.counts.is_empty() || params.lambdas.is_empty() || params.layouts.is_empty() {
        return Err(Error::InvalidConfiguration("sweep needs layouts, lambdas and counts".into()));
    }
    if !(params.radius > 0.0 && params.radius_spread >= 0.0 && params.slack >= 0.0 && params.resolution > 0.0) {
        return Err(Error::InvalidConfiguration("radius, spread, slack and resolution must be nonnegative".into()));
    }
    let mut report = ExperimentReport::new("superadditivity_sweep", ctx.seed, serde_json::to_value(params).unwrap());
    for &layout in &params.layouts {
        for &lambda in &params.lambdas {
            let mut floor = f64::INFINITY;
            let mut series = Vec::new();
            for &n in &params.counts {
                let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ ((n as u64) << 32));
                let radii: Vec<f64> = (0..n)
                    .map(|_| params.radius * (1.0 + params.radius_spread * rng.gen::<f64>()))
                    .collect();
                let gaps: Vec<f64> = (0..n)
                    .map(|j| {
                        let (a, b) = (radii[j], radii[(j + 1) % n]);
                        (lambda - 1.0) * (a + b) + params.slack * a.min(b)
                    })
                    .collect();
                let outcome = line_configuration(&radii, &gaps, lambda, params.inner, layout)
                    .and_then(|cfg| superadditivity_ratio(&cfg, params.resolution, ctx.max_atoms, &ctx.score));
                match outcome {
                    Ok(r) => {
                        floor = floor.min(r.ratio);
                        series.push(vec![n as f64, r.ratio]);
                        let sum: f64 = r.piece_scores.iter().sum();
                        report.cases.push(case![
                            "layout" => layout_name(layout),
                            "lambda" => lambda,
                            "n" => n,
                            "atoms" => r.atoms,
                            "union_score" => r.union_score,
                            "sum_scores" => sum,
                            "ratio" => r.ratio,
                        ]);
                    }
                    Err(e @ Error::Resource { .. }) => {
                        report.truncated.push(format!("{} λ={lambda} n={n}: {e}", layout_name(layout)));
                    }
                    Err(e) => {
                        report.cases.push(case![
                            "layout" => layout_name(layout),
                            "lambda" => lambda,
                            "n" => n,
                            "skipped" => e.to_string(),
                        ]);
                    }
                }
            }
            let tag = format!("{}_lambda_{lambda}", layout_name(layout));
            if floor.is_finite() {
                report.stat(format!("min_ratio_{tag}"), floor);
            }
            if let [.., (_, a), (_, b)] = series.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>()[..] {
                report.check(
                    format!("floor_holds_{tag}"),
                    CheckKind::Trend,
                    b >= 0.8 * a,
                    format!("ratio at the two largest counts: {a} then {b}"),
                );
            }
            report.check(
                format!("ratio_positive_{tag}"),
                CheckKind::Trend,
                floor > 0.0 && floor.is_finite(),
                format!("minimum ratio {floor}"),
            );
            report.plots.push(PlotData {
                name: format!("ratio_{tag}"),
                columns: vec!["n".into(), "ratio".into()],
                rows: series,
            });
        }
    }
    if params.lambdas.iter().any(|&l| l < 1.25) {
        report
            .notes
            .push("ratios for λ close to 1 chart the behaviour of merely disjoint discs; nothing is asserted".into());
    }
    report.runtime_seconds = elapsed(start);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_disc_ratio_is_one() {
        let p = SweepParams {
            layouts: vec![Layout::Line],
            counts: vec![1],
            ..SweepParams::default()
        };
        let r = run_superadditivity_sweep(&p, &RunContext::default()).unwrap();
        assert_eq!(r.cases[0]["ratio"], 1.0);
    }

    #[test]
    fn small_sweep_has_positive_floor() {
        let p = SweepParams {
            counts: vec![2, 4, 8],
            lambdas: vec![2.0, 1.05],
            ..SweepParams::default()
        };
        let r = run_superadditivity_sweep(&p, &RunContext::default()).unwrap();
        assert!(r.summary_f64("min_ratio_line_lambda_2").unwrap() > 0.0);
        assert!(r.summary_f64("min_ratio_circle_lambda_1.05").unwrap() > 0.0);
        assert!(!r.notes.is_empty());
    }
}
