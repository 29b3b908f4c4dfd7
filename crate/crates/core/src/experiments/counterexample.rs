use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{case, elapsed, loglog_slope, CheckKind, ExperimentReport, PlotData, RunContext};
use crate::cauchy::{operator_norm_with, NormOptions};
use crate::constructions::{counterexample_measure, garnett_measure, DepthSchedule};
use crate::error::{Error, Result};
use crate::geometry::{dyadic_squares, PlanePoint, Square};
use crate::measures::DiscreteMeasure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleParams {
    pub k_max: u32,
    pub depth_schedule: DepthSchedule,
    /// Deepest dyadic generation scanned; defaults to `k_max + 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_generation: Option<u32>,
    /// Squares of random position and side in `[2^{-k-1}, 2^{-k}]` per
    /// generation, checked against the sixteen-fold covering bound.
    pub random_squares: usize,
    pub norm_depths: Vec<u32>,
    pub norm_tol: f64,
    /// Regression band for the fitted growth exponent of the norms.
    pub exponent_band: [f64; 2],
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams {
            k_max: 4,
            depth_schedule: DepthSchedule::Decreasing { top: 4 },
            max_generation: None,
            random_squares: 64,
            norm_depths: (1..=6).collect(),
            norm_tol: 1e-8,
            exponent_band: [0.35, 0.65],
        }
    }
}

/// `sup μ(Q) / side(Q)` over the given squares, with the maximizing square.
fn density_sup<'a>(m: &DiscreteMeasure, squares: impl IntoIterator<Item = &'a Square>) -> (f64, Option<Square>) {
    let mut best = (0.0, None);
    for q in squares {
        let v = m.mass_in(*q) / q.side;
        if v > best.0 {
            best = (v, Some(*q));
        }
    }
    best
}

/// Generation-`k` squares translated by half a side in both directions,
/// covering the unit square.
fn shifted_grid(k: u32) -> Vec<Square> {
    let side = 0.5f64.powi(k as i32);
    let n = 1i64 << k;
    let mut out = Vec::new();
    for row in -1..n {
        for col in -1..n {
            let ll = PlanePoint::new((col as f64 + 0.5) * side, (row as f64 + 0.5) * side);
            out.push(Square::new(ll, side).expect("positive side"));
        }
    }
    out
}

/// Number of generation-`l` dyadic squares contained in `q`.
fn contained_count(q: &Square, l: u32, cap: u64) -> Result<u64> {
    Ok(dyadic_squares(l, cap)?.iter().filter(|s| q.contains_square(s)).count() as u64)
}

pub fn run_counterexample(params: &CounterexampleParams, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    let p = params;
    let top_gen = p.max_generation.unwrap_or(p.k_max + 2);
    if !(p.norm_tol > 0.0) || p.exponent_band[0] > p.exponent_band[1] {
        return Err(Error::InvalidConfiguration("norm tolerance and exponent band must be sensible".into()));
    }
    let mut report = ExperimentReport::new("counterexample", ctx.seed, serde_json::to_value(params).unwrap());

    // (a) total mass, replayed for every truncation level up to k_max
    let mut dyadic_constants = Vec::new();
    let mut mu = None;
    for k in 0..=p.k_max {
        let m = match counterexample_measure(k, &p.depth_schedule, ctx.max_atoms) {
            Ok(m) => m,
            Err(e @ Error::Resource { .. }) => {
                report.truncated.push(format!("counterexample with K = {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let mass = m.total_mass();
        let expected: f64 = (0..=k).map(|j| 0.5f64.powi(j as i32)).sum();
        let mut sup = 0.0f64;
        for g in 0..=top_gen {
            let squares = dyadic_squares(g, ctx.max_atoms)?;
            sup = sup.max(density_sup(&m, &squares).0);
        }
        dyadic_constants.push(sup);
        report.cases.push(case![
            "kind" => "truncation",
            "k" => k,
            "atoms" => m.len(),
            "total_mass" => mass,
            "expected_mass" => expected,
            "dyadic_constant" => sup,
        ]);
        report.check(
            format!("total_mass_k{k}"),
            CheckKind::Theorem,
            mass == expected,
            format!("mass {mass}, expected {expected}"),
        );
        mu = Some(m);
    }

    // (b) dyadic and general squares for the full measure
    if let Some(mu) = &mu {
        let mut dyadic_sup = 0.0f64;
        let mut worst_gen_ratio = 0.0f64;
        for g in 0..=top_gen {
            let squares = dyadic_squares(g, ctx.max_atoms)?;
            let (sup, _) = density_sup(mu, &squares);
            dyadic_sup = dyadic_sup.max(sup);
            // μ(Q) ≤ 2 · side holds for every dyadic square
            worst_gen_ratio = worst_gen_ratio.max(sup / 2.0);
            let (shift_sup, _) = density_sup(mu, &shifted_grid(g));
            report.cases.push(case![
                "kind" => "squares",
                "generation" => g,
                "dyadic_sup" => sup,
                "shifted_sup" => shift_sup,
            ]);
        }
        report.stat("dyadic_constant", dyadic_sup);
        report.check(
            "dyadic_mass_bound",
            CheckKind::Theorem,
            worst_gen_ratio <= 1.0,
            format!("max μ(Q)/(2·side) over dyadic squares up to generation {top_gen}: {worst_gen_ratio}"),
        );
        let shifted_sup = (0..=top_gen)
            .map(|g| density_sup(mu, &shifted_grid(g)).0)
            .fold(0.0, f64::max);
        report.stat("shifted_constant", shifted_sup);
        report.check(
            "four_cube_covering",
            CheckKind::Theorem,
            shifted_sup <= 4.0 * dyadic_sup,
            format!("shifted grid sup {shifted_sup} against 4 × {dyadic_sup}"),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut random_sup = 0.0f64;
        for g in 0..=top_gen {
            let hi = 0.5f64.powi(g as i32);
            for _ in 0..p.random_squares {
                let side = rng.gen_range(0.5 * hi..=hi);
                let ll = PlanePoint::new(rng.gen_range(-side..1.0), rng.gen_range(-side..1.0));
                let q = Square::new(ll, side)?;
                random_sup = random_sup.max(mu.mass_in(q) / side);
            }
        }
        report.stat("random_square_constant", random_sup);
        report.check(
            "general_square_bound",
            CheckKind::Theorem,
            random_sup <= 16.0 * dyadic_sup,
            format!("random squares sup {random_sup} against 16 × {dyadic_sup}"),
        );
        let spread = dyadic_constants.iter().cloned().fold(0.0, f64::max)
            / dyadic_constants.iter().cloned().fold(f64::INFINITY, f64::min);
        report.stat("dyadic_constant_spread", spread);
        report.check(
            "dyadic_constant_stable",
            CheckKind::Trend,
            spread.is_finite() && spread <= 2.0,
            format!("max/min dyadic constant over truncations: {spread}"),
        );
    }

    // generation counting inside a sample of dyadic squares
    let mut counting_ok = true;
    for k in 0..=p.k_max.min(3) {
        for q in dyadic_squares(k, ctx.max_atoms)?.iter().step_by(5) {
            for l in k..=(k + 2).min(top_gen) {
                let got = contained_count(q, l, ctx.max_atoms)?;
                counting_ok &= got == 4u64.pow(l - k);
            }
        }
    }
    report.check(
        "generation_counting",
        CheckKind::Theorem,
        counting_ok,
        "generation-l squares inside a generation-k square number 4^(l-k)",
    );

    // (c) norms on Garnett sets of increasing depth
    let opts = NormOptions {
        tol: p.norm_tol,
        ..ctx.score.norm
    };
    let mut depths = Vec::new();
    let mut norms = Vec::new();
    for &m in &p.norm_depths {
        let g = match garnett_measure(&Square::unit(), m, ctx.max_atoms) {
            Ok(g) => g,
            Err(e @ Error::Resource { .. }) => {
                report.truncated.push(format!("garnett depth {m}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let est = operator_norm_with(&g, 0.0, &opts)?;
        report.cases.push(case![
            "kind" => "norm",
            "depth" => m,
            "atoms" => g.len(),
            "norm" => est.value,
            "iterations" => est.iterations,
        ]);
        depths.push(m as f64);
        norms.push(est.value);
    }
    if norms.len() >= 2 {
        let increasing = norms.windows(2).all(|w| w[1] > w[0]);
        report.check(
            "norms_strictly_increase",
            CheckKind::Theorem,
            increasing,
            format!("norms {norms:?}"),
        );
        if let Some(slope) = loglog_slope(&depths, &norms) {
            report.stat("norm_growth_exponent", slope);
            report.check(
                "exponent_in_band",
                CheckKind::Trend,
                slope >= p.exponent_band[0] && slope <= p.exponent_band[1],
                format!("fitted exponent {slope} against {:?}", p.exponent_band),
            );
        }
    }
    report.plots.push(PlotData {
        name: "garnett_norms".into(),
        columns: vec!["depth".into(), "norm".into()],
        rows: depths.iter().zip(&norms).map(|(d, n)| vec![*d, *n]).collect(),
    });
    report.runtime_seconds = elapsed(start);
    Ok(report)
}
