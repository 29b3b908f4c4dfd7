use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{case, elapsed, CheckKind, ExperimentReport, PlotData, RunContext};
use crate::capacity::normalize_measure_on;
use crate::cauchy::{operator_norm_with, NormOptions};
use crate::constructions::{garnett_measure, sample_segment};
use crate::error::{Error, Result};
use crate::geometry::{PlanePoint, Segment, Square};
use crate::measures::{sum, Atom, BallFamily, DiscreteMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoMeasureParams {
    pub trials: usize,
    pub ceiling: f64,
    /// Both measures live on the lattice `2^{-lattice_bits} Z²`, whose step
    /// is also the atom spacing, so atoms of the two measures either
    /// coincide or stay a lattice step apart.
    pub lattice_bits: u32,
    /// Garnett depths are clipped so that the atoms stay on the lattice.
    pub garnett_depths: [u32; 2],
    /// Probability that a generated measure is a Garnett set rather than a
    /// segment.
    pub garnett_probability: f64,
    pub norm_tol: f64,
}

impl Default for TwoMeasureParams {
    fn default() -> Self {
        TwoMeasureParams {
            trials: 100,
            ceiling: 10.0,
            lattice_bits: 8,
            garnett_depths: [1, 3],
            garnett_probability: 0.5,
            norm_tol: 1e-9,
        }
    }
}

fn snap(m: &DiscreteMeasure, step: f64) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(m.atoms().iter().map(|a| Atom {
        position: PlanePoint::new((a.position.x / step).round() * step, (a.position.y / step).round() * step),
        weight: a.weight,
    }))
}

fn generate(rng: &mut ChaCha8Rng, p: &TwoMeasureParams, cap: u64) -> Result<(&'static str, DiscreteMeasure)> {
    let step = 0.5f64.powi(p.lattice_bits as i32);
    if rng.gen_bool(p.garnett_probability) {
        let s = rng.gen_range(1..=2u32);
        let side = 0.5f64.powi(s as i32);
        // atoms sit at odd multiples of side·4^{-depth}/2
        let deepest = p.lattice_bits.saturating_sub(s + 1) / 2;
        let depth = rng.gen_range(p.garnett_depths[0]..=p.garnett_depths[1]).min(deepest);
        let cells = 1u64 << p.lattice_bits;
        let span = cells - (side / step) as u64;
        let ll = PlanePoint::new(rng.gen_range(0..=span) as f64 * step, rng.gen_range(0..=span) as f64 * step);
        Ok(("garnett", garnett_measure(&Square::new(ll, side)?, depth, cap)?))
    } else {
        let a = PlanePoint::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let b = PlanePoint::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let seg = Segment::new(a, b)?;
        // spacing of two lattice steps keeps snapped atoms distinct
        let m = sample_segment(&seg, 2.0 * step, false)?;
        Ok(("segment", snap(&m, step)?))
    }
}

pub fn run_two_measure_sum(params: &TwoMeasureParams, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    let p = params;
    if p.trials == 0 {
        return Err(Error::InvalidConfiguration("two_measure_sum needs at least one trial".into()));
    }
    if !(p.ceiling > 0.0 && (0.0..=1.0).contains(&p.garnett_probability) && p.norm_tol > 0.0) {
        return Err(Error::InvalidConfiguration("ceiling, probability and tolerance out of range".into()));
    }
    if p.garnett_depths[0] > p.garnett_depths[1] || !(2..=20).contains(&p.lattice_bits) {
        return Err(Error::InvalidConfiguration("empty depth range or lattice out of range".into()));
    }
    let mut report = ExperimentReport::new("two_measure_sum", ctx.seed, serde_json::to_value(params).unwrap());
    let opts = NormOptions {
        tol: p.norm_tol,
        ..ctx.score.norm
    };
    let step = 0.5f64.powi(p.lattice_bits as i32);
    let norm = |m: &DiscreteMeasure| operator_norm_with(m, 0.0, &opts).map(|e| e.value);
    // growth is measured from the lattice step up, the finest scale either
    // measure resolves
    let balls = BallFamily::AtomLadderFrom { floor: step };
    let growth = |m: &DiscreteMeasure| m.growth_constant(&balls).map(|g| g.constant);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut max_norm = 0.0f64;
    let mut plot = Vec::new();
    let mut first = None;
    for t in 0..p.trials {
        let outcome = (|| -> Result<_> {
            let (ka, a) = generate(&mut rng, p, ctx.max_atoms)?;
            let (kb, b) = generate(&mut rng, p, ctx.max_atoms)?;
            let a = normalize_measure_on(&a, &balls, 1.0, &opts)?;
            let b = normalize_measure_on(&b, &balls, 1.0, &opts)?;
            Ok((ka, kb, a, b))
        })();
        let (ka, kb, a, b) = match outcome {
            Ok(v) => v,
            Err(e) => {
                report.cases.push(case!["kind" => "trial", "trial" => t, "skipped" => e.to_string()]);
                continue;
            }
        };
        let s = sum([&a, &b]);
        let ns = norm(&s)?;
        max_norm = max_norm.max(ns);
        plot.push(vec![t as f64, ns]);
        report.cases.push(case![
            "kind" => "trial",
            "trial" => t,
            "first" => ka,
            "second" => kb,
            "norm_first" => norm(&a)?,
            "norm_second" => norm(&b)?,
            "growth_first" => growth(&a)?,
            "growth_second" => growth(&b)?,
            "atoms" => s.len(),
            "growth_sum" => growth(&s)?,
            "norm_sum" => ns,
        ]);
        if first.is_none() {
            first = Some(a);
        }
    }
    report.stat("max_norm", max_norm);
    report.stat("empirical_c0", max_norm);
    report.check(
        "sum_norm_below_ceiling",
        CheckKind::Theorem,
        max_norm < p.ceiling,
        format!("largest norm of a sum {max_norm} against ceiling {}", p.ceiling),
    );

    if let Some(a) = first {
        // linearity: with ‖C_μ‖ = 1, μ + μ = 2μ on the same atoms
        let tight = NormOptions { tol: 1e-13, ..opts };
        let unit = a.rescale(1.0 / operator_norm_with(&a, 0.0, &tight)?.value)?;
        let single = operator_norm_with(&unit, 0.0, &tight)?.value;
        let doubled = operator_norm_with(&sum([&unit, &unit]), 0.0, &tight)?.value;
        report.cases.push(case!["kind" => "identical", "norm_single" => single, "norm_sum" => doubled]);
        report.stat("identical_norm", doubled);
        report.check(
            "identical_doubles",
            CheckKind::Theorem,
            (doubled - 2.0).abs() <= 1e-9,
            format!("norm of μ + μ for a norm-one μ is {doubled}"),
        );
        let single = norm(&a)?;
        let far = a.rigid_motion(0.0, PlanePoint::new(1e3 * a.bbox_diagonal().max(step), 0.0))?;
        let nf = norm(&sum([&a, &far]))?;
        report.cases.push(case!["kind" => "far", "norm_single" => single, "norm_sum" => nf]);
        report.stat("far_norm", nf);
        report.check(
            "far_supports_decouple",
            CheckKind::Theorem,
            nf <= single.max(norm(&far)?) + 0.01,
            format!("norm of the far-separated sum {nf}"),
        );
    }
    report.plots.push(PlotData {
        name: "sum_norms".into(),
        columns: vec!["trial".into(), "norm_sum".into()],
        rows: plot,
    });
    report.runtime_seconds = elapsed(start);
    Ok(report)
}
