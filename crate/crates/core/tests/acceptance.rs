//! Acceptance criteria. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use caplab::capacity::{exact_capacity, ExactShape};
use caplab::cauchy::operator_norm;
use caplab::cli::{self, ExperimentParams, RunConfig};
use caplab::constructions::{DepthSchedule, InnerKind, Layout};
use caplab::curvature::menger_curvature;
use caplab::experiments::*;
use caplab::geometry::{Disc, PlanePoint, Segment};
use caplab::measures::{Atom, DiscreteMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn within(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t <= budget, format!("{:.1}s of {}s", t.as_secs_f64(), budget.as_secs()))
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = PlanePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let r = rng.gen_range(0.01..10.0);
        let d = exact_capacity(ExactShape::Disc(Disc::new(c, r).unwrap()));
        worst = worst.max((d.lower - r).abs()).max((d.upper - r).abs());
        let s = Segment::centered(c, r, rng.gen_range(0.0..3.0)).unwrap();
        let e = exact_capacity(ExactShape::Segment(s));
        worst = worst.max((e.lower - r / 4.0).abs());
    }
    let capacity_ok = worst <= 1e-12;

    let mut norm_err = 0.0f64;
    for _ in 0..100 {
        let w = rng.gen_range(0.01..10.0);
        let a = PlanePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let b = a.polar_offset(rng.gen_range(0.01..10.0), rng.gen_range(0.0..6.3));
        let m = DiscreteMeasure::new([Atom { position: a, weight: w }, Atom { position: b, weight: w }]).unwrap();
        let n = operator_norm(&m, 0.0, 1e-12).unwrap().value;
        let exact = w / a.dist(b);
        norm_err = norm_err.max((n - exact).abs() / exact);
    }
    let norm_ok = norm_err <= 1e-10;

    let mut curv_err = 0.0f64;
    let mut collinear_ok = true;
    for _ in 0..100 {
        let p = PlanePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let t = rng.gen_range(0.0..6.3);
        let (a, b) = (rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0));
        let x = p.polar_offset(a, t);
        let y = p.polar_offset(b, t + std::f64::consts::FRAC_PI_2);
        let c = menger_curvature(p, x, y).unwrap();
        let hyp = (a * a + b * b).sqrt();
        curv_err = curv_err.max((c - 2.0 / hyp).abs() / (2.0 / hyp));
        let k = rng.gen_range(-3i32..=3);
        let q = PlanePoint::new(k as f64, 2.0 * k as f64 + 1.0);
        collinear_ok &= menger_curvature(PlanePoint::new(0.0, 1.0), PlanePoint::new(1.0, 3.0), q).map_or(true, |v| v == 0.0);
    }
    let curv_ok = curv_err <= 1e-12;
    verdict(
        capacity_ok && norm_ok && curv_ok && collinear_ok,
        format!(
            "capacity err {worst:e}, two-atom norm rel err {norm_err:e}, right-triangle rel err {curv_err:e}, collinear zero {collinear_ok}"
        ),
    )
}

fn covering_replay() -> Outcome {
    let start = Instant::now();
    let p = CounterexampleParams {
        k_max: 4,
        depth_schedule: DepthSchedule::Decreasing { top: 4 },
        norm_depths: vec![],
        ..CounterexampleParams::default()
    };
    let r = run_counterexample(&p, &RunContext::default()).unwrap();
    let names: Vec<String> = (0..=4)
        .map(|k| format!("total_mass_k{k}"))
        .chain(["dyadic_mass_bound", "generation_counting", "four_cube_covering"].map(String::from))
        .collect();
    let failed: Vec<&String> = names
        .iter()
        .filter(|n| !r.check_named(n).is_some_and(|c| c.passed))
        .collect();
    let (fast, time) = within(start, Duration::from_secs(120));
    verdict(
        failed.is_empty() && fast,
        format!(
            "dyadic constant {}, shifted constant {}, failed {failed:?}, {time}",
            r.summary_f64("dyadic_constant").unwrap_or(f64::NAN),
            r.summary_f64("shifted_constant").unwrap_or(f64::NAN)
        ),
    )
}

fn unboundedness() -> Outcome {
    let start = Instant::now();
    let p = CounterexampleParams {
        k_max: 0,
        depth_schedule: DepthSchedule::Constant { depth: 0 },
        norm_depths: (1..=6).collect(),
        ..CounterexampleParams::default()
    };
    let r = run_counterexample(&p, &RunContext::default()).unwrap();
    let increasing = r.check_named("norms_strictly_increase").is_some_and(|c| c.passed);
    let slope = r.summary_f64("norm_growth_exponent").unwrap_or(f64::NAN);
    let (fast, time) = within(start, Duration::from_secs(300));
    let norms: Vec<f64> = r
        .cases
        .iter()
        .filter(|c| c["kind"] == "norm")
        .map(|c| c["norm"].as_f64().unwrap())
        .collect();
    verdict(
        increasing && (0.35..=0.65).contains(&slope) && fast,
        format!("norms {norms:.4?}, exponent {slope:.4}, {time}"),
    )
}

fn marcinkiewicz() -> Outcome {
    let start = Instant::now();
    let p = MarcinkiewiczParams::default();
    let r = run_marcinkiewicz_check(&p, &RunContext::default()).unwrap();
    let fractions: Vec<f64> = r.cases.iter().map(|c| c["selected_fraction"].as_f64().unwrap()).collect();
    let sizes: Vec<u64> = r.cases.iter().map(|c| c["n"].as_u64().unwrap()).collect();
    let all = fractions.len() == 50 && fractions.iter().all(|&f| f >= 0.9);
    let (fast, time) = within(start, Duration::from_secs(60));
    verdict(
        all && fast,
        format!(
            "{} configurations of {}..{} discs, smallest kept fraction {}, {time}",
            fractions.len(),
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
            fractions.iter().cloned().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn superadditivity_floor() -> Outcome {
    let start = Instant::now();
    let p = SweepParams {
        layouts: vec![Layout::Line, Layout::Circle],
        lambdas: vec![2.0],
        counts: vec![2, 4, 8, 16, 32],
        inner: InnerKind::Segment { fill: 0.5 },
        ..SweepParams::default()
    };
    let r = run_superadditivity_sweep(&p, &RunContext::default()).unwrap();
    let ratio = |layout: &str, n: u64| {
        r.cases
            .iter()
            .find(|c| c["layout"] == layout && c["n"] == n)
            .and_then(|c| c["ratio"].as_f64())
            .unwrap_or(f64::NAN)
    };
    let line_floor = r.summary_f64("min_ratio_line_lambda_2").unwrap_or(f64::NAN);
    let circle_floor = r.summary_f64("min_ratio_circle_lambda_2").unwrap_or(f64::NAN);
    let line_ok = line_floor > 0.0 && ratio("line", 32) >= 0.8 * ratio("line", 16);
    let circle_ok = circle_floor > 0.0 && circle_floor >= 0.5 * line_floor && circle_floor <= 2.0 * line_floor;
    let (fast, time) = within(start, Duration::from_secs(600));
    verdict(
        line_ok && circle_ok && fast,
        format!(
            "line floor {line_floor:.4} (16: {:.4}, 32: {:.4}), circle floor {circle_floor:.4}, {time}",
            ratio("line", 16),
            ratio("line", 32)
        ),
    )
}

fn two_measure() -> Outcome {
    let start = Instant::now();
    let r = run_two_measure_sum(&TwoMeasureParams::default(), &RunContext::default()).unwrap();
    let trials = r.cases.iter().filter(|c| c["kind"] == "trial" && c.contains_key("norm_sum")).count();
    let max = r.summary_f64("max_norm").unwrap_or(f64::NAN);
    let identical = r.summary_f64("identical_norm").unwrap_or(f64::NAN);
    let far = r.summary_f64("far_norm").unwrap_or(f64::NAN);
    let (fast, time) = within(start, Duration::from_secs(600));
    verdict(
        trials == 100 && max < 10.0 && (identical - 2.0).abs() <= 1e-9 && far <= 1.01 && fast,
        format!("{trials} trials, max norm {max:.4}, identical {identical}, far {far:.6}, {time}"),
    )
}

fn independence() -> Outcome {
    let start = Instant::now();
    let r = run_independence_check(&IndependenceParams::default(), &RunContext::default()).unwrap();
    let counter: Vec<(f64, f64)> = r
        .cases
        .iter()
        .filter(|c| c["kind"] == "counterexample")
        .map(|c| (c["c0_hat"].as_f64().unwrap(), c["norm"].as_f64().unwrap()))
        .collect();
    let increasing = counter.len() >= 2 && counter.windows(2).all(|w| w[1].1 > w[0].1);
    let hi = counter.iter().map(|c| c.0).fold(0.0, f64::max);
    let lo = counter.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let spread = hi / lo - 1.0;
    let separated = r.summary_f64("separated_max_norm").unwrap_or(f64::NAN);
    let (fast, time) = within(start, Duration::from_secs(600));
    verdict(
        increasing && spread < 0.5 && separated <= 2.0 && r.notes.iter().any(|n| n.contains("scores")) && fast,
        format!(
            "counterexample norms {:.4?}, C0_hat varies by {:.1}%, separated max norm {separated:.4}, {time}",
            counter.iter().map(|c| c.1).collect::<Vec<_>>(),
            100.0 * spread
        ),
    )
}

fn small_configs() -> Vec<ExperimentParams> {
    vec![
        ExperimentParams::SuperadditivitySweep(SweepParams {
            counts: vec![2, 5],
            radius_spread: 0.5,
            ..SweepParams::default()
        }),
        ExperimentParams::MarcinkiewiczCheck(MarcinkiewiczParams {
            random_configs: 10,
            ..MarcinkiewiczParams::default()
        }),
        ExperimentParams::Counterexample(CounterexampleParams {
            k_max: 2,
            norm_depths: vec![1, 2, 3],
            ..CounterexampleParams::default()
        }),
        ExperimentParams::TwoMeasureSum(TwoMeasureParams {
            trials: 10,
            ..TwoMeasureParams::default()
        }),
        ExperimentParams::IndependenceCheck(IndependenceParams {
            separated_families: 2,
            counterexample_depths: vec![2, 3],
            ..IndependenceParams::default()
        }),
        ExperimentParams::Comparability(ComparabilityParams {
            discs: 3,
            ensemble: 2,
            refinements: vec![16, 32],
            tangency_gaps: vec![0.5],
            ..ComparabilityParams::default()
        }),
        ExperimentParams::CrossLemmas(CrossLemmaParams {
            grid_step: 1.0,
            radius_steps: 6,
            cuts: 8,
            families: 2,
            ..CrossLemmaParams::default()
        }),
    ]
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    for params in small_configs() {
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = RunConfig::with_defaults(params.name()).unwrap();
            cfg.experiment = params.clone();
            cfg.seed = 17;
            cfg.output_dir = dir.path().to_path_buf();
            let out = cli::run(&cfg).unwrap();
            bytes.push(std::fs::read(out.dir.join("cases.csv")).unwrap());
        }
        if bytes[0] != bytes[1] || bytes[0].is_empty() {
            differing.push(params.name());
        }
    }
    verdict(differing.is_empty(), format!("7 experiments rerun, differing: {differing:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("closed-form oracles", closed_forms),
        ("dyadic covering replay", covering_replay),
        ("Garnett norm growth", unboundedness),
        ("nine-tenths selection", marcinkiewicz),
        ("super-additivity floor", superadditivity_floor),
        ("two-measure sum", two_measure),
        ("independence scatter", independence),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failures += !o.ok as usize;
        println!("criterion {} {}: {} ({})", k + 1, name, if o.ok { "PASS" } else { "FAIL" }, o.detail);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
