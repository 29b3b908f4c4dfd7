use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{case, elapsed, CheckKind, ExperimentReport, PlotData, RunContext};
use crate::constructions::{line_configuration, InnerKind, Layout, LineConfiguration};
use crate::error::{Error, Result};

/// One explicitly given configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitLine {
    pub radii: Vec<f64>,
    pub gaps: Vec<f64>,
    pub lambda: f64,
    #[serde(default)]
    pub inner: InnerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarcinkiewiczParams {
    /// Dilation of each disc defining the cells `Q_i`.
    pub lambda0: f64,
    /// Selection threshold as a multiple of the measured average.
    pub selection_factor: f64,
    pub configs: Vec<ExplicitLine>,
    /// Additional seeded random configurations.
    pub random_configs: usize,
    pub min_discs: usize,
    pub max_discs: usize,
    pub lambda_range: [f64; 2],
    pub radius_range: [f64; 2],
}

impl Default for MarcinkiewiczParams {
    fn default() -> Self {
        MarcinkiewiczParams {
            lambda0: 1.5,
            selection_factor: 10.0,
            configs: Vec::new(),
            random_configs: 50,
            min_discs: 2,
            max_discs: 64,
            lambda_range: [1.1, 4.0],
            radius_range: [0.01, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarcinkiewiczStats {
    pub g: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Measured `Σ g_i γ_i / Σ γ_j`.
    pub a0: f64,
    pub selected: Vec<usize>,
    pub selected_fraction: f64,
}

/// Far-field sums `g_i = Σ_{j≠i} r_j γ_j / D(Q_j, Q_i)²` with
/// `Q_i = λ₀ D_i` and `D(Q_i, Q_j) = dist(Q_i, Q_j) + r_i + r_j`, followed by
/// the selection `g_i ≤ factor · A₀`.
pub fn marcinkiewicz_statistics(config: &LineConfiguration, lambda0: f64, factor: f64) -> Result<MarcinkiewiczStats> {
    if !(lambda0 >= 1.0) {
        return Err(Error::InvalidConfiguration(format!("lambda0 must be at least 1, got {lambda0}")));
    }
    if !(factor > 1.0) {
        return Err(Error::InvalidConfiguration("selection factor must exceed 1".into()));
    }
    let gammas = config
        .inner_sets
        .iter()
        .map(|s| {
            s.exact_capacity()
                .ok_or_else(|| Error::InvalidConfiguration("inner sets need a known capacity".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let discs = &config.discs;
    let g: Vec<f64> = (0..discs.len())
        .map(|i| {
            (0..discs.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let (a, b) = (&discs[i], &discs[j]);
                    let gap = (a.center.dist(b.center) - lambda0 * (a.radius + b.radius)).max(0.0);
                    let d = gap + a.radius + b.radius;
                    b.radius * gammas[j] / (d * d)
                })
                .sum()
        })
        .collect();
    let total: f64 = gammas.iter().sum();
    let a0 = g.iter().zip(&gammas).map(|(a, b)| a * b).sum::<f64>() / total;
    let selected: Vec<usize> = (0..g.len()).filter(|&i| g[i] <= factor * a0).collect();
    let selected_fraction = selected.iter().map(|&i| gammas[i]).sum::<f64>() / total;
    Ok(MarcinkiewiczStats {
        g,
        gammas,
        a0,
        selected,
        selected_fraction,
    })
}

fn random_config(rng: &mut ChaCha8Rng, p: &MarcinkiewiczParams) -> Result<(LineConfiguration, f64)> {
    let n = rng.gen_range(p.min_discs..=p.max_discs);
    let lambda = rng.gen_range(p.lambda_range[0]..=p.lambda_range[1]);
    let (lo, hi) = (p.radius_range[0].ln(), p.radius_range[1].ln());
    let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi).exp()).collect();
    let gaps: Vec<f64> = (0..n.saturating_sub(1))
        .map(|j| {
            let s = radii[j] + radii[j + 1];
            (lambda - 1.0) * s + rng.gen_range(0.01..3.0) * s
        })
        .collect();
    let inner = if rng.gen_bool(0.5) {
        InnerKind::Segment {
            fill: rng.gen_range(0.05..=1.0),
        }
    } else {
        InnerKind::SubDisc {
            fill: rng.gen_range(0.05..=1.0),
        }
    };
    Ok((line_configuration(&radii, &gaps, lambda, inner, Layout::Line)?, lambda))
}

pub fn run_marcinkiewicz_check(params: &MarcinkiewiczParams, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    let p = params;
    if p.min_discs == 0 || p.min_discs > p.max_discs {
        return Err(Error::InvalidConfiguration("disc count range is empty".into()));
    }
    if !(p.lambda_range[0] >= 1.0 && p.lambda_range[0] <= p.lambda_range[1]) {
        return Err(Error::InvalidConfiguration("lambda range must lie in [1, ∞)".into()));
    }
    if !(p.radius_range[0] > 0.0 && p.radius_range[0] <= p.radius_range[1]) {
        return Err(Error::InvalidConfiguration("radius range must be positive".into()));
    }
    let mut report = ExperimentReport::new("marcinkiewicz_check", ctx.seed, serde_json::to_value(params).unwrap());
    let mut configs: Vec<(String, LineConfiguration, f64)> = Vec::new();
    for (k, c) in p.configs.iter().enumerate() {
        let cfg = line_configuration(&c.radii, &c.gaps, c.lambda, c.inner, Layout::Line)?;
        configs.push((format!("explicit_{k}"), cfg, c.lambda));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for k in 0..p.random_configs {
        let (cfg, lambda) = random_config(&mut rng, p)?;
        configs.push((format!("random_{k}"), cfg, lambda));
    }
    let mut worst = f64::INFINITY;
    let mut plot = Vec::new();
    for (label, cfg, lambda) in &configs {
        let s = marcinkiewicz_statistics(cfg, p.lambda0, p.selection_factor)?;
        worst = worst.min(s.selected_fraction);
        let gmax = s.g.iter().cloned().fold(0.0, f64::max);
        report.cases.push(case![
            "config" => label,
            "n" => cfg.discs.len(),
            "lambda" => lambda,
            "lambda0" => p.lambda0,
            "a0" => s.a0,
            "g_max" => gmax,
            "selected" => s.selected.len(),
            "selected_fraction" => s.selected_fraction,
        ]);
        plot.push(vec![cfg.discs.len() as f64, s.selected_fraction]);
    }
    if !configs.is_empty() {
        report.stat("min_selected_fraction", worst);
        report.check(
            "selection_keeps_nine_tenths",
            CheckKind::Theorem,
            worst >= 0.9,
            format!("smallest capacity fraction kept by the selection: {worst}"),
        );
    }
    report.stat("configurations", configs.len());
    report.plots.push(PlotData {
        name: "selected_fraction".into(),
        columns: vec!["n".into(), "selected_fraction".into()],
        rows: plot,
    });
    report.runtime_seconds = elapsed(start);
    Ok(report)
}
